"""Monte Carlo evaluation of rerandomized designs against random balanced ones."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .asymptotics import assumption_ratios, balance_probability, calibrate, reduce
from .design import (
    DEFAULT_T,
    Design,
    StoppingConfig,
    algorithm2,
    c_of_w,
    cut_values,
    derive_seed,
    draw_designs,
    pair_structure,
)
from .graph import DegenerateNetworkError, Network, generate_er
from .variance import (
    ScenarioIParams,
    scenario1_variances,
    scenario2_variances,
    var_scenario1,
    var_scenario2,
)

__all__ = [
    "EvaluationReport",
    "random_balanced_design",
    "random_balanced_designs",
    "percentile",
    "configure",
    "evaluate",
    "empirical_acceptance",
    "table1_study",
    "prob_figure_data",
    "convergence_study",
    "to_csv",
    "TABLE1_SETTINGS",
    "TABLE1_HEADER",
    "PROB_HEADER",
    "CONVERGENCE_HEADER",
]

TABLE1_HEADER = ["scenario", "n", "p", "percentile", "gap", "gap_median"]
PROB_HEADER = ["network", "n", "density", "prob_upper", "prob_actual"]
CONVERGENCE_HEADER = ["n", "p", "r1", "r2"]

TABLE1_SETTINGS = [
    (n, p, s)
    for s in ("I", "II")
    for n, ps in ((50, (0.1, 0.3)), (100, (0.1, 0.3)), (1000, (0.01, 0.1)), (2000, (0.01, 0.1)))
    for p in ps
]

# Child-seed slots for one evaluation run.
_REF, _ALG2, _BASELINE, _ACTUAL = 0, 1, 2, 3


@dataclass(frozen=True)
class EvaluationReport:
    scenario: str
    percentile: float
    gap: float
    gap_median: float
    v_opt: float
    v_median: float
    v_lb: float
    n_mc: int
    acceptance_rate: float
    mean_iterations: float
    balance_prob_upper: float
    balance_prob_actual_avg: float
    accepted: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def random_balanced_designs(n: int, rng: np.random.Generator, k: int) -> np.ndarray:
    """``k`` uniformly random designs with exactly ``n/2`` entries of each sign."""
    if n % 2:
        raise ValueError("random balanced designs need an even number of vertices")
    keys = rng.random((k, n))
    ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
    return np.where(ranks < n // 2, 1, -1).astype(np.int8)


def random_balanced_design(net: Network, seed) -> Design:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Design(random_balanced_designs(net.n, rng, 1)[0])


def percentile(v_opt: float, v: np.ndarray) -> float:
    """Share of baseline variances at or below ``v_opt``."""
    v = np.asarray(v)
    return float(np.count_nonzero(v <= v_opt)) / v.shape[0]


def configure(
    net: Network,
    scenario: str,
    seed: int,
    alpha: Optional[float] = None,
    T: int = DEFAULT_T,
    c: Optional[float] = None,
    delta1: Optional[float] = None,
    delta2: float = 1.0,
) -> StoppingConfig:
    """Stopping rule with thresholds from the run's reference pairing."""
    return calibrate(net, scenario, derive_seed(seed, _REF), alpha=alpha, T=T, c=c, delta1=delta1, delta2=delta2)


def _variances(net: Network, X: np.ndarray, scenario: str, params: ScenarioIParams) -> np.ndarray:
    if scenario == "I":
        return scenario1_variances(net, X, params)
    return scenario2_variances(net, X, sigma2=params.sigma2)


def evaluate(
    net: Network,
    scenario: str,
    cfg: StoppingConfig,
    params: ScenarioIParams = ScenarioIParams(),
    n_mc: int = 1000,
    seed: int = 0,
    batch: int = 64,
) -> EvaluationReport:
    """Percentile and optimality gaps of one rerandomized design.

    The proposed design comes from :func:`algorithm2`; the baseline is
    ``n_mc`` random balanced designs. Baseline designs with infinite
    variance stay in the denominator and rank above the proposed design.
    """
    if net.n % 2:
        raise ValueError("evaluation needs an even number of vertices")
    if n_mc < 100:
        raise ValueError("n_mc must be >= 100")
    res = algorithm2(net, cfg, derive_seed(seed, _ALG2), batch=batch)
    if scenario == "I":
        rep = var_scenario1(net, res.design.x, params)
    else:
        rep = var_scenario2(net, res.design.x, sigma2=params.sigma2)
    v_opt, v_lb = rep.variance, rep.lower_bound

    X = random_balanced_designs(net.n, np.random.default_rng(derive_seed(seed, _BASELINE)), n_mc)
    v = _variances(net, X, scenario, params)
    v_median = float(np.median(v))

    ps = pair_structure(net, derive_seed(seed, _REF))
    upper = balance_probability(net, c_of_w(net, ps))
    draws = draw_designs(net, np.random.default_rng(derive_seed(seed, _ACTUAL)), 100)
    stats = np.abs(draws.astype(np.int64) @ net.degrees)
    actual = float(np.mean([balance_probability(net, float(s)) for s in stats]))

    return EvaluationReport(
        scenario=scenario,
        percentile=percentile(v_opt, v),
        gap=1.0 - v_lb / v_opt,
        gap_median=1.0 - v_lb / v_median,
        v_opt=v_opt,
        v_median=v_median,
        v_lb=v_lb,
        n_mc=n_mc,
        acceptance_rate=(1.0 if res.accepted else 0.0) / res.iterations,
        mean_iterations=float(res.iterations),
        balance_prob_upper=upper,
        balance_prob_actual_avg=actual,
        accepted=res.accepted,
    )


def empirical_acceptance(net: Network, cfg: StoppingConfig, draws: int, seed: int, chunk: int = 256) -> float:
    """Fraction of Algorithm-1 draws that pass the scenario's cut rule."""
    rng = np.random.default_rng(seed)
    passed = 0
    done = 0
    while done < draws:
        k = min(chunk, draws - done)
        cuts = cut_values(net, draw_designs(net, rng, k))
        ok = cuts <= cfg.c if cfg.scenario == "I" else np.abs(cuts) <= cfg.c
        passed += int(ok.sum())
        done += k
    return passed / draws


def _map(fn, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _mean(vals: Iterable[float]) -> Optional[float]:
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


def table1_study(
    settings: Sequence[tuple[int, float, str]],
    reps: int = 10,
    seed: int = 0,
    n_mc: int = 1000,
    params: ScenarioIParams = ScenarioIParams(),
    alpha: Optional[dict] = None,
    T: int = DEFAULT_T,
    threads: int = 1,
) -> list[dict]:
    """Average Percentile, Gap and Gap_median over ``reps`` ER networks per setting.

    Cell ``(setting s, rep r)`` uses network seed ``derive_seed(seed, s, r, 0)``
    and evaluation seed ``derive_seed(seed, s, r, 1)``, so any cell can be
    re-run on its own. Failed cells are listed under ``errors``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    alpha = alpha or {}
    cells = [(s, r) for s in range(len(settings)) for r in range(reps)]

    def run(cell):
        s, r = cell
        n_target, p, scenario = settings[s]
        try:
            net = generate_er(n_target, p, derive_seed(seed, s, r, 0))
            eseed = derive_seed(seed, s, r, 1)
            cfg = configure(net, scenario, eseed, alpha=alpha.get(scenario), T=T)
            return evaluate(net, scenario, cfg, params, n_mc, eseed), None
        except (ValueError, np.linalg.LinAlgError) as exc:
            return None, f"setting {s} rep {r}: {exc}"

    results = _map(run, cells, threads)
    rows = []
    for s, (n_target, p, scenario) in enumerate(settings):
        reports = [results[s * reps + r] for r in range(reps)]
        ok = [rep for rep, _ in reports if rep is not None]
        rows.append({
            "scenario": scenario,
            "n": n_target,
            "p": p,
            "percentile": _mean(rep.percentile for rep in ok),
            "gap": _mean(rep.gap for rep in ok),
            "gap_median": _mean(rep.gap_median for rep in ok),
            "errors": [err for _, err in reports if err is not None],
            "reports": ok,
        })
    return rows


def prob_figure_data(nets: Sequence[Network], seed: int = 0, names: Optional[Sequence[str]] = None) -> list[dict]:
    """Upper-bound and actual-value balance probabilities per network."""
    if not nets:
        raise ValueError("need at least one network")
    names = list(names) if names is not None else [str(i) for i in range(len(nets))]
    rows = []
    for i, net in enumerate(nets):
        ps = pair_structure(net, derive_seed(seed, i, _REF))
        upper = balance_probability(net, c_of_w(net, ps))
        draws = draw_designs(net, np.random.default_rng(derive_seed(seed, i, _ACTUAL)), 100)
        stats = np.abs(draws.astype(np.int64) @ net.degrees)
        actual = float(np.mean([balance_probability(net, float(s)) for s in stats]))
        rows.append({
            "network": names[i],
            "n": net.n,
            "density": net.density,
            "prob_upper": upper,
            "prob_actual": actual,
        })
    return rows


def convergence_study(
    n_list: Sequence[int],
    p_list: Sequence[float],
    reps: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> list[dict]:
    """Averaged assumption ratios (r1, r2) per (n, p) over ``reps`` ER networks."""
    if not n_list or not p_list:
        raise ValueError("n_list and p_list must be non-empty")
    grid = [(n, p) for p in p_list for n in n_list]
    cells = [(g, r) for g in range(len(grid)) for r in range(reps)]

    def run(cell):
        g, r = cell
        n, p = grid[g]
        try:
            net = generate_er(n, p, derive_seed(seed, g, r, 0))
            rm = reduce(net, pair_structure(net, derive_seed(seed, g, r, 1)))
            return assumption_ratios(net, rm)
        except DegenerateNetworkError:
            return None

    results = _map(run, cells, threads)
    rows = []
    for g, (n, p) in enumerate(grid):
        vals = [results[g * reps + r] for r in range(reps)]
        vals = [v for v in vals if v is not None]
        rows.append({
            "n": n,
            "p": p,
            "r1": _mean(v[0] for v in vals),
            "r2": _mean(v[1] for v in vals),
        })
    return rows


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    return str(v)


def to_csv(rows: Iterable[dict], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row.get(col)) for col in header])
    return buf.getvalue()
