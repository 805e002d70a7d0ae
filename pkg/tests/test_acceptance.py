"""Acceptance suite: one test, and one PASS/FAIL line, per criterion.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
happen; they are also collected in the terminal summary.
"""

import itertools
import math
import time
import warnings

import numpy as np
import pytest
from scipy import stats

from conftest import random_network
from netab.asymptotics import (
    balance_probability,
    cut_moments,
    degree_stat_sd,
    reduce,
)
from netab.design import (
    PairStructure,
    StoppingConfig,
    algorithm2,
    c_of_w,
    cut_values,
    draw_designs,
    pair_structure,
)
from netab.evaluation import (
    configure,
    convergence_study,
    empirical_acceptance,
    prob_figure_data,
    random_balanced_designs,
    table1_study,
)
from netab.graph import generate_er, pairs_network
from netab.variance import ScenarioIParams, var_scenario1, var_scenario2


def _pairing_from_order(order):
    n = order.shape[0]
    if n % 2 == 0:
        return PairStructure(order=order, pairs=np.column_stack([order[0::2], order[1::2]]), singleton=None)
    return PairStructure(order=order, pairs=np.column_stack([order[1::2], order[2::2]]), singleton=int(order[0]))


def test_c1_degree_balance_exact(verdict):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    cases = violations = 0
    while cases < 10_000:
        net = random_network(rng, int(rng.integers(3, 65)))
        X, orders = draw_designs(net, rng, 10, return_orders=True)
        for x, order in zip(X, orders):
            cw = c_of_w(net, _pairing_from_order(order))
            xi = x.astype(np.int64)
            if abs(int(xi.sum())) > 1 or abs(int(xi @ net.degrees)) > cw:
                violations += 1
            cases += 1
    dt = time.perf_counter() - t0
    ok = verdict("C1 balance bounds", violations == 0 and dt < 30,
                 f"{cases} cases, {violations} violations, {dt:.1f}s (limit 30s)")
    assert ok


def _enumerate_cuts(net, ps):
    h = ps.pairs.shape[0]
    singles = [None] if ps.singleton is None else [1, -1]
    cuts = []
    for z in itertools.product((1, -1), repeat=h):
        for s in singles:
            x = np.zeros(net.n, dtype=np.int64)
            x[ps.pairs[:, 0]] = z
            x[ps.pairs[:, 1]] = -np.asarray(z)
            if s is not None:
                x[ps.singleton] = s
            cuts.append(net.cut(x))
    return np.asarray(cuts, dtype=float)


def test_c2_w0_enumeration(verdict):
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    worst = 0.0
    odd_ok = True
    for k in range(50):
        net = random_network(rng, int(rng.choice([6, 8, 10, 12])))
        ps = pair_structure(net, k)
        rm = reduce(net, ps)
        cuts = _enumerate_cuts(net, ps)
        var_w0 = 4.0 * rm.ssq_offdiag
        worst = max(worst,
                    abs(cuts.mean() - rm.trace) / max(abs(rm.trace), 1.0),
                    abs(cuts.var() - var_w0) / max(var_w0, 1.0))
    for k in range(15):
        net = random_network(rng, int(rng.choice([7, 9, 11])))
        ps = pair_structure(net, 1000 + k)
        cuts = _enumerate_cuts(net, ps)
        odd_ok &= cuts.sum() == reduce(net, ps).trace * cuts.size
    dt = time.perf_counter() - t0
    ok = verdict("C2 W0 moments", worst < 1e-12 and odd_ok and dt < 10,
                 f"max rel err {worst:.1e}, odd means exact={odd_ok}, {dt:.1f}s (limit 10s)")
    assert ok


@pytest.mark.slow
def test_c3_normality(verdict):
    t0 = time.perf_counter()
    net = generate_er(2000, 0.05, 303)
    rng = np.random.default_rng(304)
    z = []
    for _ in range(20):
        X, orders = draw_designs(net, rng, 500, return_orders=True)
        cuts = cut_values(net, X)
        for cut, order in zip(cuts, orders):
            trace, ssq = cut_moments(net, _pairing_from_order(order))
            z.append((cut - trace) / (2.0 * math.sqrt(ssq)))
    ks_cut = stats.kstest(z, "norm").statistic

    B = random_balanced_designs(net.n, np.random.default_rng(305), 10_000)
    s = (B.astype(np.int64) @ net.degrees) / degree_stat_sd(net)
    ks_deg = stats.kstest(s, "norm").statistic
    dt = time.perf_counter() - t0
    ok = verdict("C3 normality", ks_cut < 0.03 and ks_deg < 0.03 and dt < 300,
                 f"KS cut {ks_cut:.4f}, KS degree stat {ks_deg:.4f} (limit 0.03), {dt:.0f}s (limit 300s)")
    assert ok


def test_c4_balance_probability_calibration(verdict):
    worst = 0.0
    for k in range(5):
        net = generate_er(1000, 0.1, 400 + k)
        B = random_balanced_designs(net.n, np.random.default_rng(410 + k), 20_000)
        stat = np.abs(B.astype(np.int64) @ net.degrees)
        for q in (25, 50, 75):
            c = float(np.percentile(stat, q))
            freq = float(np.mean(stat <= c))
            worst = max(worst, abs(freq - balance_probability(net, c)))
    ok = verdict("C4 balance probability", worst <= 0.02, f"max |MC - formula| {worst:.4f} (limit 0.02)")
    assert ok


@pytest.mark.slow
def test_c5_table1_trends(verdict):
    t0 = time.perf_counter()
    small = [(n, p, "I") for n in (50, 100) for p in (0.1, 0.3)]
    lines = []
    ok = True
    for rho in (0.1, 0.5, 0.9):
        rows = table1_study(small, reps=10, seed=500, n_mc=1000, params=ScenarioIParams(rho=rho))
        for r in rows:
            good = not r["errors"] and r["percentile"] <= 0.01 and r["gap"] < r["gap_median"]
            ok &= good
            lines.append(f"I rho={rho} n={r['n']} p={r['p']}: pct {r['percentile']:.4f} "
                         f"gap {r['gap']:.4f} < {r['gap_median']:.4f}")
    rows = table1_study([(1000, 0.01, "II"), (1000, 0.1, "II")], reps=10, seed=501, n_mc=1000)
    for r in rows:
        good = not r["errors"] and r["gap"] <= 0.001 and r["percentile"] <= 0.02
        ok &= good
        lines.append(f"II n={r['n']} p={r['p']}: pct {r['percentile']:.4f} gap {r['gap']:.2e}")
    dt = time.perf_counter() - t0
    ok &= dt < 900
    for line in lines:
        print("   ", line)
    ok = verdict("C5 evaluation-study trends", ok, f"{len(lines)} settings, {dt:.0f}s (limit 900s)")
    assert ok


def test_c6_probability_magnitudes(verdict):
    reps = 5
    nets, keys = [], []
    for n in (1000, 2000):
        for p in (0.01, 0.1):
            for r in range(reps):
                nets.append(generate_er(n, p, 600 + 10 * len(keys) + r))
            keys.append((n, p))
    rows = prob_figure_data(nets, seed=601)
    means, worst = [], []
    for i, key in enumerate(keys):
        block = rows[i * reps:(i + 1) * reps]
        means.append(float(np.mean([r["prob_upper"] for r in block])))
        worst.append(max(r["prob_upper"] for r in block))
    strict = all(r["prob_actual"] < r["prob_upper"] for r in rows)
    ok = all(m <= 0.1 for m in means) and strict
    detail = ", ".join(f"n={n} p={p}: mean {m:.3f} (max {w:.3f})" for (n, p), m, w in zip(keys, means, worst))
    ok = verdict("C6 probability magnitudes", ok, f"{detail}; actual < upper on all={strict}")
    assert ok


def test_c7_acceptance_rate(verdict):
    net = generate_er(1000, 0.1, 700)
    parts = []
    ok = True
    for scenario, alpha in (("I", 0.005), ("II", 0.1)):
        cfg = configure(net, scenario, 701, alpha=alpha)
        rate = empirical_acceptance(net, cfg, 20_000, seed=702)
        ok &= alpha / 2 <= rate <= 2 * alpha
        parts.append(f"{scenario}: {rate:.4f} in [{alpha / 2:g}, {2 * alpha:g}]")
    ok = verdict("C7 acceptance rate", ok, ", ".join(parts))
    assert ok


def _inversions(vals):
    return sum(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.slow
def test_c8_convergence(verdict):
    ns, ps = [100, 500, 1000, 2000], [0.01, 0.1, 0.3]
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="power iteration hit")
        rows = convergence_study(ns, ps, reps=5, seed=800)
    ok = True
    parts = []
    for p in ps:
        curve = [r for r in rows if r["p"] == p]
        r1 = [r["r1"] for r in curve]
        r2 = [r["r2"] for r in curve]
        if None in r1 or None in r2:
            ok = False
            parts.append(f"p={p}: degenerate cell")
            continue
        i1, i2 = _inversions(r1), _inversions(r2)
        ok &= i1 <= 1 and i2 <= 1
        parts.append(f"p={p}: inversions r1={i1} r2={i2}")
    ok = verdict("C8 convergence", ok, "; ".join(parts) + " (limit 1 each)")
    assert ok


def test_c9_attainment(verdict):
    net = pairs_network(12)
    res = algorithm2(net, StoppingConfig(scenario="I", c=-24), seed=900)
    g1 = var_scenario1(net, res.design.x).gap if res.accepted else math.inf

    # Six split pairs, three (+,+) pairs, three (-,-) pairs: sum x = sum d x = x'Wx = 0.
    x = np.empty(24, dtype=np.int64)
    for i in range(12):
        a, b = ((1, -1) if i < 6 else (1, 1) if i < 9 else (-1, -1))
        x[2 * i], x[2 * i + 1] = a, b
    rep2 = var_scenario2(net, x)
    ok = abs(g1) <= 1e-12 and abs(rep2.gap) <= 1e-12
    ok = verdict("C9 attainment", ok,
                 f"Scenario I gap {g1:.1e} after {res.iterations} draws, Scenario II gap {rep2.gap:.1e}")
    assert ok
