"""Degree-rank pairing randomization and rerandomization against cut thresholds.

Randomness layout for one draw on ``n`` vertices is a single block of
``n + ceil(n/2)`` uniforms: ``n`` rank perturbations, then one coin per pair
in rank order, then the singleton coin when ``n`` is odd. Blocks of ``k``
draws come from ``rng.random((k, L))``, which consumes the stream exactly as
``k`` sequential draws do, so batched and sequential rerandomization agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .graph import Network

__all__ = [
    "Design",
    "PairStructure",
    "StoppingConfig",
    "RerandomizationResult",
    "pair_structure",
    "algorithm1",
    "draw_designs",
    "c_of_w",
    "g_indicator",
    "phi1",
    "phi2",
    "cut_values",
    "algorithm2",
    "DEFAULT_T",
    "DEFAULT_ALPHA",
    "derive_seed",
]

Scenario = Literal["I", "II"]

DEFAULT_T = 5000
DEFAULT_ALPHA = {"I": 0.005, "II": 0.1}


@dataclass(frozen=True, eq=False)
class Design:
    """A +/-1 allocation aligned with the network's vertex order."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.int8)
        if x.ndim != 1 or not np.all(np.abs(x) == 1):
            raise ValueError("design entries must be -1 or +1")
        object.__setattr__(self, "x", x)

    def __array__(self, dtype=None, copy=None):
        return self.x if dtype is None else self.x.astype(dtype)

    def __len__(self):
        return self.x.shape[0]


@dataclass(frozen=True, eq=False)
class PairStructure:
    order: np.ndarray  # vertices by ascending perturbed degree
    pairs: np.ndarray  # (h, 2): [lower-rank vertex, higher-rank vertex]
    singleton: Optional[int]

    @property
    def n(self) -> int:
        return int(self.order.shape[0])

    @property
    def ranks(self) -> np.ndarray:
        """1-based rank of every vertex."""
        r = np.empty_like(self.order)
        r[self.order] = np.arange(1, self.n + 1)
        return r


@dataclass(frozen=True)
class StoppingConfig:
    scenario: Scenario
    c: float
    delta1: float = np.inf
    delta2: float = 1.0
    T: int = DEFAULT_T
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.scenario not in ("I", "II"):
            raise ValueError(f"scenario must be 'I' or 'II', got {self.scenario!r}")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.delta1 < 0 or self.delta2 < 0:
            raise ValueError("delta1 and delta2 must be non-negative")


@dataclass(frozen=True, eq=False)
class RerandomizationResult:
    design: Design
    iterations: int
    accepted: bool
    objective: int
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        x = self.design.x
        return {
            "n": int(x.shape[0]),
            "x": [int(v) for v in x],
            "seed": self.seed,
            "iterations": int(self.iterations),
            "accepted": bool(self.accepted),
            "objective": int(self.objective),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _block_len(n: int) -> int:
    return n + n // 2 + n % 2


def _orders(degrees: np.ndarray, u: np.ndarray) -> np.ndarray:
    # d_i + u_i with u in [0, 1): integer degrees keep their block order and
    # the uniforms break ties at random.
    return np.argsort(degrees + u, axis=-1, kind="stable")


def _split(order: np.ndarray):
    """Rank order -> (low, high, singleton) along the last axis."""
    n = order.shape[-1]
    if n % 2 == 0:
        return order[..., 0::2], order[..., 1::2], None
    return order[..., 1::2], order[..., 2::2], order[..., 0]


def pair_structure(net: Network, seed) -> PairStructure:
    """Rank vertices by perturbed degree and pair consecutive ranks.

    Even ``n`` pairs ranks (1,2), (3,4), ...; odd ``n`` leaves rank 1 alone
    and pairs (2,3), (4,5), .... Uses the same draw as :func:`algorithm1`, so
    ``pair_structure(net, s)`` is the pairing behind ``algorithm1(net, s)``.
    """
    if net.n < 2:
        raise ValueError("need at least two vertices")
    block = _rng(seed).random(_block_len(net.n))
    order = _orders(net.degrees, block[: net.n])
    low, high, single = _split(order)
    return PairStructure(
        order=order,
        pairs=np.column_stack([low, high]),
        singleton=None if single is None else int(single),
    )


def draw_designs(net: Network, rng: np.random.Generator, k: int, return_orders: bool = False):
    """``k`` independent Algorithm-1 designs as a ``(k, n)`` int8 array."""
    n = net.n
    if n < 2:
        raise ValueError("need at least two vertices")
    block = rng.random((k, _block_len(n)))
    orders = _orders(net.degrees[None, :], block[:, :n])
    low, high, single = _split(orders)
    h = low.shape[1]
    z = np.where(block[:, n:n + h] < 0.5, 1, -1).astype(np.int8)
    x = np.empty((k, n), dtype=np.int8)
    rows = np.arange(k)[:, None]
    x[rows, low] = z
    x[rows, high] = -z
    if single is not None:
        x[np.arange(k), single] = np.where(block[:, -1] < 0.5, 1, -1)
    return (x, orders) if return_orders else x


def algorithm1(net: Network, seed) -> Design:
    """One degree-balanced random design.

    Within each rank pair one vertex gets +1 and the other -1 by a fair coin;
    an odd singleton gets a fair +/-1. Hence ``|sum x| <= 1`` and
    ``|sum d_i x_i| <= c(W)`` for every draw.
    """
    return Design(draw_designs(net, _rng(seed), 1)[0])


def c_of_w(net: Network, ps: PairStructure) -> int:
    """Upper bound on ``|sum d_i x_i|`` guaranteed by the rank pairing.

    Sum of within-pair degree gaps, plus the singleton's degree for odd n.
    """
    d = net.degrees
    gaps = d[ps.pairs[:, 1]] - d[ps.pairs[:, 0]]
    total = int(gaps.sum())
    if ps.singleton is not None:
        total += int(d[ps.singleton])
    return total


def g_indicator(x, net: Network, delta1: float, delta2: float) -> int:
    x = np.asarray(x, dtype=np.int64)
    if x.shape[0] != net.n:
        raise ValueError("design length does not match network")
    return int(abs(net.degree_stat(x)) <= delta1 and abs(int(x.sum())) <= delta2)


def phi1(x, net: Network, c: float) -> int:
    return int(net.cut(x) <= c)


def phi2(x, net: Network, c: float) -> int:
    return int(abs(net.cut(x)) <= c)


def cut_values(net: Network, X: np.ndarray) -> np.ndarray:
    """x'Wx for every row of ``X``."""
    e = net.edges
    X = np.asarray(X, dtype=np.int8)
    prod = X[:, e[:, 0]] * X[:, e[:, 1]]
    return 2 * prod.sum(axis=1, dtype=np.int64)


def algorithm2(net: Network, cfg: StoppingConfig, seed, batch: int = 1) -> RerandomizationResult:
    """Rerandomize Algorithm-1 designs until the scenario's cut rule passes.

    Returns the first passing draw, or after ``cfg.T`` failures the draw with
    the smallest ``x'Wx`` (Scenario I) or ``|x'Wx|`` (Scenario II), earliest
    on ties. ``batch > 1`` evaluates draws in blocks; the result is identical
    to the sequential loop.
    """
    rng = _rng(seed)
    best_x, best_score, best_cut = None, None, None
    done = 0
    while done < cfg.T:
        k = min(batch, cfg.T - done)
        X = draw_designs(net, rng, k)
        cuts = cut_values(net, X)
        if cfg.scenario == "I":
            ok = cuts <= cfg.c
            score = cuts
        else:
            ok = np.abs(cuts) <= cfg.c
            score = np.abs(cuts)
        hit = np.flatnonzero(ok)
        if hit.size:
            j = int(hit[0])
            return RerandomizationResult(
                Design(X[j]), done + j + 1, True, int(cuts[j]),
                seed=seed if isinstance(seed, int) else None,
            )
        j = int(np.argmin(score))
        if best_score is None or score[j] < best_score:
            best_x, best_score, best_cut = X[j].copy(), score[j], int(cuts[j])
        done += k
    return RerandomizationResult(
        Design(best_x), cfg.T, False, best_cut,
        seed=seed if isinstance(seed, int) else None,
    )
