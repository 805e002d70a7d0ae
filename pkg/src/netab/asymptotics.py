"""Normal approximations for the cut and degree-balance statistics.

Under the rank pairing, ``x'Wx = z'W0z`` where ``z`` holds one independent
fair sign per pair and ``W0`` is the pair-contrast reduction of the
rank-ordered adjacency. The statistic is then approximately
``Normal(trace W0, 4 * sum_{i<j} w0_ij^2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from statistics import NormalDist
from typing import Optional, Union

import numpy as np

from .design import DEFAULT_ALPHA, DEFAULT_T, PairStructure, StoppingConfig, c_of_w, pair_structure
from .graph import DegenerateNetworkError, Network

__all__ = [
    "norm_cdf",
    "norm_ppf",
    "ReducedMatrix",
    "CutDistribution",
    "reduce",
    "cut_moments",
    "cut_mean_sd",
    "threshold_phi1",
    "threshold_phi2",
    "folded_normal_cdf",
    "balance_probability",
    "assumption_ratios",
    "degree_stat_sd",
    "power_iteration",
    "calibrate",
    "diagnostics",
]

_STD = NormalDist()
DENSE_EIG_LIMIT = 512


def norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def norm_ppf(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return _STD.inv_cdf(p)


def power_iteration(a: np.ndarray, tol: float = 1e-6, max_iter: int = 10_000) -> float:
    """Largest (algebraic) eigenvalue of a symmetric matrix.

    Iterates on ``a + s I`` with ``s`` the largest absolute row sum, which
    bounds the spectral radius, so the shifted spectrum is non-negative and
    its dominant eigenvalue is ``lambda_max + s``. Stops when the residual
    ``||Bv - theta v||`` falls below ``tol * theta``.
    """
    h = a.shape[0]
    s = float(np.abs(a).sum(axis=1).max())
    if s == 0.0:
        return 0.0
    b = a + s * np.eye(h)
    v = np.random.default_rng(0).standard_normal(h)
    v /= np.linalg.norm(v)
    theta = 0.0
    for _ in range(max_iter):
        w = b @ v
        theta = float(v @ w)
        if np.linalg.norm(w - theta * v) <= tol * theta:
            break
        v = w / np.linalg.norm(w)
    else:
        warnings.warn("power iteration hit the iteration cap before converging", RuntimeWarning)
    return theta - s


def _reduced_index(net: Network, ps: PairStructure):
    h = ps.pairs.shape[0]
    pair_of = np.full(net.n, -1, dtype=np.int64)
    sign = np.zeros(net.n, dtype=np.int64)
    pair_of[ps.pairs[:, 0]] = np.arange(h)
    pair_of[ps.pairs[:, 1]] = np.arange(h)
    sign[ps.pairs[:, 0]] = 1
    sign[ps.pairs[:, 1]] = -1
    e = net.edges
    keep = (pair_of[e[:, 0]] >= 0) & (pair_of[e[:, 1]] >= 0)
    e = e[keep]
    return h, pair_of[e[:, 0]], pair_of[e[:, 1]], sign[e[:, 0]] * sign[e[:, 1]]


@dataclass(frozen=True, eq=False)
class ReducedMatrix:
    w0: np.ndarray
    trace: float
    ssq_offdiag: float

    @property
    def size(self) -> int:
        return int(self.w0.shape[0])

    @cached_property
    def lambda_max_offdiag(self) -> float:
        a = self.w0.astype(float)
        np.fill_diagonal(a, 0.0)
        if self.size == 0:
            return 0.0
        if self.size <= DENSE_EIG_LIMIT:
            return float(np.linalg.eigvalsh(a)[-1])
        return power_iteration(a)


@dataclass(frozen=True)
class CutDistribution:
    mean: float
    sd: float


def reduce(net: Network, ps: PairStructure) -> ReducedMatrix:
    """Pair-contrast matrix of the rank-ordered adjacency (singleton dropped).

    ``w0[i, j] = sum of s(a) s(b)`` over edges ``a-b`` with ``a`` in pair ``i``
    and ``b`` in pair ``j``, where ``s`` is +1 for the lower-ranked member of a
    pair and -1 for the higher one.
    """
    h, pu, pv, s = _reduced_index(net, ps)
    flat = np.bincount(pu * h + pv, weights=s, minlength=h * h)
    flat += np.bincount(pv * h + pu, weights=s, minlength=h * h)
    w0 = flat.reshape(h, h).astype(np.int64)
    diag = np.diagonal(w0)
    trace = float(diag.sum())
    ssq = float((np.sum(w0 * w0) - np.sum(diag * diag)) / 2)
    return ReducedMatrix(w0=w0, trace=trace, ssq_offdiag=ssq)


def cut_moments(net: Network, ps: PairStructure) -> tuple[float, float]:
    """(trace W0, sum_{i<j} w0_ij^2) without building the dense W0."""
    h, pu, pv, s = _reduced_index(net, ps)
    same = pu == pv
    trace = float(2 * s[same].sum())
    a = np.minimum(pu[~same], pv[~same])
    b = np.maximum(pu[~same], pv[~same])
    keys = a * h + b
    if h * h <= 1 << 24:
        vals = np.bincount(keys, weights=s[~same], minlength=h * h)
    else:
        _, inv = np.unique(keys, return_inverse=True)
        vals = np.bincount(inv, weights=s[~same])
    return trace, float(vals @ vals)


def cut_mean_sd(rm: Union[ReducedMatrix, CutDistribution]) -> CutDistribution:
    if isinstance(rm, CutDistribution):
        return rm
    return CutDistribution(mean=rm.trace, sd=2.0 * math.sqrt(rm.ssq_offdiag))


def threshold_phi1(rm, alpha: float) -> float:
    """Lower alpha-quantile of the approximate x'Wx distribution."""
    dist = cut_mean_sd(rm)
    if dist.sd == 0.0:
        return dist.mean
    return dist.mean + dist.sd * norm_ppf(alpha)


def folded_normal_cdf(c: float, mu: float, sigma: float) -> float:
    if c < 0:
        return 0.0
    return norm_cdf((c - mu) / sigma) - norm_cdf((-c - mu) / sigma)


def threshold_phi2(rm, alpha: float, tol: float = 1e-9) -> float:
    """alpha-quantile of |Y|, Y ~ Normal(mean, sd^2), by bisection."""
    dist = cut_mean_sd(rm)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    mu, sigma = dist.mean, dist.sd
    if sigma == 0.0:
        return abs(mu)
    lo, hi = 0.0, abs(mu) + 10.0 * sigma
    while folded_normal_cdf(hi, mu, sigma) < alpha:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if folded_normal_cdf(mid, mu, sigma) < alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def degree_stat_sd(net: Network) -> float:
    d = net.degrees.astype(float)
    return math.sqrt(float(np.sum((d - d.mean()) ** 2)))


def balance_probability(net: Network, c: float) -> float:
    """Approximate P(|sum d_i x_i| <= c) for a balanced random design.

    Regular networks have zero degree spread; we return 1 for them.
    """
    if c < 0:
        raise ValueError("c must be non-negative")
    sd = degree_stat_sd(net)
    if sd == 0.0:
        return 1.0
    return 2.0 * norm_cdf(c / sd) - 1.0


def assumption_ratios(net: Network, rm: ReducedMatrix) -> tuple[float, float]:
    """(min degree / sum_{i!=j} w0^2, lambda_max(W0 off-diag) / sqrt(same))."""
    if rm.ssq_offdiag == 0:
        raise DegenerateNetworkError("W0 has no off-diagonal mass; ratios undefined")
    total = 2.0 * rm.ssq_offdiag
    r1 = float(net.degrees.min()) / total
    r2 = rm.lambda_max_offdiag / math.sqrt(total)
    return r1, r2


def calibrate(
    net: Network,
    scenario: str,
    seed,
    alpha: Optional[float] = None,
    T: int = DEFAULT_T,
    c: Optional[float] = None,
    delta1: Optional[float] = None,
    delta2: float = 1.0,
) -> StoppingConfig:
    """Stopping configuration from a reference pairing drawn from ``seed``.

    ``c`` defaults to the alpha-quantile threshold for the scenario and
    ``delta1`` to c(W); explicit values override.
    """
    alpha = DEFAULT_ALPHA[scenario] if alpha is None else alpha
    ps = pair_structure(net, seed)
    if c is None:
        rm = reduce(net, ps)
        c = threshold_phi1(rm, alpha) if scenario == "I" else threshold_phi2(rm, alpha)
    if delta1 is None:
        delta1 = float(c_of_w(net, ps))
    return StoppingConfig(scenario=scenario, c=float(c), delta1=delta1, delta2=delta2, T=T, alpha=alpha)


def diagnostics(net: Network, seed, alpha1: float = DEFAULT_ALPHA["I"], alpha2: float = DEFAULT_ALPHA["II"]) -> dict:
    """Diagnostics report for one network and reference pairing."""
    ps = pair_structure(net, seed)
    rm = reduce(net, ps)
    dist = cut_mean_sd(rm)
    cw = c_of_w(net, ps)
    sd_deg = degree_stat_sd(net)
    try:
        r1, r2 = assumption_ratios(net, rm)
    except DegenerateNetworkError:
        r1 = r2 = None
    return {
        "trace_w0": rm.trace,
        "ssq_offdiag": rm.ssq_offdiag,
        "sd": dist.sd,
        "threshold_phi1": threshold_phi1(rm, alpha1),
        "threshold_phi2": threshold_phi2(rm, alpha2),
        "r1": r1,
        "r2": r2,
        "degree_stat_sd": sd_deg,
        "balance_prob_at_cW": balance_probability(net, cw),
        "degenerate": bool(sd_deg == 0.0 or rm.ssq_offdiag == 0.0),
    }
