"""Design objectives: treatment-effect variance under the two response models.

Scenario I is the conditional auto-regressive (CAR) correlated-response model; the
variance of the weighted least-squares effect estimate depends on the design
only through ``sum_ij w_ij``, ``x'Wx`` and ``sum_i d_i x_i``. Scenario II is
the linear interference model, where the variance is the inverse of the
residual of ``x`` after projecting on ``[1, W1, Wx]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import cut_values
from .graph import Network

__all__ = [
    "ScenarioIParams",
    "VarianceReport",
    "InformationError",
    "RankDeficientError",
    "scenario1_denominator_terms",
    "var_scenario1",
    "var_scenario2",
    "projection_residual",
    "projection_residual_normal_eq",
    "nuisance_columns",
    "scenario1_variances",
    "scenario2_variances",
]


class InformationError(ValueError):
    """The Scenario I information term is not positive."""


class RankDeficientError(ValueError):
    """The design lies (numerically) in the span of the nuisance columns."""


@dataclass(frozen=True)
class ScenarioIParams:
    rho: float = 0.5
    sigma2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")


@dataclass(frozen=True)
class VarianceReport:
    scenario: str
    variance: float
    lower_bound: float
    terms: tuple[int, int, int]

    @property
    def gap(self) -> float:
        return 1.0 - self.lower_bound / self.variance

    def to_dict(self) -> dict:
        sum_w, cut, deg = self.terms
        return {
            "scenario": self.scenario,
            "variance": self.variance,
            "lower_bound": self.lower_bound,
            "gap": self.gap,
            "terms": {"sum_w": sum_w, "cut": cut, "deg_stat": deg},
        }


def scenario1_denominator_terms(net: Network, x) -> tuple[int, int, int]:
    """(sum_ij w_ij, x'Wx, sum_i d_i x_i)."""
    x = np.asarray(x)
    if x.shape[0] != net.n:
        raise ValueError("design length does not match network")
    return 2 * net.m, net.cut(x), net.degree_stat(x)


def var_scenario1(net: Network, x, p: ScenarioIParams = ScenarioIParams()) -> VarianceReport:
    terms = scenario1_denominator_terms(net, x)
    sum_w, cut, deg = terms
    if sum_w == 0:
        raise InformationError("information matrix not positive: network has no edges")
    info = sum_w - p.rho * cut - (1.0 - p.rho) * deg * deg / sum_w
    if info <= 0:
        raise InformationError(f"information matrix not positive (value {info:g})")
    return VarianceReport(
        scenario="I",
        variance=p.sigma2 / info,
        lower_bound=p.sigma2 / ((1.0 + p.rho) * sum_w),
        terms=terms,
    )


def projection_residual(cols: np.ndarray, x: np.ndarray, drop_tol: float = 1e-8) -> float:
    """``x' (I - P) x`` where P projects on the column span of ``cols``.

    Modified Gram-Schmidt; a column whose remainder after orthogonalisation
    is below ``drop_tol`` times its original norm is treated as dependent and
    dropped.
    """
    basis = []
    for j in range(cols.shape[1]):
        v = cols[:, j].astype(float)
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            continue
        for q in basis:
            v -= (q @ v) * q
        nv = np.linalg.norm(v)
        if nv <= drop_tol * norm0:
            continue
        basis.append(v / nv)
    r = x.astype(float)
    for q in basis:
        r -= (q @ r) * q
    return float(r @ r)


def projection_residual_normal_eq(cols: np.ndarray, x: np.ndarray) -> float:
    """Same quantity via the normal equations; full-rank ``cols`` only."""
    f = cols.astype(float)
    x = x.astype(float)
    coef = np.linalg.solve(f.T @ f, f.T @ x)
    return float(x @ x - x @ (f @ coef))


def nuisance_columns(net: Network, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    wx = net.adjacency @ x
    return np.column_stack([np.ones(net.n), net.degrees, wx])


def var_scenario2(net: Network, x, sigma2: float = 1.0) -> VarianceReport:
    if net.n < 4:
        raise ValueError("need n >= 4")
    x = np.asarray(x, dtype=np.int64)
    if x.shape[0] != net.n:
        raise ValueError("design length does not match network")
    q = projection_residual(nuisance_columns(net, x), x)
    if q <= 1e-9 * net.n:
        raise RankDeficientError("design is explained by [1, W1, Wx]; variance is infinite")
    return VarianceReport(
        scenario="II",
        variance=sigma2 / q,
        lower_bound=sigma2 / net.n,
        terms=scenario1_denominator_terms(net, x),
    )


def scenario1_variances(net: Network, X: np.ndarray, p: ScenarioIParams = ScenarioIParams()) -> np.ndarray:
    """Scenario I variance for every row of ``X``; +inf where not positive."""
    sum_w = 2 * net.m
    cut = cut_values(net, X).astype(float)
    deg = (X.astype(np.int64) @ net.degrees).astype(float)
    info = sum_w - p.rho * cut - (1.0 - p.rho) * deg * deg / sum_w
    out = np.full(X.shape[0], np.inf)
    ok = info > 0
    out[ok] = p.sigma2 / info[ok]
    return out


def scenario2_variances(net: Network, X: np.ndarray, sigma2: float = 1.0, drop_tol: float = 1e-8) -> np.ndarray:
    """Scenario II variance for every row of ``X``; +inf where rank deficient.

    Vectorised form of :func:`var_scenario2`: the shared columns ``1`` and
    ``W1`` are orthonormalised once, then each design's ``Wx`` column is
    orthogonalised against them with the same drop rule.
    """
    n = net.n
    basis = []
    for col in (np.ones(n), net.degrees.astype(float)):
        v = col.copy()
        norm0 = np.linalg.norm(v)
        for q in basis:
            v -= (q @ v) * q
        nv = np.linalg.norm(v)
        if nv > drop_tol * norm0:
            basis.append(v / nv)
    q0 = np.column_stack(basis)
    xs = X.T.astype(float)
    wx = np.asarray(net.adjacency @ X.T.astype(np.int64), dtype=float)
    norm_wx = np.linalg.norm(wx, axis=0)
    v = wx - q0 @ (q0.T @ wx)
    nv = np.linalg.norm(v, axis=0)
    r = xs - q0 @ (q0.T @ xs)
    keep = (norm_wx > 0) & (nv > drop_tol * norm_wx)
    u = np.zeros_like(v)
    u[:, keep] = v[:, keep] / nv[keep]
    r -= u * np.sum(u * r, axis=0)
    q = np.sum(r * r, axis=0)
    out = np.full(X.shape[0], np.inf)
    ok = q > 1e-9 * n
    out[ok] = sigma2 / q[ok]
    return out
