"""Undirected, unweighted networks and the ways to build them.

A :class:`Network` stores its edges as an ``(m, 2)`` integer array with
``i < j`` on every row, plus a CSR adjacency (sorted neighbour arrays) that
is built once and shared by every consumer.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Network",
    "DegenerateNetworkError",
    "EdgeListError",
    "from_edges",
    "generate_er",
    "load_edge_list",
    "write_edge_list",
    "pairs_network",
    "complete_graph",
]


class DegenerateNetworkError(ValueError):
    """Raised when a construction leaves too few vertices to be useful."""


class EdgeListError(ValueError):
    """Malformed edge-list input."""


@dataclass(frozen=True, eq=False)
class Network:
    n: int
    edges: np.ndarray = field(repr=False)
    degrees: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @property
    def density(self) -> float:
        return 2.0 * self.m / (self.n * (self.n - 1)) if self.n > 1 else 0.0

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency in CSR form (neighbour lists are sorted)."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.ones(rows.shape[0], dtype=np.int64)
        adj = sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        adj.sort_indices()
        return adj

    def neighbors(self, i: int) -> np.ndarray:
        adj = self.adjacency
        return adj.indices[adj.indptr[i]:adj.indptr[i + 1]]

    def dense(self) -> np.ndarray:
        w = np.zeros((self.n, self.n), dtype=np.int64)
        u, v = self.edges[:, 0], self.edges[:, 1]
        w[u, v] = 1
        w[v, u] = 1
        return w

    def cut(self, x: np.ndarray) -> int:
        """x'Wx, i.e. twice the signed sum over edges."""
        x = np.asarray(x)
        return 2 * int(np.dot(x[self.edges[:, 0]].astype(np.int64), x[self.edges[:, 1]]))

    def degree_stat(self, x: np.ndarray) -> int:
        """x'W1 = sum_i d_i x_i."""
        return int(np.dot(self.degrees, np.asarray(x, dtype=np.int64)))


def from_edges(n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> Network:
    """Build a network on vertices ``0..n-1`` from an edge collection.

    Edges are symmetrised and deduplicated. Self-loops and out-of-range ids
    raise ``ValueError``. Isolated vertices are kept; use the public
    generators/loaders when the no-isolated-vertex guarantee matters.
    """
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    arr = arr.reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValueError(f"edge endpoint outside 0..{n - 1}")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("self-loop in edge set")
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    uniq = np.unique(lo * n + hi) if arr.size else np.empty(0, dtype=np.int64)
    e = np.column_stack([uniq // n, uniq % n]).astype(np.int64)
    deg = np.bincount(e.ravel(), minlength=n).astype(np.int64)
    e.setflags(write=False)
    deg.setflags(write=False)
    return Network(n=int(n), edges=e, degrees=deg)


def _induced(net: Network, keep: np.ndarray) -> Network:
    """Subgraph on the vertices flagged in ``keep``, re-indexed densely."""
    new_id = np.full(net.n, -1, dtype=np.int64)
    new_id[keep] = np.arange(int(keep.sum()))
    e = net.edges
    mask = keep[e[:, 0]] & keep[e[:, 1]]
    return from_edges(int(keep.sum()), new_id[e[mask]])


def _prune(net: Network) -> Network:
    # Dropping the min-degree vertex can isolate its neighbours, so repeat
    # until the network is even-sized with no isolated vertex.
    while True:
        keep = net.degrees > 0
        if not keep.all():
            net = _induced(net, keep)
            continue
        if net.n % 2 == 1:
            keep = np.ones(net.n, dtype=bool)
            keep[int(np.argmin(net.degrees))] = False
            net = _induced(net, keep)
            continue
        return net


def generate_er(n_target: int, p: float, seed: int) -> Network:
    """Erdős–Rényi G(n, p), trimmed to an even number of non-isolated vertices.

    Each pair ``i < j`` is drawn as an independent Bernoulli(p), row by row
    from a single seeded stream. Isolated vertices are removed; if an odd
    number survive, the lowest-index vertex of minimum degree is removed as
    well (and the pruning repeats if that isolates anybody).
    """
    if n_target < 4:
        raise ValueError("n_target must be >= 4")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    chunks = []
    for i in range(n_target - 1):
        hit = np.flatnonzero(rng.random(n_target - i - 1) < p)
        if hit.size:
            chunks.append(np.column_stack([np.full(hit.size, i), hit + i + 1]))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    net = _prune(from_edges(n_target, edges))
    if net.n < 4:
        raise DegenerateNetworkError(
            f"only {net.n} vertices survive pruning (n_target={n_target}, p={p})"
        )
    return net


def load_edge_list(path: str | os.PathLike) -> Network:
    """Read a whitespace-separated edge list (SNAP ego-network style).

    Lines starting with ``#`` and blank lines are skipped. Vertex ids are
    compacted to ``0..n-1`` in order of first appearance.
    """
    ids: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise EdgeListError(f"{path}:{lineno}: expected two vertex ids, got {s!r}")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListError(f"{path}:{lineno}: non-integer vertex id in {s!r}") from None
            if a < 0 or b < 0:
                raise EdgeListError(f"{path}:{lineno}: negative vertex id in {s!r}")
            if a == b:
                raise EdgeListError(f"{path}:{lineno}: self-loop on vertex {a}")
            ia = ids.setdefault(a, len(ids))
            ib = ids.setdefault(b, len(ids))
            pairs.append((ia, ib))
    if not pairs:
        raise EdgeListError(f"{path}: no edges")
    return from_edges(len(ids), pairs)


def write_edge_list(net: Network, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in net.edges:
            fh.write(f"{a} {b}\n")


def pairs_network(k: int) -> Network:
    """``k`` disjoint edges ``(2i, 2i+1)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    i = np.arange(k)
    return from_edges(2 * k, np.column_stack([2 * i, 2 * i + 1]))


def complete_graph(n: int) -> Network:
    iu = np.triu_indices(n, k=1)
    return from_edges(n, np.column_stack(iu))
