"""Crystal lattices given as finite quotient graphs with Z^d translation labels.

An oriented edge ``e`` of the quotient runs from vertex class ``o(e)`` to
``t(e)``; its lift starting at ``(o(e), sigma)`` ends at
``(t(e), sigma + shift(e))``. Functions on the covering graph are dicts keyed
by ``(vertex_class, shift_tuple)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import BudgetExceeded, ConvergenceError

__all__ = [
    "Edge",
    "QuotientGraph",
    "PeriodicRealization",
    "integer_lattice",
    "hexagonal",
    "HEXAGONAL_BASIS",
    "load_quotient_graph",
    "dump_quotient_graph",
    "invariant_measure",
    "check_detailed_balance",
    "harmonic_realization",
    "harmonic_residual",
    "limit_covariance",
    "cochain_from_potential",
    "crystal_walk_apply",
    "sample_displacements",
    "monte_carlo_covariance",
]

HEXAGONAL_BASIS = np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]])


@dataclass(frozen=True)
class Edge:
    origin: int
    terminus: int
    p: float
    shift: tuple


@dataclass(frozen=True, eq=False)
class QuotientGraph:
    """Finite graph with transition probabilities and translation labels.

    ``inverse[i]`` is the index of the reversed edge; when omitted it is
    inferred by pairing each edge with an unused edge ``(t, o, -shift)``.
    """

    n_vertices: int
    edges: tuple
    inverse: tuple | None = None

    def __post_init__(self):
        edges = tuple(Edge(int(e.origin), int(e.terminus), float(e.p),
                           tuple(int(s) for s in e.shift)) for e in self.edges)
        if not edges:
            raise ValueError("graph has no edges")
        dims = {len(e.shift) for e in edges}
        if len(dims) != 1:
            raise ValueError("all shifts must have the same length")
        for e in edges:
            if not (0 <= e.origin < self.n_vertices and 0 <= e.terminus < self.n_vertices):
                raise ValueError(f"edge {e} references a missing vertex")
            if e.p <= 0:
                raise ValueError("transition probabilities must be positive")
        inverse = self.inverse if self.inverse is not None else _pair_inverses(edges)
        inverse = tuple(int(i) for i in inverse)
        for i, j in enumerate(inverse):
            a, b = edges[i], edges[j]
            if inverse[j] != i:
                raise ValueError("inverse pairing is not an involution")
            if (b.origin, b.terminus) != (a.terminus, a.origin) or \
                    any(x != -y for x, y in zip(a.shift, b.shift)):
                raise ValueError(f"edge {j} is not the reverse of edge {i}")
        for x in range(self.n_vertices):
            total = math.fsum(e.p for e in edges if e.origin == x)
            if abs(total - 1.0) > 1e-15:
                raise ValueError(f"probabilities out of vertex {x} sum to {total!r}")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "inverse", inverse)

    @property
    def dim(self) -> int:
        return len(self.edges[0].shift)

    def out_edges(self, x: int) -> list:
        return [i for i, e in enumerate(self.edges) if e.origin == x]

    def transition_matrix(self) -> np.ndarray:
        P = np.zeros((self.n_vertices, self.n_vertices))
        for e in self.edges:
            P[e.origin, e.terminus] += e.p
        return P


def _pair_inverses(edges) -> tuple:
    inverse = [-1] * len(edges)
    for i, e in enumerate(edges):
        if inverse[i] >= 0:
            continue
        want = (e.terminus, e.origin, tuple(-s for s in e.shift))
        match = None
        for j, f in enumerate(edges):
            if j != i and inverse[j] < 0 and (f.origin, f.terminus, f.shift) == want:
                match = j
                break
        if match is None and (e.origin, e.terminus, e.shift) == want:
            match = i
        if match is None:
            raise ValueError(f"edge {i} {e} has no reverse edge")
        inverse[i] = match
        inverse[match] = i
    return tuple(inverse)


@dataclass(frozen=True, eq=False)
class PeriodicRealization:
    """Fundamental-domain positions; the lift is ``Phi(v, sigma) = positions[v] + sigma``."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def __call__(self, vertex: int, sigma) -> np.ndarray:
        return self.positions[vertex] + np.asarray(sigma, dtype=float)

    def edge_vectors(self, G: QuotientGraph) -> np.ndarray:
        """``v_e = Phi(t(e)) - Phi(o(e))`` for every quotient edge."""
        return np.array([self.positions[e.terminus] + np.asarray(e.shift) - self.positions[e.origin]
                         for e in G.edges])


def integer_lattice(d: int) -> QuotientGraph:
    """One-vertex quotient of Z^d carrying the simple random walk."""
    edges = []
    for i in range(d):
        for sign in (1, -1):
            s = [0] * d
            s[i] = sign
            edges.append(Edge(0, 0, 1.0 / (2 * d), tuple(s)))
    return QuotientGraph(1, tuple(edges))


def hexagonal() -> QuotientGraph:
    """Honeycomb lattice: two vertex classes, three edge pairs, uniform probabilities.

    Shifts are in the coordinates of :data:`HEXAGONAL_BASIS`.
    """
    p = 1.0 / 3.0
    shifts = [(0, 0), (1, 0), (0, 1)]
    edges = [Edge(0, 1, p, s) for s in shifts] + [Edge(1, 0, p, (-a, -b)) for a, b in shifts]
    return QuotientGraph(2, tuple(edges))


def load_quotient_graph(path) -> QuotientGraph:
    """Read an edge list: one oriented edge per line, ``origin terminus p shift_1 ... shift_d``.

    Blank lines and ``#`` comments are ignored; reverse edges are paired
    automatically, so every edge and its reverse each need a line.
    """
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) < 4:
            raise ValueError(f"line {lineno}: expected 'origin terminus p shift...'")
        try:
            edges.append(Edge(int(tok[0]), int(tok[1]), float(tok[2]),
                              tuple(int(s) for s in tok[3:])))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not edges:
        raise ValueError("no edges in file")
    n_vertices = 1 + max(max(e.origin, e.terminus) for e in edges)
    return QuotientGraph(n_vertices, tuple(edges))


def dump_quotient_graph(G: QuotientGraph, path) -> None:
    lines = [f"{e.origin} {e.terminus} {e.p!r} " + " ".join(str(s) for s in e.shift)
             for e in G.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def invariant_measure(G: QuotientGraph, tol: float = 1e-13,
                      max_iter: int = 1_000_000) -> np.ndarray:
    """Normalised ``m`` with ``sum_{e in E_x} p(e-bar) m(t(e)) = m(x)``.

    Power iteration on the lazy chain ``(I + P)/2`` (same fixed point, no
    periodicity trouble).
    """
    P = G.transition_matrix()
    n_comp, _ = connected_components(csr_matrix(P > 0), directed=True, connection="strong")
    if n_comp != 1:
        raise ConvergenceError("quotient graph is not strongly connected (reducible walk)")
    m = np.full(G.n_vertices, 1.0 / G.n_vertices)
    for _ in range(max_iter):
        m = 0.5 * (m + P.T @ m)
        m /= m.sum()
        if np.max(np.abs(P.T @ m - m)) <= tol:
            return m
    raise ConvergenceError(f"power iteration did not reach {tol:g} in {max_iter} steps")


def check_detailed_balance(G: QuotientGraph, m) -> float:
    """Largest ``|p(e) m(o(e)) - p(e-bar) m(t(e))|``."""
    m = np.asarray(m, dtype=float)
    return max(abs(e.p * m[e.origin] - G.edges[j].p * m[e.terminus])
               for e, j in zip(G.edges, G.inverse))


def harmonic_residual(G: QuotientGraph, phi: PeriodicRealization) -> float:
    """Largest ``|sum_{e in E_x} p(e) v_e|`` over vertex classes."""
    v = phi.edge_vectors(G)
    acc = np.zeros((G.n_vertices, G.dim))
    for e, ve in zip(G.edges, v):
        acc[e.origin] += e.p * ve
    return float(np.max(np.abs(acc)))


def harmonic_realization(G: QuotientGraph, m=None, tol: float = 1e-12) -> PeriodicRealization:
    """Harmonic periodic realisation with vertex 0 pinned at the origin."""
    P = G.transition_matrix()
    drift = np.zeros((G.n_vertices, G.dim))
    for e in G.edges:
        drift[e.origin] += e.p * np.asarray(e.shift, dtype=float)
    if m is not None:
        # Fredholm condition: the left null vector m must annihilate the drift
        if np.max(np.abs(np.asarray(m) @ drift)) > tol:
            raise np.linalg.LinAlgError("no harmonic realisation: the walk has a net drift")
    L = P - np.eye(G.n_vertices)
    # (P - I) pos = -drift, pinned pos[0] = 0
    pin = np.zeros((1, G.n_vertices))
    pin[0, 0] = 1.0
    system = np.vstack([L, pin])
    rhs = np.vstack([-drift, np.zeros((1, G.dim))])
    pos, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    pos[0] = 0.0
    phi = PeriodicRealization(pos)
    if harmonic_residual(G, phi) > tol:
        raise np.linalg.LinAlgError("singular system: no harmonic realisation within tolerance")
    return phi


def limit_covariance(G: QuotientGraph, m, phi: PeriodicRealization,
                     basis=None) -> np.ndarray:
    """``sum_e p(e) m(o(e)) v_e v_e^T``, optionally mapped through a lattice ``basis``.

    ``basis`` has the lattice vectors as columns; the result is then in
    Euclidean coordinates.
    """
    if harmonic_residual(G, phi) > 1e-10:
        raise ValueError("realisation is not harmonic")
    m = np.asarray(m, dtype=float)
    v = phi.edge_vectors(G)
    if basis is not None:
        v = v @ np.asarray(basis, dtype=float).T
    sigma = np.zeros((G.dim, G.dim))
    for e, ve in zip(G.edges, v):
        sigma += e.p * m[e.origin] * np.outer(ve, ve)
    return sigma


def cochain_from_potential(G: QuotientGraph, phi: PeriodicRealization, A,
                           omega0: Sequence[float] | None = None) -> Callable:
    """Cochain ``-<A Phi(o(e)), v_e> - <A v_e, v_e>/2 + omega0(e)`` on lifted edges.

    Returns ``cochain(edge_index, sigma)`` for the lift of edge ``edge_index``
    starting in translate ``sigma``. Euclidean inner product.
    """
    A = np.asarray(A, dtype=float)
    v = phi.edge_vectors(G)
    omega0 = np.zeros(len(G.edges)) if omega0 is None else np.asarray(omega0, dtype=float)

    def cochain(i, sigma):
        start = phi(G.edges[i].origin, sigma)
        return float(-(A @ start) @ v[i] - 0.5 * (A @ v[i]) @ v[i] + omega0[i])

    return cochain


def crystal_walk_apply(G: QuotientGraph, phi: PeriodicRealization | None, f: Mapping,
                       cochain: Callable | None = None, budget: int = 5_000_000) -> dict:
    """One step of ``sum_{e in E_x} p(e) exp(i omega(e)) f(t(e))`` on the covering graph."""
    # output sites are (o(e), tau - shift(e)) for (t(e), tau) in the support of f
    targets = {}
    for (w, tau) in f:
        for i, e in enumerate(G.edges):
            if e.terminus == w:
                targets[(e.origin, tuple(a - s for a, s in zip(tau, e.shift)))] = None
                if len(targets) > budget:
                    raise BudgetExceeded(f"support exceeds {budget} lifted vertices")
    out_edges = [G.out_edges(x) for x in range(G.n_vertices)]
    out = {}
    for x, sigma in targets:
        acc = 0.0
        for i in out_edges[x]:
            e = G.edges[i]
            val = f.get((e.terminus, tuple(a + s for a, s in zip(sigma, e.shift))))
            if val is None:
                continue
            weight = e.p if cochain is None else e.p * np.exp(1j * cochain(i, sigma))
            acc = acc + weight * val
        out[(x, sigma)] = acc
    return out


def _block_kernel(G: QuotientGraph, steps: int):
    """Exact law of (end class, summed shift) after ``steps`` steps from each start class.

    Returns ``(probs, reach)`` with ``probs[start, end]`` an array over the
    shift box ``[-reach, reach]^d``.
    """
    r = max(max(abs(s) for s in e.shift) for e in G.edges)
    reach = steps * r
    d, V = G.dim, G.n_vertices
    side = 2 * reach + 1
    probs = np.zeros((V, V) + (side,) * d)
    for x in range(V):
        probs[(x, x) + (reach,) * d] = 1.0
    for _ in range(steps):
        new = np.zeros_like(probs)
        for e in G.edges:
            src = tuple(slice(max(0, -s), side - max(0, s)) for s in e.shift)
            dst = tuple(slice(max(0, s), side - max(0, -s)) for s in e.shift)
            new[(slice(None), e.terminus) + dst] += e.p * probs[(slice(None), e.origin) + src]
        probs = new
    return probs, reach


def sample_displacements(G: QuotientGraph, phi: PeriodicRealization, n_steps: int,
                         n_paths: int, seed=None, start=None, block: int = 64) -> np.ndarray:
    """Sample ``Phi(X_n) - Phi(X_0)`` for ``n_paths`` independent lifted walks.

    The walk is advanced ``block`` steps at a time using the exact block law
    of (end class, summed shift), so this is exact in distribution. Start
    classes are drawn from ``start`` (a probability vector; defaults to the
    invariant measure).
    """
    rng = np.random.default_rng(seed)
    V, d = G.n_vertices, G.dim
    start = invariant_measure(G) if start is None else np.asarray(start, dtype=float)
    cls = rng.choice(V, size=n_paths, p=start / start.sum())
    disp = np.zeros((n_paths, d))
    disp -= phi.positions[cls]
    full, rest = divmod(n_steps, block)
    for length, count in ((block, full), (rest, 1 if rest else 0)):
        if not count:
            continue
        probs, reach = _block_kernel(G, length)
        side = 2 * reach + 1
        tables = []
        for x in range(V):
            flat = probs[x].reshape(-1)
            keep = np.flatnonzero(flat > 0)
            cdf = np.cumsum(flat[keep])
            ends, rem = np.divmod(keep, side**d)
            shifts = np.stack(np.unravel_index(rem, (side,) * d), axis=-1) - reach
            tables.append((cdf / cdf[-1], ends, shifts.astype(float)))
        for _ in range(count):
            u = rng.random(n_paths)
            new_cls = cls.copy()
            for x in range(V):
                mask = cls == x
                if not mask.any():
                    continue
                cdf, ends, shifts = tables[x]
                pick = np.minimum(np.searchsorted(cdf, u[mask], side="right"), len(cdf) - 1)
                disp[mask] += shifts[pick]
                new_cls[mask] = ends[pick]
            cls = new_cls
    disp += phi.positions[cls]
    return disp


def monte_carlo_covariance(G: QuotientGraph, phi: PeriodicRealization, n_steps: int,
                           n_paths: int, seed=None, basis=None) -> tuple:
    """Monte-Carlo ``E[X X^T] / n`` (mean is zero for harmonic ``phi``) and its standard errors."""
    X = sample_displacements(G, phi, n_steps, n_paths, seed=seed)
    if basis is not None:
        X = X @ np.asarray(basis, dtype=float).T
    prods = X[:, :, None] * X[:, None, :]
    est = prods.mean(axis=0) / n_steps
    se = prods.std(axis=0, ddof=1) / math.sqrt(n_paths) / n_steps
    return est, se
