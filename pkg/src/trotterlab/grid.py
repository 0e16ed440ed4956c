"""Finitely supported lattice functions and exact discrete evolution on Z^d.

A :class:`GridFunction` is a dense complex array over an integer box together
with a ``tail_bound``: a guaranteed sup-norm bound on the difference between
the function being represented and the stored array (zero outside the box).
All operators here are sup-norm contractions, so tail bounds propagate
unchanged through them and every reported distance is a certified interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import BudgetExceeded, InvalidTestFunction

__all__ = [
    "GridFunction",
    "StencilOperator",
    "Interval",
    "embed",
    "lattice_radius",
    "sup_distance",
    "apply",
    "iterate",
    "discrete_generator",
    "poisson_smooth",
    "poisson_window",
    "discrete_resolvent",
    "DEFAULT_CELL_BUDGET",
    "DEFAULT_ITERATION_BUDGET",
]

DEFAULT_CELL_BUDGET = 10_000_000
DEFAULT_ITERATION_BUDGET = 200_000

PhaseRule = Callable[[np.ndarray, tuple], np.ndarray]


class Interval(NamedTuple):
    """Closed interval ``[lo, hi]`` of nonnegative reals."""

    lo: float
    hi: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex function on the box ``origin + [0, extent)`` of Z^d.

    Parameters
    ----------
    origin : sequence of int
        Lattice coordinates of the first stored entry.
    values : array_like
        Dense values; ``values.shape`` is the extent of the box.
    tail_bound : float
        Sup-norm bound on (represented function - stored values), where the
        stored values are taken as zero outside the box.
    scale_n : int
        The ``n`` of the embedding ``x -> f(x / sqrt(n))`` the function came
        from, or 0.
    """

    origin: tuple
    values: np.ndarray
    tail_bound: float = 0.0
    scale_n: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        origin = tuple(int(o) for o in np.atleast_1d(self.origin))
        if values.ndim != len(origin) or values.ndim == 0:
            raise ValueError(
                f"values has {values.ndim} axes but origin has {len(origin)} entries")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        if not (self.tail_bound >= 0 and math.isfinite(self.tail_bound)):
            raise ValueError(f"tail_bound must be finite and >= 0, got {self.tail_bound}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "tail_bound", float(self.tail_bound))
        object.__setattr__(self, "scale_n", int(self.scale_n))

    @classmethod
    def delta(cls, site: Sequence[int], height: complex = 1.0) -> "GridFunction":
        """Exactly supported point mass ``height * delta_site``."""
        site = tuple(int(s) for s in site)
        return cls(site, np.full((1,) * len(site), height, dtype=complex))

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], radius: int,
                      dim: int, tail_bound: float = 0.0) -> "GridFunction":
        """Sample ``func`` (taking an ``(..., dim)`` integer site array) on ``[-radius, radius]^dim``."""
        axes = [np.arange(-radius, radius + 1)] * dim
        sites = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls((-radius,) * dim, func(sites), tail_bound)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def extent(self) -> tuple:
        return self.values.shape

    @property
    def stop(self) -> tuple:
        return tuple(o + e for o, e in zip(self.origin, self.extent))

    @property
    def radius(self) -> int:
        """Largest |coordinate| of any stored site."""
        return max(max(abs(o), abs(s - 1)) for o, s in zip(self.origin, self.stop))

    def axes(self) -> list:
        return [np.arange(o, s) for o, s in zip(self.origin, self.stop)]

    def sites(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def at(self, site: Sequence[int]) -> complex:
        idx = tuple(int(s) - o for s, o in zip(site, self.origin))
        if all(0 <= i < e for i, e in zip(idx, self.extent)):
            return complex(self.values[idx])
        return 0j

    def embedded_in(self, origin: Sequence[int], shape: Sequence[int]) -> np.ndarray:
        """Values zero-padded into the box ``origin + [0, shape)`` (must contain self)."""
        out = np.zeros(tuple(shape), dtype=complex)
        start = [o - p for o, p in zip(self.origin, origin)]
        if any(s < 0 or s + e > n for s, e, n in zip(start, self.extent, shape)):
            raise ValueError("target box does not contain the grid function")
        out[tuple(slice(s, s + e) for s, e in zip(start, self.extent))] = self.values
        return out

    def _binary(self, other: "GridFunction", a: complex, b: complex) -> "GridFunction":
        _check_dims(self, other)
        origin, shape = _union_box(self, other)
        vals = a * self.embedded_in(origin, shape) + b * other.embedded_in(origin, shape)
        tail = abs(a) * self.tail_bound + abs(b) * other.tail_bound
        n = self.scale_n if self.scale_n == other.scale_n else 0
        return GridFunction(origin, vals, tail, n)

    def __add__(self, other):
        return self._binary(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._binary(other, 1.0, -1.0)

    def __mul__(self, scalar):
        return GridFunction(self.origin, scalar * self.values,
                            abs(scalar) * self.tail_bound, self.scale_n)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def _check_dims(f: GridFunction, g: GridFunction) -> None:
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")


def _union_box(f: GridFunction, g: GridFunction):
    lo = tuple(min(a, b) for a, b in zip(f.origin, g.origin))
    hi = tuple(max(a, b) for a, b in zip(f.stop, g.stop))
    return lo, tuple(h - l for l, h in zip(lo, hi))


def sup_distance(f: GridFunction, g: GridFunction) -> Interval:
    """Certified interval for the sup-distance between two represented functions."""
    _check_dims(f, g)
    origin, shape = _union_box(f, g)
    diff = f.embedded_in(origin, shape) - g.embedded_in(origin, shape)
    m = float(np.max(np.abs(diff))) if diff.size else 0.0
    return Interval(m, m + f.tail_bound + g.tail_bound)


@dataclass(frozen=True, eq=False)
class StencilOperator:
    """Nearest-neighbour operator ``g(x) = sum_e p(e) exp(i phase(x, e)) f(x + e)``.

    ``phase`` is a vectorised rule ``phase(sites, offset) -> array`` taking an
    ``(..., d)`` integer array of sites and one offset tuple; ``None`` means
    the zero cochain.
    """

    offsets: tuple
    probs: tuple
    phase: PhaseRule | None = None

    def __post_init__(self):
        offsets = tuple(tuple(int(c) for c in e) for e in self.offsets)
        probs = tuple(float(p) for p in self.probs)
        if not offsets or len(offsets) != len(probs):
            raise ValueError("need one probability per offset")
        if len({len(e) for e in offsets}) != 1:
            raise ValueError("offsets must share one dimension")
        if any(p <= 0 for p in probs):
            raise ValueError("probabilities must be positive")
        if abs(math.fsum(probs) - 1.0) > 1e-15:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "probs", probs)

    @property
    def dim(self) -> int:
        return len(self.offsets[0])

    @property
    def radius(self) -> int:
        return max(max(abs(c) for c in e) for e in self.offsets)

    def phase_values(self, sites: np.ndarray, offset: tuple) -> np.ndarray:
        sites = np.asarray(sites)
        if self.phase is None:
            return np.zeros(sites.shape[:-1])
        return np.broadcast_to(np.asarray(self.phase(sites, tuple(offset)), dtype=float),
                               sites.shape[:-1])

    def weights(self, sites: np.ndarray, offset: tuple):
        """``p(e) exp(i phase(x, e))`` over an array of sites (a scalar for zero phase)."""
        p = self.probs[self.offsets.index(tuple(offset))]
        if self.phase is None:
            return p
        return p * np.exp(1j * self.phase_values(sites, offset))


def _box_sites(origin: Sequence[int], shape: Sequence[int]) -> np.ndarray:
    axes = [np.arange(o, o + s) for o, s in zip(origin, shape)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def apply(T: StencilOperator, f: GridFunction) -> GridFunction:
    """One application of ``T``; the box grows by the stencil radius on every side."""
    if T.dim != f.dim:
        raise ValueError(f"dimension mismatch: operator {T.dim}, function {f.dim}")
    r = T.radius
    origin = tuple(o - r for o in f.origin)
    out = np.zeros(tuple(e + 2 * r for e in f.extent), dtype=complex)
    for e in T.offsets:
        # output sites x with x + e inside f's box
        src_origin = tuple(o - c for o, c in zip(f.origin, e))
        w = T.weights(_box_sites(src_origin, f.extent), e)
        out[tuple(slice(r - c, r - c + n) for c, n in zip(e, f.extent))] += w * f.values
    return GridFunction(origin, out, f.tail_bound, f.scale_n)


def _powers(T: StencilOperator, f: GridFunction, kmax: int,
            cell_budget: int) -> Iterator[tuple]:
    """Yield ``(k, final_origin, final_shape, slices, view)`` with view = T^k f.

    All powers live in the common box of ``T^kmax f``; ``view`` is the active
    sub-box and is overwritten on the next step.
    """
    if T.dim != f.dim:
        raise ValueError(f"dimension mismatch: operator {T.dim}, function {f.dim}")
    r = T.radius
    reach = kmax * r
    shape = tuple(e + 2 * reach for e in f.extent)
    if math.prod(shape) > cell_budget:
        raise BudgetExceeded(
            f"{kmax} steps need {math.prod(shape)} cells (budget {cell_budget})")
    origin = tuple(o - reach for o in f.origin)
    weights = []
    for e in T.offsets:
        if T.phase is None:
            weights.append(T.weights(None, e))
        else:
            weights.append(T.weights(_box_sites(origin, shape), e))

    # buffers carry r extra zeros per side so shifted reads never leave the array
    padded = tuple(s + 2 * r for s in shape)
    cur = np.zeros(padded, dtype=complex)
    nxt = np.zeros(padded, dtype=complex)

    def box(j):
        return tuple(slice(reach - j * r, reach + e + j * r) for e in f.extent)

    b0 = box(0)
    inner = tuple(slice(s.start + r, s.stop + r) for s in b0)
    cur[inner] = f.values
    yield 0, origin, shape, b0, cur[inner]
    for k in range(1, kmax + 1):
        bk = box(k)
        acc = np.zeros(tuple(s.stop - s.start for s in bk), dtype=complex)
        for e, w in zip(T.offsets, weights):
            src = tuple(slice(s.start + r + c, s.stop + r + c) for s, c in zip(bk, e))
            if np.isscalar(w):
                acc += w * cur[src]
            else:
                acc += w[bk] * cur[src]
        dst = tuple(slice(s.start + r, s.stop + r) for s in bk)
        nxt[dst] = acc
        cur, nxt = nxt, cur
        yield k, origin, shape, bk, cur[dst]


def iterate(T: StencilOperator, f: GridFunction, k: int,
            cell_budget: int = DEFAULT_CELL_BUDGET) -> GridFunction:
    """``T^k f``; the box radius grows by exactly ``k * T.radius``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return f
    for j, origin, shape, bk, view in _powers(T, f, k, cell_budget):
        if j == k:
            return GridFunction(origin, view.copy(), f.tail_bound, f.scale_n)


def discrete_generator(T: StencilOperator, f: GridFunction, n: int) -> GridFunction:
    """``n (T - I) f``."""
    return (apply(T, f) - f) * float(n)


def poisson_window(mu: float, eps: float) -> tuple:
    """Index window ``[lo, hi]`` with Poisson(mu) mass outside at most ``2 eps``.

    Each side is bounded with the Chernoff estimate
    ``P(N >= k), P(N <= k) <= exp(-mu) (e mu / k)^k`` on the relevant side of mu.
    """
    if mu <= 0:
        return 0, 0
    log_eps = math.log(eps)

    def log_chernoff(k):
        if k == 0:
            return -mu
        return -mu + k + k * math.log(mu) - k * math.log(k)

    m = math.floor(mu)
    hi = m + 1
    while log_chernoff(hi + 1) > log_eps:
        hi += 1
    lo = m
    while lo > 0 and log_chernoff(lo - 1) > log_eps:
        lo -= 1
    return lo, hi


def poisson_smooth(T: StencilOperator, f: GridFunction, t: float, n: int, tol: float,
                   iteration_budget: int = DEFAULT_ITERATION_BUDGET,
                   cell_budget: int = DEFAULT_CELL_BUDGET) -> GridFunction:
    """Truncated ``exp(-nt) sum_k (nt)^k / k! T^k f``; result tail grows by ``tol``."""
    if t < 0 or tol <= 0:
        raise ValueError("need t >= 0 and tol > 0")
    if t == 0:
        return f
    mu = n * t
    norm = f.sup_norm()
    if norm == 0:
        return GridFunction(f.origin, f.values, f.tail_bound + tol, f.scale_n)
    lo, hi = poisson_window(mu, tol / (2 * norm))
    if hi > iteration_budget:
        raise BudgetExceeded(f"Poisson window needs {hi} powers (budget {iteration_budget})")
    log_mu = math.log(mu)
    acc = None
    for k, origin, shape, bk, view in _powers(T, f, hi, cell_budget):
        if acc is None:
            acc = np.zeros(shape, dtype=complex)
        if k >= lo:
            acc[bk] += math.exp(k * log_mu - mu - math.lgamma(k + 1)) * view
    return GridFunction(origin, acc, f.tail_bound + tol, f.scale_n)


def discrete_resolvent(T: StencilOperator, f: GridFunction, lam: float, n: int, tol: float,
                       iteration_budget: int = DEFAULT_ITERATION_BUDGET,
                       cell_budget: int = DEFAULT_CELL_BUDGET) -> GridFunction:
    """``(lam - n(T - I))^{-1} f`` by its Neumann series ``sum_k n^k/(lam+n)^{k+1} T^k f``.

    The series is cut once ``(n/(lam+n))^{K+1} ||f|| / lam <= tol``; the
    result's tail is ``f.tail_bound / lam + tol``.
    """
    if lam <= 0 or tol <= 0:
        raise ValueError("need lam > 0 and tol > 0")
    q = n / (lam + n)
    norm = f.sup_norm()
    ratio = tol * lam / norm if norm > 0 else 1.0
    kmax = 0 if ratio >= 1 else max(0, math.ceil(math.log(ratio) / math.log(q)) - 1)
    if kmax > iteration_budget:
        raise BudgetExceeded(f"Neumann series needs {kmax} powers (budget {iteration_budget})")
    acc = None
    for k, origin, shape, bk, view in _powers(T, f, kmax, cell_budget):
        if acc is None:
            acc = np.zeros(shape, dtype=complex)
        acc[bk] += (q ** k / (lam + n)) * view
    return GridFunction(origin, acc, f.tail_bound / lam + tol, f.scale_n)


def lattice_radius(envelope: Callable[[float], float], n: int, eps: float) -> int:
    """Smallest integer r >= 0 with ``envelope(r / sqrt(n)) <= eps``.

    ``envelope(R)`` must bound the function on ``|x| >= R`` and be nonincreasing.
    """
    scale = math.sqrt(n)
    if envelope(0.0) <= eps:
        return 0
    hi = 1
    while envelope(hi / scale) > eps:
        hi *= 2
        if hi > 2**40:
            raise ValueError("envelope does not decay below tail_eps")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if envelope(mid / scale) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def embed(f, n: int, tail_eps: float) -> GridFunction:
    """Sample ``x -> f(x / sqrt(n))`` on the smallest centred box outside which |f| <= tail_eps.

    ``f`` needs ``f(points)`` for an ``(..., d)`` array, ``f.dim`` and a
    nonincreasing ``f.envelope(R)`` bounding ``|f|`` on ``|x| >= R``.
    """
    if tail_eps <= 0:
        raise ValueError("tail_eps must be positive")
    if n < 1:
        raise ValueError("n must be a positive integer")
    r = lattice_radius(f.envelope, n, tail_eps)
    axes = [np.arange(-r, r + 1) / math.sqrt(n)] * f.dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = np.asarray(f(pts), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise InvalidTestFunction("test function produced non-finite samples")
    return GridFunction((-r,) * f.dim, vals, tail_eps, n)
