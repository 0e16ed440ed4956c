"""Limit-side objects on R^d.

Test functions are finite sums of Hermite-Gaussian terms
``coeff * (x - center)^alpha * exp(-|x - center|^2 / (2 width^2))``. The
family is closed under partial derivatives and multiplication by
coordinates, so heat and magnetic generators act on it exactly. Semigroups
are evaluated by Gauss-Hermite quadrature against the heat kernel or the
constant-field magnetic (Mehler) kernel, and the magnetic kernel is checked
against a finite-difference matrix exponential.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import BudgetExceeded, ConvergenceError, KernelValidationError

__all__ = [
    "Term",
    "TestFunction",
    "gaussian",
    "hermite_gaussian",
    "GeneratorSpec",
    "derivative",
    "seminorm_inf",
    "third_seminorm",
    "generator_apply",
    "EvolvedFunction",
    "heat_evolve",
    "magnetic_evolve",
    "harper_A",
    "fd_generator_matrix",
    "DenseReference",
    "dense_reference",
    "validate_mehler_kernel",
    "MAX_DERIVATIVE_ORDER",
    "DENSE_GRID_BUDGET",
]

MAX_DERIVATIVE_ORDER = 5
DENSE_GRID_BUDGET = 5000
ACTION_GRID_BUDGET = 1_000_000
QUADRATURE_NODE_BUDGET = 1024
KERNEL_GATE = 1e-6
VALIDATION_CENTER = (0.5, 0.5)


@dataclass(frozen=True)
class Term:
    coeff: complex
    alpha: tuple
    center: tuple
    width: float

    @property
    def degree(self) -> int:
        return sum(self.alpha)


class TestFunction:
    """Finite Hermite-Gaussian sum on R^d (stands in for a C_c^infinity function)."""

    __test__ = False  # not a pytest class

    def __init__(self, terms: Sequence[Term], dim: int | None = None):
        merged: dict = {}
        for t in terms:
            key = (tuple(int(a) for a in t.alpha), tuple(float(c) for c in t.center),
                   float(t.width))
            if any(a < 0 for a in key[0]):
                raise ValueError("multi-index entries must be nonnegative")
            if key[2] <= 0:
                raise ValueError("width must be positive")
            merged[key] = merged.get(key, 0j) + complex(t.coeff)
        self.terms = tuple(Term(c, *k) for k, c in merged.items() if c != 0)
        dims = {len(k[0]) for k in merged} | {len(k[1]) for k in merged}
        if dim is None:
            if len(dims) != 1:
                raise ValueError("cannot infer dimension")
            dim = dims.pop()
        elif dims and dims != {dim}:
            raise ValueError("terms disagree with dim")
        self.dim = int(dim)

    def __repr__(self):
        return f"TestFunction(dim={self.dim}, terms={len(self.terms)})"

    # -- evaluation ------------------------------------------------------
    def __call__(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"points must have trailing axis {self.dim}")
        out = np.zeros(x.shape[:-1], dtype=complex)
        for t in self.terms:
            y = x - np.asarray(t.center)
            val = np.exp(-np.sum(y * y, axis=-1) / (2 * t.width**2))
            for i, a in enumerate(t.alpha):
                if a:
                    val = val * y[..., i] ** a
            out += t.coeff * val
        return out

    def on_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Values on the tensor grid spanned by ``axes`` (uses separability)."""
        shape = tuple(len(a) for a in axes)
        out = np.zeros(shape, dtype=complex)
        for t in self.terms:
            val = np.ones((), dtype=complex)
            for i, ax in enumerate(axes):
                y = np.asarray(ax, dtype=float) - t.center[i]
                factor = y ** t.alpha[i] * np.exp(-y * y / (2 * t.width**2))
                val = np.multiply.outer(val, factor)
            out += t.coeff * val
        return out

    # -- algebra ---------------------------------------------------------
    def _combine(self, other, sign):
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        neg = [Term(sign * t.coeff, t.alpha, t.center, t.width) for t in other.terms]
        return TestFunction(list(self.terms) + neg, self.dim)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __mul__(self, scalar):
        return TestFunction([Term(scalar * t.coeff, t.alpha, t.center, t.width)
                             for t in self.terms], self.dim)

    __rmul__ = __mul__

    def partial(self, i: int) -> "TestFunction":
        """Exact derivative in coordinate ``i``."""
        out = []
        for t in self.terms:
            a = list(t.alpha)
            if a[i]:
                down = a.copy()
                down[i] -= 1
                out.append(Term(a[i] * t.coeff, tuple(down), t.center, t.width))
            up = a.copy()
            up[i] += 1
            out.append(Term(-t.coeff / t.width**2, tuple(up), t.center, t.width))
        return TestFunction(out, self.dim)

    def times_coordinate(self, j: int) -> "TestFunction":
        """Multiplication by ``x_j``, kept in the family via ``x_j = (x_j - c_j) + c_j``."""
        out = []
        for t in self.terms:
            up = list(t.alpha)
            up[j] += 1
            out.append(Term(t.coeff, tuple(up), t.center, t.width))
            if t.center[j] != 0:
                out.append(Term(t.coeff * t.center[j], t.alpha, t.center, t.width))
        return TestFunction(out, self.dim)

    def laplacian(self) -> "TestFunction":
        out = TestFunction([], self.dim)
        for i in range(self.dim):
            out = out + self.partial(i).partial(i)
        return out

    # -- tails -----------------------------------------------------------
    def envelope(self, R: float) -> float:
        """Upper bound for ``|f(x)|`` on ``|x| >= R``; nonincreasing in R."""
        total = 0.0
        for t in self.terms:
            m = t.degree
            rho = max(0.0, R - math.hypot(*t.center))
            peak = t.width * math.sqrt(m)
            rho = max(rho, peak)
            total += abs(t.coeff) * (rho**m if m else 1.0) * math.exp(-rho * rho / (2 * t.width**2))
        return total

    def gaussian_dominator(self):
        """Triples ``(K, center, W)`` with ``|f(x)| <= sum K exp(-|x-center|^2/(2W^2))``."""
        out = []
        for t in self.terms:
            m = t.degree
            if m == 0:
                out.append((abs(t.coeff), np.asarray(t.center), t.width))
            else:
                # r^m e^{-r^2/(2w^2)} <= K e^{-r^2/(4w^2)}, K = sup_r r^m e^{-r^2/(4w^2)}
                K = (t.width * math.sqrt(2 * m)) ** m * math.exp(-m / 2)
                out.append((abs(t.coeff) * K, np.asarray(t.center), math.sqrt(2) * t.width))
        return out

    def evolved_envelope(self, R: float, tau: float) -> float:
        """Bound on ``|exp(tau Delta) |f|| `` over ``|x| >= R``.

        By the diamagnetic inequality this also bounds the magnetic semigroup
        at the same ``tau``.
        """
        total = 0.0
        for K, c, W in self.gaussian_dominator():
            s2 = W * W + 2 * tau
            rho = max(0.0, R - float(np.linalg.norm(c)))
            total += K * (W * W / s2) ** (self.dim / 2) * math.exp(-rho * rho / (2 * s2))
        return total


def gaussian(d: int = 1, width: float = 1.0, center=None, coeff: complex = 1.0) -> TestFunction:
    center = tuple(center) if center is not None else (0.0,) * d
    return TestFunction([Term(coeff, (0,) * d, center, width)], d)


def hermite_gaussian(alpha: Sequence[int], width: float = 1.0, center=None,
                     coeff: complex = 1.0) -> TestFunction:
    d = len(alpha)
    center = tuple(center) if center is not None else (0.0,) * d
    return TestFunction([Term(coeff, tuple(alpha), center, width)], d)


def derivative(f: TestFunction, alpha: Sequence[int]) -> TestFunction:
    """Exact partial derivative ``d^alpha f`` for ``|alpha| <= 5``."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != f.dim or any(a < 0 for a in alpha):
        raise ValueError("bad multi-index")
    if sum(alpha) > MAX_DERIVATIVE_ORDER:
        raise ValueError(f"derivative order {sum(alpha)} exceeds {MAX_DERIVATIVE_ORDER}")
    out = f
    for i, a in enumerate(alpha):
        for _ in range(a):
            out = out.partial(i)
    return out


def seminorm_inf(f: TestFunction, rtol: float = 1e-6) -> float:
    """Sup-norm over R^d: grid scan, gradient refinement, then a tail check."""
    if not f.terms:
        return 0.0
    wmin = min(t.width for t in f.terms)
    scale = sum(abs(t.coeff) for t in f.terms)
    R = 1.0
    while f.envelope(R) > 1e-8 * scale:
        R *= 1.5
    per_axis = {1: 64, 2: 8}.get(f.dim, 4)
    h = wmin / per_axis
    grads = [f.partial(i) for i in range(f.dim)]

    def neg_sq(x):
        v = f(x)
        return -float(abs(v) ** 2)

    def neg_sq_grad(x):
        v = f(x)
        return np.array([-2.0 * float(np.real(np.conj(v) * g(x))) for g in grads])

    while True:
        axis = np.arange(-R, R + h / 2, h)
        mesh = np.stack(np.meshgrid(*([axis] * f.dim), indexing="ij"), axis=-1)
        vals = np.abs(f(mesh))
        best = float(vals.max())
        flat = np.argsort(vals, axis=None)[::-1][:16]
        for idx in flat:
            x0 = mesh[np.unravel_index(idx, vals.shape)]
            res = scipy.optimize.minimize(
                neg_sq, x0, jac=neg_sq_grad, method="L-BFGS-B",
                options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 200})
            best = max(best, math.sqrt(max(-res.fun, 0.0)))
        if f.envelope(R) <= rtol * best or best == 0.0:
            return best
        R *= 1.5


def third_seminorm(f: TestFunction) -> float:
    """``max_i || d^3 f / dx_i^3 ||_inf``."""
    out = 0.0
    for i in range(f.dim):
        alpha = [0] * f.dim
        alpha[i] = 3
        out = max(out, seminorm_inf(derivative(f, alpha)))
    return out


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """Limit generator: ``c * Laplacian`` (heat) or ``c * nabla_A^* nabla_A`` (magnetic).

    ``lam`` is the resolvent shift used when assembling bounds.
    """

    kind: str
    c: float
    A: np.ndarray | None = None
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("heat", "magnetic"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.c <= 0 or self.lam <= 0:
            raise ValueError("c and lam must be positive")
        if self.kind == "magnetic":
            if self.A is None:
                raise ValueError("magnetic generator needs A")
            A = np.array(self.A, dtype=float)
            A.setflags(write=False)
            object.__setattr__(self, "A", A)

    @property
    def semigroup_sign(self) -> int:
        """+1 for ``exp(+t G)`` (heat), -1 for ``exp(-t G)`` (magnetic)."""
        return 1 if self.kind == "heat" else -1


def harper_A(b: float) -> np.ndarray:
    """Symmetric-gauge matrix matching the Harper phases: ``a_12 = -b/2, a_21 = b/2``."""
    return np.array([[0.0, -b / 2], [b / 2, 0.0]])


def generator_apply(G: GeneratorSpec, f: TestFunction) -> TestFunction:
    """Apply the generator exactly inside the family.

    Magnetic kind: ``c [-Lap f + 2i sum a_ij x_j d_i f + (i tr A + sum_i (sum_j a_ij x_j)^2) f]``.
    """
    if G.kind == "heat":
        return G.c * f.laplacian()
    A = G.A
    d = f.dim
    if A.shape != (d, d):
        raise ValueError("A does not match the test function dimension")

    def potential_times(g, i):
        out = TestFunction([], d)
        for j in range(d):
            if A[i, j]:
                out = out + A[i, j] * g.times_coordinate(j)
        return out

    out = -1.0 * f.laplacian()
    for i in range(d):
        out = out + 2j * potential_times(f.partial(i), i)
        Af = potential_times(f, i)
        out = out + potential_times(Af, i)
    if np.trace(A):
        out = out + (1j * np.trace(A)) * f
    return G.c * out


# ---------------------------------------------------------------------------
# semigroups by Gauss-Hermite quadrature

@functools.lru_cache(maxsize=None)
def _hermgauss(q: int):
    return np.polynomial.hermite.hermgauss(q)


def _factor(x, kappa, a, c, beta, k, q):
    """``int exp(-a (x-y)^2 - beta (y-c)^2 + i kappa y) (y-c)^k dy`` with ``q`` nodes."""
    z, w = _hermgauss(q)
    s = math.sqrt(a + beta)
    mu = (a * x + beta * c) / (a + beta)
    y = mu[..., None] + z / s
    integrand = w * (y - c) ** k if k else np.broadcast_to(w, y.shape)
    if kappa is not None:
        integrand = integrand * np.exp(1j * kappa[..., None] * y)
    total = integrand.sum(axis=-1)
    return total * np.exp(-a * beta / (a + beta) * (x - c) ** 2) / s


class EvolvedFunction:
    """Evaluator for ``exp(-tau H) f`` where H is ``-(nabla - iA)^2`` for a constant field ``b``.

    ``b = 0`` gives the heat semigroup ``exp(tau Lap)``. Calls return values
    whose quadrature error is certified below ``tol`` by node doubling.
    """

    def __init__(self, f: TestFunction, tau: float, b: float, tol: float, chunk: int = 20000):
        if tau < 0:
            raise ValueError("time must be nonnegative")
        if b and f.dim != 2:
            raise ValueError("magnetic evolution is implemented for d = 2")
        self.f, self.tau, self.b, self.tol, self.chunk = f, float(tau), float(b), float(tol), chunk
        self.dim = f.dim
        if tau > 0:
            if b:
                bt = self.b * self.tau
                self._a = self.b / (4 * math.tanh(bt))
                self._pref = self.b / (4 * math.pi * math.sinh(bt))
            else:
                self._a = 1 / (4 * self.tau)
                self._pref = (self._a / math.pi) ** (self.dim / 2)

    def envelope(self, R: float) -> float:
        return self.f.evolved_envelope(R, self.tau)

    def _eval(self, x: np.ndarray, q: int) -> np.ndarray:
        out = np.zeros(x.shape[:-1], dtype=complex)
        a = self._a
        for t in self.f.terms:
            beta = 1 / (2 * t.width**2)
            val = np.full(x.shape[:-1], self._pref * t.coeff, dtype=complex)
            for i in range(self.dim):
                if self.b:
                    # exp(-i b/2 (x1 y2 - x2 y1)) splits into one phase per coordinate
                    kappa = (self.b / 2) * (x[..., 1] if i == 0 else -x[..., 0])
                else:
                    kappa = None
                val = val * _factor(x[..., i], kappa, a, t.center[i], beta, t.alpha[i], q)
            out += val
        return out

    def _certified(self, x: np.ndarray) -> np.ndarray:
        max_degree = max((max(t.alpha) for t in self.f.terms), default=0)
        q = max(16, max_degree + 2)
        prev = self._eval(x, q)
        while True:
            q *= 2
            if q > QUADRATURE_NODE_BUDGET:
                raise ConvergenceError(
                    f"quadrature did not reach tol={self.tol:g} within {QUADRATURE_NODE_BUDGET} nodes")
            cur = self._eval(x, q)
            if prev.size == 0 or np.max(np.abs(cur - prev)) <= self.tol / 2:
                return cur
            prev = cur

    def __call__(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"points must have trailing axis {self.dim}")
        if self.tau == 0:
            return self.f(x)
        flat = x.reshape(-1, self.dim)
        out = np.empty(len(flat), dtype=complex)
        for s in range(0, len(flat), self.chunk):
            out[s:s + self.chunk] = self._certified(flat[s:s + self.chunk])
        return out.reshape(x.shape[:-1])

    def on_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        axes = [np.asarray(a, dtype=float) for a in axes]
        if self.tau == 0:
            return self.f.on_grid(axes)
        if self.b:
            mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
            return self(mesh)
        # heat: each term is a product of one-dimensional convolutions
        out = np.zeros(tuple(len(a) for a in axes), dtype=complex)
        for t in self.f.terms:
            beta = 1 / (2 * t.width**2)
            val = np.ones((), dtype=complex)
            for i, ax in enumerate(axes):
                val = np.multiply.outer(val, self._certified_1d(ax, t.center[i], beta, t.alpha[i]))
            out += t.coeff * self._pref * val
        return out

    def _certified_1d(self, x, c, beta, k):
        # polynomial integrand after merging the Gaussians: exact once 2q > k
        q = max(16, k + 2)
        prev = _factor(x, None, self._a, c, beta, k, q)
        while True:
            q *= 2
            if q > QUADRATURE_NODE_BUDGET:
                raise ConvergenceError("one-dimensional quadrature did not converge")
            cur = _factor(x, None, self._a, c, beta, k, q)
            if np.max(np.abs(cur - prev), initial=0.0) <= self.tol / (2 * self.dim):
                return cur
            prev = cur


def heat_evolve(f: TestFunction, t: float, c: float, tol: float) -> EvolvedFunction:
    """Evaluator for ``exp(c t Lap) f``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return EvolvedFunction(f, c * t, 0.0, tol)


def magnetic_evolve(f: TestFunction, t: float, b: float, c: float, tol: float,
                    validate: bool = True) -> EvolvedFunction:
    """Evaluator for ``exp(-t c nabla_A^* nabla_A) f`` on R^2 with the Harper potential of flux ``b``.

    Uses the closed-form constant-field kernel
    ``b / (4 pi sinh(b tau)) exp(-(b/4) coth(b tau) |x-y|^2 - i (b/2)(x1 y2 - x2 y1))``
    with ``tau = c t``. With ``validate`` the kernel is first checked against
    :func:`dense_reference` for this flux (cached per ``b``).
    """
    if f.dim != 2:
        raise ValueError("magnetic evolution needs d = 2")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if validate and b:
        validate_mehler_kernel(float(b))
    return EvolvedFunction(f, c * t, float(b), tol)


# ---------------------------------------------------------------------------
# finite-difference oracle

def fd_generator_matrix(G: GeneratorSpec, axes: Sequence[np.ndarray]) -> sp.csr_matrix:
    """Second-order central-difference matrix of the generator on a uniform grid.

    Zero Dirichlet data outside the grid; unknowns ordered C-style over ``axes``.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    d = len(axes)
    sizes = [len(a) for a in axes]
    hs = [a[1] - a[0] for a in axes]

    def along(i, mat):
        ops = [sp.identity(n, format="csr") for n in sizes]
        ops[i] = mat
        out = ops[0]
        for o in ops[1:]:
            out = sp.kron(out, o, format="csr")
        return out

    lap = None
    grads = []
    for i, (n, h) in enumerate(zip(sizes, hs)):
        d2 = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n)) / h**2
        d1 = sp.diags([-1.0, 1.0], [-1, 1], shape=(n, n)) / (2 * h)
        term = along(i, d2)
        lap = term if lap is None else lap + term
        grads.append(along(i, d1))
    if G.kind == "heat":
        return (G.c * lap).tocsr()
    A = G.A
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    pot = mesh @ A.T  # A(x)_i = sum_j a_ij x_j
    K = -lap
    for i in range(d):
        K = K + 2j * sp.diags(pot[:, i]) @ grads[i]
    K = K + sp.diags((pot**2).sum(axis=1) + 1j * np.trace(A))
    return (G.c * K).tocsr()


@dataclass
class DenseReference:
    """Finite-difference semigroup samples on the coarse grid.

    ``coarse`` and ``fine`` are solutions at spacing ``h`` and ``h/2`` (the
    latter restricted to the coarse points); ``values`` is their Richardson
    combination and ``error_estimate`` the ``|fine - coarse| / 3`` estimate of
    the fine-grid error.
    """

    axes: list
    coarse: np.ndarray
    fine: np.ndarray
    values: np.ndarray
    error_estimate: float


def _grid_axes(half_width: float, h: float, d: int):
    ratio = 2 * half_width / h
    m = round(ratio)
    if abs(ratio - m) > 1e-9 * max(1.0, ratio) or m < 2:
        raise ValueError("2 * half_width must be a positive integer multiple of h")
    ax = -half_width + h * np.arange(1, m)
    return [ax] * d


def _fd_solve(G: GeneratorSpec, f: TestFunction, t: float, axes, method: str) -> np.ndarray:
    cells = math.prod(len(a) for a in axes)
    budget = DENSE_GRID_BUDGET if method == "dense" else ACTION_GRID_BUDGET
    if cells > budget:
        raise BudgetExceeded(f"{cells} grid points exceed the {method} budget {budget}")
    u0 = f.on_grid(axes).ravel()
    if t == 0:
        return u0.reshape(tuple(len(a) for a in axes))
    M = fd_generator_matrix(G, axes) * (G.semigroup_sign * t)
    if method == "dense":
        u = scipy.linalg.expm(M.toarray()) @ u0
    elif method == "action":
        u = expm_multiply(M.tocsc(), u0)
    else:
        raise ValueError(f"unknown method {method!r}")
    return u.reshape(tuple(len(a) for a in axes))


def dense_reference(G: GeneratorSpec, f: TestFunction, t: float, h: float,
                    half_width: float, method: str = "dense") -> DenseReference:
    """Finite-difference semigroup of ``G`` applied to ``f`` on ``(-L, L)^d``.

    Solves on spacing ``h`` and ``h/2``. ``method="dense"`` uses the full
    scaling-and-squaring matrix exponential and enforces the 5000-point
    budget; ``method="action"`` applies the exponential of the sparse matrix
    to the sample vector and allows larger grids.
    """
    axes = _grid_axes(half_width, h, f.dim)
    fine_axes = _grid_axes(half_width, h / 2, f.dim)
    coarse = _fd_solve(G, f, t, axes, method)
    fine = _fd_solve(G, f, t, fine_axes, method)[(slice(1, None, 2),) * f.dim]
    values = (4 * fine - coarse) / 3
    err = float(np.max(np.abs(fine - coarse))) / 3
    return DenseReference(axes, coarse, fine, values, err)


@functools.lru_cache(maxsize=None)
def validate_mehler_kernel(b: float, c: float = 0.25, t: float = 0.25,
                           gate: float = KERNEL_GATE) -> float:
    """Compare the closed-form kernel with the finite-difference oracle for flux ``b``.

    Runs on a 63 x 63 validation grid over ``(-6, 6)^2`` with a unit Gaussian
    centred off the origin (a centred one cannot see the sign of the phase);
    raises :class:`KernelValidationError` when the discrepancy exceeds ``gate``.
    """
    f = gaussian(2, center=VALIDATION_CENTER)
    G = GeneratorSpec("magnetic", c, harper_A(b))
    ref = dense_reference(G, f, t, h=12 / 64, half_width=6.0, method="action")
    evolved = EvolvedFunction(f, c * t, b, tol=1e-12)
    err = float(np.max(np.abs(evolved.on_grid(ref.axes) - ref.values)))
    if err > gate:
        raise KernelValidationError(
            f"Mehler kernel disagrees with finite-difference oracle by {err:.3e} (b={b})")
    return err
