"""Computable right-hand sides of the quantitative Trotter estimate.

``bound_general`` evaluates the four-term estimate for arbitrary growth
constants ``(M, omega)`` and step count ``k``; ``bound_simplified`` is its
``M = 1, omega = 0, k = floor(n t)`` form. ``phi_n`` / ``psi_n`` are the
random-walk seminorms built from continuum sup-norms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .continuum import GeneratorSpec, TestFunction, generator_apply, seminorm_inf, third_seminorm
from .errors import InvalidBoundInputs

__all__ = [
    "BoundInputs",
    "BoundBreakdown",
    "phi_n",
    "psi_n",
    "bound_general",
    "bound_simplified",
    "simplified_breakdown",
    "clt_seminorms",
    "clt_inputs",
    "clt_bound",
]


@dataclass(frozen=True)
class BoundInputs:
    M: float
    omega: float
    lam: float
    t: float
    n: int
    k: int
    phi: float
    psi: float
    psi_lambda: float

    def __post_init__(self):
        if self.M < 1:
            raise InvalidBoundInputs(f"M must be >= 1, got {self.M}")
        if self.omega < 0 or self.t < 0 or self.k < 0:
            raise InvalidBoundInputs("omega, t and k must be nonnegative")
        if self.n < 1:
            raise InvalidBoundInputs("n must be a positive integer")
        if min(self.phi, self.psi, self.psi_lambda) < 0:
            raise InvalidBoundInputs("seminorm values must be nonnegative")
        if self.denominator <= 0:
            raise InvalidBoundInputs(
                f"lambda={self.lam} must exceed omega*exp(omega/n)={self.omega * math.exp(self.omega / self.n)}")

    @property
    def denominator(self) -> float:
        return self.lam - self.omega * math.exp(self.omega / self.n)


@dataclass(frozen=True)
class BoundBreakdown:
    term_chernoff: float
    term_timeshift: float
    term_res_static: float
    term_res_dynamic: float
    total: float
    t_n: float

    @property
    def terms(self) -> tuple:
        return (self.term_chernoff, self.term_timeshift, self.term_res_static,
                self.term_res_dynamic)


def phi_n(f: TestFunction, G: GeneratorSpec, n: int, d: int) -> float:
    """``||G f||_inf + d / (6 sqrt(n)) * max_i ||d^3 f / dx_i^3||_inf``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return seminorm_inf(generator_apply(G, f)) + psi_n(f, n, d)


def psi_n(f: TestFunction, n: int, d: int, third: float | None = None) -> float:
    """``d / (6 sqrt(n)) * max_i ||d^3 f / dx_i^3||_inf``.

    The Taylor argument actually gives the constant 1/6; d/6 is kept.
    ``third`` short-circuits the seminorm when it is already known.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if third is None:
        third = third_seminorm(f)
    return d / (6 * math.sqrt(n)) * third


def bound_general(inp: BoundInputs) -> BoundBreakdown:
    M, w, n, k, t = inp.M, inp.omega, inp.n, inp.k, inp.t
    g = math.exp(w / n)
    s = k / n
    t_n = max(t, s)
    den = inp.denominator
    term1 = M * math.exp(2 * w * g * s) * ((w / n) * s + math.sqrt(k) / n) * inp.phi
    term2 = M * math.exp(w * t_n * g) * abs(s - t) * inp.phi
    term3 = M**2 * (math.exp(w * t) + math.exp(w * t * g)) / den * inp.psi
    term4 = M**3 * t * math.exp(w * t * (g + 1)) / den * inp.psi_lambda
    return BoundBreakdown(term1, term2, term3, term4, term1 + term2 + term3 + term4, t_n)


def simplified_breakdown(inp: BoundInputs) -> BoundBreakdown:
    """Terms of ``sqrt(t/n) phi + phi/n + 2 psi/lam + t psi_lam/lam`` (M=1, omega=0 only)."""
    if inp.M != 1 or inp.omega != 0:
        raise InvalidBoundInputs("the simplified bound needs M = 1 and omega = 0")
    t, n, lam = inp.t, inp.n, inp.lam
    term1 = math.sqrt(t / n) * inp.phi
    term2 = inp.phi / n
    term3 = 2 * inp.psi / lam
    term4 = t * inp.psi_lambda / lam
    return BoundBreakdown(term1, term2, term3, term4, term1 + term2 + term3 + term4, t)


def bound_simplified(inp: BoundInputs) -> float:
    return simplified_breakdown(inp).total


def clt_seminorms(f: TestFunction, lam: float, G: GeneratorSpec) -> tuple:
    """The n-independent pieces ``(||G f||, third(f), third((lam - G) f))``."""
    Gf = generator_apply(G, f)
    return seminorm_inf(Gf), third_seminorm(f), third_seminorm(lam * f - Gf)


def clt_inputs(f: TestFunction, t: float, n: int, lam: float, d: int,
               G: GeneratorSpec, seminorms: tuple | None = None) -> BoundInputs:
    """Seminorm inputs for the lattice CLT with ``k = floor(n t)``.

    ``seminorms`` may carry a precomputed :func:`clt_seminorms` triple.
    """
    gen, third, third_shifted = seminorms or clt_seminorms(f, lam, G)
    psi = psi_n(f, n, d, third=third)
    return BoundInputs(M=1.0, omega=0.0, lam=lam, t=t, n=n, k=math.floor(n * t),
                       phi=gen + psi, psi=psi,
                       psi_lambda=psi_n(None, n, d, third=third_shifted))


def clt_bound(f: TestFunction, t: float, n: int, lam: float, d: int,
              G: GeneratorSpec, seminorms: tuple | None = None) -> float:
    """Explicit CLT rate bound with ``phi = phi_n(f)``, ``psi = psi_n(f)``, ``psi_lam = psi_n((lam - G) f)``."""
    if lam <= 0:
        raise InvalidBoundInputs("lambda must be positive")
    return bound_simplified(clt_inputs(f, t, n, lam, d, G, seminorms))
