"""Concrete transition operators on Z^d: simple walk, Harper, linear-potential magnetic walks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .grid import StencilOperator

__all__ = [
    "PotentialSpec",
    "unit_offsets",
    "simple_walk",
    "harper",
    "harper_potential",
    "magnetic_from_potential",
    "check_harmonic_cochain",
    "check_phase_antisymmetry",
]


def unit_offsets(d: int) -> tuple:
    """``(+e_1, -e_1, ..., +e_d, -e_d)``."""
    out = []
    for i in range(d):
        e = [0] * d
        e[i] = 1
        out.append(tuple(e))
        out.append(tuple(-c for c in e))
    return tuple(out)


def simple_walk(d: int) -> StencilOperator:
    """Transition operator of the simple random walk on Z^d."""
    if d < 1:
        raise ValueError("d must be >= 1")
    offs = unit_offsets(d)
    return StencilOperator(offs, (1.0 / (2 * d),) * (2 * d))


def harper(b: float) -> StencilOperator:
    """Classical Harper operator on Z^2 with flux ``b``.

    At site ``(m, n)`` the four hops carry phases ``b n / 2`` (+e1),
    ``-b n / 2`` (-e1), ``-b m / 2`` (+e2) and ``b m / 2`` (-e2).
    """
    b = float(b)
    if b == 0.0:
        return simple_walk(2)

    def phase(sites, e):
        m, n = sites[..., 0], sites[..., 1]
        if e[1] == 0:
            return e[0] * b * n / 2
        return -e[1] * b * m / 2

    return StencilOperator(unit_offsets(2), (0.25,) * 4, phase)


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Linear vector potential ``A = sum_ij a_ij x_j dx_i`` plus a periodic harmonic part.

    ``omega0`` maps offsets (the edge classes of the one-vertex quotient of
    Z^d) to reals and must be odd: ``omega0[-e] == -omega0[e]``.
    """

    A: np.ndarray
    omega0: Mapping = field(default_factory=dict)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be a square matrix")
        A.setflags(write=False)
        omega0 = {tuple(int(c) for c in e): float(v) for e, v in dict(self.omega0).items()}
        for e, v in omega0.items():
            neg = tuple(-c for c in e)
            if abs(omega0.get(neg, 0.0) + v) > 1e-14:
                raise ValueError(f"omega0 must be odd; violated at offset {e}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "omega0", omega0)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def field_matrix(self) -> np.ndarray:
        """``b_ij = a_ji - a_ij``."""
        return self.A.T - self.A


def harper_potential(b: float) -> PotentialSpec:
    """Symmetric-gauge potential whose cochain is the Harper phase rule."""
    return PotentialSpec(np.array([[0.0, -b / 2], [b / 2, 0.0]]))


def magnetic_from_potential(spec: PotentialSpec) -> StencilOperator:
    """Uniform nearest-neighbour walk with phases from a linear potential.

    With the identity realisation of Z^d and the Euclidean inner product,
    ``phase(x, e) = -<A x, e> - <A e, e>/2 + omega0(e)``.
    """
    d = spec.dim
    A = spec.A
    offs = unit_offsets(d)
    probs = (1.0 / (2 * d),) * (2 * d)
    if not A.any() and not any(spec.omega0.values()):
        return StencilOperator(offs, probs)
    omega0 = spec.omega0

    def phase(sites, e):
        ev = np.asarray(e, dtype=float)
        drift = sites @ (A.T @ ev)  # <A x, e>
        return -drift - 0.5 * ev @ A @ ev + omega0.get(e, 0.0)

    return StencilOperator(offs, probs, phase)


def check_harmonic_cochain(T: StencilOperator, generators: Sequence, sample_sites) -> float:
    """Largest residual of ``sum_e p(e) (phase(x - s, e) - phase(x, e))`` over sites and shifts ``s``."""
    sites = np.atleast_2d(np.asarray(sample_sites, dtype=np.int64))
    if sites.size == 0:
        raise ValueError("sample_sites must be nonempty")
    worst = 0.0
    for s in generators:
        shifted = sites - np.asarray(s, dtype=np.int64)
        total = np.zeros(len(sites))
        for e, p in zip(T.offsets, T.probs):
            total += p * (T.phase_values(shifted, e) - T.phase_values(sites, e))
        worst = max(worst, float(np.max(np.abs(total))))
    return worst


def check_phase_antisymmetry(T: StencilOperator, sample_sites) -> float:
    """Largest ``|phase(x, e) + phase(x + e, -e)|`` over the sampled sites."""
    sites = np.atleast_2d(np.asarray(sample_sites, dtype=np.int64))
    worst = 0.0
    for e in T.offsets:
        back = tuple(-c for c in e)
        if back not in T.offsets:
            raise ValueError(f"stencil lacks the reverse of offset {e}")
        resid = T.phase_values(sites, e) + T.phase_values(sites + np.asarray(e), back)
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst
