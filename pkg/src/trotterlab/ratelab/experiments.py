"""Rate experiments: measured lattice-vs-continuum errors against explicit bounds.

Every measured error is an :class:`~trotterlab.grid.Interval` whose width is
the sum of the declared tolerances, and rows are fitted on a log-log scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..bounds import (BoundBreakdown, BoundInputs, bound_general, clt_inputs, clt_seminorms,
                      psi_n, simplified_breakdown)
from ..continuum import (GeneratorSpec, generator_apply, harper_A, heat_evolve, magnetic_evolve,
                         third_seminorm)
from ..grid import GridFunction, Interval, discrete_generator, embed, iterate, lattice_radius, sup_distance
from ..operators import harper, simple_walk
from .config import ExperimentConfig, make_test_function

__all__ = [
    "SLOPE_WINDOW",
    "RATIO_LIMIT",
    "WIDTH_FRACTION",
    "VORONOVSKAJA_SLACK",
    "C_STAR_RTOL",
    "RateRow",
    "RateReport",
    "BoundTable",
    "fit_slope",
    "reference_grid",
    "run_clt",
    "run_harper",
    "run_voronovskaja",
    "run_bound_table",
    "run_experiment",
]

SLOPE_WINDOW = (-0.7, -0.3)
RATIO_LIMIT = 3.0
WIDTH_FRACTION = 0.1
VORONOVSKAJA_SLACK = 1e-6
C_STAR_RTOL = 0.02


@dataclass(frozen=True)
class RateRow:
    n: int
    k: int
    t: float
    err: Interval
    bound: BoundBreakdown | None = None
    bound_total: float = math.nan
    ok: bool | None = None

    @property
    def scaled(self) -> float:
        """``sqrt(n) * midpoint``."""
        return math.sqrt(self.n) * self.err.mid


@dataclass
class RateReport:
    experiment: str
    config: ExperimentConfig
    rows: list
    slope: float = math.nan
    intercept: float = math.nan
    residual: float = math.nan
    max_ratio: float = math.nan
    extras: dict = field(default_factory=dict)
    gates: dict = field(default_factory=dict)

    @property
    def conclusive(self) -> bool:
        return all(r.err.width <= WIDTH_FRACTION * r.err.mid for r in self.rows)

    @property
    def passed(self) -> bool:
        return all(self.gates.values())


@dataclass
class BoundTable:
    config: ExperimentConfig
    rows: list
    gates: dict = field(default_factory=dict)
    experiment: str = "bound-table"

    @property
    def passed(self) -> bool:
        return all(self.gates.values())


def fit_slope(rows: Sequence) -> tuple:
    """Least-squares line through ``(log n, log error)``.

    ``rows`` holds :class:`RateRow` objects (midpoints are used) or ``(n, error)``
    pairs. Nonpositive errors are dropped. Returns ``(slope, intercept, rms residual)``.
    """
    pts = []
    for r in rows:
        n, e = (r.n, r.err.mid) if isinstance(r, RateRow) else (r[0], r[1])
        if e > 0 and math.isfinite(e):
            pts.append((math.log(n), math.log(e)))
    if len(pts) < 3:
        raise ValueError("slope fit needs at least 3 rows with positive error")
    x, y = np.array(pts).T
    X = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def _ratio(rows) -> float:
    s = [r.scaled for r in rows]
    return max(s) / min(s) if min(s) > 0 else math.inf


def reference_grid(evolved, n: int, tail_eps: float, tol: float) -> GridFunction:
    """Sample an evolved function at ``x / sqrt(n)`` with a certified tail of ``tol``.

    The box is cut where the evolved envelope drops below ``min(tail_eps, tol)``;
    inside it the quadrature error is below ``tol``.
    """
    r = lattice_radius(evolved.envelope, n, min(tail_eps, tol))
    axes = [np.arange(-r, r + 1) / math.sqrt(n)] * evolved.dim
    return GridFunction((-r,) * evolved.dim, evolved.on_grid(axes), tol, n)


def _fit_into(report: RateReport) -> None:
    try:
        report.slope, report.intercept, report.residual = fit_slope(report.rows)
    except ValueError:
        pass
    report.max_ratio = _ratio(report.rows)


def _slope_ok(slope: float) -> bool:
    return SLOPE_WINDOW[0] <= slope <= SLOPE_WINDOW[1]


def run_clt(config: ExperimentConfig) -> RateReport:
    """Simple random walk iterated ``floor(n t)`` times vs the heat semigroup ``exp(t c Lap)``."""
    cfg = config
    f = make_test_function(cfg.test_function, cfg.d)
    G = GeneratorSpec("heat", cfg.c, lam=cfg.lam)
    T = simple_walk(cfg.d)
    seminorms = clt_seminorms(f, cfg.lam, G)
    evolved = heat_evolve(f, cfg.t, cfg.c, cfg.tol)
    rows = []
    for n in cfg.n_list:
        k = math.floor(n * cfg.t)
        err = sup_distance(iterate(T, embed(f, n, cfg.tail_eps), k),
                           reference_grid(evolved, n, cfg.tail_eps, cfg.tol))
        bd = simplified_breakdown(clt_inputs(f, cfg.t, n, cfg.lam, cfg.d, G, seminorms))
        rows.append(RateRow(n, k, cfg.t, err, bd, bd.total, err.hi <= bd.total))
    report = RateReport("clt", cfg, rows)
    _fit_into(report)
    report.gates = {
        "slope": _slope_ok(report.slope),
        "bound": all(r.ok for r in rows),
        "conclusive": report.conclusive,
    }
    return report


def run_harper(config: ExperimentConfig) -> RateReport:
    """Harper walk with flux ``b / n`` iterated ``floor(n t)`` times vs the magnetic semigroup."""
    cfg = config
    if cfg.d != 2:
        raise ValueError("the harper experiment needs d = 2")
    f = make_test_function(cfg.test_function, 2)
    evolved = magnetic_evolve(f, cfg.t, cfg.b, cfg.c, cfg.tol)
    rows = []
    for n in cfg.n_list:
        k = math.floor(n * cfg.t)
        err = sup_distance(iterate(harper(cfg.b / n), embed(f, n, cfg.tail_eps), k),
                           reference_grid(evolved, n, cfg.tail_eps, cfg.tol))
        rows.append(RateRow(n, k, cfg.t, err))
    report = RateReport("harper", cfg, rows)
    _fit_into(report)
    report.gates = {
        "slope": _slope_ok(report.slope),
        "ratio": report.max_ratio <= RATIO_LIMIT,
        "conclusive": report.conclusive,
    }
    return report


def _c_star(f, n: int, d: int, tail_eps: float) -> float:
    """Least-squares ``c`` in ``n (L - I) P_n f ~ c P_n Lap f`` on the sampled box."""
    D = discrete_generator(simple_walk(d), embed(f, n, tail_eps), n)
    g = f.laplacian()(D.sites() / math.sqrt(n))
    return float(np.real(np.vdot(g, D.values)) / np.real(np.vdot(g, g)))


def run_voronovskaja(config: ExperimentConfig) -> RateReport:
    """Residual ``||n (T_n - I) P_n f - P_n G f||`` of the discrete generator.

    Heat case (``d != 2`` or ``b == 0``): checked against ``psi_n(f)`` plus a
    fixed slack. Harper case: ``sqrt(n)`` times the residual must stay within
    a factor :data:`RATIO_LIMIT` across rows.
    """
    cfg = config
    f = make_test_function(cfg.test_function, cfg.d)
    magnetic = cfg.d == 2 and cfg.b != 0
    if magnetic:
        G = GeneratorSpec("magnetic", cfg.c, harper_A(cfg.b), lam=cfg.lam)
    else:
        G = GeneratorSpec("heat", cfg.c, lam=cfg.lam)
    target = G.semigroup_sign * generator_apply(G, f)
    third = None if magnetic else third_seminorm(f)
    rows = []
    for n in cfg.n_list:
        T = harper(cfg.b / n) if magnetic else simple_walk(cfg.d)
        err = sup_distance(discrete_generator(T, embed(f, n, cfg.tail_eps), n),
                           embed(target, n, cfg.tail_eps))
        if magnetic:
            rows.append(RateRow(n, 0, 0.0, err))
        else:
            limit = psi_n(f, n, cfg.d, third=third) + VORONOVSKAJA_SLACK
            rows.append(RateRow(n, 0, 0.0, err, None, limit, err.hi <= limit))
    report = RateReport("voronovskaja", cfg, rows)
    _fit_into(report)
    c_star = _c_star(f, cfg.n_list[-1], cfg.d, cfg.tail_eps)
    report.extras["c_star"] = c_star
    report.extras["generator"] = "magnetic" if magnetic else "heat"
    if magnetic:
        report.gates = {"ratio": report.max_ratio <= RATIO_LIMIT}
    else:
        c0 = 1.0 / (2 * cfg.d)
        report.gates = {
            "bound": all(r.ok for r in rows),
            "c_star": abs(c_star - c0) <= C_STAR_RTOL * c0,
        }
    return report


def run_bound_table(config: ExperimentConfig) -> BoundTable:
    """General and simplified bounds over the ``t_list x n_list`` grid.

    Seminorms come from the configured test function and the heat generator;
    ``M`` and ``omega`` enter the general bound only. The simplified bound is
    evaluated when ``M = 1`` and ``omega = 0``.
    """
    cfg = config
    f = make_test_function(cfg.test_function, cfg.d)
    G = GeneratorSpec("heat", cfg.c, lam=cfg.lam)
    seminorms = clt_seminorms(f, cfg.lam, G)
    simple = cfg.M == 1 and cfg.omega == 0
    rows = []
    for t in cfg.t_list:
        for n in cfg.n_list:
            base = clt_inputs(f, t, n, cfg.lam, cfg.d, G, seminorms)
            inp = BoundInputs(cfg.M, cfg.omega, cfg.lam, t, n, base.k, base.phi, base.psi,
                              base.psi_lambda)
            general = bound_general(inp)
            simplified = simplified_breakdown(inp).total if simple else math.nan
            ok = general.total <= simplified * (1 + 1e-12) if simple else None
            rows.append({"t": t, "n": n, "k": inp.k, "inputs": inp, "general": general,
                         "simplified": simplified, "ok": ok})
    table = BoundTable(cfg, rows)
    if simple:
        table.gates = {"dominance": all(r["ok"] for r in rows)}
    return table


_RUNNERS = {
    "clt": run_clt,
    "harper": run_harper,
    "voronovskaja": run_voronovskaja,
    "bound-table": run_bound_table,
}


def run_experiment(config: ExperimentConfig):
    return _RUNNERS[config.experiment](config)
