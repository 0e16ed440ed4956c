"""Experiment configuration: a flat ``key = value`` text format.

Keys are the :class:`ExperimentConfig` field names, with ``lambda`` for the
resolvent parameter. Lists are comma separated. ``#`` starts a comment.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..continuum import TestFunction, gaussian, hermite_gaussian

__all__ = ["ExperimentConfig", "parse_config", "load_config", "make_test_function", "EXPERIMENTS"]

EXPERIMENTS = ("clt", "harper", "voronovskaja", "bound-table")


def default_n_list(d: int) -> tuple:
    top = 1024 if d == 1 else 256
    out, n = [], 16
    while n <= top:
        out.append(n)
        n *= 2
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    d: int | None = None
    t: float = 1.0
    n_list: tuple | None = None
    lam: float = 1.0
    b: float = 1.0
    c: float | None = None
    test_function: str = "gaussian"
    tail_eps: float = 1e-12
    tol: float = 1e-10
    t_list: tuple = (0.25, 0.5, 1.0, 2.0)
    M: float = 1.0
    omega: float = 0.0
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.d is None:
            object.__setattr__(self, "d", 2 if self.experiment == "harper" else 1)
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.experiment == "harper" and self.d != 2:
            raise ValueError("the harper experiment needs d = 2")
        if self.n_list is None:
            object.__setattr__(self, "n_list", default_n_list(self.d))
        ns = tuple(int(n) for n in self.n_list)
        if len(ns) < 3:
            raise ValueError("n_list needs at least 3 entries")
        if any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
            raise ValueError("n_list must be strictly increasing positive integers")
        object.__setattr__(self, "n_list", ns)
        object.__setattr__(self, "t_list", tuple(float(t) for t in self.t_list))
        if self.c is None:
            object.__setattr__(self, "c", 1.0 / (2 * self.d))
        if self.t < 0 or any(t < 0 for t in self.t_list):
            raise ValueError("times must be nonnegative")
        if self.lam <= 0 or self.c <= 0:
            raise ValueError("lambda and c must be positive")
        if self.tail_eps <= 0 or self.tol <= 0:
            raise ValueError("tail_eps and tol must be positive")
        make_test_function(self.test_function, self.d)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        """Copy with the non-``None`` keywords replaced; ``c`` is re-defaulted when ``d`` changes."""
        kw = {k: v for k, v in kw.items() if v is not None}
        if "d" in kw and "n_list" not in kw and kw["d"] != self.d:
            kw["n_list"] = None
        if "d" in kw and "c" not in kw:
            kw["c"] = None
        return dataclasses.replace(self, **kw)


_KEY_ALIASES = {"lambda": "lam"}
_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _convert(name: str, raw: str):
    if name in ("n_list", "t_list"):
        items = [s.strip() for s in raw.split(",") if s.strip()]
        return tuple(int(s) for s in items) if name == "n_list" else tuple(float(s) for s in items)
    if name == "d":
        return int(raw)
    if name in ("experiment", "test_function", "out"):
        return raw
    return float(raw)


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        name = _KEY_ALIASES.get(key, key)
        if name not in _FIELDS or name == "lam" and key != "lambda":
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            values[name] = _convert(name, raw)
        except ValueError:
            raise ValueError(f"line {lineno}: bad value {raw!r} for {key}") from None
    if "experiment" not in values:
        raise ValueError("config must set experiment")
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def make_test_function(spec: str, d: int) -> TestFunction:
    """Build a test function from its id.

    ``gaussian`` or ``gaussian:<width>`` for ``exp(-|x|^2 / (2 width^2))``;
    ``hermite:<a_1>,...,<a_d>`` for ``x^alpha exp(-|x|^2 / 2)``.
    """
    name, _, arg = spec.partition(":")
    if name == "gaussian":
        width = float(arg) if arg else 1.0
        if width <= 0:
            raise ValueError("gaussian width must be positive")
        return gaussian(d, width)
    if name == "hermite":
        alpha = tuple(int(a) for a in arg.split(",")) if arg else (1,) + (0,) * (d - 1)
        if len(alpha) != d or min(alpha) < 0:
            raise ValueError(f"hermite needs {d} nonnegative exponents")
        return hermite_gaussian(alpha)
    raise ValueError(f"unknown test function {spec!r}")
