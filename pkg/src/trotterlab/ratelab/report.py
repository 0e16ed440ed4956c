"""CSV tables and ``key=value`` summaries for experiment results.

Floats are written with ``%.17g`` so repeated runs of the same config give
byte-identical files.
"""
from __future__ import annotations

import math
from pathlib import Path

from .experiments import BoundTable, RateReport

__all__ = ["RATE_HEADER", "TABLE_HEADER", "format_csv", "format_summary", "write_csv",
           "write_summary", "summary_path"]

RATE_HEADER = "n,k,t,err_lo,err_hi,bound_total,term1,term2,term3,term4,ok"
TABLE_HEADER = ("t,n,k,M,omega,lambda,phi,psi,psi_lambda,term1,term2,term3,term4,"
                "general_total,simplified_total,ok")


def _num(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    return "nan" if math.isnan(x) else "%.17g" % x


def _flag(ok) -> str:
    return "na" if ok is None else ("true" if ok else "false")


def format_csv(result) -> str:
    lines = []
    if isinstance(result, BoundTable):
        lines.append(TABLE_HEADER)
        for r in result.rows:
            inp, g = r["inputs"], r["general"]
            fields = [r["t"], r["n"], r["k"], inp.M, inp.omega, inp.lam, inp.phi, inp.psi,
                      inp.psi_lambda, *g.terms, g.total, r["simplified"]]
            lines.append(",".join(_num(v) for v in fields) + "," + _flag(r["ok"]))
    else:
        lines.append(RATE_HEADER)
        for r in result.rows:
            terms = r.bound.terms if r.bound is not None else (math.nan,) * 4
            fields = [r.n, r.k, r.t, r.err.lo, r.err.hi, r.bound_total, *terms]
            lines.append(",".join(_num(v) for v in fields) + "," + _flag(r.ok))
    return "\n".join(lines) + "\n"


def format_summary(result) -> str:
    cfg = result.config
    out = [f"experiment={result.experiment}", f"d={cfg.d}", f"c={_num(cfg.c)}",
           f"lambda={_num(cfg.lam)}", f"rows={len(result.rows)}"]
    if isinstance(result, RateReport):
        out += [f"t={_num(cfg.t)}", f"slope={_num(result.slope)}",
                f"intercept={_num(result.intercept)}", f"residual={_num(result.residual)}",
                f"max_ratio={_num(result.max_ratio)}",
                f"conclusive={_flag(result.conclusive)}"]
        for key, val in result.extras.items():
            out.append(f"{key}={val if isinstance(val, str) else _num(val)}")
    else:
        out += ["slope=nan", "intercept=nan", "max_ratio=nan"]
    for name, ok in result.gates.items():
        out.append(f"gate_{name}={'pass' if ok else 'fail'}")
    out.append(f"passed={_flag(result.passed)}")
    return "\n".join(out) + "\n"


def summary_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".summary.txt")


def write_csv(result, path) -> Path:
    path = Path(path)
    path.write_text(format_csv(result))
    return path


def write_summary(result, path) -> Path:
    path = Path(path)
    path.write_text(format_summary(result))
    return path
