"""Per-step convergence records shared by the iterative schemes and the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

__all__ = ["Trace", "TRACE_HEADER", "write_trace", "trace_to_csv", "trace_to_json"]

TRACE_HEADER = "k,residual,dist_ref,step_norm"
NO_REF = -1.0  # dist_ref sentinel when the problem has no reference solution


@dataclass
class Trace:
    """Rows of (k_or_t, residual, dist_ref, step_norm); k_or_t nondecreasing."""

    ks: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    dist_refs: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)

    def append(self, k: float, residual: float, dist_ref: float, step_norm: float):
        if self.ks and k < self.ks[-1]:
            raise ValueError("trace index must be nondecreasing")
        if residual < 0 or step_norm < 0:
            raise ValueError("residual and step_norm must be >= 0")
        self.ks.append(float(k))
        self.residuals.append(float(residual))
        self.dist_refs.append(float(dist_ref))
        self.step_norms.append(float(step_norm))

    def __len__(self) -> int:
        return len(self.ks)

    def rows(self):
        return zip(self.ks, self.residuals, self.dist_refs, self.step_norms)


def _fmt(x: float) -> str:
    return format(x, ".17g")


def trace_to_csv(trace: Trace) -> str:
    lines = [TRACE_HEADER]
    for k, r, d, s in trace.rows():
        lines.append(f"{_fmt(k)},{_fmt(r)},{_fmt(d)},{_fmt(s)}")
    return "\n".join(lines) + "\n"


def trace_to_json(trace: Trace) -> str:
    rows = [
        {"k": k, "residual": r, "dist_ref": d, "step_norm": s}
        for k, r, d, s in trace.rows()
    ]
    return json.dumps(rows, indent=None, separators=(",", ":")) + "\n"


def write_trace(trace: Trace, path, fmt: str = "csv") -> None:
    """Write the trace as CSV (header `k,residual,dist_ref,step_norm`) or JSON."""
    if fmt == "csv":
        text = trace_to_csv(trace)
    elif fmt == "json":
        text = trace_to_json(trace)
    else:
        raise ValueError(f"unknown trace format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(text)
