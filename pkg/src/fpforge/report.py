"""CSV and manifest emission for CLI runs.

All CSVs: comma separator, `.` decimal point, UTF-8, one header row,
floats at 17 significant digits so reruns are byte-identical.
"""

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .space import write_csv as write_solution_csv  # re-export; same format


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_report_csv(path, report, membership=None, a5_margins=None):
    """Per-iteration report: iter,residual,membership_ok,a5_margin."""
    rows = []
    for i, resid in enumerate(report.residual_history):
        member = None if membership is None else membership[i] if i < len(membership) else None
        margin = None if a5_margins is None else a5_margins[i] if i < len(a5_margins) else None
        rows.append((i, float(resid), member, margin))
    write_rows(path, ["iter", "residual", "membership_ok", "a5_margin"], rows)


def write_certificates_csv(path, certificates):
    rows = [(c.kind, c.verdict, c.radius, float(c.margin)) for c in certificates]
    write_rows(path, ["kind", "verdict", "radius", "margin"], rows)


def write_geometry_csv(path, rows):
    """rows: iterable of (quantity, value, margin)."""
    write_rows(path, ["quantity", "value", "margin"], rows)


@dataclass
class RunManifest:
    subcommand: str
    params: dict
    seed: int
    version: str = __version__
    wall_clock_s: float = 0.0
    certificates: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    status: str = "ok"
    error: str = None
    exit_code: int = 0


def _jsonable(value):
    if isinstance(value, tuple) and len(value) == 2 and isinstance(value[0], str):
        name, params = value
        if isinstance(params, dict):
            return {"preset": name, "params": params}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return repr(value)


def write_manifest(out_dir, manifest):
    payload = {
        "tool": "fpforge",
        "version": manifest.version,
        "subcommand": manifest.subcommand,
        "params": _jsonable(manifest.params),
        "seed": manifest.seed,
        "wall_clock_s": manifest.wall_clock_s,
        "certificates": [
            {"kind": c.kind, "verdict": c.verdict, "radius": c.radius, "margin": c.margin}
            for c in manifest.certificates
        ],
        "outputs": manifest.outputs,
        "status": manifest.status,
        "error": manifest.error,
        "exit_code": manifest.exit_code,
    }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return str(path)


class Stopwatch:
    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._t0
