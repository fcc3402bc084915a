"""Figure recipe for finished runs.

The solve and certify paths emit CSV only; this module is the documented
recipe that turns those CSVs into PNG figures, written next to them.
Invoked as `fpforge plot RUN_DIR` or called directly.
"""

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import FpforgeError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_FIGSIZE = (6.0, 6.0 * _GOLDEN)


def _read_table(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


def _save(fig, path, dpi):
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def plot_solution(csv_path, out_path, dpi=150, bound_csv=None):
    header, rows = _read_table(csv_path)
    data = np.array([[float(x) for x in r] for r in rows])
    t = data[:, 0]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for j, name in enumerate(header[1:], start=1):
        ax.plot(t, data[:, j], label=name)
    if bound_csv is not None and Path(bound_csv).exists():
        _, brows = _read_table(bound_csv)
        b = np.array([[float(x) for x in r] for r in brows])
        ax.plot(b[:, 0], b[:, 1], "k--", label="tube bound")
        ax.plot(b[:, 0], -b[:, 1], "k--")
    ax.set_xlabel(header[0])
    ax.set_ylabel("value")
    ax.legend(loc="best", fontsize=8)
    _save(fig, out_path, dpi)


def plot_residuals(csv_path, out_path, dpi=150):
    _, rows = _read_table(csv_path)
    its = [int(r[0]) for r in rows]
    res = [float(r[1]) for r in rows]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogy(its, [max(r, 1e-300) for r in res], marker="o", ms=3)
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("residual")
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, out_path, dpi)


def plot_run(run_dir, dpi=150):
    """Render figures for every recognized CSV in a run directory.

    Returns the list of files written.  Raises if the directory holds
    nothing plottable.
    """
    run = Path(run_dir)
    if not run.is_dir():
        raise FpforgeError(f"not a run directory: {run_dir}")
    written = []
    sol = run / "solution.csv"
    if sol.exists():
        out = run / "solution.png"
        plot_solution(sol, out, dpi=dpi, bound_csv=run / "bound.csv")
        written.append(str(out))
    rep = run / "report.csv"
    if rep.exists():
        _, rows = _read_table(rep)
        if rows:
            out = run / "residuals.png"
            plot_residuals(rep, out, dpi=dpi)
            written.append(str(out))
    if not written:
        raise FpforgeError(f"no plottable CSVs (solution.csv, report.csv) in {run_dir}")
    return written
