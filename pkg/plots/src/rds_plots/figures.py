"""Deterministic figure rendering over rdsync CSV artifacts.

Each figure kind reads one CSV produced by the ``rdsync`` command line and
draws it as-is: fitted and predicted overlay lines come from columns or
footer values already present in the file, never from recomputation.
Rendering is deterministic, so writing the same figure from the same CSV
twice yields byte-identical SVG output: the style is fixed, the SVG hash
salt is pinned, and no timestamps are embedded.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "EmptyCsvError",
    "FigureSpec",
    "KINDS",
    "MissingColumnError",
    "PlotsError",
    "Table",
    "read_table",
    "render",
]

# One salt for every figure keeps SVG element ids stable across runs.
SVG_HASHSALT = "rds-plots"
FIGSIZE = (7.0, 4.5)
PNG_DPI = 150


class PlotsError(Exception):
    """Base class for figure rendering failures."""


class EmptyCsvError(PlotsError):
    """Raised when an input CSV has a header but no data rows."""

    def __init__(self, path: Path):
        super().__init__(f"no data rows in {path}")
        self.path = path


class MissingColumnError(PlotsError):
    """Raised when a figure kind needs a column the CSV does not have."""

    def __init__(self, column: str, path: Path):
        super().__init__(f"column '{column}' missing from {path}")
        self.column = column
        self.path = path


@dataclass(frozen=True)
class Table:
    """Parsed CSV artifact: header, string-valued rows, footer values.

    Footer lines of the form ``# key = value`` are collected into
    ``footer``; all cell values stay as written so the table never loses
    information the figure might want to echo verbatim.
    """

    path: Path
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    footer: dict[str, str]

    def column(self, name: str) -> list[str]:
        if name not in self.header:
            raise MissingColumnError(name, self.path)
        i = self.header.index(name)
        return [row[i] for row in self.rows]

    def numeric(self, *names: str) -> list[tuple[float, ...]]:
        """Row-aligned float tuples for ``names``, skipping rows where any
        requested cell is empty (optional quantities are written as '')."""
        cols = [self.column(n) for n in names]
        out = []
        for cells in zip(*cols):
            if any(c == "" for c in cells):
                continue
            out.append(tuple(float(c) for c in cells))
        return out

    def footer_float(self, key: str) -> float | None:
        raw = self.footer.get(key)
        if raw is None:
            return None
        try:
            return float(raw)
        except ValueError:
            return None


def read_table(path: Path) -> Table:
    """Parse a CSV artifact, splitting trailing comment lines into footer
    key/value pairs. Raises EmptyCsvError when no data rows remain."""
    path = Path(path)
    header: tuple[str, ...] | None = None
    rows: list[tuple[str, ...]] = []
    footer: dict[str, str] = {}
    with path.open(newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                text = line[1:].strip()
                key, sep, value = text.partition(" = ")
                if sep:
                    footer[key.strip()] = value.strip()
                continue
            if not line.strip():
                continue
            (cells,) = csv.reader([line])
            if header is None:
                header = tuple(cells)
            else:
                rows.append(tuple(cells))
    if header is None or not rows:
        raise EmptyCsvError(path)
    return Table(path=path, header=header, rows=tuple(rows), footer=footer)


@dataclass(frozen=True)
class FigureSpec:
    """Everything needed to render one figure from CSV artifacts.

    Invariant: every column a kind requires must exist in the input CSV
    header; render() checks this before touching the canvas.
    """

    kind: str
    inputs: tuple[Path, ...]
    out: Path
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    logx: bool = False
    logy: bool = False


# ---------------------------------------------------------------------------
# figure kinds


def _draw_trajectory(ax: plt.Axes, table: Table) -> None:
    data = np.array(table.numeric("t", "x", "y", "synced"))
    t, x, y, synced = data.T
    lo = min(x.min(), y.min()) - 0.5
    hi = max(x.max(), y.max()) + 0.5
    desync = synced < 0.5
    if desync.any():
        ax.fill_between(
            t,
            lo,
            hi,
            where=desync,
            step="post",
            color="0.85",
            linewidth=0,
            label="desynchronized",
        )
    ax.step(t, x, where="post", linewidth=1.2, label="leader x")
    ax.step(t, y, where="post", linewidth=1.2, alpha=0.8, label="follower y")
    ax.set_ylim(lo, hi)
    ax.set_yticks(np.unique(np.concatenate([x, y])))
    ax.legend(loc="upper right")


def _draw_sync_rate(ax: plt.Axes, table: Table) -> None:
    pts = table.numeric("eps", "inv_p_hat")
    if pts:
        xs, ys = zip(*pts)
        ax.plot(xs, ys, "o", color="C0", label="1/p_hat (empirical)")
    slope = table.footer_float("fitted_slope")
    if slope is not None:
        line = table.numeric("eps", "eps_eff")
        xs = [eps for eps, _ in line]
        ys = [1.0 + slope * eps_eff for _, eps_eff in line]
        ax.plot(xs, ys, "-", color="C1", label=f"fit: 1 + {slope:.4g} eps_eff")
    pred = [(eps, 1.0 / r) for eps, r in table.numeric("eps", "predicted_rate") if r > 0.0]
    if pred:
        xs, ys = zip(*pred)
        ax.plot(xs, ys, "--", color="C2", label="renewal prediction")
    ax.legend(loc="upper left")


def _draw_mi_time(ax: plt.Axes, table: Table) -> None:
    pts = table.numeric("n", "MI")
    ns, mi = zip(*pts)
    ax.plot(ns, mi, "-", color="C0", linewidth=1.4)
    slope = table.footer_float("slope")
    if slope is None:
        tail = table.numeric("slope")
        if tail:
            slope = tail[-1][0]
    if slope is not None:
        ax.annotate(
            f"slope = {slope:.6g} nats/step",
            xy=(0.04, 0.92),
            xycoords="axes fraction",
        )


def _draw_mi_eps(ax: plt.Axes, table: Table) -> None:
    pts = table.numeric("eps", "MI")
    xs, ys = zip(*pts)
    ax.plot(xs, ys, "o-", color="C0")


def _draw_n_variability(ax: plt.Axes, table: Table) -> None:
    pts = table.numeric("eps", "diag_min", "diag_mean", "diag_max")
    eps = [p[0] for p in pts]
    for idx, (name, color) in enumerate(
        [("diag_min", "C0"), ("diag_mean", "C1"), ("diag_max", "C2")], start=1
    ):
        ax.scatter(eps, [p[idx] for p in pts], s=12, alpha=0.6, color=color, label=name)
    ax.legend(loc="best")


@dataclass(frozen=True)
class Kind:
    required: tuple[str, ...]
    draw: Callable[[plt.Axes, Table], None]
    xlabel: str
    ylabel: str


KINDS: dict[str, Kind] = {
    "trajectory": Kind(
        required=("t", "x", "y", "synced"),
        draw=_draw_trajectory,
        xlabel="step",
        ylabel="state",
    ),
    "sync_rate": Kind(
        required=("eps", "eps_eff", "inv_p_hat", "predicted_rate"),
        draw=_draw_sync_rate,
        xlabel="eps",
        ylabel="1 / p_hat",
    ),
    "mi_time": Kind(
        required=("n", "MI"),
        draw=_draw_mi_time,
        xlabel="path length n",
        ylabel="mutual information (nats)",
    ),
    "mi_eps": Kind(
        required=("eps", "MI"),
        draw=_draw_mi_eps,
        xlabel="eps",
        ylabel="mutual information (nats)",
    ),
    "n_variability": Kind(
        required=("eps", "diag_min", "diag_mean", "diag_max"),
        draw=_draw_n_variability,
        xlabel="eps",
        ylabel="diagonal of noise kernel",
    ),
}


def render(spec: FigureSpec) -> tuple[Path, Path]:
    """Render one figure and write it next to ``spec.out`` as PNG and SVG.

    Inputs are validated first: every CSV must parse, have data rows, and
    contain the columns the kind requires. The paths of the two written
    files are returned (.png first). Rendering never recomputes a modeled
    quantity; overlays use values carried by the CSV itself.
    """
    kind = KINDS.get(spec.kind)
    if kind is None:
        raise PlotsError(f"unknown figure kind '{spec.kind}'")
    if not spec.inputs:
        raise PlotsError("figure spec has no input CSV")
    tables = [read_table(p) for p in spec.inputs]
    for table in tables:
        for column in kind.required:
            if column not in table.header:
                raise MissingColumnError(column, table.path)

    png = spec.out.with_suffix(".png")
    svg = spec.out.with_suffix(".svg")
    png.parent.mkdir(parents=True, exist_ok=True)

    with plt.rc_context({"svg.hashsalt": SVG_HASHSALT}):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        try:
            kind.draw(ax, tables[0])
            ax.set_xlabel(spec.xlabel or kind.xlabel)
            ax.set_ylabel(spec.ylabel or kind.ylabel)
            if spec.title:
                ax.set_title(spec.title)
            if spec.logx:
                ax.set_xscale("log")
            if spec.logy:
                ax.set_yscale("log")
            fig.tight_layout()
            # Strip the writer metadata both backends add; timestamps and
            # library versions would break byte-for-byte reproducibility.
            fig.savefig(png, dpi=PNG_DPI, metadata={"Software": None})
            fig.savefig(svg, metadata={"Date": None})
        finally:
            plt.close(fig)
    return png, svg
