"""One console script per figure kind.

Every command takes the same three flags: --in (CSV artifact), --out
(image path; the .png/.svg suffix is replaced, both files are written)
and an optional --title. Batch use only, nothing interactive.
"""

from __future__ import annotations

from pathlib import Path

import click

from .figures import FigureSpec, PlotsError, render


def _render_one(kind: str, input_csv: str, out: str, title: str | None) -> None:
    spec = FigureSpec(kind=kind, inputs=(Path(input_csv),), out=Path(out), title=title)
    try:
        png, svg = render(spec)
    except PlotsError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(str(png))
    click.echo(str(svg))


def _figure_command(kind: str, help_text: str) -> click.Command:
    @click.command(name=f"plot-{kind.replace('_', '-')}", help=help_text)
    @click.option(
        "--in",
        "input_csv",
        required=True,
        type=click.Path(exists=True, dir_okay=False),
        help="Input CSV artifact.",
    )
    @click.option(
        "--out",
        required=True,
        type=click.Path(dir_okay=False, writable=True),
        help="Output image path; .png and .svg siblings are written.",
    )
    @click.option("--title", default=None, help="Optional figure title.")
    def command(input_csv: str, out: str, title: str | None) -> None:
        _render_one(kind, input_csv, out, title)

    return command


plot_trajectory = _figure_command(
    "trajectory",
    "Raster of a coupled trajectory from trajectory.csv: leader and "
    "follower state paths with desynchronized stretches shaded.",
)

plot_sync_rate = _figure_command(
    "sync_rate",
    "1/p_hat against eps from sync_rate.csv, with the fitted slope line "
    "and the renewal prediction overlaid from values in the file.",
)

plot_mi_time = _figure_command(
    "mi_time",
    "Mutual information against path length from mi_vs_time.csv, "
    "annotated with the asymptotic slope recorded in the file.",
)

plot_mi_eps = _figure_command(
    "mi_eps",
    "Mutual information against noise amplitude from mi_vs_eps.csv.",
)

plot_n_variability = _figure_command(
    "n_variability",
    "Scatter of noise kernel diagonal min/mean/max against eps from "
    "n_variability.csv, one point per random generator draw.",
)
