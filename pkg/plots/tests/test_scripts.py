"""End-to-end tests for the per-figure console scripts."""

import shutil
import subprocess

import pytest
from click.testing import CliRunner

pytest.importorskip("rds_plots", reason="plots package not installed")

from rds_plots import cli

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

SCRIPTS = [
    ("plot-trajectory", cli.plot_trajectory, "trajectory"),
    ("plot-sync-rate", cli.plot_sync_rate, "sync_rate"),
    ("plot-mi-time", cli.plot_mi_time, "mi_time"),
    ("plot-mi-eps", cli.plot_mi_eps, "mi_eps"),
    ("plot-n-variability", cli.plot_n_variability, "n_variability"),
]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.mark.parametrize("name,command,kind", SCRIPTS, ids=[s[0] for s in SCRIPTS])
class TestEveryScript:
    def test_writes_nonempty_png_and_svg(self, runner, tmp_path, artifacts, name, command, kind):
        out = tmp_path / "fig"
        result = runner.invoke(
            command,
            ["--in", str(artifacts[kind]), "--out", str(out), "--title", f"{name} demo"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        assert str(out.with_suffix(".png")) in result.output
        assert str(out.with_suffix(".svg")) in result.output
        png = out.with_suffix(".png").read_bytes()
        svg = out.with_suffix(".svg").read_bytes()
        assert png.startswith(PNG_MAGIC) and len(png) > 1000
        assert b"<svg" in svg and len(svg) > 1000

    def test_rerender_from_same_csv_is_byte_identical_svg(
        self, runner, tmp_path, artifacts, name, command, kind
    ):
        blobs = []
        for sub in ("first", "second"):
            out = tmp_path / sub / "fig"
            out.parent.mkdir()
            result = runner.invoke(
                command,
                ["--in", str(artifacts[kind]), "--out", str(out)],
                catch_exceptions=False,
            )
            assert result.exit_code == 0
            blobs.append(out.with_suffix(".svg").read_bytes())
        assert blobs[0] == blobs[1]


class TestErrorHandling:
    def test_missing_input_file_is_a_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            cli.plot_mi_eps,
            ["--in", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "fig")],
        )
        assert result.exit_code == 2
        assert "absent.csv" in result.output

    def test_missing_column_names_the_column(self, runner, tmp_path, artifacts):
        # strip one required column from a real artifact
        lines = artifacts["sync_rate"].read_text().splitlines(keepends=True)
        header = lines[0].replace("inv_p_hat", "renamed")
        broken = tmp_path / "broken.csv"
        broken.write_text(header + "".join(lines[1:]))
        result = runner.invoke(
            cli.plot_sync_rate,
            ["--in", str(broken), "--out", str(tmp_path / "fig")],
        )
        assert result.exit_code == 1
        assert "inv_p_hat" in result.output

    def test_empty_csv_is_an_error(self, runner, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("eps,MI\n")
        result = runner.invoke(
            cli.plot_mi_eps,
            ["--in", str(empty), "--out", str(tmp_path / "fig")],
        )
        assert result.exit_code == 1
        assert "no data rows" in result.output


class TestInstalledEntryPoint:
    def test_console_script_runs_out_of_process(self, tmp_path, artifacts):
        exe = shutil.which("plot-trajectory")
        assert exe is not None, "plot-trajectory not on PATH; install the plots package"
        out = tmp_path / "fig"
        result = subprocess.run(
            [exe, "--in", str(artifacts["trajectory"]), "--out", str(out), "--title", "run"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert out.with_suffix(".png").stat().st_size > 0
        assert out.with_suffix(".svg").stat().st_size > 0
