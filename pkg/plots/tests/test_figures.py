"""Unit tests for CSV parsing, FigureSpec validation and render()."""

import pytest

pytest.importorskip("rds_plots", reason="plots package not installed")

from rds_plots import (
    EmptyCsvError,
    FigureSpec,
    KINDS,
    MissingColumnError,
    PlotsError,
    read_table,
    render,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def write_csv(path, text):
    path.write_text(text)
    return path


class TestReadTable:
    def test_parses_header_rows_and_footer(self, tmp_path):
        path = write_csv(
            tmp_path / "t.csv",
            "a,b\n1,2\n3,\n# slope = 0.25\n# fit_model = mean of pointwise ratios\n",
        )
        table = read_table(path)
        assert table.header == ("a", "b")
        assert table.rows == (("1", "2"), ("3", ""))
        assert table.footer["slope"] == "0.25"
        # values may contain spaces; only the first " = " splits
        assert table.footer["fit_model"] == "mean of pointwise ratios"
        assert table.footer_float("slope") == 0.25
        assert table.footer_float("fit_model") is None
        assert table.footer_float("absent") is None

    def test_numeric_skips_rows_with_empty_cells(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", "x,y\n0.0,\n1.0,2.0\n2.5,5.0\n")
        table = read_table(path)
        assert table.numeric("x", "y") == [(1.0, 2.0), (2.5, 5.0)]
        assert table.numeric("x") == [(0.0,), (1.0,), (2.5,)]

    def test_missing_column_is_a_named_error(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", "x,y\n1,2\n")
        table = read_table(path)
        with pytest.raises(MissingColumnError) as exc:
            table.column("z")
        assert exc.value.column == "z"
        assert "z" in str(exc.value)

    def test_header_only_file_is_empty(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", "x,y\n")
        with pytest.raises(EmptyCsvError):
            read_table(path)

    def test_comment_only_file_is_empty(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", "# slope = 1.0\n")
        with pytest.raises(EmptyCsvError):
            read_table(path)


class TestRenderValidation:
    def test_unknown_kind_rejected(self, tmp_path):
        csv_path = write_csv(tmp_path / "t.csv", "x\n1\n")
        spec = FigureSpec(kind="nope", inputs=(csv_path,), out=tmp_path / "fig")
        with pytest.raises(PlotsError, match="unknown figure kind"):
            render(spec)

    def test_no_inputs_rejected(self, tmp_path):
        spec = FigureSpec(kind="mi_eps", inputs=(), out=tmp_path / "fig")
        with pytest.raises(PlotsError, match="no input CSV"):
            render(spec)

    @pytest.mark.parametrize("kind", sorted(KINDS))
    def test_required_column_enforced_before_drawing(self, tmp_path, kind):
        # header misses every required column, so validation must trip
        csv_path = write_csv(tmp_path / "t.csv", "unrelated\n1\n")
        out = tmp_path / "fig"
        spec = FigureSpec(kind=kind, inputs=(csv_path,), out=out)
        with pytest.raises(MissingColumnError) as exc:
            render(spec)
        assert exc.value.column in KINDS[kind].required
        assert not out.with_suffix(".png").exists()
        assert not out.with_suffix(".svg").exists()

    def test_empty_input_rejected(self, tmp_path):
        csv_path = write_csv(tmp_path / "t.csv", "eps,MI\n")
        spec = FigureSpec(kind="mi_eps", inputs=(csv_path,), out=tmp_path / "fig")
        with pytest.raises(EmptyCsvError):
            render(spec)


class TestRenderOutput:
    def test_writes_nonempty_png_and_svg(self, tmp_path, artifacts):
        spec = FigureSpec(
            kind="mi_eps", inputs=(artifacts["mi_eps"],), out=tmp_path / "fig"
        )
        png, svg = render(spec)
        assert png == tmp_path / "fig.png"
        assert svg == tmp_path / "fig.svg"
        assert png.read_bytes().startswith(PNG_MAGIC)
        assert len(png.read_bytes()) > 1000
        assert b"<svg" in svg.read_bytes()
        assert len(svg.read_bytes()) > 1000

    def test_out_suffix_is_replaced(self, tmp_path, artifacts):
        spec = FigureSpec(
            kind="mi_eps", inputs=(artifacts["mi_eps"],), out=tmp_path / "fig.png"
        )
        png, svg = render(spec)
        assert png.name == "fig.png"
        assert svg.name == "fig.svg"

    def test_rerender_is_byte_identical_svg(self, tmp_path, artifacts):
        def once(sub):
            spec = FigureSpec(
                kind="sync_rate",
                inputs=(artifacts["sync_rate"],),
                out=tmp_path / sub / "fig",
                title="sweep",
            )
            _, svg = render(spec)
            return svg.read_bytes()

        assert once("a") == once("b")

    def test_labels_title_and_log_scales_apply(self, tmp_path, artifacts):
        spec = FigureSpec(
            kind="mi_eps",
            inputs=(artifacts["mi_eps"],),
            out=tmp_path / "fig",
            title="custom title",
            xlabel="noise",
            ylabel="information",
            logy=True,
        )
        _, svg = render(spec)
        text = svg.read_text()
        assert "custom title" in text
        assert "noise" in text
        assert "information" in text

    @pytest.mark.parametrize("kind", sorted(KINDS))
    def test_every_kind_renders_its_artifact(self, tmp_path, artifacts, kind):
        spec = FigureSpec(kind=kind, inputs=(artifacts[kind],), out=tmp_path / kind)
        png, svg = render(spec)
        assert png.stat().st_size > 0
        assert svg.stat().st_size > 0

    def test_creates_missing_output_directory(self, tmp_path, artifacts):
        out = tmp_path / "deep" / "nested" / "fig"
        spec = FigureSpec(kind="mi_time", inputs=(artifacts["mi_time"],), out=out)
        png, _ = render(spec)
        assert png.is_file()
