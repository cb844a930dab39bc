import json
from pathlib import Path

import pytest

from coexfigs.cli import main
from coexfigs.render import render
from coexfigs.spec import FIGURE_KINDS, FigureError, FigureSpec, load_specs

CURVE_HEADER = "scenario,engine,side,metric,threshold,value,stderr\n"


@pytest.fixture()
def curve_csv(tmp_path):
    rows = [CURVE_HEADER]
    for scenario in ("continuous_lte", "wifi_only"):
        rows.append(f"{scenario},analytic,wifi,map,0.0,0.62,\n")
        rows.append(f"{scenario},analytic,lte,map,0.0,0.81,\n")
        for t, v in ((-10.0, 0.9), (0.0, 0.55), (10.0, 0.2)):
            rows.append(f"{scenario},analytic,wifi,sinr_coverage,{t},{v},\n")
            rows.append(f"{scenario},monte-carlo,wifi,sinr_coverage,{t},{v - 0.01},0.005\n")
            rows.append(f"{scenario},analytic,wifi,dst,{t},{v * 4e-4},\n")
        for r, v in ((5e6, 0.8), (15e6, 0.45), (30e6, 0.12)):
            rows.append(f"{scenario},analytic,lte,rate_coverage,{r},{v},\n")
    path = tmp_path / "curves.csv"
    path.write_text("".join(rows))
    return path


@pytest.fixture()
def cdf_csv(tmp_path):
    rows = ["lambda_l_per_km2,interference_kind,dbm,cdf\n"]
    for lam in (200.0, 600.0):
        for kind, offset in (("total", 0.0), ("strongest", 0.02)):
            for dbm in range(-100, -39, 5):
                cdf = min(1.0, max(0.0, (dbm + 100) / 55.0 + offset))
                rows.append(f"{lam},{kind},{float(dbm)},{cdf}\n")
    path = tmp_path / "cdf.csv"
    path.write_text("".join(rows))
    return path


def spec_for(kind, csv_path, out_name, side=None):
    return FigureSpec(kind=kind, csv_paths=[str(csv_path)], out_name=out_name, side=side)


class TestRenderKinds:
    @pytest.mark.parametrize("kind,side", [
        ("map-surface", None),
        ("coverage-curves", "wifi"),
        ("dst-panel", "wifi"),
        ("rate-panel", "lte"),
    ])
    def test_curve_kinds_produce_png_and_svg(self, curve_csv, tmp_path, kind, side):
        out = render(spec_for(kind, curve_csv, f"fig_{kind}", side), str(tmp_path / "figs"))
        assert len(out) == 2
        for path in out:
            assert Path(path).exists()
            assert Path(path).stat().st_size > 0
        assert out[0].endswith(".png") and out[1].endswith(".svg")

    def test_cdf_pair(self, cdf_csv, tmp_path):
        out = render(spec_for("cdf-pair", cdf_csv, "fig_cdf"), str(tmp_path))
        assert all(Path(p).exists() for p in out)

    def test_all_kinds_covered(self):
        assert set(FIGURE_KINDS) == {
            "map-surface", "coverage-curves", "dst-panel", "rate-panel", "cdf-pair"
        }


class TestDeterminism:
    def test_byte_identical_renders(self, curve_csv, tmp_path):
        spec = spec_for("coverage-curves", curve_csv, "det", "wifi")
        first = render(spec, str(tmp_path / "a"))
        second = render(spec, str(tmp_path / "b"))
        for f, s in zip(first, second):
            assert Path(f).read_bytes() == Path(s).read_bytes()


class TestErrors:
    def test_empty_csv_no_file_written(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(CURVE_HEADER)
        out_dir = tmp_path / "out"
        with pytest.raises(FigureError):
            render(spec_for("coverage-curves", empty, "nope", "wifi"), str(out_dir))
        assert not (out_dir / "nope.png").exists()

    def test_wrong_columns(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(FigureError, match="expected columns"):
            render(spec_for("coverage-curves", bad, "nope"), str(tmp_path))

    def test_missing_metric(self, curve_csv, tmp_path):
        spec = FigureSpec(kind="rate-panel", csv_paths=[str(curve_csv)], out_name="x", side="wifi")
        with pytest.raises(FigureError, match="no rows"):
            render(spec, str(tmp_path))

    def test_unknown_kind_rejected(self):
        with pytest.raises(FigureError, match="unknown figure kind"):
            FigureSpec(kind="pie", csv_paths=["x.csv"], out_name="x")

    def test_no_inputs_rejected(self):
        with pytest.raises(FigureError, match="at least one"):
            FigureSpec(kind="dst-panel", csv_paths=[], out_name="x")


class TestCli:
    def test_end_to_end(self, curve_csv, cdf_csv, tmp_path):
        spec_doc = {
            "figures": [
                {"kind": "coverage-curves", "csv": [str(curve_csv)], "side": "wifi", "out": "cov"},
                {"kind": "cdf-pair", "csv": [str(cdf_csv)], "out": "cdf"},
            ]
        }
        spec_path = tmp_path / "figs.json"
        spec_path.write_text(json.dumps(spec_doc))
        out_dir = tmp_path / "rendered"
        assert main(["--spec", str(spec_path), "--out", str(out_dir)]) == 0
        assert (out_dir / "cov.png").exists()
        assert (out_dir / "cdf.svg").exists()

    def test_error_exit_code(self, tmp_path):
        spec_path = tmp_path / "figs.json"
        spec_path.write_text(json.dumps({"figures": [{"kind": "dst-panel", "csv": ["missing.csv"], "out": "x"}]}))
        assert main(["--spec", str(spec_path), "--out", str(tmp_path)]) == 2

    def test_load_specs_single_object(self, tmp_path, curve_csv):
        spec_path = tmp_path / "one.json"
        spec_path.write_text(json.dumps({"kind": "map-surface", "csv": [str(curve_csv)], "out": "m"}))
        specs = load_specs(str(spec_path))
        assert len(specs) == 1 and specs[0].kind == "map-surface"
