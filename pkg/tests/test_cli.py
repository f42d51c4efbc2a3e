"""End-to-end checks of the command-line runner: exit codes, CSV layouts,
seed precedence, config files, manifests, and the SVG plotter."""

import json
from pathlib import Path

import numpy as np
import pytest

from ridgeline.cli import emit_plot, main, read_csv
from ridgeline.network import eval_shallow
from ridgeline.cnn_compiler import read_net_text


def run(args, out_dir):
    return main([*args, "--out-dir", str(out_dir)])


def table(path):
    names, rows = read_csv(Path(path))
    return names, rows


def make_net_file(out_dir, n_terms=6):
    """Small k=1 shallow net on disk, produced through the CLI itself."""
    code = run(["discretize", "--target", "abs", "--d", "1", "--k", "1",
                "--m", "8", "--n-terms", str(n_terms), "--out", "net.txt"],
               out_dir)
    assert code == 0
    return out_dir / "net.txt"


class TestExitCodes:
    def test_success_is_zero(self, tmp_path):
        """A valid run returns 0."""
        assert run(["spectrum", "--k", "1", "--d", "1", "--nmax", "4"],
                   tmp_path) == 0

    def test_missing_required_flag_is_usage_error(self, tmp_path):
        """Omitting a required flag exits with code 2."""
        assert run(["spectrum", "--k", "1", "--d", "1"], tmp_path) == 2

    def test_unknown_subcommand_is_usage_error(self, tmp_path):
        """An unknown subcommand exits with code 2."""
        assert run(["no-such-thing"], tmp_path) == 2

    def test_invalid_value_is_usage_error(self, tmp_path):
        """Semantic validation failures exit with code 2."""
        assert run(["regress", "--family", "shallow", "--class", "holder",
                    "--d", "1", "--n-list", "64,128", "--trials", "2"],
                   tmp_path) == 2

    def test_numerical_failure_is_code_three(self, tmp_path):
        """A factorization that cannot fit the depth exits with code 3."""
        net = make_net_file(tmp_path)
        assert run(["cnn-compile", "--input", str(net), "--s", "2",
                    "--L", "1"], tmp_path) == 3

    def test_help_exits_cleanly(self, capsys):
        assert main(["--help"]) == 0
        assert "usage" in capsys.readouterr().out


class TestSpectrumCommand:
    def test_structural_zero_row(self, tmp_path):
        """For k=1, d=1 the n=3 row is flagged as a structural zero."""
        run(["spectrum", "--k", "1", "--d", "1", "--nmax", "8"], tmp_path)
        names, rows = table(tmp_path / "spectrum.csv")
        assert names == ["n", "closed", "quad", "abs_diff", "is_zero"]
        row = dict(zip(names, rows[3]))
        assert row["n"] == "3"
        assert row["is_zero"] == "true"
        assert row["closed"] == "0"

    def test_closed_and_quadrature_agree(self, tmp_path):
        """Outside 1 <= n <= k the two routes differ by at most 1e-9."""
        run(["spectrum", "--k", "2", "--d", "2", "--nmax", "12"], tmp_path)
        names, rows = table(tmp_path / "spectrum.csv")
        for row in rows:
            rec = dict(zip(names, row))
            if 1 <= int(rec["n"]) <= 2:
                assert rec["closed"] == "nan"
            else:
                assert float(rec["abs_diff"]) <= 1e-9


class TestProjectCommand:
    def test_error_decreases_with_degree(self, tmp_path):
        """Projection sup error shrinks along an increasing m list."""
        run(["project", "--target", "abs", "--d", "1", "--k", "1",
             "--m-list", "4,8,16"], tmp_path)
        names, rows = table(tmp_path / "project.csv")
        assert names == ["m", "sup_error", "gamma_l2", "gamma_l1"]
        errs = [float(r[1]) for r in rows]
        assert errs[0] > errs[1] > errs[2]

    def test_plot_flag_writes_svg(self, tmp_path):
        run(["project", "--target", "abs", "--d", "1", "--k", "1",
             "--m-list", "4,8", "--plot"], tmp_path)
        assert (tmp_path / "project.svg").exists()


class TestApproxSweepCommand:
    def test_columns_and_running_slope(self, tmp_path):
        """First row has slope_so_far nan; later rows carry a number."""
        run(["approx-sweep", "--target", "abs", "--d", "1", "--k", "1",
             "--m-list", "4,8,16", "--trials", "2"], tmp_path)
        names, rows = table(tmp_path / "approx_sweep.csv")
        assert names == ["m", "N", "M", "sup_err_mean", "sup_err_std",
                         "slope_so_far"]
        assert rows[0][5] == "nan"
        assert np.isfinite(float(rows[1][5]))

    def test_explicit_n_list_must_match(self, tmp_path):
        """Mismatched --n-list length is a usage error."""
        assert run(["approx-sweep", "--target", "abs", "--d", "1", "--k", "1",
                    "--m-list", "4,8", "--n-list", "5", "--trials", "2"],
                   tmp_path) == 2


class TestDiscretizeCommand:
    def test_writes_loadable_network(self, tmp_path):
        """The emitted text file parses back into a a working network."""
        net_path = make_net_file(tmp_path, n_terms=10)
        net = read_net_text(net_path.read_text())
        assert net.n_units == 10
        x = np.zeros((1, 1))
        assert np.isfinite(eval_shallow(net, x)).all()
        names, rows = table(tmp_path / "discretize.csv")
        assert names == ["n_terms", "variation", "sup_gap_vs_projection"]
        assert rows[0][0] == "10"


class TestCnnCompileCommand:
    def test_report_and_compiled_file(self, tmp_path):
        """Compilation reports a tiny gap and writes a loadable CNN file."""
        net_path = make_net_file(tmp_path)
        assert run(["cnn-compile", "--input", str(net_path), "--s", "2"],
                   tmp_path) == 0
        names, rows = table(tmp_path / "cnn_report.csv")
        assert names == ["n_points", "max_gap", "mean_gap", "residual",
                         "param_count"]
        rec = dict(zip(names, rows[0]))
        assert rec["n_points"] == "500"
        assert float(rec["max_gap"]) <= 1e-9
        cnn = read_net_text((tmp_path / "compiled_net.txt").read_text())
        assert cnn.param_count == int(rec["param_count"])


class TestRegressCommand:
    def test_column_layout(self, tmp_path):
        """Risk table carries predicted and fitted exponents on every row."""
        assert run(["regress", "--family", "shallow", "--class", "variation",
                    "--d", "1", "--n-list", "64,128,256", "--trials", "2"],
                   tmp_path) == 0
        names, rows = table(tmp_path / "regress.csv")
        assert names == ["n", "N_or_W_or_L", "M", "B", "risk_mean",
                         "risk_std", "predicted_exponent", "fitted_slope",
                         "slope_stderr"]
        assert [r[0] for r in rows] == ["64", "128", "256"]
        predicted = {r[6] for r in rows}
        assert len(predicted) == 1     # same exponent repeated per row
        assert float(predicted.pop()) == pytest.approx(0.8)


class TestPredictRatesCommand:
    def test_frozen_shallow_holder_cell(self, tmp_path, capsys):
        """d=1, alpha=1 prints the shallow/holder regression exponent 2/3."""
        assert run(["predict-rates", "--d", "1", "--alpha", "1"],
                   tmp_path) == 0
        out = capsys.readouterr().out
        line = next(ln for ln in out.splitlines()
                    if ln.startswith("shallow,holder"))
        assert "2/3" in line

    def test_rates_are_exact_fractions(self, tmp_path):
        """CSV cells hold fraction strings, not decimals."""
        run(["predict-rates", "--d", "2", "--alpha", "3/2"], tmp_path)
        names, rows = table(tmp_path / "predict_rates.csv")
        rec = dict(zip(names, rows[0]))
        assert rec["family"] == "shallow"
        assert rec["regression_exponent"] == "3/5"   # 2a/(d+2a) at a=3/2, d=2
        variation = dict(zip(names, rows[1]))
        assert variation["approx_budget_exponent"] == ""


class TestSeedPrecedence:
    def read_seed(self, out_dir):
        body = json.loads((out_dir / "spectrum_manifest.json").read_text())
        return body["seed"]

    def test_default_seed_is_zero(self, tmp_path, monkeypatch):
        monkeypatch.delenv("RIDGELINE_SEED", raising=False)
        run(["spectrum", "--k", "1", "--d", "1", "--nmax", "2"], tmp_path)
        assert self.read_seed(tmp_path) == 0

    def test_env_var_overrides_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RIDGELINE_SEED", "9")
        run(["spectrum", "--k", "1", "--d", "1", "--nmax", "2"], tmp_path)
        assert self.read_seed(tmp_path) == 9

    def test_flag_beats_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RIDGELINE_SEED", "9")
        run(["spectrum", "--k", "1", "--d", "1", "--nmax", "2", "--seed", "3"],
            tmp_path)
        assert self.read_seed(tmp_path) == 3

    def test_garbage_env_var_is_usage_error(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RIDGELINE_SEED", "not-a-number")
        assert run(["spectrum", "--k", "1", "--d", "1", "--nmax", "2"],
                   tmp_path) == 2


class TestConfigFile:
    def test_key_value_file_supplies_flags(self, tmp_path):
        """Required flags may come from a plain 'key value' config file."""
        conf = tmp_path / "conf.txt"
        conf.write_text("k 1\nd 1\nnmax 4\n")
        assert run(["spectrum", "--config", str(conf)], tmp_path) == 0
        _, rows = table(tmp_path / "spectrum.csv")
        assert len(rows) == 5

    def test_explicit_flag_overrides_config(self, tmp_path):
        conf = tmp_path / "conf.txt"
        conf.write_text("k 1\nd 1\nnmax 4\n")
        run(["spectrum", "--config", str(conf), "--nmax", "2"], tmp_path)
        _, rows = table(tmp_path / "spectrum.csv")
        assert len(rows) == 3

    def test_unknown_config_key_is_usage_error(self, tmp_path):
        conf = tmp_path / "conf.txt"
        conf.write_text("k 1\nd 1\nnmax 4\nbogus 7\n")
        assert run(["spectrum", "--config", str(conf)], tmp_path) == 2


class TestDeterminism:
    def test_same_seed_same_bytes(self, tmp_path):
        """Identical manifests imply byte-identical CSV output."""
        args = ["regress", "--family", "shallow", "--class", "variation",
                "--d", "1", "--n-list", "64,128", "--trials", "2",
                "--threads", "2", "--seed", "5"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(args, a) == 0
        assert run(args, b) == 0
        assert (a / "regress.csv").read_bytes() == \
            (b / "regress.csv").read_bytes()

    def test_different_seed_different_draw(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for seed, out in (("1", a), ("2", b)):
            run(["discretize", "--target", "abs", "--d", "1", "--k", "1",
                 "--m", "4", "--n-terms", "8", "--seed", seed], out)
        assert (a / "net.txt").read_bytes() != (b / "net.txt").read_bytes()


class TestManifest:
    def test_manifest_records_run(self, tmp_path):
        """Manifest lists command, params, seed, version, and outputs."""
        run(["spectrum", "--k", "1", "--d", "1", "--nmax", "2", "--seed", "4"],
            tmp_path)
        body = json.loads((tmp_path / "spectrum_manifest.json").read_text())
        assert body["command"] == "spectrum"
        assert body["seed"] == 4
        assert body["params"]["nmax"] == 2
        assert body["outputs"] == ["spectrum.csv"]
        assert body["wall_time_s"] >= 0.0
        assert body["version"]


class TestEmitPlot:
    def test_two_point_slope_annotation(self, tmp_path):
        """Points (1,1), (10,0.1) on log-log axes annotate slope -1.00."""
        csv = tmp_path / "two.csv"
        csv.write_text("x,y\n1,1\n10,0.1\n")
        svg = emit_plot(csv, "x", "y", loglog=True)
        assert "slope -1.00" in svg.read_text()

    def test_empty_csv_rejected(self, tmp_path):
        csv = tmp_path / "empty.csv"
        csv.write_text("")
        with pytest.raises(ValueError, match="empty"):
            emit_plot(csv, "x", "y")

    def test_header_only_csv_rejected(self, tmp_path):
        csv = tmp_path / "hdr.csv"
        csv.write_text("x,y\n")
        with pytest.raises(ValueError, match="no data rows"):
            emit_plot(csv, "x", "y")

    def test_nonpositive_loglog_rejected(self, tmp_path):
        csv = tmp_path / "neg.csv"
        csv.write_text("x,y\n1,-1\n2,1\n")
        with pytest.raises(ValueError, match="positive"):
            emit_plot(csv, "x", "y", loglog=True)

    def test_missing_column_rejected(self, tmp_path):
        csv = tmp_path / "cols.csv"
        csv.write_text("x,y\n1,1\n2,2\n")
        with pytest.raises(ValueError, match="column"):
            emit_plot(csv, "x", "z")

    def test_svg_bytes_deterministic(self, tmp_path):
        csv = tmp_path / "two.csv"
        csv.write_text("x,y\n1,1\n10,0.1\n")
        one = emit_plot(csv, "x", "y", out_path=tmp_path / "one.svg")
        two = emit_plot(csv, "x", "y", out_path=tmp_path / "two.svg")
        assert one.read_bytes() == two.read_bytes()

    def test_converging_sweep_matches_frozen_fixture(self, tmp_path):
        """A decreasing sweep renders a descending polyline, byte-identical
        to the checked-in fixture."""
        import re
        fixtures = Path(__file__).parent / "fixtures"
        svg = emit_plot(fixtures / "approx_sweep_converging.csv", "m",
                        "sup_err_mean", loglog=True,
                        out_path=tmp_path / "render.svg")
        text = svg.read_text()
        points = re.search(r'polyline points="([^"]+)"', text).group(1)
        ys = [float(p.split(",")[1]) for p in points.split()]
        assert all(b > a for a, b in zip(ys, ys[1:]))   # pixel y grows downward
        assert svg.read_bytes() == \
            (fixtures / "approx_sweep_converging.svg").read_bytes()
