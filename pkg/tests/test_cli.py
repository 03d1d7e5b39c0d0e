import json

import numpy as np
import pytest

from mlgom.bundle import read_bundle, write_bundle
from mlgom.cli import main
from mlgom.errors import BundleFormatError
from mlgom.estimators import gom_dsog
from mlgom.experiment import preset
from mlgom.metrics import relative_l1_error, relative_l2_error
from mlgom.model import ResponseTensor, generate_experiment_instance


@pytest.fixture
def bundle(tmp_path):
    path = tmp_path / "bundle"
    assert main(["simulate", "--preset", "exp1-dense", "--rep", "0", "--out", str(path)]) == 0
    return path


def test_simulate_matches_in_process(bundle):
    R, truth, manifest = read_bundle(bundle)
    params, R0 = generate_experiment_instance(preset("exp1-dense").instance(100), 0)
    np.testing.assert_array_equal(R.layers, R0.layers)
    np.testing.assert_array_equal(truth.Pi, params.Pi)
    np.testing.assert_array_equal(truth.B, params.B)
    assert truth.rho == params.rho and truth.pure_index == params.pure_index
    assert manifest["point_value"] == 100 and manifest["seed"] == 0


def test_estimate_round_trip(bundle, tmp_path):
    out = tmp_path / "est.json"
    assert main(["estimate", "--bundle", str(bundle), "--method", "dsog", "--k", "3", "--out", str(out)]) == 0
    got = json.loads(out.read_text())
    params, R = generate_experiment_instance(preset("exp1-dense").instance(100), 0)
    res = gom_dsog(R, 3)
    assert got["metrics"]["rel_l1"] == relative_l1_error(res.Pi_hat, params.Pi)
    assert got["metrics"]["rel_l2"] == relative_l2_error(res.Theta_hat, params.Theta)
    np.testing.assert_array_equal(np.array(got["Pi_hat"]), res.Pi_hat)
    assert got["vertices"] == [int(v) for v in res.vertices]
    assert set(got["diagnostics"]) == {"vertex_condition", "rows_clipped", "rows_rescued", "rank_deficient"}


def test_estimate_stdout_and_clip(bundle, capsys):
    assert main(["estimate", "--bundle", str(bundle), "--method", "sum", "--clip"]) == 0
    got = json.loads(capsys.readouterr().out)
    theta = np.array(got["Theta_hat"])
    assert got["K"] == 3 and theta.min() >= 0 and theta.max() <= 5


def test_select_k(bundle, tmp_path):
    out = tmp_path / "k.json"
    assert main(["select-k", "--bundle", str(bundle), "--kc", "5", "--out", str(out)]) == 0
    got = json.loads(out.read_text())
    assert set(got["per_k"]) == {"1", "2", "3", "4", "5"}
    assert got["per_k"]["1"] == 0.0
    assert got["selected_k"] == 3 and got["k_true"] == 3
    assert len(got["per_layer_eta"]) == 5


def test_experiment_and_plot(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"preset": "exp2-dense", "values": [1, 3], "N": 200, "N0": "N/5"}))
    out = tmp_path / "run"
    argv = ["experiment", "--config", str(cfg), "--reps", "2", "--methods", "dsog,sum", "--kc", "0",
            "--threads", "2", "--no-timing", "--plots", "--out", str(out)]
    assert main(argv) == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 2 * 2
    assert all(line.endswith(",") for line in lines[1:])
    assert (out / "plots" / "exp2-dense_rel_l1.svg").exists()
    assert not (out / "plots" / "exp2-dense_accuracy.svg").exists()
    assert "rel_l1=" in capsys.readouterr().out

    assert main(["plot", "--results", str(out / "results.csv"), "--out", str(tmp_path / "p")]) == 0
    assert (tmp_path / "p" / "exp2-dense_rel_l2.svg").exists()


def test_seed_override(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--preset", "exp3-sparse", "--seed", "7", "--point", "0.3", "--out", str(a)])
    main(["simulate", "--preset", "exp3-sparse", "--seed", "7", "--point", "0.3", "--out", str(b)])
    ra, _, ma = read_bundle(a)
    rb, _, _ = read_bundle(b)
    np.testing.assert_array_equal(ra.layers, rb.layers)
    assert ma["seed"] == 7 and ma["point_value"] == 0.3


class TestMalformedBundles:
    def _write(self, tmp_path):
        R = ResponseTensor(np.array([[[0, 1], [2, 3], [4, 5]]]), 5)
        return write_bundle(tmp_path / "b", R)

    def test_bad_field_has_line_and_column(self, tmp_path):
        path = self._write(tmp_path)
        (path / "layer_1.csv").write_text("0,1\n2,x\n4,5\n")
        with pytest.raises(BundleFormatError, match=r"layer_1.csv:2: field 2 is not an integer"):
            read_bundle(path)

    def test_out_of_range(self, tmp_path):
        path = self._write(tmp_path)
        (path / "layer_1.csv").write_text("0,1\n2,3\n4,9\n")
        with pytest.raises(BundleFormatError, match=r"layer_1.csv:3: field 2 = 9 outside"):
            read_bundle(path)

    def test_ragged_row(self, tmp_path):
        path = self._write(tmp_path)
        (path / "layer_1.csv").write_text("0,1\n2\n4,5\n")
        with pytest.raises(BundleFormatError, match=r"layer_1.csv:2: expected 2 fields"):
            read_bundle(path)

    def test_missing_manifest_field(self, tmp_path):
        path = self._write(tmp_path)
        m = json.loads((path / "manifest.json").read_text())
        del m["M"]
        (path / "manifest.json").write_text(json.dumps(m))
        with pytest.raises(BundleFormatError, match="missing field 'M'"):
            read_bundle(path)

    def test_broken_json(self, tmp_path):
        path = self._write(tmp_path)
        (path / "manifest.json").write_text('{"format": "mlgom-bundle/1",\n "N": }')
        with pytest.raises(BundleFormatError, match=r"manifest.json:2:"):
            read_bundle(path)

    def test_cli_reports_error(self, tmp_path, capsys):
        path = self._write(tmp_path)
        (path / "layer_1.csv").write_text("0,1\n")
        assert main(["estimate", "--bundle", str(path), "--k", "1"]) == 1
        assert "expected 3 rows" in capsys.readouterr().err

    def test_round_trip_without_truth(self, tmp_path):
        path = self._write(tmp_path)
        R, truth, _ = read_bundle(path)
        assert truth is None
        np.testing.assert_array_equal(R.layers, [[[0, 1], [2, 3], [4, 5]]])


def test_missing_config_source(tmp_path, capsys):
    assert main(["experiment", "--out", str(tmp_path)]) == 1
    assert "--preset or --config" in capsys.readouterr().err
