import json

import numpy as np
import pytest

from leveltopo.cli import main, parse_activation, parse_levels, parse_window
from leveltopo.network import load_network, save_network
from leveltopo.reports import load_report, validate_report
from leveltopo import SIGMOID, Layer, Network, one_to_one_relu


class TestFlagParsing:
    def test_activation_forms(self):
        assert parse_activation("sigmoid") == SIGMOID
        assert parse_activation("one_to_one_relu:5") == one_to_one_relu(5)
        with pytest.raises(ValueError):
            parse_activation("swish")
        with pytest.raises(ValueError):
            parse_activation("one_to_one_relu")
        with pytest.raises(ValueError):
            parse_activation("sigmoid:2")

    def test_window_forms(self):
        assert parse_window("auto") is None
        w = parse_window("-4,4,-3,3")
        np.testing.assert_array_equal(w.lo, [-4, -3])
        np.testing.assert_array_equal(w.hi, [4, 3])
        with pytest.raises(ValueError):
            parse_window("1,2,3")

    def test_levels_forms(self):
        assert parse_levels("decision:0.5") == "decision:0.5"
        assert parse_levels("0.25,0.75") == (0.25, 0.75)


class TestGenData:
    def test_writes_rows_and_sidecar(self, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["gen-data", "--seed", "7", "--inner", "500", "--ring", "1000",
                     "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 1500
        meta = json.loads((tmp_path / "d.csv.meta.json").read_text())
        assert meta["seed"] == 7 and meta["generator"] == "ring"

    def test_rerun_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["gen-data", "--seed", "3", "--inner", "40", "--ring", "60", "--out"]
        assert main(argv + [str(a)]) == 0
        assert main(argv + [str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_separability_guard_exit_2(self, tmp_path):
        code = main(["gen-data", "--ring-radius", "0.01", "--out",
                     str(tmp_path / "x.csv")])
        assert code == 2


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "ring.csv"
    assert main(["gen-data", "--seed", "0", "--inner", "60", "--ring", "120",
                 "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def model(tmp_path_factory, dataset):
    path = tmp_path_factory.mktemp("model") / "model.json"
    assert main(["train", "--data", str(dataset), "--arch", "2,3,1",
                 "--steps", "600", "--seed", "1", "--out", str(path)]) == 0
    return path


class TestTrain:
    def test_steps_zero_usage_error(self, tmp_path, dataset):
        code = main(["train", "--data", str(dataset), "--arch", "2,3,1",
                     "--steps", "0", "--out", str(tmp_path / "m.json")])
        assert code == 2

    def test_writes_model_and_history(self, tmp_path, dataset):
        model_path = tmp_path / "m.json"
        hist_path = tmp_path / "h.csv"
        assert main(["train", "--data", str(dataset), "--arch", "2,2,1",
                     "--steps", "50", "--out", str(model_path),
                     "--history", str(hist_path)]) == 0
        net = load_network(model_path)
        assert net.widths == (2, 2, 1)
        lines = hist_path.read_text().splitlines()
        assert lines[0] == "step,loss"
        assert len(lines) == 51

    def test_deep_narrow_arch_parses(self, tmp_path, dataset):
        assert main(["train", "--data", str(dataset), "--arch", "2,2,2,2,2,2,2,1",
                     "--steps", "5", "--out", str(tmp_path / "m.json")]) == 0


class TestAnalyze:
    def test_report_svg_and_validation(self, tmp_path, dataset, model):
        report_path = tmp_path / "r.json"
        svg_path = tmp_path / "p.svg"
        assert main(["analyze", "--model", str(model), "--data", str(dataset),
                     "--resolution", "81", "--report", str(report_path),
                     "--svg", str(svg_path), "--deterministic"]) == 0
        report = load_report(report_path)
        ok, _ = validate_report(report)
        assert ok
        svg = svg_path.read_text()
        assert svg.startswith("<?xml") and "<polyline" in svg
        assert "1970-01-01" in svg  # deterministic timestamp
        # the trained wide model closes a loop: drawn in the bounded color
        assert report["outcomes"][0]["bounded_final"] >= 1
        assert "#d62728" in svg

    def test_deterministic_outputs_identical(self, tmp_path, dataset, model):
        files = []
        for tag in ("a", "b"):
            rp, sp = tmp_path / f"r{tag}.json", tmp_path / f"s{tag}.svg"
            assert main(["analyze", "--model", str(model), "--data", str(dataset),
                         "--resolution", "41", "--report", str(rp), "--svg", str(sp),
                         "--deterministic"]) == 0
            files.append((rp.read_bytes(), sp.read_bytes()))
        assert files[0] == files[1]

    def test_model_data_mismatch_exit_2(self, tmp_path, dataset):
        bad = Network(3, (Layer(np.ones((1, 3)), np.zeros(1)),), SIGMOID)
        bad_path = tmp_path / "bad.json"
        save_network(bad, bad_path)
        code = main(["analyze", "--model", str(bad_path), "--data", str(dataset)])
        assert code == 2

    def test_window_auto_requires_data(self, model):
        assert main(["analyze", "--model", str(model)]) == 2

    def test_level_outside_range_warns_but_succeeds(self, tmp_path, model, dataset,
                                                    capsys):
        rp = tmp_path / "r.json"
        assert main(["analyze", "--model", str(model), "--data", str(dataset),
                     "--resolution", "41", "--levels", "99.0",
                     "--report", str(rp), "--deterministic"]) == 0
        err = capsys.readouterr().err
        assert "outside achieved value range" in err
        report = load_report(rp)
        assert report["outcomes"][0]["levels"][0]["report"]["components"] == []

    def test_vertical_line_stub_model(self, tmp_path):
        # f(x, y) = x with a linear head: level 0 is the y axis
        stub = Network(2, (Layer(np.array([[1.0, 0.0]]), np.zeros(1)),), SIGMOID,
                       final_activation=False)
        stub_path = tmp_path / "stub.json"
        save_network(stub, stub_path)
        svg_path = tmp_path / "stub.svg"
        assert main(["analyze", "--model", str(stub_path), "--window=-2,2,-2,2",
                     "--resolution", "41", "--levels", "0.0",
                     "--svg", str(svg_path), "--deterministic"]) == 0
        svg = svg_path.read_text()
        # boundary-touching components are drawn in the touching color
        assert "#1f77b4" in svg and "#d62728" not in svg


class TestSweepCommand:
    def test_small_sweep_passes(self, tmp_path):
        rp = tmp_path / "sweep.json"
        code = main(["sweep-nonsingular", "--count", "3", "--levels-per-net", "2",
                     "--resolution", "61", "--report", str(rp), "--deterministic"])
        assert code == 0
        report = load_report(rp)
        assert report["verdicts"]["sweep-nonsingular"]["status"] == "PASS"
        ok, _ = validate_report(report)
        assert ok

    def test_deterministic_reports_byte_identical(self, tmp_path):
        blobs = []
        for tag in ("a", "b"):
            rp = tmp_path / f"{tag}.json"
            assert main(["sweep-nonsingular", "--count", "2", "--levels-per-net", "1",
                         "--resolution", "41", "--report", str(rp),
                         "--deterministic"]) == 0
            blobs.append(rp.read_bytes())
        assert blobs[0] == blobs[1]

    def test_injected_singular_exit_3(self):
        assert main(["sweep-nonsingular", "--count", "2", "--levels-per-net", "1",
                     "--resolution", "41", "--inject-singular"]) == 3

    def test_count_zero_untested(self, capsys):
        assert main(["sweep-nonsingular", "--count", "0"]) == 0
        assert "UNTESTED" in capsys.readouterr().out

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"count": 2, "levels_per_net": 1,
                                   "resolution": 41, "seed": 9}))
        rp = tmp_path / "r.json"
        assert main(["sweep-nonsingular", "--config", str(cfg), "--count", "1",
                     "--report", str(rp), "--deterministic"]) == 0
        report = load_report(rp)
        assert report["config"]["spec"]["count"] == 1      # flag wins
        assert report["config"]["spec"]["seed"] == 9       # config used


class TestReproduceCommand:
    def test_wide_small_run(self, tmp_path, capsys):
        rp = tmp_path / "rep.json"
        svg_dir = tmp_path / "svgs"
        code = main(["reproduce", "--paper-fig", "3b", "--seeds", "2",
                     "--report", str(rp), "--svg-dir", str(svg_dir),
                     "--deterministic"])
        out = capsys.readouterr().out
        assert code == 0
        assert "PASS" in out
        assert (svg_dir / "seed000.svg").exists()
        ok, _ = validate_report(load_report(rp))
        assert ok

    def test_seeds_zero_untested(self, capsys):
        assert main(["reproduce", "--paper-fig", "3b", "--seeds", "0"]) == 0
        assert "UNTESTED" in capsys.readouterr().out

    def test_missing_fig_is_usage_error(self):
        assert main(["reproduce", "--seeds", "1"]) == 2

    def test_config_file_drives_run(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"paper_fig": "3b", "seeds": 1, "steps": 200,
                                   "resolution": 41, "n_inner": 30, "n_ring": 60}))
        rp = tmp_path / "r.json"
        assert main(["reproduce", "--config", str(cfg), "--report", str(rp),
                     "--deterministic"]) in (0, 1)
        report = load_report(rp)
        assert report["config"]["spec"]["train"]["steps"] == 200


class TestValidateReportCommand:
    def test_tampered_verdict_detected(self, tmp_path):
        rp = tmp_path / "r.json"
        assert main(["sweep-nonsingular", "--count", "1", "--levels-per-net", "1",
                     "--resolution", "41", "--report", str(rp),
                     "--deterministic"]) == 0
        report = load_report(rp)
        report["verdicts"]["sweep-nonsingular"]["bounded_components"] = 5
        rp.write_text(json.dumps(report))
        assert main(["validate-report", str(rp)]) == 1

    def test_intact_report_validates(self, tmp_path):
        rp = tmp_path / "r.json"
        assert main(["sweep-nonsingular", "--count", "1", "--levels-per-net", "1",
                     "--resolution", "41", "--report", str(rp),
                     "--deterministic"]) == 0
        assert main(["validate-report", str(rp)]) == 0
