import csv
import json

import numpy as np
import pytest

from latticetdse import catalog
from latticetdse.antialias import build
from latticetdse.cbc import cbc_lattice
from latticetdse.cli import main, parse_count
from latticetdse.experiments import (
    ConfigError,
    ExperimentConfig,
    InvariantViolation,
    ReferenceTooCoarse,
    fit_slope,
    initial_error,
    run,
    run_conservation,
    write_outputs,
)
from latticetdse.io import load_lattice
from latticetdse.lattice import LatticeSpec

BASE = {"lattice": {"cbc": {"d": 2, "log2n": 8}}, "d": 2, "T": 1.0}


def config(**kw):
    return ExperimentConfig.from_dict({**BASE, **kw})


def write_config(tmp_path, **kw):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({**BASE, **kw}))
    return path


class TestConfig:
    @pytest.mark.parametrize("bad", [
        {"experiment": "nope"},
        {"experiment": "conservation"},
        {"experiment": "conservation", "dt": 0.3},
        {"experiment": "convergence", "dt_list": [0.25, 0.5]},
        {"experiment": "convergence", "dt_list": [0.5, 0.25], "M": 4},
        {"experiment": "conservation", "dt": 0.1, "initial": "g9"},
        {"experiment": "conservation", "dt": 0.1, "bogus": 1},
        {"experiment": "initial_error", "log2n_list": [4]},
    ])
    def test_rejected(self, bad):
        with pytest.raises(ConfigError):
            config(**bad)

    def test_lattice_dimension_mismatch(self):
        cfg = config(experiment="conservation", dt=0.5, lattice={"cbc": {"d": 3, "log2n": 6}})
        with pytest.raises(ConfigError):
            run(cfg)

    def test_unknown_catalog_entry(self):
        cfg = config(experiment="conservation", dt=0.5, lattice={"catalog": {"d": 2, "log2n": 7}})
        with pytest.raises(ConfigError):
            run(cfg)


class TestFit:
    def test_exact_power_law(self):
        dts = np.array([0.1, 0.05, 0.025])
        slope, exact = fit_slope(dts, 3 * dts**2)
        assert slope == pytest.approx(2.0) and not exact

    def test_round_off_only_is_exact(self):
        assert fit_slope([0.1, 0.05], [1e-16, 0.0]) == (None, True)


class TestRunners:
    def test_convergence_zero_potential_exact(self):
        res = run(config(experiment="convergence", potential="zero", dt_list=[0.5, 0.25], M=16))
        assert res["summary"]["exact"] and res["summary"]["slope"] is None
        assert max(r[2] for r in res["rows"]) <= 1e-12

    def test_convergence_second_order(self):
        res = run(config(experiment="convergence", potential="v1", dt_list=[1 / 64, 1 / 128, 1 / 256], M=4096))
        assert 1.8 <= res["summary"]["slope"] <= 2.2

    def test_conservation_zero_steps(self):
        res = run(config(experiment="conservation", dt=0.1, T=0.0))
        assert res["rows"] == []
        assert res["summary"] == {"delta_norm": 0.0, "delta_energy": 0.0}

    def test_conservation_free(self):
        res = run(config(experiment="conservation", dt=0.1, potential="zero"))
        assert res["summary"]["delta_energy"] <= 1e-12
        assert res["summary"]["delta_norm"] <= 1e-13
        assert len(res["rows"]) == 11

    def test_conservation_violation(self):
        with pytest.raises(InvariantViolation):
            run_conservation(config(experiment="conservation", dt=0.1, norm_tolerance=-1.0))
        assert run_conservation(config(experiment="conservation", dt=0.1))["summary"]["delta_norm"] < 1e-13

    def test_initial_error_trig_polynomial(self):
        aa = build(cbc_lattice(2**8, 2))
        ref = build(cbc_lattice(2**12, 2))
        g = lambda x: (np.exp(2j * np.pi * x[..., 0]) + np.exp(-2j * np.pi * x[..., 1])) / np.sqrt(2)
        assert initial_error(g, aa, ref) <= 1e-10

    def test_initial_error_decreases(self):
        res = run(config(experiment="initial_error", log2n_list=[6, 8], ref_log2n=12))
        e = [r[2] for r in res["rows"]]
        assert e[1] < e[0]

    def test_reference_too_coarse(self):
        with pytest.raises(ReferenceTooCoarse):
            run(config(experiment="initial_error", log2n_list=[6, 8], ref_log2n=11))

    def test_outputs_deterministic(self, tmp_path):
        cfg = config(experiment="conservation", dt=0.1)
        a, _ = write_outputs(run(cfg), cfg, tmp_path / "a")
        b, js = write_outputs(run(cfg), cfg, tmp_path / "b")
        assert a.read_bytes() == b.read_bytes()
        doc = json.loads(js.read_text())
        assert doc["lattice_hash"] == LatticeSpec.from_dict(doc["lattice"]).digest()
        assert doc["config"]["dt"] == 0.1
        with a.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["step", "time", "norm", "energy", "norm_delta", "energy_delta"]


class TestCli:
    def test_parse_count(self):
        assert parse_count("2^10") == 1024 and parse_count("96") == 96

    def test_run(self, tmp_path, capsys):
        path = write_config(tmp_path, experiment="conservation", dt=0.25)
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "conservation.csv").exists()
        assert "delta_norm" in capsys.readouterr().out

    def test_default_out_dir(self, tmp_path):
        path = write_config(tmp_path, experiment="conservation", dt=0.25)
        assert main(["run", "--config", str(path)]) == 0
        assert (tmp_path / "results" / "conservation_summary.json").exists()

    def test_bad_config_exit_2(self, tmp_path):
        path = write_config(tmp_path, experiment="conservation")
        assert main(["run", "--config", str(path)]) == 2
        assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2

    def test_invariant_exit_3(self, tmp_path):
        path = write_config(tmp_path, experiment="conservation", dt=0.25, norm_tolerance=-1.0)
        assert main(["run", "--config", str(path)]) == 3

    def test_cbc_and_aaset(self, tmp_path):
        lat = tmp_path / "lat.json"
        assert main(["cbc", "--n", "2^8", "--d", "3", "--out", str(lat)]) == 0
        spec, aa = load_lattice(lat)
        assert aa is None and spec == cbc_lattice(2**8, 3)
        full = tmp_path / "full.json"
        assert main(["aaset", "--lattice", str(lat), "--out", str(full)]) == 0
        _, aa = load_lattice(full)
        np.testing.assert_array_equal(aa.table, build(spec).table)

    def test_cbc_rejects_non_power_of_two(self, tmp_path):
        assert main(["cbc", "--n", "100", "--d", "2", "--out", str(tmp_path / "x.json")]) == 2

    def test_catalog_list(self, capsys):
        assert main(["catalog", "list"]) == 0
        out = capsys.readouterr().out
        assert len(out.strip().splitlines()) == len(list(catalog.keys()))
        assert "100135" in out
