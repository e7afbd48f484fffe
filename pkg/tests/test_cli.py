import json

import numpy as np
import pytest
import yaml

from specklesim.cli.config import RunConfig
from specklesim.cli.main import main
from specklesim.cli.runio import read_array, read_manifest, write_array
from specklesim.errors import ConfigurationError

SIM_CFG = {
    "experiment": {"kind": "simulate"},
    "covariance": {"kind": "gaussian", "sigma2": 1.0, "ell": 1.0},
    "regime": {"kind": "kinetic", "epsilon": 0.5, "beta": 1.0, "k0": 1.0},
    "beam": {"components": [
        {"amplitude": 1.0, "width": 1.0, "center": [0.0], "kvec": [0.0]}]},
    "grid": {"n": 256, "L": 40.0},
    "propagation": {"z_final": 0.5, "n_steps": 20},
    "ensemble": {"n_realizations": 96, "seed": 77},
    "probes": [128, 120, 136],
}


def write_cfg(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


class TestRunConfig:
    def test_unknown_top_level_key(self, tmp_path):
        bad = dict(SIM_CFG, bogus={"x": 1})
        with pytest.raises(ConfigurationError):
            RunConfig.from_dict(bad)

    def test_unknown_nested_key(self):
        bad = json.loads(json.dumps(SIM_CFG))
        bad["grid"]["spacing"] = 0.1
        with pytest.raises(ConfigurationError):
            RunConfig.from_dict(bad)

    def test_missing_required_key(self):
        bad = json.loads(json.dumps(SIM_CFG))
        del bad["regime"]["epsilon"]
        with pytest.raises(ConfigurationError):
            RunConfig.from_dict(bad)

    def test_wrong_type(self):
        bad = json.loads(json.dumps(SIM_CFG))
        bad["grid"]["n"] = "many"
        with pytest.raises(ConfigurationError):
            RunConfig.from_dict(bad)

    def test_builders_roundtrip(self):
        cfg = RunConfig.from_dict(SIM_CFG)
        spec = cfg.build_ensemble_spec()
        assert spec.n_realizations == 96
        assert spec.probes == ((128,), (120,), (136,))
        again = RunConfig.from_dict(yaml.safe_load(cfg.to_yaml()))
        assert again.data == cfg.data


class TestArrayIO:
    def test_roundtrip_complex(self, tmp_path):
        arr = np.arange(12, dtype=complex).reshape(3, 4) * (1 + 2j)
        write_array(tmp_path / "x", arr, axes=["a", "b"], units="u")
        back = read_array(tmp_path / "x")
        assert np.array_equal(back, arr)
        meta = json.loads((tmp_path / "x.json").read_text())
        assert meta["byte_order"] == "little-endian"
        assert meta["layout"].startswith("interleaved")

    def test_roundtrip_float(self, tmp_path):
        arr = np.linspace(0, 1, 7)
        write_array(tmp_path / "y", arr, axes=["r"])
        assert np.array_equal(read_array(tmp_path / "y"), arr)


class TestSimulateCommand:
    def test_run_and_rerun_checksums(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"),
                     "--workers", "2"]) == 0
        ma = read_manifest(tmp_path / "a")
        mb = read_manifest(tmp_path / "b")
        assert ma["checksums"] == mb["checksums"]
        assert set(ma["checksums"]) >= {"field_samples.bin", "probe_moments.csv",
                                        "diagnostics.csv"}

    def test_manifest_config_reproduces(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
        manifest = read_manifest(tmp_path / "a")
        cfg2 = write_cfg(tmp_path, manifest["config"], name="fromman.yaml")
        main(["simulate", "--config", cfg2, "--out", str(tmp_path / "c")])
        assert read_manifest(tmp_path / "c")["checksums"] == manifest["checksums"]

    def test_seed_override_changes_output(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "d"), "--seed", "123"])
        ma, md = read_manifest(tmp_path / "a"), read_manifest(tmp_path / "d")
        assert ma["checksums"]["field_samples.bin"] != md["checksums"]["field_samples.bin"]
        assert md["seed"] == 123

    def test_missing_probe_exit_2(self, tmp_path):
        bad = json.loads(json.dumps(SIM_CFG))
        bad["probes"] = [4096]
        cfg = write_cfg(tmp_path, bad)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x")]) == 2

    def test_malformed_config_exit_2(self, tmp_path):
        bad = json.loads(json.dumps(SIM_CFG))
        bad["propagation"]["cadence"] = 3
        cfg = write_cfg(tmp_path, bad)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "x")]) == 2

    def test_kind_mismatch_exit_2(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        assert main(["moments", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


class TestCheckCovarianceCommand:
    def test_gaussian_passes(self, tmp_path):
        cfg = write_cfg(tmp_path, {
            "experiment": {"kind": "check-covariance"},
            "covariance": {"kind": "gaussian", "sigma2": 1.0, "ell": 1.0},
            "regime": {"kind": "kinetic", "epsilon": 0.5, "beta": 1.0, "k0": 1.0},
        })
        assert main(["check-covariance", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "covariance_report.csv").exists()

    def test_diffusive_large_epsilon_exit_1(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {
            "covariance": {"kind": "gaussian", "sigma2": 1.0, "ell": 1.0},
            "regime": {"kind": "diffusive", "epsilon": 0.5, "beta": 1.0, "k0": 1.0},
        })
        assert main(["check-covariance", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
        assert "regime-eta" in capsys.readouterr().out


class TestMomentsCommand:
    def cfg(self, regime):
        return {
            "experiment": {"kind": "moments"},
            "covariance": {"kind": "gaussian", "sigma2": 1.0, "ell": 1.0},
            "regime": dict({"kind": regime, "beta": 1.0, "k0": 1.0},
                           epsilon=0.5 if regime == "kinetic" else 0.01),
            "beam": {"components": [
                {"amplitude": 1.0, "width": 1.5, "center": [0.0], "kvec": [0.0]}]},
            "grid": {"n": 256, "L": 40.0},
            "moments": {"z": [0.0, 1.0], "r": [0.0, 0.3125],
                        "pairs": [[0.0, 0.0], [0.0, 0.5]]},
        }

    def test_kinetic_tables(self, tmp_path):
        cfg = write_cfg(tmp_path, self.cfg("kinetic"))
        assert main(["moments", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
        lines = (tmp_path / "o" / "moments.csv").read_text().strip().splitlines()
        header = lines[0].split(",")
        assert header == ["z", "r", "x", "y", "re", "im", "evaluator", "regime"]
        # z=0 mean-field rows equal the beam samples
        import csv as csvmod

        rows = list(csvmod.DictReader(lines))
        cfg_obj = RunConfig.from_dict(self.cfg("kinetic"))
        beam = cfg_obj.build_beam()
        for row in rows:
            if row["evaluator"] == "mean-field" and float(row["z"]) == 0.0:
                point = float(row["r"]) / 0.5 + float(row["x"])
                expect = complex(beam.sample_raw(np.array([point])))
                assert float(row["re"]) == pytest.approx(expect.real, abs=1e-12)

    def test_diffusive_tables_and_arrays(self, tmp_path):
        cfg = write_cfg(tmp_path, self.cfg("diffusive"))
        assert main(["moments", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "i2_profiles.bin").exists()
        assert (tmp_path / "o" / "i2_variance.csv").exists()
        text = (tmp_path / "o" / "moments.csv").read_text()
        assert "diffusive-limit-phase-on" in text and "diffusive-limit-phase-off" in text

    def test_resolution_refusal_exit_1(self, tmp_path):
        data = self.cfg("diffusive")
        data["grid"] = {"n": 16, "L": 40.0}
        data["moments"] = {"z": [0.05], "r": [0.0], "pairs": [[0.0, 2.0]]}
        cfg = write_cfg(tmp_path, data)
        assert main(["moments", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


class TestMomentPdeCommand:
    def test_pair_case_near_zero_error(self, tmp_path):
        cfg = write_cfg(tmp_path, {
            "experiment": {"kind": "moment-pde"},
            "covariance": {"kind": "gaussian", "sigma2": 1.0, "ell": 1.0},
            "regime": {"kind": "kinetic", "epsilon": 0.3, "beta": 1.0, "k0": 2.0},
            "momentpde": {"p": 1, "q": 1, "n_v": 48, "extent": 24.0, "z": 0.5,
                          "dz": 0.02, "psi_width": 0.8, "bounds": False},
        })
        assert main(["moment-pde", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
        lines = (tmp_path / "o" / "momentpde.csv").read_text().strip().splitlines()
        row = lines[1].split(",")
        assert float(row[4]) < 1e-6  # error_norm column
        assert int(row[6]) == 1      # valid

    def test_scope_guard_exit_2(self, tmp_path):
        cfg = write_cfg(tmp_path, {
            "covariance": {"kind": "gaussian", "sigma2": 1.0, "ell": 1.0},
            "regime": {"kind": "kinetic", "epsilon": 0.3, "beta": 1.0, "k0": 2.0},
            "momentpde": {"p": 3, "q": 2, "n_v": 8, "extent": 8.0, "z": 0.1},
        })
        assert main(["moment-pde", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_bounds_tables(self, tmp_path):
        cfg = write_cfg(tmp_path, {
            "covariance": {"kind": "gaussian", "sigma2": 1.0, "ell": 1.0},
            "regime": {"kind": "kinetic", "epsilon": 0.3, "beta": 1.0, "k0": 2.0},
            "momentpde": {"p": 1, "q": 1, "n_v": 16, "extent": 10.0, "z": 0.1,
                          "deltas": [1e-1, 1e-2]},
        })
        assert main(["moment-pde", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "bounds_linear.csv").exists()
        assert (tmp_path / "o" / "bounds_quadratic.csv").exists()

    def test_save_measures(self, tmp_path):
        cfg = write_cfg(tmp_path, {
            "covariance": {"kind": "gaussian", "sigma2": 1.0, "ell": 1.0},
            "regime": {"kind": "kinetic", "epsilon": 0.3, "beta": 1.0, "k0": 2.0},
            "momentpde": {"p": 1, "q": 1, "n_v": 16, "extent": 12.0, "z": 0.2,
                          "dz": 0.02, "bounds": False, "save_measures": True},
        })
        assert main(["moment-pde", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
        arr = read_array(tmp_path / "o" / "psi_full_eps0p3")
        assert arr.shape == (16, 16)
        assert (tmp_path / "o" / "psi_gaussian_eps0p3.bin").exists()


class TestVerifyCommand:
    def test_deterministic_negative_control(self, tmp_path):
        # zero-noise simulation: Gaussianity battery must fail, and the
        # expected-fail mode turns that into success
        data = json.loads(json.dumps(SIM_CFG))
        data["covariance"]["sigma2"] = 0.0
        data["ensemble"]["n_realizations"] = 1100
        data["propagation"]["n_steps"] = 5
        cfg = write_cfg(tmp_path, data)
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "run")])
        vcfg = write_cfg(tmp_path, {
            "experiment": {"kind": "verify"},
            "verify": {"input": str(tmp_path / "run"), "expect_fail": True},
        }, name="verify.yaml")
        assert main(["verify", "--config", vcfg, "--out", str(tmp_path / "v")]) == 0
        text = (tmp_path / "v" / "verify_summary.csv").read_text()
        assert "gaussianity-gap-circular" in text

    def test_missing_input_exit_2(self, tmp_path):
        vcfg = write_cfg(tmp_path, {
            "verify": {"input": str(tmp_path / "nonexistent")},
        })
        assert main(["verify", "--config", vcfg, "--out", str(tmp_path / "v")]) == 2
