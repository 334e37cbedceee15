"""Trial orchestration: determinism, sweeps, CLI, config assembly."""

import dataclasses

import numpy as np
import pytest

from ivasim import harness
from ivasim.errors import ConfigurationError, GeometryError
from ivasim.harness import (
    SweepSpec,
    load_run_config,
    load_sweep_spec,
    main,
    run_sweep,
    run_trial,
    trial_seed,
)

# small but complete scenario for sweep tests: full chain in ~10 ms per trial
FAST = {
    "k": "1024",
    "m_s": "16",
    "n_ref": "1",
    "beam": "ideal",
    "crop_half_range": "20",
    "crop_half_crossrange": "30",
}


def fast_raw(**extra):
    raw = dict(FAST)
    raw.update({k: str(v) for k, v in extra.items()})
    return raw


class TestRunConfig:
    def test_defaults(self):
        cfg = load_run_config()
        assert cfg.scenario.k == 13200
        assert cfg.traj.heading_deg == 270.0
        assert cfg.target.count == 5
        assert cfg.options.noise is True

    def test_scatterer_list_parsed(self):
        cfg = load_run_config(overrides={"scatterers": "1 0 0 2; 0 1 0 0.5"})
        assert cfg.target.count == 2
        assert np.allclose(cfg.target.rcs, [2.0, 0.5])

    def test_bad_scatterer_entry(self):
        with pytest.raises(ConfigurationError):
            load_run_config(overrides={"scatterers": "1 0 0"})

    def test_bool_parsing(self):
        assert load_run_config(overrides={"noise": "off"}).options.noise is False
        assert load_run_config(overrides={"noise": "true"}).options.noise is True
        with pytest.raises(ConfigurationError):
            load_run_config(overrides={"noise": "maybe"})

    def test_unknown_override_rejected(self):
        with pytest.raises(ConfigurationError):
            load_run_config(overrides={"bogus": 1})

    def test_config_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("rho_f = 0.4\nspeed = 20\nheading_deg = 300\nbeam = ideal\n")
        cfg = load_run_config(str(path))
        assert cfg.scenario.rho_f == 0.4
        assert cfg.scenario.m_s == 200  # heading-based default
        assert cfg.traj.speed == 20.0
        assert cfg.options.beam == "ideal"


class TestRunTrial:
    def test_deterministic(self):
        cfg = load_run_config(overrides=fast_raw())
        a = run_trial(cfg, trial_seed(3, 0, 0))
        b = run_trial(cfg, trial_seed(3, 0, 0))
        assert a == b

    def test_seed_changes_result(self):
        cfg = load_run_config(overrides=fast_raw())
        a = run_trial(cfg, trial_seed(3, 0, 0))
        b = run_trial(cfg, trial_seed(4, 0, 0))
        assert a.ic != b.ic

    def test_static_target_aborts(self):
        cfg = load_run_config(overrides=fast_raw(speed=0))
        with pytest.raises(GeometryError):
            run_trial(cfg, trial_seed(0, 0, 0))

    def test_windowed_matches_full(self):
        raw = fast_raw()
        cfg = load_run_config(overrides=raw)
        cfg_full = dataclasses.replace(
            cfg, options=dataclasses.replace(cfg.options, image_mode="full")
        )
        win = run_trial(cfg, trial_seed(5, 0, 0))
        full = run_trial(cfg_full, trial_seed(5, 0, 0))
        assert win.ic == pytest.approx(full.ic, rel=1e-12)
        assert win.centroid_range_est == pytest.approx(
            full.centroid_range_est, rel=1e-12
        )

    def test_exports_written(self, tmp_path):
        cfg = load_run_config(overrides=fast_raw(noise="off"))
        image_path = tmp_path / "img.pgm"
        csv_path = tmp_path / "img.csv"
        gs_path = tmp_path / "gs.bin"
        tmc_path = tmp_path / "tmc.csv"
        run_trial(
            cfg,
            trial_seed(0, 0, 0),
            export_image_path=str(image_path),
            export_csv_path=str(csv_path),
            dump_gs_path=str(gs_path),
            dump_tmc_path=str(tmc_path),
        )
        assert image_path.read_bytes()[:2] == b"P5"
        assert csv_path.exists()
        assert gs_path.read_bytes()[:4] == b"IVAG"
        assert tmc_path.read_text().startswith("m_s,q_raw,")


class TestSeedSplitting:
    def test_distinct_streams(self):
        seqs = {
            tuple(np.random.default_rng(trial_seed(1, p, t)).integers(0, 2**31, 4))
            for p in range(3)
            for t in range(3)
        }
        assert len(seqs) == 9

    def test_reproducible(self):
        a = np.random.default_rng(trial_seed(9, 2, 5)).integers(0, 2**31, 4)
        b = np.random.default_rng(trial_seed(9, 2, 5)).integers(0, 2**31, 4)
        assert np.array_equal(a, b)


class TestSweep:
    def test_single_point_csvs(self, tmp_path):
        spec = SweepSpec(rho_f=(1.0,), speeds=(30.0,), headings=(300.0,), n_mc=1)
        run_sweep(fast_raw(), spec, master_seed=0, out_dir=str(tmp_path))
        ic_lines = (tmp_path / "ic_mean_vs_rhof.csv").read_text().strip().splitlines()
        rmse_lines = (tmp_path / "rmse_vs_rhof.csv").read_text().strip().splitlines()
        assert len(ic_lines) == 3  # comment, header, one row
        assert len(rmse_lines) == 3
        assert ic_lines[2].startswith("1,30,1,0,")

    def test_rerun_byte_identical(self, tmp_path):
        spec = SweepSpec(rho_f=(0.5, 1.0), speeds=(30.0,), headings=(300.0,), n_mc=2)
        run_sweep(fast_raw(), spec, master_seed=3, out_dir=str(tmp_path / "a"),
                  trials_csv=True)
        run_sweep(fast_raw(), spec, master_seed=3, out_dir=str(tmp_path / "b"),
                  trials_csv=True)
        for name in ("ic_mean_vs_rhof.csv", "rmse_vs_rhof.csv", "trials.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_worker_count_invariance(self, tmp_path):
        spec = SweepSpec(rho_f=(1.0,), speeds=(10.0, 30.0), headings=(300.0,), n_mc=2)
        run_sweep(fast_raw(), spec, master_seed=1, out_dir=str(tmp_path / "w1"), workers=1)
        run_sweep(fast_raw(), spec, master_seed=1, out_dir=str(tmp_path / "w2"), workers=2)
        for name in ("ic_mean_vs_rhof.csv", "rmse_vs_rhof.csv"):
            assert (tmp_path / "w1" / name).read_bytes() == (
                tmp_path / "w2" / name
            ).read_bytes()

    def test_failed_trials_excluded_and_counted(self, tmp_path, capsys):
        spec = SweepSpec(rho_f=(1.0,), speeds=(0.0,), headings=(300.0,), n_mc=2)
        summary = run_sweep(fast_raw(), spec, master_seed=0, out_dir=str(tmp_path))
        point = (300.0, 0.0, 1.0)
        assert summary[point]["n_failed"] == 2
        assert summary[point]["n_ok"] == 0
        rmse_row = (tmp_path / "rmse_vs_rhof.csv").read_text().strip().splitlines()[2]
        assert rmse_row.split(",")[3] == "0" and rmse_row.split(",")[4] == "2"

    def test_ic_file_restricted_to_300(self, tmp_path):
        spec = SweepSpec(rho_f=(1.0,), speeds=(30.0,), headings=(270.0, 300.0), n_mc=1)
        run_sweep(fast_raw(), spec, master_seed=0, out_dir=str(tmp_path))
        ic_lines = (tmp_path / "ic_mean_vs_rhof.csv").read_text().strip().splitlines()
        assert len(ic_lines) == 3  # only the 300-degree point
        rmse_lines = (tmp_path / "rmse_vs_rhof.csv").read_text().strip().splitlines()
        assert len(rmse_lines) == 4  # both headings


class TestSweepSpecFile:
    def test_parse(self, tmp_path):
        path = tmp_path / "sweep.txt"
        path.write_text("rho_f = 0.2, 0.6, 1.0\nspeeds = 10 30\nheadings = 300\nn_mc = 5\n")
        spec = load_sweep_spec(str(path))
        assert spec.rho_f == (0.2, 0.6, 1.0)
        assert spec.speeds == (10.0, 30.0)
        assert spec.headings == (300.0,)
        assert spec.n_mc == 5

    def test_defaults(self):
        spec = load_sweep_spec(None)
        assert spec.rho_f == harness.FULL_RHO_GRID
        assert spec.n_mc == 50

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "sweep.txt"
        path.write_text("bogus = 1\n")
        with pytest.raises(ConfigurationError):
            load_sweep_spec(str(path))


class TestCli:
    def _write_fast_config(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "\n".join(f"{k} = {v}" for k, v in fast_raw(noise="off").items()) + "\n"
        )
        return path

    def test_single_trial(self, tmp_path, capsys):
        cfg = self._write_fast_config(tmp_path)
        code = main(["--config", str(cfg), "--out", str(tmp_path / "out"), "--seed", "1"])
        assert code == 0
        out = capsys.readouterr().out
        assert "r_hat=" in out and "ic=" in out

    def test_single_trial_with_exports(self, tmp_path, capsys):
        cfg = self._write_fast_config(tmp_path)
        out_dir = tmp_path / "out"
        code = main(
            ["--config", str(cfg), "--out", str(out_dir), "--export-image", "--dump-gs"]
        )
        assert code == 0
        assert (out_dir / "image.pgm").exists()
        assert (out_dir / "image.csv").exists()
        assert (out_dir / "gs.bin").exists()

    def test_sweep_mode(self, tmp_path, capsys):
        cfg = self._write_fast_config(tmp_path)
        sweep = tmp_path / "sweep.txt"
        sweep.write_text("rho_f = 1.0\nspeeds = 30\nheadings = 300\nn_mc = 2\n")
        out_dir = tmp_path / "out"
        code = main(
            [
                "--config", str(cfg), "--sweep", str(sweep),
                "--out", str(out_dir), "--workers", "1", "--seed", "0",
            ]
        )
        assert code == 0
        assert (out_dir / "ic_mean_vs_rhof.csv").exists()
        assert (out_dir / "rmse_vs_rhof.csv").exists()

    def test_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("rho_f = 9\n")
        assert main(["--config", str(cfg)]) == 1
        assert "error:" in capsys.readouterr().err
