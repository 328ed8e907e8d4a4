import os

import numpy as np
import pytest

from risloc.harness.cli import main
from risloc.harness.config import ConfigError, ExperimentConfig, dump_config, parse_config, parse_config_text
from risloc.harness.experiments import aggregate_rows, read_exp2_csv, run_experiment_1, run_experiment_2
from risloc.radiomap import load_radio_map
from risloc.selection import SelectionResult

TINY = """
n_uniform = 2
n_ramp = 2
n_random = 4
grid_spacings = 4.0, 5.0
exp1_spacing = 4.0
train_fraction = 0.2
m = 3
m_sweep = 3, 8
trials = 3
ga_population = 8
ga_generations = 3
"""


def tiny(tmp_path, extra=""):
    cfg = parse_config_text(TINY + extra)
    return cfg.replace(out=str(tmp_path / "out"))


def write_cfg(tmp_path, extra=""):
    p = tmp_path / "tiny.cfg"
    p.write_text(TINY + extra)
    return str(p)


# -- config --------------------------------------------------------------------------

def test_empty_config_is_defaults():
    cfg = parse_config_text("")
    assert cfg == ExperimentConfig()
    assert cfg.p_ap == 0.1 and cfg.noise_sigma == 3.0 and cfg.frequency == 2.4e9
    assert cfg.m == 15 and cfg.s_tilde == 50 and cfg.codebook_d == 200
    assert cfg.ris_rows * cfg.ris_cols == 16 and cfg.grid_spacings == (2.0, 1.0)
    assert cfg.knn_k == 5 and cfg.train_fraction == 0.1 and cfg.trials == 20
    assert cfg.m_sweep == (4, 8, 12, 16, 20, 24, 28)
    assert cfg.burst_period_ms == 100.0 and not cfg.los_enabled


def test_unknown_key_lists_valid_keys():
    with pytest.raises(ConfigError, match="valid keys:.*noise_sigma"):
        parse_config_text("seed = 1\nbogus = 2\n")


def test_malformed_line_and_value_have_line_numbers():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("seed = 1\njust words\n")
    with pytest.raises(ConfigError, match="line 1.*trials"):
        parse_config_text("trials = many\n")


def test_invariant_violations():
    with pytest.raises(ConfigError, match="M=60"):
        parse_config_text("m = 60\n")
    with pytest.raises(ConfigError):
        parse_config_text("trials = 0\n")
    with pytest.raises(ConfigError, match="unknown methods"):
        parse_config_text("methods = ga, nn\n")


def test_dump_parse_round_trip(tmp_path):
    for cfg in (ExperimentConfig(), tiny(tmp_path, "los_enabled = true\nseed = 12345678901\n")):
        assert parse_config_text(dump_config(cfg)) == cfg
    p = tmp_path / "c.cfg"
    p.write_text("# comment\n\nseed = 4  # trailing\n")
    assert parse_config(p).seed == 4


# -- experiments ----------------------------------------------------------------------

def test_exp1_noise_free_full_set_is_unit_step(tmp_path):
    cfg = tiny(tmp_path, "noise_sigma = 0.0\n")
    out = run_experiment_1(cfg)
    data = np.loadtxt(out["cdf"], delimiter=",", skiprows=1)
    assert data[0, 0] == 0.0 and np.all(data[:, 3] == 1.0)
    for col in (1, 2, 3):
        assert np.all(np.diff(data[:, col]) >= 0) and data[-1, col] == 1.0 and data[0, col] >= 0


def test_exp1_deterministic_and_manifest(tmp_path):
    a = run_experiment_1(tiny(tmp_path / "a"))
    b = run_experiment_1(tiny(tmp_path / "b"))
    assert open(a["cdf"], "rb").read() == open(b["cdf"], "rb").read()
    with open(a["manifest"]) as fh:
        text = fh.read()
    with open(a["cdf"]) as fh:
        assert fh.readline().strip() == "error,cdf_with_fs,cdf_without_fs,cdf_full_set"
    for key in ("master_seed: 0", "wall_time_s", "acquisition_time: M3=300.0ms", "ga_subsets"):
        assert key in text


def test_exp2_rows_aggregate_and_full_set(tmp_path):
    cfg = tiny(tmp_path)
    out = run_experiment_2(cfg)
    rows = read_exp2_csv(out["csv"])
    assert len(rows) == 2 * 2 * 3 * 3
    assert rows == sorted(rows)
    # M = S~: every method selects the same (full) subset
    for L in (25, 16):
        for t in range(3):
            errs = {r[4] for r in rows if r[0] == L and r[1] == 8 and r[3] == t}
            assert len(errs) == 1
    agg = aggregate_rows(rows)
    lines = open(out["aggregate"]).read().splitlines()[1:]
    assert len(lines) == len(agg) == 12
    for line in lines:
        L, m, method, n, mean, _std = line.split(",")
        vals = [r[4] for r in rows if (r[0], r[1], r[2]) == (int(L), int(m), method)]
        assert int(n) == 3 and float(mean) == pytest.approx(np.mean(vals), abs=1e-6)


def test_exp2_thread_count_does_not_change_bytes(tmp_path):
    a = run_experiment_2(tiny(tmp_path / "a"))
    b = run_experiment_2(tiny(tmp_path / "b").replace(threads=3))
    for key in ("csv", "aggregate"):
        assert open(a[key], "rb").read() == open(b[key], "rb").read()


# -- CLI ------------------------------------------------------------------------------

def test_cli_pipeline(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = str(tmp_path / "run")
    assert main(["gen-map", "--config", cfg, "--out", out, "--spacing", "4"]) == 0
    map_path = os.path.join(out, "radiomap_L25.txt")
    rmap = load_radio_map(map_path)
    assert rmap.shape == (25, 8)
    assert os.path.exists(os.path.join(out, "configurations.txt"))
    for method in ("random", "hss-greedy", "hss-exhaustive", "ga"):
        assert main(["select", "--config", cfg, "--out", out, "--map", map_path,
                     "--method", method, "--m", "3"]) == 0
        sel = SelectionResult.from_text(open(os.path.join(out, "selection.txt")).read())
        assert sel.m == 3
    assert main(["localize", "--config", cfg, "--out", out, "--map", map_path,
                 "--selection", os.path.join(out, "selection.txt")]) == 0
    csv = open(os.path.join(out, "localization_errors.csv")).read().splitlines()
    assert csv[0] == "true_x,true_y,est_x,est_y,error" and len(csv) == 1 + 25 + 3
    q = tmp_path / "q.csv"
    q.write_text("true_x,true_y," + ",".join(f"r{i}" for i in range(8)) + "\n"
                 + ",".join(["2.0", "2.0"] + [f"{v:.6f}" for v in rmap.rssi[0]]) + "\n")
    assert main(["localize", "--config", cfg, "--out", out, "--map", map_path,
                 "--queries", str(q), "--method", "pearson"]) == 0
    assert "mean_error=0.000000" in capsys.readouterr().out


def test_cli_experiments_and_seed_override(tmp_path):
    cfg = write_cfg(tmp_path)
    assert main(["exp2", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "7"]) == 0
    assert main(["exp2", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "7", "--threads", "2"]) == 0
    assert main(["exp2", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "8"]) == 0
    read = lambda d: open(tmp_path / d / "exp2_error_vs_m.csv", "rb").read()
    assert read("a") == read("b") != read("c")
    assert "master_seed: 7" in open(tmp_path / "a" / "exp2_manifest.txt").read()
    assert main(["exp1", "--config", cfg, "--out", str(tmp_path / "e1")]) == 0


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense_key = 1\n")
    assert main(["exp2", "--config", str(bad)]) == 2
    assert "valid keys" in capsys.readouterr().err
    assert main(["select", "--map", str(tmp_path / "missing.txt")]) == 2
    with pytest.raises(SystemExit):
        main(["no-such-command"])
