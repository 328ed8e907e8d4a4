"""Experiment drivers: error CDF with/without FS and mean error versus M."""
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import kernels
from .._accel import backend_name
from ..channel import ChannelModel
from ..localization import KNN_EPS, empirical_cdf
from ..radiomap import (
    STREAM_QUERIES,
    build_radio_map,
    generate_configuration_set,
    make_grid,
    noise_free_map,
    split_locations,
    substream,
)
from ..selection import ga_feature_select, hss_greedy, random_select
from .config import ExperimentConfig, dump_config

log = logging.getLogger(__name__)

METHOD_LABELS = {"ga": "GA-FS", "random": "random", "hss": "HSS-greedy"}

# seed-derivation tags
_T_MAP, _T_SPLIT, _T_QUERY, _T_GA, _T_RANDOM = range(10, 15)


def derived_seed(master, *key) -> int:
    """Deterministic 63-bit seed for ``key`` under the master seed."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


class Workspace:
    """Scenario, configuration superset and noise-free maps for one config."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.scenario = cfg.scenario()
        self.configs = generate_configuration_set(
            cfg.codebook(), self.scenario.ris.n, cfg.seed,
            cfg.n_uniform, cfg.n_ramp, cfg.n_random,
        )
        self.model = ChannelModel(self.scenario)
        self._grids = {}

    def grid(self, spacing):
        if spacing not in self._grids:
            g = make_grid(self.scenario.room, spacing, self.scenario.mu_height)
            self._grids[spacing] = (g, noise_free_map(self.scenario, g, self.configs, self.model))
        return self._grids[spacing]


@dataclass
class Trial:
    spacing: float
    index: int
    rmap: object
    clean: np.ndarray
    split: object
    queries: np.ndarray  # one noisy fingerprint per validation location

    @property
    def n_locations(self):
        return self.rmap.shape[0]


def prepare_trial(ws: Workspace, spacing, trial) -> Trial:
    cfg = ws.cfg
    tag = int(round(spacing * 1000))
    grid, clean = ws.grid(spacing)
    rmap = build_radio_map(ws.scenario, grid, ws.configs, cfg.k_avg,
                           derived_seed(cfg.seed, _T_MAP, tag, trial), clean=clean)
    split = split_locations(grid, cfg.train_fraction, derived_seed(cfg.seed, _T_SPLIT, tag, trial))
    rng = substream(derived_seed(cfg.seed, _T_QUERY, tag, trial), STREAM_QUERIES)
    val = split.validation
    sigma = ws.scenario.noise_sigma
    noise = rng.normal(0.0, sigma, size=(val.size, clean.shape[1])) if sigma > 0 else 0.0
    return Trial(spacing, trial, rmap, clean, split, clean[val] + noise)


def validation_errors(trial: Trial, subset, k) -> np.ndarray:
    idx = list(subset)
    val = trial.split.validation
    pts = trial.rmap.grid.points
    est = kernels.knn_batch(
        np.ascontiguousarray(trial.queries[:, idx]),
        np.ascontiguousarray(trial.rmap.rssi[:, idx]),
        pts, int(k), KNN_EPS,
    )
    return np.linalg.norm(est - pts[val], axis=1)


def select(ws: Workspace, trial: Trial, method, m):
    cfg = ws.cfg
    s_tilde = trial.rmap.shape[1]
    tag = int(round(trial.spacing * 1000))
    if method == "ga":
        return ga_feature_select(
            trial.rmap, trial.split, m, cfg.ga_params(), clean=trial.clean,
            noise_sigma=ws.scenario.noise_sigma,
            seed=derived_seed(cfg.seed, _T_GA, tag, trial.index, m),
        )
    if method == "random":
        return random_select(s_tilde, m, derived_seed(cfg.seed, _T_RANDOM, tag, trial.index, m))
    if method == "hss":
        return hss_greedy(trial.rmap, m)
    raise ValueError(f"unknown method {method!r}")


def _map_tasks(fn, tasks, threads):
    if threads <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def _write_manifest(path, entries):
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries:
            fh.write(f"{key}: {value}\n")


def _acquisition_log(cfg, ms):
    t = cfg.burst_period_ms
    for m in ms:
        log.info("acquisition time for M=%d: %.1f ms", m, m * t)
    return " ".join(f"M{m}={m * t:.1f}ms" for m in ms)


# -- experiment 1 -------------------------------------------------------------

def run_experiment_1(cfg: ExperimentConfig) -> dict:
    """Pooled validation-error CDFs for GA-FS (M), random M and all S~."""
    t0 = time.perf_counter()
    os.makedirs(cfg.out, exist_ok=True)
    ws = Workspace(cfg)
    ws.grid(cfg.exp1_spacing)

    def one(trial_idx):
        trial = prepare_trial(ws, cfg.exp1_spacing, trial_idx)
        ga = select(ws, trial, "ga", cfg.m)
        rnd = select(ws, trial, "random", cfg.m)
        full = tuple(range(trial.rmap.shape[1]))
        return (validation_errors(trial, ga.subset, cfg.knn_k),
                validation_errors(trial, rnd.subset, cfg.knn_k),
                validation_errors(trial, full, cfg.knn_k),
                ga)

    results = _map_tasks(one, range(cfg.trials), cfg.threads)
    e_fs = np.concatenate([r[0] for r in results])
    e_rand = np.concatenate([r[1] for r in results])
    e_full = np.concatenate([r[2] for r in results])
    top = max(e_fs.max(), e_rand.max(), e_full.max())
    grid = np.round(np.arange(int(np.floor(top / 0.1 + 1e-9)) + 2) * 0.1, 10)
    _, c_fs = empirical_cdf(e_fs, grid)
    _, c_rand = empirical_cdf(e_rand, grid)
    _, c_full = empirical_cdf(e_full, grid)

    csv_path = os.path.join(cfg.out, "exp1_cdf.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("error,cdf_with_fs,cdf_without_fs,cdf_full_set\n")
        for row in zip(grid, c_fs, c_rand, c_full):
            fh.write(",".join(f"{v:.6f}" for v in row) + "\n")

    manifest = os.path.join(cfg.out, "exp1_manifest.txt")
    _write_manifest(manifest, [
        ("experiment", "exp1"),
        ("master_seed", cfg.seed),
        ("backend", backend_name()),
        ("L", len(ws.grid(cfg.exp1_spacing)[0])),
        ("M", cfg.m),
        ("S_tilde", cfg.s_tilde),
        ("trials", cfg.trials),
        ("mean_error_with_fs", f"{e_fs.mean():.6f}"),
        ("mean_error_without_fs", f"{e_rand.mean():.6f}"),
        ("mean_error_full_set", f"{e_full.mean():.6f}"),
        ("ga_subsets", " | ".join(" ".join(map(str, r[3].subset)) for r in results)),
        ("acquisition_time", _acquisition_log(cfg, [cfg.m, cfg.s_tilde])),
        ("config", dump_config(cfg).strip().replace("\n", "; ")),
        ("wall_time_s", f"{time.perf_counter() - t0:.2f}"),
    ])
    return {"cdf": csv_path, "manifest": manifest,
            "errors": {"with_fs": e_fs, "without_fs": e_rand, "full_set": e_full}}


# -- experiment 2 -------------------------------------------------------------

def run_experiment_2(cfg: ExperimentConfig) -> dict:
    """Mean validation error for every (L, M, method, trial)."""
    t0 = time.perf_counter()
    os.makedirs(cfg.out, exist_ok=True)
    ws = Workspace(cfg)
    for sp in cfg.grid_spacings:
        ws.grid(sp)

    def one(task):
        sp, trial_idx = task
        trial = prepare_trial(ws, sp, trial_idx)
        rows = []
        for m in cfg.m_sweep:
            for method in cfg.methods:
                res = select(ws, trial, method, m)
                err = validation_errors(trial, res.subset, cfg.knn_k).mean()
                rows.append((trial.n_locations, m, METHOD_LABELS[method], trial_idx, float(err)))
        return rows

    tasks = [(sp, t) for sp in cfg.grid_spacings for t in range(cfg.trials)]
    rows = sorted(r for chunk in _map_tasks(one, tasks, cfg.threads) for r in chunk)

    csv_path = os.path.join(cfg.out, "exp2_error_vs_m.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("L,M,method,trial,mean_error\n")
        for L, m, method, trial, err in rows:
            fh.write(f"{L},{m},{method},{trial},{err:.6f}\n")

    agg = aggregate_rows(rows)
    agg_path = os.path.join(cfg.out, "exp2_aggregate.csv")
    with open(agg_path, "w", encoding="utf-8") as fh:
        fh.write("L,M,method,n,mean_error,std_error\n")
        for (L, m, method), (n, mean, std) in sorted(agg.items()):
            fh.write(f"{L},{m},{method},{n},{mean:.6f},{std:.6f}\n")

    entries = [
        ("experiment", "exp2"),
        ("master_seed", cfg.seed),
        ("backend", backend_name()),
        ("L_values", " ".join(str(len(ws.grid(sp)[0])) for sp in cfg.grid_spacings)),
        ("M_sweep", " ".join(map(str, cfg.m_sweep))),
        ("methods", " ".join(METHOD_LABELS[m] for m in cfg.methods)),
        ("trials", cfg.trials),
        ("rows", len(rows)),
    ]
    target = agg.get((100, 12, "GA-FS"))
    if target is not None:
        entries.append(("ga_fs_mean_error_L100_M12", f"{target[1]:.6f}"))
    entries += [
        ("acquisition_time", _acquisition_log(cfg, cfg.m_sweep)),
        ("config", dump_config(cfg).strip().replace("\n", "; ")),
        ("wall_time_s", f"{time.perf_counter() - t0:.2f}"),
    ]
    manifest = os.path.join(cfg.out, "exp2_manifest.txt")
    _write_manifest(manifest, entries)
    return {"csv": csv_path, "aggregate": agg_path, "manifest": manifest, "rows": rows}


def aggregate_rows(rows) -> dict:
    """``(L, M, method) -> (n, mean, std)`` over trials (sample std)."""
    groups = {}
    for L, m, method, _trial, err in rows:
        groups.setdefault((L, m, method), []).append(err)
    out = {}
    for key, vals in groups.items():
        v = np.asarray(vals)
        out[key] = (v.size, float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0)
    return out


def read_exp2_csv(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "L,M,method,trial,mean_error":
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            L, m, method, trial, err = line.strip().split(",")
            rows.append((int(L), int(m), method, int(trial), float(err)))
    return rows
