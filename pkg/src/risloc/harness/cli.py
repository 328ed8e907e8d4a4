"""Command-line entry point: ``risloc <subcommand> [--config F] [--seed N] [--out D] [--threads N]``."""
import argparse
import logging
import os
import sys

import numpy as np

from ..em import DomainError
from ..localization import KnnLocalizer, PearsonLocalizer, evaluate
from ..radiomap import (
    RadioMapFormatError,
    build_radio_map,
    load_radio_map,
    restrict,
    save_configuration_set,
    save_radio_map,
    split_locations,
    substream,
    STREAM_QUERIES,
)
from ..selection import SelectionResult, ga_feature_select, hss_exhaustive, hss_greedy, random_select
from .config import ConfigError, ExperimentConfig, parse_config
from .experiments import Workspace, run_experiment_1, run_experiment_2

log = logging.getLogger("risloc")


def _load_cfg(args) -> ExperimentConfig:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out"] = args.out
    if args.threads is not None:
        over["threads"] = args.threads
    return cfg.replace(**over) if over else cfg


def _spacing(args, cfg):
    return args.spacing if args.spacing is not None else cfg.grid_spacings[0]


def cmd_gen_map(args, cfg):
    ws = Workspace(cfg)
    sp = _spacing(args, cfg)
    grid, clean = ws.grid(sp)
    rmap = build_radio_map(ws.scenario, grid, ws.configs, cfg.k_avg, cfg.seed, clean=clean)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, f"radiomap_L{len(grid)}.txt")
    save_radio_map(rmap, path)
    save_configuration_set(ws.configs, os.path.join(cfg.out, "configurations.txt"))
    print(path)


def _map_and_clean(args, cfg):
    """Map from ``--map`` (its own entries double as the noise-free base for
    fresh queries) or simulated from the config."""
    if args.map:
        rmap = load_radio_map(args.map)
        return rmap, rmap.rssi, cfg.noise_sigma
    ws = Workspace(cfg)
    grid, clean = ws.grid(_spacing(args, cfg))
    return build_radio_map(ws.scenario, grid, ws.configs, cfg.k_avg, cfg.seed, clean=clean), clean, cfg.noise_sigma


def cmd_select(args, cfg):
    rmap, clean, sigma = _map_and_clean(args, cfg)
    m = args.m if args.m is not None else cfg.m
    if args.method == "ga":
        split = split_locations(len(rmap.grid), cfg.train_fraction, cfg.seed)
        res = ga_feature_select(rmap, split, m, cfg.ga_params(), clean=clean, noise_sigma=sigma, seed=cfg.seed)
    elif args.method == "hss-greedy":
        res = hss_greedy(rmap, m)
    elif args.method == "hss-exhaustive":
        res = hss_exhaustive(rmap, m)
    else:
        res = random_select(rmap.shape[1], m, cfg.seed)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "selection.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(res.to_text())
    print(path)


def _read_queries(path, m):
    """CSV with header; columns ``true_x,true_y`` then ``m`` RSSI values."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != m + 2:
        raise RadioMapFormatError(f"{path}: expected {m + 2} columns, got {data.shape[1]}")
    return data[:, 2:], data[:, :2]


def cmd_localize(args, cfg):
    rmap, clean, sigma = _map_and_clean(args, cfg)
    if args.selection:
        with open(args.selection, encoding="utf-8") as fh:
            subset = SelectionResult.from_text(fh.read()).subset
        rmap, clean = restrict(rmap, subset), clean[:, list(subset)]
    if args.queries:
        values, xy = _read_queries(args.queries, rmap.shape[1])
        truth = np.column_stack([xy, np.full(len(xy), rmap.grid.points[0, 2])])
    else:
        rng = substream(cfg.seed, STREAM_QUERIES)
        values = clean + (rng.normal(0.0, sigma, size=clean.shape) if sigma > 0 else 0.0)
        truth = rmap.grid.points
    localizer = PearsonLocalizer() if args.method == "pearson" else KnnLocalizer(cfg.knn_k)
    report = evaluate(rmap, values, localizer, truth=truth)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "localization_errors.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    print(f"{path} mean_error={report.mean:.6f}")


def cmd_exp1(args, cfg):
    out = run_experiment_1(cfg)
    print(out["cdf"])


def cmd_exp2(args, cfg):
    out = run_experiment_2(cfg)
    print(out["csv"])


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value experiment file")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--threads", type=int, help="worker threads (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="risloc", description="RIS-assisted fingerprint localization")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-map", parents=[common], help="simulate and save a radio map")
    g.add_argument("--spacing", type=float)
    g.set_defaults(func=cmd_gen_map)

    s = sub.add_parser("select", parents=[common], help="choose an M-configuration subset")
    s.add_argument("--map", help="radio-map file (default: simulate)")
    s.add_argument("--spacing", type=float)
    s.add_argument("--method", choices=["ga", "hss-greedy", "hss-exhaustive", "random"], default="ga")
    s.add_argument("--m", type=int)
    s.set_defaults(func=cmd_select)

    loc = sub.add_parser("localize", parents=[common], help="localize queries against a map")
    loc.add_argument("--map")
    loc.add_argument("--spacing", type=float)
    loc.add_argument("--selection", help="selection record restricting the map columns")
    loc.add_argument("--queries", help="CSV: true_x,true_y,rssi...")
    loc.add_argument("--method", choices=["knn", "pearson"], default="knn")
    loc.set_defaults(func=cmd_localize)

    e1 = sub.add_parser("exp1", parents=[common], help="error CDF with and without FS")
    e1.set_defaults(func=cmd_exp1)
    e2 = sub.add_parser("exp2", parents=[common], help="mean error versus M")
    e2.set_defaults(func=cmd_exp2)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_cfg(args)
        args.func(args, cfg)
    except (ConfigError, RadioMapFormatError, DomainError, OSError, ValueError) as exc:
        print(f"risloc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
