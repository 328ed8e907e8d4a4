"""Configuration supersets, offline fingerprint databases and their files."""
import io
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, LoadCodebook, RisConfiguration, Scenario, power_to_dbm, received_power
from .em import DomainError

log = logging.getLogger(__name__)

FORMAT_TAG = "risloc-radiomap v1"
CONFIGSET_TAG = "risloc-configset v1"

# Top-level stream tags for seeded substreams.
STREAM_CONFIGS = 1
STREAM_MAP = 2
STREAM_SPLIT = 3
STREAM_QUERIES = 4
STREAM_GA = 5
STREAM_RANDOM = 6


class RadioMapFormatError(ValueError):
    """Malformed radio-map or configuration-set file."""


class ScenarioMismatchWarning(UserWarning):
    pass


def substream(seed, *key) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``; evaluation-order free."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


# -- grid -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReferenceGrid:
    points: np.ndarray
    spacing: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise DomainError("grid points must be an (L, 3) array with L >= 1")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def __eq__(self, other):
        return (isinstance(other, ReferenceGrid) and self.spacing == other.spacing
                and np.array_equal(self.points, other.points))

    def subset(self, idx) -> "ReferenceGrid":
        return ReferenceGrid(self.points[np.asarray(idx)], self.spacing)


def make_grid(room=(0.0, 20.0, 0.0, 20.0), spacing=1.0, height=1.5) -> ReferenceGrid:
    """Cell-centred lattice over ``room``, row-major (y outer, x inner)."""
    if not spacing > 0:
        raise DomainError("grid spacing must be positive")
    x0, x1, y0, y1 = room
    nx = int(round((x1 - x0) / spacing))
    ny = int(round((y1 - y0) / spacing))
    if nx < 1 or ny < 1:
        raise DomainError("grid spacing larger than the room")
    xs = x0 + (np.arange(nx) + 0.5) * spacing
    ys = y0 + (np.arange(ny) + 0.5) * spacing
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, float(height))])
    return ReferenceGrid(pts, float(spacing))


# -- configuration superset -------------------------------------------------

@dataclass(frozen=True)
class ConfigurationSet:
    configs: tuple
    seed: int = 0

    def __post_init__(self):
        ids = [c.id for c in self.configs]
        if len(set(ids)) != len(ids):
            raise DomainError("configuration ids must be unique")

    def __len__(self):
        return len(self.configs)

    def __iter__(self):
        return iter(self.configs)

    def __getitem__(self, i):
        return self.configs[i]

    @property
    def ids(self):
        return [c.id for c in self.configs]

    def counts(self) -> dict:
        out = {}
        for c in self.configs:
            out[c.kind] = out.get(c.kind, 0) + 1
        return out


def generate_configuration_set(codebook: LoadCodebook, n: int, seed: int,
                               n_uniform=10, n_ramp=10, n_random=30) -> ConfigurationSet:
    """Uniform, linear-ramp and random load patterns drawn from ``codebook``.

    Uniform patterns use ``n_uniform`` codebook entries evenly indexed from
    first to last. Ramp ``j`` interpolates linearly across the element index
    between ``alpha_j * X_min`` and ``alpha_j * X_max`` with ``alpha_j``
    evenly spaced in ``(0, 1]``, then snaps to the codebook. Random patterns
    draw each element uniformly from the codebook.
    """
    table = np.asarray(codebook.reactances)
    configs = []
    for j, idx in enumerate(np.round(np.linspace(0, codebook.d - 1, n_uniform)).astype(int)):
        configs.append(RisConfiguration.reactive(np.full(n, table[idx]), f"uniform-{j:02d}", "uniform"))
    ramp_pos = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
    for j, alpha in enumerate(np.arange(1, n_ramp + 1) / n_ramp):
        lo, hi = alpha * table[0], alpha * table[-1]
        x = table[codebook.quantize(lo + (hi - lo) * ramp_pos)]
        configs.append(RisConfiguration.reactive(x, f"ramp-{j:02d}", "linear-ramp"))
    rng = substream(seed, STREAM_CONFIGS)
    for j in range(n_random):
        x = table[rng.integers(0, codebook.d, size=n)]
        configs.append(RisConfiguration.reactive(x, f"random-{j:02d}", "random"))
    return ConfigurationSet(tuple(configs), int(seed))


# -- radio map ----------------------------------------------------------------

@dataclass(eq=False)
class RadioMap:
    """``rssi[l, m]`` in dBm for grid point ``l`` under configuration ``m``."""

    rssi: np.ndarray
    grid: ReferenceGrid
    config_ids: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rssi = np.asarray(self.rssi, dtype=float)
        if self.rssi.ndim != 2 or self.rssi.size == 0:
            raise DomainError("radio map must be a non-empty L x M matrix")
        if not np.all(np.isfinite(self.rssi)):
            raise DomainError("radio map contains non-finite entries")
        if self.rssi.shape[0] != len(self.grid):
            raise DomainError("radio map rows do not match the grid")
        self.config_ids = list(self.config_ids)
        if self.rssi.shape[1] != len(self.config_ids):
            raise DomainError("radio map columns do not match config ids")

    @property
    def shape(self):
        return self.rssi.shape

    def __eq__(self, other):
        return (isinstance(other, RadioMap) and self.grid == other.grid
                and self.config_ids == other.config_ids
                and np.array_equal(self.rssi, other.rssi))


def noise_free_map(s: Scenario, grid: ReferenceGrid, configs, model: ChannelModel = None) -> np.ndarray:
    """Noise-free RSSI matrix (dBm), shape ``(L, M)``."""
    model = model or ChannelModel(s)
    cols = []
    for m, cfg in enumerate(configs):
        try:
            h = model.gains(grid.points, cfg)
        except Exception as exc:
            raise type(exc)(f"config {m} ({cfg.id}): {exc}") from exc
        cols.append(power_to_dbm(received_power(s, h)))
    return np.column_stack(cols)


def cell_noise(seed, shape, k, sigma, stream=STREAM_MAP) -> np.ndarray:
    """Mean of ``k`` N(0, sigma^2) draws per cell from per-cell substreams."""
    L, M = shape
    out = np.zeros(shape)
    if sigma == 0:
        return out
    for l in range(L):
        for m in range(M):
            out[l, m] = substream(seed, stream, l, m).normal(0.0, sigma, size=k).mean()
    return out


def build_radio_map(s: Scenario, grid: ReferenceGrid, configs, k=10, seed=0, clean=None) -> RadioMap:
    """Offline database: each entry averages ``k`` noisy RSSI samples.

    ``clean`` may pass a precomputed :func:`noise_free_map` to skip the
    channel evaluation.
    """
    if k < 1:
        raise DomainError("averaging count k must be >= 1")
    if clean is None:
        clean = noise_free_map(s, grid, configs)
    rssi = clean + cell_noise(seed, clean.shape, k, s.noise_sigma)
    ids = [c.id for c in configs] if not isinstance(configs, ConfigurationSet) else configs.ids
    meta = {"scenario_hash": s.digest(), "seed": int(seed), "k": int(k)}
    return RadioMap(rssi, grid, ids, meta)


def restrict(rmap: RadioMap, subset) -> RadioMap:
    idx = np.asarray(list(subset), dtype=int)
    if idx.size == 0:
        raise DomainError("restriction subset is empty")
    if idx.min() < 0 or idx.max() >= rmap.shape[1]:
        raise DomainError(f"restriction index out of range for {rmap.shape[1]} columns")
    return RadioMap(rmap.rssi[:, idx], rmap.grid, [rmap.config_ids[i] for i in idx], dict(rmap.meta))


def restrict_rows(rmap: RadioMap, rows) -> RadioMap:
    rows = np.asarray(rows, dtype=int)
    return RadioMap(rmap.rssi[rows], rmap.grid.subset(rows), rmap.config_ids, dict(rmap.meta))


@dataclass(frozen=True)
class LocationSplit:
    train: np.ndarray
    validation: np.ndarray


def split_locations(grid_or_size, fraction=0.1, seed=0) -> LocationSplit:
    """Random disjoint split with ``floor(L * fraction)`` training locations."""
    n = grid_or_size if isinstance(grid_or_size, int) else len(grid_or_size)
    if n < 10:
        raise DomainError("need at least 10 locations to split")
    n_train = int(math.floor(n * fraction + 1e-9))
    if not 1 <= n_train < n:
        raise DomainError(f"fraction {fraction} gives a degenerate split of {n} locations")
    perm = substream(seed, STREAM_SPLIT).permutation(n)
    return LocationSplit(np.sort(perm[:n_train]), np.sort(perm[n_train:]))


# -- file formats -------------------------------------------------------------

def _fmt(v):
    return f"{v:.6f}"


def save_radio_map(rmap: RadioMap, path):
    """Header block of ``# key: value`` lines, then a CSV body ``x,y,<ids>``.

    The body is written with six decimals; the exact float64 values are
    kept in a hex block so that a round-trip is bit-exact.
    """
    L, M = rmap.shape
    buf = io.StringIO()
    buf.write(f"# {FORMAT_TAG}\n")
    meta = dict(rmap.meta)
    for key in ("scenario_hash", "seed", "k"):
        buf.write(f"# {key}: {meta.get(key, '')}\n")
    buf.write(f"# L: {L}\n# M: {M}\n# spacing: {float(rmap.grid.spacing)!r}\n")
    buf.write(f"# height: {float(rmap.grid.points[0, 2])!r}\n")
    buf.write("x,y," + ",".join(rmap.config_ids) + "\n")
    for l in range(L):
        x, y = rmap.grid.points[l, :2]
        buf.write(",".join([repr(float(x)), repr(float(y))] + [_fmt(v) for v in rmap.rssi[l]]) + "\n")
    buf.write("# exact\n")
    for l in range(L):
        buf.write("# " + " ".join(float(v).hex() for v in rmap.rssi[l]) + "\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def load_radio_map(path, expect_scenario_hash=None) -> RadioMap:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != f"# {FORMAT_TAG}":
        raise RadioMapFormatError(f"{path}: line 1: missing '{FORMAT_TAG}' header")
    header = {}
    i = 1
    while i < len(lines) and lines[i].startswith("# "):
        key, sep, value = lines[i][2:].partition(": ")
        if not sep:
            raise RadioMapFormatError(f"{path}: line {i + 1}: malformed header field")
        header[key] = value
        i += 1
    for key in ("L", "M", "spacing", "height"):
        if key not in header:
            raise RadioMapFormatError(f"{path}: header field '{key}' missing")
    try:
        L, M = int(header["L"]), int(header["M"])
        spacing, height = float(header["spacing"]), float(header["height"])
    except ValueError as exc:
        raise RadioMapFormatError(f"{path}: bad header value: {exc}") from None
    if L < 1 or M < 1:
        raise RadioMapFormatError(f"{path}: empty radio map (L={L}, M={M})")
    if i >= len(lines):
        raise RadioMapFormatError(f"{path}: line {i + 1}: missing column header")
    cols = lines[i].split(",")
    if len(cols) != M + 2 or cols[:2] != ["x", "y"]:
        raise RadioMapFormatError(f"{path}: line {i + 1}: expected x,y and {M} config ids")
    ids = cols[2:]
    xy = np.empty((L, 2))
    rssi = np.empty((L, M))
    for l in range(L):
        ln = i + 1 + l
        if ln >= len(lines) or lines[ln].startswith("#"):
            raise RadioMapFormatError(f"{path}: line {ln + 1}: expected {L} data rows, found {l}")
        fields = lines[ln].split(",")
        if len(fields) != M + 2:
            raise RadioMapFormatError(
                f"{path}: line {ln + 1}: expected {M + 2} fields, got {len(fields)}")
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise RadioMapFormatError(f"{path}: line {ln + 1}: {exc}") from None
        xy[l] = vals[:2]
        rssi[l] = vals[2:]
    ln = i + 1 + L
    if ln < len(lines) and lines[ln] == "# exact":
        exact = lines[ln + 1: ln + 1 + L]
        if len(exact) != L:
            raise RadioMapFormatError(f"{path}: exact block truncated")
        for l, row in enumerate(exact):
            try:
                vals = [float.fromhex(t) for t in row[2:].split()]
            except ValueError as exc:
                raise RadioMapFormatError(f"{path}: line {ln + 2 + l}: {exc}") from None
            if len(vals) != M:
                raise RadioMapFormatError(f"{path}: line {ln + 2 + l}: expected {M} values")
            if np.any(np.abs(np.asarray(vals) - rssi[l]) > 5e-7):
                raise RadioMapFormatError(f"{path}: line {ln + 2 + l}: exact block disagrees with CSV body")
            rssi[l] = vals
    elif ln < len(lines) and lines[ln].strip():
        raise RadioMapFormatError(f"{path}: line {ln + 1}: trailing data")
    pts = np.column_stack([xy, np.full(L, height)])
    meta = {"scenario_hash": header.get("scenario_hash", ""),
            "seed": int(header["seed"]) if header.get("seed", "").lstrip("-").isdigit() else header.get("seed"),
            "k": int(header["k"]) if header.get("k", "").isdigit() else header.get("k")}
    if expect_scenario_hash is not None and meta["scenario_hash"] != expect_scenario_hash:
        warnings.warn(
            f"{path}: scenario hash {meta['scenario_hash']!r} != expected {expect_scenario_hash!r}",
            ScenarioMismatchWarning, stacklevel=2)
    return RadioMap(rssi, ReferenceGrid(pts, spacing), ids, meta)


def save_configuration_set(cs: ConfigurationSet, path):
    """One line per configuration: ``id,kind,X_1,...,X_N`` (reactances, ohm)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {CONFIGSET_TAG}\n# seed: {cs.seed}\n")
        for c in cs:
            fh.write(",".join([c.id, c.kind] + [repr(float(x)) for x in c.reactances()]) + "\n")


def load_configuration_set(path) -> ConfigurationSet:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != f"# {CONFIGSET_TAG}":
        raise RadioMapFormatError(f"{path}: line 1: missing '{CONFIGSET_TAG}' header")
    seed = 0
    configs = []
    for no, line in enumerate(lines[1:], start=2):
        if line.startswith("# seed: "):
            seed = int(line[8:])
            continue
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) < 3:
            raise RadioMapFormatError(f"{path}: line {no}: expected id,kind,reactances")
        try:
            x = [float(v) for v in parts[2:]]
        except ValueError as exc:
            raise RadioMapFormatError(f"{path}: line {no}: {exc}") from None
        configs.append(RisConfiguration.reactive(x, parts[0], parts[1]))
    return ConfigurationSet(tuple(configs), seed)
