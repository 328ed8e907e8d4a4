"""Mutual-coupling-aware end-to-end channel through a dipole RIS."""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .em import (
    DomainError,
    Dipole,
    Wave,
    farfield_transfer_impedance_at,
    mutual_impedance_parallel,
    self_impedance,
)

log = logging.getLogger(__name__)

#: RSSI reported for a channel with exactly zero gain.
RSSI_FLOOR_DBM = -200.0
PIVOT_RTOL = 1e-12


class SingularConfigurationError(ArithmeticError):
    """The loaded coupling matrix of a configuration is numerically singular."""


@dataclass(frozen=True)
class RisArray:
    elements: tuple
    rows: int
    cols: int
    spacing: float
    center: tuple

    @property
    def n(self) -> int:
        return len(self.elements)

    def positions(self) -> np.ndarray:
        return np.array([e.position for e in self.elements])


@dataclass(frozen=True)
class LoadCodebook:
    """D purely reactive load values (ohm), strictly increasing."""

    reactances: tuple

    def __post_init__(self):
        x = np.asarray(self.reactances, dtype=float)
        if x.ndim != 1 or x.size < 1 or not np.all(np.isfinite(x)):
            raise DomainError("codebook needs at least one finite reactance")
        if np.any(np.diff(x) <= 0):
            raise DomainError("codebook reactances must be strictly increasing")
        object.__setattr__(self, "reactances", tuple(float(v) for v in x))

    @classmethod
    def uniform(cls, d=200, x_min=-300.0, x_max=300.0):
        return cls(tuple(np.linspace(x_min, x_max, d)))

    @property
    def d(self) -> int:
        return len(self.reactances)

    def quantize(self, x):
        """Index of the nearest codebook value for each reactance in ``x``."""
        table = np.asarray(self.reactances)
        x = np.asarray(x, dtype=float)
        pos = np.clip(np.searchsorted(table, x), 1, table.size - 1) if table.size > 1 \
            else np.zeros(x.shape, dtype=int)
        if table.size == 1:
            return pos
        left = table[pos - 1]
        right = table[pos]
        return np.where(np.abs(x - left) <= np.abs(right - x), pos - 1, pos)


@dataclass(frozen=True)
class RisConfiguration:
    """One RIS state: a complex load per element.

    Codebook-generated configurations are purely reactive; arbitrary
    complex loads are accepted for analysis (e.g. open-circuit surrogates).
    """

    loads: tuple
    id: str
    kind: str = "custom"

    def __post_init__(self):
        z = np.asarray(self.loads, dtype=complex).ravel()
        if z.size < 1 or not np.all(np.isfinite(z)):
            raise DomainError("configuration loads must be finite")
        object.__setattr__(self, "loads", tuple(complex(v) for v in z))

    @classmethod
    def reactive(cls, reactances, id, kind="custom"):
        return cls(tuple(1j * np.asarray(reactances, dtype=float)), id, kind)

    @property
    def n(self) -> int:
        return len(self.loads)

    def reactances(self) -> np.ndarray:
        return np.asarray(self.loads).imag.copy()


@dataclass(frozen=True)
class Scenario:
    """Scene description. Distances in metres, power in watts."""

    wave: Wave = field(default_factory=lambda: Wave(2.4e9))
    room: tuple = (0.0, 20.0, 0.0, 20.0)
    ap_position: tuple = (-1.0, 21.0, 1.5)
    ris_center: tuple = (10.0, 0.0, 1.5)
    ris_rows: int = 4
    ris_cols: int = 4
    ris_spacing: float = None  # defaults to half a wavelength
    mu_height: float = 1.5
    p_ap: float = 0.1
    noise_sigma: float = 3.0
    los_enabled: bool = False
    burst_period_ms: float = 100.0
    z0_ref: float = 50.0

    def __post_init__(self):
        if self.ris_spacing is None:
            object.__setattr__(self, "ris_spacing", self.wave.wavelength / 2.0)
        if not self.p_ap > 0:
            raise DomainError("p_ap must be positive")
        if not self.noise_sigma >= 0:
            raise DomainError("noise_sigma must be non-negative")
        if not self.z0_ref > 0:
            raise DomainError("z0_ref must be positive")
        vals = (*self.room, *self.ap_position, *self.ris_center, self.mu_height)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("scenario geometry must be finite")
        x0, x1, y0, y1 = self.room
        if not (x1 > x0 and y1 > y0):
            raise DomainError("room must have positive extent")

    @property
    def ap(self) -> Dipole:
        return Dipole.half_wave(self.ap_position, self.wave)

    @property
    def ris(self) -> RisArray:
        return build_ris_array(self.ris_rows, self.ris_cols, self.ris_spacing,
                               self.ris_center, self.wave)

    def with_(self, **kw) -> "Scenario":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {
            "frequency": self.wave.frequency,
            "room": list(self.room),
            "ap_position": list(self.ap_position),
            "ris_center": list(self.ris_center),
            "ris_rows": self.ris_rows,
            "ris_cols": self.ris_cols,
            "ris_spacing": self.ris_spacing,
            "mu_height": self.mu_height,
            "p_ap": self.p_ap,
            "noise_sigma": self.noise_sigma,
            "los_enabled": self.los_enabled,
            "burst_period_ms": self.burst_period_ms,
            "z0_ref": self.z0_ref,
        }

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def build_ris_array(rows, cols, spacing, center, wave: Wave) -> RisArray:
    """Row-major grid of half-wave dipoles in the x-z (wall) plane.

    Rows run along z, columns along x; the grid is centered at ``center``.
    """
    if rows < 1 or cols < 1:
        raise DomainError("rows and cols must be >= 1")
    if not spacing > 0:
        raise DomainError(f"spacing must be positive, got {spacing!r}")
    cx, cy, cz = (float(v) for v in center)
    elements = []
    for r in range(rows):
        z = cz + (r - (rows - 1) / 2.0) * spacing
        for c in range(cols):
            x = cx + (c - (cols - 1) / 2.0) * spacing
            elements.append(Dipole.half_wave((x, cy, z), wave))
    return RisArray(tuple(elements), rows, cols, float(spacing), (cx, cy, cz))


def coupling_matrix(ris: RisArray, wave: Wave) -> np.ndarray:
    n = ris.n
    z = np.empty((n, n), dtype=complex)
    for u in range(n):
        z[u, u] = self_impedance(ris.elements[u], wave)
        for v in range(u + 1, n):
            z[u, v] = z[v, u] = mutual_impedance_parallel(ris.elements[u], ris.elements[v], wave)
    return z


def reflection_matrix(z_ss, config: RisConfiguration) -> np.ndarray:
    """``-(Z_SS + diag(loads))^-1`` via LU with partial pivoting."""
    z_ss = np.asarray(z_ss, dtype=complex)
    if z_ss.shape != (config.n, config.n):
        raise DomainError(
            f"coupling matrix {z_ss.shape} does not match {config.n} loads"
        )
    a = z_ss + np.diag(np.asarray(config.loads))
    inv, failed = kernels.lu_inverse(np.ascontiguousarray(a), PIVOT_RTOL)
    if failed >= 0:
        raise SingularConfigurationError(
            f"configuration {config.id!r} is numerically singular (pivot {failed})"
        )
    return -inv


def transfer_vector(node: Dipole, ris: RisArray, wave: Wave) -> np.ndarray:
    r = np.linalg.norm(ris.positions() - np.asarray(node.position), axis=1)
    if np.any(r == 0.0):
        raise DomainError("node coincides with an RIS element")
    return farfield_transfer_impedance_at(r, wave)


def transfer_vectors(points, ris: RisArray, wave: Wave) -> np.ndarray:
    """Transfer vectors for many nodes at once, shape ``(P, N)``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(pts[:, None, :] - ris.positions()[None, :, :], axis=-1)
    if np.any(r == 0.0):
        raise DomainError("node coincides with an RIS element")
    return farfield_transfer_impedance_at(r, wave)


class ChannelModel:
    """Caches the geometry-only parts of the channel for one scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.ris = scenario.ris
        self.z_ss = coupling_matrix(self.ris, scenario.wave)
        self.z_ts = transfer_vector(scenario.ap, self.ris, scenario.wave)
        self._phi = {}

    def phi(self, config: RisConfiguration) -> np.ndarray:
        key = (config.id, config.loads)
        if key not in self._phi:
            self._phi[key] = reflection_matrix(self.z_ss, config)
        return self._phi[key]

    def _check_points(self, pts):
        s = self.scenario
        x0, x1, y0, y1 = s.room
        inside = (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
        if not inside.all():
            raise DomainError(f"MU position {pts[~inside][0].tolist()} outside the room")
        if np.any(np.all(pts == np.asarray(s.ap_position), axis=1)):
            raise DomainError("MU coincides with the AP")

    def gains(self, points, config: RisConfiguration) -> np.ndarray:
        """Dimensionless end-to-end channel for every point, shape ``(P,)``."""
        s = self.scenario
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self._check_points(pts)
        z_rs = transfer_vectors(pts, self.ris, s.wave)
        h = z_rs @ (self.phi(config) @ self.z_ts)
        if s.los_enabled:
            r = np.linalg.norm(pts - np.asarray(s.ap_position), axis=1)
            h = h + farfield_transfer_impedance_at(r, s.wave)
        return h / s.z0_ref


def end_to_end_channel(s: Scenario, config: RisConfiguration, mu) -> complex:
    """H = (H_LOS + z_RS^T Phi z_TS) / z0_ref at the MU position ``mu``."""
    return complex(ChannelModel(s).gains(mu, config)[0])


def received_power(s: Scenario, h) -> np.ndarray:
    return np.abs(h) ** 2 * s.p_ap


def power_to_dbm(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(p > 0, 30.0 + 10.0 * np.log10(np.where(p > 0, p, 1.0)), RSSI_FLOOR_DBM)
    return float(out) if out.ndim == 0 else out


def rssi_sample(s: Scenario, h, rng: np.random.Generator, size=None):
    """Noisy RSSI (dBm) for channel ``h``: ``30 + 10 log10(|h|^2 p_ap) + X``.

    A zero channel maps to :data:`RSSI_FLOOR_DBM` (noise is still drawn so
    the generator advances identically).
    """
    p = received_power(s, h)
    if np.any(p > s.p_ap):
        log.warning("channel gain above unity: surrogate model is not passive here")
    clean = power_to_dbm(p)
    noise = rng.normal(0.0, s.noise_sigma, size=size) if s.noise_sigma > 0 else \
        (np.zeros(size) if size is not None else 0.0)
    out = np.where(np.asarray(p) > 0, clean + noise, RSSI_FLOOR_DBM)
    return float(out) if np.ndim(out) == 0 else out
