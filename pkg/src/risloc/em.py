"""Closed-form thin-wire dipole electromagnetics.

Self and side-by-side mutual impedances follow the induced-EMF method for
sinusoidal current distributions and are referred to the current maximum
(identical to the input impedance for half-wave elements). Node-to-node
coupling outside the array uses the far-field spherical-wave transfer
impedance of a half-wave element with effective length ``lambda / pi``.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels

C0 = 299_792_458.0
MU0 = 1.25663706212e-6
ETA0 = MU0 * C0  # 376.730313... ohm


class DomainError(ValueError):
    """Input outside the validity domain of a closed form."""


class GeometryWarning(UserWarning):
    """Geometry is outside the regime where an approximation holds."""


@dataclass(frozen=True)
class Wave:
    """Carrier description. Wavelength and wavenumber are derived."""

    frequency: float
    eta0: float = ETA0

    def __post_init__(self):
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise DomainError(f"frequency must be positive, got {self.frequency!r}")

    @property
    def wavelength(self) -> float:
        return C0 / self.frequency

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength


@dataclass(frozen=True)
class Dipole:
    """Vertically oriented thin-wire dipole.

    ``radius`` only enters the self-reactance of lengths other than a
    multiple of a half wavelength.
    """

    position: tuple
    length: float
    radius: float = 1e-3
    orientation: tuple = field(default=(0.0, 0.0, 1.0))

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise DomainError(f"position must be a finite 3-vector, got {self.position!r}")
        object.__setattr__(self, "position", pos)
        if not self.length > 0:
            raise DomainError(f"dipole length must be positive, got {self.length!r}")
        if not self.radius > 0:
            raise DomainError(f"dipole radius must be positive, got {self.radius!r}")
        o = np.asarray(self.orientation, dtype=float)
        if o.shape != (3,) or abs(np.linalg.norm(o) - 1.0) > 1e-12:
            raise DomainError("orientation must be a unit 3-vector")
        object.__setattr__(self, "orientation", tuple(o))

    @classmethod
    def half_wave(cls, position, wave: Wave, **kw):
        return cls(position=position, length=wave.wavelength / 2.0, **kw)


# -- special functions ------------------------------------------------------

def sine_integral(x):
    """Si(x) for x >= 0. Accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("sine_integral requires finite input")
    if np.any(arr < 0):
        raise DomainError("sine_integral is defined here for x >= 0")
    si, _ = kernels.sici(arr)
    si = si.reshape(arr.shape)
    return float(si) if si.ndim == 0 else si


def cosine_integral(x):
    """Ci(x) for x > 0. Accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError("cosine_integral requires finite x > 0")
    _, ci = kernels.sici(arr)
    ci = ci.reshape(arr.shape)
    return float(ci) if ci.ndim == 0 else ci


def _sici(*xs):
    si, ci = kernels.sici(np.array(xs, dtype=float))
    return si, ci


# -- impedances --------------------------------------------------------------

def self_impedance(d: Dipole, w: Wave) -> complex:
    """Induced-EMF self-impedance of a center-fed thin dipole.

    Valid for ``0.1 * lambda <= length <= lambda``.
    """
    lam = w.wavelength
    if not (0.1 * lam * (1 - 1e-12) <= d.length <= lam * (1 + 1e-12)):
        raise DomainError(
            f"self_impedance valid for length in [0.1, 1] wavelengths, "
            f"got {d.length / lam:.4g} wavelengths"
        )
    kl = w.k * d.length
    ka = 2.0 * w.k * d.radius ** 2 / d.length
    (si1, si2, _), (ci1, ci2, cia) = _sici(kl, 2 * kl, ka)
    g = kernels.EULER_GAMMA
    s, c = math.sin(kl), math.cos(kl)
    r = (w.eta0 / (2 * math.pi)) * (
        g + math.log(kl) - ci1
        + 0.5 * s * (si2 - 2 * si1)
        + 0.5 * c * (g + math.log(kl / 2) + ci2 - 2 * ci1)
    )
    x = (w.eta0 / (4 * math.pi)) * (
        2 * si1 + c * (2 * si1 - si2) - s * (2 * ci1 - ci2 - cia)
    )
    return complex(r, x)


def _exp_integral_segment(kk, dist, s, c, a, b):
    """Closed form of  int_a^b exp(j s k z) G(z - c) dz  with
    G(x) = exp(-j k R) / R,  R = sqrt(dist^2 + x^2),  s = +-1.

    Substituting w = R - s x turns the integrand into exp(-j k w) / w.
    """
    def w_of(x):
        r = math.hypot(dist, x)
        sx = s * x
        # R - sx suffers cancellation when sx ~ R
        return dist * dist / (r + sx) if sx > 0 else r - sx

    wa, wb = w_of(a - c), w_of(b - c)
    si, ci = _sici(kk * wa, kk * wb)
    e_a = complex(ci[0], -si[0])
    e_b = complex(ci[1], -si[1])
    return -s * complex(math.cos(s * kk * c), math.sin(s * kk * c)) * (e_b - e_a)


def _mutual_side_by_side(h, dist, w: Wave):
    k = w.k
    ekh = complex(math.cos(k * h), math.sin(k * h))
    ekh_c = ekh.conjugate()

    def weighted(c):
        # int_{-h}^{h} sin(k (h - |z|)) G(z - c) dz
        upper = ekh * _exp_integral_segment(k, dist, -1, c, 0.0, h) \
            - ekh_c * _exp_integral_segment(k, dist, +1, c, 0.0, h)
        lower = ekh * _exp_integral_segment(k, dist, +1, c, -h, 0.0) \
            - ekh_c * _exp_integral_segment(k, dist, -1, c, -h, 0.0)
        return (upper + lower) / 2j

    total = weighted(h) + weighted(-h) - 2.0 * math.cos(k * h) * weighted(0.0)
    return 1j * w.eta0 / (4 * math.pi) * total


def lateral_separation(d1: Dipole, d2: Dipole) -> float:
    return float(np.linalg.norm(np.subtract(d1.position, d2.position)))


def mutual_impedance_parallel(d1: Dipole, d2: Dipole, w: Wave) -> complex:
    """Induced-EMF mutual impedance of two equal parallel dipoles.

    The pair is treated as side-by-side with the separation taken as the
    distance between the centers.
    """
    if not math.isclose(d1.length, d2.length, rel_tol=1e-12):
        raise DomainError("mutual_impedance_parallel requires equal lengths")
    if not np.allclose(d1.orientation, d2.orientation, atol=1e-12):
        raise DomainError("mutual_impedance_parallel requires parallel dipoles")
    s = lateral_separation(d1, d2)
    if s == 0.0:
        raise DomainError("zero separation: use self_impedance")
    return _mutual_side_by_side(d1.length / 2.0, s, w)


def farfield_transfer_impedance(p1: Dipole, p2: Dipole, w: Wave) -> complex:
    """Far-field transfer impedance between two co-polarized half-wave
    elements: ``j eta k l_eff^2 / (4 pi) * exp(-j k r) / r``."""
    return farfield_transfer_impedance_at(
        lateral_separation(p1, p2), w
    )


def farfield_transfer_impedance_at(r, w: Wave):
    """Vectorized form of :func:`farfield_transfer_impedance` over distances."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr == 0.0):
        raise DomainError("coincident positions")
    if np.any(r_arr < w.wavelength):
        warnings.warn(
            "far-field transfer impedance used below one wavelength",
            GeometryWarning,
            stacklevel=3,
        )
    l_eff = w.wavelength / math.pi
    amp = w.eta0 * w.k * l_eff ** 2 / (4 * math.pi)
    z = 1j * amp * np.exp(-1j * w.k * r_arr) / r_arr
    return complex(z) if z.ndim == 0 else z
