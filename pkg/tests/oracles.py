"""Independent reference computations used by the tests.

Nothing here imports the code under test beyond plain data types.
"""
import itertools
import math
import warnings

import numpy as np
from scipy import integrate

EULER_GAMMA = 0.5772156649015329
ETA0 = 1.25663706212e-6 * 299_792_458.0


# -- special functions by quadrature ------------------------------------------

def _quad(f, a, b):
    # QUADPACK reports roundoff once it reaches machine precision; that is
    # the regime we want, so the warning carries no information here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, limit=500, epsabs=1e-14, epsrel=1e-14)


def si_quad(x):
    if x == 0:
        return 0.0
    val, _ = _quad(np.sinc, 0.0, x / math.pi)
    return math.pi * val  # sin(t)/t = sinc(t/pi)


def ci_quad(x):
    # (cos t - 1)/t = -2 sin^2(t/2)/t avoids cancellation near 0
    f = lambda t: -2.0 * math.sin(0.5 * t) ** 2 / t if t else 0.0
    val, _ = _quad(f, 0.0, x)
    return EULER_GAMMA + math.log(x) + val


def sici_cumulative(xs, width=0.25, order=24):
    """Si and Ci on sorted ``xs`` by summing Gauss-Legendre pieces of the
    defining integrals over [0, x] in steps no wider than ``width``."""
    xs = np.asarray(xs, dtype=float)
    assert np.all(np.diff(xs) > 0) and xs[0] > 0
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = [0.0]
    for x in xs:
        a = edges[-1]
        n = max(1, int(math.ceil((x - a) / width)))
        edges.extend(np.linspace(a, x, n + 1)[1:])
    edges = np.asarray(edges)
    a, b = edges[:-1], edges[1:]
    t = 0.5 * (b - a)[:, None] * nodes[None, :] + 0.5 * (a + b)[:, None]
    w = 0.5 * (b - a)[:, None] * weights[None, :]
    si_piece = (w * np.sinc(t / math.pi)).sum(axis=1)
    ci_piece = (w * (-2.0 * np.sin(0.5 * t) ** 2 / t)).sum(axis=1)
    si_cum = np.concatenate([[0.0], np.cumsum(si_piece)])
    ci_cum = np.concatenate([[0.0], np.cumsum(ci_piece)])
    idx = np.searchsorted(edges, xs)
    return si_cum[idx], EULER_GAMMA + np.log(xs) + ci_cum[idx]


# -- induced-EMF impedances by quadrature ---------------------------------------

def self_impedance_quad(length_wl, radius_wl=1e-3 / 0.12491352416666667, eta=ETA0):
    """Induced-EMF self impedance (current-maximum reference) with Si/Ci
    taken from :func:`si_quad` / :func:`ci_quad`. Lengths in wavelengths."""
    kl = 2 * math.pi * length_wl
    ka = 2 * (2 * math.pi) * radius_wl ** 2 / length_wl
    si1, si2 = si_quad(kl), si_quad(2 * kl)
    ci1, ci2, cia = ci_quad(kl), ci_quad(2 * kl), ci_quad(ka)
    s, c = math.sin(kl), math.cos(kl)
    g = EULER_GAMMA
    r = eta / (2 * math.pi) * (g + math.log(kl) - ci1 + 0.5 * s * (si2 - 2 * si1)
                               + 0.5 * c * (g + math.log(kl / 2) + ci2 - 2 * ci1))
    x = eta / (4 * math.pi) * (2 * si1 + c * (2 * si1 - si2) - s * (2 * ci1 - ci2 - cia))
    return complex(r, x)


def mutual_impedance_quad(sep_wl, length_wl=0.5, eta=ETA0):
    """Side-by-side induced-EMF mutual impedance by direct quadrature of the
    exact near field of a sinusoidal current along the second dipole."""
    k = 2 * math.pi
    h = length_wl / 2

    def g(z):
        r = math.hypot(sep_wl, z)
        return complex(math.cos(k * r), -math.sin(k * r)) / r

    def f(z):
        return math.sin(k * (h - abs(z))) * (g(z - h) + g(z + h) - 2 * math.cos(k * h) * g(z))

    opts = dict(limit=400, epsabs=1e-13, epsrel=1e-13, points=[0.0])
    re = integrate.quad(lambda z: f(z).real, -h, h, **opts)[0]
    im = integrate.quad(lambda z: f(z).imag, -h, h, **opts)[0]
    return 1j * eta / (4 * math.pi) * complex(re, im)


def farfield_formula(r, frequency):
    lam = 299_792_458.0 / frequency
    k = 2 * math.pi / lam
    l_eff = lam / math.pi
    return 1j * ETA0 * k * l_eff ** 2 / (4 * math.pi) * complex(math.cos(k * r), -math.sin(k * r)) / r


# -- linear algebra -------------------------------------------------------------

def gauss_jordan_inverse(a):
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    aug = np.hstack([a, np.eye(n, dtype=complex)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


# -- matching and selection ---------------------------------------------------------

def pearson_plain(a, b):
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    return cov / math.sqrt(va * vb)


def permuted_pearson_bruteforce(q, rows, tie_tol=1e-12):
    """Exhaustive (l, k) scan; scores within ``tie_tol`` are ties, resolved
    to the lowest l then the lowest k."""
    best = (-math.inf, -1, -1)
    m = len(q)
    for l, row in enumerate(rows):
        if max(row) == min(row):
            continue
        for k in range(m):
            shifted = [row[(j + k) % m] for j in range(m)]
            r = min(1.0, max(-1.0, pearson_plain(q, shifted)))
            if r > best[0] + tie_tol:
                best = (r, l, k)
    return best


def dissimilarity_loops(values):
    m = len(values)
    tot = 0.0
    for i in range(m):
        for j in range(m):
            if i != j:
                tot += (values[i] - values[j]) ** 2
    return 2.0 * tot / (m * (m - 1))


def hss_bruteforce(rssi, m):
    rssi = np.asarray(rssi, dtype=float)
    best, best_val = None, -math.inf
    for combo in itertools.combinations(range(rssi.shape[1]), m):
        val = sum(dissimilarity_loops(list(row[list(combo)])) for row in rssi) / rssi.shape[0]
        if val > best_val + 1e-12:
            best, best_val = combo, val
    return best, best_val
