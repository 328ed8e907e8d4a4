"""Hot numeric kernels.

Every kernel exists twice: a loop formulation compiled with numba and a
vectorized numpy formulation. The public names at the bottom of the module
are bound to one of them according to :data:`risloc._accel.USE_NUMBA`; both
variants stay importable (``*_numba`` / ``*_numpy``) so tests and the
benchmark can compare them directly.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

EULER_GAMMA = 0.57721566490153286061

#: Below this argument Si/Ci use their power series, above it the
#: continued fraction for the auxiliary functions.
SICI_SWITCH = 6.0
#: correlations closer than this are ties (resolved to the lowest index)
PEARSON_TIE_TOL = 1e-12

_SERIES_TERMS = 40
_CF_MAX_ITER = 500
_CF_EPS = 1e-16
_TINY = 1e-300


# --------------------------------------------------------------------------
# Sine / cosine integrals
# --------------------------------------------------------------------------

@njit(cache=True)
def _sici_scalar(x):
    if x == 0.0:
        return 0.0, -np.inf
    if x < SICI_SWITCH:
        x2 = x * x
        # t_n = (-1)^n x^(2n+1) / (2n+1)!   and   u_n = (-1)^n x^(2n) / (2n)!
        t = x
        si = x
        u = 1.0
        ci = 0.0
        for n in range(1, _SERIES_TERMS):
            u *= -x2 / ((2 * n - 1) * (2 * n))
            ci += u / (2 * n)
            t *= -x2 / ((2 * n) * (2 * n + 1))
            si += t / (2 * n + 1)
            if abs(t) < 1e-18 and abs(u) < 1e-18:
                break
        return si, EULER_GAMMA + math.log(x) + ci
    # modified Lentz evaluation of E1(ix)
    b = complex(1.0, x)
    c = complex(1.0 / _TINY, 0.0)
    d = 1.0 / b
    h = d
    for i in range(2, _CF_MAX_ITER):
        a = -float((i - 1) * (i - 1))
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta.real - 1.0) + abs(delta.imag) < _CF_EPS:
            break
    h *= complex(math.cos(x), -math.sin(x))
    return 0.5 * math.pi + h.imag, -h.real


@njit(cache=True)
def _sici_loop(x):
    si = np.empty_like(x)
    ci = np.empty_like(x)
    for i in range(x.size):
        si[i], ci[i] = _sici_scalar(x[i])
    return si, ci


def sici_numba(x):
    return _sici_loop(np.ascontiguousarray(x, dtype=np.float64).ravel())


def sici_numpy(x):
    x = np.asarray(x, dtype=np.float64).ravel()
    si = np.zeros_like(x)
    ci = np.full_like(x, -np.inf)

    small = (x > 0) & (x < SICI_SWITCH)
    if small.any():
        xs = x[small]
        x2 = xs * xs
        t = xs.copy()
        s = xs.copy()
        u = np.ones_like(xs)
        c = np.zeros_like(xs)
        for n in range(1, _SERIES_TERMS):
            u *= -x2 / ((2 * n - 1) * (2 * n))
            c += u / (2 * n)
            t *= -x2 / ((2 * n) * (2 * n + 1))
            s += t / (2 * n + 1)
        si[small] = s
        ci[small] = EULER_GAMMA + np.log(xs) + c

    large = x >= SICI_SWITCH
    if large.any():
        xl = x[large]
        b = 1.0 + 1j * xl
        c = np.full(xl.shape, 1.0 / _TINY, dtype=np.complex128)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(xl.shape, dtype=bool)
        for i in range(2, _CF_MAX_ITER):
            a = -float((i - 1) * (i - 1))
            b = b + 2.0
            d = np.where(active, 1.0 / (a * d + b), d)
            c = np.where(active, b + a / c, c)
            delta = np.where(active, c * d, 1.0)
            h = h * delta
            active &= np.abs(delta.real - 1.0) + np.abs(delta.imag) >= _CF_EPS
            if not active.any():
                break
        h = h * (np.cos(xl) - 1j * np.sin(xl))
        si[large] = 0.5 * np.pi + h.imag
        ci[large] = -h.real
    return si, ci


# --------------------------------------------------------------------------
# Complex LU inverse with partial pivoting
# --------------------------------------------------------------------------

@njit(cache=True)
def lu_inverse_numba(a, pivot_rtol):
    """Return ``(inverse, failed_step)``; ``failed_step`` is -1 on success."""
    n = a.shape[0]
    lu = a.copy()
    perm = np.arange(n)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(lu[i, j])
            if v > scale:
                scale = v
    inv = np.zeros((n, n), dtype=np.complex128)
    for k in range(n):
        p = k
        best = abs(lu[k, k])
        for i in range(k + 1, n):
            v = abs(lu[i, k])
            if v > best:
                best = v
                p = i
        if best < pivot_rtol * scale or best == 0.0:
            return inv, k
        if p != k:
            for j in range(n):
                tmp = lu[k, j]
                lu[k, j] = lu[p, j]
                lu[p, j] = tmp
            tp = perm[k]
            perm[k] = perm[p]
            perm[p] = tp
        piv = lu[k, k]
        for i in range(k + 1, n):
            f = lu[i, k] / piv
            lu[i, k] = f
            for j in range(k + 1, n):
                lu[i, j] -= f * lu[k, j]
    y = np.empty(n, dtype=np.complex128)
    for col in range(n):
        # forward substitution on P e_col
        for i in range(n):
            s = 1.0 + 0j if perm[i] == col else 0j
            for j in range(i):
                s -= lu[i, j] * y[j]
            y[i] = s
        for i in range(n - 1, -1, -1):
            s = y[i]
            for j in range(i + 1, n):
                s -= lu[i, j] * inv[j, col]
            inv[i, col] = s / lu[i, i]
    return inv, -1


def lu_inverse_numpy(a, pivot_rtol):
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[0]
    lu = a.copy()
    perm = np.arange(n)
    scale = np.abs(lu).max() if n else 0.0
    for k in range(n):
        col = np.abs(lu[k:, k])
        p = k + int(np.argmax(col))
        best = col.max()
        if best < pivot_rtol * scale or best == 0.0:
            return np.zeros((n, n), dtype=np.complex128), k
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    rhs = np.eye(n, dtype=np.complex128)[perm]
    y = np.empty_like(rhs)
    for i in range(n):
        y[i] = rhs[i] - lu[i, :i] @ y[:i]
    x = np.empty_like(rhs)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x, -1


# --------------------------------------------------------------------------
# Weighted kNN over a fingerprint database
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def knn_batch_numba(queries, db, points, k, eps):
    nq, m = queries.shape
    nl = db.shape[0]
    dim = points.shape[1]
    out = np.empty((nq, dim))
    dist = np.empty(nl)
    for q in range(nq):
        for l in range(nl):
            s = 0.0
            for j in range(m):
                diff = queries[q, j] - db[l, j]
                s += diff * diff
            dist[l] = math.sqrt(s)
        order = np.argsort(dist, kind="mergesort")
        if dist[order[0]] <= eps:
            for c in range(dim):
                out[q, c] = points[order[0], c]
            continue
        wsum = 0.0
        for c in range(dim):
            out[q, c] = 0.0
        for i in range(k):
            idx = order[i]
            w = 1.0 / dist[idx]
            wsum += w
            for c in range(dim):
                out[q, c] += w * points[idx, c]
        for c in range(dim):
            out[q, c] /= wsum
    return out


def knn_batch_numpy(queries, db, points, k, eps, chunk=128):
    queries = np.asarray(queries, dtype=np.float64)
    out = np.empty((queries.shape[0], points.shape[1]))
    for start in range(0, queries.shape[0], chunk):
        qb = queries[start:start + chunk]
        dist = np.sqrt(((qb[:, None, :] - db[None, :, :]) ** 2).sum(axis=-1))
        order = np.argsort(dist, axis=1, kind="stable")[:, :k]
        d = np.take_along_axis(dist, order, axis=1)
        w = 1.0 / np.maximum(d, eps)
        est = (w[:, :, None] * points[order]).sum(axis=1) / w.sum(axis=1)[:, None]
        exact = d[:, 0] <= eps
        est[exact] = points[order[exact, 0]]
        out[start:start + chunk] = est
    return out


# --------------------------------------------------------------------------
# Cyclic-shift Pearson scan
# --------------------------------------------------------------------------

@njit(cache=True)
def shift_pearson_numba(q, db):
    """Best Pearson correlation of ``q`` against every cyclic left shift of
    every row of ``db``. Constant rows score ``-inf``."""
    nl, m = db.shape
    qc = q - q.mean()
    qn = math.sqrt((qc * qc).sum())
    best = np.full(nl, -np.inf)
    shift = np.zeros(nl, dtype=np.int64)
    for l in range(nl):
        mu = 0.0
        for j in range(m):
            mu += db[l, j]
        mu /= m
        rn = 0.0
        for j in range(m):
            rn += (db[l, j] - mu) ** 2
        rn = math.sqrt(rn)
        if rn == 0.0:
            continue
        for k in range(m):
            s = 0.0
            for j in range(m):
                s += qc[j] * (db[l, (j + k) % m] - mu)
            r = min(1.0, max(-1.0, s / (qn * rn)))
            if r > best[l] + PEARSON_TIE_TOL:
                best[l] = r
                shift[l] = k
    return best, shift


def shift_pearson_numpy(q, db):
    db = np.asarray(db, dtype=np.float64)
    nl, m = db.shape
    qc = q - q.mean()
    qn = np.sqrt((qc * qc).sum())
    rc = db - db.mean(axis=1, keepdims=True)
    rn = np.sqrt((rc * rc).sum(axis=1))
    idx = (np.arange(m)[None, :] + np.arange(m)[:, None]) % m
    # shifted[l, k, j] = rc[l, (j + k) % m]
    cov = (rc[:, idx] * qc[None, None, :]).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.clip(cov / (qn * rn[:, None]), -1.0, 1.0)
    r[rn == 0.0] = -np.inf
    # first shift within the tie tolerance of the row maximum
    shift = np.argmax(r >= r.max(axis=1, keepdims=True) - PEARSON_TIE_TOL, axis=1)
    return r[np.arange(nl), shift], shift


if USE_NUMBA:
    sici = sici_numba
    lu_inverse = lu_inverse_numba
    knn_batch = knn_batch_numba
    shift_pearson = shift_pearson_numba
else:
    sici = sici_numpy
    lu_inverse = lu_inverse_numpy
    knn_batch = knn_batch_numpy
    shift_pearson = shift_pearson_numpy
