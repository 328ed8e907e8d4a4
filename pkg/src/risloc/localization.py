"""Online fingerprint matching and error statistics."""
import io
import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .em import DomainError
from .radiomap import RadioMap

log = logging.getLogger(__name__)

KNN_EPS = 1e-9
CDF_RESOLUTION = 0.1


class UndefinedCorrelationError(ArithmeticError):
    """Pearson correlation of a constant vector."""


@dataclass(frozen=True)
class RssiVector:
    values: np.ndarray
    truth: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise DomainError("RSSI vector must be 1-D and finite")
        object.__setattr__(self, "values", v)
        if self.truth is not None:
            object.__setattr__(self, "truth", np.asarray(self.truth, dtype=float))


@dataclass(frozen=True)
class Estimate:
    position: np.ndarray
    matched_index: int = None
    score: float = float("nan")


def _values(q, rmap):
    v = q.values if isinstance(q, RssiVector) else np.asarray(q, dtype=float)
    if v.shape != (rmap.shape[1],):
        raise DomainError(f"query has {v.size} values, map has {rmap.shape[1]} configurations")
    return v


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise DomainError("pearson needs two vectors of equal length >= 2")
    ac = a - a.mean()
    bc = b - b.mean()
    na = np.sqrt(ac @ ac)
    nb = np.sqrt(bc @ bc)
    if na == 0.0 or nb == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    return float(np.clip((ac @ bc) / (na * nb), -1.0, 1.0))


def permuted_pearson_localize(q, rmap: RadioMap) -> Estimate:
    """Grid point whose fingerprint, under its best cyclic left shift, has
    the highest Pearson correlation with ``q``.

    Scores within ``kernels.PEARSON_TIE_TOL`` count as ties; ties go to the
    lowest grid index, then the lowest shift.
    """
    v = _values(q, rmap)
    if v.size < 2:
        raise DomainError("permuted Pearson matching needs M >= 2")
    if np.ptp(v) == 0.0:
        raise UndefinedCorrelationError("query RSSI vector is constant")
    best, shift = kernels.shift_pearson(v, rmap.rssi)
    n_const = int(np.sum(np.isneginf(best)))
    if n_const:
        log.warning("%d constant fingerprint rows scored -inf", n_const)
    l = int(np.argmax(best >= best.max() - kernels.PEARSON_TIE_TOL))
    return Estimate(rmap.grid.points[l].copy(), l, float(best[l]))


def knn_positions(queries, rmap: RadioMap, k=5) -> np.ndarray:
    """Inverse-distance weighted kNN positions for a batch ``(Q, M)``."""
    qs = np.ascontiguousarray(np.atleast_2d(np.asarray(queries, dtype=float)))
    if qs.shape[1] != rmap.shape[1]:
        raise DomainError(f"queries have {qs.shape[1]} values, map has {rmap.shape[1]}")
    if not 1 <= k <= rmap.shape[0]:
        raise DomainError(f"k={k} outside [1, L={rmap.shape[0]}]")
    return kernels.knn_batch(qs, np.ascontiguousarray(rmap.rssi), rmap.grid.points, int(k), KNN_EPS)


def knn_localize(q, rmap: RadioMap, k=5) -> Estimate:
    v = _values(q, rmap)
    pos = knn_positions(v[None, :], rmap, k)[0]
    d = np.sqrt(((rmap.rssi - v) ** 2).sum(axis=1))
    nearest = int(np.argsort(d, kind="stable")[0])
    return Estimate(pos, nearest, float(d[nearest]))


class Localizer:
    """Matcher interface: map a batch of queries to positions."""

    name = "abstract"

    def positions(self, queries, rmap: RadioMap) -> np.ndarray:
        raise NotImplementedError


class KnnLocalizer(Localizer):
    name = "knn"

    def __init__(self, k=5):
        self.k = k

    def positions(self, queries, rmap):
        return knn_positions(queries, rmap, self.k)


class PearsonLocalizer(Localizer):
    name = "permuted-pearson"

    def positions(self, queries, rmap):
        return np.array([permuted_pearson_localize(q, rmap).position for q in np.atleast_2d(queries)])


def empirical_cdf(errors, grid=None, resolution=CDF_RESOLUTION):
    """Fraction of errors ``<= e`` for ``e`` on a regular grid from 0."""
    errors = np.sort(np.asarray(errors, dtype=float))
    if grid is None:
        top = errors[-1] if errors.size else 0.0
        n = int(np.floor(top / resolution + 1e-9)) + 2
        grid = np.round(np.arange(n) * resolution, 10)
    cdf = np.searchsorted(errors, grid, side="right") / max(errors.size, 1)
    return np.asarray(grid), cdf


@dataclass
class ErrorReport:
    truth: np.ndarray
    estimates: np.ndarray
    errors: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.errors.mean())

    def cdf(self, grid=None):
        return empirical_cdf(self.errors, grid)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("true_x,true_y,est_x,est_y,error\n")
        for t, e, err in zip(self.truth, self.estimates, self.errors):
            out.write(f"{t[0]:.6f},{t[1]:.6f},{e[0]:.6f},{e[1]:.6f},{err:.6f}\n")
        out.write(f"# n: {self.errors.size}\n# mean_error: {self.mean:.6f}\n")
        out.write(f"# median_error: {float(np.median(self.errors)):.6f}\n")
        return out.getvalue()


def evaluate(rmap: RadioMap, queries, localizer: Localizer = None, truth=None) -> ErrorReport:
    """Localize every query and collect Euclidean errors.

    ``queries`` is either a list of :class:`RssiVector` carrying ``truth`` or
    a ``(Q, M)`` array accompanied by ``truth`` of shape ``(Q, 3)``.
    """
    localizer = localizer or KnnLocalizer(5)
    if truth is None:
        if any(q.truth is None for q in queries):
            raise DomainError("every query needs a ground-truth position")
        truth = np.array([q.truth for q in queries])
        values = np.array([q.values for q in queries])
    else:
        values = np.atleast_2d(np.asarray(queries, dtype=float))
        truth = np.atleast_2d(np.asarray(truth, dtype=float))
    est = localizer.positions(values, rmap)
    err = np.linalg.norm(est - truth, axis=1)
    return ErrorReport(truth, est, err)
