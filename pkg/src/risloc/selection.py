"""Choosing M of the available RIS configurations.

Three selectors share one result type:

* heuristic state selection, maximizing the mean pairwise squared RSSI
  spread across locations (exhaustive or greedy),
* a genetic-algorithm wrapper whose fitness is the kNN localization error
  on the training locations,
* a uniform random baseline.
"""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .em import DomainError
from .localization import KNN_EPS
from .radiomap import STREAM_GA, STREAM_RANDOM, LocationSplit, RadioMap, substream

EXHAUSTIVE_LIMIT = 10 ** 6


class SearchSpaceTooLarge(DomainError):
    pass


@dataclass(frozen=True)
class GaParams:
    population: int = 40
    generations: int = 50
    tournament_size: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    elitism: int = 2
    queries_per_location: int = 10
    k: int = 5

    def __post_init__(self):
        if self.population < 2 * self.elitism or self.population < 2:
            raise DomainError("population must be >= 2 * elitism and >= 2")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1]")
        if self.generations < 0 or self.tournament_size < 1 or self.queries_per_location < 1:
            raise DomainError("generations, tournament_size and queries_per_location must be positive")


@dataclass
class SelectionResult:
    subset: tuple
    method: str
    fitness: float
    trace: list = field(default_factory=list)
    seed: int = None

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.subset))
        if len(set(idx)) != len(idx):
            raise DomainError("subset indices must be unique")
        self.subset = idx

    @property
    def m(self) -> int:
        return len(self.subset)

    def to_text(self) -> str:
        return "\n".join([
            f"method: {self.method}",
            f"seed: {'' if self.seed is None else self.seed}",
            "indices: " + " ".join(str(i) for i in self.subset),
            f"fitness: {float(self.fitness)!r}",
            "trace: " + " ".join(repr(float(t)) for t in self.trace),
        ]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SelectionResult":
        rec = {}
        for no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            key, sep, value = line.partition(":")
            if not sep:
                raise ValueError(f"line {no}: expected 'key: value'")
            rec[key.strip()] = value.strip()
        try:
            return cls(
                subset=tuple(int(t) for t in rec["indices"].split()),
                method=rec["method"],
                fitness=float(rec["fitness"]),
                trace=[float(t) for t in rec.get("trace", "").split()],
                seed=int(rec["seed"]) if rec.get("seed") else None,
            )
        except KeyError as exc:
            raise ValueError(f"selection record missing field {exc}") from None


def _check_m(s_tilde, m):
    if not 1 <= m <= s_tilde:
        raise DomainError(f"M={m} must lie in [1, {s_tilde}]")


# -- heuristic state selection ------------------------------------------------

def dissimilarity(values) -> float:
    """``2 / (M (M-1)) * sum over ordered pairs m != n of (R_m - R_n)^2``."""
    v = np.asarray(values, dtype=float).ravel()
    m = v.size
    if m < 2:
        raise DomainError("dissimilarity needs at least two values")
    diff = v[:, None] - v[None, :]
    return float(2.0 / (m * (m - 1)) * (diff ** 2).sum())


def hss_objective(rssi, subset) -> float:
    """Mean over locations of :func:`dissimilarity` on the subset columns."""
    a = np.asarray(rssi, dtype=float)[:, list(subset)]
    m = a.shape[1]
    if m < 2:
        raise DomainError("HSS objective needs M >= 2")
    a = a - a.mean(axis=1, keepdims=True)
    # sum_{m != n} (a_m - a_n)^2 = 2 (M sum a^2 - (sum a)^2); rows are centred
    return float((4.0 / (m - 1) * (a * a).sum(axis=1)).mean())


class _HssGram:
    """Subset objective from the location-averaged Gram matrix of the
    row-centred map; O(M^2) per subset, independent of L."""

    def __init__(self, rssi):
        a = np.asarray(rssi, dtype=float)
        a = a - a.mean(axis=1, keepdims=True)
        self.gram = a.T @ a / a.shape[0]

    def __call__(self, subset):
        idx = list(subset)
        m = len(idx)
        g = self.gram[np.ix_(idx, idx)]
        return float(4.0 * (m * np.trace(g) - g.sum()) / (m * (m - 1)))


def hss_exhaustive(rmap: RadioMap, m: int) -> SelectionResult:
    s_tilde = rmap.shape[1]
    _check_m(s_tilde, m)
    if m < 2:
        raise DomainError("HSS needs M >= 2")
    if math.comb(s_tilde, m) > EXHAUSTIVE_LIMIT:
        raise SearchSpaceTooLarge(
            f"C({s_tilde}, {m}) = {math.comb(s_tilde, m)} subsets exceeds {EXHAUSTIVE_LIMIT}; use hss_greedy"
        )
    obj = _HssGram(rmap.rssi)
    best, best_val = None, -np.inf
    for combo in itertools.combinations(range(s_tilde), m):
        val = obj(combo)
        if val > best_val:
            best, best_val = combo, val
    fitness = hss_objective(rmap.rssi, best)
    return SelectionResult(best, "HSS-exhaustive", fitness, [fitness])


def hss_greedy(rmap: RadioMap, m: int) -> SelectionResult:
    """Best pair first, then one column at a time maximizing the objective."""
    s_tilde = rmap.shape[1]
    _check_m(s_tilde, m)
    if m < 2:
        raise DomainError("HSS needs M >= 2")
    obj = _HssGram(rmap.rssi)
    best, best_val = None, -np.inf
    for pair in itertools.combinations(range(s_tilde), 2):
        val = obj(pair)
        if val > best_val:
            best, best_val = pair, val
    chosen = list(best)
    trace = [best_val]
    while len(chosen) < m:
        cand_best, cand_val = None, -np.inf
        for c in range(s_tilde):
            if c in chosen:
                continue
            val = obj(chosen + [c])
            if val > cand_val:
                cand_best, cand_val = c, val
        chosen.append(cand_best)
        trace.append(cand_val)
    fitness = hss_objective(rmap.rssi, chosen)
    return SelectionResult(tuple(chosen), "HSS-greedy", fitness, trace)


# -- random baseline ------------------------------------------------------------

def random_select(s_tilde: int, m: int, seed: int) -> SelectionResult:
    _check_m(s_tilde, m)
    rng = substream(seed, STREAM_RANDOM)
    subset = rng.choice(s_tilde, size=m, replace=False)
    return SelectionResult(tuple(subset), "random", float("nan"), [], seed)


# -- genetic-algorithm wrapper ----------------------------------------------------

class KnnFitness:
    """Mean kNN error of noisy training queries against the training rows.

    One fixed set of noisy queries is drawn per run, so every candidate in
    every generation is scored on identical noise.
    """

    def __init__(self, rmap: RadioMap, train, clean, noise_sigma, q, k, rng):
        train = np.asarray(train, dtype=int)
        self.db = np.ascontiguousarray(rmap.rssi[train])
        self.points = rmap.grid.points[train]
        base = np.asarray(clean, dtype=float)[train]
        if base.shape != self.db.shape:
            raise DomainError("clean map must have the radio map's shape")
        noise = rng.normal(0.0, noise_sigma, size=(q,) + base.shape) if noise_sigma > 0 \
            else np.zeros((q,) + base.shape)
        self.queries = (base[None] + noise).reshape(-1, base.shape[1])
        self.truth = np.tile(self.points, (q, 1))
        self.k = min(k, self.db.shape[0])
        self._cache = {}

    def __call__(self, subset) -> float:
        key = tuple(subset)
        if key not in self._cache:
            idx = list(key)
            est = kernels.knn_batch(
                np.ascontiguousarray(self.queries[:, idx]),
                np.ascontiguousarray(self.db[:, idx]),
                self.points, self.k, KNN_EPS,
            )
            self._cache[key] = float(np.linalg.norm(est - self.truth, axis=1).mean())
        return self._cache[key]

    @property
    def evaluations(self) -> int:
        return len(self._cache)


def _repair(genes, m, pool, s_tilde, rng):
    """Drop duplicates, refill from unused parent genes, then at random."""
    out = list(dict.fromkeys(int(g) for g in genes))
    if len(out) < m:
        spare = [g for g in dict.fromkeys(int(p) for p in pool) if g not in out]
        rng.shuffle(spare)
        out += spare[: m - len(out)]
    if len(out) < m:
        rest = np.setdiff1d(np.arange(s_tilde), out)
        out += list(rng.choice(rest, size=m - len(out), replace=False))
    return tuple(sorted(int(g) for g in out[:m]))


def _crossover(a, b, m, s_tilde, rng):
    mask = rng.random(m) < 0.5
    genes = [a[i] if mask[i] else b[i] for i in range(m)]
    return _repair(genes, m, list(a) + list(b), s_tilde, rng)


def _mutate(genes, rate, s_tilde, rng):
    genes = list(genes)
    if len(genes) == s_tilde:
        return tuple(genes)
    for i in range(len(genes)):
        if rng.random() < rate:
            outside = np.setdiff1d(np.arange(s_tilde), genes)
            genes[i] = int(rng.choice(outside))
    return tuple(sorted(genes))


def ga_feature_select(rmap: RadioMap, split: LocationSplit, m: int, params: GaParams = None,
                      *, clean, noise_sigma: float, seed: int = 0) -> SelectionResult:
    """Fixed-cardinality GA over configuration subsets.

    Parameters
    ----------
    rmap : offline database (all locations, all configurations).
    split : only ``split.train`` rows are used for fitness.
    clean : noise-free RSSI matrix of the same shape as ``rmap.rssi``; the
        fresh training queries are ``clean + N(0, noise_sigma^2)``.

    Returns the best subset ever seen. The trace holds the best-so-far
    fitness after initialization and after each generation.
    """
    params = params or GaParams()
    s_tilde = rmap.shape[1]
    _check_m(s_tilde, m)
    fitness = KnnFitness(rmap, split.train, clean, noise_sigma,
                         params.queries_per_location, params.k, substream(seed, STREAM_GA, 0))
    if m == s_tilde:
        full = tuple(range(s_tilde))
        f = fitness(full)
        return SelectionResult(full, "GA-FS", f, [f], seed)

    rng = substream(seed, STREAM_GA, 1)
    pop = [tuple(sorted(int(g) for g in rng.choice(s_tilde, size=m, replace=False)))
           for _ in range(params.population)]
    scores = [fitness(ind) for ind in pop]

    def ranked():
        return sorted(range(len(pop)), key=lambda i: (scores[i], pop[i]))

    order = ranked()
    best, best_f = pop[order[0]], scores[order[0]]
    trace = [best_f]

    def tournament():
        picks = rng.integers(0, len(pop), size=params.tournament_size)
        return pop[min(picks, key=lambda i: (scores[i], i))]

    for _ in range(params.generations):
        nxt = [pop[i] for i in order[: params.elitism]]
        while len(nxt) < params.population:
            a, b = tournament(), tournament()
            child = _crossover(a, b, m, s_tilde, rng) if rng.random() < params.crossover_rate else a
            nxt.append(_mutate(child, params.mutation_rate, s_tilde, rng))
        pop = nxt
        scores = [fitness(ind) for ind in pop]
        order = ranked()
        if scores[order[0]] < best_f:
            best, best_f = pop[order[0]], scores[order[0]]
        trace.append(best_f)
    return SelectionResult(best, "GA-FS", best_f, trace, seed)
