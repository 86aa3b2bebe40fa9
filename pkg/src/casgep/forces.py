"""Unification and diversification forces and the adaptation predicates.

Unification forces are negated expected costs over a population; the
diversification force is the Shannon entropy, in bits, of a probability over
the adaptive interactions. A population is better adapted at ``t`` than at
``s`` when no force has decreased. Emergent-pattern checks run against a
finite sample of traces, so a ``True`` answer certifies dominance on that
sample only.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, OffGridError, ProbabilityError
from .iscore import (
    GlobalState,
    InteractionSpace,
    Population,
    goods_of,
    is_family_of,
    restrict,
)

PROB_ATOL = 1e-9


def check_probability(p, name="probability", atol=PROB_ATOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ProbabilityError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(p)):
        raise ProbabilityError(f"{name} has non-finite entries")
    if np.any(p < -atol):
        raise ProbabilityError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > atol:
        raise ProbabilityError(f"{name} sums to {p.sum()!r}, not 1")
    return np.clip(p, 0.0, None)


def shannon_entropy(p) -> float:
    """Entropy in bits, with ``0 * log2(0) = 0``."""
    p = check_probability(p)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def expected_cost(weights, costs) -> float:
    weights = check_probability(weights, "weights")
    costs = np.asarray(costs, dtype=float)
    if costs.shape != weights.shape:
        raise DimensionError(f"{weights.size} weights for {costs.size} costs")
    if np.any(costs < 0):
        raise ValueError("costs must be non-negative")
    return float(weights @ costs)


@dataclass(frozen=True)
class CostSpec:
    """``fn(y, e, j)`` is the j-th cost paid by entity ``e`` at state ``y``."""

    population: Population
    k: int
    fn: Callable[[GlobalState, int, int], float]

    def costs(self, y, j) -> np.ndarray:
        return np.array([float(self.fn(y, e, j)) for e in self.population])


@dataclass(frozen=True)
class AveragingSpec:
    """``fn(y, j)`` maps each population member to its averaging weight.

    ``fn=None`` averages uniformly over the population.
    """

    fn: Callable[[GlobalState, int], Mapping[int, float]] | None = None

    @classmethod
    def uniform(cls):
        return cls(None)

    def weights(self, y, j, population: Population) -> np.ndarray:
        if self.fn is None:
            return np.full(len(population), 1.0 / len(population))
        w = self.fn(y, j)
        if set(w) != set(population.members):
            raise DimensionError("averaging weights are not defined on the cost population")
        return np.array([float(w[e]) for e in population])


@dataclass(frozen=True)
class DiversificationSpec:
    """``q(goods)`` is a probability over the adaptive interactions."""

    q: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def proportional(cls):
        """Each interaction's share of the total good flow."""
        return cls(_proportional)


def _proportional(goods):
    goods = np.asarray(goods, dtype=float)
    if np.any(goods < 0):
        raise ProbabilityError("proportional diversification needs non-negative goods")
    total = goods.sum()
    if total <= 0:
        raise ProbabilityError("proportional diversification needs a positive total good")
    return goods / total


def unification_force(cost: CostSpec, avg: AveragingSpec, y: GlobalState, j: int) -> float:
    if not 0 <= j < cost.k:
        raise DimensionError(f"cost component {j} out of range 0..{cost.k - 1}")
    return -expected_cost(avg.weights(y, j, cost.population), cost.costs(y, j))


def diversification_force(div: DiversificationSpec, goods) -> float:
    return shannon_entropy(div.q(np.asarray(goods, dtype=float)))


@dataclass(frozen=True, eq=False)
class ForceTrace:
    times: np.ndarray
    u: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        u = np.array(self.u, dtype=float)
        d = np.array(self.d, dtype=float)
        if u.ndim == 1:
            u = u.reshape(-1, 1)
        if not (times.ndim == 1 and u.shape[0] == times.size and d.shape == times.shape):
            raise DimensionError("trace arrays disagree in length")
        for a in (times, u, d):
            a.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "d", d)

    @property
    def k(self):
        return self.u.shape[1]

    def __len__(self):
        return self.times.size

    def index(self, t) -> int:
        hits = np.flatnonzero(np.abs(self.times - t) <= 1e-12 * max(1.0, abs(t)))
        if hits.size == 0:
            raise OffGridError(f"time {t} is not on the trace grid")
        return int(hits[0])

    def header(self):
        return ["time", *[f"u_{j + 1}" for j in range(self.k)], "d"]

    def rows(self):
        for n in range(len(self)):
            yield [self.times[n], *self.u[n], self.d[n]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ForceTrace":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        return cls(data[:, 0], data[:, 1:-1], data[:, -1])


def force_trace(
    space: InteractionSpace,
    gs: GlobalState,
    pop: Population,
    inters: Sequence[int],
    cost: CostSpec,
    avg: AveragingSpec,
    div: DiversificationSpec,
) -> ForceTrace:
    """Evaluate every unification force and the diversification force on the grid."""
    if gs.space != space:
        raise ValueError("global state belongs to a different interaction space")
    if not is_family_of(pop, inters, space):
        raise ValueError("interactions are not a family of the population")
    times = gs.time_grid
    u = np.empty((times.size, cost.k))
    d = np.empty(times.size)
    for n, t in enumerate(times):
        y = restrict(gs, t)
        for j in range(cost.k):
            u[n, j] = unification_force(cost, avg, y, j)
        d[n] = diversification_force(div, goods_of(gs, inters, t))
    return ForceTrace(times, u, d)


def better_adapted(trace: ForceTrace, s, t) -> bool:
    """No unification force and not the diversification force decreased from s to t."""
    i, j = trace.index(s), trace.index(t)
    return bool(np.all(trace.u[j] >= trace.u[i]) and trace.d[j] >= trace.d[i])


def is_emergent_pattern(candidate_u, candidate_d, sample: Sequence[ForceTrace]) -> bool:
    """Candidate forces dominate every (trace, time) pair of the sample."""
    candidate_u = np.atleast_1d(np.asarray(candidate_u, dtype=float))
    sample = list(sample)
    if not sample:
        raise ValueError("empty sample")
    for tr in sample:
        if tr.k != candidate_u.size:
            raise DimensionError(f"candidate has {candidate_u.size} unification forces, trace {tr.k}")
        if np.any(tr.u > candidate_u) or np.any(tr.d > candidate_d):
            return False
    return True
