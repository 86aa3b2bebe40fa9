"""Finite, discrete-time data model of an interaction space.

Entities and interactions carry opaque integer ids. A global state holds, on
one shared time grid, the state trajectory of every entity, the occurrence
time triples and neighbourhoods of every interaction. Trajectories are read
as left-closed step functions: the value at time ``t`` is the sample at the
latest grid time ``<= t``.

Each entity declares a :class:`StateLayout` mapping named slots onto the
columns of its state vector: activation slots, good slots (keyed by the
interaction whose good the entity propagates) and proper slots.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionError,
    EmptyPrefixError,
    MissingSlotError,
    ProbabilityError,
    UnknownIdError,
)

EntityId = int
InteractionId = int


def _frozen_array(values, dtype=float, ndim=None):
    arr = np.array(values, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ResourceSpace:
    """Either a finite set of admissible values or a closed real interval."""

    values: tuple | None = None
    low: float | None = None
    high: float | None = None
    unit: str = ""

    def __post_init__(self):
        if self.values is not None:
            if self.low is not None or self.high is not None:
                raise ValueError("a resource space is finite or an interval, not both")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
            if not self.values:
                raise ValueError("finite resource space must be non-empty")
        else:
            if self.low is None or self.high is None:
                raise ValueError("interval resource space needs low and high")
            if not self.low <= self.high:
                raise ValueError(f"empty interval [{self.low}, {self.high}]")

    @classmethod
    def interval(cls, low, high, unit=""):
        return cls(low=float(low), high=float(high), unit=unit)

    @classmethod
    def finite(cls, values, unit=""):
        return cls(values=tuple(values), unit=unit)

    def contains(self, v, atol=1e-12):
        if self.values is not None:
            return any(abs(v - w) <= atol for w in self.values)
        return self.low - atol <= v <= self.high + atol


@dataclass(frozen=True)
class Interaction:
    """``agents --(propagator, good)--> patients``."""

    id: InteractionId
    agents: frozenset
    propagator: EntityId
    patients: frozenset = frozenset()
    resource_space: ResourceSpace = field(
        default_factory=lambda: ResourceSpace.interval(-np.inf, np.inf)
    )

    def __post_init__(self):
        object.__setattr__(self, "agents", frozenset(self.agents))
        object.__setattr__(self, "patients", frozenset(self.patients))
        if not self.agents:
            raise ValueError(f"interaction {self.id} has no agents")


@dataclass(frozen=True)
class InteractionSpace:
    entities: frozenset
    interactions: Mapping[InteractionId, Interaction]

    def __post_init__(self):
        object.__setattr__(self, "entities", frozenset(self.entities))
        inters = dict(self.interactions)
        for key, inter in inters.items():
            if key != inter.id:
                raise ValueError(f"interaction keyed {key} has id {inter.id}")
            missing = (inter.agents | inter.patients | {inter.propagator}) - self.entities
            if missing:
                raise UnknownIdError(
                    f"interaction {inter.id} refers to unknown entities {sorted(missing)}"
                )
        object.__setattr__(self, "interactions", MappingProxyType(inters))

    @classmethod
    def build(cls, entities: Iterable[EntityId], interactions: Iterable[Interaction]):
        return cls(frozenset(entities), {i.id: i for i in interactions})

    def interaction(self, i: InteractionId) -> Interaction:
        try:
            return self.interactions[i]
        except KeyError:
            raise UnknownIdError(f"unknown interaction {i}") from None


@dataclass(frozen=True)
class Population:
    members: frozenset

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self):
        return len(self.members)

    def __contains__(self, e):
        return e in self.members


@dataclass(frozen=True)
class StateLayout:
    """Column indices of the named slots in an entity's state vector."""

    activation: Mapping[str, int] = field(default_factory=dict)
    goods: Mapping[InteractionId, int] = field(default_factory=dict)
    proper: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("activation", "goods", "proper"):
            object.__setattr__(self, name, MappingProxyType(dict(getattr(self, name))))
        cols = [*self.activation.values(), *self.goods.values(), *self.proper.values()]
        if len(set(cols)) != len(cols):
            raise ValueError("state layout assigns one column to two slots")
        if any(c < 0 for c in cols):
            raise ValueError("negative slot column")

    @property
    def width(self):
        cols = [*self.activation.values(), *self.goods.values(), *self.proper.values()]
        return max(cols) + 1 if cols else 0


def is_family_of(pop: Population, inters: Iterable[InteractionId], space: InteractionSpace) -> bool:
    """True iff every interaction in ``inters`` has an agent in ``pop``."""
    unknown = set(pop.members) - space.entities
    if unknown:
        raise UnknownIdError(f"population has unknown entities {sorted(unknown)}")
    result = True
    for i in inters:
        if not space.interaction(i).agents & pop.members:
            result = False
    return result


@dataclass(frozen=True, eq=False)
class GlobalState:
    """Trajectories of entity states, occurrence times and neighbourhoods.

    ``states[e]`` has shape ``(len(time_grid), width)``; ``occurrence_times[i]``
    has shape ``(len(time_grid), 3)`` holding ``(t_s, t_a, t_o)``;
    ``neighborhoods[i]`` is a tuple of entity-id frozensets, one per grid time.
    """

    space: InteractionSpace
    time_grid: np.ndarray
    states: Mapping[EntityId, np.ndarray]
    layouts: Mapping[EntityId, StateLayout]
    occurrence_times: Mapping[InteractionId, np.ndarray] = field(default_factory=dict)
    neighborhoods: Mapping[InteractionId, tuple] = field(default_factory=dict)
    t_st: float | None = None
    t_end: float | None = None

    def __post_init__(self):
        grid = _frozen_array(self.time_grid, ndim=1)
        if grid.size == 0:
            raise ValueError("empty time grid")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("time grid must be strictly increasing")
        t_st = float(grid[0]) if self.t_st is None else float(self.t_st)
        t_end = float(grid[-1]) if self.t_end is None else float(self.t_end)
        if grid[0] < t_st or grid[-1] > t_end:
            raise ValueError(f"time grid leaves [{t_st}, {t_end}]")
        object.__setattr__(self, "time_grid", grid)
        object.__setattr__(self, "t_st", t_st)
        object.__setattr__(self, "t_end", t_end)
        n = grid.size

        states = {}
        for e, traj in self.states.items():
            if e not in self.space.entities:
                raise UnknownIdError(f"state given for unknown entity {e}")
            arr = _frozen_array(traj, ndim=2)
            if arr.shape[0] != n:
                raise DimensionError(f"entity {e}: trajectory length {arr.shape[0]} != grid {n}")
            layout = self.layouts.get(e)
            if layout is None:
                raise MissingSlotError(f"entity {e} has a state but no layout")
            if arr.shape[1] < layout.width:
                raise DimensionError(f"entity {e}: state width {arr.shape[1]} < layout width")
            for name, col in layout.activation.items():
                col_vals = arr[:, col]
                if np.any((col_vals < 0) | (col_vals > 1)):
                    raise ValueError(f"entity {e}: activation slot {name!r} leaves [0, 1]")
            for i, col in layout.goods.items():
                rs = self.space.interaction(i).resource_space
                bad = [v for v in arr[:, col] if not rs.contains(v)]
                if bad:
                    raise ValueError(
                        f"entity {e}: good of interaction {i} leaves its resource space ({bad[0]})"
                    )
            states[e] = arr
        object.__setattr__(self, "states", MappingProxyType(states))
        object.__setattr__(self, "layouts", MappingProxyType(dict(self.layouts)))

        occ = {}
        for i, traj in self.occurrence_times.items():
            self.space.interaction(i)
            arr = _frozen_array(traj, ndim=2)
            if arr.shape != (n, 3):
                raise DimensionError(f"interaction {i}: occurrence times shape {arr.shape} != ({n}, 3)")
            if np.any((arr < t_st) | (arr > t_end)):
                raise ValueError(f"interaction {i}: occurrence time outside [{t_st}, {t_end}]")
            occ[i] = arr
        object.__setattr__(self, "occurrence_times", MappingProxyType(occ))

        nbh = {}
        for i, traj in self.neighborhoods.items():
            self.space.interaction(i)
            traj = tuple(frozenset(s) for s in traj)
            if len(traj) != n:
                raise DimensionError(f"interaction {i}: {len(traj)} neighbourhoods for {n} grid times")
            for s in traj:
                if not s <= self.space.entities:
                    raise UnknownIdError(f"interaction {i}: neighbourhood has unknown entities")
            nbh[i] = traj
        object.__setattr__(self, "neighborhoods", MappingProxyType(nbh))

    def index_at(self, t) -> int:
        """Index of the latest grid time ``<= t``."""
        idx = int(np.searchsorted(self.time_grid, t, side="right")) - 1
        if idx < 0:
            raise EmptyPrefixError(f"time {t} precedes the grid start {self.time_grid[0]}")
        return idx

    @property
    def last_time(self):
        return float(self.time_grid[-1])

    def slot(self, e: EntityId, kind: str, key, t=None):
        """Value of a named slot of entity ``e`` at time ``t`` (default: last)."""
        layout = self.layouts.get(e)
        if layout is None or e not in self.states:
            raise MissingSlotError(f"entity {e} has no state")
        table = getattr(layout, kind)
        if key not in table:
            raise MissingSlotError(f"entity {e} has no {kind} slot {key!r}")
        idx = self.time_grid.size - 1 if t is None else self.index_at(t)
        return float(self.states[e][idx, table[key]])

    def __eq__(self, other):
        if not isinstance(other, GlobalState):
            return NotImplemented
        return (
            self.space == other.space
            and self.t_st == other.t_st
            and self.t_end == other.t_end
            and np.array_equal(self.time_grid, other.time_grid)
            and dict(self.layouts) == dict(other.layouts)
            and self.states.keys() == other.states.keys()
            and all(np.array_equal(self.states[e], other.states[e]) for e in self.states)
            and self.occurrence_times.keys() == other.occurrence_times.keys()
            and all(
                np.array_equal(self.occurrence_times[i], other.occurrence_times[i])
                for i in self.occurrence_times
            )
            and dict(self.neighborhoods) == dict(other.neighborhoods)
        )

    __hash__ = None


def restrict(gs: GlobalState, t) -> GlobalState:
    """Prefix of every trajectory up to grid times ``<= t``."""
    n = gs.index_at(t) + 1
    if n == gs.time_grid.size:
        return gs
    return GlobalState(
        space=gs.space,
        time_grid=gs.time_grid[:n],
        states={e: s[:n] for e, s in gs.states.items()},
        layouts=gs.layouts,
        occurrence_times={i: o[:n] for i, o in gs.occurrence_times.items()},
        neighborhoods={i: nb[:n] for i, nb in gs.neighborhoods.items()},
        t_st=gs.t_st,
        t_end=gs.t_end,
    )


def goods_of(gs: GlobalState, inters: Sequence[InteractionId], t) -> np.ndarray:
    """Goods of ``inters`` at time ``t``, read from each propagator's good slot."""
    idx = gs.index_at(t)
    out = np.empty(len(inters))
    for n, i in enumerate(inters):
        prop = gs.space.interaction(i).propagator
        layout = gs.layouts.get(prop)
        if layout is None or i not in layout.goods:
            raise MissingSlotError(f"propagator {prop} of interaction {i} has no good slot for it")
        out[n] = gs.states[prop][idx, layout.goods[i]]
    return out


@dataclass(frozen=True)
class Ensemble:
    """Finite weighted sample of global-state trajectories."""

    states: tuple
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        w = _frozen_array(self.weights, ndim=1)
        if w.size != len(self.states) or w.size == 0:
            raise DimensionError("one weight per sampled trajectory is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ProbabilityError("ensemble weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, states):
        states = tuple(states)
        return cls(states, np.full(len(states), 1.0 / len(states)))

    def __iter__(self):
        return iter(zip(self.states, self.weights))

    def __len__(self):
        return len(self.states)
