"""Land values, ideal rents, good locations and impedance zones.

Locations are indices into a finite grid of points in the plane. Every
monetary comparison uses an absolute tolerance of ``MONEY_ATOL`` so that
values meant to be equal survive rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from ..errors import ConstraintError, NoGoodLocationError, NonConstantLifeCostError, UnknownIdError

MONEY_ATOL = 1e-9


@dataclass(frozen=True)
class TransportCost:
    """Piecewise-linear cost per unit as a function of impedance.

    Outside the breakpoint range the end values are held constant.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or bp.size == 0 or bp.shape != vals.shape:
            raise ConstraintError("transport cost needs matching, non-empty breakpoints and values")
        if np.any(np.diff(bp) <= 0):
            raise ConstraintError("transport breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", tuple(bp.tolist()))
        object.__setattr__(self, "values", tuple(vals.tolist()))

    @classmethod
    def linear(cls, slope, intercept=0.0, upto=1e6):
        return cls((0.0, upto), (intercept, intercept + slope * upto))

    @classmethod
    def constant(cls, value):
        return cls((0.0,), (value,))

    def __call__(self, j):
        return np.interp(j, self.breakpoints, self.values)


def _per_location(values, n, name):
    a = np.asarray(values, dtype=float)
    if a.ndim == 0:
        a = np.full(n, float(a))
    if a.shape != (n,):
        raise ConstraintError(f"{name} needs one value per location ({n}), got shape {a.shape}")
    a = a.copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CommoditySpec:
    """One commodity ``b``: per-location yield, production and life costs.

    ``transport`` maps impedance to a cost per unit; any callable on arrays
    works, :class:`TransportCost` is the tabulated form used by scenarios.
    """

    id: int
    yields: np.ndarray
    production_cost: np.ndarray
    price: float
    transport: Callable
    life_cost: np.ndarray
    demand: float = 1.0
    companies: int = 1
    unit: str = ""

    @property
    def life_cost_constant(self) -> bool:
        k = self.life_cost
        return bool(np.all(np.abs(k - k[0]) <= MONEY_ATOL))


@dataclass(frozen=True, eq=False)
class Economy:
    locations: np.ndarray
    market: np.ndarray
    commodities: tuple
    impedance: np.ndarray = None
    check_positive: bool = field(default=True, repr=False)

    def __post_init__(self):
        locs = np.asarray(self.locations, dtype=float)
        if locs.ndim != 2 or locs.shape[0] == 0 or locs.shape[1] != 2:
            raise ConstraintError("locations must be a non-empty (n, 2) array")
        market = np.asarray(self.market, dtype=float).reshape(2)
        n = locs.shape[0]
        if self.impedance is None:
            imp = np.linalg.norm(locs - market, axis=1)
        else:
            imp = _per_location(self.impedance, n, "impedance")
        if np.any(imp < 0):
            raise ConstraintError("impedance must be non-negative")
        for a in (locs, market, imp):
            a.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "market", market)
        object.__setattr__(self, "impedance", np.array(imp))
        self.impedance.setflags(write=False)

        comms = []
        seen = set()
        for c in self.commodities:
            if c.id in seen:
                raise ConstraintError(f"duplicate commodity id {c.id}")
            seen.add(c.id)
            c = CommoditySpec(
                id=int(c.id),
                yields=_per_location(c.yields, n, f"yield of {c.id}"),
                production_cost=_per_location(c.production_cost, n, f"production cost of {c.id}"),
                price=float(c.price),
                transport=c.transport,
                life_cost=_per_location(c.life_cost, n, f"life cost of {c.id}"),
                demand=float(c.demand),
                companies=int(c.companies),
                unit=c.unit,
            )
            if c.companies < 1:
                raise ConstraintError(f"commodity {c.id} needs at least one company")
            if self.check_positive:
                fvals = np.asarray(c.transport(self.impedance), dtype=float)
                for name, v in (
                    ("yield", c.yields),
                    ("production cost", c.production_cost),
                    ("price", np.array([c.price])),
                    ("transport cost", fvals),
                    ("life cost", c.life_cost),
                    ("demand", np.array([c.demand])),
                ):
                    if np.any(v <= 0):
                        raise ConstraintError(f"{name} of commodity {c.id} must be positive on the grid")
            comms.append(c)
        if not comms:
            raise ConstraintError("an economy needs at least one commodity")
        object.__setattr__(self, "commodities", tuple(comms))

    @property
    def n_locations(self) -> int:
        return self.locations.shape[0]

    @property
    def ids(self) -> tuple:
        return tuple(c.id for c in self.commodities)

    def index(self, b) -> int:
        for i, c in enumerate(self.commodities):
            if c.id == b:
                return i
        raise UnknownIdError(f"unknown commodity {b!r}")

    def commodity(self, b) -> CommoditySpec:
        return self.commodities[self.index(b)]

    def check_location(self, x) -> int:
        if isinstance(x, (bool, np.bool_)) or not isinstance(x, (int, np.integer)):
            raise UnknownIdError(f"location must be an integer index, got {x!r}")
        if not 0 <= x < self.n_locations:
            raise UnknownIdError(f"unknown location {x}")
        return int(x)

    @cached_property
    def land_values(self) -> np.ndarray:
        """``(B, n)`` table of land values."""
        rows = []
        for c in self.commodities:
            f = np.asarray(c.transport(self.impedance), dtype=float)
            rows.append(c.yields * (c.price - c.production_cost - f))
        out = np.array(rows)
        out.setflags(write=False)
        return out

    @cached_property
    def net_values(self) -> np.ndarray:
        """``(B, n)`` table of land value minus life cost."""
        out = self.land_values - np.array([c.life_cost for c in self.commodities])
        out.setflags(write=False)
        return out

    @cached_property
    def ideal_rents(self) -> np.ndarray:
        out = self.net_values.max(axis=0)
        out.setflags(write=False)
        return out

    @cached_property
    def good_mask(self) -> np.ndarray:
        """``(B, n)`` boolean table: commodity attains the ideal rent at the location."""
        out = self.net_values >= self.ideal_rents - MONEY_ATOL
        out.setflags(write=False)
        return out

    def scaled(self, c: float) -> "Economy":
        """Same economy with every monetary quantity multiplied by ``c``."""
        if c <= 0:
            raise ValueError("scale must be positive")
        comms = []
        for cs in self.commodities:
            tr = cs.transport
            comms.append(
                CommoditySpec(
                    id=cs.id,
                    yields=cs.yields,
                    production_cost=cs.production_cost * c,
                    price=cs.price * c,
                    transport=lambda j, tr=tr: c * np.asarray(tr(j), dtype=float),
                    life_cost=cs.life_cost * c,
                    demand=cs.demand,
                    companies=cs.companies,
                    unit=cs.unit,
                )
            )
        return Economy(self.locations, self.market, tuple(comms), self.impedance, self.check_positive)


def land_value(econ: Economy, b, x) -> float:
    """Yield times (price - production cost - transport cost at the impedance of x)."""
    x = econ.check_location(x)
    return float(econ.land_values[econ.index(b), x])


def net_value(econ: Economy, b, x) -> float:
    x = econ.check_location(x)
    return float(econ.net_values[econ.index(b), x])


def ideal_rent(econ: Economy, x):
    """Largest net value at ``x`` and every commodity attaining it."""
    x = econ.check_location(x)
    col = econ.net_values[:, x]
    best = float(col.max())
    ids = frozenset(econ.ids[i] for i in np.flatnonzero(col >= best - MONEY_ATOL))
    return best, ids


def is_good_for(econ: Economy, x, b) -> bool:
    x = econ.check_location(x)
    return bool(econ.good_mask[econ.index(b), x])


def good_locations(econ: Economy, b) -> list:
    return [int(x) for x in np.flatnonzero(econ.good_mask[econ.index(b)])]


def impedance_bounds(econ: Economy, b):
    """Smallest and largest impedance among the good locations of ``b``."""
    good = econ.good_mask[econ.index(b)]
    if not good.any():
        raise NoGoodLocationError(f"no location is good for commodity {b}")
    j = econ.impedance[good]
    return float(j.min()), float(j.max())


def gain(econ: Economy, beta, x, y) -> float:
    """Change of land value of ``beta`` moving from x to y."""
    return land_value(econ, beta, y) - land_value(econ, beta, x)


@dataclass(frozen=True)
class ZoneReport:
    b: int
    beta: int
    transport_ok: bool  # gain of beta dominates gain of b on the checked pairs
    distinct_ok: bool  # net values differ at every location
    hypotheses_hold: bool
    ordered: bool | None  # None when the hypotheses fail and nothing is asserted
    bounds_b: tuple | None
    bounds_beta: tuple | None
    pairs: str

    def to_dict(self):
        return {
            "b": self.b,
            "beta": self.beta,
            "transport_ok": self.transport_ok,
            "distinct_ok": self.distinct_ok,
            "hypotheses_hold": self.hypotheses_hold,
            "ordered": self.ordered,
            "bounds_b": None if self.bounds_b is None else list(self.bounds_b),
            "bounds_beta": None if self.bounds_beta is None else list(self.bounds_beta),
            "pairs": self.pairs,
        }


def _bounds_or_none(econ, b):
    try:
        return impedance_bounds(econ, b)
    except NoGoodLocationError:
        return None


def zones_disjoint(econ: Economy, b, beta, pairs: str = "inward") -> ZoneReport:
    """Check the hypotheses of the disjoint-zones result and, if they hold, the ordering.

    ``beta`` is the commodity expected nearer the market. With
    ``pairs="inward"`` the gain comparison is required for every pair (x, y)
    with ``j(y) < j(x)``, i.e. moving towards the market; ``pairs="all"``
    requires it for every ordered pair, which forces the two land values to
    differ by a constant. An empty zone makes the ordering hold vacuously.
    """
    if b == beta:
        raise ValueError("zones are compared between two different commodities")
    if pairs not in ("inward", "all"):
        raise ValueError("pairs must be 'inward' or 'all'")
    cb, cbeta = econ.commodity(b), econ.commodity(beta)
    for c in (cb, cbeta):
        if not c.life_cost_constant:
            raise NonConstantLifeCostError(f"life cost of commodity {c.id} depends on location")

    lb = econ.land_values[econ.index(b)]
    lbeta = econ.land_values[econ.index(beta)]
    # diff[x, y] = gain_beta(x, y) - gain_b(x, y)
    diff = (lbeta[None, :] - lbeta[:, None]) - (lb[None, :] - lb[:, None])
    if pairs == "inward":
        j = econ.impedance
        mask = j[None, :] < j[:, None]
    else:
        mask = np.ones_like(diff, dtype=bool)
    transport_ok = bool(np.all(diff[mask] >= -MONEY_ATOL))
    nb = econ.net_values[econ.index(b)]
    nbeta = econ.net_values[econ.index(beta)]
    distinct_ok = bool(np.all(np.abs(nbeta - nb) > MONEY_ATOL))
    holds = transport_ok and distinct_ok

    bb, bbeta = _bounds_or_none(econ, b), _bounds_or_none(econ, beta)
    ordered = None
    if holds:
        if bb is None or bbeta is None:
            ordered = True
        else:
            ordered = bool(bbeta[0] <= bbeta[1] <= bb[0] <= bb[1])
    return ZoneReport(int(b), int(beta), transport_ok, distinct_ok, holds, ordered, bb, bbeta, pairs)
