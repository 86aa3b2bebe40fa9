"""Configurations of companies, their piecewise costs and expected costs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import ConstraintError, DimensionError, ProbabilityError, SmallnessError
from .economy import MONEY_ATOL, Economy


@dataclass(frozen=True)
class CostParams:
    """Unavoidable minimum cost of the tenant and minimum losses of the renter.

    ``tax`` is an optional per-location tax for the renter-cost variant.
    """

    c_0t: float = 0.0
    l_1r: float = 0.0
    l_2r: float = 0.0
    tax: tuple | None = None

    def __post_init__(self):
        for name in ("c_0t", "l_1r", "l_2r"):
            if getattr(self, name) < 0:
                raise ConstraintError(f"{name} must be non-negative")
        if self.tax is not None:
            object.__setattr__(self, "tax", tuple(float(v) for v in self.tax))

    def scaled(self, c):
        tax = None if self.tax is None else tuple(v * c for v in self.tax)
        return CostParams(self.c_0t * c, self.l_1r * c, self.l_2r * c, tax)


@dataclass(frozen=True)
class Configuration:
    """``sites[i]`` lists the (location, rent) pair of every company of the i-th commodity."""

    sites: tuple

    def __post_init__(self):
        object.__setattr__(
            self,
            "sites",
            tuple(tuple((int(x), float(r)) for x, r in per) for per in self.sites),
        )

    def companies(self):
        """Yield ``(commodity index, company index, location, rent)`` in canonical order."""
        for i, per in enumerate(self.sites):
            for a, (x, r) in enumerate(per):
                yield i, a, x, r

    @property
    def size(self) -> int:
        return sum(len(per) for per in self.sites)

    def replace(self, i, a, x, r) -> "Configuration":
        per = list(self.sites[i])
        per[a] = (x, r)
        sites = list(self.sites)
        sites[i] = tuple(per)
        return Configuration(tuple(sites))

    def to_dict(self, econ: Economy):
        return {
            str(econ.commodities[i].id): [{"location": x, "rent": r} for x, r in per]
            for i, per in enumerate(self.sites)
        }


def validate_configuration(econ: Economy, cfg: Configuration) -> Configuration:
    """Company counts, locations on the grid and distinct within each commodity.

    The admissible relations between rent, net value and ideal rent cover
    every real rent (see :func:`relation_pattern`), so no rent is rejected.
    """
    if len(cfg.sites) != len(econ.commodities):
        raise DimensionError(f"configuration has {len(cfg.sites)} commodities, economy {len(econ.commodities)}")
    for c, per in zip(econ.commodities, cfg.sites):
        if len(per) != c.companies:
            raise DimensionError(f"commodity {c.id} has {c.companies} companies, configuration {len(per)}")
        locs = [econ.check_location(x) for x, _ in per]
        if len(set(locs)) != len(locs):
            raise ConstraintError(f"companies of commodity {c.id} share a location")
        for _, r in per:
            if not np.isfinite(r):
                raise ConstraintError("rents must be finite")
    return cfg


def _cmp(a, b):
    if a > b + MONEY_ATOL:
        return 1
    if a < b - MONEY_ATOL:
        return -1
    return 0


# (rent vs net value, net value vs ideal rent, rent vs ideal rent) for each admissible pattern;
# pattern 1 is the zero-cost relation where rent, net value and ideal rent coincide
PATTERNS = {
    (0, 0, 0): 1,
    (0, -1, -1): 2,
    (-1, 0, -1): 3,
    (-1, -1, -1): 4,
    (1, 0, 1): 5,
    (1, -1, 0): 6,
    (1, -1, 1): 7,
    (1, -1, -1): 8,
}


def relation_pattern(econ: Economy, b, x, r) -> int:
    """Index (1..8) of the admissible relation among rent, net value and ideal rent."""
    i = econ.index(b)
    x = econ.check_location(x)
    v = econ.net_values[i, x]
    big_r = econ.ideal_rents[x]
    key = (_cmp(r, v), _cmp(v, big_r), _cmp(r, big_r))
    try:
        return PATTERNS[key]
    except KeyError:
        raise ConstraintError(f"rent {r} at location {x} fits no admissible relation {key}") from None


def tenant_cost(econ: Economy, b, x, r, params: CostParams = CostParams()) -> float:
    """Excess of rent over net value, or the minimum cost when there is none."""
    v = econ.net_values[econ.index(b), econ.check_location(x)]
    return float(r - v) if r > v + MONEY_ATOL else params.c_0t


def renter_loss1(econ: Economy, b, x, r, params: CostParams = CostParams()) -> float:
    """Shortfall of rent against the net value of b."""
    v = econ.net_values[econ.index(b), econ.check_location(x)]
    return float(v - r) if r < v - MONEY_ATOL else params.l_1r


def renter_loss2(econ: Economy, b, x, r, params: CostParams = CostParams()) -> float:
    """Shortfall of rent against the ideal rent at x."""
    big_r = econ.ideal_rents[econ.check_location(x)]
    return float(big_r - r) if r < big_r - MONEY_ATOL else params.l_2r


def renter_tax_cost(econ: Economy, b, x, r, params: CostParams) -> float:
    """Part of the location tax not covered by the rent."""
    if params.tax is None:
        raise ConstraintError("tax variant needs a per-location tax")
    econ.index(b)
    tax = params.tax[econ.check_location(x)]
    return float(tax - r) if r < tax - MONEY_ATOL else 0.0


def check_weights(w, n, name="weights") -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise DimensionError(f"{name} needs {n} entries, got shape {w.shape}")
    if np.any(w <= 0):
        raise ProbabilityError(f"{name} must be non-degenerate (all entries > 0)")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ProbabilityError(f"{name} must sum to 1")
    return w


@dataclass(frozen=True)
class Weights:
    """Averaging weights over companies in canonical order, one per cost.

    Each entry is either a fixed vector or a callable ``cfg -> vector``;
    ``None`` means uniform.
    """

    tenant: object = None
    loss1: object = None
    loss2: object = None

    def resolve(self, cfg: Configuration):
        n = cfg.size
        out = []
        for name in ("tenant", "loss1", "loss2"):
            w = getattr(self, name)
            if w is None:
                out.append(np.full(n, 1.0 / n))
            else:
                out.append(check_weights(w(cfg) if callable(w) else w, n, f"{name} weights"))
        return out

    @property
    def fixed(self) -> bool:
        return not any(callable(getattr(self, n)) for n in ("tenant", "loss1", "loss2"))


def company_costs(econ: Economy, cfg: Configuration, params: CostParams = CostParams()) -> np.ndarray:
    """``(3, n)`` table of tenant cost, loss 1 and loss 2 per company."""
    rows = []
    for i, _, x, r in cfg.companies():
        b = econ.commodities[i].id
        rows.append(
            (
                tenant_cost(econ, b, x, r, params),
                renter_loss1(econ, b, x, r, params),
                renter_loss2(econ, b, x, r, params),
            )
        )
    return np.array(rows, dtype=float).T.reshape(3, -1)


@dataclass(frozen=True)
class ExpectedCosts:
    tenant: float
    loss1: float
    loss2: float

    def as_tuple(self):
        return (self.tenant, self.loss1, self.loss2)


def expected_costs(
    econ: Economy,
    cfg: Configuration,
    weights: Weights | None = None,
    params: CostParams = CostParams(),
) -> ExpectedCosts:
    validate_configuration(econ, cfg)
    w = (weights or Weights()).resolve(cfg)
    table = company_costs(econ, cfg, params)
    return ExpectedCosts(*(float(wj @ row) for wj, row in zip(w, table)))


def expected_tax_costs(
    econ: Economy,
    cfg: Configuration,
    params: CostParams,
    weights: Weights | None = None,
):
    """(expected tenant cost, expected renter tax cost); the renter cost reuses ``loss1`` weights."""
    validate_configuration(econ, cfg)
    wt, wr, _ = (weights or Weights()).resolve(cfg)
    ct, cr = [], []
    for i, _, x, r in cfg.companies():
        b = econ.commodities[i].id
        ct.append(tenant_cost(econ, b, x, r, params))
        cr.append(renter_tax_cost(econ, b, x, r, params))
    return float(wt @ np.array(ct)), float(wr @ np.array(cr))


def is_vt_configuration(econ: Economy, cfg: Configuration) -> bool:
    """Every rent equals the net value, which equals the ideal rent at the company's location."""
    validate_configuration(econ, cfg)
    for i, _, x, r in cfg.companies():
        v = econ.net_values[i, x]
        if abs(r - v) > MONEY_ATOL or abs(v - econ.ideal_rents[x]) > MONEY_ATOL:
            return False
    return True


def smallness_margins(econ: Economy, rents: Iterable[float]):
    """Smallest strictly positive excess and shortfalls over all (commodity, location, rent).

    Returns ``(tenant, loss1, loss2)``; each minimum must stay above the
    corresponding unavoidable cost. ``inf`` when no rent produces a gap.
    """
    rents = np.asarray(sorted(set(float(r) for r in rents)), dtype=float)
    nv = econ.net_values[:, :, None]
    big_r = econ.ideal_rents[None, :, None]
    r = rents[None, None, :]
    over = r - nv
    under = nv - r
    under2 = big_r - r

    def smallest(gap):
        g = gap[gap > MONEY_ATOL]
        return float(g.min()) if g.size else float("inf")

    return smallest(over), smallest(under), smallest(under2)


def validate_smallness(econ: Economy, params: CostParams, rents: Iterable[float]) -> None:
    """Reject unavoidable costs that are not below every positive cost on the rent set."""
    m_t, m_1, m_2 = smallness_margins(econ, rents)
    for name, value, margin in (("c_0t", params.c_0t, m_t), ("l_1r", params.l_1r, m_1), ("l_2r", params.l_2r, m_2)):
        if not value < margin:
            raise SmallnessError(f"{name}={value} is not below the smallest positive gap {margin}")


def vt_rent(econ: Economy, b, x) -> float:
    return float(econ.net_values[econ.index(b), econ.check_location(x)])


def make_configuration(econ: Economy, placements: dict) -> Configuration:
    """Build from ``{commodity id: [(location, rent), ...]}``."""
    sites = tuple(tuple(placements[c.id]) for c in econ.commodities)
    return validate_configuration(econ, Configuration(sites))


def vt_configuration(econ: Economy, locations: dict | None = None) -> Configuration:
    """Configuration with every company on a good location at its net value.

    ``locations`` may fix the location lists per commodity; otherwise the
    first good locations are used.
    """
    sites = []
    for i, c in enumerate(econ.commodities):
        good = [int(x) for x in np.flatnonzero(econ.good_mask[i])]
        locs = list(locations[c.id]) if locations else good[: c.companies]
        if len(locs) < c.companies:
            raise ConstraintError(f"commodity {c.id} has fewer good locations than companies")
        sites.append(tuple((x, float(econ.net_values[i, x])) for x in locs))
    return validate_configuration(econ, Configuration(tuple(sites)))

