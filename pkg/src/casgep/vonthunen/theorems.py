"""Exhaustive check that cost minimizers are exactly the zero-cost configurations."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import BudgetExceededError, ConstraintError
from .costs import (
    Configuration,
    CostParams,
    Weights,
    expected_costs,
    expected_tax_costs,
    is_vt_configuration,
    validate_smallness,
)
from .economy import MONEY_ATOL, Economy

DEFAULT_BUDGET = 2_000_000


def dedupe_rents(values, atol=MONEY_ATOL) -> tuple:
    out = []
    for v in sorted(float(v) for v in values):
        if not out or v - out[-1] > atol:
            out.append(v)
    return tuple(out)


def default_rent_grid(econ: Economy, offsets=(-1.0, -0.5, 0.5, 1.0)) -> tuple:
    """Every net value and ideal rent on the grid, plus shifted copies of them."""
    base = np.concatenate([econ.net_values.ravel(), econ.ideal_rents])
    vals = [base] + [base + o for o in offsets]
    return dedupe_rents(np.concatenate(vals))


def count_configurations(econ: Economy, n_rents: int) -> int:
    n = econ.n_locations
    total = 1
    for c in econ.commodities:
        if c.companies > n:
            return 0
        total *= math.perm(n, c.companies) * n_rents**c.companies
    return total


def enumerate_configurations(econ: Economy, rent_grid, budget: int = DEFAULT_BUDGET):
    """Every configuration with rents from ``rent_grid`` (distinct locations per commodity)."""
    rent_grid = tuple(rent_grid)
    total = count_configurations(econ, len(rent_grid))
    if total > budget:
        raise BudgetExceededError(f"{total} configurations exceed the budget of {budget}")
    per_commodity = []
    for c in econ.commodities:
        opts = []
        for locs in itertools.permutations(range(econ.n_locations), c.companies):
            for rents in itertools.product(rent_grid, repeat=c.companies):
                opts.append(tuple(zip(locs, rents)))
        per_commodity.append(opts)
    for sites in itertools.product(*per_commodity):
        yield Configuration(sites)


def exist_good_locations(econ: Economy) -> bool:
    """Every commodity has at least one good location."""
    return bool(np.all(econ.good_mask.any(axis=1)))


def _missing_vt_rents(econ, rent_grid):
    grid = np.asarray(rent_grid, dtype=float)
    missing = []
    for i in range(len(econ.commodities)):
        for x in np.flatnonzero(econ.good_mask[i]):
            v = econ.net_values[i, x]
            if not np.any(np.abs(grid - v) <= MONEY_ATOL):
                missing.append(float(v))
    return missing


@dataclass(frozen=True)
class VTConfReport:
    exist_good_locations: bool
    n_configurations: int
    lower_bounds: tuple  # (c_0t, l_1r, l_2r)
    minima: tuple  # smallest expected cost of each kind over the enumeration
    minimizers: frozenset  # configurations attaining all three minima at once
    vt_set: frozenset
    attains_lower_bounds: frozenset  # configurations attaining (c_0t, l_1r, l_2r)
    holds: bool

    @property
    def sets_equal(self) -> bool:
        return self.minimizers == self.vt_set

    def to_dict(self, econ: Economy | None = None):
        def cfgs(s):
            items = sorted(s, key=lambda c: c.sites)
            return [c.to_dict(econ) if econ is not None else [list(map(list, p)) for p in c.sites] for c in items]

        return {
            "exist_good_locations": self.exist_good_locations,
            "n_configurations": self.n_configurations,
            "lower_bounds": list(self.lower_bounds),
            "minima": list(self.minima),
            "n_minimizers": len(self.minimizers),
            "n_vt": len(self.vt_set),
            "n_attaining_lower_bounds": len(self.attains_lower_bounds),
            "sets_equal": self.sets_equal,
            "holds": self.holds,
            "vt_configurations": cfgs(self.vt_set),
            "minimizers": cfgs(self.minimizers),
        }


def verify_vtconf_theorem(
    econ: Economy,
    rent_grid=None,
    params: CostParams = CostParams(),
    weights: Weights | None = None,
    budget: int = DEFAULT_BUDGET,
) -> VTConfReport:
    """Enumerate all configurations and compare minimizers with zero-cost configurations.

    When every commodity has a good location the report holds iff the set of
    configurations minimizing all three expected costs at once equals the set
    of VT configurations. Otherwise it holds iff no configuration reaches the
    three unavoidable minima simultaneously.
    """
    rent_grid = default_rent_grid(econ) if rent_grid is None else dedupe_rents(rent_grid)
    good = exist_good_locations(econ)
    missing = _missing_vt_rents(econ, rent_grid)
    if missing:
        raise ConstraintError(f"rent grid lacks the net values {missing} of good locations")
    validate_smallness(econ, params, rent_grid)

    configs, values = [], []
    for cfg in enumerate_configurations(econ, rent_grid, budget):
        configs.append(cfg)
        values.append(expected_costs(econ, cfg, weights, params).as_tuple())
    vals = np.array(values, dtype=float).reshape(-1, 3)
    bounds = (params.c_0t, params.l_1r, params.l_2r)
    if vals.size:
        minima = vals.min(axis=0)
        at_min = np.all(vals <= minima + MONEY_ATOL, axis=1)
        at_bounds = np.all(vals <= np.array(bounds) + MONEY_ATOL, axis=1)
    else:
        minima = np.full(3, np.nan)
        at_min = at_bounds = np.zeros(0, dtype=bool)
    minimizers = frozenset(c for c, m in zip(configs, at_min) if m)
    attains = frozenset(c for c, m in zip(configs, at_bounds) if m)
    vt = frozenset(c for c in configs if is_vt_configuration(econ, c))
    holds = (minimizers == vt) if good else (len(attains) == 0)
    return VTConfReport(good, len(configs), bounds, tuple(float(v) for v in minima), minimizers, vt, attains, holds)


@dataclass(frozen=True)
class TaxVariantReport:
    n_configurations: int
    minima: tuple
    minimizers: frozenset
    claimed: frozenset  # every company has tax <= rent <= net value
    holds: bool

    def to_dict(self):
        return {
            "n_configurations": self.n_configurations,
            "minima": list(self.minima),
            "n_minimizers": len(self.minimizers),
            "n_claimed": len(self.claimed),
            "holds": self.holds,
        }


def verify_tax_variant(
    econ: Economy,
    params: CostParams,
    rent_grid=None,
    weights: Weights | None = None,
    budget: int = DEFAULT_BUDGET,
) -> TaxVariantReport:
    """Configurations with ``tax <= rent <= net value`` everywhere minimize tenant and tax costs.

    Holds when that set is non-empty and is contained in the set of joint
    minimizers of the two expected costs.
    """
    if params.tax is None:
        raise ConstraintError("tax variant needs a per-location tax")
    if rent_grid is None:
        rent_grid = default_rent_grid(econ) + tuple(params.tax)
    rent_grid = dedupe_rents(rent_grid)
    validate_smallness(econ, CostParams(params.c_0t), rent_grid)
    tax = np.asarray(params.tax)
    configs, values = [], []
    claimed = set()
    for cfg in enumerate_configurations(econ, rent_grid, budget):
        configs.append(cfg)
        values.append(expected_tax_costs(econ, cfg, params, weights))
        if all(
            tax[x] - MONEY_ATOL <= r <= econ.net_values[i, x] + MONEY_ATOL for i, _, x, r in cfg.companies()
        ):
            claimed.add(cfg)
    vals = np.array(values, dtype=float).reshape(-1, 2)
    minima = vals.min(axis=0)
    at_min = np.all(vals <= minima + MONEY_ATOL, axis=1)
    minimizers = frozenset(c for c, m in zip(configs, at_min) if m)
    claimed = frozenset(claimed)
    holds = bool(claimed) and claimed <= minimizers
    return TaxVariantReport(len(configs), tuple(float(v) for v in minima), minimizers, claimed, holds)
