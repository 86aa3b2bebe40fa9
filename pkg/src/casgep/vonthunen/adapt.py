"""Seeded local search that only accepts moves leaving every force no worse.

Proposals either relocate/re-rent one company or shift flux between two
companies of one commodity. A proposal is accepted when all unification
forces (negated expected costs) and the summed flux entropy are
non-decreasing and at least one strictly increases, so the recorded
trace is monotone by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..forces import ForceTrace
from .costs import Configuration, CostParams, Weights, expected_costs, validate_configuration
from .economy import Economy
from .flux import FluxVector, total_flux_entropy
from .theorems import default_rent_grid


def forces(econ, cfg, flux, weights, params):
    u = -np.array(expected_costs(econ, cfg, weights, params).as_tuple())
    return u, total_flux_entropy(flux)


def random_configuration(econ: Economy, rng: np.random.Generator, rent_grid=None) -> Configuration:
    grid = np.asarray(default_rent_grid(econ) if rent_grid is None else rent_grid, dtype=float)
    sites = []
    for c in econ.commodities:
        locs = rng.choice(econ.n_locations, size=c.companies, replace=False)
        rents = rng.choice(grid, size=c.companies)
        sites.append(tuple(zip(locs.tolist(), rents.tolist())))
    return validate_configuration(econ, Configuration(tuple(sites)))


def random_fluxes(econ: Economy, rng: np.random.Generator) -> FluxVector:
    fl, dm = {}, {}
    for c in econ.commodities:
        q = rng.dirichlet(np.ones(c.companies))
        q = np.maximum(q, 1e-6)
        fl[c.id] = q / q.sum() * c.demand
        dm[c.id] = c.demand
    return FluxVector(fl, dm)


@dataclass
class AdaptResult:
    configurations: list
    fluxes: list
    trace: ForceTrace
    proposals: int
    accepted: int
    stagnated: bool
    moves: list = field(default_factory=list)  # kind of each accepted move

    def __iter__(self):
        return iter(zip(self.configurations, self.fluxes))

    @property
    def final(self):
        return self.configurations[-1], self.fluxes[-1]


def _at_optimum(u, flux, params, econ):
    bounds = -np.array([params.c_0t, params.l_1r, params.l_2r])
    if np.any(u < bounds - 1e-12):
        return False
    for c in econ.commodities:
        q = flux.probabilities(c.id)
        if np.max(q) - np.min(q) > 1e-12:
            return False
    return True


def _propose_company(econ, cfg, rng, rents):
    i = int(rng.integers(len(econ.commodities)))
    a = int(rng.integers(econ.commodities[i].companies))
    taken = {x for k, (x, _) in enumerate(cfg.sites[i]) if k != a}
    free = [x for x in range(econ.n_locations) if x not in taken]
    x = int(free[rng.integers(len(free))])
    if rng.random() < 0.5:
        r = float(econ.net_values[i, x])
    else:
        r = float(rents[rng.integers(len(rents))])
    return cfg.replace(i, a, x, r)


def _propose_flux(econ, flux, rng, multi):
    c = econ.commodities[multi[rng.integers(len(multi))]]
    a1, a2 = rng.choice(c.companies, size=2, replace=False)
    phi = np.array(flux[c.id])
    hi, lo = (a1, a2) if phi[a1] >= phi[a2] else (a2, a1)
    delta = rng.random() * (phi[hi] - phi[lo]) / 2
    phi[hi] -= delta
    phi[lo] += delta
    return flux.replace(c.id, phi)


def adapt(
    econ: Economy,
    config0: Configuration,
    flux0: FluxVector,
    seed: int,
    steps: int,
    params: CostParams = CostParams(),
    weights: Weights | None = None,
    rent_choices=None,
    patience: int | None = None,
) -> AdaptResult:
    """Run ``steps`` proposals from a seeded generator and keep the accepted ones.

    The trace time is the proposal index (0 for the start). ``stagnated``
    is set when the state is already optimal (zero excess costs and equal
    fluxes, so no admissible move exists) or when the last ``patience``
    proposals were all rejected.
    """
    validate_configuration(econ, config0)
    rng = np.random.default_rng(seed)
    rents = np.asarray(default_rent_grid(econ) if rent_choices is None else rent_choices, dtype=float)
    multi = [i for i, c in enumerate(econ.commodities) if c.companies >= 2]
    patience = min(50, steps) if patience is None else patience

    cfg, flux = config0, flux0
    u, d = forces(econ, cfg, flux, weights, params)
    configs, fluxes, times, us, ds, moves = [cfg], [flux], [0.0], [u], [d], []
    proposals = accepted = 0
    last_accept = 0
    stagnated = False
    for step in range(1, steps + 1):
        if _at_optimum(u, flux, params, econ):
            stagnated = True
            break
        proposals += 1
        if multi and rng.random() < 0.5:
            kind = "flux"
            cand_cfg, cand_flux = cfg, _propose_flux(econ, flux, rng, multi)
        else:
            kind = "company"
            cand_cfg, cand_flux = _propose_company(econ, cfg, rng, rents), flux
        nu, nd = forces(econ, cand_cfg, cand_flux, weights, params)
        if np.all(nu >= u) and nd >= d and (np.any(nu > u) or nd > d):
            cfg, flux, u, d = cand_cfg, cand_flux, nu, nd
            configs.append(cfg)
            fluxes.append(flux)
            times.append(float(step))
            us.append(u)
            ds.append(d)
            moves.append(kind)
            accepted += 1
            last_accept = step
    else:
        stagnated = steps - last_accept >= patience or _at_optimum(u, flux, params, econ)
    trace = ForceTrace(np.array(times), np.array(us), np.array(ds))
    return AdaptResult(configs, fluxes, trace, proposals, accepted, stagnated, moves)


def max_flux_entropy(econ: Economy) -> float:
    return float(sum(math.log2(c.companies) for c in econ.commodities))
