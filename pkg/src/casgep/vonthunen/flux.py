"""Commodity fluxes to the market and their diversification entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConstraintError, NonConvergenceError, UnknownIdError
from ..forces import shannon_entropy

FLUX_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class FluxVector:
    """Per-commodity flux of every company; each commodity's fluxes sum to its demand."""

    fluxes: dict
    demands: dict

    def __post_init__(self):
        fl, dm = {}, {}
        if set(self.fluxes) != set(self.demands):
            raise ConstraintError("fluxes and demands name different commodities")
        for b, phi in self.fluxes.items():
            phi = np.array(phi, dtype=float)
            delta = float(self.demands[b])
            if phi.ndim != 1 or phi.size == 0:
                raise ConstraintError(f"commodity {b} needs a non-empty flux vector")
            if delta <= 0:
                raise ConstraintError(f"demand of commodity {b} must be positive")
            if np.any(phi <= 0) or np.any(phi > delta * (1 + FLUX_RTOL)):
                raise ConstraintError(f"fluxes of commodity {b} must lie in (0, demand]")
            if abs(math.fsum(phi) - delta) > FLUX_RTOL * delta:
                raise ConstraintError(f"fluxes of commodity {b} sum to {phi.sum()!r}, not the demand {delta!r}")
            phi.setflags(write=False)
            fl[b], dm[b] = phi, delta
        object.__setattr__(self, "fluxes", fl)
        object.__setattr__(self, "demands", dm)

    def __getitem__(self, b):
        try:
            return self.fluxes[b]
        except KeyError:
            raise UnknownIdError(f"no fluxes for commodity {b!r}") from None

    def probabilities(self, b) -> np.ndarray:
        return self[b] / self.demands[b]

    def replace(self, b, phi) -> "FluxVector":
        fl = dict(self.fluxes)
        fl[b] = phi
        return FluxVector(fl, self.demands)

    def __eq__(self, other):
        if not isinstance(other, FluxVector) or set(self.fluxes) != set(other.fluxes):
            return False
        return all(
            np.array_equal(self.fluxes[b], other.fluxes[b]) and self.demands[b] == other.demands[b]
            for b in self.fluxes
        )

    def to_dict(self):
        return {str(b): [float(v) for v in phi] for b, phi in sorted(self.fluxes.items())}

    @classmethod
    def equal(cls, counts: dict, demands: dict) -> "FluxVector":
        return cls({b: np.full(n, demands[b] / n) for b, n in counts.items()}, demands)


def flux_entropy(flux: FluxVector, b) -> float:
    """Entropy in bits of the companies' shares of the demand of ``b``."""
    return shannon_entropy(flux.probabilities(b))


def total_flux_entropy(flux: FluxVector) -> float:
    return float(sum(flux_entropy(flux, b) for b in sorted(flux.fluxes)))


def maximize_flux_entropy(b, n_b: int, demand: float, tol: float = 1e-12, max_iters: int = 100) -> FluxVector:
    """Constrained Newton ascent of the share entropy, started away from the optimum.

    The shares are kept summing to one exactly in each step; the iteration
    stops when the Newton step is shorter than ``tol``.
    """
    if n_b < 1:
        raise ConstraintError("need at least one company")
    if demand <= 0:
        raise ConstraintError("demand must be positive")
    if n_b == 1:
        return FluxVector({b: np.array([float(demand)])}, {b: float(demand)})
    q = np.arange(1, n_b + 1, dtype=float)
    q /= q.sum()
    ln2 = math.log(2)
    for _ in range(max_iters):
        g = -(np.log2(q) + 1 / ln2)  # gradient of the entropy
        hinv = q * ln2  # inverse of minus the (diagonal) Hessian
        lam = float((hinv * g).sum() / hinv.sum())
        step = hinv * (g - lam)
        neg = step < 0
        t = 1.0
        if np.any(neg):
            t = min(1.0, 0.99 * float(np.min(q[neg] / -step[neg])))
        q = q + t * step
        q /= q.sum()
        if np.linalg.norm(t * step) < tol:
            break
    else:
        raise NonConvergenceError("flux entropy maximization did not converge", best=q)
    return FluxVector({b: q * demand}, {b: float(demand)})
