"""Adaptation forces on interaction spaces, power-law minimizers and a land-use economy."""

__version__ = "0.1.0"

from . import powerlaw, vonthunen
from .forces import (
    AveragingSpec,
    CostSpec,
    DiversificationSpec,
    ForceTrace,
    better_adapted,
    diversification_force,
    force_trace,
    is_emergent_pattern,
    shannon_entropy,
    unification_force,
)
from .iscore import (
    Ensemble,
    GlobalState,
    Interaction,
    InteractionSpace,
    Population,
    ResourceSpace,
    StateLayout,
    goods_of,
    is_family_of,
    restrict,
)
