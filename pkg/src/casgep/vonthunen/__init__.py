"""Single-market land-use economy: zones, configuration costs, fluxes and adaptation."""

from .adapt import AdaptResult, adapt, random_configuration, random_fluxes
from .costs import (
    Configuration,
    CostParams,
    ExpectedCosts,
    Weights,
    company_costs,
    expected_costs,
    expected_tax_costs,
    is_vt_configuration,
    make_configuration,
    relation_pattern,
    renter_loss1,
    renter_loss2,
    renter_tax_cost,
    tenant_cost,
    validate_configuration,
    validate_smallness,
    vt_configuration,
)
from .economy import (
    MONEY_ATOL,
    CommoditySpec,
    Economy,
    TransportCost,
    ZoneReport,
    gain,
    good_locations,
    ideal_rent,
    impedance_bounds,
    is_good_for,
    land_value,
    net_value,
    zones_disjoint,
)
from .flux import FluxVector, flux_entropy, maximize_flux_entropy, total_flux_entropy
from .theorems import (
    VTConfReport,
    default_rent_grid,
    enumerate_configurations,
    exist_good_locations,
    verify_tax_variant,
    verify_vtconf_theorem,
)

__all__ = [name for name in dir() if not name.startswith("_")]
