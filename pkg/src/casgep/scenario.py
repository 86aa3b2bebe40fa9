"""JSON scenario files: schema validation and construction of the model objects.

Every problem found in a scenario is raised as :class:`ScenarioError`
carrying a JSON pointer to the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import units
from .errors import CasgepError, ScenarioError
from .forces import AveragingSpec, CostSpec, DiversificationSpec
from .iscore import (
    GlobalState,
    Interaction,
    InteractionSpace,
    Population,
    ResourceSpace,
    StateLayout,
    is_family_of,
)
from .powerlaw import PowerLawProblem, constant_problem, make_cost
from .vonthunen.costs import (
    Configuration,
    CostParams,
    Weights,
    check_weights,
    validate_configuration,
    validate_smallness,
)
from .vonthunen.economy import CommoditySpec, Economy, TransportCost
from .vonthunen.flux import FluxVector
from .vonthunen.theorems import DEFAULT_BUDGET, dedupe_rents, default_rent_grid

NUM = {"type": "number"}
INT = {"type": "integer"}
NONNEG_INT = {"type": "integer", "minimum": 0}
QUANTITY = {
    "anyOf": [
        NUM,
        {
            "type": "object",
            "properties": {"value": NUM, "unit": {"type": "string"}},
            "required": ["value"],
            "additionalProperties": False,
        },
    ]
}
TABLE = {
    "anyOf": [
        NUM,
        {
            "type": "object",
            "properties": {
                "unit": {"type": "string"},
                "value": NUM,
                "by_location": {
                    "type": "object",
                    "patternProperties": {"^[0-9]+$": NUM},
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    ]
}
POINT = {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}

POWERLAW_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "powerlaw"},
        "d": {"type": "integer", "minimum": 2},
        "cost": {
            "type": "object",
            "properties": {
                "kind": {"enum": [1, 2, 3, 4, "inverse", "mandelbrot", "mandelbrot0", "constant", "constant-energy"]},
                "params": {"type": "object"},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "init": {
            "anyOf": [
                {"enum": ["uniform", "random"]},
                {"type": "array", "items": NUM},
            ]
        },
        "seed": NONNEG_INT,
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_iters": {"type": "integer", "minimum": 1},
        "thresholds": {
            "type": "object",
            "properties": {
                "residual": {"type": "number", "exclusiveMinimum": 0},
                "stationarity": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["kind", "d", "cost"],
    "additionalProperties": False,
}

COMMODITY = {
    "type": "object",
    "properties": {
        "id": INT,
        "unit": {"type": "string"},
        "yield": TABLE,
        "production_cost": TABLE,
        "price": QUANTITY,
        "transport_cost": {
            "type": "object",
            "properties": {
                "unit": {"type": "string"},
                "impedance_unit": {"type": "string"},
                "breakpoints": {
                    "type": "array",
                    "items": POINT,
                    "minItems": 1,
                },
            },
            "required": ["breakpoints"],
            "additionalProperties": False,
        },
        "life_cost": TABLE,
        "demand": QUANTITY,
        "companies": {"type": "integer", "minimum": 1},
        "start": {
            "type": "object",
            "properties": {
                "locations": {"type": "array", "items": NONNEG_INT},
                "rents": {"type": "array", "items": NUM},
                "fluxes": {"type": "array", "items": NUM},
            },
            "required": ["locations", "rents"],
            "additionalProperties": False,
        },
    },
    "required": ["id", "yield", "production_cost", "price", "transport_cost", "life_cost"],
    "additionalProperties": False,
}

VONTHUNEN_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "vonthunen"},
        "grid": {
            "type": "object",
            "properties": {
                "points": {"type": "array", "items": POINT, "minItems": 1},
                "rings": {
                    "type": "object",
                    "properties": {
                        "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                        "angles": {"type": "integer", "minimum": 1},
                        "phase": NUM,
                    },
                    "required": ["radii", "angles"],
                    "additionalProperties": False,
                },
                "unit": {"type": "string"},
            },
            "additionalProperties": False,
            "minProperties": 1,
        },
        "market": POINT,
        "impedance": TABLE,
        "commodities": {"type": "array", "items": COMMODITY, "minItems": 1},
        "costs": {
            "type": "object",
            "properties": {
                "c_0t": QUANTITY,
                "l_1r": QUANTITY,
                "l_2r": QUANTITY,
                "tax": TABLE,
            },
            "additionalProperties": False,
        },
        "weights": {
            "type": "object",
            "properties": {k: {"type": "array", "items": NUM} for k in ("tenant", "loss1", "loss2")},
            "additionalProperties": False,
        },
        "rent_grid": {
            "type": "object",
            "properties": {
                "values": {"type": "array", "items": NUM},
                "unit": {"type": "string"},
                "include_exact": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "zones": {
            "type": "object",
            "properties": {"pairs": {"enum": ["inward", "all"]}},
            "additionalProperties": False,
        },
        "budget": {"type": "integer", "minimum": 1},
        "adapt": {
            "type": "object",
            "properties": {
                "seed": NONNEG_INT,
                "steps": NONNEG_INT,
                "patience": NONNEG_INT,
            },
            "additionalProperties": False,
        },
    },
    "required": ["kind", "grid", "commodities"],
    "additionalProperties": False,
}

GEP_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "gep-trace"},
        "entities": {"type": "array", "items": NONNEG_INT, "minItems": 1},
        "interactions": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": NONNEG_INT,
                    "agents": {"type": "array", "items": NONNEG_INT, "minItems": 1},
                    "propagator": NONNEG_INT,
                    "patients": {"type": "array", "items": NONNEG_INT},
                    "resource": {
                        "type": "object",
                        "properties": {
                            "low": NUM,
                            "high": NUM,
                            "values": {"type": "array", "items": NUM, "minItems": 1},
                            "unit": {"type": "string"},
                        },
                        "additionalProperties": False,
                    },
                },
                "required": ["id", "agents", "propagator"],
                "additionalProperties": False,
            },
        },
        "population": {"type": "array", "items": NONNEG_INT, "minItems": 1},
        "adaptive_interactions": {"type": "array", "items": NONNEG_INT, "minItems": 1},
        "time_grid": {"type": "array", "items": NUM, "minItems": 1},
        "layouts": {
            "type": "object",
            "patternProperties": {
                "^[0-9]+$": {
                    "type": "object",
                    "properties": {
                        "activation": {"type": "object", "additionalProperties": NONNEG_INT},
                        "goods": {
                            "type": "object",
                            "patternProperties": {"^[0-9]+$": NONNEG_INT},
                            "additionalProperties": False,
                        },
                        "proper": {"type": "object", "additionalProperties": NONNEG_INT},
                    },
                    "additionalProperties": False,
                }
            },
            "additionalProperties": False,
        },
        "states": {
            "type": "object",
            "patternProperties": {
                "^[0-9]+$": {"type": "array", "items": {"type": "array", "items": NUM}},
            },
            "additionalProperties": False,
        },
        "costs": {
            "type": "array",
            "items": {"type": "string"},
            "minItems": 1,
        },
        "averaging": {
            "anyOf": [
                {"const": "uniform"},
                {
                    "type": "object",
                    "patternProperties": {"^[0-9]+$": NUM},
                    "additionalProperties": False,
                },
            ]
        },
        "diversification": {"const": "proportional"},
        "candidate": {
            "type": "object",
            "properties": {"u": {"type": "array", "items": NUM}, "d": NUM},
            "required": ["u", "d"],
            "additionalProperties": False,
        },
        "assert_better_adapted": {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2},
    },
    "required": [
        "kind",
        "entities",
        "interactions",
        "population",
        "adaptive_interactions",
        "time_grid",
        "layouts",
        "states",
        "costs",
    ],
    "additionalProperties": False,
}

SCHEMAS = {"powerlaw": POWERLAW_SCHEMA, "vonthunen": VONTHUNEN_SCHEMA, "gep-trace": GEP_SCHEMA}


def pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def validate(doc, schema) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    err = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if err is not None:
        raise ScenarioError(err.message, pointer(err.absolute_path))


def read(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse(doc)


def parse(doc) -> dict:
    """Check the ``kind`` and validate against its schema."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    kind = doc.get("kind")
    if kind not in SCHEMAS:
        raise ScenarioError(f"kind must be one of {sorted(SCHEMAS)}", "/kind")
    validate(doc, SCHEMAS[kind])
    return doc


class _at:
    """Re-raise model and unit errors as scenario errors at ``ptr``."""

    def __init__(self, ptr):
        self.ptr = ptr

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if exc is None or isinstance(exc, ScenarioError):
            return False
        if isinstance(exc, (CasgepError, units.UnitError, ValueError, KeyError, TypeError)):
            msg = exc.args[0] if exc.args else str(exc)
            raise ScenarioError(str(msg), self.ptr) from exc
        return False


# -- power law ---------------------------------------------------------------


@dataclass
class PowerLawScenario:
    problem: PowerLawProblem
    init: np.ndarray | None
    tol: float
    max_iters: int
    residual: float
    stationarity: float


def build_powerlaw(doc, seed: int | None = None, tol: float | None = None) -> PowerLawScenario:
    d = doc["d"]
    cost = doc["cost"]
    params = dict(cost.get("params", {}))
    with _at("/cost"):
        if cost["kind"] == "constant-energy":
            prob = constant_problem(d, float(params.get("c", 1.0)))
        else:
            prob = make_cost(cost["kind"], d, **params)
    init = doc.get("init", "uniform")
    with _at("/init"):
        if init == "uniform":
            x0 = None
        elif init == "random":
            s = doc.get("seed", 0) if seed is None else seed
            x0 = np.random.default_rng(s).dirichlet(np.ones(d))
        else:
            x0 = np.asarray(init, dtype=float)
            if x0.shape != (d,) or np.any(x0 <= 0) or abs(x0.sum() - 1) > 1e-9:
                raise ValueError(f"init must be a strictly positive probability vector of length {d}")
    th = doc.get("thresholds", {})
    return PowerLawScenario(
        problem=prob,
        init=x0,
        tol=float(tol if tol is not None else doc.get("tol", 1e-8)),
        max_iters=int(doc.get("max_iters", 100_000)),
        residual=float(th.get("residual", 1e-4)),
        stationarity=float(th.get("stationarity", 1e-6)),
    )


# -- von Thunen --------------------------------------------------------------

MONEY_PER_AREA = units.dimension(money=1, length=-2)
IMPEDANCE = units.dimension(impedance=1)


def _commodity_dims(b):
    u = f"commodity:{b}"
    return {
        "yield": {u: 1, "length": -2},
        "money_per_unit": {"money": 1, u: -1},
        "demand": {u: 1, "time": -1},
    }


def _quantity(q, expected, ptr, extra=None) -> float:
    if isinstance(q, dict):
        with _at(ptr + "/unit"):
            return float(units.convert(q["value"], q.get("unit"), expected, extra))
    return float(q)


def _table(t, n, expected, ptr, extra=None) -> np.ndarray:
    if not isinstance(t, dict):
        return np.full(n, float(t))
    out = np.full(n, np.nan)
    if "value" in t:
        out[:] = t["value"]
    for key, v in t.get("by_location", {}).items():
        idx = int(key)
        if idx >= n:
            raise ScenarioError(f"location {idx} is not on the grid of {n} points", f"{ptr}/by_location/{key}")
        out[idx] = v
    missing = np.flatnonzero(np.isnan(out))
    if missing.size:
        raise ScenarioError(f"no value for locations {missing.tolist()} (give 'value' as a default)", ptr)
    with _at(ptr + "/unit"):
        return np.asarray(units.convert(out.tolist(), t.get("unit"), expected, extra), dtype=float)


def _grid(g, ptr="/grid"):
    if "points" in g and "rings" in g:
        raise ScenarioError("give either points or rings, not both", ptr)
    scale = 1.0
    if "unit" in g:
        with _at(ptr + "/unit"):
            scale = units.convert(1.0, g["unit"], units.dimension(length=1))
    if "points" in g:
        pts = np.asarray(g["points"], dtype=float)
    elif "rings" in g:
        r = g["rings"]
        phase = r.get("phase", 0.0)
        ang = phase + 2 * math.pi * np.arange(r["angles"]) / r["angles"]
        pts = np.array([[rad * math.cos(a), rad * math.sin(a)] for rad in r["radii"] for a in ang])
    else:
        raise ScenarioError("grid needs points or rings", ptr)
    return pts * scale


@dataclass
class VonThunenScenario:
    economy: Economy
    params: CostParams
    weights: Weights
    rent_grid: tuple
    pairs: str
    budget: int
    seed: int
    steps: int
    patience: int | None
    start: Configuration | None
    start_flux: FluxVector | None
    raw: dict = field(repr=False, default_factory=dict)


def build_vonthunen(doc, seed: int | None = None) -> VonThunenScenario:
    pts = _grid(doc["grid"])
    n = pts.shape[0]
    market = np.asarray(doc.get("market", [0.0, 0.0]), dtype=float)
    imp = None
    if "impedance" in doc:
        imp = _table(doc["impedance"], n, IMPEDANCE, "/impedance")

    comms = []
    for k, c in enumerate(doc["commodities"]):
        ptr = f"/commodities/{k}"
        b = c["id"]
        dims = _commodity_dims(b)
        extra = {c.get("unit", "u"): ({f"commodity:{b}": 1}, 1.0)}
        tc = c["transport_cost"]
        bp = np.asarray(tc["breakpoints"], dtype=float)
        with _at(ptr + "/transport_cost"):
            jb = np.asarray(units.convert(bp[:, 0].tolist(), tc.get("impedance_unit"), IMPEDANCE), dtype=float)
            fv = np.asarray(units.convert(bp[:, 1].tolist(), tc.get("unit"), dims["money_per_unit"], extra))
            transport = TransportCost(tuple(jb), tuple(fv))
        comms.append(
            CommoditySpec(
                id=b,
                yields=_table(c["yield"], n, dims["yield"], ptr + "/yield", extra),
                production_cost=_table(c["production_cost"], n, dims["money_per_unit"], ptr + "/production_cost", extra),
                price=_quantity(c["price"], dims["money_per_unit"], ptr + "/price", extra),
                transport=transport,
                life_cost=_table(c["life_cost"], n, MONEY_PER_AREA, ptr + "/life_cost", extra),
                demand=_quantity(c.get("demand", 1.0), dims["demand"], ptr + "/demand", extra),
                companies=c.get("companies", 1),
                unit=c.get("unit", "u"),
            )
        )
    with _at("/commodities"):
        econ = Economy(pts, market, tuple(comms), imp)

    costs = doc.get("costs", {})
    tax = None
    if "tax" in costs:
        tax = tuple(_table(costs["tax"], n, MONEY_PER_AREA, "/costs/tax").tolist())
    params = CostParams(
        c_0t=_quantity(costs.get("c_0t", 0.0), MONEY_PER_AREA, "/costs/c_0t"),
        l_1r=_quantity(costs.get("l_1r", 0.0), MONEY_PER_AREA, "/costs/l_1r"),
        l_2r=_quantity(costs.get("l_2r", 0.0), MONEY_PER_AREA, "/costs/l_2r"),
        tax=tax,
    )

    rg = doc.get("rent_grid")
    if rg is None:
        rents = default_rent_grid(econ)
    else:
        with _at("/rent_grid/unit"):
            vals = units.convert(rg.get("values", []), rg.get("unit"), MONEY_PER_AREA)
        if rg.get("include_exact", True):
            vals = list(vals) + list(default_rent_grid(econ, offsets=()))
        if not vals:
            raise ScenarioError("rent grid is empty", "/rent_grid")
        rents = dedupe_rents(vals)
    if tax is not None:
        rents = dedupe_rents(rents + tax)
    with _at("/costs"):
        validate_smallness(econ, params, rents)

    w = doc.get("weights", {})
    weights = Weights(*(np.asarray(w[k], dtype=float) if k in w else None for k in ("tenant", "loss1", "loss2")))
    for k in ("tenant", "loss1", "loss2"):
        if k in w:
            with _at(f"/weights/{k}"):
                check_weights(w[k], sum(c.companies for c in econ.commodities), k)

    start, start_flux = None, None
    given = [("start" in c) for c in doc["commodities"]]
    if any(given):
        if not all(given):
            raise ScenarioError("give a start for every commodity or for none", "/commodities")
        sites, fl, dm = [], {}, {}
        for k, c in enumerate(doc["commodities"]):
            s = c["start"]
            ptr = f"/commodities/{k}/start"
            if len(s["locations"]) != len(s["rents"]):
                raise ScenarioError("locations and rents differ in length", ptr)
            sites.append(tuple(zip(s["locations"], s["rents"])))
            com = econ.commodity(c["id"])
            if "fluxes" in s:
                fl[c["id"]] = s["fluxes"]
            else:
                fl[c["id"]] = [com.demand / com.companies] * com.companies
            dm[c["id"]] = com.demand
        with _at("/commodities"):
            start = validate_configuration(econ, Configuration(tuple(sites)))
            start_flux = FluxVector(fl, dm)

    ad = doc.get("adapt", {})
    return VonThunenScenario(
        economy=econ,
        params=params,
        weights=weights,
        rent_grid=rents,
        pairs=doc.get("zones", {}).get("pairs", "inward"),
        budget=int(doc.get("budget", DEFAULT_BUDGET)),
        seed=int(ad.get("seed", 0) if seed is None else seed),
        steps=int(ad.get("steps", 100)),
        patience=ad.get("patience"),
        start=start,
        start_flux=start_flux,
        raw=doc,
    )


# -- GEP trace ---------------------------------------------------------------


@dataclass
class GepScenario:
    space: InteractionSpace
    state: GlobalState
    population: Population
    interactions: tuple
    cost: CostSpec
    averaging: AveragingSpec
    diversification: DiversificationSpec
    candidate: tuple | None
    assert_better_adapted: tuple | None


def build_gep(doc) -> GepScenario:
    inters = []
    for k, it in enumerate(doc["interactions"]):
        res = it.get("resource")
        with _at(f"/interactions/{k}"):
            if res is None:
                rs = ResourceSpace.interval(-np.inf, np.inf)
            elif "values" in res:
                rs = ResourceSpace.finite(res["values"], res.get("unit", ""))
            else:
                rs = ResourceSpace.interval(res["low"], res["high"], res.get("unit", ""))
            inters.append(Interaction(it["id"], frozenset(it["agents"]), it["propagator"], frozenset(it.get("patients", [])), rs))
    with _at("/interactions"):
        if len({i.id for i in inters}) != len(inters):
            raise ValueError("duplicate interaction id")
        space = InteractionSpace.build(doc["entities"], inters)
    layouts = {}
    for key, lay in doc["layouts"].items():
        with _at(f"/layouts/{key}"):
            layouts[int(key)] = StateLayout(
                activation=lay.get("activation", {}),
                goods={int(i): c for i, c in lay.get("goods", {}).items()},
                proper=lay.get("proper", {}),
            )
    with _at("/states"):
        gs = GlobalState(
            space=space,
            time_grid=np.asarray(doc["time_grid"], dtype=float),
            states={int(e): np.asarray(v, dtype=float) for e, v in doc["states"].items()},
            layouts=layouts,
        )
    pop = Population(frozenset(doc["population"]))
    adaptive = tuple(doc["adaptive_interactions"])
    with _at("/adaptive_interactions"):
        if not is_family_of(pop, adaptive, space):
            raise ValueError("some adaptive interaction has no agent in the population")
    names = doc["costs"]
    for e in pop:
        lay = layouts.get(e)
        for name in names:
            if lay is None or name not in lay.proper:
                raise ScenarioError(f"entity {e} has no proper slot {name!r}", f"/layouts/{e}")

    def cost_fn(y, e, j):
        return y.slot(e, "proper", names[j])

    cost = CostSpec(pop, len(names), cost_fn)
    avg_doc = doc.get("averaging", "uniform")
    if avg_doc == "uniform":
        avg = AveragingSpec.uniform()
    else:
        w = {int(e): float(v) for e, v in avg_doc.items()}
        if set(w) != set(pop.members):
            raise ScenarioError("averaging weights must cover exactly the population", "/averaging")
        if any(v < 0 for v in w.values()) or abs(sum(w.values()) - 1) > 1e-9:
            raise ScenarioError("averaging weights must be a probability vector", "/averaging")
        avg = AveragingSpec(lambda y, j, w=w: w)
    cand = doc.get("candidate")
    if cand is not None and len(cand["u"]) != len(names):
        raise ScenarioError(f"candidate needs {len(names)} unification values", "/candidate/u")
    return GepScenario(
        space=space,
        state=gs,
        population=pop,
        interactions=adaptive,
        cost=cost,
        averaging=avg,
        diversification=DiversificationSpec.proportional(),
        candidate=None if cand is None else (tuple(cand["u"]), float(cand["d"])),
        assert_better_adapted=None if "assert_better_adapted" not in doc else tuple(doc["assert_better_adapted"]),
    )
