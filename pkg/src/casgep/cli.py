"""Command-line entry point: ``casgep <family> <command> <scenario>...``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on input errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, scenario
from .errors import BudgetExceededError, CasgepError, NoGoodLocationError, NonConvergenceError, ScenarioError
from .forces import better_adapted, force_trace, is_emergent_pattern
from .powerlaw import solve
from .report import emit_report
from .vonthunen import (
    adapt,
    flux_entropy,
    good_locations,
    impedance_bounds,
    is_vt_configuration,
    maximize_flux_entropy,
    random_configuration,
    random_fluxes,
    verify_tax_variant,
    verify_vtconf_theorem,
    zones_disjoint,
)
from .vonthunen.costs import expected_costs

OK, FAILED, BAD_INPUT = 0, 1, 2

EXPLAIN = {
    "unification_force": "U_j(y) = -sum_e P_j(e) * C_j(e): negated expected j-th cost over the population",
    "diversification_force": "D(g) = -sum_i Q(i) * log2 Q(i): entropy in bits of the diversification probability, 0*log2(0) = 0",
    "force_trace": "U_j and D evaluated at every grid time on the prefix of the global state up to that time",
    "better_adapted": "true iff U_j(t) >= U_j(s) for every j and D(t) >= D(s)",
    "is_emergent_pattern": "true iff the candidate forces are >= every sampled (trajectory, time) force, componentwise",
    "minimize_ratio": "argmin of E(x) / D(x) over the open probability simplex, projected gradient plus constrained Newton",
    "verify_hypotheses": "dE/dx_k(y) <= alpha_k(y) * log2 k for k >= 2, and N(y) >= 1/y_1 >= e",
    "predicted_distribution": "q_k = k^(-alpha_k * D/E) / N with N = sum_k k^(-alpha_k * D/E)",
    "stationarity": "log2 y_k + (D/E) * dE/dx_k + log2 e is the same for every k >= 2 at an interior minimizer",
    "make_cost": "E(x) = sum_k c_k(x) x_k for the inverse, Mandelbrot (k0 and k0 = 0) and constant rank costs",
    "fit_exponent": "least-squares line through (log2 k, log2 q_k): slope, intercept, r^2",
    "land_value": "L_b(x) = y_b(x) * (p_b - c_b(x) - F_b(j(x)))",
    "ideal_rent": "R(x) = max_b (L_b(x) - k_b(x)) and every b attaining it",
    "is_good_for": "x is good for b iff R(x) = L_b(x) - k_b(x)",
    "impedance_bounds": "(min, max) of j(x) over the locations good for b",
    "gain": "gain_b(x, y) = L_b(y) - L_b(x)",
    "zones_disjoint": "if gain_beta >= gain_b on the checked pairs and net values never tie, zone of beta lies inside zone of b",
    "tenant_cost": "c_t = r - (L_b - k_b) if r > L_b - k_b, else c_0t",
    "renter_loss1": "l_1 = (L_b - k_b) - r if r < L_b - k_b, else l_1r",
    "renter_loss2": "l_2 = R(x) - r if r < R(x), else l_2r",
    "renter_tax_cost": "c_r = tax(x) - r if r < tax(x), else 0",
    "expected_costs": "C_t, L_1, L_2 = weighted sums of the per-company costs with non-degenerate weights",
    "is_vt_configuration": "every company has r = L_b(x) - k_b(x) = R(x)",
    "verify_vtconf_theorem": "brute force: joint minimizers of (C_t, L_1, L_2) equal the VT configurations when every commodity has a good location",
    "flux_entropy": "-sum_a q_a log2 q_a with q_a = phi_a / demand",
    "maximize_flux_entropy": "phi_a = demand / n for every company",
    "adapt": "seeded local search accepting a move only if every U_j and the summed flux entropy are non-decreasing and one increases",
}


# -- commands ----------------------------------------------------------------


def powerlaw_verify(path, out, opts):
    doc = scenario.read(path)
    if doc["kind"] != "powerlaw":
        raise ScenarioError("expected a powerlaw scenario", "/kind")
    sc = scenario.build_powerlaw(doc, seed=opts.seed, tol=opts.tol)
    try:
        sol = solve(sc.problem, sc.init, tol=sc.tol, max_iters=sc.max_iters)
    except NonConvergenceError as exc:
        rep = {"converged": False, "error": str(exc), "grad_norm": exc.grad_norm}
        if exc.best is not None:
            rep["best"] = exc.best
        emit_report(out, "report", rep, None, opts.format)
        print(f"{path}: {exc}")
        return FAILED
    rep = sol.to_dict()
    checks = {
        "hypotheses": sol.hypotheses.ok,
        "residual": sol.residual <= sc.residual,
        "stationarity": sol.stationarity_spread <= sc.stationarity,
    }
    rep.update(converged=True, checks=checks, thresholds={"residual": sc.residual, "stationarity": sc.stationarity})
    rows = [(k + 1, float(y), float(q)) for k, (y, q) in enumerate(zip(sol.y, sol.predicted))]
    emit_report(out, "report", rep, None, opts.format)
    emit_report(out, "distribution", None, (["k", "y_k", "q_hat_k"], rows), opts.format)
    ok = all(checks.values())
    print(
        f"{path}: residual={sol.residual:.3e} stationarity={sol.stationarity_spread:.3e} "
        f"hypotheses={'ok' if sol.hypotheses.ok else 'fail'} -> {'PASS' if ok else 'FAIL'}"
    )
    return OK if ok else FAILED


def _bounds(econ):
    out = {}
    for c in econ.commodities:
        try:
            out[str(c.id)] = list(impedance_bounds(econ, c.id))
        except NoGoodLocationError:
            out[str(c.id)] = None
    return out


def _zones(econ, pairs):
    reports = []
    for cb in econ.commodities:
        for cbeta in econ.commodities:
            if cb.id != cbeta.id and cb.life_cost_constant and cbeta.life_cost_constant:
                reports.append(zones_disjoint(econ, cb.id, cbeta.id, pairs=pairs).to_dict())
    return reports


def vonthunen_run(path, out, opts):
    doc = scenario.read(path)
    if doc["kind"] != "vonthunen":
        raise ScenarioError("expected a vonthunen scenario", "/kind")
    sc = scenario.build_vonthunen(doc, seed=opts.seed)
    econ = sc.economy
    if sc.start is None:
        rng = np.random.default_rng(sc.seed)
        cfg0, flux0 = random_configuration(econ, rng, sc.rent_grid), random_fluxes(econ, rng)
    else:
        cfg0, flux0 = sc.start, sc.start_flux
    res = adapt(econ, cfg0, flux0, sc.seed, sc.steps, sc.params, sc.weights, sc.rent_grid, sc.patience)
    tr = res.trace
    monotone = bool(np.all(np.diff(tr.u, axis=0) >= 0) and np.all(np.diff(tr.d) >= 0))
    final_ok = better_adapted(tr, tr.times[0], tr.times[-1])
    cfg, flux = res.final
    rows = [(int(t), -u[0], -u[1], -u[2], d) for t, u, d in zip(tr.times, tr.u, tr.d)]
    rep = {
        "seed": sc.seed,
        "steps": sc.steps,
        "proposals": res.proposals,
        "accepted": res.accepted,
        "stagnated": res.stagnated,
        "monotone": monotone,
        "better_adapted_start_to_end": final_ok,
        "configuration": cfg.to_dict(econ),
        "fluxes": flux.to_dict(),
        "flux_entropy": {str(c.id): flux_entropy(flux, c.id) for c in econ.commodities},
        "expected_costs": list(expected_costs(econ, cfg, sc.weights, sc.params).as_tuple()),
        "vt_configuration": is_vt_configuration(econ, cfg),
        "impedance_bounds": _bounds(econ),
        "zones": _zones(econ, sc.pairs),
    }
    emit_report(out, "report", rep, None, opts.format)
    emit_report(out, "trace", None, (["step", "C_t", "L_r1", "L_r2", "D_flux"], rows), opts.format)
    ok = monotone and final_ok
    print(
        f"{path}: {res.accepted} of {res.proposals} moves accepted, VT={rep['vt_configuration']}, "
        f"monotone={monotone} -> {'PASS' if ok else 'FAIL'}"
    )
    return OK if ok else FAILED


def vonthunen_verify(path, out, opts):
    doc = scenario.read(path)
    if doc["kind"] != "vonthunen":
        raise ScenarioError("expected a vonthunen scenario", "/kind")
    sc = scenario.build_vonthunen(doc, seed=opts.seed)
    econ = sc.economy
    thm = verify_vtconf_theorem(econ, sc.rent_grid, sc.params, sc.weights, sc.budget)
    rep = {"vtconf": thm.to_dict(econ), "vt_exists": bool(thm.vt_set)}
    checks = {"vtconf": thm.holds}
    if sc.params.tax is not None:
        tax = verify_tax_variant(econ, sc.params, sc.rent_grid, sc.weights, sc.budget)
        rep["tax_variant"] = tax.to_dict()
        checks["tax_variant"] = tax.holds
    zones = _zones(econ, sc.pairs)
    rep["zones"] = zones
    rep["impedance_bounds"] = _bounds(econ)
    rep["good_locations"] = {str(c.id): good_locations(econ, c.id) for c in econ.commodities}
    checks["zones"] = all(z["ordered"] for z in zones if z["hypotheses_hold"])
    tol = 1e-9 if opts.tol is None else opts.tol
    flux_ok = {}
    for c in econ.commodities:
        phi = maximize_flux_entropy(c.id, c.companies, c.demand)[c.id]
        flux_ok[str(c.id)] = bool(np.max(np.abs(phi - c.demand / c.companies)) <= tol * max(1.0, c.demand))
    rep["equal_fluxes"] = flux_ok
    checks["equal_fluxes"] = all(flux_ok.values())
    rep["checks"] = checks
    message = "VT configurations exist" if thm.vt_set else "no VT configuration exists"
    rep["message"] = message
    rows = [(b, *(v if v is not None else (None, None))) for b, v in sorted(rep["impedance_bounds"].items())]
    emit_report(out, "report", rep, None, opts.format)
    emit_report(out, "zones", None, (["commodity", "r_lower", "r_upper"], rows), opts.format)
    ok = all(checks.values())
    print(f"{path}: {message}; {thm.n_configurations} configurations checked -> {'PASS' if ok else 'FAIL'}")
    return OK if ok else FAILED


def gep_trace(path, out, opts):
    doc = scenario.read(path)
    if doc["kind"] != "gep-trace":
        raise ScenarioError("expected a gep-trace scenario", "/kind")
    sc = scenario.build_gep(doc)
    tr = force_trace(sc.space, sc.state, sc.population, sc.interactions, sc.cost, sc.averaging, sc.diversification)
    rep = {"times": tr.times, "u": tr.u, "d": tr.d}
    checks = {}
    if sc.assert_better_adapted is not None:
        s, t = sc.assert_better_adapted
        checks["better_adapted"] = better_adapted(tr, s, t)
    if sc.candidate is not None:
        checks["emergent_pattern"] = is_emergent_pattern(sc.candidate[0], sc.candidate[1], [tr])
    rep["checks"] = checks
    emit_report(out, "report", rep, None, opts.format)
    emit_report(out, "trace", None, (tr.header(), list(tr.rows())), opts.format)
    ok = all(checks.values())
    print(f"{path}: {len(tr)} grid times, checks={checks} -> {'PASS' if ok else 'FAIL'}")
    return OK if ok else FAILED


COMMANDS = {
    ("powerlaw", "verify"): powerlaw_verify,
    ("vonthunen", "run"): vonthunen_run,
    ("vonthunen", "verify"): vonthunen_verify,
    ("gep", "trace"): gep_trace,
}


# -- plumbing ----------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="casgep", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"casgep {__version__}")
    p.add_argument("--explain", metavar="OP", help="print the formula behind an operation and exit")
    sub = p.add_subparsers(dest="family")

    def common(sp):
        sp.add_argument("scenarios", nargs="+", metavar="scenario")
        sp.add_argument("--out", default="casgep-out", help="output directory (default: casgep-out)")
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--tol", type=float, help="override the solver or check tolerance")
        sp.add_argument("--format", choices=("csv", "json"), help="write only this format (default: both)")
        sp.add_argument("--jobs", type=int, default=1, help="scenarios processed in parallel")

    for family, cmds in (("powerlaw", ["verify"]), ("vonthunen", ["run", "verify"]), ("gep", ["trace"])):
        fp = sub.add_parser(family)
        fsub = fp.add_subparsers(dest="command", required=True)
        for c in cmds:
            common(fsub.add_parser(c))
    return p


def _run_one(args):
    family, command, path, out, opts = args
    try:
        return COMMANDS[(family, command)](path, out, opts)
    except ScenarioError as exc:
        print(f"{path}: input error at {exc}", file=sys.stderr)
        return BAD_INPUT
    except BudgetExceededError as exc:
        print(f"{path}: scenario too large: {exc}", file=sys.stderr)
        return BAD_INPUT
    except CasgepError as exc:
        print(f"{path}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return FAILED
    except OSError as exc:
        print(f"{path}: cannot write output: {exc}", file=sys.stderr)
        return BAD_INPUT


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and BAD_INPUT
    if args.explain:
        text = EXPLAIN.get(args.explain)
        if text is None:
            print(f"unknown operation {args.explain!r}; known: {', '.join(sorted(EXPLAIN))}", file=sys.stderr)
            return BAD_INPUT
        print(f"{args.explain}: {text}")
        return OK
    if args.family is None:
        parser.print_help(sys.stderr)
        return BAD_INPUT
    if args.tol is not None and args.tol <= 0:
        print("--tol must be positive", file=sys.stderr)
        return BAD_INPUT
    if args.jobs < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return BAD_INPUT
    paths = args.scenarios
    multi = len(paths) > 1
    tasks = []
    for p in paths:
        out = os.path.join(args.out, os.path.splitext(os.path.basename(p))[0]) if multi else args.out
        tasks.append((args.family, args.command, p, out, args))
    if args.jobs > 1 and multi:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            codes = list(ex.map(_run_one, tasks))
    else:
        codes = [_run_one(t) for t in tasks]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
