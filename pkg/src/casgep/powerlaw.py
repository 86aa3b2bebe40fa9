"""Power-law distributions at minimizers of cost over entropy.

A population state is a probability vector ``x`` over ``d`` ranked
interactions. The state minimizing ``E(x) / D(x)`` (energy over Shannon
entropy in bits) is compared against the rank law

    q_k = q_1 * k ** (-alpha_k * D / E),    q_1 = 1 / N,
    N = sum_k k ** (-alpha_k * D / E),

which holds when ``dE/dx_k <= alpha_k * log2(k)`` for ``k >= 2`` and
``N >= 1 / q_1 >= e``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    BoundaryCollapseError,
    ConstraintError,
    HypothesisError,
    NonConvergenceError,
    ProbabilityError,
)
from .forces import shannon_entropy

LOG2E = math.log2(math.e)
FLOOR = 1e-12


@dataclass(frozen=True)
class PowerLawProblem:
    """Energy on the open simplex with its gradient and the exponent map.

    ``alpha(x)`` returns a length-``d`` array; entry 0 (rank 1) never enters
    the hypotheses and contributes ``1 ** (...) = 1`` to ``N``.
    """

    d: int
    energy: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    alpha: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    # energy(x_new) - energy(x) without cancellation; optional
    energy_delta: Callable[[np.ndarray, np.ndarray], float] | None = None

    def __post_init__(self):
        if self.d < 2:
            raise ConstraintError("dimension must be at least 2")


def entropy_bits(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(-(x * np.log2(x)).sum())


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / ind > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def ratio(prob: PowerLawProblem, x) -> float:
    return prob.energy(x) / entropy_bits(x)


def ratio_grad(prob: PowerLawProblem, x):
    """``E/D`` and its gradient in the ambient coordinates."""
    e = prob.energy(x)
    dd = entropy_bits(x)
    ge = np.asarray(prob.grad(x), dtype=float)
    gd = -(np.log2(x) + LOG2E)
    return e / dd, (ge * dd - e * gd) / dd**2


def entropy_delta(x, xn) -> float:
    """``D(xn) - D(x)`` summed termwise without cancellation."""
    dx = xn - x
    terms = dx * np.log2(xn) + x * np.log1p(dx / x) / math.log(2)
    return float(-terms.sum())


def ratio_delta(prob: PowerLawProblem, x, xn, e=None, dd=None) -> float:
    """``E/D`` at ``xn`` minus ``E/D`` at ``x``."""
    e = prob.energy(x) if e is None else e
    dd = entropy_bits(x) if dd is None else dd
    if prob.energy_delta is not None:
        de = float(prob.energy_delta(x, xn))
    else:
        de = prob.energy(xn) - e
    ddel = entropy_delta(x, xn)
    return (de * dd - e * ddel) / (dd * (dd + ddel))


def _simplex_delta(prob, x, gx, cand, gc):
    """Ratio change between the exact simplex points nearest ``x`` and ``cand``.

    Floating iterates miss the hyperplane ``sum = 1`` by a few ulps; the
    normal component of the ambient gradient would turn that miss into a
    spurious ratio change, so it is removed to first order.
    """
    mx = math.fsum(x) - 1.0
    mc = math.fsum(cand) - 1.0
    return ratio_delta(prob, x, cand) - (gc.mean() * mc - gx.mean() * mx)


def _tangent_norm(g):
    return float(np.linalg.norm(g - g.mean()))


def _check_interior(x, d, floor):
    x = np.asarray(x, dtype=float)
    if x.shape != (d,):
        raise ProbabilityError(f"expected a vector of length {d}")
    if abs(x.sum() - 1.0) > 1e-9 or np.any(x <= floor):
        raise ProbabilityError("initial point must be strictly inside the simplex")
    return x / x.sum()


def _fd_hessian(prob, x):
    """Central differences of the ambient ratio gradient, symmetrized."""
    d = x.size
    h = np.empty((d, d))
    for k in range(d):
        hk = 1e-6 * x[k]
        xp, xm = x.copy(), x.copy()
        xp[k] += hk
        xm[k] -= hk
        h[:, k] = (ratio_grad(prob, xp)[1] - ratio_grad(prob, xm)[1]) / (2 * hk)
    return 0.5 * (h + h.T)


def _newton_step(prob, x, g):
    """Equality-constrained Newton direction, or None when not a descent direction."""
    d = x.size
    kkt = np.zeros((d + 1, d + 1))
    kkt[:d, :d] = _fd_hessian(prob, x)
    kkt[:d, d] = 1.0
    kkt[d, :d] = 1.0
    rhs = np.concatenate([-g, [0.0]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    dx = sol[:d]
    dx -= dx.mean()
    if not np.all(np.isfinite(dx)) or float(g @ dx) >= 0:
        return None
    return dx


NEWTON_GATE = 1e-2
NEWTON_MAX_DIM = 2000


def minimize_ratio(
    prob: PowerLawProblem,
    init=None,
    tol: float = 1e-8,
    max_iters: int = 100_000,
    floor: float = FLOOR,
    history: list | None = None,
) -> np.ndarray:
    """Projected gradient descent of ``E/D`` on the simplex.

    Steps start from a Barzilai-Borwein estimate and are halved until the
    projected point stays above ``floor`` and does not increase the ratio.
    Ratio changes are computed from termwise differences and corrected for
    the rounding drift of ``sum(x)``, so descent stays visible below the
    rounding level of the ratio itself. Once the tangential gradient is small
    (and ``d`` is moderate) a constrained Newton step with a finite-difference
    Hessian is tried first, which handles the badly conditioned interiors of
    steep energies. Stops once the tangential gradient norm falls below
    ``tol``. Accepted ratio values are appended to ``history``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = prob.d
    x = np.full(d, 1.0 / d) if init is None else _check_interior(init, d, floor)
    f, g = ratio_grad(prob, x)
    if history is not None:
        history.append(f)
    gn = _tangent_norm(g)
    step = 1e-2 / max(gn, 1e-12)
    noise = 64 * np.finfo(float).eps
    for _ in range(max_iters):
        gn = _tangent_norm(g)
        if gn < tol:
            return x
        accepted = False
        if gn < NEWTON_GATE and d <= NEWTON_MAX_DIM:
            dx = _newton_step(prob, x, g)
            if dx is not None:
                t = 1.0
                neg = dx < 0
                if np.any(neg):
                    # stay strictly inside: move at most 99% of the way to the floor
                    t = min(1.0, 0.99 * float(np.min((x[neg] - floor) / -dx[neg])))
                while t > 1e-10:
                    cand = x + t * dx
                    _, gc = ratio_grad(prob, cand)
                    df = _simplex_delta(prob, x, g, cand, gc)
                    if df <= 0 or (df <= noise * abs(f) and _tangent_norm(gc) < gn):
                        accepted = True
                        break
                    t *= 0.5
        if not accepted:
            t = step
            hit_floor = False
            while True:
                cand = project_simplex(x - t * g)
                if cand.min() < floor:
                    hit_floor = True
                else:
                    _, gc = ratio_grad(prob, cand)
                    df = _simplex_delta(prob, x, g, cand, gc)
                    if df <= 0:
                        break
                t *= 0.5
                if t < 1e-300 or not np.any(cand != x):
                    if hit_floor or x.min() < 1e3 * floor:
                        raise BoundaryCollapseError(
                            "iterates collapse onto the simplex boundary", best=x, grad_norm=gn
                        )
                    raise NonConvergenceError(
                        f"line search stalled at gradient norm {gn:.3e}", best=x, grad_norm=gn
                    )
        if df >= 0 and cand.min() < 1e3 * floor:
            # pinned against the floor with no further descent
            raise BoundaryCollapseError("iterates collapse onto the simplex boundary", best=cand, grad_norm=gn)
        s = cand - x
        yv = (gc - gc.mean()) - (g - g.mean())
        sy = float(s @ yv)
        if not accepted:
            step = float(s @ s) / sy if sy > 0 else 2.0 * t
            step = min(max(step, 1e-12), 1e12)
        x, f, g = cand, f + df, gc
        if history is not None:
            history.append(f)
    gn = _tangent_norm(g)
    if gn < tol:
        return x
    if x.min() < 1e3 * floor:
        raise BoundaryCollapseError("iterates collapse onto the simplex boundary", best=x, grad_norm=gn)
    raise NonConvergenceError(
        f"no convergence after {max_iters} iterations (gradient norm {gn:.3e})", best=x, grad_norm=gn
    )


@dataclass(frozen=True)
class HypothesisReport:
    grad_ok: np.ndarray  # ranks 2..d
    grad_slack: np.ndarray  # alpha_k log2 k - dE/dx_k, ranks 2..d
    grad_equal: np.ndarray
    N: float
    inv_q1: float
    normalization_ok: bool

    @property
    def ok(self) -> bool:
        return bool(np.all(self.grad_ok) and self.normalization_ok)

    def to_dict(self):
        return {
            "grad_ok": [bool(v) for v in self.grad_ok],
            "grad_equal": [bool(v) for v in self.grad_equal],
            "grad_slack": [float(v) for v in self.grad_slack],
            "N": self.N,
            "inv_q1": self.inv_q1,
            "normalization_ok": self.normalization_ok,
            "ok": self.ok,
        }


def _exponents(prob, y):
    k = np.arange(1, prob.d + 1, dtype=float)
    return k, np.asarray(prob.alpha(y), dtype=float) * (entropy_bits(y) / prob.energy(y))


def normalization(prob: PowerLawProblem, y) -> float:
    k, expo = _exponents(prob, y)
    with np.errstate(over="ignore"):
        return float(np.sum(k ** (-expo)))


def verify_hypotheses(prob: PowerLawProblem, y, rtol: float = 1e-9) -> HypothesisReport:
    """Evaluate the gradient bound (ranks >= 2) and the normalization chain at ``y``."""
    y = np.asarray(y, dtype=float)
    k = np.arange(1, prob.d + 1, dtype=float)
    grad = np.asarray(prob.grad(y), dtype=float)[1:]
    bound = np.asarray(prob.alpha(y), dtype=float)[1:] * np.log2(k[1:])
    scale = np.maximum(1.0, np.maximum(np.abs(grad), np.abs(bound)))
    slack = bound - grad
    grad_ok = slack >= -rtol * scale
    grad_equal = np.abs(slack) <= rtol * scale
    n = normalization(prob, y)
    inv_q1 = 1.0 / y[0]
    norm_ok = n >= inv_q1 * (1 - rtol) and inv_q1 >= math.e * (1 - rtol)
    return HypothesisReport(grad_ok, slack, grad_equal, n, inv_q1, bool(norm_ok))


def predicted_distribution(prob: PowerLawProblem, y, strict: bool = True) -> np.ndarray:
    """Rank law ``k ** (-alpha_k D/E) / N`` evaluated at ``y``.

    With ``strict`` the hypotheses are checked first and a failure raises
    :class:`HypothesisError`; otherwise the formula is evaluated regardless.
    """
    if strict:
        rep = verify_hypotheses(prob, y)
        if not rep.ok:
            raise HypothesisError(
                f"hypotheses fail at y: grad_ok={bool(np.all(rep.grad_ok))}, "
                f"N={rep.N:.6g}, 1/q1={rep.inv_q1:.6g}"
            )
    k, expo = _exponents(prob, y)
    w = k ** (-expo)
    return w / w.sum()


def stationarity_values(prob: PowerLawProblem, y) -> np.ndarray:
    """``log2 y_k + (D/E) dE/dx_k + log2 e`` for ranks 2..d.

    Constant in ``k`` at any interior stationary point of ``E/D`` on the simplex.
    """
    y = np.asarray(y, dtype=float)
    theta = entropy_bits(y) / prob.energy(y)
    grad = np.asarray(prob.grad(y), dtype=float)
    return (np.log2(y) + theta * grad + LOG2E)[1:]


def stationarity_spread(prob, y) -> float:
    v = stationarity_values(prob, y)
    return float(v.max() - v.min())


def fit_exponent(q):
    """Least-squares line through ``(log2 k, log2 q_k)``: (slope, intercept, r2)."""
    q = np.asarray(q, dtype=float)
    if q.size < 3:
        raise ValueError("need at least 3 ranks to fit an exponent")
    if np.any(q <= 0):
        raise ValueError("all probabilities must be positive")
    lx = np.log2(np.arange(1, q.size + 1))
    ly = np.log2(q)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - float((resid**2).sum()) / ss_tot
    return float(slope), float(intercept), float(r2)


# -- cost constructors -------------------------------------------------------

def _linear_problem(d, c, alpha, kind, params):
    c = np.asarray(c, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    c.setflags(write=False)
    alpha.setflags(write=False)
    return PowerLawProblem(
        d=d,
        energy=lambda x: float(c @ x),
        grad=lambda x: c.copy(),
        alpha=lambda x: alpha.copy(),
        kind=kind,
        params=dict(params, costs=c.tolist()),
        energy_delta=lambda x, xn: float(c @ (xn - x)),
    )


def make_cost(kind, d: int, **params) -> PowerLawProblem:
    """Energy ``E(x) = sum_k c_k(x) x_k`` for one of four rank-cost families.

    1 (``"inverse"``): ``c_k = a log2(k) / x_k**s``, ``alpha_k = a (1 - s) / x_k**s``.
    2 (``"mandelbrot"``): ``c_k = a log_b(k + k0) + j0``, ``alpha_k = a + j0``;
       needs ``b > 2`` and ``k0 <= b - 2``.
    3 (``"mandelbrot0"``): ``c_k = j0 + a log_b(k)``, ``alpha_k = a log_b(2) + j0``.
    4 (``"constant"``): ``c_k = gamma_k``, ``alpha_k = gamma_k / log2(k)``.
    """
    names = {"inverse": 1, "mandelbrot": 2, "mandelbrot0": 3, "constant": 4}
    kind = names.get(kind, kind)
    if d < 2:
        raise ConstraintError("dimension must be at least 2")
    k = np.arange(1, d + 1, dtype=float)
    log2k = np.log2(k)

    if kind == 1:
        a, s = float(params["a"]), float(params["s"])
        if a <= 0 or s <= 0:
            raise ConstraintError("inverse cost needs a > 0 and s > 0")
        return PowerLawProblem(
            d=d,
            energy=lambda x: float(a * np.sum(np.asarray(x) ** (1 - s) * log2k)),
            grad=lambda x: a * (1 - s) * np.asarray(x) ** (-s) * log2k,
            alpha=lambda x: a * (1 - s) / np.asarray(x) ** s,
            kind="inverse",
            params={"a": a, "s": s},
            energy_delta=lambda x, xn: float(
                a * np.sum(log2k * x ** (1 - s) * np.expm1((1 - s) * np.log1p((xn - x) / x)))
            ),
        )

    if kind == 2:
        a, b, k0, j0 = (float(params[n]) for n in ("a", "b", "k0", "j0"))
        if a <= 0 or j0 <= 0:
            raise ConstraintError("mandelbrot cost needs a > 0 and j0 > 0")
        if b <= 2:
            raise ConstraintError(f"mandelbrot cost needs b > 2, got {b}")
        if k0 > b - 2:
            raise ConstraintError(f"mandelbrot cost needs k0 <= b - 2, got k0={k0}, b={b}")
        if k0 <= -1:
            raise ConstraintError("mandelbrot cost needs k + k0 > 0 for every rank")
        c = a * np.log(k + k0) / math.log(b) + j0
        return _linear_problem(d, c, np.full(d, a + j0), "mandelbrot", {"a": a, "b": b, "k0": k0, "j0": j0})

    if kind == 3:
        a, b, j0 = (float(params[n]) for n in ("a", "b", "j0"))
        if a <= 0 or j0 <= 0:
            raise ConstraintError("mandelbrot0 cost needs a > 0 and j0 > 0")
        if b <= 2:
            raise ConstraintError(f"mandelbrot0 cost needs b > 2, got {b}")
        c = j0 + a * np.log(k) / math.log(b)
        alpha = a * math.log(2) / math.log(b) + j0
        return _linear_problem(d, c, np.full(d, alpha), "mandelbrot0", {"a": a, "b": b, "j0": j0})

    if kind == 4:
        gamma = np.asarray(params["gamma"], dtype=float)
        if gamma.shape != (d,):
            raise ConstraintError(f"constant cost needs {d} constant costs")
        if np.any(gamma[1:] <= 0) or gamma[0] < 0:
            raise ConstraintError("constant cost needs gamma_k > 0 for ranks k >= 2")
        alpha = np.zeros(d)
        alpha[1:] = gamma[1:] / log2k[1:]
        return _linear_problem(d, gamma, alpha, "constant", {"gamma": gamma.tolist()})

    raise ConstraintError(f"unknown cost kind {kind!r}")


def constant_problem(d: int, c: float = 1.0) -> PowerLawProblem:
    """Constant energy with zero exponents: the minimizer maximizes entropy."""
    return PowerLawProblem(
        d=d,
        energy=lambda x: float(c),
        grad=lambda x: np.zeros(d),
        alpha=lambda x: np.zeros(d),
        kind="constant-energy",
        params={"c": float(c)},
        energy_delta=lambda x, xn: 0.0,
    )


@dataclass(frozen=True)
class PowerLawSolution:
    y: np.ndarray
    entropy_at_y: float
    energy_at_y: float
    normalization: float
    predicted: np.ndarray
    residual: float
    hypotheses: HypothesisReport
    stationarity_spread: float
    fit: tuple | None

    def to_dict(self):
        return {
            "y": [float(v) for v in self.y],
            "predicted": [float(v) for v in self.predicted],
            "residual": self.residual,
            "N": self.normalization,
            "entropy": self.entropy_at_y,
            "energy": self.energy_at_y,
            "stationarity_spread": self.stationarity_spread,
            "hypotheses": self.hypotheses.to_dict(),
            "fit": None
            if self.fit is None
            else dict(zip(("slope", "intercept", "r2"), self.fit)),
        }


def solve(prob: PowerLawProblem, init=None, tol=1e-8, max_iters=100_000) -> PowerLawSolution:
    """Minimize, check hypotheses and compare against the rank law.

    The prediction is evaluated even when hypotheses fail so that reports can
    show how far off it is; ``hypotheses.ok`` tells whether it is licensed.
    """
    y = minimize_ratio(prob, init, tol=tol, max_iters=max_iters)
    rep = verify_hypotheses(prob, y)
    pred = predicted_distribution(prob, y, strict=False)
    fit = fit_exponent(y) if prob.d >= 3 else None
    return PowerLawSolution(
        y=y,
        entropy_at_y=shannon_entropy(y),
        energy_at_y=float(prob.energy(y)),
        normalization=rep.N,
        predicted=pred,
        residual=float(np.max(np.abs(y - pred))),
        hypotheses=rep,
        stationarity_spread=stationarity_spread(prob, y),
        fit=fit,
    )
