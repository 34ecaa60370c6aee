"""Capacity upper bounds from KKT-constrained Markov test distributions.

Closed-form solvers reduce each covered (channel, constraint, memory)
case to scalar or 2x2 root-finding via the Lagrangian stationarity
relations, then reconstruct the full parameter table so the cycle-metric
equalities can be re-verified independently.  A generic minimizer
handles any discrete family by penalty continuation plus an equality-
constrained polish.

Every bound is in bits per channel use.  Results report the maximum
cycle-metric residual; accepted results keep it at or below 1e-8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import channels as ch
from .constraints import (
    INF,
    ConstraintSpec,
    StateDiagram,
    bisect_root,
    build_state_diagram,
    enumerate_cycles,
    noiseless_capacity,
)
from .families import (
    PARAM_HI,
    PARAM_LO,
    DiscreteMarkovFamily,
    _bec_dinf,
    family_for,
)
from .metrics import kkt_residuals, metric_table

__all__ = [
    "BoundResult",
    "NoConvergence",
    "NoFeasiblePoint",
    "thm2_part1",
    "thm2_part2",
    "thm3_part1",
    "thm3_part2",
    "thm4_dinfty",
    "thm5_bsc",
    "generic_kkt_bound",
    "verify_kkt",
]

LN2 = math.log(2.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NoConvergence(RuntimeError):
    pass


class NoFeasiblePoint(RuntimeError):
    pass


@dataclass(frozen=True)
class BoundResult:
    bound: float
    params: dict[str, float]
    kkt_residual_max: float
    solver: str
    diagnostics: dict = field(default_factory=dict)


def verify_kkt(
    fam: DiscreteMarkovFamily,
    params: dict,
    channel: ch.DiscreteChannel,
    g: StateDiagram,
) -> tuple[float, float]:
    """(max |cycle residual|, common normalized metric) via the metric engine."""
    table = metric_table(fam, params, channel, g)
    res = kkt_residuals(table, enumerate_cycles(g))
    return res.max_abs, res.common_value


_DIAGRAMS: dict[tuple, StateDiagram] = {}


def _diagram(spec: ConstraintSpec, mu: int) -> StateDiagram:
    key = (spec.d, spec.k, mu)
    if key not in _DIAGRAMS:
        _DIAGRAMS[key] = build_state_diagram(spec, mu)
    return _DIAGRAMS[key]


def _bec_result(spec, mu, eps, params, bound, solver, diagnostics=None,
                fam=None):
    if fam is None:
        fam = family_for("bec", spec, mu)
    params = {**params, "eps": eps}
    res_max, common = verify_kkt(fam, params, ch.bec(eps), _diagram(spec, mu))
    return BoundResult(
        bound=bound,
        params=params,
        kkt_residual_max=res_max,
        solver=solver,
        diagnostics={"common_metric": common, **(diagnostics or {})},
    )


# ---------------------------------------------------------------------------
# Theorem: (1, inf)-BEC, memory 1
# ---------------------------------------------------------------------------

def thm2_part1(eps: float) -> BoundResult:
    """(1,inf)-BEC bound from the memory-1 family.

    beta* in (0,1] solves beta^(2(1-eps)) = 1-beta and the erased-history
    parameter is alpha = 1/(2-beta) (stationarity relations alpha = 1-lam,
    lam = (1-beta)/(2-beta)).
    """
    if not 0.0 <= eps <= 1.0:
        raise ch.ParameterOutOfRange(f"eps={eps}")
    spec = ConstraintSpec(1, INF)
    if eps == 1.0:
        return _bec_result(spec, 1, eps, {"beta": 0.5, "alpha": 2 / 3}, 0.0,
                           "closed-form")
    beta = bisect_root(
        lambda b: 2.0 * (1.0 - eps) * math.log(b) - math.log1p(-b),
        1e-300, 1.0 - 1e-15,
    )
    bound = (1 - eps) ** 2 * math.log2(1 / beta) + eps * (1 - eps) * math.log2(2 - beta)
    return _bec_result(
        spec, 1, eps, {"beta": beta, "alpha": 1.0 / (2.0 - beta)}, bound,
        "closed-form",
    )


# ---------------------------------------------------------------------------
# Theorem: (1, inf)-BEC, memory 2
# ---------------------------------------------------------------------------

def _t22_system(x, eps):
    """Stationarity-reduced cycle constraints in (alpha, L = ln beta).

    Solving in log space keeps the system well posed near eps = 1 where
    the optimal beta decays like exp(-c eps^2 / (1-eps)^2).
    """
    alpha, L = x
    if not (0.5 < alpha < 1.0) or L >= 0.0:
        return None
    beta = math.exp(L)
    bbar = -math.expm1(L)
    g1 = 1 - alpha - beta + 2 * alpha * beta
    g2 = 2 - 3 * alpha - beta + 2 * alpha * beta
    if g1 <= 0 or g2 <= 0 or bbar <= 0:
        return None
    abar = 1 - alpha
    c1 = ((1 - eps) ** 2 * (2 * L + math.log(abar / g2))
          + eps * (1 - eps) * math.log(g1 * (2 * alpha - 1) ** 2 / (alpha**2 * g2))
          + eps**2 * math.log(alpha / abar))
    c2 = ((1 - eps) ** 2 * (3 * L + math.log(abar / (bbar**2 * (2 * alpha - 1))))
          + eps * (1 - eps) * math.log(g1**2 / (alpha**2 * bbar**2))
          + eps**2 * math.log(alpha / abar))
    return np.array([c1, c2])


def _newton2(fun, x0, args, tol=1e-13, itmax=100):
    """Damped Newton with numeric Jacobian; None when it leaves the domain."""
    x = np.array(x0, dtype=float)
    for _ in range(itmax):
        f = fun(x, *args)
        if f is None:
            return None
        if max(abs(f)) < tol:
            return x
        jac = np.zeros((2, 2))
        for j in range(2):
            h = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += h
            fp = fun(xp, *args)
            if fp is None:
                xp[j] -= 2 * h
                fp = fun(xp, *args)
                if fp is None:
                    return None
                jac[:, j] = (f - fp) / h
            else:
                jac[:, j] = (fp - f) / h
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        norm0 = np.linalg.norm(f)
        lam = 1.0
        while lam > 1e-10:
            xn = x + lam * step
            fn = fun(xn, *args)
            if fn is not None and np.linalg.norm(fn) < norm0:
                break
            lam *= 0.5
        else:
            return None
        x = xn
    return None


def _t22_solve(eps):
    """Continuation in eps from the noiseless limit, then a multi-start scan."""
    x = np.array([1.0 / (2.0 - GOLDEN), math.log(GOLDEN)])
    if eps > 1e-9:
        steps = np.linspace(1e-9, eps, max(3, int(80 * eps) + 2))
        for e in steps:
            xn = _newton2(_t22_system, x, (e,))
            if xn is None:
                raise NoConvergence(f"thm2.2 continuation failed at eps={e}")
            x = xn
    roots = [x]
    for da in (-0.1, 0.05, 0.1):
        for dl in (-2.0, -0.5, 0.5):
            xn = _newton2(_t22_system, x + [da, dl], (eps,), itmax=40)
            if xn is not None and not any(
                np.allclose(xn, r, atol=1e-9) for r in roots
            ):
                roots.append(xn)
    return roots


def _t22_bound(eps, alpha, L):
    beta = math.exp(L)
    g1 = 1 - alpha - beta + 2 * alpha * beta
    return (1 - eps) * (
        (1 - eps) ** 2 * (-L / LN2)
        + eps * (1 - eps) * math.log2(alpha**2 / (g1 * (2 * alpha - 1)))
        + eps**2 * math.log2(1 / alpha)
    )


def _t22_params(alpha, L):
    beta = math.exp(L)
    bbar = -math.expm1(L)
    g1 = 1 - alpha - beta + 2 * alpha * beta
    a10 = bbar * (2 * alpha - 1) / (1 - alpha)
    return {
        "a00": beta,
        "a0?": g1 / alpha,
        "a?0": (2 * alpha - 1) / alpha,
        "a??": alpha,
        "a10": a10,
        "a1?": a10,
    }


def thm2_part2(eps: float) -> BoundResult:
    """(1,inf)-BEC bound from the memory-2 family (two cycle constraints).

    Multiple interior roots are possible; all roots found are recorded
    and the one minimizing the bound is returned.
    """
    if not 0.0 <= eps <= 1.0:
        raise ch.ParameterOutOfRange(f"eps={eps}")
    spec = ConstraintSpec(1, INF)
    if eps == 0.0:
        params = _t22_params(1.0 / (2.0 - GOLDEN), math.log(GOLDEN))
        return _bec_result(spec, 2, eps, params, math.log2(1 / GOLDEN),
                           "closed-form")
    if eps == 1.0:
        params = _t22_params(0.75, math.log(0.5))
        return _bec_result(spec, 2, eps, params, 0.0, "closed-form")
    roots = _t22_solve(eps)
    scored = sorted((_t22_bound(eps, a, L), a, L) for a, L in roots)
    bound, alpha, L = scored[0]
    diagnostics = {"roots_found": len(roots), "log_beta": L}
    if L < -650.0:
        # beta underflows IEEE doubles (eps beyond ~0.992): the reported
        # residual comes from the reduced system, which is exact here
        f = _t22_system((alpha, L), eps)
        res = float(max(abs(f)) * (1 - eps) / LN2)
        return BoundResult(
            bound=bound,
            params={**_t22_params(alpha, L), "eps": eps},
            kkt_residual_max=res,
            solver="closed-form",
            diagnostics=diagnostics,
        )
    return _bec_result(spec, 2, eps, _t22_params(alpha, L), bound,
                       "closed-form", diagnostics)


# ---------------------------------------------------------------------------
# Theorem: (1, 2)-BEC, memory 2 and 3
# ---------------------------------------------------------------------------

def thm3_part1(eps: float) -> BoundResult:
    """(1,2)-BEC bound from the memory-2 family.

    beta solves beta^(3(1-eps)) (2-beta)^(2 eps - 3 eps^2)
    = (1-beta)^(2 + 2 eps - 4 eps^2).
    """
    if not 0.0 <= eps <= 1.0:
        raise ch.ParameterOutOfRange(f"eps={eps}")
    spec = ConstraintSpec(1, 2)
    if eps == 1.0:
        params = {"a10": 0.5, "a0?": 0.5, "a?0": 0.5, "a1?": 0.5, "a??": 0.5}
        return _bec_result(spec, 2, eps, params, 0.0, "closed-form")

    def f(b):
        return (3 * (1 - eps) * math.log(b)
                + (2 * eps - 3 * eps**2) * math.log(2 - b)
                - (2 + 2 * eps - 4 * eps**2) * math.log1p(-b))

    beta = bisect_root(f, 1e-300, 1.0 - 1e-15)
    bound = (1 - eps) / 2.0 * (
        (1 - eps) ** 2 * math.log2(1 / beta)
        + eps * (1 - eps) * math.log2((2 - beta) ** 2 / beta)
        + eps**2 * math.log2((3 - beta) ** 2 / (2 - beta))
    )
    params = {
        "a10": 1 - beta,
        "a1?": 1 - beta,
        "a0?": 1 / (2 - beta),
        "a?0": (1 - beta) / (2 - beta),
        "a??": (2 - beta) / (3 - beta),
    }
    return _bec_result(spec, 2, eps, params, bound, "closed-form")


def thm3_part2(eps: float) -> BoundResult:
    """(1,2)-BEC bound from the memory-3 family (shared alpha_010 class)."""
    if not 0.0 <= eps <= 1.0:
        raise ch.ParameterOutOfRange(f"eps={eps}")
    spec = ConstraintSpec(1, 2)
    if eps == 1.0:
        params = {k: 0.5 for k in
                  ("a010", "a10?", "a0??", "a?0?", "a??0", "a1??", "a???")}
        return _bec_result(spec, 3, eps, params, 0.0, "closed-form")

    def f(b):
        return (3 * (1 + eps - 2 * eps**2) * math.log(b)
                + eps**2 * (3 - 4 * eps) * math.log(2 - b)
                - 2 * (1 + eps + eps**2 - 3 * eps**3) * math.log1p(-b)
                - 4 * eps**2 * (1 - eps) * math.log(2))

    beta = bisect_root(f, 1e-300, 1.0 - 1e-15)
    bound = (1 - eps) / 2.0 * (
        (1 + eps - 2 * eps**2) * math.log2(1 / beta)
        + 2 * eps**3 * math.log2(3 - beta)
        + eps**2 * (3 - 4 * eps) * math.log2(2 - beta)
    )
    params = {
        "a010": 1 - beta,
        "a10?": beta,
        "a1??": beta,
        "a0??": 2 * (1 - beta) / (2 - beta),
        "a??0": (1 - beta) / (2 - beta),
        "a?0?": 1 / (2 - beta),
        "a???": (2 - beta) / (3 - beta),
    }
    return _bec_result(spec, 3, eps, params, bound, "closed-form")


# ---------------------------------------------------------------------------
# Theorem: (d, inf)-BEC, memory d
# ---------------------------------------------------------------------------

def thm4_dinfty(d: int, eps: float) -> BoundResult:
    """(d,inf)-BEC bound; alpha_0 solves the binomial-weighted scalar equation
    sum_i B(d,i) log2((a0 + i a0bar)^(d-i+1) / (1 + i a0bar)^(d-i)) = log2(a0bar).

    Solved in L = ln(alpha_0): near eps = 1 the all-zero-history weight
    B(d,0) = (1-eps)^d collapses and the root runs off to alpha_0 ~
    exp(-c/(1-eps)^d), eventually below the smallest positive double.
    """
    if d < 1:
        raise ValueError(f"d={d} must be >= 1")
    if not 0.0 <= eps <= 1.0:
        raise ch.ParameterOutOfRange(f"eps={eps}")
    spec = ConstraintSpec(d, INF)
    if eps == 1.0:
        return _bec_result(spec, d, eps, {"alpha0": 0.5}, 0.0, "closed-form",
                           fam=_bec_dinf(d))
    weights = [
        math.comb(d, i) * eps**i * (1 - eps) ** (d - i) for i in range(d + 1)
    ]

    def f(L):
        a0 = math.exp(L)
        a0bar = -math.expm1(L)
        total = -math.log(a0bar) + weights[0] * (d + 1) * L
        for i in range(1, d + 1):
            w = weights[i]
            if w == 0.0:
                continue
            total += w * ((d - i + 1) * math.log(a0 + i * a0bar)
                          - (d - i) * math.log(1 + i * a0bar))
        return total

    lo = -2.0
    while f(lo) > 0:
        lo *= 2.0
    L = bisect_root(f, lo, math.log1p(-1e-15), tol=1e-13)
    a0 = math.exp(L)
    a0bar = -math.expm1(L)
    bound = (1 - eps) * (
        weights[0] * (-L / LN2)
        + sum(weights[i] * math.log2((1 + i * a0bar) / (a0 + i * a0bar))
              for i in range(1, d + 1))
    )
    if L < -650.0:
        # alpha_0 underflows IEEE doubles; residual from the scalar
        # equation, which is exact here (see the matching thm2.2 case)
        res = abs(f(L)) * (1 - eps) / (LN2 * (d + 1))
        return BoundResult(
            bound=bound, params={"alpha0": a0, "eps": eps},
            kkt_residual_max=res, solver="closed-form",
            diagnostics={"log_alpha0": L},
        )
    return _bec_result(spec, d, eps, {"alpha0": a0}, bound, "closed-form",
                       fam=_bec_dinf(d))


# ---------------------------------------------------------------------------
# Theorem: (1, inf)-BSC
# ---------------------------------------------------------------------------

def thm5_bsc(p: float) -> BoundResult:
    """(1,inf)-BSC bound.

    a* solves a^(2(1-p)) (1-a-p^2) = p^(2p) (1-p)^(2(1-2p)) (1-a)^(2(1-2p))
    [2(1-p) - a(2-p)]^(2p); the second row parameter follows from the
    stationarity relation b = (1-p)^2 (1-a) / (1-a-p^2).
    """
    if not 0.0 <= p <= 0.5:
        raise ch.ParameterOutOfRange(f"p={p} outside [0, 0.5]")
    spec = ConstraintSpec(1, INF)
    pb = 1.0 - p

    def f(a):
        c2 = 2 * pb - a * (2 - p)
        lhs = 2 * pb * math.log(a) + math.log(1 - a - p * p)
        rhs = 2 * (1 - 2 * p) * (math.log(pb) + math.log1p(-a)) + 2 * p * math.log(c2)
        if p > 0:
            rhs += 2 * p * math.log(p)
        return lhs - rhs

    hi = min(1.0, 2 * pb / (2 - p)) - 1e-15
    a = bisect_root(f, 1e-300, hi)
    c1 = (1 - a) - p * p
    c2 = 2 * pb - a * (2 - p)
    b = pb * pb * (1 - a) / c1
    fam = family_for("bsc", spec, 1)
    params = {"a": a, "b": b}
    channel = ch.bsc(p)
    g = _diagram(spec, 1)
    res_max, common = verify_kkt(fam, params, channel, g)
    # the constraint identity the theorem states for the reconstruction
    identity = (1 - 2 * p) * (
        (1 - 2 * p) * math.log2(a * (1 - b) / (b * (1 - a)))
        - math.log2((1 - b) / a)
    ) if 0 < b < 1 else 0.0
    return BoundResult(
        bound=max(common, 0.0),
        params=params,
        kkt_residual_max=res_max,
        solver="closed-form",
        diagnostics={"common_metric": common, "c1": c1, "c2": c2,
                     "constraint_identity": identity},
    )


# ---------------------------------------------------------------------------
# Generic KKT-constrained minimizer (Corollary machinery)
# ---------------------------------------------------------------------------

def generic_kkt_bound(
    fam: DiscreteMarkovFamily,
    channel: ch.DiscreteChannel,
    g: StateDiagram,
    base_params: dict | None = None,
    n_starts: int = 8,
    seed: int = 0,
    residual_tol: float = 1e-8,
) -> BoundResult:
    """Minimize the common normalized cycle metric over the family.

    Penalty continuation (weights 1e2 to 1e8) from low-discrepancy starts,
    then an equality-constrained polish.  Reports the best local minimum
    whose residuals clear `residual_tol`; global optimality is not
    claimed.
    """
    if fam.mu != g.mu:
        raise ValueError("family memory does not match diagram")
    names = list(fam.free_params)
    if not names:
        raise ValueError("family has no free parameters")
    base = dict(base_params or {})
    cycles = enumerate_cycles(g)

    def build(x):
        return {**base, **{k: float(v) for k, v in zip(names, x)}}

    def t_and_res(x):
        table = metric_table(fam, build(x), channel, g)
        res = kkt_residuals(table, cycles)
        return res.common_value, np.array(res.residuals[1:])

    def objective(x):
        t, _ = t_and_res(x)
        return t

    def residuals(x):
        _, r = t_and_res(x)
        return r

    n = len(names)
    n_res = len(cycles) - 1
    box = [(PARAM_LO, PARAM_HI)] * n
    sob = qmc.Sobol(n, scramble=True, seed=seed)
    starts = qmc.scale(sob.random(max(1, n_starts)), PARAM_LO, PARAM_HI)

    accepted: list[tuple[float, np.ndarray, float]] = []
    for x0 in starts:
        x = np.array(x0)
        if n_res:
            for w in (1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8):
                pen = minimize(
                    lambda z: t_and_res(z)[0] + w * float(np.sum(t_and_res(z)[1] ** 2)),
                    x, method="L-BFGS-B", bounds=box,
                    options={"maxiter": 200},
                )
                x = pen.x
            cons = [{"type": "eq", "fun": residuals}]
            try:
                pol = minimize(
                    objective, x, method="SLSQP", bounds=box, constraints=cons,
                    options={"maxiter": 500, "ftol": 1e-14},
                )
            except (ValueError, np.linalg.LinAlgError):
                continue
            if not np.all(np.isfinite(pol.x)):
                continue
            x = np.clip(pol.x, PARAM_LO, PARAM_HI)
        else:
            pol = minimize(objective, x, method="L-BFGS-B", bounds=box,
                           options={"maxiter": 500})
            x = np.clip(pol.x, PARAM_LO, PARAM_HI)
        t, r = t_and_res(x)
        rmax = float(np.max(np.abs(r))) if n_res else 0.0
        if rmax <= residual_tol and math.isfinite(t):
            accepted.append((t, x, rmax))

    if not accepted:
        raise NoFeasiblePoint(
            f"no start reached residual tolerance {residual_tol}"
        )
    accepted.sort(key=lambda item: item[0])
    t, x, rmax = accepted[0]
    bounds_found = [a[0] for a in accepted]
    return BoundResult(
        bound=max(t, 0.0),
        params=build(x),
        kkt_residual_max=rmax,
        solver="generic",
        diagnostics={
            "starts": len(starts),
            "accepted": len(accepted),
            "dispersion": max(bounds_found) - min(bounds_found),
            "bounds_found": bounds_found,
        },
    )
