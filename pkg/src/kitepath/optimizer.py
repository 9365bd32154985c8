"""Per-tether-length path planning as a small dense NLP.

Decision vector ``x = (beta0, dbeta, dphi)`` in radians.  The average
optimal traction power along the Lissajous path is maximized subject to

* geodesic curvature below ``kappa_max`` at every grid sample,
* the path top below ``beta_max`` and its bottom above ``beta_min``,
* box bounds on the three parameters,
* optionally, caps on the tether force and power at every grid sample.

The SQP iterations are delegated to SLSQP; derivatives come from central
finite differences, and convergence is certified here by an explicit KKT
check (nonnegative multipliers on the active set) rather than by the
solver's own exit flag.  Each SLSQP run is confined to a box around the
current point: far from the turning limit the linearized curvature rows
badly underestimate how fast curvature grows as the ranges shrink, and an
unconfined quasi-Newton step can land deep in the infeasible region.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import Bounds, minimize, nnls

from .errors import InconsistentBounds, NoConvergedSolution, NoFeasibleElevation
from .geometry import LissajousPath, lissajous_profile, uniform_grid
from .model import Environment, KiteParams, loyd_power, optimal_tether_force, profile_power

log = logging.getLogger(__name__)

DELTA_MIN = math.radians(0.5)
STATIONARITY_TOL = 1e-6
FEASIBILITY_TOL = 1e-6
ACTIVE_TOL = 1e-5
MAX_ITERATIONS = 200
FD_REL_STEP = 1e-6
# half-width (rad) of the box each SLSQP run may move in, and its floor
TRUST_RADIUS = 0.25
MIN_RADIUS = 1e-7

VARIABLES = ("beta0", "dbeta", "dphi")


def kappa_limit(phi_max: float, kite: KiteParams, env: Environment) -> float:
    """Largest geodesic curvature flyable with roll angles up to ``phi_max``."""
    return env.air_density * kite.area * kite.c_lift * math.sin(phi_max) / (2.0 * kite.mass)


def beta_limits(r: float, h_min: float, h_max: float) -> tuple:
    """Elevation band keeping the kite between the altitudes ``h_min`` and ``h_max``."""
    if not (r > 0 and 0 < h_min < h_max):
        raise ValueError("need r > 0 and 0 < h_min < h_max")
    if h_min >= r:
        raise NoFeasibleElevation(f"tether length {r:g} m cannot reach the minimum altitude {h_min:g} m")
    return math.asin(h_min / r), math.asin(min(h_max / r, 1.0))


@dataclass(frozen=True)
class PlanProblem:
    r: float
    env: Environment
    kite: KiteParams
    kappa_max: float
    beta_min: float
    beta_max: float
    lower: tuple
    upper: tuple
    shape_ratio: tuple = (1, 1)
    grid_n: int = 360
    f_tether_max: Optional[float] = None
    p_rated: Optional[float] = None

    def __post_init__(self):
        if not self.kappa_max > 0:
            raise ValueError("kappa_max must be positive")
        if not self.beta_min < self.beta_max:
            raise ValueError("beta_min must be below beta_max")
        if not (self.lower[1] > 0 and self.lower[2] > 0):
            raise ValueError("lower bounds of dbeta and dphi must be strictly positive")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise InconsistentBounds("box lower bound exceeds upper bound")
        if self.grid_n < 8:
            raise ValueError("grid_n must be at least 8")

    @property
    def ratio(self) -> float:
        return self.shape_ratio[0] / self.shape_ratio[1]

    @property
    def period(self) -> float:
        nb, nphi = self.shape_ratio
        return 2 * math.pi * (nphi // math.gcd(nb, nphi))

    @property
    def p_loyd(self) -> float:
        return loyd_power(self.env, self.kite)

    def with_grid(self, grid_n: int) -> "PlanProblem":
        return replace(self, grid_n=grid_n)


def build_problem(r: float, config) -> PlanProblem:
    """Assemble the NLP for tether length ``r`` from a :class:`~kitepath.config.RunConfig`."""
    kite, env, cons = config.kite, config.environment, config.constraints
    beta_min, beta_max = beta_limits(r, cons.h_min, cons.h_max)
    lower = [beta_min, DELTA_MIN, DELTA_MIN]
    upper = [math.pi / 2, math.pi / 4, math.pi / 2]
    for i, name in enumerate(("beta0_deg", "dbeta_deg", "dphi_deg")):
        override = getattr(config.bounds, name)
        if override is not None:
            lower[i], upper[i] = math.radians(override[0]), math.radians(override[1])
    # beta0 must fit both the box and the band [beta_min + dbeta, beta_max - dbeta]
    if max(lower[0], beta_min + lower[1]) > min(upper[0], beta_max - lower[1]):
        raise InconsistentBounds(
            f"no beta0 satisfies the elevation band [{beta_min:.6g}, {beta_max:.6g}] "
            f"with dbeta >= {lower[1]:.6g}"
        )
    return PlanProblem(
        r=float(r),
        env=env,
        kite=kite,
        kappa_max=kappa_limit(config.phi_max, kite, env),
        beta_min=beta_min,
        beta_max=beta_max,
        lower=tuple(lower),
        upper=tuple(upper),
        shape_ratio=tuple(config.shape_ratio),
        grid_n=config.grid_n,
        f_tether_max=cons.f_tether_max,
        p_rated=cons.p_rated,
    )


@dataclass
class Evaluation:
    objective: float
    constraints: np.ndarray
    labels: list
    kappa_geo: np.ndarray = field(repr=False)

    @property
    def max_violation(self) -> float:
        return float(max(0.0, self.constraints.max())) if self.constraints.size else 0.0


def constraint_labels(problem: PlanProblem) -> list:
    labels = []
    if math.isfinite(problem.kappa_max):
        labels += [f"curvature[{i}]" for i in range(problem.grid_n)]
    labels += ["max_elevation", "min_elevation"]
    if problem.f_tether_max is not None:
        labels += [f"tether_force[{i}]" for i in range(problem.grid_n)]
    if problem.p_rated is not None:
        labels += [f"rated_power[{i}]" for i in range(problem.grid_n)]
    return labels


def evaluate(problem: PlanProblem, x) -> Evaluation:
    """Objective (W) and constraint values ``g <= 0`` in natural units.

    Curvature rows are in 1/m, elevation rows in rad, force in N, power in W.
    Iterates violating the curvature cap saturate the roll angle instead of
    raising, so the values stay finite anywhere near the box.
    """
    beta0, dbeta, dphi = (float(v) for v in x)
    s = uniform_grid(problem.grid_n, problem.period)
    prof = lissajous_profile(beta0, dbeta, dphi, problem.ratio, problem.r, s, strict=False)
    power, phi_roll = profile_power(prof, problem.env, problem.kite, clamp=True)
    rows = []
    if math.isfinite(problem.kappa_max):
        rows.append(prof.kappa_geo - problem.kappa_max)
    rows.append([beta0 + dbeta - problem.beta_max, problem.beta_min - (beta0 - dbeta)])
    if problem.f_tether_max is not None:
        force = optimal_tether_force(prof.beta, prof.phi_az, phi_roll, problem.env, problem.kite)
        rows.append(force - problem.f_tether_max)
    if problem.p_rated is not None:
        rows.append(power - problem.p_rated)
    return Evaluation(float(np.mean(power)), np.concatenate(rows), constraint_labels(problem), prof.kappa_geo)


def _row_scales(problem: PlanProblem) -> np.ndarray:
    scales = []
    if math.isfinite(problem.kappa_max):
        scales += [problem.kappa_max] * problem.grid_n
    scales += [1.0, 1.0]
    if problem.f_tether_max is not None:
        scales += [problem.f_tether_max] * problem.grid_n
    if problem.p_rated is not None:
        scales += [problem.p_rated] * problem.grid_n
    return np.array(scales)


def fd_jacobian(fun, x, rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Central-difference Jacobian of a scalar- or vector-valued ``fun``.

    The step for coordinate j is ``rel_step * max(1, |x_j|)``.  Returns an
    array of shape ``(m, n)``, or ``(n,)`` for scalar ``fun``.
    """
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = rel_step * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2 * h))
    return np.stack(cols, axis=-1)


class _ScaledNLP:
    """Scaled form handed to SLSQP: minimize f(x) s.t. c(x) >= 0.

    ``f = -P_avg / P_loyd`` and every row of ``c`` is normalized by its
    natural scale.  Function values and Jacobians are cached per point
    since SLSQP queries objective and constraints separately.
    """

    def __init__(self, problem: PlanProblem):
        self.problem = problem
        self.p_loyd = problem.p_loyd
        self.scales = _row_scales(problem)
        self._values = {}
        self._jacs = {}

    def values(self, x) -> np.ndarray:
        key = np.asarray(x, dtype=float).tobytes()
        out = self._values.get(key)
        if out is None:
            ev = evaluate(self.problem, x)
            out = np.concatenate([[-ev.objective / self.p_loyd], -ev.constraints / self.scales])
            if len(self._values) > 4096:
                self._values.clear()
            self._values[key] = out
        return out

    def jacobian(self, x) -> np.ndarray:
        key = np.asarray(x, dtype=float).tobytes()
        out = self._jacs.get(key)
        if out is None:
            out = fd_jacobian(self.values, x)
            if len(self._jacs) > 1024:
                self._jacs.clear()
            self._jacs[key] = out
        return out

    def f(self, x):
        return float(self.values(x)[0])

    def grad(self, x):
        return self.jacobian(x)[0]

    def c(self, x):
        return self.values(x)[1:]

    def cjac(self, x):
        return self.jacobian(x)[1:]


def objective_gradient(problem: PlanProblem, x) -> np.ndarray:
    """Gradient of the average power (W/rad) as used by the solver."""
    return -problem.p_loyd * _ScaledNLP(problem).grad(np.asarray(x, dtype=float))


@dataclass
class PlanSolution:
    r: float
    shape_ratio: tuple
    x: np.ndarray
    p_avg: float
    p_loyd: float
    max_kappa_on_grid: float
    active_constraints: frozenset
    iterations: int
    converged: bool
    status: str = ""
    max_violation: float = 0.0
    stationarity: float = math.inf

    @property
    def loyd_ratio(self) -> float:
        return self.p_avg / self.p_loyd

    @property
    def path(self) -> LissajousPath:
        return LissajousPath.from_vector(self.x, self.shape_ratio)


def _bound_violation(problem: PlanProblem, x) -> float:
    lo, hi = np.array(problem.lower), np.array(problem.upper)
    return float(max(0.0, np.max(lo - x), np.max(x - hi)))


def active_set(problem: PlanProblem, x, ev: Optional[Evaluation] = None, tol: float = ACTIVE_TOL) -> frozenset:
    ev = ev or evaluate(problem, x)
    labels = set()
    for label, g in zip(ev.labels, ev.constraints):
        if g >= -tol:
            labels.add(label.split("[")[0])
    for name, xi, lo, hi in zip(VARIABLES, x, problem.lower, problem.upper):
        if xi - lo <= tol:
            labels.add(f"{name}_lower")
        if hi - xi <= tol:
            labels.add(f"{name}_upper")
    return frozenset(labels)


def kkt_residual(problem: PlanProblem, x, nlp: Optional[_ScaledNLP] = None, tol: float = ACTIVE_TOL) -> float:
    """Scaled first-order stationarity residual at ``x``.

    Multipliers of the constraints active within ``tol`` are fitted by
    nonnegative least squares; the residual is the infinity norm of the
    unexplained objective gradient over ``max(1, |grad f|)``.
    """
    nlp = nlp or _ScaledNLP(problem)
    x = np.asarray(x, dtype=float)
    gf = nlp.grad(x)
    c, jc = nlp.c(x), nlp.cjac(x)
    cols = [jc[i] for i in np.flatnonzero(c <= tol)]
    for j in range(x.size):
        if x[j] - problem.lower[j] <= tol:
            cols.append(np.eye(x.size)[j])
        if problem.upper[j] - x[j] <= tol:
            cols.append(-np.eye(x.size)[j])
    if cols:
        a = np.stack(cols, axis=1)
        mu, _ = nnls(a, gf)
        resid = gf - a @ mu
    else:
        resid = gf
    return float(np.max(np.abs(resid)) / max(1.0, np.max(np.abs(gf))))


def _slsqp(nlp: _ScaledNLP, x0, maxiter, lower, upper):
    with warnings.catch_warnings():
        # SLSQP probes slightly outside the box and clips; harmless here
        warnings.filterwarnings("ignore", "Values in x were outside bounds", RuntimeWarning)
        return minimize(
            nlp.f,
            x0,
            jac=nlp.grad,
            method="SLSQP",
            bounds=Bounds(lower, upper),
            constraints=[{"type": "ineq", "fun": nlp.c, "jac": nlp.cjac}],
            options={"maxiter": maxiter, "ftol": 1e-14},
        )


def _restore(nlp: _ScaledNLP, x0):
    """Move toward the feasible set by minimizing the squared scaled violation."""
    p = nlp.problem

    def phi(x):
        v = np.minimum(nlp.c(x), 0.0)
        return 0.5 * float(v @ v)

    def dphi(x):
        v = np.minimum(nlp.c(x), 0.0)
        return nlp.cjac(x).T @ v

    res = minimize(phi, x0, jac=dphi, method="L-BFGS-B", bounds=Bounds(p.lower, p.upper),
                   options={"maxiter": MAX_ITERATIONS, "ftol": 1e-16, "gtol": 1e-14})
    return res.x, res.nit


def _feasibility(problem: PlanProblem, x, ev: Evaluation) -> float:
    return max(ev.max_violation, _bound_violation(problem, x))


def solve(problem: PlanProblem, x0=None, max_iterations: int = MAX_ITERATIONS) -> PlanSolution:
    """Locally maximize the average power from the start point ``x0``.

    Without ``x0`` the start comes from :func:`seed_grid`.  An infeasible
    start is repaired by a restoration phase.  Once feasible, only steps
    that stay feasible and do not lower the objective are accepted.  When
    the iteration budget runs out the last accepted iterate is returned
    with ``converged=False``.
    """
    if x0 is None:
        x0 = seed_grid(problem, 1)[0]
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("start point must be finite")
    nlp = _ScaledNLP(problem)
    lower, upper = np.array(problem.lower), np.array(problem.upper)
    x = np.clip(x0, lower, upper)
    iterations = 0

    ev = evaluate(problem, x)
    violation = _feasibility(problem, x, ev)
    if violation > FEASIBILITY_TOL:
        log.debug("r=%g: infeasible start, restoring", problem.r)
        xr, nit = _restore(nlp, x)
        iterations += nit
        evr = evaluate(problem, xr)
        vr = _feasibility(problem, xr, evr)
        if vr < violation:
            x, ev, violation = xr, evr, vr

    def stationarity_at(x, violation):
        return kkt_residual(problem, x, nlp) if violation <= FEASIBILITY_TOL else math.inf

    stationarity = stationarity_at(x, violation)
    radius = TRUST_RADIUS
    status = "max_iterations"
    while True:
        if violation <= FEASIBILITY_TOL and stationarity <= STATIONARITY_TOL:
            status = "converged"
            break
        budget = max_iterations - iterations
        if budget <= 0:
            break
        if radius < MIN_RADIUS:
            status = "stalled"
            break
        lo, hi = np.maximum(lower, x - radius), np.minimum(upper, x + radius)
        res = _slsqp(nlp, x, budget, lo, hi)
        iterations += max(1, int(res.nit))
        xn = np.clip(res.x, lo, hi)
        evn = evaluate(problem, xn)
        vn = _feasibility(problem, xn, evn)
        if violation <= FEASIBILITY_TOL:
            accept = vn <= FEASIBILITY_TOL and evn.objective >= ev.objective
        else:
            accept = vn < violation
        if not accept or np.array_equal(xn, x):
            radius /= 4
            continue
        at_edge = np.any((xn - lo <= 1e-9) & (lo > lower)) or np.any((hi - xn <= 1e-9) & (hi < upper))
        x, ev, violation = xn, evn, vn
        stationarity = stationarity_at(x, violation)
        if at_edge:
            radius *= 2

    converged = status == "converged"
    return PlanSolution(
        r=problem.r,
        shape_ratio=tuple(problem.shape_ratio),
        x=x,
        p_avg=ev.objective,
        p_loyd=problem.p_loyd,
        max_kappa_on_grid=float(ev.kappa_geo.max()),
        active_constraints=active_set(problem, x, ev),
        iterations=iterations,
        converged=converged,
        status=status,
        max_violation=violation,
        stationarity=stationarity,
    )


def seed_grid(problem: PlanProblem, count: int = 5, points: int = 9) -> list:
    """Deterministic start points from a coarse grid over the box.

    Feasible grid points are ranked by objective.  When fewer than
    ``count`` are feasible the list is topped up with the least violating
    points, which the restoration phase then repairs.
    """
    lo, hi = np.array(problem.lower), np.array(problem.upper)
    band = (problem.beta_max - problem.beta_min) / 2
    dbetas = np.linspace(lo[1], max(lo[1], min(hi[1], band)), points)
    dphis = np.linspace(lo[2], hi[2], points)
    scored = []
    for db in dbetas:
        b_lo = max(lo[0], problem.beta_min + db)
        b_hi = min(hi[0], problem.beta_max - db)
        if b_lo > b_hi:
            continue
        for b0 in np.linspace(b_lo, b_hi, 5):
            for dp in dphis:
                x = np.array([b0, db, dp])
                ev = evaluate(problem, x)
                scored.append((ev.max_violation > FEASIBILITY_TOL, ev.max_violation, -ev.objective, len(scored), x))
    if not scored:
        raise InconsistentBounds("no grid point satisfies the elevation band")
    scored.sort(key=lambda t: t[:4])
    return [t[4] for t in scored[:count]]


def multi_start(problem: PlanProblem, seeds: Optional[Sequence] = None, n_seeds: int = 5) -> PlanSolution:
    """Best converged local solution over several start points.

    Ties on the objective go to the earliest seed, so the result is
    deterministic for a given seed list.
    """
    if seeds is None:
        seeds = seed_grid(problem, n_seeds)
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    best = None
    for seed in seeds:
        sol = solve(problem, seed)
        if sol.converged and (best is None or sol.p_avg > best.p_avg):
            best = sol
    if best is None:
        raise NoConvergedSolution(f"none of {len(seeds)} starts converged at r={problem.r:g} m")
    return best


def verify_solution(problem: PlanProblem, x, factor: int = 10) -> float:
    """Largest constraint violation of ``x`` on a ``factor`` times finer grid.

    Curvature rows are in 1/m and the elevation rows in radians; the
    result is 0 for a feasible point.
    """
    fine = problem.with_grid(problem.grid_n * factor)
    ev = evaluate(fine, x)
    return _feasibility(fine, np.asarray(x, dtype=float), ev)
