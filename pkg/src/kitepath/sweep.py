"""Tether-length sweeps, parameter interpolation and phase averaging."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NoConvergedSolution, OutOfDomain, SweepAborted, TooFewKnots
from .geometry import DEFAULT_GRID_N, LissajousPath
from .model import Environment, KiteParams, average_power
from .optimizer import PlanSolution, build_problem, multi_start, solve, verify_solution

log = logging.getLogger(__name__)

PARAMS = ("beta0", "dbeta", "dphi")
_DOMAIN_SLACK = 1e-9


def tether_grid(r_min: float, r_max: float, dr: float) -> np.ndarray:
    if dr <= 0:
        raise ValueError("dr must be positive")
    if r_max < r_min:
        raise ValueError("r_max must not be below r_min")
    n = int(math.floor((r_max - r_min) / dr + 1e-9)) + 1
    return r_min + dr * np.arange(n)


@dataclass
class SweepResult:
    grid: list
    solutions: list
    shape_ratio: tuple
    failed_at: Optional[float] = None

    @property
    def complete(self) -> bool:
        return self.failed_at is None

    @property
    def total_iterations(self) -> int:
        return sum(s.iterations for s in self.solutions)

    def parameters(self) -> np.ndarray:
        """Optimal (beta0, dbeta, dphi) per grid point, shape ``(n, 3)``."""
        return np.array([s.x for s in self.solutions])

    def loyd_ratios(self) -> np.ndarray:
        return np.array([s.loyd_ratio for s in self.solutions])


def run_sweep(config, r_min=None, r_max=None, dr=None, warm_start: bool = True) -> SweepResult:
    """Solve the planning problem along a tether-length grid.

    Each problem starts from the previous optimum; the first one (or every
    one, with ``warm_start=False``) is seeded from the coarse feasibility
    grid.  A failed solve falls back to a five-seed multi-start before the
    sweep is aborted with :class:`SweepAborted` carrying the partial result.
    """
    spec = config.sweep
    grid = tether_grid(
        spec.r_min if r_min is None else r_min,
        spec.r_max if r_max is None else r_max,
        spec.dr if dr is None else dr,
    )
    result = SweepResult(grid=[], solutions=[], shape_ratio=tuple(config.shape_ratio))
    x_prev = None
    for r in grid:
        r = float(r)
        problem = build_problem(r, config)
        sol = solve(problem, x_prev if warm_start else None)
        if not sol.converged:
            log.info("r=%g: %s, retrying with multi-start", r, sol.status)
            try:
                sol = multi_start(problem)
            except NoConvergedSolution:
                result.failed_at = r
                raise SweepAborted(r, partial=result) from None
        result.grid.append(r)
        result.solutions.append(sol)
        x_prev = sol.x
    return result


@dataclass
class ParamSplines:
    """Natural cubic interpolants of the optimal path parameters over tether length."""

    knots_r: np.ndarray
    values: np.ndarray  # shape (3, n): beta0, dbeta, dphi
    shape_ratio: tuple = (1, 1)
    _splines: list = field(init=False, repr=False)

    def __post_init__(self):
        self.knots_r = np.asarray(self.knots_r, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.knots_r.size < 4:
            raise TooFewKnots(f"need at least 4 knots, got {self.knots_r.size}")
        if np.any(np.diff(self.knots_r) <= 0):
            raise ValueError("knots must be strictly increasing")
        self._splines = [CubicSpline(self.knots_r, v, bc_type="natural") for v in self.values]

    @property
    def domain(self) -> tuple:
        return float(self.knots_r[0]), float(self.knots_r[-1])

    def _check(self, r):
        lo, hi = self.domain
        r = np.asarray(r, dtype=float)
        if np.any(r < lo - _DOMAIN_SLACK) or np.any(r > hi + _DOMAIN_SLACK):
            raise OutOfDomain(f"tether length outside the interpolation domain [{lo:g}, {hi:g}] m")
        return np.clip(r, lo, hi)

    def __call__(self, r, nu: int = 0) -> np.ndarray:
        """Parameters (or their ``nu``-th derivative) at tether length(s) ``r``."""
        r = self._check(r)
        return np.array([sp(r, nu) for sp in self._splines])

    def path(self, r: float) -> LissajousPath:
        return LissajousPath.from_vector(self(r), self.shape_ratio)

    def second_derivs(self) -> np.ndarray:
        return np.array([sp(self.knots_r, 2) for sp in self._splines])

    def to_json(self) -> dict:
        d2 = self.second_derivs()
        doc = {
            name: {
                "knots_r": self.knots_r.tolist(),
                "values": self.values[i].tolist(),
                "second_derivs": d2[i].tolist(),
            }
            for i, name in enumerate(PARAMS)
        }
        doc["shape_ratio"] = list(self.shape_ratio)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ParamSplines":
        knots = doc[PARAMS[0]]["knots_r"]
        return cls(knots, [doc[p]["values"] for p in PARAMS], tuple(doc.get("shape_ratio", (1, 1))))


def fit_splines(sweep: SweepResult) -> ParamSplines:
    params = sweep.parameters()
    if len(sweep.grid) < 4:
        raise TooFewKnots(f"need at least 4 grid points, got {len(sweep.grid)}")
    return ParamSplines(np.array(sweep.grid), params.T, sweep.shape_ratio)


def phase_average(
    source,
    r_lo: float,
    r_hi: float,
    env: Environment,
    kite: KiteParams,
    n_r: int = 21,
    grid_n: int = DEFAULT_GRID_N,
) -> float:
    """Average traction power over the reel-out phase from ``r_lo`` to ``r_hi``.

    The path-averaged power of the interpolated path is integrated over
    tether length with the trapezoidal rule and divided by the interval
    width.  A zero-width interval returns the path average at ``r_lo``.
    """
    splines = source if isinstance(source, ParamSplines) else fit_splines(source)
    if r_hi < r_lo:
        raise ValueError("r_hi must not be below r_lo")
    splines._check([r_lo, r_hi])
    if r_hi == r_lo:
        return average_power(splines.path(r_lo), r_lo, env, kite, grid_n)
    if n_r < 4:
        raise ValueError("n_r must be at least 4")
    rs = np.linspace(r_lo, r_hi, n_r)
    p = np.array([average_power(splines.path(r), r, env, kite, grid_n) for r in rs])
    return float(np.trapezoid(p, rs) / (r_hi - r_lo))


def interpolated_feasibility(splines: ParamSplines, config, per_interval: int = 4, factor: int = 10) -> list:
    """Constraint violation of interpolated paths between the knots.

    Returns ``(r, violation)`` pairs at ``per_interval`` interior points of
    every knot interval, checked on a ``factor`` times finer grid.  No
    repair is attempted; a positive violation is only reported.
    """
    out = []
    knots = splines.knots_r
    for a, b in zip(knots[:-1], knots[1:]):
        for t in np.arange(1, per_interval + 1) / (per_interval + 1):
            r = float(a + t * (b - a))
            problem = build_problem(r, config)
            out.append((r, verify_solution(problem, splines(r), factor)))
    return out


def solution_at(config, r: float, x0=None) -> PlanSolution:
    """Direct solve at a single tether length (reference for interpolated paths)."""
    return solve(build_problem(r, config), x0)
