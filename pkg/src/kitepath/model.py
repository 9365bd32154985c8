"""Quasi-static traction power model of a crosswind kite.

Gravity and inertia are neglected, so the resultant aerodynamic force is
radial and the apparent wind components are geometrically similar to the
lift/drag decomposition.  This gives closed forms for the tether force and
the traction power as functions of the kite position (elevation ``beta``,
azimuth ``phi_az``), its roll angle and the reel-out factor ``f`` (reel-out
speed over wind speed).

Angles are in radians, forces in N, powers in W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CurvatureInfeasible, DomainError, PositionInfeasible, RadialOverrun
from .geometry import DEFAULT_GRID_N, LissajousPath, Profile, path_profile


@dataclass(frozen=True)
class KiteParams:
    mass: float = 1.0
    area: float = 0.28
    c_lift: float = 1.2
    c_drag: float = 0.12

    def __post_init__(self):
        for name in ("mass", "area", "c_lift", "c_drag"):
            if not getattr(self, name) > 0:
                raise DomainError(f"kite.{name} must be strictly positive")
        if self.c_lift <= self.c_drag:
            raise DomainError("kite glide ratio c_lift/c_drag must exceed 1")

    @property
    def glide_ratio(self) -> float:
        return self.c_lift / self.c_drag


@dataclass(frozen=True)
class Environment:
    air_density: float = 1.225
    wind_speed: float = 10.0

    def __post_init__(self):
        for name in ("air_density", "wind_speed"):
            if not getattr(self, name) > 0:
                raise DomainError(f"environment.{name} must be strictly positive")


@dataclass(frozen=True)
class KiteState:
    """Kite position and operating point on the sphere.

    ``chi`` is the heading of the tangential velocity measured from the
    elevation direction, ``reel_factor`` the radial kite speed over wind
    speed and ``phi_roll`` the roll angle.
    """

    beta: float
    phi_az: float
    chi: float = 0.0
    reel_factor: float = 0.0
    phi_roll: float = 0.0


@dataclass(frozen=True)
class PowerBreakdown:
    tether_force: float
    instantaneous_power: float
    apparent_speed: float
    resultant_coeff: float
    apparent_radial: float
    apparent_tangential: float


def _dynamic_lift(kite: KiteParams, env: Environment) -> float:
    # 1/2 rho A c_L: the lift per unit squared apparent speed
    return 0.5 * env.air_density * kite.area * kite.c_lift


def loyd_power(env: Environment, kite: KiteParams) -> float:
    """Upper bound on traction power of an ideal crosswind kite."""
    return _dynamic_lift(kite, env) * env.wind_speed**3 * (4.0 / 27.0) * kite.glide_ratio**2


def roll_angle(kappa_geo, kite: KiteParams, env: Environment, clamp: bool = False):
    """Roll angle needed to follow a path of geodesic curvature ``kappa_geo``.

    The turning lift ``F_lift sin(phi_roll)`` must supply the lateral
    acceleration ``a_l = v_k^2 / R0`` with ``R0 = 1 / kappa``.  With the
    kite speed taken equal to the apparent speed the dependence on speed
    cancels and ``sin(phi_roll) = m kappa / (1/2 rho A c_L)``.

    With ``clamp=True`` infeasible turns saturate at ``pi/2`` instead of
    raising; the optimizer relies on this to keep line searches finite.
    """
    kappa = np.asarray(kappa_geo, dtype=float)
    if np.any(kappa < 0):
        raise DomainError("geodesic curvature must be nonnegative")
    arg = kite.mass * kappa / _dynamic_lift(kite, env)
    if clamp:
        arg = np.minimum(arg, 1.0)
    elif np.any(arg > 1.0):
        worst = float(np.max(kappa))
        raise CurvatureInfeasible(
            f"curvature {worst:.6g} 1/m exceeds the turning capability "
            f"{_dynamic_lift(kite, env) / kite.mass:.6g} 1/m",
            kappa=worst,
        )
    out = np.arcsin(arg)
    return out if out.ndim else float(out)


def _similarity_ratio(phi_roll, kite: KiteParams):
    return kite.c_lift * np.cos(phi_roll) / kite.c_drag


def resultant_coeff(phi_roll, kite: KiteParams):
    return np.hypot(kite.c_lift * np.cos(phi_roll), kite.c_drag)


def _radial_factor(state: KiteState) -> float:
    rad = math.cos(state.beta) * math.cos(state.phi_az) - state.reel_factor
    if rad <= 0:
        raise RadialOverrun(
            f"reel factor {state.reel_factor:.6g} >= cos(beta)cos(phi) = {rad + state.reel_factor:.6g}"
        )
    return rad


def apparent_speed(state: KiteState, env: Environment, kite: KiteParams) -> float:
    rad = _radial_factor(state)
    return env.wind_speed * rad * math.sqrt(1.0 + _similarity_ratio(state.phi_roll, kite) ** 2)


def lambda_ratio(state: KiteState, kite: KiteParams) -> float:
    """Tangential kite speed as a fraction of the wind speed.

    Positive root of the quadratic obtained by equating the two expressions
    for the tangential apparent wind speed.
    """
    sb, cb = math.sin(state.beta), math.cos(state.beta)
    sp, cp = math.sin(state.phi_az), math.cos(state.phi_az)
    a = -sb * cp * math.cos(state.chi) + sp * math.sin(state.chi)
    b = cb * cp
    g = _similarity_ratio(state.phi_roll, kite)
    disc = a * a + b * b - 1.0 + g * g * (b - state.reel_factor) ** 2
    if disc < 0:
        raise PositionInfeasible(f"no real tangential speed (discriminant {disc:.6g})")
    lam = a + math.sqrt(disc)
    if lam < 0:
        raise PositionInfeasible(f"negative tangential speed ratio {lam:.6g}")
    return lam


def apparent_wind_vector(state: KiteState, lam: float, env: Environment) -> np.ndarray:
    """Apparent wind in the local (radial, elevation, azimuth) frame for a given tangential speed ratio."""
    sb, cb = math.sin(state.beta), math.cos(state.beta)
    sp, cp = math.sin(state.phi_az), math.cos(state.phi_az)
    return env.wind_speed * np.array(
        [
            cb * cp - state.reel_factor,
            sb * cp + lam * math.cos(state.chi),
            -sp + lam * math.sin(state.chi),
        ]
    )


def reel_out_optimum(beta, phi_az):
    """Reel-out factor maximizing instantaneous traction power."""
    return np.cos(beta) * np.cos(phi_az) / 3.0


def _force_scale(phi_roll, env: Environment, kite: KiteParams):
    g = _similarity_ratio(phi_roll, kite)
    return 0.5 * env.air_density * kite.area * resultant_coeff(phi_roll, kite) * (1.0 + g * g)


def tether_force(state: KiteState, env: Environment, kite: KiteParams) -> float:
    rad = _radial_factor(state)
    return float(_force_scale(state.phi_roll, env, kite) * rad * rad * env.wind_speed**2)


def instantaneous_power(state: KiteState, env: Environment, kite: KiteParams) -> PowerBreakdown:
    """Traction power at reel-out factor ``state.reel_factor``."""
    rad = _radial_factor(state)
    force = tether_force(state, env, kite)
    g = _similarity_ratio(state.phi_roll, kite)
    v_r = env.wind_speed * rad
    return PowerBreakdown(
        tether_force=force,
        instantaneous_power=force * state.reel_factor * env.wind_speed,
        apparent_speed=v_r * math.sqrt(1.0 + g * g),
        resultant_coeff=float(resultant_coeff(state.phi_roll, kite)),
        apparent_radial=v_r,
        apparent_tangential=v_r * g,
    )


def optimal_power(beta, phi_az, phi_roll, env: Environment, kite: KiteParams):
    """Instantaneous power at the optimal reel-out factor (vectorized)."""
    cosines = np.cos(beta) * np.cos(phi_az)
    return _force_scale(phi_roll, env, kite) * (4.0 / 27.0) * cosines**3 * env.wind_speed**3


def optimal_tether_force(beta, phi_az, phi_roll, env: Environment, kite: KiteParams):
    """Tether force at the optimal reel-out factor (vectorized)."""
    rad = 2.0 / 3.0 * np.cos(beta) * np.cos(phi_az)
    return _force_scale(phi_roll, env, kite) * rad * rad * env.wind_speed**2


def profile_power(prof: Profile, env: Environment, kite: KiteParams, clamp: bool = False):
    """Optimal instantaneous power and roll angle at every sample of ``prof``."""
    try:
        phi_roll = roll_angle(prof.kappa_geo, kite, env, clamp=clamp)
    except CurvatureInfeasible as exc:
        i = int(np.argmax(prof.kappa_geo))
        exc.s = float(prof.s[i])
        exc.args = (f"{exc.args[0]} at s={exc.s:.6g} rad",)
        raise
    return optimal_power(prof.beta, prof.phi_az, phi_roll, env, kite), phi_roll


def average_power(
    path: LissajousPath,
    r: float,
    env: Environment,
    kite: KiteParams,
    n: int = DEFAULT_GRID_N,
    clamp: bool = False,
) -> float:
    """Path-averaged optimal traction power over one closed period.

    On a uniform periodic grid the trapezoidal rule reduces to the sample
    mean, since the closing sample equals the first one.
    """
    power, _ = profile_power(path_profile(path, r, n), env, kite, clamp=clamp)
    return float(np.mean(power))
