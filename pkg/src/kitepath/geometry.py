"""Lissajous reference paths on the downwind spherical quadrant.

A path is described in the (azimuth, elevation) plane by

    beta(s) = beta0 + dbeta * sin(k * s)
    phi(s)  = dphi * cos(s)

with ``k = n_beta / n_phi`` (1 gives an ellipse, 2 a figure of eight) and
embedded on a sphere of radius ``r`` (the tether length).  All functions
accept scalar or array ``s`` and broadcast with numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegeneratePath, InvalidPath, InvalidRadius

DEFAULT_GRID_N = 360
_DEGENERATE_TOL = 1e-12
# slack on the quadrant invariants, matching the optimizer's feasibility tolerance
_QUADRANT_SLACK = 1e-6


@dataclass(frozen=True)
class LissajousPath:
    beta0: float
    dbeta: float
    dphi: float
    n_beta: int = 1
    n_phi: int = 1

    def __post_init__(self):
        if not (self.dbeta > 0 and self.dphi > 0):
            raise InvalidPath("dbeta and dphi must be strictly positive")
        if self.beta0 - self.dbeta < -_QUADRANT_SLACK or self.beta0 + self.dbeta > math.pi / 2 + _QUADRANT_SLACK:
            raise InvalidPath(
                f"elevation range [{self.beta0 - self.dbeta:.6g}, {self.beta0 + self.dbeta:.6g}] "
                "leaves the quadrant [0, pi/2]"
            )
        if self.dphi > math.pi / 2 + _QUADRANT_SLACK:
            raise InvalidPath("dphi must not exceed pi/2")
        if int(self.n_beta) != self.n_beta or int(self.n_phi) != self.n_phi:
            raise InvalidPath("n_beta and n_phi must be integers")
        if self.n_beta < 1 or self.n_phi < 1:
            raise InvalidPath("n_beta and n_phi must be positive")

    @property
    def ratio(self) -> float:
        return self.n_beta / self.n_phi

    @property
    def period(self) -> float:
        """Parameter length after which the path closes."""
        return 2 * math.pi * (self.n_phi // math.gcd(self.n_beta, self.n_phi))

    @classmethod
    def from_vector(cls, x, shape_ratio=(1, 1)) -> "LissajousPath":
        return cls(float(x[0]), float(x[1]), float(x[2]), *shape_ratio)

    def as_vector(self) -> np.ndarray:
        return np.array([self.beta0, self.dbeta, self.dphi])


class PathSample(NamedTuple):
    s: float
    beta: float
    phi_az: float
    dbeta_ds: float
    dphi_ds: float
    d2beta_ds2: float
    d2phi_ds2: float
    chi: float
    kappa_total: float
    kappa_geo: float


class Profile(NamedTuple):
    """Array-valued path quantities along a parameter grid."""

    s: np.ndarray
    beta: np.ndarray
    phi_az: np.ndarray
    dbeta_ds: np.ndarray
    dphi_ds: np.ndarray
    d2beta_ds2: np.ndarray
    d2phi_ds2: np.ndarray
    kappa_total: np.ndarray
    kappa_geo: np.ndarray


def uniform_grid(n: int, period: float = 2 * math.pi) -> np.ndarray:
    return period * np.arange(n) / n


def _angles(beta0, dbeta, dphi, k, s):
    return beta0 + dbeta * np.sin(k * s), dphi * np.cos(s)


def _derivatives(dbeta, dphi, k, s):
    ks = k * s
    return (
        dbeta * k * np.cos(ks),
        -dphi * np.sin(s),
        -dbeta * k * k * np.sin(ks),
        -dphi * np.cos(s),
    )


def eval_path(path: LissajousPath, s):
    """Elevation and azimuth at parameter ``s``."""
    return _angles(path.beta0, path.dbeta, path.dphi, path.ratio, s)


def path_derivatives(path: LissajousPath, s):
    """Return ``(dbeta_ds, dphi_ds, d2beta_ds2, d2phi_ds2)``."""
    return _derivatives(path.dbeta, path.dphi, path.ratio, s)


def heading(path: LissajousPath, s):
    """Tangential heading measured from the elevation direction, in (-pi, pi]."""
    b1, p1, _, _ = path_derivatives(path, s)
    if np.any((np.abs(b1) < _DEGENERATE_TOL) & (np.abs(p1) < _DEGENERATE_TOL)):
        raise DegeneratePath("heading undefined where both angle derivatives vanish")
    chi = np.arctan2(p1, b1)
    chi = np.where(chi <= -math.pi, math.pi, chi)
    return chi if chi.ndim else float(chi)


def spherical_to_cartesian(beta, phi, r):
    if np.any(np.asarray(r) <= 0):
        raise InvalidRadius(f"radius must be positive, got {r}")
    cb = np.cos(beta)
    return np.stack([r * cb * np.cos(phi), r * cb * np.sin(phi), r * np.sin(beta) * np.ones_like(cb)], axis=-1)


def embed_3d(path: LissajousPath, s, r: float) -> np.ndarray:
    """Point(s) on the sphere of radius ``r``; the last axis holds (x, y, z)."""
    beta, phi = eval_path(path, s)
    return spherical_to_cartesian(beta, phi, r)


def _embedding_derivatives(beta, phi, b1, p1, b2, p2, r):
    cb, sb, cp, sp = np.cos(beta), np.sin(beta), np.cos(phi), np.sin(phi)
    sq = b1 * b1 + p1 * p1
    d1 = np.stack(
        [
            -sb * cp * b1 - cb * sp * p1,
            -sb * sp * b1 + cb * cp * p1,
            cb * b1,
        ],
        axis=-1,
    )
    d2 = np.stack(
        [
            -cb * cp * sq + 2 * sb * sp * b1 * p1 - sb * cp * b2 - cb * sp * p2,
            -cb * sp * sq - 2 * sb * cp * b1 * p1 - sb * sp * b2 + cb * cp * p2,
            -sb * b1 * b1 + cb * b2,
        ],
        axis=-1,
    )
    return r * d1, r * d2


def _curvatures(beta, phi, b1, p1, b2, p2, r, strict=True):
    d1, d2 = _embedding_derivatives(beta, phi, b1, p1, b2, p2, r)
    speed = np.linalg.norm(d1, axis=-1)
    if np.any(speed < _DEGENERATE_TOL):
        if strict:
            raise DegeneratePath("stationary point on the path: |p'| vanishes")
        # only reachable through the pole; a huge curvature marks it infeasible
        speed = np.maximum(speed, _DEGENERATE_TOL)
    kt = np.linalg.norm(np.cross(d1, d2), axis=-1) / speed**3
    # kt >= 1/r analytically; rounding can push the difference below zero
    kg = np.sqrt(np.maximum(kt * kt - 1.0 / (r * r), 0.0))
    return kt, kg


def curvature(path: LissajousPath, s, r: float):
    """Total and geodesic curvature (1/m) of the embedded path."""
    if r <= 0:
        raise InvalidRadius(f"radius must be positive, got {r}")
    beta, phi = eval_path(path, s)
    b1, p1, b2, p2 = path_derivatives(path, s)
    return _curvatures(beta, phi, b1, p1, b2, p2, r)


def lissajous_profile(beta0, dbeta, dphi, ratio, r, s, strict=True) -> Profile:
    """Vectorized path quantities without the path-type validation.

    Optimizer iterates may leave the quadrant slightly during line searches,
    so this entry point accepts any parameter values.  With ``strict=False``
    a stationary point (the path touching the pole) yields a very large
    curvature instead of :class:`DegeneratePath`.
    """
    s = np.asarray(s, dtype=float)
    beta, phi = _angles(beta0, dbeta, dphi, ratio, s)
    b1, p1, b2, p2 = _derivatives(dbeta, dphi, ratio, s)
    kt, kg = _curvatures(beta, phi, b1, p1, b2, p2, r, strict)
    return Profile(s, beta, phi, b1, p1, b2, p2, kt, kg)


def path_profile(path: LissajousPath, r: float, n: int = DEFAULT_GRID_N) -> Profile:
    if r <= 0:
        raise InvalidRadius(f"radius must be positive, got {r}")
    if n < 8:
        raise ValueError("at least 8 samples are required")
    return lissajous_profile(path.beta0, path.dbeta, path.dphi, path.ratio, r, uniform_grid(n, path.period))


def sample_path(path: LissajousPath, r: float, n: int = DEFAULT_GRID_N) -> list[PathSample]:
    """Uniform samples over one closed period of the path."""
    prof = path_profile(path, r, n)
    chi = heading(path, prof.s)
    return [PathSample(*(float(a[i]) for a in prof[:7]), float(chi[i]), float(prof.kappa_total[i]), float(prof.kappa_geo[i]))
            for i in range(n)]
