"""Surfaces of revolution diffeomorphic to the 2-sphere.

A surface is described by its generating curve ``theta -> (R(theta), z(theta))``
parametrized by arc length on ``[0, L]``, with ``R(0) = R(L) = 0`` and the
south pole at ``theta = 0``.  The metric is ``dtheta^2 + R(theta)^2 dphi^2``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline, CubicSpline, PchipInterpolator

__all__ = [
    "ProfileCurve",
    "SurfaceKind",
    "SurfaceSpec",
    "build_profile",
    "orbit_volume",
    "quotient_measure_density",
    "read_table_csv",
    "surface_area",
]

QUAD_TOL = 1e-12


class SurfaceKind(str, Enum):
    ROUND_SPHERE = "round_sphere"
    ELLIPSOID = "ellipsoid"
    TABLE = "table"


@dataclass(frozen=True)
class SurfaceSpec:
    """What surface to build.

    ``axis_ratio`` is the equatorial radius of an ellipsoid whose polar
    half-axis is 1, so the profile is ``(a sin s, -cos s)``.  ``table`` holds
    ``(t, R, z)`` samples for a tabulated profile.
    """

    kind: SurfaceKind = SurfaceKind.ROUND_SPHERE
    grid_size: int = 4000
    axis_ratio: float = 1.0
    table: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SurfaceKind(self.kind))
        if self.grid_size < 2:
            raise ValueError("grid_size must be a positive integer >= 2")
        if self.kind is SurfaceKind.ELLIPSOID and not self.axis_ratio > 0:
            raise ValueError(f"axis_ratio must be > 0, got {self.axis_ratio}")
        if self.kind is SurfaceKind.TABLE:
            if self.table is None:
                raise ValueError("table surface requires (t, R, z) samples")
            t, R, z = (np.asarray(a, dtype=float) for a in self.table)
            if not (t.shape == R.shape == z.shape) or t.size < 4:
                raise ValueError("table columns must have equal length >= 4")
            if np.any(np.diff(t) <= 0):
                raise ValueError("table parameter t must be strictly increasing")
            if np.any(R < 0):
                raise ValueError("table radius R must be nonnegative")
            if R[0] != 0.0 or R[-1] != 0.0 or np.any(R[1:-1] <= 0):
                raise ValueError("table radius must vanish exactly at both endpoints and nowhere else")
            if np.any(np.hypot(np.diff(R), np.diff(z)) == 0):
                raise ValueError("speed vanishes: consecutive table samples coincide")

    @classmethod
    def round_sphere(cls, grid_size: int = 4000) -> "SurfaceSpec":
        return cls(SurfaceKind.ROUND_SPHERE, grid_size)

    @classmethod
    def ellipsoid(cls, axis_ratio: float, grid_size: int = 4000) -> "SurfaceSpec":
        return cls(SurfaceKind.ELLIPSOID, grid_size, axis_ratio=axis_ratio)

    @classmethod
    def from_table(cls, t, R, z, grid_size: int = 4000) -> "SurfaceSpec":
        table = tuple(tuple(float(v) for v in col) for col in (t, R, z))
        return cls(SurfaceKind.TABLE, grid_size, table=table)


def read_table_csv(path, grid_size: int = 4000) -> SurfaceSpec:
    """Read a ``t,R,z`` CSV into a table ``SurfaceSpec``."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"t", "R", "z"}:
        raise ValueError(f"{path}: expected CSV header 't,R,z'")
    cols = [[float(r[k]) for r in rows] for k in ("t", "R", "z")]
    return SurfaceSpec.from_table(*cols, grid_size=grid_size)


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Arc-length generating curve sampled on a uniform grid of ``[0, L]``.

    Off-grid values of ``R`` come from a cubic Hermite interpolant of the
    nodal ``(R, dR)`` data unless an exact closed form is attached.
    """

    L: float
    theta: np.ndarray
    R: np.ndarray
    z: np.ndarray
    dR: np.ndarray
    dz: np.ndarray
    name: str = "profile"
    _exact: tuple[Callable, Callable, Callable] | None = field(default=None, repr=False)

    def __post_init__(self):
        for a in (self.theta, self.R, self.z, self.dR, self.dz):
            a.setflags(write=False)
        spline = CubicHermiteSpline(self.theta, self.R, self.dR)
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "_dspline", spline.derivative())
        object.__setattr__(self, "_ddspline", spline.derivative(2))

    @property
    def n_intervals(self) -> int:
        return self.theta.size - 1

    @property
    def step(self) -> float:
        return self.L / self.n_intervals

    def _check(self, th):
        th = np.asarray(th, dtype=float)
        tol = 1e-12 * self.L
        if np.any((th < -tol) | (th > self.L + tol)):
            raise ValueError(f"theta outside [0, L] = [0, {self.L}]")
        return np.clip(th, 0.0, self.L)

    def radius(self, th):
        th = self._check(th)
        out = self._exact[0](th) if self._exact else self._spline(th)
        return np.where((th == 0.0) | (th == self.L), 0.0, out)

    def radius_prime(self, th):
        th = self._check(th)
        return self._exact[1](th) if self._exact else self._dspline(th)

    def radius_second(self, th):
        th = self._check(th)
        return self._exact[2](th) if self._exact else self._ddspline(th)

    def jet(self, th: float) -> tuple[float, float, float]:
        """``(R, R', R'')`` at a scalar ``th``, without array overhead."""
        if self._exact:
            return tuple(float(f(th)) for f in self._exact)
        h = self.L / self.n_intervals
        i = min(max(int(th / h), 0), self.n_intervals - 1)
        u = th - self.theta[i]
        r0, r1 = self.R[i], self.R[i + 1]
        d0, d1 = self.dR[i], self.dR[i + 1]
        # cubic Hermite in local coordinate u on [0, h]
        c2 = (3.0 * (r1 - r0) / h - 2.0 * d0 - d1) / h
        c3 = (d0 + d1 - 2.0 * (r1 - r0) / h) / (h * h)
        return (
            float(r0 + u * (d0 + u * (c2 + u * c3))),
            float(d0 + u * (2.0 * c2 + 3.0 * u * c3)),
            float(2.0 * c2 + 6.0 * u * c3),
        )

    def is_reflection_symmetric(self, tol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.R - self.R[::-1])) <= tol)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "R", "z", "dR"])
            for row in zip(self.theta, self.R, self.z, self.dR):
                w.writerow([repr(float(v)) for v in row])


def _round_sphere(n: int) -> ProfileCurve:
    theta = np.linspace(0.0, math.pi, n + 1)
    R = np.sin(theta)
    R[0] = R[-1] = 0.0
    exact = (np.sin, np.cos, lambda t: -np.sin(t))
    return ProfileCurve(math.pi, theta, R, -np.cos(theta), np.cos(theta), np.sin(theta), "round_sphere", exact)


def _reparametrize(
    pos: Callable, vel: Callable, s_lo: float, s_hi: float, n: int, knots: np.ndarray, name: str
) -> ProfileCurve:
    """Arc-length reparametrization of a regular curve ``s -> (R(s), z(s))``.

    ``pos(s)`` and ``vel(s)`` return ``(R, z)`` and ``(R', z')``.  Cumulative
    arc length is integrated adaptively between consecutive ``knots``; a
    monotone cubic of the inverse map seeds a Newton solve for each uniform
    arc-length node.
    """

    def speed(s):
        dr, dz = vel(s)
        return math.hypot(float(dr), float(dz))

    pieces = [quad(speed, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0] for a, b in zip(knots[:-1], knots[1:])]
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    L = float(cum[-1])
    if not L > 0:
        raise ValueError("curve has zero length")
    inverse = PchipInterpolator(cum, knots)
    theta = np.linspace(0.0, L, n + 1)
    s = inverse(theta)
    for i in range(1, n):
        k = int(np.searchsorted(cum, theta[i], side="right")) - 1
        for _ in range(50):
            arc = cum[k] + quad(speed, knots[k], s[i], epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
            sp = speed(s[i])
            if sp <= 0:
                raise ValueError("speed vanishes: curve is not regular and cannot be reparametrized by arc length")
            ds = (theta[i] - arc) / sp
            s[i] += ds
            if abs(ds) < 1e-15 * max(1.0, abs(s[i])):
                break
    s[0], s[-1] = s_lo, s_hi
    R, z = (np.asarray(v, dtype=float) for v in pos(s))
    dR_ds, dz_ds = (np.asarray(v, dtype=float) for v in vel(s))
    sp = np.hypot(dR_ds, dz_ds)
    if np.any(sp <= 0):
        raise ValueError("speed vanishes: curve is not regular and cannot be reparametrized by arc length")
    R[0] = R[-1] = 0.0
    if np.any(R[1:-1] <= 0):
        raise ValueError("radius must be positive away from the poles")
    dR, dz = dR_ds / sp, dz_ds / sp
    # one-sided second-order stencils at the poles
    h = L / n
    dR[0] = (-3 * R[0] + 4 * R[1] - R[2]) / (2 * h)
    dR[-1] = (3 * R[-1] - 4 * R[-2] + R[-3]) / (2 * h)
    return ProfileCurve(L, theta, R, z, dR, dz, name)


def build_profile(spec: SurfaceSpec) -> ProfileCurve:
    """Arc-length profile for ``spec`` on ``spec.grid_size`` uniform intervals."""
    n = spec.grid_size
    if spec.kind is SurfaceKind.ROUND_SPHERE:
        return _round_sphere(n)
    if spec.kind is SurfaceKind.ELLIPSOID:
        a = float(spec.axis_ratio)
        if a == 1.0:
            return _round_sphere(n)
        knots = np.linspace(0.0, math.pi, 257)
        return _reparametrize(
            lambda s: (a * np.sin(s), -np.cos(s)),
            lambda s: (a * np.cos(s), np.sin(s)),
            0.0,
            math.pi,
            n,
            knots,
            f"ellipsoid({a:g})",
        )
    t, R, z = (np.asarray(c, dtype=float) for c in spec.table)
    # not-a-knot splines: tables that are already arc length come back to ~1e-12
    r_int = CubicSpline(t, R)
    z_int = CubicSpline(t, z)
    dr_int, dz_int = r_int.derivative(), z_int.derivative()
    return _reparametrize(
        lambda s: (r_int(s), z_int(s)),
        lambda s: (dr_int(s), dz_int(s)),
        float(t[0]),
        float(t[-1]),
        n,
        t,
        "table",
    )


def orbit_volume(curve: ProfileCurve, theta):
    """Length ``2 pi R(theta)`` of the rotation orbit through ``theta``."""
    return 2.0 * math.pi * curve.radius(theta)


def quotient_measure_density(curve: ProfileCurve, theta):
    """Density of the pushed-forward area measure on the orbit space ``[0, L]``."""
    return 2.0 * math.pi * curve.radius(theta)


def surface_area(curve: ProfileCurve) -> float:
    """Area of the surface, integrating the quotient density adaptively."""
    f = lambda t: float(quotient_measure_density(curve, t))
    return quad(f, 0.0, curve.L, epsabs=1e-13, epsrel=1e-13, limit=500)[0]


def resample(curve: ProfileCurve, n: int) -> ProfileCurve:
    """The same profile on ``n`` uniform arc-length intervals."""
    if n == curve.n_intervals:
        return curve
    theta = np.linspace(0.0, curve.L, n + 1)
    R = np.asarray(curve.radius(theta), dtype=float)
    R[0] = R[-1] = 0.0
    dR = np.asarray(curve.radius_prime(theta), dtype=float)
    z = CubicHermiteSpline(curve.theta, curve.z, curve.dz)(theta)
    dz = CubicHermiteSpline(curve.theta, curve.z, curve.dz).derivative()(theta)
    return ProfileCurve(curve.L, theta, R, z, dR, dz, curve.name, curve._exact)
