"""Geodesic flow on the cotangent bundle of a surface of revolution.

Coordinates on ``T*M`` are ``(theta, phi, p_theta, p_phi)`` and the
Hamiltonian is the squared norm ``H = p_theta^2 + p_phi^2 / R(theta)^2``,
so that

    theta' = 2 p_theta,          phi' = 2 p_phi / R^2,
    p_theta' = 2 p_phi^2 R' / R^3,   p_phi' = 0.

The rotation action shifts ``phi``; its momentum map is ``p_phi`` and the
zero level ``p_phi = 0`` reduces to the ``(theta, p_theta)`` plane, on which
the flow runs periodically around the energy shell.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable

import numpy as np
from scipy.integrate import quad

from .geometry import ProfileCurve
from .spectral import NumericalFailure

__all__ = [
    "Branch",
    "PhaseState",
    "ReducedState",
    "ReducedTrajectory",
    "TrajectoryReport",
    "birkhoff_average",
    "check_evolvred",
    "hamiltonian",
    "integrate",
    "momentum_map",
    "reduce",
    "reduced_flow",
    "rotate",
    "sample_states",
    "space_average_reduced_shell",
]

TWO_PI = 2.0 * math.pi
NEWTON_TOL = 1e-13
# Yoshida triple jump: symmetric composition of implicit midpoint, order 4
_G1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_G0 = 1.0 - 2.0 * _G1
SCHEMES = {"midpoint": (1.0,), "midpoint4": (_G1, _G0, _G1)}


@dataclass(frozen=True)
class PhaseState:
    theta: float
    phi: float
    p_theta: float
    p_phi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.phi, self.p_theta, self.p_phi])


def _at_pole(curve: ProfileCurve, theta: float) -> bool:
    return theta <= 0.0 or theta >= curve.L


def hamiltonian(curve: ProfileCurve, s: PhaseState) -> float:
    """``p_theta^2 + p_phi^2 / R(theta)^2``."""
    if _at_pole(curve, s.theta):
        if s.p_phi != 0.0:
            raise ValueError("p_phi must vanish at a pole")
        return s.p_theta**2
    r = float(curve.radius(s.theta))
    return s.p_theta**2 + (s.p_phi / r) ** 2


def momentum_map(s: PhaseState) -> float:
    """Angular momentum about the axis (the Clairaut integral)."""
    return s.p_phi


def rotate(s: PhaseState, angle: float) -> PhaseState:
    return replace(s, phi=(s.phi + angle) % TWO_PI)


# --------------------------------------------------------------------------
# full flow


@dataclass(frozen=True)
class TrajectoryReport:
    t: np.ndarray
    states: np.ndarray  # columns theta, phi, p_theta, p_phi
    H: np.ndarray
    dt: float
    energy_drift: float
    momentum_drift: float
    halvings: int = 0

    @property
    def final(self) -> PhaseState:
        return PhaseState(*map(float, self.states[-1]))

    @property
    def elapsed(self) -> float:
        return float(self.t[-1])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "theta", "phi", "p_theta", "p_phi", "H"])
            for t, row, h in zip(self.t, self.states, self.H):
                w.writerow([repr(float(v)) for v in (t, *row, h)])


def _midpoint_step(curve, th, ph, pt, pp, dt):
    """One implicit-midpoint step; ``None`` if Newton fails or leaves (0, L)."""
    if pp == 0.0:
        # meridian: the vector field is constant along the step
        return th + 2.0 * dt * pt, ph, pt
    jet = curve.jet
    a, b = th + dt * pt, pt  # midpoint guess
    pp2 = pp * pp
    for _ in range(60):
        if not 0.0 < a < curve.L:
            return None
        r, rp, rpp = jet(a)
        f1 = a - th - dt * b
        f2 = b - pt - dt * pp2 * rp / r**3
        j21 = -dt * pp2 * (rpp / r**3 - 3.0 * rp * rp / r**4)
        det = 1.0 - dt * j21
        da = (f1 + dt * f2) / det
        db = (f2 - j21 * f1) / det
        a -= da
        b -= db
        if abs(da) <= NEWTON_TOL * max(1.0, abs(a)) and abs(db) <= NEWTON_TOL * max(1.0, abs(b)):
            break
    else:
        return None
    if not 0.0 < a < curve.L:
        return None
    th1 = 2.0 * a - th
    if not 0.0 < th1 < curve.L:
        return None
    ph1 = ph + dt * 2.0 * pp / jet(a)[0] ** 2
    return th1, ph1, 2.0 * b - pt


def _unfold_pole(curve, th, ph, pt):
    """Continue a meridian through a pole onto the opposite meridian."""
    while th < 0.0 or th > curve.L:
        if th < 0.0:
            th = -th
        else:
            th = 2.0 * curve.L - th
        pt = -pt
        ph += math.pi
    return th, ph, pt


def _advance(curve, th, ph, pt, pp, dt, weights, depth, max_halvings):
    for g in weights:
        out = _midpoint_step(curve, th, ph, pt, pp, g * dt)
        if out is None:
            if pp == 0.0 or depth >= max_halvings:
                raise NumericalFailure(
                    f"integrator failed near theta={th:.6g} with p_phi={pp:g} after {depth} step halvings"
                )
            th, ph, pt, _ = _advance(curve, th, ph, pt, pp, 0.5 * g * dt, weights, depth + 1, max_halvings)
            th, ph, pt, extra = _advance(curve, th, ph, pt, pp, 0.5 * g * dt, weights, depth + 1, max_halvings)
            depth = max(depth, extra)
            continue
        th, ph, pt = out
        if pp == 0.0:
            th, ph, pt = _unfold_pole(curve, th, ph, pt)
    return th, ph, pt, depth


def integrate(
    curve: ProfileCurve,
    s0: PhaseState,
    T: float,
    dt: float,
    scheme: str = "midpoint4",
    max_halvings: int = 12,
    wrap_phi: bool = False,
) -> TrajectoryReport:
    """Fixed-step symplectic integration of the geodesic flow.

    ``scheme="midpoint"`` is the plain implicit midpoint rule and
    ``"midpoint4"`` its symmetric triple-jump composition; both are
    reversible.  Negative ``T`` integrates backward.  A step that fails near
    a pole is retried as two half steps, recursively, up to
    ``max_halvings`` times.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}")
    H0 = hamiltonian(curve, s0)
    n = int(round(abs(T) / dt))
    if n == 0 and T != 0:
        n = 1
    h = math.copysign(abs(T) / n, T) if n else 0.0
    weights = SCHEMES[scheme]
    out = np.empty((n + 1, 4))
    out[0] = s0.as_array()
    th, ph, pt, pp = s0.theta, s0.phi, s0.p_theta, s0.p_phi
    deepest = 0
    for i in range(1, n + 1):
        th, ph, pt, depth = _advance(curve, th, ph, pt, pp, h, weights, 0, max_halvings)
        deepest = max(deepest, depth)
        if wrap_phi:
            ph %= TWO_PI
        out[i] = (th, ph, pt, pp)
    r = np.asarray(curve.radius(out[:, 0]), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = out[:, 2] ** 2 + np.where(out[:, 3] == 0.0, 0.0, out[:, 3] ** 2 / r**2)
    e_drift = float(np.max(np.abs(H - H0)) / abs(H0)) if H0 else float(np.max(np.abs(H)))
    p_drift = float(np.max(np.abs(out[:, 3] - s0.p_phi)))
    return TrajectoryReport(np.linspace(0.0, T, n + 1), out, H, abs(h), e_drift, p_drift, deepest)


# --------------------------------------------------------------------------
# reduction


class Branch(str, Enum):
    UP = "up"  # p_theta > 0, moving from the south pole to the north pole
    DOWN = "down"


@dataclass(frozen=True)
class ReducedState:
    theta: float
    p_theta: float
    branch: Branch

    def energy(self) -> float:
        return self.p_theta**2


def reduce(s: PhaseState, tol: float = 0.0) -> ReducedState:
    """Project a zero-momentum state to the reduced plane, forgetting ``phi``."""
    if abs(s.p_phi) > tol:
        raise ValueError(f"reduction needs p_phi = 0, got {s.p_phi}")
    return ReducedState(s.theta, s.p_theta, Branch.UP if s.p_theta >= 0 else Branch.DOWN)


@dataclass(frozen=True)
class ReducedTrajectory:
    t: np.ndarray
    theta: np.ndarray
    p_theta: np.ndarray
    branch: tuple[Branch, ...]
    period: float
    pole_times: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "theta", "p_theta", "branch"])
            for t, th, p, b in zip(self.t, self.theta, self.p_theta, self.branch):
                w.writerow([repr(float(t)), repr(float(th)), repr(float(p)), b.value])


def _shell_level(r0: ReducedState) -> float:
    c = r0.p_theta**2
    if not c > 0:
        raise ValueError("reduced state must lie on a shell with c > 0")
    return c


def _unfolded(curve: ProfileCurve, r0: ReducedState) -> float:
    """Position on the unfolded circle ``[0, 2L)``: up branch then down branch."""
    return r0.theta if r0.branch is Branch.UP else 2.0 * curve.L - r0.theta


def _fold(curve: ProfileCurve, s, speed_p: float):
    s = np.mod(s, 2.0 * curve.L)
    up = s < curve.L
    theta = np.where(up, s, 2.0 * curve.L - s)
    p = np.where(up, speed_p, -speed_p)
    return theta, p, up


def reduced_flow(curve: ProfileCurve, r0: ReducedState, T: float, samples: int = 1001) -> ReducedTrajectory:
    """Exact reduced geodesic flow on the shell ``p_theta^2 = c``.

    ``theta`` moves linearly at speed ``2 sqrt(c)`` and reflects at the
    poles, where the branch flips.  The reported period is measured as the
    spacing of successive arrivals at the south pole.
    """
    c = _shell_level(r0)
    v = 2.0 * math.sqrt(c)
    s0 = _unfolded(curve, r0)
    t = np.linspace(0.0, T, samples)
    theta, p, up = _fold(curve, s0 + v * t, math.sqrt(c))
    # unfolded position s hits the south pole at multiples of 2L
    k0 = math.ceil(s0 / (2.0 * curve.L))
    hits = (np.arange(k0, k0 + 3) * 2.0 * curve.L - s0) / v
    period = float(np.diff(hits)[0])
    branch = tuple(Branch.UP if u else Branch.DOWN for u in up)
    return ReducedTrajectory(t, theta, p, branch, period, hits[hits <= T])


def reduced_period(curve: ProfileCurve, c: float) -> float:
    if not c > 0:
        raise ValueError("c must be positive")
    return curve.L / math.sqrt(c)


def birkhoff_average(curve: ProfileCurve, f: Callable, r0: ReducedState, T: float) -> float:
    """Time average ``(1/T) int_0^T f(theta(t), p_theta(t)) dt`` along the reduced flow.

    Integrated segment by segment between pole reflections, in time.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    c = _shell_level(r0)
    v = 2.0 * math.sqrt(c)
    pc = math.sqrt(c)
    s0 = _unfolded(curve, r0)
    L = curve.L
    # breakpoints where the unfolded coordinate crosses a multiple of L
    first = math.floor(s0 / L) + 1
    last = math.floor((s0 + v * T) / L)
    cuts = [0.0] + [(k * L - s0) / v for k in range(first, last + 1)] + [T]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        mid = s0 + v * 0.5 * (a + b)
        k = math.floor(mid / L)
        if k % 2 == 0:
            base, sgn, p = s0 - k * L, 1.0, pc
        else:
            base, sgn, p = (k + 1) * L - s0, -1.0, -pc
        g = lambda t: float(f(base + sgn * v * t, p))
        total += quad(g, a, b, epsabs=1e-13, epsrel=1e-12, limit=500)[0]
    return total / T


def space_average_reduced_shell(curve: ProfileCurve, f: Callable, c: float) -> tuple[float, float]:
    """Normalized average of ``f(theta, p_theta)`` over the reduced shell and its volume.

    Each branch ``p_theta = +-sqrt(c)`` carries the density ``dtheta / (2 sqrt(c))``,
    so the volume is ``L / sqrt(c)``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    pc = math.sqrt(c)
    total = 0.0
    for p in (pc, -pc):
        total += quad(lambda th: float(f(th, p)), 0.0, curve.L, epsabs=1e-13, epsrel=1e-12, limit=500)[0]
    total /= 2.0 * pc
    vol = 2.0 * curve.L / (2.0 * pc)
    return total / vol, vol


# --------------------------------------------------------------------------
# commutation of orbit averaging and time evolution


def sample_states(curve: ProfileCurve, count: int, seed: int = 0, margin: float = 0.2, zero_momentum: bool = True):
    """Seeded states away from the poles; ``p_phi = 0`` unless told otherwise."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        th = float(rng.uniform(margin, curve.L - margin))
        ph = float(rng.uniform(0.0, TWO_PI))
        pt = float(rng.normal())
        pp = 0.0 if zero_momentum else float(rng.normal(scale=0.3)) * float(curve.radius(th))
        out.append(PhaseState(th, ph, pt, pp))
    return out


def orbit_average(a: Callable, s: PhaseState, n_phi: int = 64) -> float:
    """Average of ``a`` over the rotation orbit of ``s`` (periodic trapezoid rule)."""
    psi = np.arange(n_phi) * (TWO_PI / n_phi)
    return float(np.mean([a(s.theta, s.phi + g, s.p_theta, s.p_phi) for g in psi]))


def check_evolvred(
    curve: ProfileCurve,
    a: Callable,
    t: float,
    samples: Iterable[PhaseState],
    dt: float = 1e-3,
    n_phi: int = 64,
    scheme: str = "midpoint4",
) -> float:
    """Max over samples of ``|<a o flow_t>_G - <a>_G o flow_t|``.

    ``a(theta, phi, p_theta, p_phi)``; the left side flows every rotated copy
    of the sample, the right side flows the sample once and then averages.
    """
    worst = 0.0
    psi = np.arange(n_phi) * (TWO_PI / n_phi)
    for s in samples:
        if s.p_phi == 0.0 and _at_pole(curve, s.theta):
            raise ValueError("sample must lie in the regular stratum (off the poles)")
        lhs = 0.0
        for g in psi:
            end = integrate(curve, rotate(s, g), t, dt, scheme).final
            lhs += a(end.theta, end.phi, end.p_theta, end.p_phi)
        lhs /= n_phi
        rhs = orbit_average(a, integrate(curve, s, t, dt, scheme).final, n_phi)
        worst = max(worst, abs(lhs - rhs))
    return worst
