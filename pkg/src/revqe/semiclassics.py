"""Semiclassical bookkeeping and quantum-limit statistics.

Everything here is a fold over an immutable flattened spectrum: eigenvalue
partitions, SO(2) character families, spectral windows
``J(h) = {j : h^2 E_j in [c, c + h^beta], m_j in W_h}``, matrix elements of
multiplication operators, the integrated quantum-ergodicity statistic, the
density-one selection built from it, and the Weyl counting statistic.

Decay rates are not known a priori; every fitted slope is an engineering
diagnostic and is reported together with its R^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .geometry import ProfileCurve
from .spectral import EigenPair, FlatSpectrum, closed_form_sphere
from .specfun import ylm_radial

__all__ = [
    "CharacterFamily",
    "FamilySnapshot",
    "PartitionResult",
    "QEStatistic",
    "QuantumLimitReport",
    "SelectionResult",
    "SpectralWindow",
    "ZonalReport",
    "admissible_exponents",
    "character_family",
    "decay_fit",
    "integrated_qe_statistic",
    "limit_target",
    "matrix_element",
    "partition",
    "quantum_limit_series",
    "select_density_one",
    "spectral_window",
    "theta_density",
    "weyl_statistic",
    "zonal_mass",
    "zonal_report",
]

NORM_TOL = 1e-8
KAPPA = 1  # principal orbit dimension for SO(2) acting on a surface


# --------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class PartitionResult:
    """Partition of a finite prefix ``a_1..a_n``; indices are 1-based.

    ``P[j-1]`` is ``P(j)``.  Indices after the last ``j_k`` are assigned to
    it, since the prefix holds no later block start.
    """

    beta: float
    jk: tuple[int, ...]
    P: tuple[int, ...]

    def block_of(self, j: int) -> int:
        return self.P[j - 1]


def partition(a: Sequence[float], beta: float) -> PartitionResult:
    """Partition of order ``beta`` of a nondecreasing positive sequence.

    Block starts follow ``j_1 = 1`` and ``j_{k+1} = min{j : a_{j_k}(1 + a_{j_k}^{-beta/2}) < a_j}``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("need a nonempty 1-d sequence")
    if not beta > 0:
        raise ValueError("order beta must be positive")
    if np.any(a <= 0):
        raise ValueError("sequence entries must be positive")
    if np.any(np.diff(a) < 0):
        raise ValueError("sequence must be nondecreasing")
    starts = [0]
    while True:
        ak = a[starts[-1]]
        nxt = np.flatnonzero(a > ak * (1.0 + ak ** (-beta / 2.0)))
        nxt = nxt[nxt > starts[-1]]
        if nxt.size == 0:
            break
        starts.append(int(nxt[0]))
    P = np.empty(a.size, dtype=int)
    bounds = starts + [a.size]
    for s, e in zip(bounds[:-1], bounds[1:]):
        P[s:e] = s + 1
    return PartitionResult(float(beta), tuple(s + 1 for s in starts), tuple(int(p) for p in P))


# --------------------------------------------------------------------------
# character families and exponents


@dataclass(frozen=True)
class CharacterFamily:
    """SO(2) characters ``{k : |k| <= h^-vartheta}``, or a fixed set.

    A fixed family (``fixed`` given) has growth rate 0 in the sense that
    its size does not depend on ``h``.
    """

    vartheta: float = 0.0
    fixed: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.vartheta < 0:
            raise ValueError("growth rate vartheta must be >= 0")
        if self.fixed is not None:
            object.__setattr__(self, "fixed", tuple(sorted(set(int(k) for k in self.fixed))))
            if not self.fixed:
                raise ValueError("fixed character family must be nonempty")

    @classmethod
    def of(cls, members: Iterable[int]) -> "CharacterFamily":
        return cls(0.0, tuple(members))

    def bound(self, h: float) -> int:
        # nudge absorbs h**-t landing a few ulps below an integer
        return int(math.floor(h ** (-self.vartheta) * (1.0 + 1e-12)))

    def members(self, h: float) -> tuple[int, ...]:
        if self.fixed is not None:
            return self.fixed
        b = self.bound(h)
        return tuple(range(-b, b + 1))

    def cardinality(self, h: float) -> int:
        return len(self.members(h))

    @property
    def growth(self) -> float:
        return 0.0 if self.fixed is not None else self.vartheta

    @property
    def admissible(self) -> bool:
        return self.growth < 1.0 / (2 * KAPPA + 3)


@dataclass(frozen=True)
class FamilySnapshot:
    vartheta: float
    h: float
    members: tuple[int, ...]
    admissible: bool

    @property
    def cardinality(self) -> int:
        return len(self.members)


def character_family(vartheta: float, h: float) -> FamilySnapshot:
    """Members of the growth-``vartheta`` family at ``h`` plus admissibility."""
    if not 0.0 < h <= 1.0:
        raise ValueError("h must lie in (0, 1]")
    fam = CharacterFamily(vartheta)
    return FamilySnapshot(float(vartheta), float(h), fam.members(h), fam.admissible)


def admissible_exponents(vartheta: float, kappa: int = KAPPA) -> tuple[float, float]:
    """Open interval of partition orders ``beta`` allowed at growth ``vartheta``."""
    top = (1.0 - (2 * kappa + 3) * vartheta) / (2 * kappa + 4)
    if vartheta < 0 or top <= 0:
        raise ValueError(f"no admissible beta for vartheta={vartheta} (need vartheta < 1/{2 * kappa + 3})")
    return (0.0, top)


# --------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class SpectralWindow:
    c: float
    beta: float
    h: float
    members: tuple[int, ...]
    J: np.ndarray
    spectrum: FlatSpectrum = field(repr=False)

    @property
    def empty(self) -> bool:
        return self.J.size == 0

    def __len__(self) -> int:
        return self.J.size

    def l_labels(self) -> np.ndarray:
        return self.spectrum.l_label[self.J]

    def modes(self) -> np.ndarray:
        return self.spectrum.m[self.J]


def _energy_bounds(c: float, beta: float, h: float) -> tuple[float, float]:
    return c / (h * h), (c + h**beta) / (h * h)


def spectral_window(
    spectrum: FlatSpectrum, c: float, beta: float, h: float, family: CharacterFamily
) -> SpectralWindow:
    """Flattened indices ``j`` with ``h^2 E_j in [c, c + h^beta]`` and ``m_j`` in the family."""
    if not c > 0:
        raise ValueError("energy level c must be positive")
    lo, hi = _energy_bounds(c, beta, h)
    tol = 1e-12
    members = family.members(h)
    E = spectrum.E
    mask = (E >= lo * (1 - tol)) & (E <= hi * (1 + tol)) & np.isin(spectrum.m, members)
    return SpectralWindow(float(c), float(beta), float(h), members, np.flatnonzero(mask), spectrum)


# --------------------------------------------------------------------------
# matrix elements and limits


def matrix_element(pair: EigenPair, a: Callable, curve: ProfileCurve | None = None) -> float:
    """``2 pi int a(theta) f(theta)^2 R(theta) dtheta`` in the pair's own quadrature.

    ``curve`` is accepted for symmetry with :func:`limit_target`; the radial
    weight is already folded into ``pair.weights``.
    """
    n2 = pair.norm_sq()
    if abs(n2 - 1.0) > NORM_TOL:
        raise ValueError(f"eigenpair is not normalized (norm^2 = {n2})")
    vals = np.broadcast_to(np.asarray(a(pair.theta), dtype=float), pair.theta.shape)
    return 2.0 * math.pi * float(np.sum(pair.weights * vals * pair.f * pair.f))


def limit_target(curve: ProfileCurve, a: Callable) -> float:
    """Predicted quantum limit ``(1/L) int_0^L a(theta) dtheta``."""
    val = quad(lambda t: float(a(t)), 0.0, curve.L, epsabs=1e-13, epsrel=1e-12, limit=500)[0]
    return val / curve.L


def decay_fit(x, y) -> tuple[float, float]:
    """OLS slope and R^2 of ``log y`` against ``log x``.

    Returns ``(nan, nan)`` when any ``y`` is zero or negative: such a
    series has no log-linear trend to report.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2 or np.any(y <= 0) or not np.all(np.isfinite(y)):
        return float("nan"), float("nan")
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ly - slope * lx - icpt) ** 2)) / ss_tot if ss_tot > 0 else float("nan")
    return float(slope), r2


@dataclass(frozen=True)
class QuantumLimitReport:
    test_function: str
    m: int
    l_values: np.ndarray
    mu: np.ndarray
    target: float
    deviations: np.ndarray
    slope: float
    r2: float

    def deviation_at(self, l: int) -> float:
        return float(self.deviations[list(self.l_values).index(l)])

    def summary(self) -> dict:
        return {
            "test_function": self.test_function,
            "m": self.m,
            "target": self.target,
            "l_range": [int(self.l_values[0]), int(self.l_values[-1])],
            "max_deviation": float(np.max(self.deviations)),
            "slope": self.slope,
            "r2": self.r2,
            "slope_note": "engineering diagnostic; no rate is asserted by the theory",
        }


def quantum_limit_series(
    a: Callable,
    m: int,
    l_values: Iterable[int],
    curve: ProfileCurve,
    pairs: Callable[[int, int], EigenPair] | None = None,
    name: str = "a",
) -> QuantumLimitReport:
    """Matrix elements ``mu_{l,m}[a]`` along a sequence of degrees.

    ``pairs(l, m)`` supplies eigenpairs; the default is the closed-form
    round-sphere backend.
    """
    pairs = pairs or closed_form_sphere
    ls = np.array(sorted(set(int(l) for l in l_values)))
    alpha = limit_target(curve, a)
    mu = np.array([matrix_element(pairs(int(l), m), a, curve) for l in ls])
    dev = np.abs(mu - alpha)
    slope, r2 = decay_fit(ls, dev)
    return QuantumLimitReport(name, int(m), ls, mu, alpha, dev, slope, r2)


# --------------------------------------------------------------------------
# integrated statistic and selection


@dataclass(frozen=True)
class SelectionResult:
    Lambda: np.ndarray
    Gamma: np.ndarray
    threshold: float

    @property
    def density_ratio(self) -> float:
        total = self.Lambda.size + self.Gamma.size
        return self.Lambda.size / total if total else float("nan")


def select_density_one(window: SpectralWindow, deviations, r: float) -> SelectionResult:
    """Split ``J(h)`` into ``Gamma = {|mu_j - alpha|^2 >= sqrt(r)}`` and ``Lambda = J - Gamma``."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    dev = np.asarray(deviations, dtype=float)
    if dev.shape != window.J.shape:
        raise ValueError("need one deviation per window member")
    thr = math.sqrt(r)
    bad = dev * dev >= thr
    return SelectionResult(window.J[~bad], window.J[bad], thr)


@dataclass(frozen=True)
class QEStatistic:
    """``S(h)`` and the ingredients it is built from, one entry per ``h``."""

    test_function: str
    h: np.ndarray
    S: np.ndarray
    window_sizes: np.ndarray
    family_sizes: np.ndarray
    density_ratios: np.ndarray
    windows: tuple = field(repr=False, default=())
    deviations: tuple = field(repr=False, default=())


def _window_deviations(window: SpectralWindow, a: Callable, alpha: float, curve) -> np.ndarray:
    pairs = window.spectrum.pairs(window.J)
    return np.array([abs(matrix_element(p, a, curve) - alpha) for p in pairs])


def integrated_qe_statistic(
    spectrum: FlatSpectrum,
    a: Callable,
    c: float,
    beta: float,
    family: CharacterFamily,
    h_list: Iterable[float],
    curve: ProfileCurve,
    name: str = "a",
) -> QEStatistic:
    """``S(h) = h^{1-beta} / #W_h * sum_{j in J(h)} |mu_j[a] - alpha|^2``.

    Each ``h`` also gets the density-one split with ``r(h) = S(h)``.
    """
    hs = np.array(sorted(float(h) for h in h_list))
    alpha = limit_target(curve, a)
    E_max = float(np.max(spectrum.E))
    S, nJ, nW, ratio, wins, devs = [], [], [], [], [], []
    for h in hs[::-1]:
        if _energy_bounds(c, beta, h)[1] > E_max:
            raise ValueError(
                f"window resolution insufficient at h={h:g}: spectrum stops at E={E_max:g}, "
                f"window reaches {_energy_bounds(c, beta, h)[1]:g}"
            )
        win = spectral_window(spectrum, c, beta, h, family)
        dev = _window_deviations(win, a, alpha, curve)
        w = family.cardinality(h)
        s = h ** (1.0 - beta) / w * float(np.sum(dev * dev))
        sel = select_density_one(win, dev, s)
        S.append(s)
        nJ.append(len(win))
        nW.append(w)
        ratio.append(sel.density_ratio)
        wins.append(win)
        devs.append(dev)
    rev = slice(None, None, -1)
    return QEStatistic(
        name,
        hs,
        np.array(S[rev]),
        np.array(nJ[rev]),
        np.array(nW[rev]),
        np.array(ratio[rev]),
        tuple(wins[rev]),
        tuple(devs[rev]),
    )


def weyl_statistic(
    spectrum: FlatSpectrum, c: float, beta: float, family: CharacterFamily, h: float, curve: ProfileCurve
) -> tuple[float, float]:
    """Counting statistic ``2 pi h^{1-beta} #J(h) / #W_h`` and ``vol`` of the reduced shell."""
    from .dynamics import space_average_reduced_shell

    win = spectral_window(spectrum, c, beta, h, family)
    if win.empty:
        raise ValueError(f"empty spectral window at h={h:g}")
    stat = 2.0 * math.pi * h ** (1.0 - beta) * len(win) / family.cardinality(h)
    _, vol = space_average_reduced_shell(curve, lambda t, p: 1.0, c)
    return stat, vol


# --------------------------------------------------------------------------
# invariant densities and zonal concentration


class ThetaDensity:
    """Orbit-averaged density ``|f(theta)|^2`` of an eigenfunction."""

    def __init__(self, pair: EigenPair):
        self.pair = pair
        self.values = pair.f * pair.f
        self._spline = CubicSpline(pair.theta, pair.f)

    def __call__(self, theta):
        return self._spline(theta) ** 2

    def total_mass(self) -> float:
        return 2.0 * math.pi * float(np.sum(self.pair.weights * self.values))

    def argmax(self) -> float:
        return float(self.pair.theta[int(np.argmax(self.values))])


def theta_density(pair: EigenPair) -> ThetaDensity:
    n2 = pair.norm_sq()
    if abs(n2 - 1.0) > NORM_TOL:
        raise ValueError(f"eigenpair is not normalized (norm^2 = {n2})")
    return ThetaDensity(pair)


def zonal_mass(l: int, epsilon: float) -> float:
    """Mass of ``|Y_{l,l}|^2`` outside the band ``|theta - pi/2| <= epsilon``."""
    if not 0.0 < epsilon < math.pi / 2:
        raise ValueError("epsilon must lie in (0, pi/2)")
    g = lambda t: 2.0 * math.pi * float(ylm_radial(l, l, t)) ** 2 * math.sin(t)
    # symmetric about the equator
    half = quad(g, 0.0, math.pi / 2 - epsilon, epsabs=0.0, epsrel=1e-12, limit=500)[0]
    return 2.0 * half


@dataclass(frozen=True)
class ZonalReport:
    epsilon: float
    l_values: np.ndarray
    masses: np.ndarray
    slope: float
    r2: float

    @property
    def rate(self) -> float:
        """Fitted ``c(epsilon)`` in ``mass ~ exp(-c l)``."""
        return -self.slope


def zonal_report(l_values: Iterable[int], epsilon: float) -> ZonalReport:
    """Outside-band masses and a fit of ``log mass`` against ``l``."""
    ls = np.array(sorted(set(int(l) for l in l_values)))
    masses = np.array([zonal_mass(int(l), epsilon) for l in ls])
    y = np.log(masses)
    slope, icpt = np.polyfit(ls, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - slope * ls - icpt) ** 2)) / ss_tot if ss_tot > 0 else float("nan")
    return ZonalReport(float(epsilon), ls, masses, float(slope), r2)
