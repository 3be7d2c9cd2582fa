"""Laplace-Beltrami spectrum on a surface of revolution.

Separating ``u = f(theta) e^{i m phi}`` turns ``-Delta u = E u`` into the
singular Sturm-Liouville problem

    -(R f')' + (m^2 / R) f = E R f   on (0, L).

It is discretized by second-order finite differences in flux form on the
uniform arc-length grid, which gives a symmetric tridiagonal stiffness and a
positive diagonal mass, and solved as a symmetric tridiagonal eigenproblem
after diagonal scaling.  Eigenfunctions are normalized in the discrete mass
inner product, ``2 pi sum_i w_i f_i^2 = 1``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .geometry import ProfileCurve, resample
from .specfun import normalized_legendre_rows, ylm_radial

__all__ = [
    "EigenPair",
    "FlatSpectrum",
    "ModeProblem",
    "ModeSpectrum",
    "NumericalFailure",
    "assemble_mode",
    "closed_form_pairs",
    "closed_form_sphere",
    "closed_form_spectrum",
    "flatten_spectra",
    "simpson_weights",
    "solve_mode",
    "solve_modes",
]


class NumericalFailure(RuntimeError):
    """An eigensolve or integrator did not produce a trustworthy answer."""


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights on ``n`` (even) uniform intervals of width ``h``."""
    if n % 2:
        raise ValueError("Simpson's rule needs an even number of intervals")
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * h / 3.0


@dataclass(frozen=True, eq=False)
class ModeProblem:
    """Discrete operator for one angular mode.

    ``diag``/``off`` are the stiffness bands on the active nodes ``nodes``
    (indices into ``curve.theta``); ``mass`` is the diagonal weight, already
    divided by the grid step so that ``K f = E M f`` is the scaled system.
    """

    curve: ProfileCurve
    m: int
    nodes: np.ndarray
    diag: np.ndarray
    off: np.ndarray
    mass: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def N(self) -> int:
        return self.curve.n_intervals

    def stiffness_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def quadrature_weights(self) -> np.ndarray:
        """Weights ``w`` on the full grid with ``sum w g ~ int g R dtheta``."""
        w = np.zeros(self.curve.theta.size)
        w[self.nodes] = self.mass * self.curve.step
        return w


def assemble_mode(curve: ProfileCurve, m: int, N: int | None = None) -> ModeProblem:
    """Assemble the symmetric tridiagonal pencil for mode ``m``.

    ``m = 0`` keeps both pole nodes with a reflection (ghost-node) Neumann
    closure and a half-cell mass there; ``m != 0`` drops the pole rows, which
    imposes ``f = 0`` at both poles.
    """
    if N is not None:
        if N < 64:
            raise ValueError(f"grid size N must be >= 64, got {N}")
        curve = resample(curve, N)
    elif curve.n_intervals < 64:
        raise ValueError(f"grid size N must be >= 64, got {curve.n_intervals}")
    n, h, th = curve.n_intervals, curve.step, curve.theta
    if np.any(curve.R[1:-1] <= 0):
        raise ValueError("radius vanishes at an interior node")
    Rf = np.asarray(curve.radius(0.5 * (th[:-1] + th[1:])), dtype=float)
    if m == 0:
        nodes = np.arange(n + 1)
        diag = np.zeros(n + 1)
        diag[:-1] += Rf
        diag[1:] += Rf
        off = -Rf.copy()
        mass = curve.R.copy()
        r = lambda t: float(curve.radius(t))
        mass[0] = quad(r, 0.0, 0.5 * h, epsabs=1e-15)[0] / h
        mass[-1] = quad(r, curve.L - 0.5 * h, curve.L, epsabs=1e-15)[0] / h
    else:
        nodes = np.arange(1, n)
        diag = Rf[:-1] + Rf[1:] + (m * m) * h * h / curve.R[1:-1]
        off = -Rf[1:-1].copy()
        mass = curve.R[1:-1].copy()
    diag = diag / (h * h)
    off = off / (h * h)
    return ModeProblem(curve, int(m), nodes, diag, off, mass)


@dataclass(frozen=True, eq=False)
class EigenPair:
    """One separated eigenfunction ``f(theta) e^{i m phi}``.

    ``weights`` are the quadrature weights for ``R dtheta`` on ``theta`` in
    which ``f`` is normalized.
    """

    m: int
    k: int
    E: float
    theta: np.ndarray
    f: np.ndarray
    weights: np.ndarray
    l_label: int | None = None

    def inner(self, other: "EigenPair") -> float:
        return 2.0 * math.pi * float(np.sum(self.weights * self.f * other.f))

    def norm_sq(self) -> float:
        return self.inner(self)

    def sign_changes(self) -> int:
        v = self.f[np.abs(self.f) > 1e-12 * np.max(np.abs(self.f))]
        return int(np.count_nonzero(np.diff(np.sign(v))))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theta", "f"])
            for t, v in zip(self.theta, self.f):
                w.writerow([repr(float(t)), repr(float(v))])


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    m: int
    pairs: list[EigenPair] = field(default_factory=list)

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.E for p in self.pairs])

    def gram(self) -> np.ndarray:
        F = np.array([p.f for p in self.pairs])
        w = self.pairs[0].weights
        return 2.0 * math.pi * (F * w) @ F.T

    def mirrored(self) -> "ModeSpectrum":
        """The spectrum of mode ``-m`` (same radial problem)."""
        pairs = [
            EigenPair(-p.m, p.k, p.E, p.theta, p.f, p.weights, p.l_label) for p in self.pairs
        ]
        return ModeSpectrum(-self.m, pairs)


def _fix_sign(f: np.ndarray) -> np.ndarray:
    big = np.flatnonzero(np.abs(f) > 1e-8 * np.max(np.abs(f)))
    return -f if big.size and f[big[0]] < 0 else f


def solve_mode(problem: ModeProblem, count: int) -> ModeSpectrum:
    """Lowest ``count`` eigenpairs of ``problem``, nondecreasing in ``E``."""
    if count < 1:
        raise ValueError("count must be positive")
    if count > problem.N // 4:
        raise ValueError(f"resolution guard: count={count} exceeds N/4={problem.N // 4}")
    s = 1.0 / np.sqrt(problem.mass)
    try:
        E, V = eigh_tridiagonal(
            problem.diag * s * s,
            problem.off * s[:-1] * s[1:],
            select="i",
            select_range=(0, count - 1),
        )
    except LinAlgError as exc:
        raise NumericalFailure(f"tridiagonal eigensolve failed for m={problem.m}") from exc
    curve = problem.curve
    w = problem.quadrature_weights()
    # bisection resolves eigenvalues only to a few ulps of the matrix norm
    snap = 64 * np.finfo(float).eps * float(np.max(np.abs(problem.diag * s * s)) + 2 * np.max(np.abs(problem.off * s[:-1] * s[1:]), initial=0.0))
    round_sphere = curve.name == "round_sphere"
    pairs = []
    for k in range(count):
        f = np.zeros(curve.theta.size)
        f[problem.nodes] = V[:, k] * s
        f = _fix_sign(f)
        f /= math.sqrt(2.0 * math.pi * np.sum(w * f * f))
        label = abs(problem.m) + k if round_sphere else None
        e = float(E[k])
        if problem.m == 0 and k == 0 and abs(e) < snap:
            e = 0.0
        pairs.append(EigenPair(problem.m, k, e, curve.theta, f, w, label))
    return ModeSpectrum(problem.m, pairs)


def solve_modes(
    curve: ProfileCurve, modes, count: int, N: int | None = None, workers: int | None = None
) -> dict[int, ModeSpectrum]:
    """Solve several modes; negative modes reuse the ``|m|`` solve."""
    modes = sorted(set(int(m) for m in modes), key=lambda m: (abs(m), m))
    absm = sorted(set(abs(m) for m in modes))

    def one(m):
        return solve_mode(assemble_mode(curve, m, N), count)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        solved = dict(zip(absm, pool.map(one, absm)))
    return {m: (solved[m] if m >= 0 else solved[-m].mirrored()) for m in modes}


def _sphere_grid(l: int, n: int | None) -> int:
    if n is None:
        n = max(4000, 80 * (l + 1))
    return n + (n % 2)


def closed_form_sphere(l: int, m: int, n: int | None = None) -> EigenPair:
    """Exact round-sphere eigenpair ``E = l(l+1)``, ``f = ylm_radial(l, m, .)``.

    The profile is sampled on ``n`` uniform intervals of ``[0, pi]`` with
    Simpson weights, and shares the sign convention of :func:`solve_mode`.
    The analytic normalization is corrected by the (tiny) quadrature defect
    so that matrix elements of constants are exactly 1.
    """
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l (l={l}, m={m})")
    n = _sphere_grid(l, n)
    theta = np.linspace(0.0, math.pi, n + 1)
    w = simpson_weights(n, math.pi / n) * np.sin(theta)
    w[0] = w[-1] = 0.0
    return _sphere_pair(l, m, theta, np.asarray(ylm_radial(l, m, theta)), w)


def _sphere_pair(l, m, theta, f, w) -> EigenPair:
    f = _fix_sign(f)
    f = f / math.sqrt(2.0 * math.pi * np.sum(w * f * f))
    return EigenPair(m, l - abs(m), float(l * (l + 1)), theta, f, w, l)


def closed_form_pairs(requests, n: int | None = None) -> dict[tuple[int, int], EigenPair]:
    """Many closed-form pairs ``(l, m)`` on one shared grid.

    One upward recurrence per order ``m`` serves every requested degree.
    """
    requests = sorted(set((int(l), int(m)) for l, m in requests))
    if not requests:
        return {}
    n = _sphere_grid(max(l for l, _ in requests), n)
    theta = np.linspace(0.0, math.pi, n + 1)
    w = simpson_weights(n, math.pi / n) * np.sin(theta)
    w[0] = w[-1] = 0.0
    x = np.cos(theta)
    out = {}
    for m in sorted(set(m for _, m in requests)):
        want = {l for l, mm in requests if mm == m}
        for l, row in normalized_legendre_rows(max(want), m, x):
            if l in want:
                out[(l, m)] = _sphere_pair(l, m, theta, row, w)
    return out


@dataclass(frozen=True, eq=False)
class FlatSpectrum:
    """Eigenpairs flattened into one sequence.

    Order: nondecreasing ``E``, ties broken by ``(|m|, sign m, k)``.  Pairs
    are built lazily through ``loader(m, k)`` so that large closed-form
    spectra cost nothing until a matrix element is requested.
    """

    E: np.ndarray
    m: np.ndarray
    k: np.ndarray
    l_label: np.ndarray
    loader: object = field(repr=False, default=None)
    bulk_loader: object = field(repr=False, default=None)

    def __len__(self) -> int:
        return self.E.size

    def pair(self, j: int) -> EigenPair:
        return self.loader(int(self.m[j]), int(self.k[j]))

    def pairs(self, indices) -> list[EigenPair]:
        keys = [(int(self.m[j]), int(self.k[j])) for j in indices]
        if self.bulk_loader is None:
            return [self.loader(*key) for key in keys]
        got = self.bulk_loader(keys)
        return [got[key] for key in keys]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["m", "k", "l_label", "E"])
            for m, k, l, e in zip(self.m, self.k, self.l_label, self.E):
                w.writerow([int(m), int(k), "" if l < 0 else int(l), repr(float(e))])


def _sorted_flat(E, m, k, l, loader, bulk=None) -> FlatSpectrum:
    E, m, k, l = (np.asarray(a) for a in (E, m, k, l))
    order = np.lexsort((k, np.sign(m), np.abs(m), E))
    return FlatSpectrum(
        E[order].astype(float), m[order].astype(int), k[order].astype(int), l[order].astype(int), loader, bulk
    )


def flatten_spectra(spectra: dict[int, ModeSpectrum]) -> FlatSpectrum:
    """Flatten numerically solved modes (missing labels stored as -1)."""
    rows = [
        (p.E, p.m, p.k, -1 if p.l_label is None else p.l_label)
        for ms in spectra.values()
        for p in ms.pairs
    ]
    lookup = {(p.m, p.k): p for ms in spectra.values() for p in ms.pairs}
    E, m, k, l = zip(*rows)
    return _sorted_flat(E, m, k, l, lambda mm, kk: lookup[(mm, kk)])


def closed_form_spectrum(lmax: int, modes=None, n: int | None = None) -> FlatSpectrum:
    """Round-sphere spectrum ``l <= lmax`` restricted to ``modes`` (all if None)."""
    rows = []
    for l in range(lmax + 1):
        ms = range(-l, l + 1) if modes is None else [mm for mm in modes if abs(mm) <= l]
        rows.extend((l * (l + 1), mm, l - abs(mm), l) for mm in ms)
    if not rows:
        raise ValueError("no eigenpairs below lmax for the requested modes")
    E, m, k, l = zip(*rows)

    def bulk(keys):
        got = closed_form_pairs([(abs(mm) + kk, mm) for mm, kk in keys], n)
        return {(mm, kk): got[(abs(mm) + kk, mm)] for mm, kk in keys}

    return _sorted_flat(E, m, k, l, lambda mm, kk: closed_form_sphere(abs(mm) + kk, mm, n), bulk)
