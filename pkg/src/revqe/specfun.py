"""Spherical-harmonic backend for the round sphere.

Associated Legendre functions use the Condon-Shortley convention

    P_{l,m}(x) = (-1)^m / (2^l l!) (1 - x^2)^{m/2} d^{l+m}/dx^{l+m} (x^2 - 1)^l,

and are evaluated through the fully normalized upward recurrence in ``l``
started from ``P_{m,m}``.  Normalization constants are carried in log space
so that nothing overflows for ``l`` in the thousands.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

__all__ = [
    "AsymptoticFitReport",
    "asymptotic_residual_scan",
    "legendre_assoc",
    "legendre_asymptotic_main",
    "legendre_scaled",
    "log_factorial_ratio",
    "normalized_legendre_table",
    "ylm_radial",
]

_LOG_4PI = math.log(4.0 * math.pi)


def log_factorial_ratio(l: int, m: int) -> float:
    """log((l - m)! / (l + m)!) via log-gamma."""
    return float(gammaln(l - m + 1) - gammaln(l + m + 1))


def _check_lm(l: int, m: int) -> None:
    if l < 0:
        raise ValueError(f"degree l must be >= 0, got {l}")
    if abs(m) > l:
        raise ValueError(f"order |m| must not exceed l (l={l}, m={m})")


def _seed_mm(m: int, x: np.ndarray) -> np.ndarray:
    """Normalized Ybar_{m,m}(x), including the (-1)^m phase."""
    # log of sqrt((2m+1)/(4pi) * (2m)! / (2^m m!)^2)
    log_c = 0.5 * (
        math.log(2 * m + 1) - _LOG_4PI + gammaln(2 * m + 1) - 2.0 * (m * math.log(2.0) + gammaln(m + 1))
    )
    if m == 0:
        val = np.full(x.shape, math.exp(log_c))
    else:
        s2 = np.clip(1.0 - x * x, 0.0, None)
        with np.errstate(divide="ignore"):
            val = np.exp(log_c + 0.5 * m * np.log(s2))
    return -val if m % 2 else val


def normalized_legendre_rows(lmax: int, m: int, x):
    """Yield ``(l, Ybar_{l,m}(x))`` for ``l = |m| .. lmax`` holding two rows at a time."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    am = abs(m)
    _check_lm(lmax, am)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("argument x must lie in [-1, 1]")
    sign = -1.0 if (m < 0 and am % 2) else 1.0
    prev2 = _seed_mm(am, x)
    yield am, sign * prev2
    if lmax == am:
        return
    prev = math.sqrt(2 * am + 3) * x * prev2
    yield am + 1, sign * prev
    for l in range(am + 2, lmax + 1):
        a = math.sqrt((4.0 * l * l - 1.0) / (l * l - am * am))
        b = math.sqrt(((l - 1.0) ** 2 - am * am) / (4.0 * (l - 1.0) ** 2 - 1.0))
        prev2, prev = prev, a * (x * prev - b * prev2)
        yield l, sign * prev


def normalized_legendre_table(lmax: int, m: int, x) -> np.ndarray:
    """Rows ``Ybar_{l,m}(x)`` for ``l = |m| .. lmax``.

    ``Ybar_{l,m} = sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) P_{l,m}`` so that
    ``2 pi int_{-1}^{1} Ybar^2 dx = 1``.  Negative ``m`` is reflected through
    ``P_{l,-m} = (-1)^m (l-m)!/(l+m)! P_{l,m}``, which for the normalized
    functions is just the sign ``(-1)^m``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    am = abs(m)
    _check_lm(lmax, am)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("argument x must lie in [-1, 1]")
    out = np.empty((lmax - am + 1, x.size))
    out[0] = _seed_mm(am, x)
    if lmax > am:
        out[1] = math.sqrt(2 * am + 3) * x * out[0]
    for i, l in enumerate(range(am + 2, lmax + 1), start=2):
        a = math.sqrt((4.0 * l * l - 1.0) / (l * l - am * am))
        b = math.sqrt(((l - 1.0) ** 2 - am * am) / (4.0 * (l - 1.0) ** 2 - 1.0))
        out[i] = a * (x * out[i - 1] - b * out[i - 2])
    if m < 0 and am % 2:
        out = -out
    return out


def _log_norm(l: int, m: int) -> float:
    return 0.5 * (math.log(2 * l + 1) - _LOG_4PI + log_factorial_ratio(l, m))


def legendre_assoc(l: int, m: int, x):
    """Associated Legendre function ``P_{l,m}(x)``, Condon-Shortley phase.

    Parameters
    ----------
    l, m : int
        Degree and order with ``0 <= m <= l``.
    x : float or array_like
        Points in ``[-1, 1]``.
    """
    if m < 0:
        raise ValueError("legendre_assoc takes m >= 0; use ylm_radial for negative orders")
    _check_lm(l, m)
    xa = np.asarray(x, dtype=float)
    row = normalized_legendre_table(l, m, xa.ravel())[-1]
    val = row * math.exp(-_log_norm(l, m))
    return float(val[0]) if xa.ndim == 0 else val.reshape(xa.shape)


def legendre_scaled(l: int, m: int, x):
    """``l^{-m} P_{l,m}(x)`` evaluated without forming ``P_{l,m}``."""
    _check_lm(l, m)
    if l == 0:
        return legendre_assoc(0, 0, x)
    xa = np.asarray(x, dtype=float)
    row = normalized_legendre_table(l, m, xa.ravel())[-1]
    val = row * math.exp(-_log_norm(l, m) - m * math.log(l))
    return float(val[0]) if xa.ndim == 0 else val.reshape(xa.shape)


def ylm_radial(l: int, m: int, theta):
    """Colatitude factor of ``Y_{l,m}``.

    ``sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) P_{l,m}(cos theta)``, normalized so
    that ``2 pi int_0^pi ylm_radial^2 sin(theta) dtheta = 1``.
    """
    _check_lm(l, m)
    th = np.asarray(theta, dtype=float)
    if np.any((th < 0.0) | (th > math.pi)):
        raise ValueError("theta must lie in [0, pi]")
    row = normalized_legendre_table(l, m, np.cos(th.ravel()))[-1]
    return float(row[0]) if th.ndim == 0 else row.reshape(th.shape)


def legendre_asymptotic_main(l: int, m: int, theta):
    """Leading term of the large-``l`` expansion of ``l^{-m} P_{l,m}(cos theta)``.

    ``sqrt(2 / (l pi sin theta)) cos((l + 1/2) theta - pi/4 + m pi/2)``.
    """
    if l < 1:
        raise ValueError("asymptotic form needs l >= 1")
    th = np.asarray(theta, dtype=float)
    if np.any((th <= 0.0) | (th >= math.pi)):
        raise ValueError("theta must be strictly inside (0, pi)")
    val = np.sqrt(2.0 / (l * math.pi * np.sin(th))) * np.cos((l + 0.5) * th - math.pi / 4 + m * math.pi / 2)
    return float(val) if th.ndim == 0 else val


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line; returns (slope, intercept, r2)."""
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else float("nan")
    return float(slope), float(intercept), r2


@dataclass(frozen=True)
class AsymptoticFitReport:
    l_values: np.ndarray
    m: int
    epsilon: float
    residuals: np.ndarray
    fitted_slope: float
    fit_r2: float
    intercept: float = field(default=0.0)

    @property
    def l_range(self) -> tuple[int, int]:
        return int(self.l_values[0]), int(self.l_values[-1])

    def summary(self) -> dict:
        return {
            "m": self.m,
            "epsilon": self.epsilon,
            "l_range": list(self.l_range),
            "slope": self.fitted_slope,
            "r2": self.fit_r2,
        }

    def write(self, out_dir, stem: str = "legendre") -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / f"{stem}_residuals.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["l", "sup_residual"])
            for l, r in zip(self.l_values, self.residuals):
                w.writerow([int(l), repr(float(r))])
        with open(out_dir / f"{stem}_fit.json", "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def asymptotic_residual_scan(l_range, m: int, epsilon: float, n_theta: int = 2001) -> AsymptoticFitReport:
    """Sup-norm residual of the leading asymptotic term over ``(eps, pi - eps)``.

    For each ``l`` in ``l_range`` (a ``(lmin, lmax)`` pair or an explicit
    iterable of degrees) the residual ``|l^{-m} P_{l,m}(cos t) - main(t)|``
    is maximized over a uniform grid, then ``log residual`` is regressed on
    ``log l``.  A healthy scan has slope near -3/2.
    """
    if not 0.0 < epsilon < math.pi / 2:
        raise ValueError("epsilon must lie in (0, pi/2)")
    if isinstance(l_range, tuple) and len(l_range) == 2:
        ls = np.arange(int(l_range[0]), int(l_range[1]) + 1)
    else:
        ls = np.asarray(sorted(set(int(v) for v in l_range)))
    if ls.size == 0:
        raise ValueError("empty l range")
    if ls[0] < m + 1:
        raise ValueError("l range must start at m + 1 or later")
    theta = np.linspace(epsilon, math.pi - epsilon, n_theta)
    table = normalized_legendre_table(int(ls[-1]), m, np.cos(theta))
    res = np.empty(ls.size)
    for i, l in enumerate(ls):
        scale = math.exp(-_log_norm(int(l), m) - m * math.log(l))
        scaled = table[l - m] * scale
        res[i] = np.max(np.abs(scaled - legendre_asymptotic_main(int(l), m, theta)))
    slope, intercept, r2 = _ols(np.log(ls), np.log(res))
    return AsymptoticFitReport(ls, m, float(epsilon), res, slope, r2, intercept)
