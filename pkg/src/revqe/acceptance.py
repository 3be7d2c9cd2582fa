"""Exit criteria for the laboratory, runnable from pytest or ``revqe verify``.

Every check returns a :class:`Check` with the measured numbers, so a red
result shows by how much it missed.  Tolerances are fixed here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from .geometry import SurfaceSpec, build_profile
from .semiclassics import (
    CharacterFamily,
    integrated_qe_statistic,
    limit_target,
    matrix_element,
    partition,
    quantum_limit_series,
    weyl_statistic,
    zonal_report,
)
from .spectral import assemble_mode, closed_form_sphere, closed_form_spectrum, solve_mode, solve_modes
from .specfun import asymptotic_residual_scan


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}"


def _sphere(n=4000):
    return build_profile(SurfaceSpec.round_sphere(n))


def _ellipsoid(n=4000):
    return build_profile(SurfaceSpec.ellipsoid(2.0, n))


def check_partition() -> Check:
    j = np.arange(1, 41)
    res = partition(j * (j + 1.0), 1.0 / 6.0)
    jk, P = list(res.jk[:7]), list(res.P[:10])
    ok = jk == [1, 2, 3, 5, 7, 10, 14] and P == [1, 2, 3, 3, 5, 5, 7, 7, 7, 10]
    return Check(1, "partition golden sequence", ok, {"jk": jk, "P": P})


def _sphere_mode_errors(n: int, m: int, count: int = 20):
    ms = solve_mode(assemble_mode(_sphere(n), m), count)
    l = np.arange(abs(m), abs(m) + count)
    exact = l * (l + 1.0)
    E = ms.energies
    rel = np.where(exact > 0, np.abs(E - exact) / np.where(exact > 0, exact, 1.0), np.abs(E))
    return ms, rel


def check_spectrum_oracle() -> Check:
    detail, ok = {}, True
    for m in (0, 1, 2, 5):
        ms, rel = _sphere_mode_errors(4000, m)
        _, rel2 = _sphere_mode_errors(8000, m)
        dist = []
        for p in ms.pairs:
            cf = closed_form_sphere(p.l_label, m, 4000)
            d = p.f - cf.f
            dist.append(math.sqrt(2.0 * math.pi * float(np.sum(p.weights * d * d))))
        nz = rel[1:] if m == 0 else rel
        nz2 = rel2[1:] if m == 0 else rel2
        ratio = float(np.max(nz) / np.max(nz2))
        good = float(np.max(rel)) <= 1e-4 and max(dist) <= 1e-3 and ratio >= 3.5
        ok &= good
        detail[f"m={m}"] = {"max_rel_error": float(np.max(rel)), "max_l2_distance": max(dist), "doubling_ratio": ratio}
    return Check(2, "round-sphere spectrum oracle and mesh doubling", ok, detail)


def check_quantum_limit() -> Check:
    curve = _sphere()
    detail, ok = {}, True
    for m in (0, 1, 2):
        rep = quantum_limit_series(lambda t: t, m, range(20, 201), curve, name="theta")
        d20, d200 = rep.deviation_at(20), rep.deviation_at(200)
        good = d200 <= 0.02 and d200 <= d20 and rep.slope <= -0.5
        ok &= bool(good)
        detail[f"theta/m={m}"] = {"dev20": d20, "dev200": d200, "slope": rep.slope, "r2": rep.r2}
    par = quantum_limit_series(np.cos, 0, range(20, 201), curve, name="cos")
    ok &= bool(np.max(par.deviations) < 1e-10)
    detail["cos/m=0"] = {"max_dev": float(np.max(par.deviations))}
    return Check(3, "quantum-limit convergence along the full sequence", ok, detail)


def check_legendre() -> Check:
    detail = {m: asymptotic_residual_scan((20, 200), m, 0.3).summary() for m in (0, 2)}
    ok = all(-1.8 <= d["slope"] <= -1.2 for d in detail.values())
    return Check(4, "Legendre asymptotic remainder exponent", ok, detail)


def check_zonal() -> Check:
    rep = zonal_report(range(5, 41), 0.5)
    ok = rep.slope < 0 and rep.r2 > 0.99
    return Check(5, "zonal concentration is exponential", ok, {"slope": rep.slope, "r2": rep.r2})


def check_conservation() -> Check:
    curve = _sphere()
    s0 = dyn.PhaseState(math.pi / 3, 0.1, 0.8, 0.6)
    fwd = dyn.integrate(curve, s0, 1.0, 1e-3)
    back = dyn.integrate(curve, fwd.final, -1.0, 1e-3).final
    rev = float(np.max(np.abs(back.as_array() - s0.as_array())))
    eq = dyn.integrate(curve, dyn.PhaseState(math.pi / 2, 0.0, 0.0, 1.0), 1.0, 1e-3)
    eq_dev = float(np.max(np.abs(eq.states[:, 0] - math.pi / 2)))
    ok = fwd.energy_drift < 1e-8 and fwd.momentum_drift < 1e-12 and rev < 1e-8 and eq_dev < 1e-10
    return Check(
        6,
        "symplectic integrator conservation and reversibility",
        ok,
        {"steps": len(fwd.t) - 1, "energy_drift": fwd.energy_drift, "p_phi_drift": fwd.momentum_drift, "reversibility": rev, "equator": eq_dev},
    )


def check_ergodic_equality() -> Check:
    detail, ok = {}, True
    for curve in (_sphere(), _ellipsoid()):
        L = curve.L
        fs = {
            "one": lambda t: 1.0,
            "theta": lambda t: t,
            "cos": lambda t, L=L: math.cos(math.pi * t / L),
            "theta2": lambda t: t * t,
        }
        r0 = dyn.ReducedState(0.3 * L, 1.0, dyn.Branch.UP)
        T = dyn.reduced_period(curve, 1.0)
        for name, f in fs.items():
            g = lambda th, p, f=f: f(th)
            b = dyn.birkhoff_average(curve, g, r0, T)
            s, _ = dyn.space_average_reduced_shell(curve, g, 1.0)
            q = limit_target(curve, f)
            good = abs(b - s) < 1e-8 and abs(s - q) < 1e-8 and abs(b - q) < 1e-8
            ok &= good
            detail[f"{curve.name}/{name}"] = {"birkhoff": b, "space": s, "limit_target": q}
    return Check(7, "Birkhoff = space average = quantum limit", ok, detail)


def check_weyl() -> Check:
    curve = _sphere()
    fam = CharacterFamily.of([0])
    spec = closed_form_spectrum(1150, [0])
    rows = {}
    for h in (1e-1, 1e-2, 1e-3):
        stat, vol = weyl_statistic(spec, 1.0, 1.0 / 6.0, fam, h, curve)
        rows[h] = (stat, vol, stat / vol)
    r3, r1 = rows[1e-3][2], rows[1e-1][2]
    ok = 0.85 <= r3 <= 1.15 and abs(r3 - 1) < abs(r1 - 1) and abs(rows[1e-3][1] - math.pi) < 1e-8
    return Check(8, "Weyl counting trend", ok, {f"{h:g}": {"statistic": v[0], "volume": v[1], "ratio": v[2]} for h, v in rows.items()})


def check_integrated_qe() -> Check:
    curve = _sphere()
    fam = CharacterFamily.of([0])
    spec = closed_form_spectrum(1150, [0])
    hs = [1e-1, 1e-2, 1e-3]
    th = integrated_qe_statistic(spec, lambda t: t, 1.0, 1.0 / 6.0, fam, hs, curve, "theta")
    one = integrated_qe_statistic(spec, lambda t: np.ones_like(t), 1.0, 1.0 / 6.0, fam, hs, curve, "one")
    S = dict(zip(th.h, th.S))
    dens = dict(zip(th.h, th.density_ratios))
    ok = S[1e-3] < S[1e-1] and float(np.max(one.S)) <= 1e-24 and dens[1e-3] >= 0.9
    return Check(
        9,
        "integrated quantum-ergodicity statistic and density-one selection",
        ok,
        {"S_theta": {f"{h:g}": s for h, s in S.items()}, "S_one_max": float(np.max(one.S)), "density_ratio_1e-3": dens[1e-3]},
    )


def check_commutation() -> Check:
    curve = _sphere()
    samples = dyn.sample_states(curve, 20, seed=0)
    g = lambda th: math.exp(-((th - 0.5 * curve.L) ** 2))
    disc = dyn.check_evolvred(curve, lambda th, ph, pt, pp: math.cos(ph) * g(th), 0.7, samples)
    return Check(10, "orbit averaging commutes with the flow", disc < 1e-6, {"max_discrepancy": disc})


def check_property_suites() -> Check:
    detail, ok = {}, True
    for curve in (_sphere(), _ellipsoid()):
        spectra = solve_modes(curve, (0, 1, 2), 20)
        odd = lambda t, L=curve.L: np.cos(math.pi * np.asarray(t) / L)
        gram = max(float(np.max(np.abs(ms.gram() - np.eye(20)))) for ms in spectra.values())
        osc = all(p.sign_changes() == p.k for ms in spectra.values() for p in ms.pairs)
        parity = max(abs(matrix_element(p, odd, curve)) for ms in spectra.values() for p in ms.pairs)
        E = np.sort(np.concatenate([ms.energies for ms in spectra.values()]))
        E = E[E > 0]
        res = partition(E, 1.0 / 6.0)
        starts = list(res.jk)
        bracket = True
        for j in range(1, E.size + 1):
            k = starts.index(res.P[j - 1])
            upper = E[starts[k + 1] - 1] if k + 1 < len(starts) else math.inf
            bracket &= bool(E[res.P[j - 1] - 1] <= E[j - 1] < upper)
        good = gram < 1e-8 and osc and parity < 1e-10 and bracket
        ok &= good
        detail[curve.name] = {"gram_error": gram, "oscillation_counts": osc, "parity_max": parity, "partition_bracket": bracket}
    return Check(11, "property suites on sphere and ellipsoid", ok, detail)


CHECKS = (
    check_partition,
    check_spectrum_oracle,
    check_quantum_limit,
    check_legendre,
    check_zonal,
    check_conservation,
    check_ergodic_equality,
    check_weyl,
    check_integrated_qe,
    check_commutation,
    check_property_suites,
)


def run_all(echo=print) -> list[Check]:
    out = []
    for fn in CHECKS:
        chk = fn()
        if echo:
            echo(chk.line())
        out.append(chk)
    return out
