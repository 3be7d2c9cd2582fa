"""Experiment drivers shared by the command line and the acceptance suite.

Each ``run_*`` function computes a report from an :class:`ExperimentConfig`
and, when given an output directory, writes CSV series plus a JSON summary
that embeds the resolved configuration.  Output bytes depend only on the
configuration.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from .config import ExperimentConfig, resolve_test_function
from .geometry import ProfileCurve
from .semiclassics import (
    integrated_qe_statistic,
    limit_target,
    partition,
    quantum_limit_series,
    spectral_window,
    weyl_statistic,
    zonal_report,
    matrix_element,
    select_density_one,
)
from .spectral import FlatSpectrum, closed_form_spectrum, flatten_spectra, solve_modes
from .specfun import asymptotic_residual_scan


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path: Path, payload: dict, cfg: ExperimentConfig | None = None) -> None:
    if cfg is not None:
        payload = {**payload, "config": cfg.to_dict(), "beta_at_boundary": cfg.beta_at_boundary()}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def is_round_sphere(curve: ProfileCurve) -> bool:
    return curve.name == "round_sphere"


def spectrum_for_window(cfg: ExperimentConfig, curve: ProfileCurve, h_min: float) -> FlatSpectrum:
    """Spectrum covering the window at ``h_min``.

    The round sphere uses the closed form up to the needed degree; other
    surfaces are solved numerically for the family's modes.
    """
    family = cfg.character_family()
    top = (cfg.c + h_min**cfg.beta) / (h_min * h_min)
    modes = family.members(h_min)
    if is_round_sphere(curve):
        lmax = int(math.isqrt(int(math.ceil(top)))) + 2
        return closed_form_spectrum(lmax, modes)
    return flatten_spectra(solve_modes(curve, modes, cfg.count))


# --------------------------------------------------------------------------


def run_spectrum(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    curve = cfg.curve()
    spectra = solve_modes(curve, cfg.modes, cfg.count)
    flat = flatten_spectra(spectra)
    rows = {}
    for m, ms in spectra.items():
        gram = ms.gram()
        rows[m] = {
            "E": ms.energies,
            "gram_error": float(np.max(np.abs(gram - np.eye(len(ms.pairs))))),
            "sign_changes": [p.sign_changes() for p in ms.pairs],
        }
    summary = {"surface": curve.name, "L": curve.L, "modes": rows}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        flat.write_csv(out / "spectrum.csv")
        for m, ms in spectra.items():
            for p in ms.pairs[: min(5, len(ms.pairs))]:
                p.write_csv(out / f"eigenfunction_m{m}_k{p.k}.csv")
        curve.write_csv(out / "profile.csv")
        write_json(out / "spectrum.json", summary, cfg)
    return summary


def run_qlimit(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    curve = cfg.curve()
    lo, hi = cfg.qlimit_l
    reports = {}
    if is_round_sphere(curve):
        ls = range(lo, hi + 1)
        pair_source = None
    else:
        # numeric eigenpairs; label by in-mode index k -> l = |m| + k
        spectra = solve_modes(curve, cfg.qlimit_modes, cfg.count)
        top = cfg.count - 1
        ls = range(lo, hi + 1)
        ls = [l for l in ls if all(l - abs(m) <= top for m in cfg.qlimit_modes)]
        pair_source = lambda l, m: spectra[m].pairs[l - abs(m)]
    for spec in cfg.test_functions:
        name, a = resolve_test_function(spec, curve)
        for m in cfg.qlimit_modes:
            rep = quantum_limit_series(a, m, ls, curve, pair_source, name)
            reports[f"{name}/m={m}"] = rep.summary()
            if out is not None:
                write_csv(out / f"qlimit_{name}_m{m}.csv", ["l", "deviation"], zip(rep.l_values, rep.deviations))
    if out is not None:
        write_json(out / "qlimit.json", {"reports": reports}, cfg)
    return reports


def run_partition(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    js = np.arange(1, cfg.partition_terms + 1)
    res = partition(js * (js + 1.0), cfg.beta)
    summary = {"beta": cfg.beta, "sequence": "j(j+1)", "jk": list(res.jk), "P": list(res.P)}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "partition.txt").write_text(
            "jk: " + ",".join(map(str, res.jk)) + "\nP: " + ",".join(map(str, res.P)) + "\n"
        )
        write_csv(out / "partition.csv", ["j", "a_j", "P"], [(int(j), float(j * (j + 1)), p) for j, p in zip(js, res.P)])
        write_json(out / "partition.json", summary, cfg)
    return summary


def _qe(cfg: ExperimentConfig, curve: ProfileCurve, spec):
    name, a = resolve_test_function(spec, curve)
    flat = spectrum_for_window(cfg, curve, min(cfg.h_list))
    return name, integrated_qe_statistic(flat, a, cfg.c, cfg.beta, cfg.character_family(), cfg.h_list, curve, name)


def run_window(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    cfg.validate(qe=True)
    curve = cfg.curve()
    result = {}
    for spec in cfg.test_functions:
        name, st = _qe(cfg, curve, spec)
        per_h = []
        for h, win, dev, s in zip(st.h, st.windows, st.deviations, st.S):
            sel = select_density_one(win, dev, s)
            lam = set(int(j) for j in sel.Lambda)
            per_h.append({"h": h, "J": len(win), "Lambda": len(sel.Lambda), "Gamma": len(sel.Gamma), "threshold": sel.threshold})
            if out is not None:
                sp = win.spectrum
                rows = [
                    (int(j), int(sp.l_label[j]), int(sp.m[j]), int(sp.k[j]), float(sp.E[j]), float(h * h * sp.E[j]), float(d), int(j in lam))
                    for j, d in zip(win.J, dev)
                ]
                write_csv(out / f"window_{name}_h{h:g}.csv", ["j", "l_label", "m", "k", "E", "hE2", "deviation", "in_Lambda"], rows)
        result[name] = per_h
    if out is not None:
        write_json(out / "window.json", {"windows": result}, cfg)
    return result


def run_qe_stat(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    cfg.validate(qe=True)
    curve = cfg.curve()
    result = {}
    for spec in cfg.test_functions:
        name, st = _qe(cfg, curve, spec)
        result[name] = {
            "h": st.h,
            "S": st.S,
            "J": st.window_sizes,
            "W": st.family_sizes,
            "density_ratio": st.density_ratios,
            "rate_note": "no convergence rate is known; trends only",
        }
        if out is not None:
            write_csv(out / f"qe_stat_{name}.csv", ["h", "S", "J", "density_ratio"], zip(st.h, st.S, st.window_sizes, st.density_ratios))
    if out is not None:
        write_json(out / "qe_stat.json", {"statistics": result}, cfg)
    return result


def run_weyl(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    cfg.validate(qe=True)
    curve = cfg.curve()
    flat = spectrum_for_window(cfg, curve, min(cfg.h_list))
    fam = cfg.character_family()
    rows = []
    for h in sorted(cfg.h_list, reverse=True):
        stat, vol = weyl_statistic(flat, cfg.c, cfg.beta, fam, h, curve)
        n = len(spectral_window(flat, cfg.c, cfg.beta, h, fam))
        rows.append({"h": h, "J": n, "statistic": stat, "reference_volume": vol, "ratio": stat / vol})
    if out is not None:
        # S column is filled from the first configured test function
        name, st = _qe(cfg, curve, cfg.test_functions[0])
        S = dict(zip(st.h, st.S))
        write_csv(
            out / "weyl.csv",
            ["h", "S", "weyl_stat", "ref_volume"],
            [(r["h"], S[r["h"]], r["statistic"], r["reference_volume"]) for r in rows],
        )
        write_json(out / "weyl.json", {"rows": rows, "S_test_function": name}, cfg)
    return {"rows": rows}


def run_legendre(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    res = {}
    for m in cfg.legendre_modes:
        rep = asymptotic_residual_scan(tuple(cfg.legendre_l), m, cfg.legendre_epsilon)
        res[m] = rep.summary()
        if out is not None:
            rep.write(out, stem=f"legendre_m{m}")
    if out is not None:
        write_json(out / "legendre.json", {"fits": res}, cfg)
    return res


def run_zonal(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    lo, hi = cfg.zonal_l
    res = {}
    for eps in cfg.zonal_epsilons:
        rep = zonal_report(range(lo, hi + 1), eps)
        res[f"{eps:g}"] = {"slope": rep.slope, "rate": rep.rate, "r2": rep.r2}
        if out is not None:
            write_csv(out / f"zonal_eps{eps:g}.csv", ["l", "zonal_mass"], zip(rep.l_values, rep.masses))
    if out is not None:
        write_json(out / "zonal.json", {"fits": res}, cfg)
    return res


def run_flow(cfg: ExperimentConfig, out: Path | None = None) -> dict:
    curve = cfg.curve()
    c = cfg.c
    s0 = dyn.PhaseState(0.5 * curve.L, 0.0, math.sqrt(c), 0.0)
    r0 = dyn.reduce(s0)
    period = dyn.reduced_period(curve, c)
    red = dyn.reduced_flow(curve, r0, period)
    averages = {}
    for spec in cfg.test_functions:
        name, a = resolve_test_function(spec, curve)
        f = lambda th, p, a=a: float(a(th))
        tavg = dyn.birkhoff_average(curve, f, r0, period)
        savg, vol = dyn.space_average_reduced_shell(curve, f, c)
        averages[name] = {"birkhoff": tavg, "space": savg, "limit_target": limit_target(curve, a)}
    # a generic orbit off the zero-momentum level
    pp = 0.5 * math.sqrt(c) * float(curve.radius(0.4 * curve.L))
    gen = dyn.PhaseState(0.4 * curve.L, 0.0, math.sqrt(c - (pp / float(curve.radius(0.4 * curve.L))) ** 2), pp)
    traj = dyn.integrate(curve, gen, cfg.flow_T, cfg.flow_dt, cfg.flow_scheme)
    samples = dyn.sample_states(curve, cfg.commute_samples, cfg.seed)
    g = lambda th: math.sin(math.pi * th / curve.L) ** 2
    disc = dyn.check_evolvred(
        curve, lambda th, ph, pt, pp_: math.cos(ph) * g(th), cfg.commute_t, samples, cfg.flow_dt, scheme=cfg.flow_scheme
    )
    summary = {
        "reduced_period": red.period,
        "shell_volume": vol,
        "averages": averages,
        "trajectory": {"energy_drift": traj.energy_drift, "momentum_drift": traj.momentum_drift, "steps": len(traj.t) - 1},
        "commutation_discrepancy": disc,
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        traj.write_csv(out / "trajectory.csv")
        red.write_csv(out / "reduced_trajectory.csv")
        write_json(out / "flow.json", summary, cfg)
    return summary
