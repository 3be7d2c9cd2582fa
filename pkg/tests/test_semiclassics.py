import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import betainc

from revqe.geometry import SurfaceSpec, build_profile
from revqe.semiclassics import (
    CharacterFamily,
    admissible_exponents,
    character_family,
    decay_fit,
    integrated_qe_statistic,
    limit_target,
    matrix_element,
    partition,
    quantum_limit_series,
    select_density_one,
    spectral_window,
    theta_density,
    weyl_statistic,
    zonal_mass,
    zonal_report,
)
from revqe.spectral import assemble_mode, closed_form_spectrum, closed_form_sphere, solve_mode
from revqe.specfun import ylm_radial

W0 = CharacterFamily.of([0])


@pytest.fixture(scope="module")
def zonal_spectrum():
    return closed_form_spectrum(1500, modes=[-1, 0, 1])


def brute_window(c, beta, h, modes, lmax):
    lo, hi = c, c + h**beta
    return sorted((l, m) for l in range(lmax + 1) for m in modes if abs(m) <= l and lo <= h * h * l * (l + 1) <= hi)


# -- partition ------------------------------------------------------------


def test_partition_golden():
    res = partition([j * (j + 1) for j in range(1, 41)], 1 / 6)
    assert res.jk[:7] == (1, 2, 3, 5, 7, 10, 14)
    assert res.P[:10] == (1, 2, 3, 3, 5, 5, 7, 7, 7, 10)
    assert res.block_of(8) == 7 and res.block_of(4) == 3


def test_partition_geometric():
    res = partition([4.0**j for j in range(1, 12)], 2.0)
    assert res.jk == tuple(range(1, 12))


@pytest.mark.parametrize("a,beta", [([1, 3, 2], 0.5), ([0, 1, 2], 0.5), ([1, 2, 3], 0.0), ([], 0.5)])
def test_partition_errors(a, beta):
    with pytest.raises(ValueError):
        partition(a, beta)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(0.0, 5.0, allow_nan=False), min_size=1, max_size=60),
    st.floats(0.05, 2.0),
    st.floats(0.5, 10.0),
)
def test_partition_bracket_invariant(steps, beta, a0):
    a = a0 + np.cumsum(steps)
    res = partition(a, beta)
    jk = res.jk
    assert jk[0] == 1
    assert all(x < y for x, y in zip(jk, jk[1:]))
    for k, start in enumerate(jk):
        ak = a[start - 1]
        thr = ak * (1 + ak ** (-beta / 2))
        if k + 1 < len(jk):
            nxt = jk[k + 1]
            # minimality of the next start, strict inequality
            assert a[nxt - 1] > thr
            assert all(a[j - 1] <= thr for j in range(start + 1, nxt))
        else:
            assert all(a[j - 1] <= thr for j in range(start + 1, len(a) + 1))
    for j in range(1, len(a) + 1):
        p = res.block_of(j)
        assert p in jk and p <= j
        i = jk.index(p)
        assert a[p - 1] <= a[j - 1]
        if i + 1 < len(jk):
            assert a[j - 1] < a[jk[i + 1] - 1]


# -- families and exponents -----------------------------------------------


def test_family_examples():
    snap = character_family(1.0, 0.1)
    assert snap.members == tuple(range(-10, 11)) and snap.cardinality == 21
    assert character_family(0.0, 0.37).members == (-1, 0, 1)
    assert not character_family(0.25, 0.1).admissible
    assert character_family(0.1, 0.1).admissible


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.5), st.floats(1e-4, 1.0))
def test_family_cardinality(vartheta, h):
    fam = CharacterFamily(vartheta)
    n = math.floor(h ** (-vartheta) * (1 + 1e-12))
    assert fam.cardinality(h) == 2 * n + 1 == len(fam.members(h))


def test_admissible_exponents():
    assert admissible_exponents(0.0) == pytest.approx((0.0, 1 / 6))
    assert admissible_exponents(0.1) == pytest.approx((0.0, 1 / 12))
    with pytest.raises(ValueError):
        admissible_exponents(0.2)


# -- windows --------------------------------------------------------------


def test_window_examples(zonal_spectrum):
    w = spectral_window(zonal_spectrum, 1.0, 1 / 6, 0.1, W0)
    assert sorted(w.l_labels()) == [10, 11, 12]
    w3 = spectral_window(zonal_spectrum, 1.0, 1 / 6, 0.1, CharacterFamily.of([-1, 0, 1]))
    assert len(w3) == 9
    assert spectral_window(zonal_spectrum, 1.0, 1 / 6, 1.0, W0).empty is False
    assert spectral_window(closed_form_spectrum(5, modes=[0]), 1.0, 1 / 6, 0.001, W0).empty


@pytest.mark.parametrize("h", [0.1, 0.03, 0.01, 0.002])
@pytest.mark.parametrize("modes", [[0], [-1, 0, 1]])
def test_window_matches_brute_force(zonal_spectrum, h, modes):
    w = spectral_window(zonal_spectrum, 1.0, 1 / 6, h, CharacterFamily.of(modes))
    got = sorted(zip(w.l_labels().tolist(), w.modes().tolist()))
    assert got == brute_window(1.0, 1 / 6, h, modes, 1500)
    for l, m in got:
        assert m in modes


# -- matrix elements and limits -------------------------------------------


def test_matrix_element_examples():
    for l in (3, 20, 77):
        p = closed_form_sphere(l, 0)
        assert matrix_element(p, lambda t: np.ones_like(t)) == pytest.approx(1.0, abs=1e-10)
        assert abs(matrix_element(p, np.cos)) < 1e-10
    p = closed_form_sphere(200, 0)
    assert abs(matrix_element(p, lambda t: t) - math.pi / 2) <= 0.02


@pytest.mark.parametrize("l,m", [(5, 0), (12, 3), (40, 1)])
def test_matrix_element_theta_squared_quadrature(l, m):
    oracle = quad(lambda t: 2 * math.pi * t * t * ylm_radial(l, m, t) ** 2 * math.sin(t), 0, math.pi, limit=400, epsabs=1e-13)[0]
    assert matrix_element(closed_form_sphere(l, m), lambda t: t * t) == pytest.approx(oracle, abs=1e-9)


def test_numeric_pairs_match_closed_form(ellipsoid, sphere):
    p = solve_mode(assemble_mode(sphere, 2), 6).pairs[5]
    q = closed_form_sphere(7, 2)
    assert matrix_element(p, lambda t: t * t) == pytest.approx(matrix_element(q, lambda t: t * t), abs=1e-4)
    e = solve_mode(assemble_mode(ellipsoid, 1), 3).pairs[2]
    assert matrix_element(e, lambda t: np.ones_like(t), ellipsoid) == pytest.approx(1.0, abs=1e-10)


def test_unnormalized_pair_rejected():
    p = closed_form_sphere(4, 1)
    bad = type(p)(p.m, p.k, p.E, p.theta, 2 * p.f, p.weights, p.l_label)
    with pytest.raises(ValueError):
        matrix_element(bad, np.cos)
    with pytest.raises(ValueError):
        theta_density(bad)


def test_limit_target(sphere, ellipsoid):
    assert limit_target(sphere, lambda t: 1.0) == pytest.approx(1.0, abs=1e-12)
    assert limit_target(sphere, lambda t: t) == pytest.approx(math.pi / 2, abs=1e-12)
    assert abs(limit_target(sphere, math.cos)) < 1e-12
    assert limit_target(ellipsoid, lambda t: t * t) == pytest.approx(ellipsoid.L**2 / 3, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 60), st.floats(-3, 3), st.floats(-3, 3))
def test_matrix_element_linear_and_bounded(l, s, t):
    p = closed_form_sphere(l, 0, 600)
    f = lambda x: np.cos(3 * x)
    g = lambda x: x * x
    lhs = matrix_element(p, lambda x: s * f(x) + t * g(x))
    rhs = s * matrix_element(p, f) + t * matrix_element(p, g)
    assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(s) + abs(t)) * 10)
    assert abs(matrix_element(p, f)) <= 1 + 1e-10


def test_quantum_limit_theta_squared_decays(sphere):
    rep = quantum_limit_series(lambda t: t * t, 0, range(20, 201, 20), sphere, name="theta2")
    assert rep.target == pytest.approx(math.pi**2 / 3, rel=1e-12)
    assert rep.deviation_at(200) < rep.deviation_at(20)
    assert rep.slope < -0.5


def test_quantum_limit_theta_is_exact_by_symmetry(sphere):
    # |Y|^2 is even about the equator, so mu[theta] = pi/2 up to rounding
    rep = quantum_limit_series(lambda t: t, 1, [20, 60, 200], sphere)
    assert np.max(rep.deviations) < 1e-13


def test_decay_fit():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    slope, r2 = decay_fit(x, 3 * x**-1.5)
    assert slope == pytest.approx(-1.5) and r2 == pytest.approx(1.0)
    assert math.isnan(decay_fit(x, np.array([1.0, 0.0, 1.0, 1.0]))[0])


# -- selection and statistics ---------------------------------------------


def test_selection_examples(zonal_spectrum):
    w = spectral_window(zonal_spectrum, 1.0, 1 / 6, 0.1, W0)
    sel = select_density_one(w, np.zeros(len(w)), 0.3)
    assert sel.density_ratio == 1.0
    dev = np.array([0.5, 0.0, 0.0])
    sel = select_density_one(w, dev, 0.01)
    assert list(sel.Gamma) == [w.J[0]]
    with pytest.raises(ValueError):
        select_density_one(w, dev, -1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 2), min_size=3, max_size=3), st.floats(0, 4))
def test_selection_partition_invariant(dev, r):
    spec = closed_form_spectrum(15, modes=[0])
    w = spectral_window(spec, 1.0, 1 / 6, 0.1, W0)
    sel = select_density_one(w, np.array(dev), r)
    assert sorted(np.concatenate([sel.Lambda, sel.Gamma]).tolist()) == sorted(w.J.tolist())
    assert not set(sel.Lambda.tolist()) & set(sel.Gamma.tolist())
    for j, d in zip(w.J, dev):
        assert (j in sel.Gamma) == (d * d >= math.sqrt(r))


def test_qe_statistic_theta_squared(sphere):
    spec = closed_form_spectrum(1500, modes=[0])
    q = integrated_qe_statistic(spec, lambda t: t * t, 1.0, 1 / 6, W0, [0.1, 0.01, 0.001], sphere, "theta2")
    # rows are ordered by increasing h
    assert list(q.h) == [0.001, 0.01, 0.1]
    assert list(q.window_sizes) == [147, 21, 3]
    assert q.S[0] < q.S[1] < q.S[2]
    assert q.density_ratios[0] >= 0.9
    q1 = integrated_qe_statistic(spec, lambda t: np.ones_like(t), 1.0, 1 / 6, W0, [0.1, 0.001], sphere)
    assert np.all(q1.S <= 1e-24)
    qc = integrated_qe_statistic(spec, np.cos, 1.0, 1 / 6, W0, [0.1, 0.001], sphere)
    assert np.all(qc.S <= 1e-24)


def test_qe_statistic_insufficient_spectrum(sphere):
    with pytest.raises(ValueError, match="window resolution insufficient"):
        integrated_qe_statistic(closed_form_spectrum(50, modes=[0]), np.cos, 1.0, 1 / 6, W0, [0.001], sphere)


def test_weyl_statistic(sphere, zonal_spectrum):
    stat, vol = weyl_statistic(zonal_spectrum, 1.0, 1 / 6, W0, 0.01, sphere)
    assert stat == pytest.approx(2 * math.pi * 0.01 ** (5 / 6) * 21)
    assert stat == pytest.approx(2.84, abs=0.01)
    assert vol == pytest.approx(math.pi, abs=1e-8)
    with pytest.raises(ValueError):
        weyl_statistic(closed_form_spectrum(5, modes=[0]), 1.0, 1 / 6, W0, 0.01, sphere)


# -- densities and zonal mass ---------------------------------------------


def test_theta_density():
    d0 = theta_density(closed_form_sphere(0, 0))
    np.testing.assert_allclose(d0.values, 1 / (4 * math.pi), rtol=1e-12)
    assert theta_density(closed_form_sphere(5, 2)).total_mass() == pytest.approx(1.0, abs=1e-10)
    assert theta_density(closed_form_sphere(12, 12)).argmax() == pytest.approx(math.pi / 2, abs=1e-3)


@pytest.mark.parametrize("l", [1, 5, 17, 40])
@pytest.mark.parametrize("eps", [0.2, 0.5, 0.8])
def test_zonal_mass_incomplete_beta(l, eps):
    assert zonal_mass(l, eps) == pytest.approx(betainc(l + 1, 0.5, math.cos(eps) ** 2), rel=1e-9, abs=1e-300)


def test_zonal_report():
    rep = zonal_report(range(5, 41), 0.5)
    assert rep.slope < 0 and rep.r2 > 0.99
    assert np.all((rep.masses >= 0) & (rep.masses <= 1))
    assert np.all(np.diff(rep.masses) < 0)
    assert zonal_report(range(5, 41), 0.8).rate > rep.rate
    with pytest.raises(ValueError):
        zonal_mass(5, math.pi / 2)
