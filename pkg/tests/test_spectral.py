import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from revqe.geometry import SurfaceSpec, build_profile
from revqe.spectral import (
    assemble_mode,
    closed_form_pairs,
    closed_form_spectrum,
    closed_form_sphere,
    flatten_spectra,
    simpson_weights,
    solve_mode,
    solve_modes,
)
from revqe.specfun import ylm_radial

MODES = (0, 1, 2, 5)


@pytest.fixture(scope="module")
def sphere_spectra(sphere):
    return solve_modes(sphere, MODES, 20)


@pytest.fixture(scope="module")
def ellipsoid_spectra(ellipsoid):
    return solve_modes(ellipsoid, (0, 1, 3), 20)


def weighted_distance(p, q):
    return math.sqrt(2 * math.pi * np.sum(p.weights * (p.f - q.f) ** 2))


def test_pencil_is_symmetric(sphere):
    prob = assemble_mode(sphere, 3)
    K = prob.stiffness_dense()
    assert np.array_equal(K, K.T)
    assert np.all(prob.mass > 0)


def test_zero_mode_ground_state_is_constant(sphere):
    spec = solve_mode(assemble_mode(sphere, 0), 3)
    ground = spec.pairs[0]
    assert ground.E == 0.0
    inner = ground.f[1:-1]
    assert np.ptp(inner) < 1e-10 * np.max(inner)
    assert ground.f[0] == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-6)


def test_nonzero_mode_positive(sphere):
    spec = solve_mode(assemble_mode(sphere, 2), 10)
    assert np.all(spec.energies > 0)
    assert spec.pairs[0].E == pytest.approx(6.0, rel=1e-4)


def test_first_zonal_values(sphere_spectra):
    E = sphere_spectra[0].energies[:5]
    assert E[0] == 0.0
    np.testing.assert_allclose(E[1:], [2, 6, 12, 20], rtol=1e-4)


@pytest.mark.parametrize("m", MODES)
def test_eigenvalues_match_round_sphere(sphere_spectra, m):
    spec = sphere_spectra[m]
    ls = abs(m) + np.arange(20)
    exact = ls * (ls + 1.0)
    E = spec.energies
    nz = exact > 0
    assert np.max(np.abs(E[nz] - exact[nz]) / exact[nz]) < 1e-4
    assert [p.l_label for p in spec.pairs] == list(ls)


@pytest.mark.parametrize("m", MODES)
def test_eigenfunctions_match_closed_form(sphere_spectra, m):
    for p in sphere_spectra[m].pairs:
        q = closed_form_sphere(p.l_label, m, 4000)
        assert weighted_distance(p, q) < 1e-3


def test_fourth_pair_of_mode_three(sphere):
    p = solve_mode(assemble_mode(sphere, 3), 4).pairs[3]
    assert weighted_distance(p, closed_form_sphere(6, 3, 4000)) < 1e-3


def test_mesh_doubling_ratio(sphere):
    errs = []
    for N in (1000, 2000, 4000):
        E = solve_mode(assemble_mode(sphere, 1, N), 8).energies
        ls = 1 + np.arange(8)
        errs.append(np.max(np.abs(E - ls * (ls + 1.0))))
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


def test_ellipsoid_unit_ratio_is_sphere(sphere):
    curve = build_profile(SurfaceSpec.ellipsoid(1.0, 4000))
    E1 = solve_mode(assemble_mode(curve, 1), 10).energies
    E2 = solve_mode(assemble_mode(sphere, 1), 10).energies
    np.testing.assert_allclose(E1, E2, rtol=1e-10)


def _check_suite(spectra):
    for spec in spectra.values():
        E = spec.energies
        assert np.all(np.diff(E) >= 0)
        G = spec.gram()
        assert np.max(np.abs(G - np.eye(len(spec.pairs)))) < 1e-8
        for p in spec.pairs:
            assert p.norm_sq() == pytest.approx(1.0, abs=1e-10)
            assert p.sign_changes() == p.k
            nz = np.flatnonzero(np.abs(p.f) > 1e-8 * np.max(np.abs(p.f)))
            assert p.f[nz[0]] > 0


def test_orthonormality_and_oscillation_sphere(sphere_spectra):
    _check_suite(sphere_spectra)


def test_orthonormality_and_oscillation_ellipsoid(ellipsoid_spectra):
    _check_suite(ellipsoid_spectra)


def test_ellipsoid_spectrum_is_not_the_sphere(ellipsoid_spectra):
    # the oblate surface has larger area, so low eigenvalues drop below l(l+1)
    assert ellipsoid_spectra[1].energies[0] < 2.0


def test_negative_mode_mirrors(sphere):
    out = solve_modes(sphere, (-2, 2), 4)
    for a, b in zip(out[-2].pairs, out[2].pairs):
        assert a.m == -2 and a.E == b.E
        np.testing.assert_array_equal(np.abs(a.f), np.abs(b.f))


def test_guards(small_sphere):
    with pytest.raises(ValueError):
        assemble_mode(small_sphere, 0, N=32)
    with pytest.raises(ValueError):
        solve_mode(assemble_mode(small_sphere, 0), 129)
    with pytest.raises(ValueError):
        closed_form_sphere(2, 3)


def test_closed_form_trivial():
    p = closed_form_sphere(0, 0)
    assert p.E == 0.0
    assert np.ptp(p.f) < 1e-15
    q = closed_form_sphere(10, 3)
    val, _ = quad(lambda t: ylm_radial(10, 3, t) ** 2 * math.sin(t), 0, math.pi)
    assert 2 * math.pi * val == pytest.approx(1.0, abs=1e-10)
    assert q.norm_sq() == pytest.approx(1.0, abs=1e-12)
    assert q.E == 110


def test_shared_recurrence_matches_single():
    got = closed_form_pairs([(7, 2), (9, 2), (9, -1)], 800)
    for (l, m), p in got.items():
        np.testing.assert_allclose(p.f, closed_form_sphere(l, m, 800).f, rtol=1e-12, atol=1e-14)


def test_simpson_weights_integrate_cubics():
    w = simpson_weights(10, 0.1)
    x = np.linspace(0, 1, 11)
    assert np.sum(w * x**3) == pytest.approx(0.25, abs=1e-14)
    with pytest.raises(ValueError):
        simpson_weights(9, 0.1)


def test_flatten_tie_order(sphere):
    flat = flatten_spectra(solve_modes(sphere, (-1, 0, 1), 3))
    # l = 1 is triple: m = 0 then m = -1 then m = 1
    assert list(flat.m[1:4]) == [0, -1, 1]
    assert np.all(np.diff(flat.E) >= 0)


def test_closed_form_spectrum_counts():
    flat = closed_form_spectrum(5)
    assert len(flat) == 36
    flat0 = closed_form_spectrum(5, modes=[0])
    assert list(flat0.l_label) == [0, 1, 2, 3, 4, 5]


def test_export_headers(tmp_path, sphere_spectra):
    flat = flatten_spectra(sphere_spectra)
    flat.write_csv(tmp_path / "s.csv")
    sphere_spectra[1].pairs[0].write_csv(tmp_path / "f.csv")
    with open(tmp_path / "s.csv") as fh:
        assert next(csv.reader(fh)) == ["m", "k", "l_label", "E"]
    with open(tmp_path / "f.csv") as fh:
        assert next(csv.reader(fh)) == ["theta", "f"]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 300), st.integers(0, 300))
def test_closed_form_normalized(l, m):
    if m > l:
        l, m = m, l
    p = closed_form_sphere(l, m)
    assert p.norm_sq() == pytest.approx(1.0, abs=1e-12)
    assert p.E == l * (l + 1)
