import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ellipe, ellipeinc

from revqe.geometry import (
    SurfaceSpec,
    build_profile,
    orbit_volume,
    quotient_measure_density,
    read_table_csv,
    resample,
    surface_area,
)


def oblate_area(a):
    # spheroid with equatorial radius a > 1 and polar half-axis 1
    e = math.sqrt(1 - 1 / a**2)
    return 2 * math.pi * a**2 * (1 + (1 - e**2) / e * math.atanh(e))


def ellipse_arc(a, psi):
    # arc length of s -> (a sin s, -cos s) from 0 to psi <= pi/2
    return a * ellipeinc(psi, 1 - 1 / a**2)


def test_round_sphere_is_exact(sphere):
    assert sphere.L == math.pi
    assert float(sphere.radius(math.pi / 2)) == 1.0
    np.testing.assert_allclose(sphere.dR**2 + sphere.dz**2, 1.0, atol=1e-15)
    assert sphere.z[0] == -1.0 and sphere.R[0] == 0.0 and sphere.R[-1] == 0.0


def test_ellipsoid_length_matches_complete_elliptic_integral(ellipsoid):
    # int_0^pi sqrt(4 cos^2 + sin^2) = 4 E(3/4)
    assert ellipsoid.L == pytest.approx(4 * ellipe(0.75), abs=1e-10)
    speed = ellipsoid.dR**2 + ellipsoid.dz**2
    assert np.max(np.abs(speed[1:-1] - 1)) < 1e-12


def test_ellipsoid_nodes_follow_arc_length(ellipsoid):
    for th in (0.3, 1.1, 2.0):
        psi = brentq(lambda p: ellipse_arc(2.0, p) - th, 0, math.pi / 2, xtol=1e-15)
        assert float(orbit_volume(ellipsoid, th)) == pytest.approx(2 * math.pi * 2 * math.sin(psi), abs=1e-9)


def test_orbit_volume_values(sphere):
    assert float(orbit_volume(sphere, math.pi / 2)) == pytest.approx(2 * math.pi)
    assert float(orbit_volume(sphere, 0.0)) == 0.0
    assert float(quotient_measure_density(sphere, math.pi / 2)) == pytest.approx(2 * math.pi)
    assert float(quotient_measure_density(sphere, math.pi)) == 0.0


@pytest.mark.parametrize("th", [-0.1, math.pi + 0.1])
def test_out_of_range(sphere, th):
    with pytest.raises(ValueError):
        orbit_volume(sphere, th)
    with pytest.raises(ValueError):
        quotient_measure_density(sphere, th)


def test_total_area(sphere, ellipsoid):
    # independent surface-area oracles: 4 pi and the oblate spheroid formula
    assert surface_area(sphere) == pytest.approx(4 * math.pi, rel=1e-8)
    assert surface_area(ellipsoid) == pytest.approx(oblate_area(2.0), rel=1e-8)


def test_reflection_symmetry(sphere, ellipsoid):
    assert sphere.is_reflection_symmetric(1e-12)
    assert ellipsoid.is_reflection_symmetric(1e-10)


def test_reparametrization_is_idempotent(tmp_path):
    base = build_profile(SurfaceSpec.round_sphere(512))
    base.write_csv(tmp_path / "p.csv")
    rows = np.loadtxt(tmp_path / "p.csv", delimiter=",", skiprows=1)
    with open(tmp_path / "t.csv", "w") as fh:
        fh.write("t,R,z\n")
        for th, r, z, _ in rows:
            fh.write(f"{float(th)!r},{float(r)!r},{float(z)!r}\n")
    again = build_profile(read_table_csv(tmp_path / "t.csv", 512))
    assert np.max(np.abs(again.theta - base.theta)) < 1e-10
    assert np.max(np.abs(again.R - base.R)) < 1e-10
    assert np.max(np.abs(again.z - base.z)) < 1e-10


def test_table_of_non_unit_speed_is_reparametrized():
    t = np.linspace(0, 1, 400)
    # sphere traversed at nonuniform speed theta = pi t^2 ... regular after shifting
    th = math.pi * (0.5 * t + 0.5 * t**2)
    spec = SurfaceSpec.from_table(t, np.where((t == 0) | (t == 1), 0.0, np.sin(th)), -np.cos(th), grid_size=256)
    curve = build_profile(spec)
    assert curve.L == pytest.approx(math.pi, abs=1e-6)
    assert np.max(np.abs(curve.R - np.sin(curve.theta))) < 1e-5


@pytest.mark.parametrize(
    "R",
    [
        [0.0, 0.5, -0.1, 0.5, 0.0],  # negative radius
        [0.1, 0.5, 0.6, 0.5, 0.0],  # does not close at the south pole
    ],
)
def test_bad_tables(R):
    t = np.linspace(0, 1, len(R))
    with pytest.raises(ValueError):
        SurfaceSpec.from_table(t, R, np.linspace(-1, 1, len(R)))


def test_degenerate_speed_is_rejected():
    t = np.linspace(0, 1, 9)
    R = np.array([0, 0.3, 0.5, 0.5, 0.5, 0.5, 0.5, 0.3, 0])
    z = np.array([-1, -0.5, 0, 0, 0, 0, 0, 0.5, 1.0])  # stalls: zero speed in the middle
    with pytest.raises(ValueError, match="speed vanishes"):
        build_profile(SurfaceSpec.from_table(t, R, z, grid_size=64))


def test_axis_ratio_must_be_positive():
    with pytest.raises(ValueError):
        SurfaceSpec.ellipsoid(0.0)
    with pytest.raises(ValueError):
        SurfaceSpec.ellipsoid(-1.0)


def test_resample_keeps_profile(ellipsoid):
    coarse = resample(ellipsoid, 1000)
    assert coarse.L == ellipsoid.L
    np.testing.assert_allclose(coarse.R, ellipsoid.R[::4], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, math.pi))
def test_hermite_radius_matches_sine(th):
    curve = build_profile(SurfaceSpec.ellipsoid(1.0 + 1e-9, 2000))
    assert float(curve.radius(min(th, curve.L))) == pytest.approx(math.sin(min(th, curve.L)), abs=1e-6)
