import logging
import math

import numpy as np
import pytest

from spinphase.core.errors import DomainError, UsageError
from spinphase.models.entities import KerrParams, RotFrame, SphericalPoint
from spinphase.physics.fitting import convergence_order
from spinphase.physics.gravitomag import (
    GRID_COLUMNS, FieldGrid, check_frame_validity, coriolis_force, cross_term_approx, cross_term_exact,
    curl_spherical, field_grid, fit_dipole, frame_field_deviation, frame_field_exact, frame_potential,
    gravitoelectric_force, gravitoelectric_potential, gravitomagnetic_field, kerr_horizons, kerr_metric,
    line_element, lorentz_force, rotating_metric, spherical_to_cartesian,
)

UNIT = KerrParams(G=1.0, M=1.0, c=1.0, a=0.5)
NO_MASS = KerrParams(G=0.0, M=0.0, c=1.0, a=0.0)


def test_kerr_metric_reduces_to_schwarzschild():
    p = KerrParams(G=1.0, M=1.0, c=1.0, a=0.0)
    x = SphericalPoint(10.0, 1.1)
    g = kerr_metric(p, x)
    assert g.g_tt == pytest.approx(1.0 - 2.0 / 10.0, rel=1e-14)
    assert g.g_rr == pytest.approx(-1.0 / (1.0 - 2.0 / 10.0), rel=1e-14)
    assert g.g_thth == pytest.approx(-100.0, rel=1e-14)
    assert g.g_phph == pytest.approx(-100.0 * math.sin(1.1) ** 2, rel=1e-14)
    assert g.g_tph == 0.0
    assert g.g_tr == 0.0


def test_kerr_horizons_and_singular_radius():
    p = KerrParams(G=1.0, M=1.0, c=1.0, a=0.0)
    assert kerr_horizons(p) == pytest.approx([0.0, 2.0])
    assert kerr_horizons(KerrParams(G=1.0, M=1.0, c=1.0, a=2.0)) == []
    with pytest.raises(DomainError):
        kerr_metric(p, SphericalPoint(2.0, 1.0))


def test_rotating_metric_matches_coordinate_substitution():
    f = RotFrame(omega=0.01, v=0.001)
    x = SphericalPoint(10.0, 1.1)
    dt, dr, dtheta, dphi = 0.3, 0.02, 0.01, 0.05

    rotated = line_element(rotating_metric(UNIT, f, x), UNIT.c, dt, dr, dtheta, dphi)
    fixed = line_element(kerr_metric(UNIT, x), UNIT.c, dt, dr + f.v * dt, dtheta, dphi - f.omega * dt)
    assert rotated == pytest.approx(fixed, rel=1e-12)


def test_rotating_metric_warns_outside_small_velocity_regime(caplog):
    with caplog.at_level(logging.WARNING):
        rotating_metric(UNIT, RotFrame(omega=0.01, v=0.5), SphericalPoint(10.0, 1.1))
    assert "frame expansion" in caplog.text


@pytest.mark.parametrize("theta", [0.3, 1.0, math.pi / 2, 2.5])
def test_cross_term_approximation_error_bound(theta):
    p = KerrParams(G=1.0, M=1.0, c=1.0, a=1.0)
    f = RotFrame(omega=1e-3)
    for r in np.geomspace(100.0, 1000.0, 7):
        x = SphericalPoint(float(r), theta)
        exact = cross_term_exact(p, f, x)
        rel = abs(cross_term_approx(p, f, x) - exact) / abs(exact)
        bound = (p.a / r) ** 2 * (1.0 + 2.0 * p.mass_length / r)
        assert rel <= bound * (1.0 + 1e-9)


def test_frame_field_matches_closed_form():
    f = RotFrame(omega=0.7)
    for r in (0.5, 3.0, 40.0):
        for theta in (0.2, 1.0, 2.0, 2.9):
            x = SphericalPoint(r, theta, 0.4)
            numeric = gravitomagnetic_field(NO_MASS, f, x, part="frame", extrapolate=True)
            exact = frame_field_exact(f, x)
            assert np.max(np.abs(numeric.as_array() - exact.as_array())) <= 1e-9 * 2.0 * f.omega


def test_frame_field_is_minus_two_omega_in_cartesian_form():
    f = RotFrame(omega=7.2921159e-5)
    grid = FieldGrid.build(6.371e6, 6.371e7, 4, 0.3, 2.8, 5, 0.0, 1.0, 2)
    assert frame_field_deviation(f, grid.points()) <= 1e-10


def test_curl_is_second_order_without_extrapolation():
    f = RotFrame(omega=1.0)
    x = SphericalPoint(1.0, 1.0)
    exact = frame_field_exact(f, x).as_array()
    steps = [1e-2, 5e-3, 2.5e-3]
    errors = []
    for h in steps:
        numeric = gravitomagnetic_field(NO_MASS, f, x, h=h, part="frame").as_array()
        errors.append(float(np.max(np.abs(numeric - exact))))
    assert convergence_order(steps, errors) == pytest.approx(2.0, abs=0.1)


def test_mass_field_is_a_dipole():
    x = SphericalPoint(5.0, 0.7)
    B = gravitomagnetic_field(UNIT, RotFrame(omega=0.0), x, part="mass", extrapolate=True)
    amp = UNIT.a * UNIT.G * UNIT.M / UNIT.c
    expected = amp * np.array([-2.0 * math.cos(x.theta), -math.sin(x.theta), 0.0]) / x.r ** 3
    assert B.as_array() == pytest.approx(expected, rel=1e-8, abs=1e-14)


def test_curl_stencil_refuses_points_near_axis():
    with pytest.raises(DomainError):
        curl_spherical(lambda pt: frame_potential(RotFrame(1.0), pt), SphericalPoint(1.0, 1e-5), h=1e-4)
    with pytest.raises(DomainError):
        curl_spherical(lambda pt: frame_potential(RotFrame(1.0), pt), SphericalPoint(1.0, 1.0), h=0.0)


def test_unknown_field_part():
    with pytest.raises(UsageError):
        gravitomagnetic_field(UNIT, RotFrame(0.0), SphericalPoint(5.0, 1.0), part="other")


def test_fit_dipole_recovers_gm_over_c(caplog):
    points = [SphericalPoint(float(r), th) for r in np.geomspace(5.0, 500.0, 5) for th in (0.5, 1.2, 2.0)]
    with caplog.at_level(logging.WARNING):
        fit = fit_dipole(UNIT, points)
    assert fit.constant == pytest.approx(UNIT.G * UNIT.M / UNIT.c, rel=1e-6)
    assert fit.falloff_exponent == pytest.approx(3.0, abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-9)
    assert fit.quoted_ratio == pytest.approx(0.5, rel=1e-6)
    assert "2G/c" in caplog.text


def test_fit_dipole_without_spin_returns_empty_fit():
    fit = fit_dipole(KerrParams(G=1.0, M=1.0, c=1.0, a=0.0), [SphericalPoint(10.0, 1.0)])
    assert fit.amplitude is None
    assert fit.falloff_exponent is None
    assert fit.quoted_ratio is None


def test_lorentz_force_of_frame_field_is_coriolis(rng):
    f = RotFrame(omega=0.3)
    for _ in range(10):
        x = SphericalPoint(rng.uniform(1, 5), rng.uniform(0.2, 2.9), rng.uniform(0, 6))
        v = rng.normal(size=3)
        F = lorentz_force(2.0, v, frame_field_exact(f, x), x)
        assert F == pytest.approx(coriolis_force(2.0, v, [0.0, 0.0, f.omega]), abs=1e-14)


def test_lorentz_force_vanishes_for_velocity_along_field():
    x = SphericalPoint(2.0, 1.0)
    B = frame_field_exact(RotFrame(0.5), x)
    F = lorentz_force(1.0, 3.0 * spherical_to_cartesian(B, x), B, x)
    assert np.max(np.abs(F)) <= 1e-15


def test_gravitoelectric_force_is_centrifugal():
    f = RotFrame(omega=0.1)
    x = SphericalPoint(2.0, 1.0, 0.3)
    F = gravitoelectric_force(NO_MASS, f, x, mass=1.0)
    cart = x.cartesian()
    expected = f.omega ** 2 * np.array([cart[0], cart[1], 0.0])
    assert F == pytest.approx(expected, rel=1e-6, abs=1e-9)


def test_field_grid_rows_run_r_major():
    grid = FieldGrid.build(2.0, 4.0, 2, 0.5, 2.5, 3, 0.0, 1.0, 2, r_spacing="linear")
    df = field_grid(UNIT, RotFrame(omega=0.01), grid, mass=1.0)
    assert list(df.columns) == GRID_COLUMNS
    assert len(df) == len(grid) == 12
    assert list(df["r"]) == [2.0] * 6 + [4.0] * 6
    assert list(df["theta"][:2]) == [0.5, 0.5]
    assert df[GRID_COLUMNS].notna().all().all()


def test_field_grid_force_vanishes_at_rest():
    grid = FieldGrid.build(2.0, 3.0, 2, 0.5, 1.5, 2)
    df = field_grid(UNIT, RotFrame(omega=0.01, v=0.0), grid, mass=1.0)
    assert (df[["F_x", "F_y", "F_z"]] == 0.0).all().all()


def test_field_grid_rejects_unknown_spacing():
    with pytest.raises(UsageError):
        FieldGrid.build(1.0, 2.0, 2, 0.5, 1.0, 2, r_spacing="cubic")


@pytest.mark.parametrize("r, theta", [(1.0, 0.4), (3.0, 1.2), (0.5, math.pi / 2)])
def test_gravitoelectric_potential_without_mass_is_centrifugal(r, theta):
    f = RotFrame(omega=0.2)
    x = SphericalPoint(r, theta)
    expected = -(f.omega * r * math.sin(theta)) ** 2 / (2.0 * NO_MASS.c ** 2)
    assert gravitoelectric_potential(rotating_metric(NO_MASS, f, x)) == pytest.approx(expected, rel=1e-12)


def test_frame_validity_checked_once_per_point_set(caplog):
    f = RotFrame(omega=0.01, v=0.5)
    points = [SphericalPoint(r, th) for r in (5.0, 10.0, 20.0) for th in (0.5, 1.0, 1.5)]
    with caplog.at_level(logging.WARNING):
        assert not check_frame_validity(f, points)
        for x in points:
            cross_term_exact(UNIT, f, x, check=False)
    assert caplog.text.count("Radial speed") == 1
    assert check_frame_validity(f, [])
    assert check_frame_validity(RotFrame(omega=0.01, v=1e-4), points)


def test_gravitoelectric_force_warns_once(caplog):
    with caplog.at_level(logging.WARNING):
        gravitoelectric_force(NO_MASS, RotFrame(omega=0.1, v=1.0), SphericalPoint(2.0, 1.0, 0.3), mass=1.0)
    assert caplog.text.count("Radial speed") == 1
