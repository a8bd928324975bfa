import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.ndimage import label

from gsforge.core import PolarGrid, Profile, ScalarField
from gsforge.equilibrium import build_radial_equilibrium, gs_residual
from gsforge.errors import DegenerateFieldError, FibrationError
from gsforge.reconstruction import (
    build_fibration, locate_critical_points, reconstruction_report, recover_F, recover_G, recover_H,
)

PARABOLIC = Profile.polynomial([0.5, 0.0, -0.5])


@pytest.fixture(scope="module")
def grid():
    return PolarGrid.disk(64, 128)


@pytest.fixture(scope="module")
def radial_A(grid):
    return ScalarField(grid, grid.sample(lambda x, y: (1 - x * x - y * y) / 2), "A")


def dense_scan_count(f, n=801):
    """Oracle: count blobs of near-vanishing gradient on a fine Cartesian grid."""
    x = np.linspace(-0.95, 0.95, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    inside = X ** 2 + Y ** 2 < 0.9
    h = x[1] - x[0]
    fx = (f(X + h, Y) - f(X - h, Y)) / (2 * h)
    fy = (f(X, Y + h) - f(X, Y - h)) / (2 * h)
    mag = np.hypot(fx, fy)
    small = (mag[1:-1, 1:-1] < 4 * h) & inside[1:-1, 1:-1]
    _, count = label(small)
    return count


def test_single_maximum_at_origin(radial_A):
    (c,) = locate_critical_points(radial_A)
    assert c.kind == "max"
    assert np.hypot(*c.position) < 1e-10
    assert c.value == pytest.approx(0.5, abs=1e-12)


def test_quadrupole_has_several_critical_points(grid):
    def quad(x, y):
        return (x * x - y * y) * (1 - x * x - y * y)

    found = locate_critical_points(ScalarField(grid, grid.sample(quad)))
    assert len(found) >= 2
    assert len(found) == dense_scan_count(quad)


def test_constant_field_is_degenerate(grid):
    with pytest.raises(DegenerateFieldError, match="constant"):
        locate_critical_points(ScalarField(grid, np.ones(grid.shape)))


def test_fibration_radial_ray_on_x_axis(radial_A):
    fib = build_fibration(radial_A, anchor=(1.0, 0.0))
    assert np.max(np.abs(fib.points[:, 1])) < 1e-8
    assert np.all(np.diff(fib.values) > 0)
    assert np.hypot(*fib.points[-1]) < 1e-6


def test_fibration_elliptic_levels_reach_origin(grid):
    A = ScalarField(grid, grid.sample(lambda x, y: 1 - x * x - 4 * y * y))
    fib = build_fibration(A)
    assert np.hypot(*fib.points[-1]) < 1e-6
    # default anchor maximizes |grad A| on the circle: (0, +-1)
    assert abs(fib.points[0, 0]) < 1e-12 and abs(abs(fib.points[0, 1]) - 1) < 1e-12
    x, y = fib.point_at_level(0.5)
    assert 1 - x * x - 4 * y * y == pytest.approx(0.5, abs=1e-8)


def test_fibration_rejects_two_nulls(grid):
    A = ScalarField(grid, grid.sample(lambda x, y: (x * x - y * y) * (1 - x * x - y * y)))
    with pytest.raises(FibrationError, match="monotone"):
        build_fibration(A)


def test_recover_sin(radial_A):
    psi = ScalarField(radial_A.grid, np.sin(radial_A.values))
    G, spread = recover_G(radial_A, psi)
    a = np.linspace(0.025, 0.475, 301)
    assert np.max(np.abs(G(a) - np.sin(a))) < 1e-6
    assert spread < 1e-10


def test_recover_identity(radial_A):
    G, spread = recover_G(radial_A, radial_A)
    assert np.allclose(G(np.linspace(0.05, 0.45, 9)), np.linspace(0.05, 0.45, 9), atol=1e-12)
    assert spread < 1e-14


def test_non_functional_dependence_has_large_spread(radial_A):
    x = ScalarField(radial_A.grid, radial_A.grid.sample(lambda x, y: x))
    rec = recover_G(radial_A, x)
    assert rec.spread > 0.5
    assert not rec.holds()


@settings(max_examples=20, deadline=None)
@given(st.floats(-100, 100))
def test_spread_invariant_under_shift(shift):
    g = PolarGrid.disk(32, 64)
    A = ScalarField(g, g.sample(lambda x, y: (1 - x * x - y * y) / 2))
    psi = ScalarField(g, np.cos(3 * A.values) + 0.01 * g.sample(lambda x, y: y))
    base = recover_G(A, psi)
    moved = recover_G(A, psi + shift)
    assert moved.spread == pytest.approx(base.spread, rel=1e-6, abs=1e-12)
    a = np.linspace(0.05, 0.45, 5)
    assert np.allclose(moved.profile(a) - base.profile(a), shift, atol=1e-9 * max(1, abs(shift)))


def test_recover_F_and_H_static(grid):
    spec = build_radial_equilibrium(PARABOLIC, Profile.constant(0.0), grid)
    F, spread = recover_F(spec.A, spec.G)
    assert spread < 1e-8
    assert np.allclose(F(np.linspace(0.05, 0.45, 9)), -2.0, atol=1e-9)
    H = recover_H(spec.A, spec.psi, spec.p)
    a = np.linspace(0.05, 0.45, 41)
    assert np.max(np.abs(H.profile(a) - spec.H(a))) < 1e-6


def test_recover_in_tautology_case(grid):
    G = Profile.linear(1.0)
    spec = build_radial_equilibrium(PARABOLIC, G, grid)
    F, _ = recover_F(spec.A, G)
    assert np.max(np.abs(F(np.linspace(0.05, 0.45, 9)))) == 0.0
    H = recover_H(spec.A, spec.psi, spec.p, G)
    assert H.spread < 1e-10


def test_recovered_F_closes_gs_residual(grid):
    G = Profile.from_expr("0.3*a")
    spec = build_radial_equilibrium(Profile.from_expr("(1 - r**2)*(1 + r**2)/2", variable="r"), G, grid)
    rec = recover_F(spec.A, G)
    res = gs_residual(spec.A, G, rec.profile).values[1:-1]
    direct = gs_residual(spec.A, G, spec.F).values[1:-1]
    # the FD truncation error is common to both; recovery adds at most ~10x spread
    assert np.max(np.abs(res - direct)) <= 10 * rec.spread + 1e-9


def test_report_flags(radial_A):
    psi = ScalarField(radial_A.grid, np.sin(radial_A.values))
    rep = reconstruction_report(radial_A, psi)
    assert rep["flags"]["single_critical_point"]
    assert rep["flags"]["psi_function_of_A"]
    assert rep["G"]["kind"] == "cubic"
