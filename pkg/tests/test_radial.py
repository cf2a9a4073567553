"""Grid, quadrature, norms and sign decomposition."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirchhoff_flow import (
    ConfigError,
    DimensionError,
    Field,
    build_grid,
    count_sign_changes,
    grad_norm_sq,
    integrate,
    lp_norm_pow,
    read_field_csv,
    split_signs,
    write_field_csv,
)

FOUR_PI = 4.0 * math.pi

# analytic Gaussian moments over R^3, the oracles for the quadrature tests:
#   int exp(-rho^2) dx                = pi^(3/2)
#   int exp(-2 rho^2) dx              = (pi/2)^(3/2)
#   int exp(-3 rho^2) dx              = (pi/3)^(3/2)
#   int |grad exp(-rho^2)|^2 dx       = 16 pi * int rho^4 e^(-2 rho^2) drho
#                                     = 6 pi^(3/2) / 2^(5/2)
GAUSS_MASS = math.pi**1.5
GAUSS_L2_SQ = (math.pi / 2.0) ** 1.5
GAUSS_CUBE = (math.pi / 3.0) ** 1.5
GAUSS_GRAD_SQ = 6.0 * math.pi**1.5 / 2.0**2.5


def test_grid_weights_sum_to_ball_volume():
    grid = build_grid(1.0, 8)
    assert grid.weights.sum() == pytest.approx(FOUR_PI / 3.0, rel=1e-14)
    assert np.all(grid.weights >= 0.0)
    assert np.all(np.diff(grid.nodes) > 0.0)


def test_grid_node_count_and_spacing():
    grid = build_grid(30.0, 3000)
    assert len(grid.nodes) == 3001
    assert grid.h == pytest.approx(0.01, rel=1e-15)


@pytest.mark.parametrize("r_max,n", [(1.0, 7), (1.0, 6), (0.0, 8), (-2.0, 16)])
def test_grid_rejects_bad_arguments(r_max, n):
    with pytest.raises(ConfigError):
        build_grid(r_max, n)


def test_integrate_constant_and_zero():
    grid = build_grid(2.5, 64)
    ones = np.ones(grid.n + 1)
    assert integrate(ones, grid) == pytest.approx(FOUR_PI * 2.5**3 / 3.0, rel=1e-14)
    assert integrate(np.zeros(grid.n + 1), grid) == 0.0


def test_integrate_gaussian_matches_analytic():
    grid = build_grid(12.0, 1200)
    g = np.exp(-grid.nodes**2)
    assert integrate(g, grid) == pytest.approx(GAUSS_MASS, rel=1e-10)


def test_integrate_exact_on_cubic_moments():
    # integrand g * rho^2 is a polynomial of degree <= 3 for g in {1, rho}
    grid = build_grid(2.0, 10)
    assert integrate(grid.nodes, grid) == pytest.approx(
        FOUR_PI * 2.0**4 / 4.0, rel=1e-14
    )


def test_integrate_refinement_gains_at_least_eightfold():
    exact = FOUR_PI * (2.0 - 5.0 * math.exp(-1.0 / 2.0) / 2.0)  # oracle below
    # g(rho) = exp(-rho/2): 4pi int_0^6 rho^2 e^(-rho/2) drho, by parts:
    # = 4pi [16 - e^(-3)(2*36/2 + ... )]; freeze via high-resolution Simpson
    fine = build_grid(6.0, 1 << 14)
    exact = integrate(np.exp(-fine.nodes / 2.0), fine)
    errs = []
    for n in (48, 96, 192):
        grid = build_grid(6.0, n)
        errs.append(abs(integrate(np.exp(-grid.nodes / 2.0), grid) - exact))
    assert errs[0] / errs[1] >= 8.0
    assert errs[1] / errs[2] >= 8.0


def test_integrate_rejects_length_mismatch():
    grid = build_grid(1.0, 16)
    with pytest.raises(DimensionError):
        integrate(np.ones(grid.n), grid)


def test_grad_norm_zero_and_constant():
    grid = build_grid(5.0, 50)
    assert grad_norm_sq(Field.zero(grid), grid) == 0.0
    # constant data before the Dirichlet clamp: every difference vanishes
    assert grad_norm_sq(np.full(grid.n + 1, 3.7), grid) == 0.0


def test_grad_norm_gaussian_matches_analytic():
    grid = build_grid(12.0, 6000)
    u = np.exp(-grid.nodes**2)
    assert grad_norm_sq(u, grid) == pytest.approx(GAUSS_GRAD_SQ, rel=1e-6)


def test_lp_norm_trivials_and_gaussian():
    grid = build_grid(1.0, 100)
    assert lp_norm_pow(Field.zero(grid), grid, 2.0) == 0.0
    assert lp_norm_pow(np.ones(grid.n + 1), grid, 3.0) == pytest.approx(
        FOUR_PI / 3.0, rel=1e-14
    )
    g12 = build_grid(12.0, 1200)
    u = np.exp(-g12.nodes**2)
    assert lp_norm_pow(u, g12, 2.0) == pytest.approx(GAUSS_L2_SQ, rel=1e-8)
    assert lp_norm_pow(u, g12, 3.0) == pytest.approx(GAUSS_CUBE, rel=1e-8)


def test_lp_norm_rejects_small_exponent():
    grid = build_grid(1.0, 16)
    with pytest.raises(ConfigError):
        lp_norm_pow(Field.zero(grid), grid, 0.5)


def test_split_signs_examples():
    grid = build_grid(4.0, 8)
    u = Field.on_grid(grid, [1.0, -2.0, 3.0, 0.0, -1.0, 2.0, -3.0, 1.0, 0.0])
    plus, minus = split_signs(u)
    assert np.array_equal(plus.values, [1, 0, 3, 0, 0, 2, 0, 1, 0])
    assert np.array_equal(minus.values, [0, -2, 0, 0, -1, 0, -3, 0, 0])

    nonneg = Field.on_grid(grid, np.linspace(1.0, 0.0, 9))
    p, m = split_signs(nonneg)
    assert np.array_equal(p.values, nonneg.values)
    assert np.array_equal(m.values, np.zeros(9))
    nonpos = Field.on_grid(grid, -np.linspace(1.0, 0.0, 9))
    p, m = split_signs(nonpos)
    assert np.array_equal(m.values, nonpos.values)
    assert np.array_equal(p.values, np.zeros(9))


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        min_size=9,
        max_size=9,
    )
)
def test_split_signs_is_exact_partition(vals):
    grid = build_grid(1.0, 8)
    u = Field.on_grid(grid, vals)
    plus, minus = split_signs(u)
    assert np.array_equal(plus.values + minus.values, u.values)
    assert np.all(plus.values * minus.values == 0.0)
    assert np.all(plus.values >= 0.0)
    assert np.all(minus.values <= 0.0)


def test_count_sign_changes():
    grid = build_grid(math.pi * 2, 40)
    u = Field.on_grid(grid, np.maximum(np.sin(grid.nodes / 2.0), 0.0))
    assert count_sign_changes(u) == 0
    one_cross = Field.on_grid(grid, np.sin(grid.nodes * 0.9 + 0.3))
    assert count_sign_changes(one_cross) == 1
    assert count_sign_changes(one_cross, threshold=2.0) == 0
    with pytest.raises(ConfigError):
        count_sign_changes(one_cross, threshold=-1.0)


def test_field_requires_matching_length_and_finite_values():
    grid = build_grid(1.0, 16)
    with pytest.raises(DimensionError):
        Field.on_grid(grid, np.ones(5))
    bad = np.ones(17)
    bad[3] = np.nan
    with pytest.raises(DimensionError):
        Field.on_grid(grid, bad)


def test_field_csv_roundtrip(tmp_path):
    grid = build_grid(3.0, 24)
    u = Field.on_grid(grid, np.sin(grid.nodes) * np.exp(-grid.nodes))
    path = tmp_path / "field.csv"
    write_field_csv(path, u, grid)
    back = read_field_csv(path, grid)
    assert np.array_equal(back.values, u.values)
    with open(path) as fh:
        assert fh.readline().strip() == "rho,u"
