"""Dose grid and logistic toxicity model tests."""

import numpy as np
import pytest

from sdfbayes.models import (
    DoseGrid,
    ModelParams,
    interaction_bounds,
    logistic_toxicity,
    random_valid_params,
    slope_lower_bounds,
    toxicity_draws,
    toxicity_matrix,
)


def test_default_grid_shape():
    grid = DoseGrid()
    assert (grid.J, grid.K) == (3, 4)
    assert grid.u == (-2.0, -1.0, 0.0)
    assert grid.v == (-3.0, -2.0, -1.0, 0.0)
    assert grid.n_cells == 12
    assert list(grid.cells())[0] == (1, 1)
    assert list(grid.cells())[-1] == (3, 4)


def test_grid_rejects_nonincreasing_levels():
    with pytest.raises(ValueError):
        DoseGrid(u=(0.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        DoseGrid(v=(-1.0, -2.0))


class TestLogisticToxicity:
    # Frozen reference values, computed independently with mpmath:
    # sigmoid(-5) and sigmoid(0) for the null-interaction parameterisation.
    def test_additive_corner_cells(self):
        grid = DoseGrid()
        params = ModelParams(0.0, 1.0, 1.0, 0.0, grid)
        assert logistic_toxicity(params, grid, 1, 1) == pytest.approx(0.006692850924, abs=1e-9)
        assert logistic_toxicity(params, grid, 3, 4) == pytest.approx(0.5, abs=1e-12)

    def test_interaction_cell(self):
        # logit = -1 + 0.5*(-1) + 0.5*(-2) + 0.1*(-1)*(-2) = -2.3
        grid = DoseGrid()
        params = ModelParams(-1.0, 0.5, 0.5, 0.1, grid)
        assert logistic_toxicity(params, grid, 2, 2) == pytest.approx(0.0911229610, abs=1e-9)

    def test_first_row_of_matrix(self):
        grid = DoseGrid()
        params = ModelParams(0.0, 1.0, 1.0, 0.0, grid)
        row = toxicity_matrix(params, grid)[0]
        np.testing.assert_allclose(
            row, [0.00669285, 0.01798621, 0.04742587, 0.11920292], atol=1e-7)

    def test_matrix_matches_cellwise_evaluation(self):
        grid = DoseGrid()
        params = ModelParams(0.3, 1.2, 0.8, 0.15, grid)
        mat = toxicity_matrix(params, grid)
        for j, k in grid.cells():
            assert mat[j - 1, k - 1] == pytest.approx(
                logistic_toxicity(params, grid, j, k), abs=1e-14)


def test_monotonicity_over_random_valid_parameters():
    # Any valid parameterisation must be nondecreasing in both dose indices.
    grid = DoseGrid()
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        params = random_valid_params(rng, grid)
        mat = toxicity_matrix(params, grid)
        assert (np.diff(mat, axis=0) >= -1e-12).all()
        assert (np.diff(mat, axis=1) >= -1e-12).all()


def test_parameter_constraints_rejected():
    grid = DoseGrid()
    with pytest.raises(ValueError):
        ModelParams(0.0, -0.5, 1.0, 0.0, grid)  # theta1 must be positive
    with pytest.raises(ValueError):
        ModelParams(0.0, 1.0, 0.0, 0.0, grid)  # theta2 must be positive
    # theta3 = 1.2 breaks theta1 + theta3*v_k > 0 at v=-3 (needs theta3 < 1/3)
    with pytest.raises(ValueError):
        ModelParams(0.0, 1.0, 2.0, 1.2, grid)


def test_interaction_bounds_default_grid():
    grid = DoseGrid()
    # At theta1=3, theta2=4 the admissible interaction is min(3/3, 4/2) = 1,
    # unbounded below because all default dose levels are nonpositive.
    lo, hi = interaction_bounds(grid, 3.0, 4.0)
    assert hi == pytest.approx(1.0)
    assert lo == -np.inf
    lo1, lo2 = slope_lower_bounds(grid, 0.3)
    # theta3=0.3 relaxes nothing below zero on the default grid
    assert lo1 == pytest.approx(max(0.0, 0.3 * 3))
    assert lo2 == pytest.approx(max(0.0, 0.3 * 2))


def test_negative_interaction_tightens_slope_floors():
    grid = DoseGrid()
    lo1, lo2 = slope_lower_bounds(grid, -0.2)
    assert lo1 == pytest.approx(0.0)
    assert lo2 == pytest.approx(0.0)
    params = ModelParams(0.0, 1.0, 1.0, -0.2, grid)
    mat = toxicity_matrix(params, grid)
    assert (np.diff(mat, axis=0) > 0).all()


def test_toxicity_draws_batches_match_loop():
    grid = DoseGrid()
    rng = np.random.default_rng(7)
    thetas = np.stack([
        np.array([p.theta0, p.theta1, p.theta2, p.theta3])
        for p in (random_valid_params(rng, grid) for _ in range(50))
    ])
    batch = toxicity_draws(thetas, grid)
    assert batch.shape == (50, 3, 4)
    for i in range(50):
        params = ModelParams(*thetas[i], grid)
        np.testing.assert_allclose(batch[i], toxicity_matrix(params, grid), atol=1e-12)
    assert ((batch > 0) & (batch < 1)).all()
