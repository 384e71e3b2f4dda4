import math

import numpy as np
import pytest

from chaoskit.core.exceptions import DomainError, ShapeMismatchError
from chaoskit.models.observables import clipped_coordinate, gaussian_bump
from chaoskit.services.duhamel_service import DiffusionModel, duhamel_residual


def heat_kernel_bump(z, beta, t, width=1.0):
    """E exp(-(z + sqrt(beta) W_t)^2 / (2 w^2))"""
    spread = width ** 2 + beta * t
    return width / math.sqrt(spread) * math.exp(-z ** 2 / (2.0 * spread))


class TestDiffusionModel:
    """Coefficient constructors"""

    def test_constant_broadcasts(self):
        model = DiffusionModel.constant([1.0, -1.0], np.eye(2))
        x = np.zeros((5, 2))
        assert model.drift(x).shape == (5, 2)
        assert model.covariance(x).shape == (5, 2, 2)
        np.testing.assert_array_equal(model.covariance(x)[3], np.eye(2))

    def test_linear_drift(self):
        model = DiffusionModel.linear([[0.0, 1.0], [-1.0, 0.0]], np.eye(2), offset=[1.0, 0.0])
        np.testing.assert_allclose(model.drift(np.array([[2.0, 3.0]])), [[4.0, -2.0]])

    def test_shape_checks(self):
        with pytest.raises(ShapeMismatchError):
            DiffusionModel.constant([0.0, 0.0], [[1.0]])
        with pytest.raises(ShapeMismatchError):
            DiffusionModel.linear([[1.0, 0.0]], [[1.0]])

    def test_frozen_particle_model(self, ou_model):
        """Noise is (W, B): the additive block carries sqrt(beta)"""
        model = DiffusionModel.from_model(ou_model, [0.0, 1.0])
        assert (model.d, model.n) == (1, 2)
        np.testing.assert_allclose(model.drift(np.array([[2.0]])), [[-2.0]])
        assert model.diffusion(np.array([[2.0]])).shape == (1, 1, 2)
        assert model.covariance(np.array([[2.0]]))[0, 0, 0] >= 1.0 - 1e-12


class TestDuhamelResidual:
    """P1_t f - P2_t f against the integrated generator difference"""

    def test_identical_models_vanish(self):
        model = DiffusionModel.linear([[-1.0]], [[1.0]])
        result = duhamel_residual(model, model, gaussian_bump([0.0]), 0.5, [-1.0, 0.0, 1.0],
                                  budget=128, outer=16, inner=16, quad_nodes=4)
        assert result.max_residual == 0.0
        assert result.lhs == [0.0, 0.0, 0.0]
        assert len(result.residual) == 3
        assert result.z == [[-1.0], [0.0], [1.0]]

    def test_keeps_every_coordinate_of_the_grid(self):
        model = DiffusionModel.constant([0.0, 0.0], np.eye(2))
        grid = [[0.0, 1.0], [2.0, -1.0]]
        result = duhamel_residual(model, model, gaussian_bump([0.0, 0.0]), 0.5, grid,
                                  budget=32, outer=4, inner=4, quad_nodes=2)
        assert result.z == grid
        assert result.max_residual == 0.0

    def test_drift_shift_on_linear_observable(self):
        """Same noise, drifts 1 and 0: both sides equal t"""
        shifted = DiffusionModel.constant([1.0], [[1.0]])
        still = DiffusionModel.constant([0.0], [[1.0]])
        result = duhamel_residual(shifted, still, clipped_coordinate(0, bound=50.0), 1.0, [0.0, 0.5],
                                  budget=64, outer=8, inner=8, quad_nodes=4)
        np.testing.assert_allclose(result.lhs, [1.0, 1.0], rtol=1e-9)
        np.testing.assert_allclose(result.rhs, [1.0, 1.0], rtol=1e-9)
        assert result.max_residual < 1e-8

    def test_dimension_mismatch(self):
        one = DiffusionModel.constant([0.0], [[1.0]])
        two = DiffusionModel.constant([0.0, 0.0], np.eye(2))
        with pytest.raises(ShapeMismatchError):
            duhamel_residual(one, two, gaussian_bump([0.0]), 1.0, [0.0])

    def test_nonpositive_horizon(self):
        model = DiffusionModel.constant([0.0], [[1.0]])
        with pytest.raises(DomainError):
            duhamel_residual(model, model, gaussian_bump([0.0]), 0.0, [0.0])

    @pytest.mark.slow
    def test_heat_kernels_with_different_temperatures(self):
        fast = DiffusionModel.constant([0.0], [[1.0]])
        slow = DiffusionModel.constant([0.0], [[math.sqrt(0.5)]])
        z_grid = [0.0, 1.0]
        result = duhamel_residual(fast, slow, gaussian_bump([0.0]), 1.0, z_grid, budget=8192, seed=6)
        for k, z in enumerate(z_grid):
            exact = heat_kernel_bump(z, 1.0, 1.0) - heat_kernel_bump(z, 0.5, 1.0)
            assert abs(result.lhs[k] - exact) <= 4.0 * result.lhs_stderr[k]
        assert result.max_residual <= 4.0 * result.error_bar + 5e-3
