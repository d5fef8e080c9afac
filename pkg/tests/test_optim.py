"""Sanity checks of the derivative-free minimizer."""

import numpy as np
import pytest

from glme._optim import nelder_mead
from glme.penalties import SENTINEL


def quadratic(x):
    return float((x[0] - 3.0) ** 2 + 2.0 * (x[1] + 1.0) ** 2)


def rosenbrock(x):
    return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)


class TestNelderMead:
    def test_quadratic_minimum(self):
        res = nelder_mead(quadratic, [0.0, 0.0], [1.0, 1.0])
        assert res.converged
        np.testing.assert_allclose(res.x, [3.0, -1.0], atol=1e-6)

    def test_rosenbrock(self):
        res = nelder_mead(rosenbrock, [-1.2, 1.0], [0.5, 0.5], max_evals=4000)
        assert res.converged
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-4)

    def test_deterministic(self):
        a = nelder_mead(rosenbrock, [0.0, 0.0], [0.5, 0.5], seed=5)
        b = nelder_mead(rosenbrock, [0.0, 0.0], [0.5, 0.5], seed=5)
        np.testing.assert_array_equal(a.x, b.x)
        assert a.fun == b.fun

    def test_never_worse_than_start(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            x0 = rng.uniform(-2, 2, size=2)
            res = nelder_mead(rosenbrock, x0, [0.3, 0.3], max_evals=200)
            assert res.fun <= rosenbrock(x0)

    def test_sentinel_wall(self):
        def walled(x):
            if x[0] <= 0:
                return SENTINEL
            return float((x[0] - 0.5) ** 2 + x[1] ** 2)

        res = nelder_mead(walled, [2.0, 1.0], [0.5, 0.5])
        assert res.converged
        np.testing.assert_allclose(res.x, [0.5, 0.0], atol=1e-6)

    def test_f_target_stops_early(self):
        res = nelder_mead(quadratic, [0.1, 0.1], [1.0, 1.0], f_target=1e-3)
        assert res.converged
        assert res.fun <= 1e-3

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            nelder_mead(quadratic, [0.0, 0.0], [1.0, 0.0])
