import numpy as np
import pytest

from quatsync.stability import classify_eigenvalues, newton_2d


@pytest.mark.parametrize("eigs, label", [
    ([-1 + 2j, -1 - 2j], "sink"),
    ([0.5, 0.1], "source"),
    ([-1.0, 2.0], "saddle"),
    ([3j, -3j], "center_candidate"),
    ([1e-11, -1.0], "center_candidate"),
])
def test_classify(eigs, label):
    assert classify_eigenvalues(eigs) == label


def test_classify_tolerance():
    assert classify_eigenvalues([-1e-8, -1e-8]) == "sink"
    assert classify_eigenvalues([-1e-8, -1e-8], tol=1e-6) == "center_candidate"


def test_newton_circle_line():
    def f(x):
        return np.array([x[0] ** 2 + x[1] ** 2 - 4.0, x[0] - x[1]])

    def jac(x):
        return np.array([[2 * x[0], 2 * x[1]], [1.0, -1.0]])

    x, res, ok = newton_2d(f, jac, [3.0, 0.5])
    assert ok and res <= 1e-12
    np.testing.assert_allclose(x, [np.sqrt(2), np.sqrt(2)], atol=1e-12)


def test_newton_singular_jacobian():
    x, res, ok = newton_2d(lambda x: np.array([x[0] ** 2 + 1.0, x[1]]),
                           lambda x: np.array([[2 * x[0], 0.0], [0.0, 1.0]]), [0.0, 1.0])
    assert not ok and res > 0


def test_newton_no_root():
    # x^2 + 1 has no real root; damping cannot make progress forever
    x, res, ok = newton_2d(lambda x: np.array([x[0] ** 2 + 1.0, x[1]]),
                           lambda x: np.array([[2 * x[0], 0.0], [0.0, 1.0]]), [0.3, 0.0])
    assert not ok and res >= 1.0
