import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omstate.errors import DimensionMismatchError
from omstate.gaussian import (
    GaussianObservationFactor,
    GaussianTransition,
    gaussian_product,
    kalman_predict,
    kalman_update,
)
from omstate.possibility import GaussianPossibility


def _spd(rng, d):
    A = rng.normal(size=(d, d))
    return A @ A.T + (0.5 + d) * np.eye(d)


def test_predict_frozen_scalar():
    m, P = kalman_predict([1.0], [[2.0]], GaussianTransition([[0.5]], [[1.0]]))
    assert m[0] == 0.5
    assert P[0, 0] == 1.5


def test_update_frozen_scalar():
    # prior N(0,1), observation y=2 with R=1: mean 1, spread 1/2, scale e^{-1}
    obs = GaussianObservationFactor([[1.0]], [[1.0]], [2.0])
    m, P, scale = kalman_update([0.0], [[1.0]], obs)
    assert abs(m[0] - 1.0) < 1e-15
    assert abs(P[0, 0] - 0.5) < 1e-15
    assert abs(scale - math.exp(-1.0)) < 1e-15


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_product_factorization_identity(seed, d):
    """g(x', x) f(x') == predictive(x) * conditional_x(x') pointwise."""
    rng = np.random.default_rng(seed)
    trans = GaussianTransition(rng.normal(size=(d, d)), _spd(rng, d))
    f = GaussianPossibility(rng.normal(size=d), _spd(rng, d))
    predictive, conditional_fn = gaussian_product(trans, f)
    for _ in range(5):
        x = rng.normal(scale=2.0, size=d)
        x_prev = rng.normal(scale=2.0, size=d)
        lhs = trans.conditional(x_prev)(x) * f(x_prev)
        rhs = predictive(x) * conditional_fn(x)(x_prev)
        assert abs(lhs - rhs) < 1e-10


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_update_is_the_sup_normalized_product(seed, d):
    """scale * updated(x) == f_pred(x) h(O x) pointwise, scale = the sup."""
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, d + 1))
    m_pred = rng.normal(size=d)
    P_pred = _spd(rng, d)
    O = rng.normal(size=(k, d))
    R = _spd(rng, k)
    y = rng.normal(size=k)
    obs = GaussianObservationFactor(O, R, y)
    m, P, scale = kalman_update(m_pred, P_pred, obs)
    f_pred = GaussianPossibility(m_pred, P_pred)
    h = GaussianPossibility(y, R)
    upd = GaussianPossibility(m, P)
    for _ in range(5):
        x = rng.normal(scale=2.0, size=d)
        assert abs(scale * upd(x) - f_pred(x) * h(O @ x)) < 1e-12
    # the scale really is the supremum: attained at the updated mean
    assert abs(scale - f_pred(m) * h(O @ m)) < 1e-12


def test_update_spread_is_symmetric_pd():
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, d + 1))
        obs = GaussianObservationFactor(rng.normal(size=(k, d)), _spd(rng, k), rng.normal(size=k))
        _, P, _ = kalman_update(rng.normal(size=d), _spd(rng, d), obs)
        assert np.array_equal(P, P.T)
        assert np.all(np.linalg.eigvalsh(P) > 0.0)


def test_dimension_mismatch_raises():
    obs = GaussianObservationFactor([[1.0, 0.0]], [[1.0]], [0.0])
    with pytest.raises(DimensionMismatchError):
        kalman_update([0.0], [[1.0]], obs)
