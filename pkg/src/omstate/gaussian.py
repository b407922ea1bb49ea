"""Closed-form Gaussian possibility algebra.

Implements the two-factor product identity behind the possibilistic Kalman
filter and the resulting predict/update steps.  The update additionally
returns the supremum of the unnormalized product (innovation form), which
drives mixture weights in the filtering module.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .possibility import GaussianPossibility, validate_spread


class GaussianTransition:
    """Conditional possibility g(x', x) with mean F x' and spread Q."""

    def __init__(self, F, Q):
        self.F = np.atleast_2d(np.asarray(F, dtype=float))
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        validate_spread(self.Q)
        if self.F.shape[0] != self.Q.shape[0]:
            raise DimensionMismatchError("transition F and Q dimensions disagree")
        self.dim_out, self.dim_in = self.F.shape

    def conditional(self, x_prev):
        return GaussianPossibility(self.F @ np.asarray(x_prev, float), self.Q)


class GaussianObservationFactor:
    """Observation map O, spread R and an observed vector y."""

    def __init__(self, O, R, y):
        self.O = np.atleast_2d(np.asarray(O, dtype=float))
        self.R = np.atleast_2d(np.asarray(R, dtype=float))
        self.y = np.atleast_1d(np.asarray(y, dtype=float))
        validate_spread(self.R)
        k, d = self.O.shape
        if k > d:
            raise ValidationError("observation map has more rows than state dimensions")
        if self.R.shape[0] != k or self.y.shape[0] != k:
            raise DimensionMismatchError("observation factor dimensions disagree")


def _symmetrize(P):
    return 0.5 * (P + P.T)


def gaussian_product(trans: GaussianTransition, f: GaussianPossibility):
    """Split g(x', x) f(x') into a predictive factor in x and a conditional in x'.

    Returns (predictive, conditional_fn) where conditional_fn(x) is the
    Gaussian possibility in x' for a fixed x; re-multiplying the two factors
    reproduces the input product pointwise.
    """
    F, Q = trans.F, trans.Q
    m, P = f.mean, f.spread
    if trans.dim_in != f.dim:
        raise DimensionMismatchError("transition input and prior dimensions disagree")
    S = _symmetrize(Q + F @ P @ F.T)
    validate_spread(S)
    predictive = GaussianPossibility(F @ m, S)
    K = P @ F.T @ np.linalg.inv(S)
    C = _symmetrize((np.eye(f.dim) - K @ F) @ P)

    def conditional_fn(x):
        x = np.atleast_1d(np.asarray(x, float))
        return GaussianPossibility(m + K @ (x - F @ m), C)

    return predictive, conditional_fn


def kalman_predict(m, P, trans: GaussianTransition):
    """Time prediction: mean F m, spread Q + F P F'."""
    m = np.atleast_1d(np.asarray(m, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if trans.dim_in != m.shape[0]:
        raise DimensionMismatchError("transition and state dimensions disagree")
    m_pred = trans.F @ m
    P_pred = _symmetrize(trans.Q + trans.F @ P @ trans.F.T)
    validate_spread(P_pred)
    return m_pred, P_pred


def kalman_update(m_pred, P_pred, obs: GaussianObservationFactor):
    """Observation update; returns (mean, spread, scale).

    ``scale`` is the supremum of the unnormalized product
    f_pred(x) h(O x), equal to exp(-0.5 nu' S^{-1} nu) with innovation
    nu = y - O m_pred and S = O P_pred O' + R.
    """
    m_pred = np.atleast_1d(np.asarray(m_pred, dtype=float))
    P_pred = np.atleast_2d(np.asarray(P_pred, dtype=float))
    O, R, y = obs.O, obs.R, obs.y
    if O.shape[1] != m_pred.shape[0]:
        raise DimensionMismatchError("observation map and state dimensions disagree")
    S = _symmetrize(O @ P_pred @ O.T + R)
    validate_spread(S)
    Sinv = np.linalg.inv(S)
    K = P_pred @ O.T @ Sinv
    nu = y - O @ m_pred
    m_upd = m_pred + K @ nu
    d = m_pred.shape[0]
    # Joseph form keeps the updated spread symmetric PD under roundoff
    IKO = np.eye(d) - K @ O
    P_upd = _symmetrize(IKO @ P_pred @ IKO.T + K @ R @ K.T)
    scale = math.exp(-0.5 * float(nu @ Sinv @ nu))
    return m_upd, P_upd, scale
