"""Independent textbook reference recursions.

These implementations deliberately avoid the possibility-function code paths:
they are the second route of every dual-route check (standard Kalman filter,
Rauch-style smoother, exact discrete HMM filter).
"""

from __future__ import annotations

import numpy as np


def kalman_filter_reference(m0, P0, F, Q, O, R, measurements):
    """Plain covariance-form Kalman filter over a measurement sequence.

    The first measurement updates the prior at t=0 (no prediction step);
    returns lists of filtered means and covariances.
    """
    m = np.asarray(m0, float).copy()
    P = np.asarray(P0, float).copy()
    means, covs = [], []
    d = m.shape[0]
    for t, y in enumerate(measurements):
        if t > 0:
            m = F @ m
            P = F @ P @ F.T + Q
        S = O @ P @ O.T + R
        K = P @ O.T @ np.linalg.inv(S)
        m = m + K @ (np.asarray(y, float) - O @ m)
        P = (np.eye(d) - K @ O) @ P
        means.append(m.copy())
        covs.append(P.copy())
    return means, covs


def rts_smoother_reference(means, covs, F, Q):
    """Rauch-Tung-Striebel pass over filtered means/covariances."""
    T = len(means) - 1
    sm = [None] * (T + 1)
    sP = [None] * (T + 1)
    sm[T], sP[T] = means[T].copy(), covs[T].copy()
    for t in range(T - 1, -1, -1):
        P_pred = F @ covs[t] @ F.T + Q
        G = covs[t] @ F.T @ np.linalg.inv(P_pred)
        sm[t] = means[t] + G @ (sm[t + 1] - F @ means[t])
        sP[t] = covs[t] + G @ (sP[t + 1] - P_pred) @ G.T
    return sm, sP


def discrete_hmm_filter(prior_probs, transition, potentials):
    """Exact sum-product filter on a finite state space.

    ``potentials[t]`` is the observation potential vector at time t; the first
    potential applies to the prior.  Returns the list of filtered probability
    vectors.
    """
    p = np.asarray(prior_probs, float) * np.asarray(potentials[0], float)
    p = p / p.sum()
    out = [p.copy()]
    for t in range(1, len(potentials)):
        p = (p @ np.asarray(transition, float)) * np.asarray(potentials[t], float)
        p = p / p.sum()
        out.append(p.copy())
    return out
