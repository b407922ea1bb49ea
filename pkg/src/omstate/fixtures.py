"""Reusable fixture builders for verification runs and shipped example files."""

from __future__ import annotations

import numpy as np

from .gaussian import GaussianTransition
from .model import (
    GridTransition,
    LinearGaussianDynamics,
    ObservedInfo,
    Scenario,
)
from .outer_measure import FiniteOuterMeasure
from .possibility import GaussianPossibility, GridPossibility, IndicatorPossibility, PointSet


def coin_outer_measure(confidence=0.75):
    """Two-hypothesis sensor: confidence on tails (point 0), rest on heads (point 1)."""
    tails = IndicatorPossibility(PointSet([[0.0]]))
    heads = IndicatorPossibility(PointSet([[1.0]]))
    return FiniteOuterMeasure([(confidence, tails), (1.0 - confidence, heads)])


def random_grid_possibility(rng, points):
    values = rng.uniform(0.05, 1.0, size=points.shape[0])
    values[rng.integers(points.shape[0])] = 1.0
    return GridPossibility(points, values / values.max())


def random_grid_transition(rng, points):
    n = points.shape[0]
    mat = rng.uniform(0.05, 1.0, size=(n, n))
    mat = mat / mat.max(axis=1, keepdims=True)
    return GridTransition(points, mat)


def random_grid_scenario(rng, n_states=3, horizon=3, prior_atoms=1, obs_atoms=1, seed=0):
    """A random finite-carrier scenario with identity observation maps."""
    points = np.arange(n_states, dtype=float).reshape(-1, 1)
    prior = FiniteOuterMeasure.normalized(
        [
            (rng.uniform(0.2, 1.0), random_grid_possibility(rng, points))
            for _ in range(prior_atoms)
        ]
    )
    transitions = [random_grid_transition(rng, points) for _ in range(horizon)]
    observations = []
    for _ in range(horizon + 1):
        atoms = [
            (rng.uniform(0.2, 1.0), random_grid_possibility(rng, points))
            for _ in range(obs_atoms)
        ]
        total = sum(v for v, _ in atoms)
        observations.append(ObservedInfo([(v / total, h) for v, h in atoms]))
    return Scenario(
        horizon=horizon,
        prior=prior,
        transitions=transitions,
        observations=observations,
        rng_seed=seed,
    )


def random_stable_system(rng, d):
    """Random stable linear-Gaussian parameters (spectral radius < 1)."""
    A = rng.normal(size=(d, d))
    F = 0.9 * A / max(1.0, np.max(np.abs(np.linalg.eigvals(A))))
    Q = _random_spd(rng, d)
    P0 = _random_spd(rng, d)
    m0 = rng.normal(size=d)
    k = max(1, d // 2) if d > 1 else 1
    O = rng.normal(size=(k, d))
    R = _random_spd(rng, k)
    return m0, P0, F, Q, O, R


def _random_spd(rng, d):
    A = rng.normal(size=(d, d))
    return A @ A.T + (0.5 + d) * np.eye(d)


def gaussian_scenario(m0, P0, F, Q, O, R, measurements, seed=0):
    """Scenario whose observations are standard Gaussian measurements."""
    T = len(measurements) - 1
    prior = FiniteOuterMeasure.dirac(GaussianPossibility(m0, P0))
    transitions = [GaussianTransition(F, Q) for _ in range(T)]
    observations = [
        ObservedInfo([(1.0, GaussianPossibility(np.atleast_1d(y), R))], obs_map=O)
        for y in measurements
    ]
    return Scenario(
        horizon=T,
        prior=prior,
        transitions=transitions,
        observations=observations,
        rng_seed=seed,
    )


def dependent_composition_fixture():
    """A 2-point, two-time fixture whose forward and backward conditional
    compositions disagree, plus an independent separable fixture where they
    collapse to the same product.

    Both directions are derived from the same two weighted joint possibilities
    by atom-wise conditional factorization; the multi-atom cross terms make
    the nesting order matter.
    """
    u1 = np.array([[1.0, 0.1], [0.2, 0.6]])
    u2 = np.array([[0.3, 1.0], [0.9, 0.05]])
    weights = [0.5, 0.5]
    joints = [u1, u2]

    prior = []
    fwd_kernel = []
    final = []
    bwd_kernel = []
    for w, u in zip(weights, joints):
        m0 = u.max(axis=1)
        prior.append((w, m0 / m0.max()))
        fwd_kernel.append((w, u / m0[:, None]))
        m1 = u.max(axis=0)
        final.append((w, m1 / m1.max()))
        bwd_kernel.append((w, u / m1[None, :]))
    phi = np.array([[1.0, 0.0], [0.0, 1.0]])
    return {
        "prior": prior,
        "forward_kernels": [fwd_kernel],
        "final": final,
        "backward_kernels": [bwd_kernel],
        "phi": phi,
    }


def separable_composition_fixture():
    """Independent kernels and a separable box test function: both nesting
    orders equal the product of per-time outer evaluations."""
    f0 = [(0.6, np.array([1.0, 0.4])), (0.4, np.array([0.5, 1.0]))]
    g1 = np.array([1.0, 0.3])
    kernels = [[(1.0, np.broadcast_to(g1, (2, 2)).copy())]]
    final = [(1.0, g1)]
    bwd = [[(0.6, np.broadcast_to(np.array([[1.0], [0.4]]), (2, 2)).copy()),
            (0.4, np.broadcast_to(np.array([[0.5], [1.0]]), (2, 2)).copy())]]
    phi = np.outer(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    per_time = (
        sum(w * np.max(f * np.array([1.0, 0.0])) for w, f in f0)
        * np.max(g1 * np.array([0.0, 1.0]))
    )
    return {"prior": f0, "forward_kernels": kernels, "final": final,
            "backward_kernels": bwd, "phi": phi, "expected": float(per_time)}
