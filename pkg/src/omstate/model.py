"""Scenario containers: transitions, observed information, and the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .gaussian import GaussianTransition
from .outer_measure import FiniteOuterMeasure
from .possibility import (
    Box,
    GaussianPossibility,
    GridPossibility,
    IndicatorPossibility,
    PointSet,
    validate_spread,
)


class GridTransition:
    """Single-possibility kernel on a finite carrier: row x' of `matrix` is the
    conditional possibility over the next state, so every row has max 1."""

    def __init__(self, points, matrix):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        n = self.points.shape[0]
        if self.matrix.shape != (n, n):
            raise DimensionMismatchError("grid transition matrix does not match carrier")
        if np.any(self.matrix < 0.0) or np.any(self.matrix > 1.0 + 1e-12):
            raise ValidationError("grid transition entries must lie in [0, 1]")
        row_max = self.matrix.max(axis=1)
        if np.any(np.abs(row_max - 1.0) > 1e-9):
            raise ValidationError("each grid transition row must have max 1")
        self.matrix = self.matrix / row_max[:, None]


class IndicatorTransition:
    """Set-valued kernel on a finite carrier: reach[x'] is the subset G_{x'}."""

    def __init__(self, points, reach):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.reach = np.asarray(reach, dtype=bool)
        n = self.points.shape[0]
        if self.reach.shape != (n, n):
            raise DimensionMismatchError("reach matrix does not match carrier")
        if not self.reach.any(axis=1).all():
            raise ValidationError("every state must reach a nonempty set")


class MarkovKernel:
    """Classical Markov kernel on a finite carrier (stochastic matrix)."""

    def __init__(self, points, matrix):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        n = self.points.shape[0]
        if self.matrix.shape != (n, n):
            raise DimensionMismatchError("Markov matrix does not match carrier")
        if np.any(self.matrix < 0.0):
            raise ValidationError("Markov matrix entries must be nonnegative")
        rows = self.matrix.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-12):
            raise ValidationError("Markov matrix rows must sum to 1")

    def sample(self, rng, index):
        return int(rng.choice(self.matrix.shape[0], p=self.matrix[index]))


class LinearGaussianKernel:
    """Classical linear-Gaussian Markov kernel x' ~ N(F x, Q)."""

    def __init__(self, F, Q):
        self.F = np.atleast_2d(np.asarray(F, dtype=float))
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        validate_spread(self.Q)

    def sample(self, rng, x):
        return self.F @ np.asarray(x, float) + rng.multivariate_normal(
            np.zeros(self.Q.shape[0]), self.Q
        )


SINGLE_POSSIBILITY_KINDS = (GaussianTransition, GridTransition, IndicatorTransition)
MARKOV_KINDS = (MarkovKernel, LinearGaussianKernel)


class ObservedInfo:
    """Weighted observation possibilities plus the observation map.

    ``obs_map`` is None for the identity, a (k, d) matrix for a linear map, or
    an integer table (state grid index -> observation grid index) for finite
    carriers paired with grid-valued atoms.
    """

    def __init__(self, atoms, obs_map=None):
        atoms = [(float(v), h) for v, h in atoms]
        if not atoms:
            raise ValidationError("observed info needs at least one atom")
        if any(v <= 0.0 for v, _ in atoms):
            raise ValidationError("observation weights must be strictly positive")
        total = sum(v for v, _ in atoms)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"observation weights must sum to 1, got {total}")
        self.atoms = atoms
        if obs_map is not None and not isinstance(obs_map, np.ndarray):
            obs_map = np.asarray(obs_map)
        self.obs_map = obs_map

    def is_identity(self):
        return self.obs_map is None

    def is_table(self):
        return self.obs_map is not None and self.obs_map.dtype.kind in "iu"

    def linear_matrix(self):
        if self.obs_map is None:
            raise ValidationError("identity observation map has no matrix")
        return np.atleast_2d(np.asarray(self.obs_map, dtype=float))


def observed_info_from_measurement(y, R, O=None):
    """Standard-measurement constructor: a single Gaussian atom centred at y."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    atom = GaussianPossibility(y, R)
    if O is not None:
        O = np.atleast_2d(np.asarray(O, dtype=float))
        if O.shape[0] != y.shape[0]:
            raise DimensionMismatchError("observation map and measurement disagree")
    return ObservedInfo([(1.0, atom)], obs_map=O)


def vacuous_observation(dim):
    """No information: the indicator of the whole observation space."""
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    return ObservedInfo([(1.0, IndicatorPossibility(Box(lo, hi)))])


@dataclass
class LinearGaussianDynamics:
    """Ground-truth generative parameters used only to manufacture data."""

    F: np.ndarray
    Q: np.ndarray
    x0: np.ndarray
    O: np.ndarray
    R: np.ndarray | None = None  # optional observation noise

    def __post_init__(self):
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        self.O = np.atleast_2d(np.asarray(self.O, dtype=float))
        if self.R is not None:
            self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
            validate_spread(self.R)
        if not np.allclose(self.Q, 0.0):
            validate_spread(self.Q)
        if self.F.shape[0] != self.x0.shape[0] or self.O.shape[1] != self.x0.shape[0]:
            raise DimensionMismatchError("dynamics dimensions disagree")


@dataclass
class Trajectory:
    states: list
    observations: list

    def __post_init__(self):
        if len(self.states) != len(self.observations):
            raise ValidationError("trajectory state/observation lengths differ")


@dataclass
class Scenario:
    """Horizon, prior, per-step transitions and observed info; one filtering run."""

    horizon: int
    prior: FiniteOuterMeasure
    transitions: list
    observations: list
    rng_seed: int = 0
    dynamics: LinearGaussianDynamics | None = None

    def __post_init__(self):
        if self.horizon < 0:
            raise ValidationError("horizon must be nonnegative")
        if len(self.transitions) != self.horizon:
            raise ValidationError(
                f"expected {self.horizon} transitions, got {len(self.transitions)}"
            )
        if len(self.observations) != self.horizon + 1:
            raise ValidationError(
                f"expected {self.horizon + 1} observations, got {len(self.observations)}"
            )


def simulate(scenario: Scenario, dynamics: LinearGaussianDynamics | None = None):
    """Draw a ground-truth trajectory; deterministic for a fixed rng_seed."""
    dyn = dynamics if dynamics is not None else scenario.dynamics
    if dyn is None:
        raise ValidationError("simulate requires ground-truth dynamics")
    rng = np.random.default_rng(scenario.rng_seed)
    d = dyn.x0.shape[0]
    k = dyn.O.shape[0]
    states = [dyn.x0.copy()]
    for _ in range(scenario.horizon):
        noise = (
            rng.multivariate_normal(np.zeros(d), dyn.Q)
            if not np.allclose(dyn.Q, 0.0)
            else np.zeros(d)
        )
        states.append(dyn.F @ states[-1] + noise)
    observations = []
    for x in states:
        y = dyn.O @ x
        if dyn.R is not None:
            y = y + rng.multivariate_normal(np.zeros(k), dyn.R)
        observations.append(y)
    return Trajectory(states=states, observations=observations)
