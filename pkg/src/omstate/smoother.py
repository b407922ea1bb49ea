"""Smoothing: exhaustive joint construction on finite carriers and the
backward recursion (grid exactly, Gaussian in closed form)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    SizeCapError,
    UnsupportedFamilyError,
    ValidationError,
)
from .filter import FilterState
from .gaussian import GaussianTransition, kalman_predict
from .grid_oracle import _atom_values_on_carrier, _obs_atom_values
from .model import GridTransition, Scenario
from .possibility import GaussianPossibility, GridPossibility

JOINT_SIZE_CAP = 10**7


@dataclass
class SmoothingResult:
    """Per-time smoothed marginals, with the joint kept in grid mode."""

    marginals: list  # length T+1; (weight, possibility) atom lists
    joint: np.ndarray | None = None  # grid mode, single-combination only
    normalizer: float = 1.0
    backward_conditionals: list | None = None

    def single_marginals(self):
        """Unique possibility per time; requires single-atom marginals."""
        out = []
        for atoms in self.marginals:
            if len(atoms) != 1:
                raise ValidationError("marginals are multi-atom")
            out.append(atoms[0][1])
        return out


# ---------------------------------------------------------------------------
# joint smoothing on grids


def _joint_product(prior_values, trans_matrices, obs_values):
    """Broadcasted product over the trajectory space (contrast: the oracle
    module computes each entry with explicit loops)."""
    T = len(trans_matrices)
    n = prior_values.shape[0]
    if n ** (T + 1) > JOINT_SIZE_CAP:
        raise SizeCapError("joint smoothing table would exceed the size cap")
    shape = [1] * (T + 1)
    shape[0] = n
    u = prior_values.reshape(shape) * np.ones((n,) * (T + 1))
    for t in range(1, T + 1):
        shape = [1] * (T + 1)
        shape[t - 1] = n
        shape[t] = n
        u = u * trans_matrices[t - 1].reshape(shape)
    for t in range(T + 1):
        shape = [1] * (T + 1)
        shape[t] = n
        u = u * obs_values[t].reshape(shape)
    return u


def joint_smooth_grid(scenario: Scenario) -> SmoothingResult:
    """Build the joint trajectory possibility and sup-marginalize per time.

    Multi-atom priors/observations expand into weighted joint atoms with
    weights proportional to the input weights times the joint supremum.
    """
    trans = []
    for tr in scenario.transitions:
        if not isinstance(tr, GridTransition):
            raise UnsupportedFamilyError("joint smoothing needs grid transitions")
        trans.append(tr.matrix)
    if scenario.transitions:
        points = scenario.transitions[0].points
    else:
        points = _carrier_from_prior(scenario)
    T = scenario.horizon

    obs_choices = []
    for obs in scenario.observations:
        obs_choices.append([(v, _obs_atom_values(h, obs, points)) for v, h in obs.atoms])

    combos = []
    for w0, f0 in scenario.prior.atoms:
        pv = _atom_values_on_carrier(f0, points)
        for pick in itertools.product(*obs_choices):
            pref = w0 * float(np.prod([v for v, _ in pick]))
            u = _joint_product(pv, trans, [hv for _, hv in pick])
            norm = float(u.max())
            if norm > 0.0:
                combos.append((pref * norm, u / norm))
    if not combos:
        raise ValidationError("smoothing scenario is incompatible (all-zero joint)")
    total = sum(w for w, _ in combos)
    combos = [(w / total, u) for w, u in combos]

    marginals = []
    for t in range(T + 1):
        axes = tuple(a for a in range(T + 1) if a != t)
        atoms = []
        for w, u in combos:
            values = u.max(axis=axes) if axes else u
            atoms.append((w, GridPossibility(points, values / values.max())))
        marginals.append(atoms)
    joint = combos[0][1] if len(combos) == 1 else None
    return SmoothingResult(marginals=marginals, joint=joint, normalizer=float(total))


def _carrier_from_prior(scenario):
    for _, f in scenario.prior.atoms:
        if isinstance(f, GridPossibility):
            return f.points
    raise UnsupportedFamilyError("cannot infer the finite carrier from the prior")


# ---------------------------------------------------------------------------
# backward recursion


def _single_atom(fs: FilterState):
    if len(fs.posterior) != 1:
        raise ValidationError("backward smoothing needs single-atom filtered states")
    return fs.posterior.atoms[0][1]


def backward_smooth(filtered, transitions) -> SmoothingResult:
    """Backward pass from filtered states; grid carriers are exact, Gaussian
    carriers use the closed-form gain recursion."""
    if len(filtered) != len(transitions) + 1:
        raise ValidationError("filtered states and transitions lengths disagree")
    atoms = [_single_atom(fs) for fs in filtered]
    if all(isinstance(f, GridPossibility) for f in atoms):
        return _backward_grid(atoms, transitions)
    if all(isinstance(f, GaussianPossibility) for f in atoms):
        return _backward_gaussian(atoms, transitions)
    raise UnsupportedFamilyError("backward smoothing needs all-grid or all-Gaussian states")


def _backward_grid(atoms, transitions):
    T = len(transitions)
    smoothed = [None] * (T + 1)
    smoothed[T] = atoms[T].values
    conditionals = [None] * T
    for t in range(T - 1, -1, -1):
        tr = transitions[t]
        if not isinstance(tr, GridTransition):
            raise UnsupportedFamilyError("grid backward smoothing needs grid transitions")
        raw = tr.matrix * atoms[t].values[:, None]  # (x_t, x_{t+1})
        col = raw.max(axis=0)
        # 0/0 -> 1: the conditional is unconstrained where the marginal vanishes
        cond = np.where(col > 0.0, raw / np.where(col > 0.0, col, 1.0), 1.0)
        conditionals[t] = cond
        values = np.max(cond * smoothed[t + 1][None, :], axis=1)
        smoothed[t] = values / values.max()
    points = atoms[0].points
    marginals = [[(1.0, GridPossibility(points, v))] for v in smoothed]
    return SmoothingResult(marginals=marginals, backward_conditionals=conditionals)


def _backward_gaussian(atoms, transitions):
    T = len(transitions)
    means = [f.mean for f in atoms]
    spreads = [f.spread for f in atoms]
    sm = [None] * (T + 1)
    sP = [None] * (T + 1)
    sm[T], sP[T] = means[T], spreads[T]
    gains = [None] * T
    for t in range(T - 1, -1, -1):
        tr = transitions[t]
        if not isinstance(tr, GaussianTransition):
            raise UnsupportedFamilyError(
                "Gaussian backward smoothing needs Gaussian transitions"
            )
        m_pred, P_pred = kalman_predict(means[t], spreads[t], tr)
        G = spreads[t] @ tr.F.T @ np.linalg.inv(P_pred)
        gains[t] = G
        sm[t] = means[t] + G @ (sm[t + 1] - m_pred)
        P = spreads[t] + G @ (sP[t + 1] - P_pred) @ G.T
        sP[t] = 0.5 * (P + P.T)
    marginals = [
        [(1.0, GaussianPossibility(sm[t], sP[t]))] for t in range(T + 1)
    ]
    return SmoothingResult(marginals=marginals, backward_conditionals=gains)
