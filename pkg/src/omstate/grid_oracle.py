"""Brute-force reference computations on finite carriers.

Everything here enumerates the full trajectory space with explicit loops and
no recursion, so agreement with the recursive filter/smoother modules is
evidence rather than circularity.  Use only at test scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import SizeCapError, UnsupportedFamilyError, ValidationError
from .model import GridTransition, ObservedInfo, Scenario
from .possibility import GridPossibility, IndicatorPossibility, PointSet

ORACLE_SIZE_CAP = 10**6


@dataclass
class JointTable:
    """Dense enumeration of trajectory values u(x_0, ..., x_T)."""

    table: np.ndarray  # shape (n,) * (T + 1)
    points: np.ndarray  # (n, d) carrier shared across times

    @property
    def horizon(self):
        return self.table.ndim - 1


def _atom_values_on_carrier(f, points):
    """Grid or finite-indicator atom as a dense value vector on the carrier."""
    if isinstance(f, GridPossibility):
        if f.points.shape != points.shape or not np.allclose(
            f.points, points, atol=1e-12
        ):
            raise ValidationError("atom carrier differs from the scenario carrier")
        return f.values
    if isinstance(f, IndicatorPossibility) and isinstance(f.support, PointSet):
        return np.array([1.0 if f.support.contains(p) else 0.0 for p in points])
    raise UnsupportedFamilyError(f"oracle needs finite-carrier atoms, got {f.family()}")


def _obs_atom_values(h, obs: ObservedInfo, points):
    """h(O(x)) as a dense value vector on the state carrier."""
    if obs.is_table():
        table = np.asarray(obs.obs_map, int)
        if not isinstance(h, GridPossibility):
            raise UnsupportedFamilyError("table observation maps require grid atoms")
        return h.values[table]
    if obs.is_identity():
        return _atom_values_on_carrier(h, points) if isinstance(
            h, (GridPossibility,)
        ) else np.array([h(p) for p in points])
    O = obs.linear_matrix()
    return np.array([h(O @ p) for p in points])


def brute_joint(prior_values, transition_matrices, obs_values):
    """Dense table u(x) = f_0(x_0) prod g_t(x_{t-1}, x_t) prod h_t(x_t).

    Every entry is computed by direct product over its own multi-index; no
    recursion and no shared partial results.
    """
    n = prior_values.shape[0]
    T = len(transition_matrices)
    if n ** (T + 1) > ORACLE_SIZE_CAP:
        raise SizeCapError("oracle joint table would exceed the size cap")
    table = np.zeros((n,) * (T + 1))
    for idx in itertools.product(range(n), repeat=T + 1):
        value = prior_values[idx[0]]
        for t in range(1, T + 1):
            value *= transition_matrices[t - 1][idx[t - 1], idx[t]]
        for t in range(T + 1):
            value *= obs_values[t][idx[t]]
        table[idx] = value
    return table


def sup_marginal(joint: JointTable, t):
    """Max over all other time indices, renormalized to max 1; returns
    (GridPossibility, scale)."""
    if not (0 <= t <= joint.horizon):
        raise ValidationError(f"time {t} outside horizon {joint.horizon}")
    axes = tuple(a for a in range(joint.table.ndim) if a != t)
    values = joint.table.max(axis=axes) if axes else joint.table
    scale = float(values.max(initial=0.0))
    if scale <= 0.0:
        raise ValidationError("joint table is identically zero")
    return GridPossibility(joint.points, values / scale), scale


def scenario_combinations(scenario: Scenario):
    """Enumerate (prefactor, JointTable) per prior x observation atom choice.

    The prefactor is w_i * prod_t v_t^{l_t}; combined with the table maximum it
    reproduces the unnormalized posterior weight of each filtered atom.
    """
    trans = []
    for tr in scenario.transitions:
        if not isinstance(tr, GridTransition):
            raise UnsupportedFamilyError("oracle scenarios need grid transitions")
        trans.append(tr.matrix)
    points = (
        scenario.transitions[0].points
        if scenario.transitions
        else _infer_carrier(scenario)
    )
    obs_choices = []
    for obs in scenario.observations:
        obs_choices.append(
            [(v, _obs_atom_values(h, obs, points)) for v, h in obs.atoms]
        )
    combos = []
    for w0, f0 in scenario.prior.atoms:
        prior_values = _atom_values_on_carrier(f0, points)
        for pick in itertools.product(*obs_choices):
            prefactor = w0 * float(np.prod([v for v, _ in pick]))
            table = brute_joint(prior_values, trans, [hv for _, hv in pick])
            combos.append((prefactor, JointTable(table=table, points=points)))
    return combos


def _infer_carrier(scenario):
    for _, f in scenario.prior.atoms:
        if isinstance(f, GridPossibility):
            return f.points
    raise UnsupportedFamilyError("cannot infer the finite carrier from the prior")


def oracle_filtered_marginals(scenario: Scenario, t):
    """Reference filtered outer measure at time t, from exhaustive enumeration.

    Truncates the scenario at time t and returns a list of (weight, values)
    pairs, one per atom combination, with weights normalized to sum 1.
    """
    truncated = Scenario(
        horizon=t,
        prior=scenario.prior,
        transitions=scenario.transitions[:t],
        observations=scenario.observations[: t + 1],
        rng_seed=scenario.rng_seed,
    )
    combos = scenario_combinations(truncated)
    out = []
    for prefactor, joint in combos:
        norm = float(joint.table.max())
        if norm <= 0.0:
            continue
        marg, _ = sup_marginal(joint, t)
        out.append((prefactor * norm, marg.values))
    total = sum(w for w, _ in out)
    if total <= 0.0:
        raise ValidationError("oracle scenario is incompatible")
    return [(w / total, v) for w, v in out]
