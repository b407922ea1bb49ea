"""Forward recursions: finite-sum predict/update, the single-possibility
filter, pruning, and the known-transition particle filter."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DimensionMismatchError,
    IncompatibleError,
    UnsupportedFamilyError,
    ValidationError,
)
from .gaussian import (
    GaussianObservationFactor,
    GaussianTransition,
    kalman_predict,
    kalman_update,
)
from .model import (
    GridTransition,
    IndicatorTransition,
    LinearGaussianKernel,
    MarkovKernel,
    ObservedInfo,
)
from .outer_measure import FiniteOuterMeasure
from .possibility import (
    Box,
    GaussianPossibility,
    GridPossibility,
    IndicatorPossibility,
    MaxMixture,
    PointSet,
    ScaledFunction,
    product,
)

DEFAULT_MAX_ATOMS = 64
DEFAULT_MIN_WEIGHT = 1e-8


@dataclass
class FilterState:
    """Posterior at a time step plus step diagnostics."""

    t: int
    posterior: FiniteOuterMeasure
    compatibility: float = 1.0

    @property
    def atom_count(self):
        return len(self.posterior)

    def map_estimate(self):
        """Mode of the heaviest atom; lowest-index tie-break."""
        best = max(range(len(self.posterior)), key=lambda i: self.posterior.atoms[i][0])
        return _mode_of(self.posterior.atoms[best][1])


def _mode_of(f):
    if isinstance(f, GaussianPossibility):
        return f.mean.copy()
    if isinstance(f, GridPossibility):
        return f.points[int(np.argmax(f.values))].copy()
    if isinstance(f, MaxMixture):
        w, g = max(f.components, key=lambda c: c[0])
        return g.mean.copy()
    if isinstance(f, IndicatorPossibility):
        if isinstance(f.support, PointSet):
            return f.support.points[0].copy()
        lo, hi = f.support.lo, f.support.hi
        mid = np.where(np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi), 0.0)
        return mid
    raise UnsupportedFamilyError(f"no mode for {f.family()}")


# ---------------------------------------------------------------------------
# prediction


def _predict_atom(f, trans):
    if isinstance(trans, GaussianTransition):
        if isinstance(f, GaussianPossibility):
            m, P = kalman_predict(f.mean, f.spread, trans)
            return GaussianPossibility(m, P)
        if isinstance(f, MaxMixture):
            return MaxMixture([(w, _predict_atom(g, trans)) for w, g in f.components])
    if isinstance(trans, GridTransition):
        if isinstance(f, GridPossibility):
            if f.points.shape[0] != trans.matrix.shape[0]:
                raise DimensionMismatchError("grid atom does not match the transition")
            # max-product matvec over the (max, x) semiring
            pred = np.max(f.values[:, None] * trans.matrix, axis=0)
            return GridPossibility(trans.points, pred)
        if isinstance(f, IndicatorPossibility) and isinstance(f.support, PointSet):
            values = np.array(
                [1.0 if f.support.contains(p) else 0.0 for p in trans.points]
            )
            return _predict_atom(GridPossibility(trans.points, values), trans)
    if isinstance(trans, IndicatorTransition):
        if isinstance(f, IndicatorPossibility) and isinstance(f.support, PointSet):
            mask = np.array([f.support.contains(p) for p in trans.points])
            reachable = trans.reach[mask].any(axis=0)
            if not reachable.any():
                raise ValidationError("indicator prediction reached the empty set")
            return IndicatorPossibility(PointSet(trans.points[reachable]))
    raise UnsupportedFamilyError(
        f"predict not supported for {f.family()} with {type(trans).__name__}"
    )


def predict(state: FilterState, trans) -> FilterState:
    """Time prediction; preserves atom count and weights."""
    predicted = state.posterior.map_atoms(lambda f: _predict_atom(f, trans))
    return FilterState(t=state.t + 1, posterior=predicted, compatibility=state.compatibility)


# ---------------------------------------------------------------------------
# update


def _obs_values_on_points(h, obs: ObservedInfo, points):
    """Evaluate h(O(x)) on a finite list of state points."""
    if obs.is_identity():
        if isinstance(h, GridPossibility):
            return np.array([h(p) for p in points])
        return np.array([h(p) for p in points])
    if obs.is_table():
        table = np.asarray(obs.obs_map, int)
        if table.shape[0] != points.shape[0]:
            raise DimensionMismatchError("observation table does not match the carrier")
        if isinstance(h, GridPossibility):
            return h.values[table]
        raise UnsupportedFamilyError("table observation maps require grid atoms")
    O = obs.linear_matrix()
    return np.array([h(O @ p) for p in points])


def _pull_box_through(obs: ObservedInfo, support: Box, dim):
    """Preimage of a box under the observation map, when it stays a box."""
    if obs.is_identity():
        return support
    O = obs.linear_matrix()
    k, d = O.shape
    if k == d and np.all(np.abs(O - np.diag(np.diag(O))) <= 1e-12):
        a = np.diag(O)
        if np.any(a == 0.0):
            raise UnsupportedFamilyError("singular diagonal observation map")
        lo = np.where(a > 0, support.lo / a, support.hi / a)
        hi = np.where(a > 0, support.hi / a, support.lo / a)
        return Box(lo, hi)
    raise UnsupportedFamilyError(
        "box observation pullback needs an identity or diagonal square map"
    )


def _cross_product(f, h, obs: ObservedInfo, grid_res=None) -> ScaledFunction:
    """ScaledFunction form of f . (h o O) for one observation atom h."""
    if isinstance(h, GaussianPossibility):
        if isinstance(f, GaussianPossibility):
            O = np.eye(f.dim) if obs.is_identity() else obs.linear_matrix()
            factor = GaussianObservationFactor(O, h.spread, h.mean)
            m, P, scale = kalman_update(f.mean, f.spread, factor)
            return ScaledFunction(GaussianPossibility(m, P), scale)
        if isinstance(f, MaxMixture):
            raw = []
            for w, g in f.components:
                sf = _cross_product(g, h, obs, grid_res)
                if sf.scale > 0.0:
                    raw.append((w * sf.scale, sf.base))
            if not raw:
                return ScaledFunction(None, 0.0)
            mix, scale = MaxMixture.from_raw(raw)
            if len(mix.components) == 1:
                return ScaledFunction(mix.components[0][1], scale)
            return ScaledFunction(mix, scale)
        if isinstance(f, GridPossibility):
            vals = _obs_values_on_points(h, obs, f.points)
            base, scale = GridPossibility.from_raw(f.points, f.values * vals)
            return ScaledFunction(base, scale)
        if isinstance(f, IndicatorPossibility) and isinstance(f.support, PointSet):
            vals = _obs_values_on_points(h, obs, f.support.points)
            base, scale = GridPossibility.from_raw(f.support.points, vals)
            return ScaledFunction(base, scale)
        if isinstance(f, IndicatorPossibility) and isinstance(f.support, Box):
            if obs.is_identity():
                return product(f, h, grid_res=grid_res)
            O = obs.linear_matrix()
            if O.shape[0] == O.shape[1]:
                Oinv = np.linalg.inv(O)
                pulled = GaussianPossibility(Oinv @ h.mean, Oinv @ h.spread @ Oinv.T)
                return product(f, pulled, grid_res=grid_res)
            raise UnsupportedFamilyError(
                "Gaussian observation pullback onto a box prior needs a square map"
            )
    if isinstance(h, IndicatorPossibility):
        if isinstance(f, GridPossibility) or (
            isinstance(f, IndicatorPossibility) and isinstance(f.support, PointSet)
        ):
            pts = f.points if isinstance(f, GridPossibility) else f.support.points
            vals = _obs_values_on_points(h, obs, pts)
            base_vals = (f.values if isinstance(f, GridPossibility) else 1.0) * vals
            base, scale = GridPossibility.from_raw(pts, base_vals)
            return ScaledFunction(base, scale)
        if isinstance(h.support, Box):
            pulled = IndicatorPossibility(_pull_box_through(obs, h.support, f.dim))
            return product(f, pulled, grid_res=grid_res)
        if obs.is_identity():
            return product(f, h, grid_res=grid_res)
        raise UnsupportedFamilyError("point-set observation needs an identity map")
    if isinstance(h, GridPossibility):
        if isinstance(f, GridPossibility):
            vals = _obs_values_on_points(h, obs, f.points)
            base, scale = GridPossibility.from_raw(f.points, f.values * vals)
            return ScaledFunction(base, scale)
        if isinstance(f, IndicatorPossibility) and isinstance(f.support, PointSet):
            vals = _obs_values_on_points(h, obs, f.support.points)
            base, scale = GridPossibility.from_raw(f.support.points, vals)
            return ScaledFunction(base, scale)
    raise UnsupportedFamilyError(
        f"update not supported for {f.family()} with {h.family()}"
    )


def update(state: FilterState, obs: ObservedInfo, grid_res=None) -> FilterState:
    """Observation update; atoms are rescaled cross products, weights renormalized."""
    raw = []
    for w, f in state.posterior.atoms:
        for v, h in obs.atoms:
            sf = _cross_product(f, h, obs, grid_res)
            if sf.scale > 1e-12:
                raw.append((w * v * sf.scale, sf.base))
    total = sum(w for w, _ in raw)
    if total <= 1e-12:
        raise IncompatibleError(
            f"observed information at t={state.t} is incompatible with the prediction"
        )
    posterior = FiniteOuterMeasure.normalized(raw)
    return FilterState(t=state.t, posterior=posterior, compatibility=float(total))


def filter_single(f_prev, trans, obs: ObservedInfo, grid_res=None):
    """Single-possibility filter step; equals the one-atom outer-measure path."""
    if len(obs.atoms) != 1:
        raise ValidationError("filter_single needs a single observation atom")
    state = FilterState(t=0, posterior=FiniteOuterMeasure.dirac(f_prev))
    state = predict(state, trans)
    state = update(state, obs, grid_res=grid_res)
    (_, f), = state.posterior.atoms
    return f


def prune(state: FilterState, max_atoms=DEFAULT_MAX_ATOMS, min_weight=DEFAULT_MIN_WEIGHT):
    """Keep the heaviest atoms, drop near-zero weights, renormalize."""
    if max_atoms < 1:
        raise ValidationError("max_atoms must be at least 1")
    atoms = state.posterior.atoms
    order = sorted(range(len(atoms)), key=lambda i: (-atoms[i][0], i))
    keep = {i for i in order[:max_atoms] if atoms[i][0] >= min_weight}
    if not keep:
        keep = {order[0]}
    posterior = FiniteOuterMeasure.normalized([atoms[i] for i in sorted(keep)])
    return FilterState(t=state.t, posterior=posterior, compatibility=state.compatibility)


def run_filter(scenario, grid_res=None, max_atoms=DEFAULT_MAX_ATOMS,
               min_weight=DEFAULT_MIN_WEIGHT, prune_each_step=True):
    """Full forward pass; returns the list of updated FilterStates (t = 0..T)."""
    state = FilterState(t=0, posterior=scenario.prior)
    state = update(state, scenario.observations[0], grid_res=grid_res)
    if prune_each_step:
        state = prune(state, max_atoms, min_weight)
    states = [state]
    for t in range(1, scenario.horizon + 1):
        state = predict(state, scenario.transitions[t - 1])
        state = update(state, scenario.observations[t], grid_res=grid_res)
        if prune_each_step:
            state = prune(state, max_atoms, min_weight)
        states.append(state)
    return states


# ---------------------------------------------------------------------------
# known-transition particle filter


@dataclass
class ParticleState:
    """Weighted particle cloud; weights sum to 1."""

    states: np.ndarray  # (N, d)
    weights: np.ndarray  # (N,)

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.states.shape[0] != self.weights.shape[0] or self.states.shape[0] == 0:
            raise ValidationError("particle states/weights mismatch or empty cloud")
        if np.any(self.weights < 0.0):
            raise ValidationError("particle weights must be nonnegative")
        total = self.weights.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValidationError("particle weights must sum to 1")

    def mean(self):
        return self.weights @ self.states

    def ess(self):
        return 1.0 / float(np.sum(self.weights**2))


def systematic_resample(weights, rng):
    """Systematic resampling; deterministic given the generator state."""
    n = weights.shape[0]
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(np.cumsum(weights), positions)


def _carrier_indices(states, points):
    """Match particle states to carrier points (exact up to 1e-9)."""
    diffs = np.abs(states[:, None, :] - points[None, :, :]).max(axis=2)
    idx = diffs.argmin(axis=1)
    if np.any(diffs[np.arange(states.shape[0]), idx] > 1e-9):
        raise ValidationError("particle states are not carrier points")
    return idx


def _potential_on_points(obs: ObservedInfo, points):
    pot = np.zeros(points.shape[0])
    for v, h in obs.atoms:
        pot += v * _obs_values_on_points(h, obs, points)
    return pot


def run_particle_filter(scenario, n_particles, seed=0, ess_fraction=0.5):
    """Full particle pass over a scenario with classical Markov transitions.

    The prior must be a single atom: a grid atom is turned into a sampling
    distribution by normalizing its values to sum to 1 (a deliberate reading
    of the possibility weights as relative frequencies), a Gaussian atom is
    sampled directly.  Returns the list of ParticleStates (t = 0..T).
    """
    rng = np.random.default_rng(seed)
    if len(scenario.prior) != 1:
        raise ValidationError("the particle filter needs a single-atom prior")
    (_, f0), = scenario.prior.atoms
    if isinstance(f0, GridPossibility):
        p = f0.values / f0.values.sum()
        idx = rng.choice(f0.points.shape[0], size=n_particles, p=p)
        states = f0.points[idx]
        pot = _potential_on_points(scenario.observations[0], f0.points)[idx]
    elif isinstance(f0, GaussianPossibility):
        states = rng.multivariate_normal(f0.mean, f0.spread, size=n_particles)
        pot = _potential_on_points(scenario.observations[0], states)
    else:
        raise UnsupportedFamilyError(
            f"particle filter priors must be grid or Gaussian, got {f0.family()}"
        )
    total = pot.sum()
    if total <= 1e-300:
        raise IncompatibleError("initial particle potential vanished")
    weights = pot / total
    if 1.0 / float(np.sum(weights**2)) < ess_fraction * n_particles:
        keep = systematic_resample(weights, rng)
        states = states[keep]
        weights = np.full(n_particles, 1.0 / n_particles)
    out = [ParticleState(states=states, weights=weights)]
    for t in range(1, scenario.horizon + 1):
        out.append(
            particle_step(
                out[-1],
                scenario.transitions[t - 1],
                scenario.observations[t],
                rng,
                ess_fraction=ess_fraction,
            )
        )
    return out


def particle_step(state: ParticleState, kernel, obs: ObservedInfo, rng,
                  ess_fraction=0.5) -> ParticleState:
    """Propagate through a classical Markov kernel, reweight by the observation
    potential, and resample systematically when the effective sample size drops
    below ``ess_fraction`` of the cloud."""
    n = state.states.shape[0]
    if isinstance(kernel, MarkovKernel):
        idx = _carrier_indices(state.states, kernel.points)
        cum = np.cumsum(kernel.matrix, axis=1)
        u = rng.random(n)
        nxt = (cum[idx] < u[:, None]).sum(axis=1)
        moved = kernel.points[nxt]
        pot = _potential_on_points(obs, kernel.points)[nxt]
    elif isinstance(kernel, LinearGaussianKernel):
        if np.allclose(kernel.Q, 0.0):
            moved = state.states @ kernel.F.T
        else:
            noise = rng.multivariate_normal(
                np.zeros(kernel.Q.shape[0]), kernel.Q, size=n
            )
            moved = state.states @ kernel.F.T + noise
        pot = _potential_on_points(obs, moved)
    else:
        raise UnsupportedFamilyError(
            f"particle_step needs a classical Markov kernel, got {type(kernel).__name__}"
        )
    raw = state.weights * pot
    total = raw.sum()
    if total <= 1e-300:
        raise IncompatibleError("total particle potential vanished")
    weights = raw / total
    if 1.0 / float(np.sum(weights**2)) < ess_fraction * n:
        keep = systematic_resample(weights, rng)
        moved = moved[keep]
        weights = np.full(n, 1.0 / n)
    return ParticleState(states=moved, weights=weights)
