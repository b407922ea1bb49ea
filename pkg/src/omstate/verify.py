"""End-to-end oracle verification suites behind the CLI `verify` subcommand."""

from __future__ import annotations

import numpy as np

from . import fixtures
from .filter import run_filter
from .fixtures import (
    coin_outer_measure,
    dependent_composition_fixture,
    gaussian_scenario,
    random_grid_scenario,
    random_stable_system,
    separable_composition_fixture,
)
from .grid_oracle import oracle_filtered_marginals
from .outer_measure import (
    ExplicitFinite,
    FiniteOuterMeasure,
    compose_backward,
    compose_forward,
    fuse,
    outer_eval,
    pullback,
    pushforward,
)
from .reference import kalman_filter_reference
from .smoother import backward_smooth, joint_smooth_grid


def _match_marginals(states, scenario):
    """Max deviation between filtered atoms and oracle sup-marginals."""
    worst = 0.0
    for t, state in enumerate(states):
        oracle = oracle_filtered_marginals(scenario, t)
        if len(oracle) != len(state.posterior):
            return np.inf
        for (w_ref, v_ref), (w, f) in zip(oracle, state.posterior.atoms):
            worst = max(worst, abs(w_ref - w), float(np.abs(v_ref - f.values).max()))
    return worst


def check_grid_filter(seed=2024, cases=10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        sc = random_grid_scenario(
            rng,
            n_states=int(rng.integers(2, 6)),
            horizon=int(rng.integers(1, 4)),
            prior_atoms=int(rng.integers(1, 3)),
            obs_atoms=int(rng.integers(1, 3)),
        )
        states = run_filter(sc, prune_each_step=False)
        worst = max(worst, _match_marginals(states, sc))
    return worst <= 1e-12, f"max deviation {worst:.3e}"


def check_smoothing_agreement(seed=2025, cases=10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        sc = random_grid_scenario(rng, n_states=4, horizon=3)
        joint = joint_smooth_grid(sc)
        states = run_filter(sc, prune_each_step=False)
        backward = backward_smooth(states, sc.transitions)
        for t in range(sc.horizon + 1):
            a = joint.marginals[t][0][1].values
            b = backward.marginals[t][0][1].values
            worst = max(worst, float(np.abs(a - b).max()))
        filt = states[-1].posterior.atoms[0][1].values
        worst = max(worst, float(np.abs(filt - joint.marginals[-1][0][1].values).max()))
    return worst <= 1e-12, f"max deviation {worst:.3e}"


def check_duality(seed=2026, cases=50):
    rng = np.random.default_rng(seed)
    for _ in range(cases):
        n_src = int(rng.integers(2, 7))
        n_tgt = int(rng.integers(2, 7))
        src = np.arange(n_src, dtype=float).reshape(-1, 1)
        tgt = np.arange(n_tgt, dtype=float).reshape(-1, 1)
        table = rng.integers(0, n_tgt, size=n_src)
        xi = ExplicitFinite(src, tgt, table)

        f = fixtures.random_grid_possibility(rng, src)
        P = FiniteOuterMeasure.dirac(f)
        subset = rng.random(n_tgt) < 0.5
        if not subset.any():
            subset[0] = True
        mask_tgt = subset.astype(float)
        pre_mask = mask_tgt[table]
        lhs = outer_eval(
            pushforward(P, xi), _grid_phi(tgt, mask_tgt)
        )
        rhs = outer_eval(P, _grid_phi(src, pre_mask))
        if abs(lhs - rhs) > 0.0:
            return False, f"pushforward duality broken: {lhs} vs {rhs}"

        g = fixtures.random_grid_possibility(rng, tgt)
        Pg = FiniteOuterMeasure.dirac(g)
        mask_src = (rng.random(n_src) < 0.5).astype(float)
        if not mask_src.any():
            mask_src[0] = 1.0
        img_mask = np.zeros(n_tgt)
        np.maximum.at(img_mask, table, mask_src)
        lhs = outer_eval(pullback(Pg, xi), _grid_phi(src, mask_src))
        rhs = outer_eval(Pg, _grid_phi(tgt, img_mask))
        if abs(lhs - rhs) > 0.0:
            return False, f"pullback duality broken: {lhs} vs {rhs}"
    return True, f"{cases} random finite maps, exact"


def _grid_phi(points, values):
    from .outer_measure import GridFunction

    return GridFunction(points, values)


def check_axioms(seed=2027, cases=50):
    rng = np.random.default_rng(seed)
    from .outer_measure import One

    for _ in range(cases):
        n = int(rng.integers(2, 8))
        points = np.arange(n, dtype=float).reshape(-1, 1)
        atoms = [
            (rng.uniform(0.2, 1.0), fixtures.random_grid_possibility(rng, points))
            for _ in range(int(rng.integers(1, 4)))
        ]
        P = FiniteOuterMeasure.normalized(atoms)
        if abs(outer_eval(P, One()) - 1.0) > 1e-12:
            return False, "outer_eval(1) != 1"
        a = rng.random(n) < 0.5
        b = rng.random(n) < 0.5
        small = outer_eval(P, _grid_phi(points, (a & b).astype(float)))
        big = outer_eval(P, _grid_phi(points, (a | b).astype(float)))
        if small > big + 1e-15:
            return False, "monotonicity violated"
        disj = a & ~b
        union = outer_eval(P, _grid_phi(points, (disj | b).astype(float)))
        parts = outer_eval(P, _grid_phi(points, disj.astype(float))) + outer_eval(
            P, _grid_phi(points, b.astype(float))
        )
        if union > parts + 1e-12:
            return False, "sub-additivity violated"
    return True, f"{cases} randomized measures"


def check_kalman_equivalence(seed=2028, cases=5, horizon=50):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        d = int(rng.choice([1, 2, 4]))
        m0, P0, F, Q, O, R = random_stable_system(rng, d)
        ys = [O @ rng.normal(size=d) + rng.normal(size=O.shape[0]) for _ in range(horizon)]
        sc = gaussian_scenario(m0, P0, F, Q, O, R, ys)
        states = run_filter(sc)
        means, covs = kalman_filter_reference(m0, P0, F, Q, O, R, ys)
        for st, m_ref, P_ref in zip(states, means, covs):
            atom = st.posterior.atoms[0][1]
            worst = max(
                worst,
                float(np.abs(atom.mean - m_ref).max()),
                float(np.abs(atom.spread - P_ref).max()),
            )
    return worst <= 1e-9, f"max deviation {worst:.3e}"


def check_coin_fusion():
    P = coin_outer_measure()
    fused, compat = fuse(P, P)
    ok = (
        abs(compat - 0.625) <= 1e-15
        and len(fused) == 2
        and abs(max(w for w, _ in fused.atoms) - 0.9) <= 1e-15
        and abs(min(w for w, _ in fused.atoms) - 0.1) <= 1e-15
    )
    return ok, f"weights {[w for w, _ in fused.atoms]}, compatibility {compat}"


def check_composition_order():
    dep = dependent_composition_fixture()
    fwd = compose_forward(dep["prior"], dep["forward_kernels"], dep["phi"])
    bwd = compose_backward(dep["final"], dep["backward_kernels"], dep["phi"])
    if abs(fwd - bwd) <= 1e-9:
        return False, f"dependent fixture compositions coincide ({fwd})"
    sep = separable_composition_fixture()
    f2 = compose_forward(sep["prior"], sep["forward_kernels"], sep["phi"])
    b2 = compose_backward(sep["final"], sep["backward_kernels"], sep["phi"])
    if abs(f2 - sep["expected"]) > 1e-12 or abs(b2 - sep["expected"]) > 1e-12:
        return False, "separable fixture does not collapse to the product"
    return True, f"dependent {fwd:.4f} vs {bwd:.4f}; separable collapses"


ALL_CHECKS = [
    ("grid-filter-vs-oracle", check_grid_filter),
    ("smoothing-agreement", check_smoothing_agreement),
    ("pushforward-pullback-duality", check_duality),
    ("outer-measure-axioms", check_axioms),
    ("kalman-equivalence", check_kalman_equivalence),
    ("coin-fusion", check_coin_fusion),
    ("composition-order", check_composition_order),
]


def run_all(stream=None):
    import sys

    stream = stream or sys.stdout
    all_ok = True
    for name, fn in ALL_CHECKS:
        ok, detail = fn()
        all_ok = all_ok and ok
        stream.write(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}\n")
    return all_ok
