"""Command-line harness.

Subcommands: ``simulate | filter | smooth | fuse | verify | compare``.  All
state flows through flags and flat files; outputs are written atomically.
Exit codes: 0 success, 2 validation error, 3 incompatibility, 4 size cap.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import (
    DimensionMismatchError,
    IncompatibleError,
    SizeCapError,
    UnsupportedFamilyError,
    ValidationError,
)
from .filter import (
    DEFAULT_MAX_ATOMS,
    DEFAULT_MIN_WEIGHT,
    run_filter,
    run_particle_filter,
)
from .gaussian import GaussianTransition
from .io import (
    load_outer_measure,
    load_scenario,
    write_csv,
    write_outer_measure,
    write_trajectory,
)
from .model import Scenario, observed_info_from_measurement, simulate
from .outer_measure import fuse
from .possibility import GaussianPossibility
from .reference import kalman_filter_reference
from .smoother import backward_smooth, joint_smooth_grid
from .verify import run_all

FILTER_METHODS = ("possibilistic-kalman", "standard-kalman", "grid", "mixture", "particle")
SMOOTH_METHODS = ("gaussian-backward", "grid-smooth")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="omstate",
        description="Recursive state estimation with outer measures of possibility functions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, method_choices=None):
        p.add_argument("--scenario", required=True, help="scenario file path")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        if method_choices is not None:
            p.add_argument("--method", required=True, choices=method_choices)
        p.add_argument("--max-atoms", type=int, default=DEFAULT_MAX_ATOMS)
        p.add_argument("--min-weight", type=float, default=DEFAULT_MIN_WEIGHT)
        p.add_argument("--grid-res", type=int, default=None,
                       help="resolution for grid-fallback products")
        p.add_argument("--particles", type=int, default=10000,
                       help="cloud size for the particle method")

    p = sub.add_parser("simulate", help="draw a ground-truth trajectory CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)

    common(sub.add_parser("filter", help="forward pass, diagnostics CSV"),
           FILTER_METHODS)
    common(sub.add_parser("smooth", help="smoothed marginals CSV"), SMOOTH_METHODS)

    p = sub.add_parser("fuse", help="fuse two outer-measure files")
    p.add_argument("first", help="outer-measure file")
    p.add_argument("second", help="outer-measure file")
    p.add_argument("--out", required=True)
    p.add_argument("--grid-res", type=int, default=None)

    sub.add_parser("verify", help="run the oracle verification suites")

    p = sub.add_parser("compare", help="run two methods on one scenario")
    p.add_argument("methods", nargs=2, choices=FILTER_METHODS, metavar="method")
    common(p)

    return parser


# ---------------------------------------------------------------------------
# method plumbing


def _gaussian_measurement_model(scenario):
    """Extract (m0, P0, F, Q, O, R, ys) for the textbook reference filter."""
    if len(scenario.prior) != 1:
        raise ValidationError("standard-kalman needs a single-atom Gaussian prior")
    (_, f0), = scenario.prior.atoms
    if not isinstance(f0, GaussianPossibility):
        raise ValidationError("standard-kalman needs a Gaussian prior atom")
    for tr in scenario.transitions:
        if not isinstance(tr, GaussianTransition):
            raise ValidationError("standard-kalman needs Gaussian transitions")
        if not np.allclose(tr.F, scenario.transitions[0].F) or not np.allclose(
            tr.Q, scenario.transitions[0].Q
        ):
            raise ValidationError("standard-kalman needs time-invariant transitions")
    O = R = None
    ys = []
    for obs in scenario.observations:
        if len(obs.atoms) != 1:
            raise ValidationError("standard-kalman needs single-atom observations")
        (_, h), = obs.atoms
        if not isinstance(h, GaussianPossibility):
            raise ValidationError("standard-kalman needs Gaussian observation atoms")
        ys.append(h.mean)
        R = h.spread
        O = np.eye(f0.dim) if obs.is_identity() else obs.linear_matrix()
    if scenario.transitions:
        F, Q = scenario.transitions[0].F, scenario.transitions[0].Q
    else:
        F = Q = np.eye(f0.dim)
    return f0.mean, f0.spread, F, Q, O, R, ys


def _method_estimates(scenario, method, args):
    """Per-step point estimates (t = 0..T) plus diagnostics rows."""
    seed = args.seed if args.seed is not None else scenario.rng_seed
    if method == "standard-kalman":
        m0, P0, F, Q, O, R, ys = _gaussian_measurement_model(scenario)
        means, _ = kalman_filter_reference(m0, P0, F, Q, O, R, ys)
        return means, [[t, 1, float("nan")] for t in range(len(means))]
    if method == "particle":
        states = run_particle_filter(scenario, args.particles, seed=seed)
        return (
            [st.mean() for st in states],
            [[t, st.states.shape[0], float("nan")] for t, st in enumerate(states)],
        )
    states = run_filter(
        scenario,
        grid_res=args.grid_res,
        max_atoms=args.max_atoms,
        min_weight=args.min_weight,
    )
    return (
        [st.map_estimate() for st in states],
        [[st.t, st.atom_count, st.compatibility] for st in states],
    )


def _with_synthesized_observations(scenario, seed):
    """Replace the observations with measurements of a simulated trajectory."""
    dyn = scenario.dynamics
    if dyn is None:
        raise ValidationError("this run needs a [dynamics] section for ground truth")
    if dyn.R is None:
        raise ValidationError("observation synthesis needs R in [dynamics]")
    sc = Scenario(
        horizon=scenario.horizon,
        prior=scenario.prior,
        transitions=scenario.transitions,
        observations=scenario.observations,
        rng_seed=seed,
        dynamics=dyn,
    )
    traj = simulate(sc)
    obs = [observed_info_from_measurement(y, dyn.R, dyn.O) for y in traj.observations]
    return (
        Scenario(
            horizon=sc.horizon,
            prior=sc.prior,
            transitions=sc.transitions,
            observations=obs,
            rng_seed=seed,
            dynamics=dyn,
        ),
        traj,
    )


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_simulate(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.rng_seed = args.seed
    traj = simulate(scenario)
    write_trajectory(traj, args.out)
    return 0


def _cmd_filter(args):
    scenario = load_scenario(args.scenario)
    estimates, diagnostics = _method_estimates(scenario, args.method, args)
    d = len(np.atleast_1d(estimates[0]))
    header = ["t", "atom_count", "compatibility"] + [
        f"map_estimate_{i + 1}" for i in range(d)
    ]
    rows = [diag + list(np.atleast_1d(est)) for diag, est in zip(diagnostics, estimates)]
    write_csv(args.out, header, rows)
    return 0


def _cmd_smooth(args):
    scenario = load_scenario(args.scenario)
    if args.method == "grid-smooth":
        result = joint_smooth_grid(scenario)
        rows = []
        for t, atoms in enumerate(result.marginals):
            # heaviest atom's values when the marginal is multi-atom
            _, f = max(atoms, key=lambda a: a[0])
            for j, v in enumerate(f.values):
                rows.append([t, j, v])
        write_csv(args.out, ["t", "point_index", "value"], rows)
        return 0
    states = run_filter(
        scenario,
        grid_res=args.grid_res,
        max_atoms=args.max_atoms,
        min_weight=args.min_weight,
    )
    result = backward_smooth(states, scenario.transitions)
    d = result.marginals[0][0][1].dim
    header = ["t"] + [f"mode_{i + 1}" for i in range(d)] + [
        f"spread_diag_{i + 1}" for i in range(d)
    ]
    rows = []
    for t, atoms in enumerate(result.marginals):
        (_, f), = atoms
        rows.append([t, *f.mean, *np.diag(f.spread)])
    write_csv(args.out, header, rows)
    return 0


def _cmd_fuse(args):
    P = load_outer_measure(args.first)
    Pp = load_outer_measure(args.second)
    fused, compatibility = fuse(P, Pp, grid_res=args.grid_res)
    write_outer_measure(fused, args.out)
    print(f"compatibility {format(compatibility, '.17g')}", file=sys.stderr)
    return 0


def _cmd_verify(args):
    return 0 if run_all(sys.stdout) else 1


def _cmd_compare(args):
    scenario = load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else scenario.rng_seed
    scenario, truth = _with_synthesized_observations(scenario, seed)
    method_a, method_b = args.methods
    est_a, _ = _method_estimates(scenario, method_a, args)
    est_b, _ = _method_estimates(scenario, method_b, args)
    d = len(np.atleast_1d(est_a[0]))
    header = (
        ["t"]
        + [f"a_{i + 1}" for i in range(d)]
        + [f"b_{i + 1}" for i in range(d)]
        + ["max_diff", "rmse_a", "rmse_b"]
    )
    rows = []
    for t in range(scenario.horizon + 1):
        a = np.atleast_1d(est_a[t])
        b = np.atleast_1d(est_b[t])
        x = truth.states[t]
        rows.append(
            [
                t,
                *a,
                *b,
                float(np.abs(a - b).max()),
                float(np.sqrt(np.mean((a - x) ** 2))),
                float(np.sqrt(np.mean((b - x) ** 2))),
            ]
        )
    write_csv(args.out, header, rows)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "filter": _cmd_filter,
    "smooth": _cmd_smooth,
    "fuse": _cmd_fuse,
    "verify": _cmd_verify,
    "compare": _cmd_compare,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, DimensionMismatchError, UnsupportedFamilyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IncompatibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SizeCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
