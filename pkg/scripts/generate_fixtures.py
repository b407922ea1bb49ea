"""Regenerate the shipped fixture files in fixtures/ (fixed seeds).

Run from the repository root:  python3 scripts/generate_fixtures.py
Each generated scenario is round-tripped through the parser and, for the grid
fixture, checked against the exhaustive oracle before being written.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from omstate import fixtures  # noqa: E402
from omstate.filter import run_filter  # noqa: E402
from omstate.grid_oracle import oracle_filtered_marginals  # noqa: E402
from omstate.io import parse_scenario, write_outer_measure  # noqa: E402
from omstate.model import simulate  # noqa: E402
from omstate.possibility import to_record  # noqa: E402

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def _fmt(values):
    return " ".join(format(float(v), ".17g") for v in np.asarray(values).ravel())


def grid_scenario_text(seed=7, n_states=3, horizon=3):
    rng = np.random.default_rng(seed)
    sc = fixtures.random_grid_scenario(
        rng, n_states=n_states, horizon=horizon, prior_atoms=2, obs_atoms=1, seed=seed
    )
    lines = ["[meta]", f"horizon {horizon}", f"seed {seed}", ""]
    lines += ["[carrier]", f"points {n_states} 1"]
    for p in np.arange(n_states, dtype=float):
        lines.append(format(p, ".17g"))
    lines.append("")
    lines.append("[prior]")
    for w, f in sc.prior.atoms:
        lines.append(f"atom {format(w, '.17g')} {to_record(f)}")
    lines.append("")
    for t in range(1, horizon + 1):
        lines += [f"[transition {t}]", f"grid {_fmt(sc.transitions[t - 1].matrix)}", ""]
    for t in range(horizon + 1):
        lines += [f"[observation {t}]", "map identity"]
        for v, h in sc.observations[t].atoms:
            lines.append(f"atom {format(v, '.17g')} {to_record(h)}")
        lines.append("")
    return "\n".join(lines)


def linear_gaussian_scenario_text(seed=11, horizon=10):
    theta = 0.3
    F = 0.95 * np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )
    Q = 0.05 * np.eye(2)
    O = np.array([[1.0, 0.0]])
    R = np.array([[0.25]])
    x0 = np.array([1.0, 0.0])
    m0 = np.zeros(2)
    P0 = np.eye(2)

    rng = np.random.default_rng(seed)
    xs = [x0]
    for _ in range(horizon):
        xs.append(F @ xs[-1] + rng.multivariate_normal(np.zeros(2), Q))
    ys = [O @ x + rng.multivariate_normal(np.zeros(1), R) for x in xs]

    lines = ["[meta]", f"horizon {horizon}", f"seed {seed}", ""]
    lines += ["[prior]", f"atom 1 gaussian 2 {_fmt(m0)} {_fmt(P0)}", ""]
    for t in range(1, horizon + 1):
        lines += [f"[transition {t}]", f"gaussian 2 {_fmt(F)} {_fmt(Q)}", ""]
    for t in range(horizon + 1):
        lines += [
            f"[observation {t}]",
            f"map linear 1 2 {_fmt(O)}",
            f"atom 1 gaussian 1 {_fmt(ys[t])} {_fmt(R)}",
            "",
        ]
    lines += [
        "[dynamics]",
        "state_dim 2",
        "obs_dim 1",
        f"F {_fmt(F)}",
        f"Q {_fmt(Q)}",
        f"x0 {_fmt(x0)}",
        f"O {_fmt(O)}",
        f"R {_fmt(R)}",
        "",
    ]
    return "\n".join(lines)


def main():
    os.makedirs(OUT_DIR, exist_ok=True)

    text = grid_scenario_text()
    sc = parse_scenario(text)
    states = run_filter(sc, prune_each_step=False)
    for t, state in enumerate(states):
        oracle = oracle_filtered_marginals(sc, t)
        assert len(oracle) == len(state.posterior)
        for (w_ref, v_ref), (w, f) in zip(oracle, state.posterior.atoms):
            assert abs(w_ref - w) <= 1e-12
            assert np.abs(v_ref - f.values).max() <= 1e-12
    with open(os.path.join(OUT_DIR, "grid3.scenario"), "w") as fh:
        fh.write(text)

    text = linear_gaussian_scenario_text()
    parse_scenario(text)  # round-trip validation
    with open(os.path.join(OUT_DIR, "linear_gaussian.scenario"), "w") as fh:
        fh.write(text)

    write_outer_measure(
        fixtures.coin_outer_measure(), os.path.join(OUT_DIR, "coin_a.om")
    )
    write_outer_measure(
        fixtures.coin_outer_measure(), os.path.join(OUT_DIR, "coin_b.om")
    )
    print("fixtures written to", os.path.abspath(OUT_DIR))


if __name__ == "__main__":
    main()
