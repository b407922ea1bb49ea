import os

import numpy as np
import pytest

from omstate.errors import ValidationError
from omstate.fixtures import coin_outer_measure
from omstate.io import (
    load_outer_measure,
    load_scenario,
    parse_outer_measure,
    parse_scenario,
    write_outer_measure,
    write_trajectory,
)
from omstate.model import (
    LinearGaussianDynamics,
    MarkovKernel,
    ObservedInfo,
    Scenario,
    simulate,
    vacuous_observation,
)
from omstate.outer_measure import FiniteOuterMeasure
from omstate.possibility import GaussianPossibility, GridPossibility

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def test_shipped_grid_scenario_parses():
    sc = load_scenario(os.path.join(FIXTURES, "grid3.scenario"))
    assert sc.horizon == 3
    assert len(sc.prior) == 2
    assert len(sc.transitions) == 3
    assert len(sc.observations) == 4


def test_shipped_linear_gaussian_scenario_parses():
    sc = load_scenario(os.path.join(FIXTURES, "linear_gaussian.scenario"))
    assert sc.horizon == 10
    assert sc.dynamics is not None
    assert sc.dynamics.F.shape == (2, 2)
    assert sc.observations[0].linear_matrix().shape == (1, 2)


def test_parse_errors_carry_line_numbers():
    bad = "[meta]\nhorizon 1\n\n[prior]\natom 1 gaussian 1 zero 1\n"
    with pytest.raises(ValidationError) as err:
        parse_scenario(bad)
    assert "line 5" in str(err.value)


def test_content_before_section_rejected():
    with pytest.raises(ValidationError) as err:
        parse_scenario("horizon 1\n[meta]\n")
    assert "line 1" in str(err.value)


def test_missing_observation_sections_become_vacuous():
    text = (
        "[meta]\nhorizon 1\nseed 0\n\n"
        "[prior]\natom 1 gaussian 1 0 1\n\n"
        "[transition 1]\ngaussian 1 0.9 0.5\n"
    )
    sc = parse_scenario(text)
    assert len(sc.observations) == 2
    for obs in sc.observations:
        assert len(obs.atoms) == 1


def test_outer_measure_file_round_trip(tmp_path):
    P = coin_outer_measure()
    path = tmp_path / "coin.om"
    write_outer_measure(P, path)
    Q = load_outer_measure(path)
    assert len(Q) == 2
    assert sorted(w for w, _ in Q.atoms) == [0.25, 0.75]


def test_outer_measure_parse_rejects_malformed():
    with pytest.raises(ValidationError):
        parse_outer_measure("dim 1\n")
    with pytest.raises(ValidationError):
        parse_outer_measure("atoms 1\ndim 1\n0.5 gaussian 1 0 1\n")


# ---------------------------------------------------------------------------
# observed information


def test_observed_info_weights_validate():
    h = GaussianPossibility([0.0], [[1.0]])
    with pytest.raises(ValidationError):
        ObservedInfo([(0.5, h)])
    obs = ObservedInfo([(0.5, h), (0.5, h)])
    assert obs.is_identity()


def test_markov_kernel_rows_validate():
    pts = np.arange(2.0).reshape(-1, 1)
    with pytest.raises(ValidationError):
        MarkovKernel(pts, [[0.5, 0.4], [0.3, 0.7]])


def test_vacuous_observation_is_uninformative():
    obs = vacuous_observation(2)
    (v, h), = obs.atoms
    assert v == 1.0
    assert h(np.array([123.0, -456.0])) == 1.0


# ---------------------------------------------------------------------------
# simulation


def _dyn():
    return LinearGaussianDynamics(
        F=[[0.9]], Q=[[0.25]], x0=[1.0], O=[[1.0]], R=[[0.04]]
    )


def _scenario(seed, horizon=5):
    prior = FiniteOuterMeasure.dirac(GaussianPossibility([1.0], [[1.0]]))
    from omstate.gaussian import GaussianTransition

    return Scenario(
        horizon=horizon,
        prior=prior,
        transitions=[GaussianTransition([[0.9]], [[0.25]]) for _ in range(horizon)],
        observations=[vacuous_observation(1) for _ in range(horizon + 1)],
        rng_seed=seed,
        dynamics=_dyn(),
    )


def test_simulate_is_deterministic_per_seed():
    a = simulate(_scenario(seed=3))
    b = simulate(_scenario(seed=3))
    c = simulate(_scenario(seed=4))
    assert np.array_equal(np.array(a.states), np.array(b.states))
    assert not np.array_equal(np.array(a.states), np.array(c.states))


def test_simulate_noise_statistics_match_parameters():
    # pooled one-step residuals x_{t+1} - F x_t should have variance ~ Q
    residuals = []
    for seed in range(300):
        traj = simulate(_scenario(seed=seed, horizon=4))
        xs = np.array(traj.states).ravel()
        residuals.extend(xs[1:] - 0.9 * xs[:-1])
    var = np.var(residuals)
    assert abs(var - 0.25) < 0.02


def test_trajectory_csv_format(tmp_path):
    traj = simulate(_scenario(seed=1, horizon=2))
    path = tmp_path / "traj.csv"
    write_trajectory(traj, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x_1,y_1"
    assert len(lines) == 4
    row = lines[1].split(",")
    assert row[0] == "0"
    assert float(row[1]) == traj.states[0][0]
