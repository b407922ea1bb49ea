import os

import numpy as np

from omstate.cli import main

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")
GRID = os.path.join(FIXTURES, "grid3.scenario")
LINEAR = os.path.join(FIXTURES, "linear_gaussian.scenario")
COIN_A = os.path.join(FIXTURES, "coin_a.om")
COIN_B = os.path.join(FIXTURES, "coin_b.om")


def _read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_simulate_writes_trajectory(tmp_path):
    out = tmp_path / "traj.csv"
    assert main(["simulate", "--scenario", LINEAR, "--out", str(out)]) == 0
    header, rows = _read_csv(out)
    assert header == ["t", "x_1", "x_2", "y_1"]
    assert len(rows) == 11


def test_simulate_is_seed_deterministic(tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    main(["simulate", "--scenario", LINEAR, "--out", str(a), "--seed", "3"])
    main(["simulate", "--scenario", LINEAR, "--out", str(b), "--seed", "3"])
    main(["simulate", "--scenario", LINEAR, "--out", str(c), "--seed", "4"])
    assert a.read_text() == b.read_text()
    assert a.read_text() != c.read_text()


def test_filter_grid_diagnostics(tmp_path):
    out = tmp_path / "filter.csv"
    assert main(["filter", "--scenario", GRID, "--method", "grid", "--out", str(out)]) == 0
    header, rows = _read_csv(out)
    assert header == ["t", "atom_count", "compatibility", "map_estimate_1"]
    assert len(rows) == 4
    for row in rows:
        assert 0.0 < float(row[2]) <= 1.0 + 1e-12


def test_filter_kalman_methods_agree(tmp_path):
    a = tmp_path / "possibilistic.csv"
    b = tmp_path / "standard.csv"
    assert main(["filter", "--scenario", LINEAR, "--method", "possibilistic-kalman",
                 "--out", str(a)]) == 0
    assert main(["filter", "--scenario", LINEAR, "--method", "standard-kalman",
                 "--out", str(b)]) == 0
    _, rows_a = _read_csv(a)
    _, rows_b = _read_csv(b)
    for ra, rb in zip(rows_a, rows_b):
        assert abs(float(ra[3]) - float(rb[3])) < 1e-9
        assert abs(float(ra[4]) - float(rb[4])) < 1e-9


def test_smooth_both_modes(tmp_path):
    out = tmp_path / "grid_smooth.csv"
    assert main(["smooth", "--scenario", GRID, "--method", "grid-smooth",
                 "--out", str(out)]) == 0
    header, rows = _read_csv(out)
    assert header == ["t", "point_index", "value"]
    assert len(rows) == 4 * 3

    out = tmp_path / "gaussian_smooth.csv"
    assert main(["smooth", "--scenario", LINEAR, "--method", "gaussian-backward",
                 "--out", str(out)]) == 0
    header, rows = _read_csv(out)
    assert header == ["t", "mode_1", "mode_2", "spread_diag_1", "spread_diag_2"]
    assert len(rows) == 11
    assert all(float(r[3]) > 0.0 and float(r[4]) > 0.0 for r in rows)


def test_fuse_coins(tmp_path, capsys):
    out = tmp_path / "fused.om"
    assert main(["fuse", COIN_A, COIN_B, "--out", str(out)]) == 0
    err = capsys.readouterr().err
    assert "compatibility 0.625" in err
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "dim 1" and lines[1] == "atoms 2"
    weights = sorted(float(line.split()[0]) for line in lines[2:])
    assert abs(weights[0] - 0.1) < 1e-15 and abs(weights[1] - 0.9) < 1e-15


def test_verify_passes_on_shipped_suite(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.count("PASS") == 7


def test_compare_kalman_routes(tmp_path):
    out = tmp_path / "cmp.csv"
    assert main(["compare", "possibilistic-kalman", "standard-kalman",
                 "--scenario", LINEAR, "--out", str(out)]) == 0
    header, rows = _read_csv(out)
    assert header[-3:] == ["max_diff", "rmse_a", "rmse_b"]
    assert len(rows) == 11
    assert max(float(r[-3]) for r in rows) <= 1e-9


def test_missing_scenario_exits_2(tmp_path, capsys):
    code = main(["filter", "--scenario", str(tmp_path / "nope.scenario"),
                 "--method", "grid", "--out", str(tmp_path / "x.csv")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_scenario_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.scenario"
    bad.write_text("[meta]\nhorizon 1\n\n[prior]\natom 1 gaussian 1 zero 1\n")
    code = main(["filter", "--scenario", str(bad), "--method", "grid",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 2
    assert "line 5" in capsys.readouterr().err


def test_incompatible_fusion_exits_3(tmp_path, capsys):
    a = tmp_path / "a.om"
    b = tmp_path / "b.om"
    a.write_text("dim 1\natoms 1\n1 indicator-points 1 1 0\n")
    b.write_text("dim 1\natoms 1\n1 indicator-points 1 1 5\n")
    code = main(["fuse", str(a), str(b), "--out", str(tmp_path / "f.om")])
    assert code == 3


def test_size_cap_exits_4(tmp_path):
    n, horizon = 10, 7
    pts = " ".join(str(float(i)) for i in range(n))
    rng = np.random.default_rng(0)
    lines = ["[meta]", f"horizon {horizon}", "", "[carrier]", f"points {n} 1", pts, ""]
    vals = rng.uniform(0.1, 1.0, n)
    vals[0] = 1.0
    lines += ["[prior]", "atom 1 grid 1 {} {} {}".format(n, pts, " ".join(map(str, vals))), ""]
    mat = rng.uniform(0.1, 1.0, (n, n))
    mat[:, 0] = 1.0
    flat = " ".join(str(v) for v in mat.ravel())
    for t in range(1, horizon + 1):
        lines += [f"[transition {t}]", f"grid {flat}", ""]
    sc = tmp_path / "big.scenario"
    sc.write_text("\n".join(lines))
    code = main(["smooth", "--scenario", str(sc), "--method", "grid-smooth",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 4
