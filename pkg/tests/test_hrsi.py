import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpcmci.dataset import DataError
from fpcmci.hrsi import (InteractionSpec, Trajectory, extract_features,
                         load_trajectories, parse_trajectories, static_point,
                         trajectories_to_csv, wrap_angle)


def straight_approach(n=20, dt=1.0, speed=0.34):
    t = np.arange(n) * dt
    human = Trajectory("H", np.column_stack([speed * t, np.zeros(n)]), dt)
    return {"H": human, "shelf": static_point("shelf", 10.0, 0.0, n, dt)}


def orbit(n, dt, omega, radius=1.0):
    t = np.arange(n) * dt
    xy = radius * np.column_stack([np.cos(omega * t), np.sin(omega * t)])
    return {"S": Trajectory("S", xy, dt), "C": static_point("C", 0.0, 0.0, n, dt)}


def test_static_geometry():
    trajs = {"S": static_point("S", 0, 0, 10, 0.5), "O": static_point("O", 1, 0, 10, 0.5)}
    with pytest.warns(RuntimeWarning, match="never moves"):
        ds = extract_features(trajs, InteractionSpec("S", ("O",)))
    assert ds.names == ("v_S", "d_S_O", "theta_S_O")
    np.testing.assert_array_equal(ds.column("v_S"), 0)
    np.testing.assert_array_equal(ds.column("d_S_O"), 1)
    np.testing.assert_array_equal(ds.column("theta_S_O"), 0)
    assert ds.dt == 0.5


def test_straight_approach_at_walking_speed():
    ds = extract_features(straight_approach(), InteractionSpec("H", ("shelf",)))
    assert np.abs(ds.column("v_H") - 0.34).max() <= 1e-9
    assert np.abs(ds.column("theta_H_shelf")).max() <= 1e-9
    np.testing.assert_allclose(np.diff(ds.column("d_H_shelf")), -0.34, atol=1e-9, rtol=0)


@pytest.mark.parametrize("direction", [1, -1])
def test_circular_orbit(direction):
    omega = direction * 0.5
    errs = {}
    for dt in (0.1, 0.05):
        ds = extract_features(orbit(200, dt, omega), InteractionSpec("S", ("C",)))
        np.testing.assert_allclose(ds.column("d_S_C"), 1.0, atol=1e-12)
        v_err = np.abs(ds.column("v_S") - abs(omega)).max()
        th = ds.column("theta_S_C")
        # interior central differences are exactly tangent; ends are one-sided
        assert np.abs(th[1:-1] - direction * math.pi / 2).max() < 1e-9
        assert np.abs(th[[0, -1]] - direction * math.pi / 2).max() <= abs(omega) * dt
        assert v_err <= (omega * dt) ** 2
        errs[dt] = v_err
    assert errs[0.1] / errs[0.05] == pytest.approx(4.0, rel=0.05)


def test_heading_holds_through_pause():
    xy = np.array([[0, 0], [1, 0], [2, 0]] + [[2, 0]] * 9, float)
    trajs = {"S": Trajectory("S", xy, 1.0), "O": static_point("O", 2, 5, 12, 1.0)}
    ds = extract_features(trajs, InteractionSpec("S", ("O",)))
    v = ds.column("v_S")
    assert v[-1] == 0
    # heading stays +x, bearing straight up
    assert ds.column("theta_S_O")[-1] == pytest.approx(math.pi / 2)


def test_wrap_angle_range():
    a = wrap_angle(np.array([math.pi, -math.pi, 3 * math.pi, 0.0, -3 * math.pi / 2]))
    np.testing.assert_allclose(a, [math.pi, math.pi, math.pi, 0.0, math.pi / 2])


def random_walkers(seed, n=40):
    r = np.random.default_rng(seed)
    return {k: Trajectory(k, np.cumsum(r.standard_normal((n, 2)), axis=0), 0.2)
            for k in "ABC"}


def transform(trajs, angle, shift):
    R = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    return {k: Trajectory(k, tr.xy @ R.T + shift, tr.dt) for k, tr in trajs.items()}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(-math.pi, math.pi),
       st.floats(-100, 100), st.floats(-100, 100))
def test_rigid_motion_invariance(seed, angle, sx, sy):
    trajs = random_walkers(seed)
    spec = InteractionSpec("A", ("B", "C"))
    a = extract_features(trajs, spec)
    b = extract_features(transform(trajs, angle, np.array([sx, sy])), spec)
    for name in a.names:
        diff = a.column(name) - b.column(name)
        if name.startswith("theta"):
            diff = wrap_angle(diff)
        assert np.abs(diff).max() <= 1e-9, name


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_feature_ranges(seed):
    ds = extract_features(random_walkers(seed), InteractionSpec("B", ("A", "C")))
    for name in ds.names:
        col = ds.column(name)
        if name.startswith("theta"):
            assert np.all(col > -math.pi) and np.all(col <= math.pi)
        else:
            assert np.all(col >= 0)


def test_mismatches():
    trajs = straight_approach()
    trajs["short"] = static_point("short", 0, 0, 5, 1.0)
    trajs["fast"] = static_point("fast", 0, 0, 20, 0.5)
    with pytest.raises(DataError, match="lengths differ"):
        extract_features(trajs, InteractionSpec("H", ("short",)))
    with pytest.raises(DataError, match="sampling intervals"):
        extract_features(trajs, InteractionSpec("H", ("fast",)))
    with pytest.raises(DataError, match="subject"):
        extract_features(trajs, InteractionSpec("nobody", ("H",)))
    with pytest.raises(ValueError):
        InteractionSpec("H", ("H",))


def test_trajectory_validation():
    with pytest.raises(DataError):
        Trajectory("a", np.zeros((2, 2)), 1.0)
    with pytest.raises(DataError):
        Trajectory("a", np.zeros((5, 3)), 1.0)
    with pytest.raises(DataError):
        Trajectory("a", np.full((5, 2), np.nan), 1.0)
    with pytest.raises(DataError):
        Trajectory("a", np.zeros((5, 2)), 0.0)


def test_csv_formats(tmp_path):
    single = "t,x,y\n0,0,0\n0.5,1,0\n1.0,2,0\n1.5,3,0\n"
    (tmp_path / "robot.csv").write_text(single)
    trajs = straight_approach(4, 0.5)
    (tmp_path / "combined.csv").write_text(trajectories_to_csv(list(trajs.values())))
    loaded = load_trajectories([tmp_path / "robot.csv", tmp_path / "combined.csv"])
    assert set(loaded) == {"robot", "H", "shelf"}
    assert loaded["robot"].dt == 0.5
    np.testing.assert_array_equal(loaded["H"].xy, trajs["H"].xy)


def test_csv_errors(tmp_path):
    with pytest.raises(DataError, match="uniform"):
        parse_trajectories("t,x,y\n0,0,0\n1,1,0\n3,2,0\n", "a")
    with pytest.raises(DataError, match="'t'"):
        parse_trajectories("time,x,y\n0,0,0\n1,1,0\n2,2,0\n", "a")
    with pytest.raises(DataError, match="non-numeric"):
        parse_trajectories("t,x,y\n0,0,0\n1,oops,0\n2,2,0\n", "a")
    with pytest.raises(DataError, match="missing"):
        parse_trajectories("t,a_x,b_y\n0,0,0\n1,1,0\n2,2,0\n")
    with pytest.raises(DataError, match="no such file"):
        load_trajectories([tmp_path / "nope.csv"])
