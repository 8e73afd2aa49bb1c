import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from screwaction.errors import InvalidArgumentError
from screwaction.scenarios import PRESETS, get_scenario, initial_axis, perturb_axis
from screwaction.se3 import JointType, axis_error
from screwaction.sim import is_success, run_episode
from screwaction.waypoints import generate_relative_waypoints

from strategies import axes


@given(axes(joint_types=(JointType.REVOLUTE,)), st.floats(0.0, 0.1), st.floats(0.0, 45.0), st.integers(0, 10_000))
def test_perturbation_has_requested_size(axis, dq, ds, seed):
    moved = perturb_axis(axis, dq, ds, np.random.default_rng(seed))
    d, ang = axis_error(moved, axis)
    assert ang == pytest.approx(ds, abs=1e-6)
    # skew lines pass closer than the shifted points; parallel ones keep the full shift
    assert d <= dq + 1e-12
    if ds == 0.0:
        assert d == pytest.approx(dq, abs=1e-12)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_are_solvable(name):
    scn = get_scenario(name)
    mech = scn.mechanism
    ep = run_episode(mech, generate_relative_waypoints(mech.true_axis, scn.plan))
    assert is_success(mech, ep)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_initial_axis_deterministic(name):
    scn = get_scenario(name)
    a, b = initial_axis(scn, 3), initial_axis(scn, 3)
    np.testing.assert_array_equal(a.q, b.q)
    np.testing.assert_array_equal(a.s_hat, b.s_hat)
    assert a.joint_type is scn.mechanism.true_axis.joint_type


def test_unknown_scenario():
    with pytest.raises(InvalidArgumentError):
        get_scenario("nope")
