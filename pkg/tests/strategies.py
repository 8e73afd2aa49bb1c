"""Hypothesis strategies shared across the test modules."""

import math

import numpy as np
from hypothesis import strategies as st

from screwaction.se3 import JointType, Pose, ScrewAxis, Twist, axis_angle_matrix, canonicalize_axis

finite = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


@st.composite
def unit_vectors(draw):
    v = draw(vec3)
    if np.linalg.norm(v) < 1e-3:
        v = np.array([0.0, 0.0, 1.0])
    return v / np.linalg.norm(v)


@st.composite
def rotations(draw, max_angle=math.pi - 0.01):
    axis = draw(unit_vectors())
    angle = draw(st.floats(min_value=0.0, max_value=max_angle))
    return axis_angle_matrix(axis, angle)


@st.composite
def poses(draw, max_angle=math.pi - 0.01):
    return Pose(draw(rotations(max_angle)), draw(vec3))


@st.composite
def twists(draw, min_angle=1e-6, max_angle=math.pi - 0.01):
    w = draw(unit_vectors()) * draw(st.floats(min_value=min_angle, max_value=max_angle))
    return Twist(w, draw(vec3))


@st.composite
def axes(draw, joint_types=tuple(JointType)):
    jt = draw(st.sampled_from(joint_types))
    return canonicalize_axis(ScrewAxis(jt, draw(vec3), draw(unit_vectors()), 0.0))
