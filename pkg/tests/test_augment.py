import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from screwaction.augment import (
    AugmentSpec,
    Dataset,
    Example,
    PointCloud,
    Provenance,
    apply_similarity,
    augment_dataset,
    chamfer,
    extend_with_corrected,
    predict_action,
    transform_action,
)
from screwaction.errors import InvalidArgumentError, NoModelError
from screwaction.experiments import bottle_cloud, bottle_example
from screwaction.se3 import JointType, ScrewAxis, axis_angle_matrix, axis_error, canonicalize_axis
from screwaction.waypoints import ScrewAction

Z = np.array([0.0, 0.0, 1.0])
AXIS = ScrewAxis(JointType.REVOLUTE, [0.0, 0.04, 0.0], Z)
DEMO = bottle_example(AXIS)


def umeyama(src, dst):
    """Least-squares similarity (s, R, t) with dst = s R src + t, from correspondences."""
    mu_s, mu_d = src.mean(0), dst.mean(0)
    A, B = src - mu_s, dst - mu_d
    U, S, Vt = np.linalg.svd(B.T @ A / len(src))
    D = np.diag([1, 1, np.sign(np.linalg.det(U @ Vt))])
    R = U @ D @ Vt
    s = np.trace(np.diag(S) @ D) / (A * A).sum(1).mean()
    return s, R, mu_d - s * R @ mu_s


def same_axis(a, b, tol):
    d, ang = axis_error(a, b)
    return d < tol and ang < math.degrees(tol)


# similarity transforms


def test_identity_transform():
    out = apply_similarity(DEMO, np.zeros(3), np.eye(3), 1.0)
    np.testing.assert_allclose(out.cloud.points, DEMO.cloud.points, atol=1e-15)
    np.testing.assert_allclose(out.action.axis.q, canonicalize_axis(AXIS).q, atol=1e-15)
    np.testing.assert_allclose(out.action.g_r, DEMO.action.g_r, atol=1e-15)
    assert out.provenance is Provenance.AUGMENTED


def test_translation_transform():
    t = np.array([0.3, -0.1, 0.05])
    out = apply_similarity(DEMO, t, np.eye(3), 1.0)
    np.testing.assert_allclose(out.cloud.points, DEMO.cloud.points + t, atol=1e-15)
    np.testing.assert_allclose(out.action.axis.s_hat, AXIS.s_hat)
    assert same_axis(out.action.axis, AXIS.replace(q=AXIS.q + t), 1e-12)
    np.testing.assert_allclose(out.action.g_l, DEMO.action.g_l + t)


def test_scale_about_centroid():
    c = DEMO.cloud.centroid
    # axis along z, offset 0.1 m from the centroid in x
    ax = ScrewAxis(JointType.REVOLUTE, [c[0] + 0.1, c[1], 0.0], Z)
    ex = Example(DEMO.cloud, ScrewAction(DEMO.action.g_l, DEMO.action.g_r, ax))
    out = apply_similarity(ex, np.zeros(3), np.eye(3), 2.0)
    q = out.action.axis.q
    np.testing.assert_allclose(q[:2], [c[0] + 0.2, c[1]], atol=1e-12)


def test_similarity_rejects_bad_scale():
    with pytest.raises(InvalidArgumentError):
        apply_similarity(DEMO, np.zeros(3), np.eye(3), 0.0)


@given(st.floats(-math.pi, math.pi), st.floats(0.5, 2.0), st.tuples(*[st.floats(-1, 1)] * 3))
@settings(max_examples=50)
def test_transform_composes(yaw, s, t):
    # applying two similarities equals applying their composition
    R = axis_angle_matrix(Z, yaw)
    once = apply_similarity(apply_similarity(DEMO, np.array(t), R, s), np.zeros(3), R.T, 1.0 / s)
    back = once.cloud.points - once.cloud.centroid + DEMO.cloud.centroid
    np.testing.assert_allclose(back, DEMO.cloud.points, atol=1e-12)
    shifted = transform_action(DEMO.action, DEMO.cloud.centroid, once.cloud.centroid - DEMO.cloud.centroid, np.eye(3), 1.0)
    assert same_axis(once.action.axis, shifted.axis, 1e-9)


# augmentation


def test_identity_range_spec():
    spec = AugmentSpec(n_samples=1, translation_range=0.0, max_angle_deg=0.0, scale_range=(1.0, 1.0))
    ds = augment_dataset([DEMO], spec)
    assert len(ds) == 2
    np.testing.assert_allclose(ds[1].cloud.points, ds[0].cloud.points, atol=1e-15)
    assert ds[1].parent_id == ds[0].example_id


def test_augment_deterministic():
    a = augment_dataset([DEMO], AugmentSpec(n_samples=5, seed=3))
    b = augment_dataset([DEMO], AugmentSpec(n_samples=5, seed=3))
    assert a.ids == b.ids
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.cloud.points, y.cloud.points)


def test_500_augmentations_follow_similarity():
    ds = augment_dataset([DEMO], AugmentSpec(n_samples=500, seed=1))
    assert len(ds) == 501
    parent = ds[0]
    for ex in list(ds)[1:]:
        s, R, t = umeyama(parent.cloud.points, ex.cloud.points)
        assert abs(np.linalg.det(R) - 1) < 1e-9
        expect_q = s * R @ parent.action.axis.q + t
        expect = canonicalize_axis(parent.action.axis.replace(q=expect_q, s_hat=R @ parent.action.axis.s_hat))
        d, ang = axis_error(ex.action.axis, expect)
        assert d < 1e-9 and ang < 1e-7
        np.testing.assert_allclose(ex.action.g_r, s * R @ parent.action.g_r + t, atol=1e-9)
        assert ex.provenance is Provenance.AUGMENTED and ex.parent_id == parent.example_id


def test_augment_spec_validation():
    with pytest.raises(InvalidArgumentError):
        AugmentSpec(n_samples=0)
    with pytest.raises(InvalidArgumentError):
        AugmentSpec(scale_range=(0.0, 1.0))
    with pytest.raises(InvalidArgumentError):
        augment_dataset([], AugmentSpec())


# chamfer


@given(st.integers(0, 1000))
@settings(max_examples=20)
def test_chamfer_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(40, 3)), rng.normal(size=(55, 3))
    D = cdist(a, b)
    assert chamfer(a, b) == pytest.approx(D.min(1).mean() + D.min(0).mean(), abs=1e-12)
    assert chamfer(a, b) == pytest.approx(chamfer(b, a), abs=1e-12)
    assert chamfer(a, a) == 0.0


# prediction


@pytest.fixture(scope="module")
def dataset():
    return augment_dataset([DEMO], AugmentSpec(n_samples=20, seed=0))


def test_predict_verbatim(dataset):
    action, score, eid = predict_action(dataset, DEMO.cloud)
    assert score < 1e-9
    assert same_axis(action.axis, AXIS, 1e-9)
    np.testing.assert_allclose(action.g_r, DEMO.action.g_r, atol=1e-9)


def test_predict_translated_query(dataset):
    t = np.array([0.3, 0.1, 0.0])
    action, _, _ = predict_action(dataset, PointCloud(DEMO.cloud.points + t))
    assert axis_error(action.axis, AXIS.replace(q=AXIS.q + t)).distance < 1e-6
    assert axis_error(action.axis, AXIS).angle < 1e-6


def test_predict_scaled_query(dataset):
    c = DEMO.cloud.centroid
    action, _, _ = predict_action(dataset, PointCloud(1.5 * (DEMO.cloud.points - c) + c))
    expect = AXIS.replace(q=1.5 * (AXIS.q - c) + c)
    d, ang = axis_error(action.axis, expect)
    assert d < 1e-6 and ang < 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_predict_similarity_query(dataset, seed):
    rng = np.random.default_rng(seed)
    t, R, s = AugmentSpec().draw(rng)
    target = apply_similarity(DEMO, t, R, s)
    action, _, _ = predict_action(dataset, target.cloud)
    d, ang = axis_error(action.axis, target.action.axis)
    assert d < 0.01 and ang < 3.0


def test_predict_errors(dataset):
    with pytest.raises(NoModelError):
        predict_action(Dataset(), DEMO.cloud)
    with pytest.raises(InvalidArgumentError):
        predict_action(dataset, PointCloud(DEMO.cloud.points[:10]))


def test_recency_wins_exact_ties():
    first = bottle_example(AXIS)
    second = bottle_example(AXIS.replace(q=[0.01, 0.04, 0.0]))
    ds = Dataset([first, second])
    _, _, eid = predict_action(ds, first.cloud)
    assert eid == ds.ids[1]


def test_extend_with_corrected(dataset):
    spec = AugmentSpec(n_samples=7, seed=2)
    corrected_axis = AXIS.replace(q=[0.005, 0.04, 0.0])
    cloud = bottle_cloud(seed=9)
    corrected = Example(cloud, ScrewAction(DEMO.action.g_l, DEMO.action.g_r, corrected_axis), Provenance.CORRECTED, dataset.ids[0])
    grown = extend_with_corrected(dataset, corrected, spec)
    assert len(grown) == len(dataset) + 1 + 7
    assert len(dataset) == 21  # the input is untouched
    action, score, eid = predict_action(grown, cloud)
    assert grown.get(eid).provenance is Provenance.CORRECTED
    assert same_axis(action.axis, corrected_axis, 1e-9)
    with pytest.raises(InvalidArgumentError):
        extend_with_corrected(dataset, DEMO, spec)


def test_corrected_needs_parent():
    with pytest.raises(InvalidArgumentError):
        Example(DEMO.cloud, DEMO.action, Provenance.CORRECTED)


def test_retrieval_is_local():
    # a query near one of two distinct objects retrieves that object
    other_pts = np.random.default_rng(4).uniform(-0.1, 0.1, (600, 3)) * [1.0, 0.2, 1.0]
    other = Example(PointCloud(other_pts), DEMO.action)
    ds = Dataset([DEMO, other])
    noisy = PointCloud(DEMO.cloud.points + np.random.default_rng(5).normal(0, 5e-4, DEMO.cloud.points.shape))
    assert predict_action(ds, noisy)[2] == ds.ids[0]
    assert predict_action(ds, PointCloud(other_pts + 0.2))[2] == ds.ids[1]


def test_extend_leaves_unrelated_queries_alone():
    box = np.random.default_rng(4).uniform(-0.1, 0.1, (600, 3)) * [1.0, 0.2, 1.0]
    box_action = ScrewAction([0, 0, 0], [0.1, 0, 0], ScrewAxis(JointType.PRISMATIC, np.zeros(3), [1.0, 0, 0]))
    ds = augment_dataset([DEMO, Example(PointCloud(box), box_action)], AugmentSpec(n_samples=5, seed=0))
    query = PointCloud(box + [0.05, 0.0, 0.0])
    before = predict_action(ds, query)
    corrected = Example(DEMO.cloud, ScrewAction(DEMO.action.g_l, DEMO.action.g_r, AXIS.replace(q=[0.01, 0.04, 0])),
                        Provenance.CORRECTED, ds.ids[0])
    after = predict_action(extend_with_corrected(ds, corrected, AugmentSpec(n_samples=5, seed=1)), query)
    assert after[2] == before[2] and after[1] == before[1]
    np.testing.assert_array_equal(after[0].axis.q, before[0].axis.q)
