import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from evifuse.errors import InvalidInputError
from evifuse.gradcheck import check_joint_softmax
from evifuse.joint import (N_DISTORTION, N_QUALITY, N_SCENE, EvidenceProjection, ViewSet,
                           distortion_marginal, joint_softmax, quality_expectation,
                           quality_marginal, scene_marginal, task_evidence, task_features)

SHAPE = (N_QUALITY, 3, 4)
logits_st = arrays(float, SHAPE, elements=st.floats(-30, 30))


def brute_marginals(view):
    c, s, d = view.shape
    pc, ps, pd = np.zeros(c), np.zeros(s), np.zeros(d)
    for i in range(c):
        for j in range(s):
            for k in range(d):
                pc[i] += view[i, j, k]
                ps[j] += view[i, j, k]
                pd[k] += view[i, j, k]
    return pc, ps, pd


def random_joint(rng, shape=SHAPE):
    return joint_softmax(rng.normal(size=shape), 0.5)


def test_softmax_uniform_and_dominant():
    np.testing.assert_allclose(joint_softmax(np.full(SHAPE, 1.7), 0.07), 1 / 60, rtol=1e-14)
    logits = np.zeros(SHAPE)
    logits[2, 1, 3] = 20
    assert joint_softmax(logits, 0.07)[2, 1, 3] > 1 - 1e-9


@pytest.mark.parametrize("kappa", [0.0, -1.0])
def test_softmax_rejects_kappa(kappa):
    with pytest.raises(InvalidInputError):
        joint_softmax(np.zeros(SHAPE), kappa)


@given(logits_st, st.floats(0.05, 5), st.floats(-100, 100))
def test_softmax_normalized_positive_shift_invariant(logits, kappa, shift):
    p = joint_softmax(logits, kappa)
    assert abs(p.sum() - 1) < 1e-6
    assert np.all(p >= 0)
    np.testing.assert_allclose(joint_softmax(logits + shift, kappa), p, rtol=1e-9, atol=1e-15)


def test_softmax_batched_normalizes_per_view(rng):
    p = joint_softmax(rng.normal(size=(3, 2) + SHAPE), 0.3)
    np.testing.assert_allclose(p.sum(axis=(-3, -2, -1)), 1, rtol=1e-12)


def test_softmax_vjp():
    assert check_joint_softmax(n=20) < 1e-5


def test_quality_marginal_examples():
    uniform = np.full(SHAPE, 1 / 60)
    np.testing.assert_allclose(quality_marginal([uniform]), 0.2, rtol=1e-14)
    lo, hi = np.zeros(SHAPE), np.zeros(SHAPE)
    lo[0, 0, 0] = 1
    hi[4, 2, 1] = 1
    np.testing.assert_array_equal(quality_marginal([lo, hi]), [0.5, 0, 0, 0, 0.5])
    with pytest.raises(InvalidInputError):
        quality_marginal(np.zeros((0,) + SHAPE))


def test_marginals_match_brute_force(rng):
    views = [random_joint(rng) for _ in range(3)]
    brute = [brute_marginals(v) for v in views]
    np.testing.assert_allclose(quality_marginal(views), np.mean([b[0] for b in brute], axis=0),
                               rtol=1e-13)
    for v, (_, ps, pd) in zip(views, brute):
        np.testing.assert_allclose(scene_marginal(v), ps, rtol=1e-13)
        np.testing.assert_allclose(distortion_marginal(v), pd, rtol=1e-13)


def test_scene_and_distortion_examples():
    uniform = np.full(SHAPE, 1 / 60)
    np.testing.assert_allclose(scene_marginal(uniform), 1 / 3, rtol=1e-14)
    np.testing.assert_allclose(distortion_marginal(uniform), 1 / 4, rtol=1e-14)
    a, b = np.zeros(SHAPE), np.zeros(SHAPE)
    a[1, 0, 0] = 1
    b[3, 2, 3] = 1
    np.testing.assert_array_equal((scene_marginal(a) + scene_marginal(b)) / 2, [0.5, 0, 0.5])
    np.testing.assert_array_equal((distortion_marginal(a) + distortion_marginal(b)) / 2,
                                  [0.5, 0, 0, 0.5])


@given(logits_st, st.floats(0.05, 5))
def test_all_marginals_normalized(logits, kappa):
    p = joint_softmax(logits, kappa)
    for m in (quality_marginal([p]), scene_marginal(p), distortion_marginal(p)):
        assert abs(m.sum() - 1) < 1e-6


def test_quality_expectation_examples():
    assert quality_expectation(np.full(5, 0.2)) == 3.0
    assert quality_expectation([0, 0, 0, 0, 1]) == 5.0
    assert quality_expectation([0.1, 0.2, 0.3, 0.2, 0.2]) == pytest.approx(3.2, abs=1e-14)
    with pytest.raises(InvalidInputError):
        quality_expectation([0.2, 0.2, 0.2, 0.2, 0.3])


@given(arrays(float, 5, elements=st.floats(0, 1)).filter(lambda a: a.sum() > 1e-3))
def test_quality_expectation_in_range(w):
    assert 1 <= quality_expectation(w / w.sum()) <= 5


def test_viewset_validation(rng):
    vs = ViewSet(random_joint(rng, (4,) + SHAPE), random_joint(rng))
    assert vs.n_locals == 4
    with pytest.raises(InvalidInputError):
        ViewSet(random_joint(rng, (4,) + SHAPE), random_joint(rng, (5, 2, 2)))


def test_projection_defaults_follow_full_label_sets():
    proj = EvidenceProjection.zeros()
    assert proj.input_dim("q") == N_QUALITY + 1
    assert (proj.input_dim("s"), proj.input_dim("d")) == (N_SCENE, N_DISTORTION) == (9, 11)


def test_task_evidence_zero_weights_returns_bias(rng):
    proj = EvidenceProjection.zeros(3, 4)
    proj.biases["s"] = np.array([0.1, -0.2, 0.3, 0.4])
    np.testing.assert_array_equal(task_evidence(random_joint(rng), "s", proj), proj.biases["s"])


def test_task_evidence_routes_expectation():
    proj = EvidenceProjection.zeros(3, 4)
    proj.weights["q"][N_QUALITY, 0] = 1.0
    raw = task_evidence(np.full(SHAPE, 1 / 60), "q", proj)
    assert raw[0] == pytest.approx(3.0, abs=1e-14)


def test_task_evidence_matches_matrix_product(rng):
    proj = EvidenceProjection.init(3, 4, rng, scale=1.0)
    view = np.full(SHAPE, 1 / 60)
    feats = np.array([0.2] * 5 + [3.0])
    expected = [sum(feats[i] * proj.weights["q"][i, j] for i in range(6)) + proj.biases["q"][j]
                for j in range(4)]
    np.testing.assert_allclose(task_evidence(view, "q", proj), expected, rtol=1e-12)
    np.testing.assert_allclose(task_features(view, "d"), 0.25, rtol=1e-14)


def test_task_evidence_dimension_mismatch(rng):
    with pytest.raises(InvalidInputError):
        task_evidence(random_joint(rng), "s", EvidenceProjection.zeros(5, 4))
    with pytest.raises(InvalidInputError):
        task_features(random_joint(rng), "x")
