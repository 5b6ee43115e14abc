import numpy as np
import pytest

from evifuse.errors import InvalidInputError
from evifuse.scorer import TinyScorer, load_scorer, save_scorer, scorer_forward


def test_zero_weights_give_uniform_joints():
    sc = TinyScorer.zeros(6, 3, 2)
    views = scorer_forward(sc, np.ones((4, 5, 6)), np.ones((4, 6)))
    np.testing.assert_allclose(views.locals_, 1 / 30, rtol=1e-14)
    np.testing.assert_allclose(views.global_view, 1 / 30, rtol=1e-14)


def test_constant_bias_shift_is_invisible(rng):
    sc = TinyScorer.init(6, 3, 2, rng, scale=0.5)
    x = rng.normal(size=(3, 6))
    before = sc.joint(x)
    sc.bias = sc.bias + 4.2
    np.testing.assert_allclose(sc.joint(x), before, rtol=1e-10)


def test_forward_matches_matrix_oracle(rng):
    sc = TinyScorer.init(4, 2, 3, rng, scale=0.7)
    x = rng.normal(size=4)
    z = np.array([sum(x[i] * sc.weight[i, j] for i in range(4)) + sc.bias[j]
                  for j in range(30)]) / sc.kappa
    expected = np.exp(z - z.max())
    expected /= expected.sum()
    np.testing.assert_allclose(sc.joint(x).ravel(), expected, rtol=1e-12)


def test_feature_dim_mismatch(rng):
    with pytest.raises(InvalidInputError):
        TinyScorer.init(4, 2, 2, rng).logits(np.zeros(5))


def test_save_load_roundtrip(tmp_path, rng):
    sc = TinyScorer.init(5, 3, 4, rng, scale=0.3)
    path = tmp_path / "m.txt"
    save_scorer(sc, path)
    back = load_scorer(path)
    assert (back.feature_dim, back.n_scene, back.n_distortion) == (5, 3, 4)
    for k, v in sc.parameters().items():
        np.testing.assert_array_equal(back.parameters()[k], v)
    save_scorer(back, tmp_path / "m2.txt")
    assert (tmp_path / "m2.txt").read_bytes() == path.read_bytes()


def test_copy_is_independent(rng):
    sc = TinyScorer.init(3, 2, 2, rng)
    cp = sc.copy()
    cp.weight[0, 0] += 1
    cp.proj.weights["q"][0, 0] += 1
    assert sc.weight[0, 0] != cp.weight[0, 0]
    assert sc.proj.weights["q"][0, 0] != cp.proj.weights["q"][0, 0]


@pytest.mark.parametrize("mutate", [
    lambda t: t.replace("dims", "dimz"),
    lambda t: t.replace("weight\t", "weight\t9,", 1),
    lambda t: "\n".join(line for line in t.splitlines() if not line.startswith("proj_b_d")),
    lambda t: t + "junk line\n",
])
def test_load_rejects_malformed(tmp_path, rng, mutate):
    path = tmp_path / "m.txt"
    save_scorer(TinyScorer.init(3, 2, 2, rng), path)
    path.write_text(mutate(path.read_text()))
    with pytest.raises(InvalidInputError):
        load_scorer(path)
