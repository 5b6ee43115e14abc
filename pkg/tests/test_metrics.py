import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from evifuse.errors import InvalidInputError
from evifuse.joint import N_QUALITY
from evifuse.metrics import evaluate, normality_diag, plcc, srcc
from evifuse.scorer import TinyScorer
from evifuse.synth import Dataset, SynthConfig, generate_dataset


def test_srcc_examples():
    assert srcc([1, 2, 3, 4, 5], [2, 4, 6, 8, 10]) == 1.0
    assert srcc([1, 2, 3, 4, 5], [5, 4, 3, 2, 1]) == -1.0
    assert srcc([1, 2, 3, 4, 5], [1, 3, 2, 4, 5]) == pytest.approx(0.9, abs=1e-14)


def test_srcc_average_ranks_on_ties():
    # ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4)
    r1 = np.array([1, 2.5, 2.5, 4])
    r2 = np.arange(1, 5.0)
    expected = np.corrcoef(r1, r2)[0, 1]
    assert srcc([0, 1, 1, 2], [0, 1, 2, 3]) == pytest.approx(expected, rel=1e-14)


def test_plcc_examples():
    x = np.array([0.3, 1.1, 2.0, 2.2, 5.0])
    assert plcc(x, 3 * x + 1) == pytest.approx(1.0, abs=1e-15)
    assert plcc(x, -x) == pytest.approx(-1.0, abs=1e-15)
    y = np.array([1.0, 0.5, 2.5, 2.0, 4.0])
    cov = np.mean((x - x.mean()) * (y - y.mean()))
    assert plcc(x, y) == pytest.approx(cov / (x.std() * y.std()), rel=1e-13)


def test_constant_input_is_nan():
    assert np.isnan(plcc([1, 1, 1], [1, 2, 3]))
    assert np.isnan(srcc([1, 2, 3], [4, 4, 4]))


@pytest.mark.parametrize("a,b", [([1], [1]), ([1, 2], [1, 2, 3]), ([[1, 2]], [[1, 2]])])
def test_bad_shapes(a, b):
    with pytest.raises(InvalidInputError):
        srcc(a, b)


@given(arrays(float, 12, elements=st.floats(-100, 100)),
       arrays(float, 12, elements=st.floats(-100, 100)))
def test_correlations_bounded(a, b):
    for f in (plcc, srcc):
        r = f(a, b)
        assert np.isnan(r) or -1 <= r <= 1


def test_normality_diag():
    rng = np.random.default_rng(0)
    gauss = normality_diag(rng.normal(size=1000))
    assert gauss > 0.995
    assert normality_diag(rng.uniform(size=1000)) < gauss
    with pytest.raises(InvalidInputError):
        normality_diag(np.ones(50))
    with pytest.raises(InvalidInputError):
        normality_diag(rng.normal(size=19))


def perfect_setup(n=60, s=3, d=2):
    """Hand-built features and a scorer that reads them off exactly."""
    rng = np.random.default_rng(1)
    quality = np.sort(rng.uniform(-1, 1, n))
    scene, dist = rng.integers(s, size=n), rng.integers(d, size=n)
    feats = np.concatenate([quality[:, None], np.eye(s)[scene], np.eye(d)[dist]], axis=1)
    sc = TinyScorer.zeros(feats.shape[1], s, d, kappa=0.1)
    w = np.zeros((feats.shape[1], N_QUALITY, s, d))
    w[0] = np.arange(1, N_QUALITY + 1)[:, None, None]
    for k in range(s):
        w[1 + k, :, k, :] = 5.0
    for k in range(d):
        w[1 + s + k, :, :, k] = 5.0
    sc.weight = w.reshape(feats.shape[1], -1)
    mos = 3 + 2 * quality
    local = np.repeat(feats[:, None], 4, axis=1)
    return sc, Dataset(local, feats, mos, scene, dist, s, d)


def test_evaluate_perfect_scorer():
    sc, data = perfect_setup()
    m = evaluate(sc, data)
    assert m.srcc == pytest.approx(1.0, abs=1e-14)
    assert m.acc_scene == 1.0 and m.acc_distortion == 1.0
    assert m.n == 60


def test_evaluate_random_scorer_near_chance():
    data = generate_dataset(SynthConfig(seed=11))
    for seed in range(5):
        sc = TinyScorer.init(data.feature_dim, 3, 3, np.random.default_rng(seed))
        assert abs(evaluate(sc, data, with_intervals=False).srcc) < 0.2


def test_evaluate_ci_widths_positive_and_text():
    data = generate_dataset(SynthConfig(n_samples=80, seed=2))
    m = evaluate(TinyScorer.init(data.feature_dim, 3, 3, np.random.default_rng(0)), data)
    assert 0 < m.mean_ci_width < np.inf and 0 < m.mean_ci_width_single < np.inf
    text = m.to_text()
    assert text.startswith("srcc=") and f"n={m.n}\n" in text
    no_ci = evaluate(TinyScorer.init(data.feature_dim, 3, 3, np.random.default_rng(0)), data,
                     with_intervals=False)
    assert np.isnan(no_ci.mean_ci_width) and no_ci.srcc == m.srcc
