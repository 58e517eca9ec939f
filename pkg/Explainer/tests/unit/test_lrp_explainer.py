import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from errors import ConfigError
from model_wrappers.lrp_explainer import (
    LrpExplainer,
    LrpHyperparams,
    PoolingProbabilities,
    explain,
    explain_fast_path,
    explain_pairwise,
    heuristic_params,
    pooling_probabilities,
    pooling_probabilities_knn,
    pooling_probabilities_svm,
)
from model_wrappers.neuralize import forward, neuralize
from models import KnnModel, SvmModel

pytestmark = pytest.mark.ci_smoke


def two_sv(gamma=1.0):
    return SvmModel(support_vectors=[[1.0, 0.0], [-1.0, 0.0]], dual_coeffs=[1.0, 1.0],
                    labels=[1, -1], gamma=gamma)


def knn_1d(k=1):
    return KnnModel(points=[[1.0], [2.0], [-1.0], [-2.0]], labels=[1, 1, -1, -1], k=k)


def random_svm(rng, n, d, gamma=1.0, bias=0.0):
    labels = np.where(rng.random(n) < 0.5, 1, -1)
    labels[:2] = [1, -1]
    return SvmModel(support_vectors=rng.normal(size=(n, d)),
                    dual_coeffs=rng.uniform(0.05, 2.0, size=n),
                    labels=labels, gamma=gamma, bias=bias)


def test_heuristic_params_table():
    assert heuristic_params(two_sv(0.01)).eta == 0.0
    assert heuristic_params(two_sv(1.0)).eta == pytest.approx(0.4, abs=1e-15)
    params = heuristic_params(two_sv(10.0))
    assert params.eta == pytest.approx(0.8, abs=1e-15)
    assert params.beta == 10.0
    knn = KnnModel(points=np.arange(12, dtype=float)[:, None],
                   labels=[1] * 6 + [-1] * 6, k=9)
    assert heuristic_params(knn) == LrpHyperparams(eta=0.8, kappa=4)


def test_hyperparams_validation():
    with pytest.raises(ConfigError):
        LrpHyperparams(eta=1.5, beta=1.0).validate('smooth')
    with pytest.raises(ConfigError):
        LrpHyperparams(eta=0.5, beta=0.0).validate('smooth')
    with pytest.raises(ConfigError):
        LrpHyperparams(eta=0.5, kappa=-1).validate('ranked')


def test_single_pair_probabilities_are_one():
    net = neuralize(two_sv())
    probs = pooling_probabilities_svm(net, forward(net, [0.3, 0.1]), beta=1.0)
    np.testing.assert_allclose(probs.p_pos, [1.0])
    np.testing.assert_allclose(probs.p_neg, [1.0])


def test_softargmax_by_hand():
    # positive scores (0, 1): u = (±0.5, 0) with the negative point far away
    model = SvmModel(support_vectors=[[0.0], [0.5], [-5.0]], dual_coeffs=[1.0, 1.0, 1.0],
                     labels=[1, 1, -1], gamma=1.0)
    net = neuralize(model)
    trace = forward(net, [1.0])
    # a = 2xu − u²: 0 and 0.75
    np.testing.assert_allclose(trace.positive_scores, [0.0, 0.75])
    probs = pooling_probabilities_svm(net, trace, beta=1.0)
    expected = np.exp([0.0, 0.75]) / np.exp([0.0, 0.75]).sum()
    np.testing.assert_allclose(probs.p_pos, expected, rtol=1e-12)


def test_equal_scores_split_evenly():
    model = SvmModel(support_vectors=[[1.0], [1.0], [-1.0]], dual_coeffs=[1.0, 1.0, 1.0],
                     labels=[1, 1, -1], gamma=1.0)
    net = neuralize(model)
    probs = pooling_probabilities_svm(net, forward(net, [0.2]), beta=7.0)
    np.testing.assert_allclose(probs.p_pos, [0.5, 0.5])


def test_knn_band_examples():
    net = neuralize(knn_1d(1))
    probs = pooling_probabilities_knn(net, forward(net, [0.5]), kappa=0)
    np.testing.assert_allclose(probs.p_neg, [1.0, 0.0])
    np.testing.assert_allclose(probs.p_pos, [1.0, 0.0])

    wide = pooling_probabilities_knn(net, forward(net, [0.5]), kappa=10)
    np.testing.assert_allclose(wide.p_pos, [0.5, 0.5])
    np.testing.assert_allclose(wide.p_neg, [0.5, 0.5])


def test_pooling_conservation():
    rng = np.random.default_rng(0)
    for _ in range(50):
        net = neuralize(random_svm(rng, 12, 3, gamma=rng.choice([0.1, 1.0, 10.0]),
                                   bias=rng.choice([-0.5, 0.0, 0.5])))
        x = rng.normal(size=3)
        probs = pooling_probabilities(net, forward(net, x), LrpHyperparams(eta=0.5, beta=3.0))
        assert probs.p_pos.sum() == pytest.approx(1.0, abs=1e-10)
        assert probs.p_neg.sum() == pytest.approx(1.0, abs=1e-10)

        points = rng.normal(size=(15, 2))
        knn = KnnModel(points=points, labels=np.where(np.arange(15) < 8, 1, -1), k=5)
        knet = neuralize(knn)
        kprobs = pooling_probabilities(knet, forward(knet, rng.normal(size=2)),
                                       LrpHyperparams(eta=0.8, kappa=int(rng.integers(0, 4))))
        assert kprobs.p_pos.sum() == pytest.approx(1.0, abs=1e-10)
        assert kprobs.p_neg.sum() == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize('eta', [0.0, 0.3, 1.0])
def test_two_sv_relevance_independent_of_eta(eta):
    net = neuralize(two_sv())
    result = explain(net, [1.0, 0.0], LrpHyperparams(eta=eta, beta=1.0))
    np.testing.assert_allclose(result.relevance, [4.0, 0.0], atol=1e-12)
    assert result.g_value == pytest.approx(4.0)


def test_concentrated_probabilities_give_single_unit():
    rng = np.random.default_rng(1)
    net = neuralize(random_svm(rng, 8, 3))
    x = rng.normal(size=3)
    p_pos = np.zeros(net.positive_index.size)
    p_neg = np.zeros(net.negative_index.size)
    p_pos[0] = p_neg[0] = 1.0
    w, m, _ = net.pair_parameters(net.positive_index[0], net.negative_index[0])
    relevance = explain_fast_path(net, x, PoolingProbabilities(p_pos, p_neg), 0.6)
    np.testing.assert_allclose(relevance, (x - 0.6 * m) * w, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize('eta', [0.0, 0.3, 0.7, 1.0])
def test_fast_path_matches_pairwise(eta):
    rng = np.random.default_rng(int(eta * 10))
    for draw in range(100):
        gamma = (0.1, 1.0, 10.0)[draw % 3]
        net = neuralize(random_svm(rng, int(rng.integers(6, 31)), int(rng.integers(2, 9)),
                                   gamma=gamma, bias=(-0.5, 0.3, 0.5)[draw % 3]))
        assert net.bias_unit is not None
        x = rng.normal(size=net.dim)
        probs = pooling_probabilities(net, forward(net, x), LrpHyperparams(eta=eta, beta=gamma))
        fast = explain_fast_path(net, x, probs, eta)
        slow = explain_pairwise(net, x, probs, eta)
        np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=1e-10)


def test_convex_decomposition():
    rng = np.random.default_rng(2)
    knn = KnnModel(points=rng.normal(size=(20, 4)), labels=np.where(np.arange(20) < 10, 1, -1), k=3)
    for draw in range(1000):
        if draw % 20 == 0:
            if draw % 40 == 0:
                bias = (0.3, -0.3)[draw % 80 // 40]
                net = neuralize(random_svm(rng, 10, 4, gamma=1.0, bias=bias))
                params = {'beta': 2.0}
            else:
                net = neuralize(knn)
                params = {'kappa': 1}
        x = rng.normal(size=4)
        eta = rng.random()
        mixed = explain(net, x, LrpHyperparams(eta=eta, **params)).relevance
        r0 = explain(net, x, LrpHyperparams(eta=0.0, **params)).relevance
        r1 = explain(net, x, LrpHyperparams(eta=1.0, **params)).relevance
        np.testing.assert_allclose(mixed, (1 - eta) * r0 + eta * r1, rtol=1e-12, atol=1e-12)


def test_large_beta_concentrates_on_the_top_score():
    rng = np.random.default_rng(5)
    checked = 0
    for draw in range(40):
        net = neuralize(random_svm(rng, 12, 3, bias=(0.0, 0.4)[draw % 2]))
        trace = forward(net, rng.normal(size=3))
        gaps = np.concatenate([np.diff(np.sort(s)) for s in (trace.positive_scores, trace.h)])
        if gaps.size and gaps.min() < 1e-4:
            continue
        probs = pooling_probabilities_svm(net, trace, beta=1e6)
        assert probs.p_pos.max() > 1 - 1e-6
        assert probs.p_pos.argmax() == trace.positive_scores.argmax()
        assert probs.p_neg.max() > 1 - 1e-6
        assert probs.p_neg.argmax() == trace.h.argmin()
        checked += 1
    assert checked >= 30


def test_knn_single_pair_ignores_other_points():
    rng = np.random.default_rng(8)
    for _ in range(20):
        points = rng.normal(size=(16, 2))
        labels = np.where(np.arange(16) < 8, 1, -1)
        x = rng.normal(size=2)
        params = LrpHyperparams(eta=0.8, kappa=0)
        net = neuralize(KnnModel(points=points, labels=labels, k=1))
        trace = forward(net, x)
        base = explain(net, x, params).relevance

        i_keep = net.positive_index[trace.selected_positive]
        j_keep = net.negative_index[trace.selected_negative]
        for idx in range(16):
            if idx in (i_keep, j_keep):
                continue
            moved = points.copy()
            moved[idx] = x + 3.0 * (points[idx] - x)
            moved_net = neuralize(KnnModel(points=moved, labels=labels, k=1))
            np.testing.assert_array_equal(explain(moved_net, x, params).relevance, base)


def test_full_midpoint_relevance_is_translation_covariant():
    rng = np.random.default_rng(13)
    for draw in range(50):
        model = random_svm(rng, 10, 3, gamma=1.0, bias=(0.0, 0.4, -0.4)[draw % 3])
        delta = rng.normal(scale=2.0, size=3)
        shifted = SvmModel(support_vectors=model.support_vectors + delta,
                           dual_coeffs=model.dual_coeffs, labels=model.labels,
                           gamma=model.gamma, bias=model.bias)
        x = rng.normal(size=3)
        params = LrpHyperparams(eta=1.0, beta=1.0)
        np.testing.assert_allclose(explain(neuralize(shifted), x + delta, params).relevance,
                                   explain(neuralize(model), x, params).relevance,
                                   rtol=1e-9, atol=1e-9)

    points = rng.normal(size=(12, 2))
    knn_labels = np.where(np.arange(12) < 6, 1, -1)
    delta = np.array([3.0, -1.5])
    x = rng.normal(size=2)
    params = LrpHyperparams(eta=1.0, kappa=1)
    np.testing.assert_allclose(
        explain(neuralize(KnnModel(points=points + delta, labels=knn_labels, k=3)),
                x + delta, params).relevance,
        explain(neuralize(KnnModel(points=points, labels=knn_labels, k=3)), x, params).relevance,
        rtol=1e-9, atol=1e-9,
    )


def test_knn_explanation_is_finite_and_signed():
    net = neuralize(knn_1d(3))
    explainer = LrpExplainer(net, heuristic_params(knn_1d(3)))
    relevance = explainer([0.5])
    assert relevance.shape == (1,)
    assert np.isfinite(relevance).all()


def test_explainer_rejects_mismatched_hyperparams():
    with pytest.raises(ConfigError):
        LrpExplainer(neuralize(knn_1d(1)), LrpHyperparams(eta=0.5, beta=1.0))
