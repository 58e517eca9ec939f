import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from datasets import Dataset, preprocess
from errors import DataFormatError, IncompatibleMethodError, NumericalError
from evaluation import (
    KdeInpainter,
    evaluate_method,
    flip,
    flip_rng,
    sign_decider,
    silverman_bandwidth,
)
from model_wrappers.baseline_explainers import make_config
from model_wrappers.explainers import build_explainer
from models import KrrModel
from trainers import train_svm

pytestmark = pytest.mark.ci_smoke


def two_clusters(spread=0.3, n=50, seed=0):
    rng = np.random.default_rng(seed)
    low = rng.normal(loc=-5.0, scale=spread, size=(n, 2))
    high = rng.normal(loc=5.0, scale=spread, size=(n, 2))
    return np.vstack([low, high])


def sum_decider(z):
    return 1 if np.sum(z) > 2.5 else -1


def origin_inpainter(d=4):
    return KdeInpainter(np.zeros((1, d)), bandwidth=1e-9)


@pytest.fixture(scope='module')
def informative_problem():
    """Five features, only the first decides the label."""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 5))
    data = Dataset(features=X, labels=np.where(X[:, 0] > 0, 1.0, -1.0))
    prepared = preprocess(data, seed=0)
    model = train_svm(prepared.train.features, prepared.train.labels, gamma=1.0, C=10.0)
    return prepared, model


def test_silverman_bandwidth_is_positive_per_feature():
    X = np.column_stack([np.random.default_rng(0).normal(size=100), np.ones(100)])
    bw = silverman_bandwidth(X)
    assert bw.shape == (2,)
    assert np.all(bw > 0)
    column = X[:, 0]
    q75, q25 = np.percentile(column, [75, 25])
    spread = min(column.std(ddof=1), (q75 - q25) / 1.349)
    assert bw[0] == pytest.approx(0.9 * spread * 100 ** -0.2, rel=1e-12)


def test_silverman_bandwidth_ignores_dimension():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(400, 6))
    np.testing.assert_allclose(silverman_bandwidth(X)[:2], silverman_bandwidth(X[:, :2]),
                               rtol=1e-12)


def test_removing_every_feature_gives_uniform_weights():
    inpainter = KdeInpainter(two_clusters())
    weights = inpainter.weights(np.zeros(2), np.ones(2, dtype=bool))
    np.testing.assert_allclose(weights, np.full(100, 0.01))


def test_single_reference_with_tiny_bandwidth():
    inpainter = KdeInpainter([[3.0, 4.0]], bandwidth=1e-9)
    out = inpainter.inpaint(np.array([0.0, 0.0]), [0], np.random.default_rng(0))
    assert out[0] == pytest.approx(3.0, abs=1e-6)
    assert out[1] == 0.0


def test_inpainting_is_conditional_on_kept_features():
    inpainter = KdeInpainter(two_clusters(), bandwidth=0.5)
    rng = np.random.default_rng(1)
    x = np.array([5.1, 0.0])
    samples = [inpainter.inpaint(x, [1], rng) for _ in range(100)]
    assert sum(s[1] > 0 for s in samples) >= 95
    assert all(s[0] == x[0] for s in samples)


def test_uniform_fallback_when_weights_vanish(caplog):
    inpainter = KdeInpainter([[0.0, 0.0], [1.0, 1.0]], bandwidth=1e-3)
    with caplog.at_level('WARNING'):
        weights = inpainter.weights(np.array([1000.0, 0.0]), np.array([False, True]))
    np.testing.assert_allclose(weights, [0.5, 0.5])
    assert inpainter.fallbacks == 1
    assert 'uniformly' in caplog.text


def test_fallback_count_is_exact_under_threads():
    inpainter = KdeInpainter([[0.0, 0.0], [1.0, 1.0]], bandwidth=1e-3)
    far = np.array([1000.0, 0.0])
    mask = np.array([False, True])
    with ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(lambda _: inpainter.weights(far, mask), range(400)))
    assert inpainter.fallbacks == 400


def test_flip_outcomes_by_hand():
    x = np.ones(4)
    curve = flip(sum_decider, [4.0, 3.0, 2.0, 1.0], x, origin_inpainter(), flip_rng(0, 0))
    np.testing.assert_array_equal(curve.outcomes, [1, -1, -1, -1])
    assert curve.aufc == pytest.approx(-0.5)


def test_flip_extremes():
    x = np.ones(3)
    constant = flip(lambda z: 1, [1.0, 2.0, 3.0], x, origin_inpainter(3), flip_rng(0, 0),
                    repeats=3)
    assert constant.aufc == 1.0
    fragile = flip(lambda z: 1 if np.array_equal(z, x) else -1, [1.0, 2.0, 3.0], x,
                   origin_inpainter(3), flip_rng(0, 0))
    np.testing.assert_array_equal(fragile.outcomes, [-1, -1, -1])


def test_flip_rejects_nan_relevance():
    with pytest.raises(NumericalError):
        flip(sum_decider, [np.nan, 1.0, 0.0, 0.0], np.ones(4), origin_inpainter(),
             flip_rng(0, 0))


def test_flip_depends_only_on_ranking():
    inpainter = KdeInpainter(two_clusters(), bandwidth=0.5)
    x = np.array([4.0, 5.5])
    decider = lambda z: 1 if z.sum() > 0 else -1  # noqa: E731
    a = flip(decider, [0.1, 0.2], x, inpainter, flip_rng(3, 7), repeats=4)
    b = flip(decider, [10.0, 250.0], x, inpainter, flip_rng(3, 7), repeats=4)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)


def test_evaluation_is_deterministic_and_thread_independent(informative_problem):
    prepared, model = informative_problem
    inpainter = KdeInpainter(prepared.train.features)
    explainer = build_explainer('lrp', model, make_config(prepared.train.features))
    serial = evaluate_method(model, prepared.explain, explainer, inpainter, repeats=2, seed=5)
    again = evaluate_method(model, prepared.explain, explainer, inpainter, repeats=2, seed=5)
    threaded = evaluate_method(model, prepared.explain, explainer, inpainter, repeats=2, seed=5,
                               threads=4)
    np.testing.assert_array_equal(serial.aufcs, again.aufcs)
    np.testing.assert_array_equal(serial.aufcs, threaded.aufcs)
    assert serial.n == len(prepared.explain)
    assert serial.std == pytest.approx(np.std(serial.aufcs, ddof=1))


def test_lrp_beats_random(informative_problem):
    prepared, model = informative_problem
    inpainter = KdeInpainter(prepared.train.features)
    config = make_config(prepared.train.features, seed=1)
    results = {
        method: evaluate_method(model, prepared.explain, build_explainer(method, model, config),
                                inpainter, repeats=2, seed=1)
        for method in ('lrp', 'random')
    }
    assert results['lrp'].mean_aufc < results['random'].mean_aufc - 0.1


def test_empty_split_rejected(informative_problem):
    prepared, model = informative_problem
    explainer = build_explainer('random', model, make_config(prepared.train.features))
    with pytest.raises(DataFormatError):
        evaluate_method(model, prepared.explain.subset([]), explainer,
                        KdeInpainter(prepared.train.features))


def test_regression_models_cannot_be_flipped():
    with pytest.raises(IncompatibleMethodError):
        sign_decider(KrrModel(points=[[0.0], [1.0]], coeffs=[1.0, -1.0], gamma=1.0))
