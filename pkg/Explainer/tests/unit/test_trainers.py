import sys
from pathlib import Path

import numpy as np
import pytest
from sklearn.metrics.pairwise import rbf_kernel

ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from datasets import synthetic_gaussians, synthetic_xor
from errors import ConfigError, ModelInvariantError, NumericalError
from models import decision, predict_sign
from trainers import grid_search, smo_solve, train_knn, train_krr, train_svm

pytestmark = pytest.mark.ci_smoke


def test_svm_boundary_at_midpoint_of_two_points():
    model = train_svm([[-1.0], [1.0]], [-1, 1], gamma=1.0, C=10.0)
    assert decision(model, [0.0]) == pytest.approx(0.0, abs=1e-6)
    assert decision(model, [0.1]) > 0
    assert decision(model, [-0.1]) < 0


def test_svm_fits_xor_corners():
    data = synthetic_xor(seed=0, n=4, noise=0.0)
    model = train_svm(data.features, data.labels, gamma=3.0, C=10.0)
    np.testing.assert_array_equal(predict_sign(model, data.features), data.labels)


def test_svm_duplicated_points_give_same_function():
    data = synthetic_gaussians(seed=1, n=20, noise=1.0)
    # duplicating every point doubles the hinge term, so C halves
    base = train_svm(data.features, data.labels, gamma=0.5, C=2.0, tol=1e-8)
    doubled = train_svm(np.vstack([data.features, data.features]),
                        np.concatenate([data.labels, data.labels]), gamma=0.5, C=1.0, tol=1e-8)
    rng = np.random.default_rng(0)
    for x in rng.normal(size=(10, 2)) * 2:
        assert decision(doubled, x) == pytest.approx(decision(base, x), abs=1e-4)


def test_svm_rejects_bad_labels_and_single_class():
    with pytest.raises(ConfigError):
        train_svm([[0.0], [1.0]], [0, 1], gamma=1.0, C=1.0)
    with pytest.raises(ModelInvariantError):
        train_svm([[0.0], [1.0]], [1, 1], gamma=1.0, C=1.0)
    with pytest.raises(ConfigError):
        train_svm([[0.0], [1.0]], [-1, 1], gamma=-1.0, C=1.0)


def test_smo_reports_non_convergence():
    data = synthetic_gaussians(seed=2, n=30, noise=2.0)
    K = rbf_kernel(data.features, gamma=1.0)
    with pytest.raises(NumericalError) as info:
        smo_solve(K, data.labels, C=10.0, tol=1e-12, max_iter=1)
    assert info.value.residual is not None


def test_krr_examples():
    single = train_krr([[0.0]], [3.0], gamma=1.0, ridge=0.0)
    np.testing.assert_allclose(single.coeffs, [3.0])

    pair = train_krr([[1.0], [-1.0]], [1.0, -1.0], gamma=1.0, ridge=0.0)
    assert pair.coeffs[0] == pytest.approx(-pair.coeffs[1])

    rng = np.random.default_rng(4)
    X = rng.normal(size=(10, 3))
    model = train_krr(X, rng.normal(size=10), gamma=0.5, ridge=0.1)
    assert model.n_points == 10


def test_krr_singular_system_without_ridge():
    with pytest.raises(NumericalError):
        train_krr([[0.0], [0.0]], [1.0, 2.0], gamma=1.0, ridge=0.0)


def test_grid_search_svm_on_separable_data():
    data = synthetic_gaussians(seed=0, n=60, noise=0.5)
    model, report = grid_search('svm', data.features, data.labels,
                                {'gamma': [0.1, 1.0], 'C': [1.0, 10.0]}, folds=5, seed=0)
    assert report.best_score == pytest.approx(1.0)
    assert report.best_params['gamma'] in (0.1, 1.0)
    assert len(report.scores) == 4


def test_grid_search_knn_on_separable_data():
    data = synthetic_gaussians(seed=0, n=60, noise=0.5)
    model, report = grid_search('knn', data.features, data.labels, {'k': [1, 3, 5]})
    assert report.best_score == pytest.approx(1.0)
    assert model.k == 1  # ties keep the first grid point


def test_grid_of_size_one_trains_directly():
    data = synthetic_gaussians(seed=0, n=40, noise=0.5)
    model, report = grid_search('svm', data.features, data.labels, {'gamma': [1.0], 'C': [1.0]})
    assert report.best_params == {'gamma': 1.0, 'C': 1.0}
    assert 'train_score' in report.scores[0]


def test_empty_grid_is_rejected():
    with pytest.raises(ConfigError):
        grid_search('svm', [[0.0], [1.0]], [-1, 1], {'gamma': [], 'C': [1.0]})


def test_train_knn_keeps_all_points():
    model = train_knn([[0.0], [1.0], [2.0]], [-1, 1, 1], k=1)
    assert model.n_points == 3
