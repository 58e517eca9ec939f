"""
Model Training Module
Minimal SMO dual solver for Gaussian SVMs, kernel ridge regression and
cross-validated grid search over model hyperparameters.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import linalg
from sklearn.metrics import accuracy_score, mean_squared_error
from sklearn.metrics.pairwise import rbf_kernel
from sklearn.model_selection import KFold, StratifiedKFold

from config import Config
from errors import ConfigError, ModelInvariantError, NumericalError
from models import KnnModel, KrrModel, SvmModel, decision_batch

logger = logging.getLogger(__name__)

_TAU = 1e-12


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    iterations: int
    kkt_gap: float


def _validate_binary(labels):
    labels = np.asarray(labels)
    values = set(np.unique(labels).tolist())
    if not values <= {-1, 1}:
        raise ConfigError(f"labels must be in {{-1, +1}}, got {sorted(values)}")
    if len(values) < 2:
        raise ModelInvariantError("single-class data: both labels are required")
    return labels.astype(float)


def _select_working_set(G, y, alpha, C, K_diag, K):
    """Second-order working-set selection (maximal violating pair for i)."""
    minus_yG = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    if not up.any() or not low.any():
        return -1, -1, 0.0

    up_idx = np.flatnonzero(up)
    i = up_idx[np.argmax(minus_yG[up_idx])]
    m_up = minus_yG[i]
    low_idx = np.flatnonzero(low)
    m_low = minus_yG[low_idx].min()
    gap = m_up - m_low

    candidates = low_idx[minus_yG[low_idx] < m_up]
    if candidates.size == 0:
        return i, -1, gap
    b = m_up - minus_yG[candidates]
    a = K_diag[i] + K_diag[candidates] - 2.0 * K[i, candidates]
    a = np.where(a > 0, a, _TAU)
    j = candidates[np.argmin(-(b * b) / a)]
    return i, j, gap


def _update_pair(i, j, alpha, y, G, K, C):
    """Analytic two-variable update; returns (new alpha_i, new alpha_j)."""
    ai, aj = alpha[i], alpha[j]
    Kij = K[i, j]
    if y[i] != y[j]:
        quad = K[i, i] + K[j, j] - 2.0 * Kij
        quad = quad if quad > 0 else _TAU
        delta = (-G[i] - G[j]) / quad
        diff = ai - aj
        ai += delta
        aj += delta
        if diff > 0:
            if aj < 0:
                aj, ai = 0.0, diff
        else:
            if ai < 0:
                ai, aj = 0.0, -diff
        if diff > 0:
            if ai > C:
                ai, aj = C, C - diff
        else:
            if aj > C:
                aj, ai = C, C + diff
    else:
        quad = K[i, i] + K[j, j] - 2.0 * Kij
        quad = quad if quad > 0 else _TAU
        delta = (G[i] - G[j]) / quad
        total = ai + aj
        ai -= delta
        aj += delta
        if total > C:
            if ai > C:
                ai, aj = C, total - C
        else:
            if aj < 0:
                aj, ai = 0.0, total
        if total > C:
            if aj > C:
                aj, ai = C, total - C
        else:
            if ai < 0:
                ai, aj = 0.0, total
    return ai, aj


def _compute_bias(G, y, alpha, C):
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = yG[free].mean()
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb)
    # decision = Σ y α K − rho
    return -float(rho)


def smo_solve(K, y, C, tol=Config.SMO_TOLERANCE, max_iter=None):
    """Solve the soft-margin SVM dual on a precomputed kernel matrix."""
    n = K.shape[0]
    max_iter = max_iter or Config.SMO_ITERATION_FACTOR * n
    alpha = np.zeros(n)
    G = -np.ones(n)
    K_diag = np.diag(K).copy()
    gap = np.inf

    for it in range(1, max_iter + 1):
        i, j, gap = _select_working_set(G, y, alpha, C, K_diag, K)
        if i < 0 or j < 0 or gap < tol:
            bias = _compute_bias(G, y, alpha, C)
            logger.debug("SMO converged after %d iterations (gap=%.3e)", it - 1, gap)
            return SmoResult(alpha=alpha, bias=bias, iterations=it - 1, kkt_gap=max(gap, 0.0))
        old_i, old_j = alpha[i], alpha[j]
        new_i, new_j = _update_pair(i, j, alpha, y, G, K, C)
        alpha[i], alpha[j] = new_i, new_j
        # Q_tk = y_t y_k K_tk
        G += y * (K[:, i] * y[i] * (new_i - old_i) + K[:, j] * y[j] * (new_j - old_j))

    raise NumericalError(f"SMO did not converge after {max_iter} iterations", residual=gap)


def train_svm(data, labels, gamma, C, feature_names=(), tol=Config.SMO_TOLERANCE,
              max_iter=None) -> SvmModel:
    """Train a Gaussian SVM and keep the points with α above the support threshold."""
    if not gamma > 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    if not C > 0:
        raise ConfigError(f"C must be positive, got {C}")
    X = np.asarray(data, dtype=float)
    y = _validate_binary(labels)

    K = rbf_kernel(X, gamma=gamma)
    result = smo_solve(K, y, C, tol=tol, max_iter=max_iter)
    keep = result.alpha > Config.SUPPORT_THRESHOLD
    logger.info(
        "Trained SVM (gamma=%g, C=%g): %d/%d support vectors, %d iterations, KKT gap %.2e",
        gamma, C, int(keep.sum()), X.shape[0], result.iterations, result.kkt_gap,
    )
    return SvmModel(
        support_vectors=X[keep],
        dual_coeffs=result.alpha[keep],
        labels=y[keep].astype(int),
        gamma=gamma,
        bias=result.bias,
        feature_names=feature_names,
    )


def train_knn(data, labels, k, feature_names=()) -> KnnModel:
    y = _validate_binary(labels)
    return KnnModel(points=data, labels=y.astype(int), k=k, feature_names=feature_names)


def train_krr(data, targets, gamma, ridge, feature_names=()) -> KrrModel:
    """Solve (K + λI)α = y, by Cholesky when the system is positive definite."""
    if not gamma > 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    if ridge < 0:
        raise ConfigError(f"ridge must be nonnegative, got {ridge}")
    X = np.asarray(data, dtype=float)
    t = np.asarray(targets, dtype=float)
    A = rbf_kernel(X, gamma=gamma) + ridge * np.eye(X.shape[0])

    if ridge == 0 and np.linalg.cond(A) > 1.0 / np.finfo(float).eps:
        raise NumericalError("singular kernel system at ridge=0")
    try:
        alpha = linalg.cho_solve(linalg.cho_factor(A, lower=True), t)
    except linalg.LinAlgError:
        if ridge == 0:
            raise NumericalError("singular kernel system at ridge=0")
        alpha = linalg.solve(A, t, assume_a='sym')

    residual = float(np.max(np.abs(A @ alpha - t))) if t.size else 0.0
    if residual >= 1e-8:
        raise NumericalError("kernel ridge solve is numerically unstable", residual=residual)
    logger.info("Trained KRR (gamma=%g, ridge=%g) on %d points", gamma, ridge, X.shape[0])
    return KrrModel(points=X, coeffs=alpha, gamma=gamma, ridge=ridge,
                    feature_names=feature_names)


# ---------------------------------------------------------------------------
# Model selection
# ---------------------------------------------------------------------------

@dataclass
class GridSearchReport:
    kind: str
    best_params: Dict[str, float]
    best_score: Optional[float]
    scores: List[dict] = field(default_factory=list)
    metric: str = 'accuracy'

    def to_dict(self):
        return {
            'kind': self.kind,
            'metric': self.metric,
            'best_params': self.best_params,
            'best_score': self.best_score,
            'scores': self.scores,
        }


def fit_model(kind, X, y, params, feature_names=()):
    if kind == 'svm':
        return train_svm(X, y, params['gamma'], params['C'], feature_names=feature_names)
    if kind == 'knn':
        return train_knn(X, y, params['k'], feature_names=feature_names)
    if kind == 'krr':
        return train_krr(X, y, params['gamma'], params['ridge'], feature_names=feature_names)
    raise ConfigError(f"unknown model kind: {kind}")


def _param_grid(kind, grid: Dict[str, Sequence]):
    keys = {'svm': ('gamma', 'C'), 'knn': ('k',), 'krr': ('gamma', 'ridge')}[kind]
    for key in keys:
        if not grid.get(key):
            raise ConfigError(f"empty grid for '{key}'")
    for values in itertools.product(*(grid[key] for key in keys)):
        yield dict(zip(keys, values))


def _score(kind, model, X, y):
    pred = decision_batch(model, X)
    if kind == 'krr':
        return -float(mean_squared_error(y, pred))
    return float(accuracy_score(y, np.where(pred >= 0, 1, -1)))


def grid_search(kind, X, y, grid, folds=Config.CV_FOLDS, seed=0, feature_names=()):
    """Pick hyperparameters by k-fold cross-validation and refit on all data.

    Returns:
        (model, GridSearchReport)
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    candidates = list(_param_grid(kind, grid))
    metric = 'neg_mse' if kind == 'krr' else 'accuracy'

    if len(candidates) == 1:
        params = candidates[0]
        model = fit_model(kind, X, y, params, feature_names)
        report = GridSearchReport(kind, params, _score(kind, model, X, y), metric=metric)
        report.scores.append({**params, 'train_score': report.best_score})
        return model, report

    if kind == 'krr':
        splitter = KFold(n_splits=min(folds, len(y)), shuffle=True, random_state=seed)
    else:
        min_class = int(min(np.sum(y > 0), np.sum(y < 0)))
        splitter = StratifiedKFold(
            n_splits=max(2, min(folds, min_class)), shuffle=True, random_state=seed
        )

    best = None
    scores = []
    for params in candidates:
        fold_scores = []
        for train_idx, test_idx in splitter.split(X, y if kind != 'krr' else None):
            try:
                model = fit_model(kind, X[train_idx], y[train_idx], params)
            except ModelInvariantError as e:
                logger.warning("Skipping fold for %s: %s", params, e)
                continue
            fold_scores.append(_score(kind, model, X[test_idx], y[test_idx]))
        if not fold_scores:
            continue
        mean_score = float(np.mean(fold_scores))
        scores.append({**params, 'cv_score': mean_score, 'cv_std': float(np.std(fold_scores))})
        logger.info("CV %s %s: %.4f", kind, params, mean_score)
        # strict '>' keeps the first grid point on ties
        if best is None or mean_score > best[1]:
            best = (params, mean_score)

    if best is None:
        raise ModelInvariantError("no grid point could be trained on the CV folds")
    model = fit_model(kind, X, y, best[0], feature_names)
    report = GridSearchReport(kind, best[0], best[1], scores, metric=metric)
    return model, report
