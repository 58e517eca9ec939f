"""
Distance-Based Model Module
Gaussian-kernel SVM, KNN and kernel ridge regression: inference, analytic
gradients, KRR-to-SVM conversion and JSON (de)serialization.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from errors import (
    DataFormatError,
    DimensionMismatchError,
    GradientInapplicableError,
    ModelInvariantError,
)

logger = logging.getLogger(__name__)


def _frozen(array, dtype=float):
    arr = np.array(array, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def squared_distances(points, sq_norms, x):
    """‖x − u‖² for every row u of `points`, expanded form clamped at 0."""
    d2 = float(x @ x) - 2.0 * (points @ x) + sq_norms
    return np.maximum(d2, 0.0)


def _check_query(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dim:
        raise DimensionMismatchError(dim, x.shape[-1] if x.ndim else 0)
    return x


def _check_labels(labels):
    values = set(np.unique(labels).tolist())
    if not values <= {-1, 1}:
        raise ModelInvariantError(f"labels must be in {{-1, +1}}, got {sorted(values)}")


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Gaussian-kernel SVM f(x) = Σ y_ℓ α_ℓ exp(−γ‖x − u_ℓ‖²) + θ."""

    support_vectors: np.ndarray
    dual_coeffs: np.ndarray
    labels: np.ndarray
    gamma: float
    bias: float = 0.0
    feature_names: Tuple[str, ...] = ()
    sq_norms: np.ndarray = field(init=False, repr=False, compare=False)

    kind = 'svm'

    def __post_init__(self):
        sv = _frozen(np.atleast_2d(self.support_vectors))
        alpha = _frozen(self.dual_coeffs)
        labels = _frozen(self.labels, dtype=int)
        if sv.shape[0] != alpha.shape[0] or sv.shape[0] != labels.shape[0]:
            raise ModelInvariantError("support vectors, coefficients and labels differ in length")
        if not self.gamma > 0:
            raise ModelInvariantError(f"gamma must be positive, got {self.gamma}")
        if np.any(alpha <= 0):
            raise ModelInvariantError("dual coefficients must be strictly positive")
        _check_labels(labels)
        if not (np.any(labels > 0) and np.any(labels < 0)):
            raise ModelInvariantError("SVM needs at least one support vector of each class")
        object.__setattr__(self, 'support_vectors', sv)
        object.__setattr__(self, 'dual_coeffs', alpha)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'gamma', float(self.gamma))
        object.__setattr__(self, 'bias', float(self.bias))
        object.__setattr__(self, 'feature_names', tuple(self.feature_names))
        object.__setattr__(self, 'sq_norms', _frozen(np.einsum('ij,ij->i', sv, sv)))

    @property
    def dim(self):
        return self.support_vectors.shape[1]

    @property
    def n_points(self):
        return self.support_vectors.shape[0]


@dataclass(frozen=True, eq=False)
class KnnModel:
    """Majority vote over the k nearest training points."""

    points: np.ndarray
    labels: np.ndarray
    k: int
    feature_names: Tuple[str, ...] = ()
    sq_norms: np.ndarray = field(init=False, repr=False, compare=False)

    kind = 'knn'

    def __post_init__(self):
        points = _frozen(np.atleast_2d(self.points))
        labels = _frozen(self.labels, dtype=int)
        if points.shape[0] != labels.shape[0]:
            raise ModelInvariantError("points and labels differ in length")
        _check_labels(labels)
        k = int(self.k)
        if k < 1 or k % 2 == 0:
            raise ModelInvariantError(f"k must be a positive odd integer, got {self.k}")
        if k > points.shape[0]:
            raise ModelInvariantError(f"k={k} exceeds the number of training points")
        q = (k + 1) // 2
        n_pos = int(np.sum(labels > 0))
        n_neg = int(np.sum(labels < 0))
        if n_pos < q or n_neg < q:
            raise ModelInvariantError(
                f"need at least q={q} points of each class, got {n_pos} positive / {n_neg} negative"
            )
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'k', k)
        object.__setattr__(self, 'feature_names', tuple(self.feature_names))
        object.__setattr__(self, 'sq_norms', _frozen(np.einsum('ij,ij->i', points, points)))

    @property
    def q(self):
        return (self.k + 1) // 2

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def n_points(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class KrrModel:
    """Kernel ridge regressor f(x) = Σ α_ℓ exp(−γ‖x − x_ℓ‖²)."""

    points: np.ndarray
    coeffs: np.ndarray
    gamma: float
    ridge: float = 0.0
    feature_names: Tuple[str, ...] = ()
    sq_norms: np.ndarray = field(init=False, repr=False, compare=False)

    kind = 'krr'

    def __post_init__(self):
        points = _frozen(np.atleast_2d(self.points))
        coeffs = _frozen(self.coeffs)
        if points.shape[0] != coeffs.shape[0]:
            raise ModelInvariantError("points and coefficients differ in length")
        if not self.gamma > 0:
            raise ModelInvariantError(f"gamma must be positive, got {self.gamma}")
        if self.ridge < 0:
            raise ModelInvariantError(f"ridge must be nonnegative, got {self.ridge}")
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'coeffs', coeffs)
        object.__setattr__(self, 'gamma', float(self.gamma))
        object.__setattr__(self, 'ridge', float(self.ridge))
        object.__setattr__(self, 'feature_names', tuple(self.feature_names))
        object.__setattr__(self, 'sq_norms', _frozen(np.einsum('ij,ij->i', points, points)))

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def n_points(self):
        return self.points.shape[0]


Model = Union[SvmModel, KnnModel, KrrModel]


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def svm_decision(model: SvmModel, x) -> float:
    x = _check_query(x, model.dim)
    d2 = squared_distances(model.support_vectors, model.sq_norms, x)
    weights = model.labels * model.dual_coeffs
    return float(weights @ np.exp(-model.gamma * d2) + model.bias)


def svm_gradient(model: SvmModel, x) -> np.ndarray:
    """Analytic ∇f(x) of the SVM decision function."""
    x = _check_query(x, model.dim)
    d2 = squared_distances(model.support_vectors, model.sq_norms, x)
    coef = model.labels * model.dual_coeffs * np.exp(-model.gamma * d2)
    # Σ c_ℓ (−2γ)(x − u_ℓ)
    return -2.0 * model.gamma * (coef.sum() * x - coef @ model.support_vectors)


def knn_neighbors(model: KnnModel, x) -> np.ndarray:
    """Indices of the k nearest points; distance ties go to the lower index."""
    x = _check_query(x, model.dim)
    d2 = squared_distances(model.points, model.sq_norms, x)
    order = np.argsort(d2, kind='stable')
    return order[:model.k]


def knn_decision(model: KnnModel, x) -> int:
    neighbors = knn_neighbors(model, x)
    return int(model.labels[neighbors].sum())


def krr_decision(model: KrrModel, x) -> float:
    x = _check_query(x, model.dim)
    d2 = squared_distances(model.points, model.sq_norms, x)
    return float(model.coeffs @ np.exp(-model.gamma * d2))


def krr_gradient(model: KrrModel, x) -> np.ndarray:
    x = _check_query(x, model.dim)
    d2 = squared_distances(model.points, model.sq_norms, x)
    coef = model.coeffs * np.exp(-model.gamma * d2)
    return -2.0 * model.gamma * (coef.sum() * x - coef @ model.points)


def krr_to_svm(model: KrrModel) -> SvmModel:
    """Rewrite signed KRR coefficients as (|α|, sign α) SVM duals with θ = 0."""
    nonzero = model.coeffs != 0.0
    dropped = int(np.sum(~nonzero))
    if dropped:
        logger.warning("Dropping %d zero-coefficient points from KRR model", dropped)
    coeffs = model.coeffs[nonzero]
    if not (np.any(coeffs > 0) and np.any(coeffs < 0)):
        raise ModelInvariantError(
            "all KRR coefficients share one sign: no opposite-class pool exists"
        )
    return SvmModel(
        support_vectors=model.points[nonzero],
        dual_coeffs=np.abs(coeffs),
        labels=np.sign(coeffs).astype(int),
        gamma=model.gamma,
        bias=0.0,
        feature_names=model.feature_names,
    )


_DECISIONS = {
    'svm': svm_decision,
    'knn': knn_decision,
    'krr': krr_decision,
}

_GRADIENTS = {
    'svm': svm_gradient,
    'krr': krr_gradient,
}


def decision(model: Model, x) -> float:
    """Decision value f(x) for any supported model kind."""
    return _DECISIONS[model.kind](model, x)


def decision_batch(model: Model, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise DimensionMismatchError(model.dim, X.shape[1])
    fn = _DECISIONS[model.kind]
    return np.array([fn(model, row) for row in X], dtype=float)


def gradient(model: Model, x) -> np.ndarray:
    if model.kind not in _GRADIENTS:
        raise GradientInapplicableError(f"{model.kind} model is not differentiable")
    return _GRADIENTS[model.kind](model, x)


def predict_sign(model: Model, X) -> np.ndarray:
    """Class decisions in {−1, +1}; f = 0 counts as +1."""
    values = decision_batch(model, X)
    return np.where(values >= 0, 1, -1)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def model_to_dict(model: Model) -> dict:
    if model.kind == 'svm':
        return {
            'kind': 'svm',
            'gamma': model.gamma,
            'bias': model.bias,
            'points': model.support_vectors.tolist(),
            'coeffs': model.dual_coeffs.tolist(),
            'labels': model.labels.tolist(),
            'feature_names': list(model.feature_names),
        }
    if model.kind == 'knn':
        return {
            'kind': 'knn',
            'k': model.k,
            'bias': 0.0,
            'points': model.points.tolist(),
            'coeffs': None,
            'labels': model.labels.tolist(),
            'feature_names': list(model.feature_names),
        }
    return {
        'kind': 'krr',
        'gamma': model.gamma,
        'ridge': model.ridge,
        'bias': 0.0,
        'points': model.points.tolist(),
        'coeffs': model.coeffs.tolist(),
        'labels': None,
        'feature_names': list(model.feature_names),
    }


def model_from_dict(payload: dict) -> Model:
    kind = payload.get('kind')
    try:
        names = tuple(payload.get('feature_names') or ())
        if kind == 'svm':
            return SvmModel(
                support_vectors=payload['points'],
                dual_coeffs=payload['coeffs'],
                labels=payload['labels'],
                gamma=payload['gamma'],
                bias=payload.get('bias', 0.0),
                feature_names=names,
            )
        if kind == 'knn':
            return KnnModel(
                points=payload['points'],
                labels=payload['labels'],
                k=payload['k'],
                feature_names=names,
            )
        if kind == 'krr':
            return KrrModel(
                points=payload['points'],
                coeffs=payload['coeffs'],
                gamma=payload['gamma'],
                ridge=payload.get('ridge', 0.0),
                feature_names=names,
            )
    except KeyError as e:
        raise DataFormatError(f"model document missing field {e}") from e
    raise DataFormatError(f"unknown model kind: {kind!r}")


def dumps_model(model: Model) -> str:
    # json writes floats with repr(), the shortest round-trip decimal
    return json.dumps(model_to_dict(model), sort_keys=True)


def save_model(model: Model, path, extra: Optional[dict] = None):
    payload = model_to_dict(model)
    if extra:
        payload['training'] = extra
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
    logger.info("Saved %s model with %d points to %s", model.kind, model.n_points, path)


def load_model(path) -> Model:
    return load_model_document(path)[0]


def model_hash(model: Model) -> str:
    return hashlib.sha256(dumps_model(model).encode('utf-8')).hexdigest()


def load_model_document(path):
    """(model, training block) from a saved model file; the block is {} when absent."""
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise DataFormatError(f"model file not found: {path}")
    except json.JSONDecodeError as e:
        raise DataFormatError(f"model file {path} is not valid JSON: {e}") from e
    return model_from_dict(payload), payload.get('training') or {}
