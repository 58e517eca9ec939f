"""
Neuralized Model Module
Rewrites Gaussian SVMs and KNN classifiers as three-layer networks: a layer
of linear detection units indexed by opposite-class pairs followed by two
pooling layers (smooth max/min for SVMs, ranked max/min for KNN).

Detection units are stored factorized per training point. For a point u_ℓ
the score a_ℓ(x) = 2xᵀu_ℓ − ‖u_ℓ‖² + γ⁻¹log α_ℓ (the log term is 0 for KNN)
gives every pairwise unit as z_ij = a_i − a_j, so a forward pass costs O(n)
instead of O(|C+|·|C−|).
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from errors import (
    DimensionMismatchError,
    GradientInapplicableError,
    ModelInvariantError,
)
from models import KnnModel, KrrModel, SvmModel, decision, krr_to_svm

logger = logging.getLogger(__name__)

DEAD_ZONE = 1e-9


@dataclass(frozen=True)
class SmoothPooling:
    gamma: float
    kind = 'smooth'


@dataclass(frozen=True)
class RankedPooling:
    q: int
    kind = 'ranked'


Pooling = Union[SmoothPooling, RankedPooling]


@dataclass(frozen=True)
class BiasUnit:
    """SVM offset as an extra pool member.

    `value` is z₀ = −γ⁻¹log|θ|. In the distance frame (a_ℓ − ‖x‖²) the unit
    behaves like a point with the constant score −z₀, so it adds exactly |θ|
    to the kernel sum of its pool.
    """

    value: float
    pool: str  # 'positive' | 'negative'

    def score(self, x_sq_norm):
        return x_sq_norm - self.value


@dataclass(frozen=True, eq=False)
class NeuralizedNet:
    positive_index: np.ndarray
    negative_index: np.ndarray
    directions: np.ndarray
    log_coeffs: np.ndarray
    pooling: Pooling
    bias_unit: Optional[BiasUnit] = None
    feature_names: Tuple[str, ...] = ()
    sq_norms: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pos = np.array(self.positive_index, dtype=int)
        neg = np.array(self.negative_index, dtype=int)
        if pos.size == 0 or neg.size == 0:
            raise ModelInvariantError("both pools must be nonempty")
        if np.intersect1d(pos, neg).size:
            raise ModelInvariantError("positive and negative pools overlap")
        directions = np.array(np.atleast_2d(self.directions), dtype=float)
        log_coeffs = np.array(self.log_coeffs, dtype=float)
        if log_coeffs.shape != (directions.shape[0],):
            raise ModelInvariantError("one log-coefficient per point is required")
        sq = np.einsum('ij,ij->i', directions, directions)
        for arr in (pos, neg, directions, log_coeffs, sq):
            arr.setflags(write=False)
        object.__setattr__(self, 'positive_index', pos)
        object.__setattr__(self, 'negative_index', neg)
        object.__setattr__(self, 'directions', directions)
        object.__setattr__(self, 'log_coeffs', log_coeffs)
        object.__setattr__(self, 'sq_norms', sq)

    @property
    def kind(self):
        return 'neural-svm' if self.pooling.kind == 'smooth' else 'neural-knn'

    @property
    def dim(self):
        return self.directions.shape[1]

    def check_query(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.dim:
            raise DimensionMismatchError(self.dim, x.shape[-1] if x.ndim else 0)
        return x

    def scores(self, x):
        """Per-point factorized scores a_ℓ(x)."""
        return 2.0 * (self.directions @ x) - self.sq_norms + self.log_coeffs

    def pair_parameters(self, i, j):
        """(w_ij, m_ij, b_ij) of the detection unit for points i ∈ C+, j ∈ C−."""
        u_i, u_j = self.directions[i], self.directions[j]
        return 2.0 * (u_i - u_j), 0.5 * (u_i + u_j), float(self.log_coeffs[i] - self.log_coeffs[j])

    def pair_activation(self, x, i, j):
        """Direct evaluation of z_ij = (x − m_ij)ᵀw_ij + b_ij."""
        w, m, b = self.pair_parameters(i, j)
        return float((np.asarray(x, dtype=float) - m) @ w + b)

    def pool_scores(self, x, a=None):
        """Scores of each pool's members, bias unit appended to its pool."""
        a = self.scores(x) if a is None else a
        pos = a[self.positive_index]
        neg = a[self.negative_index]
        if self.bias_unit is not None:
            s0 = self.bias_unit.score(float(x @ x))
            if self.bias_unit.pool == 'positive':
                pos = np.append(pos, s0)
            else:
                neg = np.append(neg, s0)
        return pos, neg


@dataclass
class ForwardTrace:
    scores: np.ndarray
    h: np.ndarray  # pooled values over C− (bias unit last when pooled there)
    g: float
    positive_scores: np.ndarray
    negative_scores: np.ndarray
    selected_positive: Optional[int] = None  # ranked pooling: pool position at rank q
    selected_negative: Optional[int] = None


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def neuralize_svm(model: SvmModel) -> NeuralizedNet:
    positive = np.flatnonzero(model.labels > 0)
    negative = np.flatnonzero(model.labels < 0)
    bias_unit = None
    if model.bias != 0.0:
        value = -np.log(abs(model.bias)) / model.gamma
        bias_unit = BiasUnit(value=float(value), pool='positive' if model.bias > 0 else 'negative')
        logger.debug("Bias unit z0=%.6g joins the %s pool", value, bias_unit.pool)
    return NeuralizedNet(
        positive_index=positive,
        negative_index=negative,
        directions=model.support_vectors,
        log_coeffs=np.log(model.dual_coeffs) / model.gamma,
        pooling=SmoothPooling(model.gamma),
        bias_unit=bias_unit,
        feature_names=model.feature_names,
    )


def neuralize_knn(model: KnnModel) -> NeuralizedNet:
    q = model.q
    positive = np.flatnonzero(model.labels > 0)
    negative = np.flatnonzero(model.labels < 0)
    if positive.size < q or negative.size < q:
        raise ModelInvariantError(f"ranked pooling needs at least q={q} points per class")
    return NeuralizedNet(
        positive_index=positive,
        negative_index=negative,
        directions=model.points,
        log_coeffs=np.zeros(model.n_points),
        pooling=RankedPooling(q),
        feature_names=model.feature_names,
    )


def neuralize(model) -> NeuralizedNet:
    if isinstance(model, SvmModel):
        return neuralize_svm(model)
    if isinstance(model, KnnModel):
        return neuralize_knn(model)
    if isinstance(model, KrrModel):
        return neuralize_svm(krr_to_svm(model))
    raise ModelInvariantError(f"cannot neuralize {type(model).__name__}")


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------

def smooth_max(values, gamma):
    """γ⁻¹ log Σ exp(γ·v), max-shifted."""
    return float(logsumexp(gamma * np.asarray(values))) / gamma


def smooth_min(values, gamma):
    return -smooth_max(-np.asarray(values), gamma)


def rank_order(values, descending=True):
    """Ranking of values; equal values keep ascending position order."""
    values = np.asarray(values)
    key = -values if descending else values
    return np.lexsort((np.arange(values.size), key))


def forward(net: NeuralizedNet, x) -> ForwardTrace:
    x = net.check_query(x)
    a = net.scores(x)
    pos, neg = net.pool_scores(x, a)

    if net.pooling.kind == 'smooth':
        gamma = net.pooling.gamma
        # h_j = smax_i (a_i − a_j) = smax_i a_i − a_j
        s_pos = smooth_max(pos, gamma)
        h = s_pos - neg
        g = smooth_min(h, gamma)
        return ForwardTrace(scores=a, h=h, g=g, positive_scores=pos, negative_scores=neg)

    q = net.pooling.q
    i_rank = rank_order(pos, descending=True)
    i_star = int(i_rank[q - 1])
    h = pos[i_star] - neg
    # ranked-min over h_j: tie order by index, consistent with the KNN vote
    j_rank = rank_order(h, descending=False)
    j_star = int(j_rank[q - 1])
    return ForwardTrace(
        scores=a, h=h, g=float(h[j_star]),
        positive_scores=pos, negative_scores=neg,
        selected_positive=i_star, selected_negative=j_star,
    )


def neural_output(net: NeuralizedNet, x) -> float:
    return forward(net, x).g


def neural_gradient(net: NeuralizedNet, x) -> np.ndarray:
    """∇g for smooth nets: softmax-weighted point directions of each pool."""
    if net.pooling.kind != 'smooth':
        raise GradientInapplicableError("ranked pooling is not differentiable")
    x = net.check_query(x)
    gamma = net.pooling.gamma
    pos, neg = net.pool_scores(x)
    p_pos = np.exp(gamma * pos - logsumexp(gamma * pos))
    p_neg = np.exp(gamma * neg - logsumexp(gamma * neg))

    grad_pos = 2.0 * p_pos[:net.positive_index.size] @ net.directions[net.positive_index]
    grad_neg = 2.0 * p_neg[:net.negative_index.size] @ net.directions[net.negative_index]
    if net.bias_unit is not None:
        # the bias score carries ‖x‖², gradient 2x
        if net.bias_unit.pool == 'positive':
            grad_pos = grad_pos + 2.0 * p_pos[-1] * x
        else:
            grad_neg = grad_neg + 2.0 * p_neg[-1] * x
    return grad_pos - grad_neg


# ---------------------------------------------------------------------------
# Diagnostics and export
# ---------------------------------------------------------------------------

@dataclass
class SignReport:
    n_probes: int
    n_checked: int
    mismatches: int
    mismatch_indices: list

    @property
    def ok(self):
        return self.mismatches == 0


def sign_equivalence_check(model, net: NeuralizedNet, probes) -> SignReport:
    """Count probes where sign(f) ≠ sign(g) outside the |f| ≤ 1e−9 dead zone."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    mismatched = []
    checked = 0
    for idx, x in enumerate(probes):
        f = decision(model, x)
        if abs(f) <= DEAD_ZONE:
            continue
        checked += 1
        g = neural_output(net, x)
        if np.sign(f) != np.sign(g):
            mismatched.append(idx)
    if mismatched:
        logger.warning("Sign mismatch on %d/%d probes", len(mismatched), checked)
    return SignReport(probes.shape[0], checked, len(mismatched), mismatched)


def net_to_dict(net: NeuralizedNet) -> dict:
    payload = {
        'kind': net.kind,
        'positive_pool': net.positive_index.tolist(),
        'negative_pool': net.negative_index.tolist(),
        'directions': net.directions.tolist(),
        'sq_norms': net.sq_norms.tolist(),
        'log_coeffs': net.log_coeffs.tolist(),
        'feature_names': list(net.feature_names),
        'bias_unit': None,
    }
    if net.pooling.kind == 'smooth':
        payload['pooling'] = {'type': 'smooth', 'gamma': net.pooling.gamma}
    else:
        payload['pooling'] = {'type': 'ranked', 'q': net.pooling.q}
    if net.bias_unit is not None:
        payload['bias_unit'] = {'value': net.bias_unit.value, 'pool': net.bias_unit.pool}
    return payload
