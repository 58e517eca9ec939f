"""
Layer-wise relevance propagation for neuralized SVM/KNN models.

The output g(x) is redistributed to the detection units by the pooling
probabilities p_i·p_j, then to the input features with a reference point on
the segment [0, m_ij] controlled by η. Because every pairwise quantity is a
difference of per-point terms, the double sum over pairs collapses into two
sums over the pools, so an explanation costs O(n·d).
"""
import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.special import softmax

from errors import ConfigError, NumericalError
from model_wrappers.neuralize import (
    ForwardTrace,
    NeuralizedNet,
    forward,
    rank_order,
)
from models import KnnModel, KrrModel, SvmModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LrpHyperparams:
    eta: float
    beta: Optional[float] = None  # smooth pooling stiffness
    kappa: Optional[int] = None   # ranked pooling band half-width

    def validate(self, pooling_kind):
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if pooling_kind == 'smooth':
            if self.beta is None or not self.beta > 0:
                raise ConfigError(f"beta must be positive for SVM nets, got {self.beta}")
        else:
            if self.kappa is None or int(self.kappa) != self.kappa or self.kappa < 0:
                raise ConfigError(
                    f"kappa must be a nonnegative integer for KNN nets, got {self.kappa}"
                )
        return self

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class PoolingProbabilities:
    p_pos: np.ndarray  # over C+ (bias unit last when pooled there)
    p_neg: np.ndarray  # over C−, likewise


@dataclass
class Explanation:
    relevance: np.ndarray
    g_value: float
    probabilities: Optional[PoolingProbabilities]
    hyperparams: dict
    method: str = 'lrp'


def heuristic_params(model) -> LrpHyperparams:
    """Default hyperparameters from the model's scale parameters (γ or k)."""
    if isinstance(model, (SvmModel, KrrModel)):
        gamma = model.gamma
        eta = float(np.median([0.0, 0.4 * np.log10(gamma) + 0.4, 1.0]))
        return LrpHyperparams(eta=eta, beta=gamma)
    if isinstance(model, KnnModel):
        return LrpHyperparams(eta=0.8, kappa=(model.k - 1) // 2)
    raise ConfigError(f"no heuristic for {type(model).__name__}")


# ---------------------------------------------------------------------------
# Pooling layers
# ---------------------------------------------------------------------------

def pooling_probabilities_svm(net: NeuralizedNet, trace: ForwardTrace,
                              beta) -> PoolingProbabilities:
    """Softargmax over C+ and softargmin over C−.

    p_i depends on j only through a shared shift, so it is computed once from
    the per-point scores.
    """
    p_pos = softmax(beta * trace.positive_scores)
    p_neg = softmax(-beta * trace.h)
    return PoolingProbabilities(p_pos=p_pos, p_neg=p_neg)


def _band(values, q, kappa, descending):
    """Uniform weights over ranks [q−κ, q+κ]; ties at the boundary all join."""
    n = values.size
    order = rank_order(values, descending=descending)
    lo = max(1, q - kappa)
    hi = min(n, q + kappa)
    first, last = values[order[lo - 1]], values[order[hi - 1]]
    if descending:
        members = (values <= first) & (values >= last)
    else:
        members = (values >= first) & (values <= last)
    weights = members.astype(float)
    return weights / weights.sum()


def pooling_probabilities_knn(net: NeuralizedNet, trace: ForwardTrace,
                              kappa) -> PoolingProbabilities:
    q = net.pooling.q
    # C− band ranked on h_j ascending; C+ band ranked on z_{i,j*} descending.
    # z_{i,j*} = a_i − a_{j*} orders like a_i.
    z_star = trace.positive_scores - trace.negative_scores[trace.selected_negative]
    p_pos = _band(z_star, q, int(kappa), descending=True)
    p_neg = _band(trace.h, q, int(kappa), descending=False)
    return PoolingProbabilities(p_pos=p_pos, p_neg=p_neg)


def pooling_probabilities(net: NeuralizedNet, trace: ForwardTrace, params: LrpHyperparams):
    if net.pooling.kind == 'smooth':
        return pooling_probabilities_svm(net, trace, params.beta)
    return pooling_probabilities_knn(net, trace, params.kappa)


# ---------------------------------------------------------------------------
# Detection layer
# ---------------------------------------------------------------------------

def _pool_moments(net: NeuralizedNet, probs: PoolingProbabilities):
    """Probability mass, mean direction and mean squared direction per pool.

    The bias unit has no weight vector, so only real points enter.
    """
    n_pos, n_neg = net.positive_index.size, net.negative_index.size
    p_pos = probs.p_pos[:n_pos]
    p_neg = probs.p_neg[:n_neg]
    U_pos = net.directions[net.positive_index]
    U_neg = net.directions[net.negative_index]
    return (
        p_pos.sum(), p_pos @ U_pos, p_pos @ (U_pos * U_pos),
        p_neg.sum(), p_neg @ U_neg, p_neg @ (U_neg * U_neg),
    )


def explain_edge_cases(net: NeuralizedNet, x, probs: PoolingProbabilities):
    """(ℰ₀, ℰ₁): reference point at the origin and at the pair midpoint."""
    mass_pos, mean_pos, sq_pos, mass_neg, mean_neg, sq_neg = _pool_moments(net, probs)
    # Σ_ij p_i p_j w_ij = 2(M− ū+ − M+ ū−)
    e0 = 2.0 * x * (mass_neg * mean_pos - mass_pos * mean_neg)
    # Σ_ij p_i p_j m_ij ⊙ w_ij = M− s+ − M+ s−
    e1 = e0 - (mass_neg * sq_pos - mass_pos * sq_neg)
    return e0, e1


def explain_fast_path(net: NeuralizedNet, x, probs: PoolingProbabilities, eta) -> np.ndarray:
    x = net.check_query(x)
    e0, e1 = explain_edge_cases(net, x, probs)
    return (1.0 - eta) * e0 + eta * e1


def explain_pairwise(net: NeuralizedNet, x, probs: PoolingProbabilities, eta) -> np.ndarray:
    """Direct double sum over all (i, j) pairs; O(|C+|·|C−|·d)."""
    x = net.check_query(x)
    n_pos, n_neg = net.positive_index.size, net.negative_index.size
    U_neg = net.directions[net.negative_index]
    p_neg = probs.p_neg[:n_neg]
    relevance = np.zeros(net.dim)
    for row, i in enumerate(net.positive_index):
        u_i = net.directions[i]
        w = 2.0 * (u_i - U_neg)
        m = 0.5 * (u_i + U_neg)
        relevance += probs.p_pos[row] * (p_neg[:, None] * (x - eta * m) * w).sum(axis=0)
    return relevance


def explain(net: NeuralizedNet, x, params: LrpHyperparams) -> Explanation:
    params.validate(net.pooling.kind)
    x = net.check_query(x)
    trace = forward(net, x)
    probs = pooling_probabilities(net, trace, params)
    relevance = explain_fast_path(net, x, probs, params.eta)
    if not np.all(np.isfinite(relevance)):
        raise NumericalError("non-finite relevance produced")
    return Explanation(
        relevance=relevance,
        g_value=trace.g,
        probabilities=probs,
        hyperparams=params.to_dict(),
    )


class LrpExplainer:
    """Callable explainer bound to one neuralized net and hyperparameter set."""

    method = 'lrp'

    def __init__(self, net: NeuralizedNet, params: LrpHyperparams):
        self.net = net
        self.params = params.validate(net.pooling.kind)

    def __call__(self, x):
        return explain(self.net, x, self.params).relevance
