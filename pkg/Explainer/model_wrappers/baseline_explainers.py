"""
Model-agnostic baseline explainers: gradient x input, integrated gradients,
squared gradient (sensitivity), occlusion and Shapley value sampling.

Gradient methods take a gradient callable `f_grad(x) -> ∇f(x)`; removal
methods take the decision callable `f(x) -> float`.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from config import Config
from errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaselineConfig:
    occlusion_fill: np.ndarray
    ig_steps: int = Config.IG_STEPS
    shap_permutations: int = Config.SHAP_PERMUTATIONS
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.ig_steps) < 1:
            raise ConfigError(f"ig_steps must be >= 1, got {self.ig_steps}")
        if int(self.shap_permutations) < 1:
            raise ConfigError(f"shap_permutations must be >= 1, got {self.shap_permutations}")
        fill = np.array(self.occlusion_fill, dtype=float)
        fill.setflags(write=False)
        object.__setattr__(self, 'occlusion_fill', fill)


def sample_rng(seed, sample_index=0):
    """Generator derived from (seed, sample index); independent of scheduling."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(sample_index)])


def gradient_x_input(f_grad: Callable, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x * f_grad(x)


def integrated_gradients(f_grad: Callable, x, config: BaselineConfig) -> np.ndarray:
    """Straight-line path from the origin, midpoint Riemann sum."""
    x = np.asarray(x, dtype=float)
    steps = int(config.ig_steps)
    alphas = (np.arange(1, steps + 1) - 0.5) / steps
    grads = np.array([f_grad(s * x) for s in alphas])
    return x * grads.mean(axis=0)


def sensitivity(f_grad: Callable, x) -> np.ndarray:
    grad = f_grad(np.asarray(x, dtype=float))
    return grad * grad


def occlusion(f: Callable, x, config: BaselineConfig) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    base = f(x)
    relevance = np.empty(x.shape[0])
    for k in range(x.shape[0]):
        occluded = x.copy()
        occluded[k] = config.occlusion_fill[k]
        relevance[k] = base - f(occluded)
    return relevance


def _permutations(d, count, rng):
    if math.factorial(d) <= count:
        return [np.array(p) for p in itertools.permutations(range(d))]
    return [rng.permutation(d) for _ in range(count)]


def shapley_sampling(f: Callable, x, config: BaselineConfig, sample_index=0) -> np.ndarray:
    """Mean marginal contribution over sampled feature-removal sequences.

    Contributions of each sequence telescope to f(x) − f(fill).
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    rng = sample_rng(config.rng_seed, sample_index)
    perms = _permutations(d, int(config.shap_permutations), rng)
    total = np.zeros(d)
    for perm in perms:
        current = x.copy()
        previous = f(current)
        for k in perm:
            current[k] = config.occlusion_fill[k]
            value = f(current)
            total[k] += previous - value
            previous = value
    return total / len(perms)


def random_scores(x, seed, sample_index=0) -> np.ndarray:
    """Random relevance, the sanity floor every real explainer must beat."""
    rng = sample_rng(seed, sample_index)
    return rng.standard_normal(np.asarray(x).shape[0])


def feature_means(X) -> np.ndarray:
    return np.asarray(X, dtype=float).mean(axis=0)


def make_config(train_X, ig_steps=None, shap_permutations=None, seed=0,
                fill: Optional[np.ndarray] = None) -> BaselineConfig:
    return BaselineConfig(
        occlusion_fill=feature_means(train_X) if fill is None else fill,
        ig_steps=ig_steps or Config.IG_STEPS,
        shap_permutations=shap_permutations or Config.SHAP_PERMUTATIONS,
        rng_seed=seed,
    )
