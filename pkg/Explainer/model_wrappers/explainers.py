"""Explainer registry: builds per-method callables and runs them over batches."""
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import partial

import numpy as np

from config import Config
from errors import ConfigError, GradientInapplicableError, IncompatibleMethodError
from model_wrappers import baseline_explainers as bx
from model_wrappers.lrp_explainer import LrpExplainer, LrpHyperparams, heuristic_params
from model_wrappers.neuralize import neural_gradient, neuralize
from models import decision, gradient

logger = logging.getLogger(__name__)

METHODS = tuple(Config.METHODS)


def model_family(model):
    """'svm' for SVM and KRR (explained through its SVM form), 'knn' otherwise."""
    return 'knn' if model.kind == 'knn' else 'svm'


def check_method(method, model):
    spec = Config.METHODS.get(method)
    if spec is None:
        raise ConfigError(f"unknown method '{method}' (choose from {', '.join(METHODS)})")
    family = model_family(model)
    if family not in spec['model_kinds']:
        if spec['requires_gradient']:
            raise GradientInapplicableError(f"method '{method}' on a {model.kind} model")
        raise IncompatibleMethodError(f"method '{method}' does not apply to {model.kind} models")
    return spec


class Explainer:
    """Uniform callable `explainer(x, sample_index) -> relevance`."""

    def __init__(self, method, fn, hyperparams=None):
        self.method = method
        self._fn = fn
        self.hyperparams = hyperparams or {}

    def __call__(self, x, sample_index=0):
        return np.asarray(self._fn(np.asarray(x, dtype=float), sample_index), dtype=float)


def build_explainer(method, model, baseline_config: bx.BaselineConfig,
                    lrp_params: LrpHyperparams = None, net=None) -> Explainer:
    check_method(method, model)
    f = partial(decision, model)

    if method == 'lrp':
        net = net or neuralize(model)
        params = lrp_params or heuristic_params(model)
        lrp = LrpExplainer(net, params)
        return Explainer(method, lambda x, i: lrp(x), params.to_dict())
    if method == 'gi-neural':
        net = net or neuralize(model)
        return Explainer(method, lambda x, i: bx.gradient_x_input(partial(neural_gradient, net), x))

    f_grad = partial(gradient, model)
    if method == 'gi':
        return Explainer(method, lambda x, i: bx.gradient_x_input(f_grad, x))
    if method == 'ig':
        return Explainer(
            method,
            lambda x, i: bx.integrated_gradients(f_grad, x, baseline_config),
            {'ig_steps': baseline_config.ig_steps},
        )
    if method == 'sensitivity':
        return Explainer(method, lambda x, i: bx.sensitivity(f_grad, x))
    if method == 'occlusion':
        return Explainer(method, lambda x, i: bx.occlusion(f, x, baseline_config))
    if method == 'shap':
        return Explainer(
            method,
            lambda x, i: bx.shapley_sampling(f, x, baseline_config, sample_index=i),
            {'shap_permutations': baseline_config.shap_permutations,
             'seed': baseline_config.rng_seed},
        )
    # random
    return Explainer(
        method,
        lambda x, i: bx.random_scores(x, baseline_config.rng_seed, i),
        {'seed': baseline_config.rng_seed},
    )


def explain_batch(explainer, X, threads=1, sample_ids=None, progress=None) -> np.ndarray:
    """Relevance for every row of X, ordered by row regardless of thread count."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ids = list(range(X.shape[0])) if sample_ids is None else list(sample_ids)

    def run(row):
        out = explainer(X[row], ids[row])
        if progress is not None:
            progress.advance('explain')
        return out

    if progress is not None:
        progress.start_stage('explain', X.shape[0])
    if threads <= 1:
        results = [run(r) for r in range(X.shape[0])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(X.shape[0])))
    if progress is not None:
        progress.complete_stage('explain')
    return np.vstack(results) if results else np.empty((0, X.shape[1]))
