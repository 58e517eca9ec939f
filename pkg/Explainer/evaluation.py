"""
Pixel-flipping evaluation.

Features are removed in order of decreasing relevance; removed values are
resampled from a kernel density estimate conditioned on the features that
remain. The flipping curve records whether the classification survives each
step and its mean (AUFC) scores the explanation: lower is better.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.special import softmax
from scipy.stats import iqr

from config import Config
from errors import ConfigError, DataFormatError, IncompatibleMethodError, NumericalError
from model_wrappers.neuralize import rank_order
from models import decision

logger = logging.getLogger(__name__)

# exp() underflows to 0 below this log-weight
LOG_TINY = np.log(np.finfo(float).tiny)
FLIP_STREAM = 2


def silverman_bandwidth(X) -> np.ndarray:
    """Silverman's 1-D rule per feature: 0.9·min(σ, IQR/1.349)·n^(−1/5)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    sigma = X.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    spread = iqr(X, axis=0) / 1.349
    robust = np.where(spread > 0, np.minimum(sigma, spread), sigma)
    bandwidth = 0.9 * robust * n ** -0.2
    # constant columns still need a positive kernel width
    return np.where(bandwidth > 0, bandwidth, 1e-12)


class KdeInpainter:
    """Conditional KDE resampler over a reference (training) matrix."""

    def __init__(self, reference_data, bandwidth=None):
        self.reference_data = np.atleast_2d(np.asarray(reference_data, dtype=float))
        if self.reference_data.shape[0] == 0:
            raise DataFormatError("KDE needs at least one reference point")
        if bandwidth is None:
            bandwidth = silverman_bandwidth(self.reference_data)
        self.bandwidth = np.broadcast_to(
            np.asarray(bandwidth, dtype=float), (self.dim,)
        ).copy()
        if not np.all(self.bandwidth > 0):
            raise ConfigError("KDE bandwidth must be positive")
        self.fallbacks = 0
        self._lock = threading.Lock()

    @property
    def dim(self):
        return self.reference_data.shape[1]

    def weights(self, x, removed_mask) -> np.ndarray:
        kept = ~removed_mask
        if not kept.any():
            return np.full(self.reference_data.shape[0], 1.0 / self.reference_data.shape[0])
        scaled = (x[kept] - self.reference_data[:, kept]) / self.bandwidth[kept]
        log_w = -0.5 * np.einsum('ij,ij->i', scaled, scaled)
        if log_w.max() < LOG_TINY:
            with self._lock:
                self.fallbacks += 1
            logger.warning("KDE weights vanished for every reference point; sampling uniformly")
            return np.full(log_w.shape[0], 1.0 / log_w.shape[0])
        return softmax(log_w)

    def inpaint(self, x, removed, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        removed = np.asarray(removed, dtype=int)
        if removed.size == 0:
            raise ConfigError("inpainting needs at least one removed feature")
        if removed.min() < 0 or removed.max() >= self.dim:
            raise ConfigError(f"removed features out of range for d={self.dim}")
        mask = np.zeros(self.dim, dtype=bool)
        mask[removed] = True
        idx = rng.choice(self.reference_data.shape[0], p=self.weights(x, mask))
        out = x.copy()
        noise = rng.standard_normal(mask.sum())
        out[mask] = self.reference_data[idx, mask] + self.bandwidth[mask] * noise
        return out


@dataclass
class FlippingCurve:
    outcomes: np.ndarray
    aufc: float
    sample_id: int = 0


def flip_rng(seed, sample_id) -> np.random.Generator:
    """Flipping stream per sample; shared by every method evaluated with the same seed."""
    return np.random.default_rng([int(seed), int(sample_id), FLIP_STREAM])


def flip(decider: Callable, relevance, x, inpainter: KdeInpainter,
         rng: np.random.Generator, repeats=1, sample_id=0) -> FlippingCurve:
    relevance = np.asarray(relevance, dtype=float)
    x = np.asarray(x, dtype=float)
    if relevance.shape != x.shape:
        raise ConfigError(f"explanation has {relevance.size} scores for {x.size} features")
    if np.isnan(relevance).any():
        raise NumericalError("explanation contains NaN")
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")

    order = rank_order(relevance, descending=True)
    original = decider(x)
    d = x.shape[0]
    outcomes = np.zeros(d)
    for _ in range(repeats):
        for t in range(1, d + 1):
            perturbed = inpainter.inpaint(x, order[:t], rng)
            outcomes[t - 1] += 1.0 if decider(perturbed) == original else -1.0
    outcomes /= repeats
    return FlippingCurve(outcomes=outcomes, aufc=float(outcomes.mean()), sample_id=int(sample_id))


def sign_decider(model) -> Callable:
    if model.kind == 'krr':
        raise IncompatibleMethodError("pixel-flipping is defined for classifiers only")
    return lambda z: 1 if decision(model, z) >= 0 else -1


@dataclass
class EvaluationSummary:
    method: str
    mean_aufc: float
    std: float
    n: int
    curves: List[FlippingCurve] = field(default_factory=list)

    @property
    def stderr(self):
        return self.std / np.sqrt(self.n) if self.n else float('nan')

    @property
    def aufcs(self):
        return np.array([c.aufc for c in self.curves])

    def mean_curve(self):
        return np.mean([c.outcomes for c in self.curves], axis=0)

    def to_row(self):
        return {'method': self.method, 'mean_aufc': self.mean_aufc, 'std': self.std, 'n': self.n}


def evaluate_method(model, split, explainer, inpainter: KdeInpainter,
                    repeats=Config.FLIP_REPEATS, seed=0, threads=1,
                    method: Optional[str] = None, progress=None) -> EvaluationSummary:
    """Flip every sample of `split` under `explainer`; curves come back in split order."""
    if len(split) == 0:
        raise DataFormatError("explanation split is empty")
    decider = sign_decider(model)
    method = method or getattr(explainer, 'method', 'explainer')
    stage = f'evaluate:{method}'

    def run(row):
        sample_id = int(split.sample_ids[row])
        x = split.features[row]
        relevance = explainer(x, sample_id)
        curve = flip(decider, relevance, x, inpainter, flip_rng(seed, sample_id),
                     repeats=repeats, sample_id=sample_id)
        if progress is not None:
            progress.advance(stage)
        return curve

    if progress is not None:
        progress.start_stage(stage, len(split))
    if threads <= 1:
        curves = [run(r) for r in range(len(split))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curves = list(pool.map(run, range(len(split))))
    if progress is not None:
        progress.complete_stage(stage)

    aufcs = np.array([c.aufc for c in curves])
    std = float(aufcs.std(ddof=1)) if aufcs.size > 1 else 0.0
    summary = EvaluationSummary(method=method, mean_aufc=float(aufcs.mean()), std=std,
                                n=aufcs.size, curves=curves)
    logger.info("%s: mean AUFC %.4f (std %.4f, n=%d)", method, summary.mean_aufc, std, summary.n)
    return summary
