"""
Dataset Module
CSV ingestion, the split/normalization protocol and synthetic 2-D fixtures.

Normalized space: features standardized with training statistics, then
divided by one scalar so the median pairwise distance between training
points is 1 (γ = 1 then corresponds to the median heuristic).
"""
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist
from sklearn.datasets import make_blobs, make_moons

from config import Config
from errors import ConfigError, DataFormatError

logger = logging.getLogger(__name__)

CONSTANT_STD = 1e-12


@dataclass
class Normalization:
    mean: np.ndarray
    std: np.ndarray
    scale: float
    kept: np.ndarray              # indices of retained raw columns
    raw_feature_names: Tuple[str, ...] = ()

    @property
    def feature_names(self):
        if not self.raw_feature_names:
            return ()
        return tuple(self.raw_feature_names[k] for k in self.kept)

    def transform(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return (X[:, self.kept] - self.mean) / self.std / self.scale

    def inverse(self, Z):
        return np.asarray(Z, dtype=float) * self.scale * self.std + self.mean

    def to_dict(self):
        return {
            'mean': self.mean.tolist(),
            'std': self.std.tolist(),
            'scale': float(self.scale),
            'kept': [int(k) for k in self.kept],
            'raw_feature_names': list(self.raw_feature_names),
        }

    @classmethod
    def from_dict(cls, payload):
        try:
            return cls(
                mean=np.asarray(payload['mean'], dtype=float),
                std=np.asarray(payload['std'], dtype=float),
                scale=float(payload['scale']),
                kept=np.asarray(payload['kept'], dtype=int),
                raw_feature_names=tuple(payload.get('raw_feature_names', ())),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataFormatError(f"invalid normalization record: {e}") from e


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: Tuple[str, ...] = ()
    task: str = 'classification'  # or 'regression'
    normalization: Optional[Normalization] = None
    sample_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=float)
        if self.labels.shape[0] != self.features.shape[0]:
            raise DataFormatError(
                f"{self.features.shape[0]} rows but {self.labels.shape[0]} labels"
            )
        if not self.feature_names:
            self.feature_names = tuple(f"x{k + 1}" for k in range(self.features.shape[1]))
        else:
            self.feature_names = tuple(self.feature_names)
        if self.sample_ids is None:
            self.sample_ids = np.arange(self.features.shape[0])
        else:
            self.sample_ids = np.asarray(self.sample_ids, dtype=int)

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def subset(self, rows):
        rows = np.asarray(rows, dtype=int)
        return replace(
            self,
            features=self.features[rows],
            labels=self.labels[rows],
            sample_ids=self.sample_ids[rows],
        )


@dataclass
class CsvSchema:
    label_column: str
    threshold: Union[None, str, float] = None  # None | 'median' | 'q<fraction>' | number
    regression: bool = False
    feature_columns: Optional[Tuple[str, ...]] = None

    def to_dict(self):
        return {
            'label_column': self.label_column,
            'threshold': self.threshold,
            'regression': self.regression,
            'feature_columns': list(self.feature_columns) if self.feature_columns else None,
        }

    @classmethod
    def from_dict(cls, payload):
        cols = payload.get('feature_columns')
        return cls(
            label_column=payload['label_column'],
            threshold=payload.get('threshold'),
            regression=bool(payload.get('regression', False)),
            feature_columns=tuple(cols) if cols else None,
        )


@dataclass
class PreparedData:
    train: Dataset
    validation: Dataset
    explain: Dataset
    normalization: Normalization


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _threshold_value(y, threshold):
    if isinstance(threshold, str):
        spec = threshold.strip().lower()
        if spec == 'median':
            return float(np.median(y))
        if spec.startswith('q'):
            try:
                fraction = float(spec[1:])
            except ValueError:
                raise ConfigError(f"invalid quantile threshold '{threshold}'")
            if not 0.0 < fraction < 1.0:
                raise ConfigError(f"quantile must lie in (0, 1), got {fraction}")
            return float(np.quantile(y, fraction))
        try:
            return float(spec)
        except ValueError:
            raise ConfigError(f"invalid threshold '{threshold}'")
    return float(threshold)


def map_labels(y, threshold=None) -> np.ndarray:
    """Binary labels in {−1,+1}: thresholded (y > t → +1) or from two distinct values."""
    y = np.asarray(y, dtype=float)
    if threshold is not None:
        labels = np.where(y > _threshold_value(y, threshold), 1.0, -1.0)
    else:
        values = np.unique(y)
        if values.size > 2:
            raise DataFormatError(
                f"label column has {values.size} distinct values; pass a threshold"
            )
        labels = np.where(y == values[-1], 1.0, -1.0)
    if np.unique(labels).size < 2:
        raise DataFormatError("labels contain a single class")
    return labels


def _check_cells(df: pd.DataFrame):
    """Typed error for the first missing or non-numeric cell."""
    missing = df.isna().to_numpy()
    if missing.any():
        row, col = np.argwhere(missing)[0]
        raise DataFormatError(f"missing value at row {row + 1}, column '{df.columns[col]}'")
    numeric = df.apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DataFormatError(
            f"non-numeric value {df.iat[row, col]!r} at row {row + 1}, column '{df.columns[col]}'"
        )
    return numeric.astype(float)


def load_csv(path, schema: CsvSchema) -> Dataset:
    """Parse a rectangular numeric CSV with header. Rows are numbered from 1 after the header."""
    try:
        df = pd.read_csv(path, skipinitialspace=True)
    except FileNotFoundError:
        raise DataFormatError(f"data file not found: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataFormatError(f"cannot parse {path}: {e}") from e

    df.columns = [str(c).strip() for c in df.columns]
    if schema.label_column not in df.columns:
        raise DataFormatError(f"label column '{schema.label_column}' not in {list(df.columns)}")
    columns = list(schema.feature_columns) if schema.feature_columns else [
        c for c in df.columns if c != schema.label_column
    ]
    unknown = [c for c in columns if c not in df.columns]
    if unknown:
        raise DataFormatError(f"unknown feature columns: {unknown}")
    if not columns:
        raise DataFormatError("no feature columns")

    numeric = _check_cells(df[columns + [schema.label_column]])
    y = numeric[schema.label_column].to_numpy()
    if schema.regression:
        labels, task = y, 'regression'
    else:
        labels, task = map_labels(y, schema.threshold), 'classification'
    logger.info("Loaded %s: %d rows, %d features", path, len(df), len(columns))
    return Dataset(
        features=numeric[columns].to_numpy(),
        labels=labels,
        feature_names=tuple(columns),
        task=task,
    )


# ---------------------------------------------------------------------------
# Normalization / splits
# ---------------------------------------------------------------------------

def median_pairwise_distance(X, seed=0, max_points=Config.MEDIAN_SUBSAMPLE) -> float:
    """Exact below `max_points` rows, else on a seeded subsample of that size."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] > max_points:
        rng = np.random.default_rng([int(seed), 1])
        X = X[rng.choice(X.shape[0], size=max_points, replace=False)]
    if X.shape[0] < 2:
        raise DataFormatError("need at least two training points")
    return float(np.median(pdist(X)))


def fit_normalization(X, seed=0, raw_feature_names=()) -> Normalization:
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    kept = np.flatnonzero(std > CONSTANT_STD)
    dropped = np.setdiff1d(np.arange(X.shape[1]), kept)
    if dropped.size:
        names = [raw_feature_names[k] if raw_feature_names else str(k) for k in dropped]
        logger.warning("Dropping constant features: %s", ', '.join(names))
    if kept.size == 0:
        raise DataFormatError("every feature is constant on the training split")
    standardized = (X[:, kept] - mean[kept]) / std[kept]
    scale = median_pairwise_distance(standardized, seed=seed)
    if scale <= 0:
        raise DataFormatError("median pairwise distance is zero (duplicate training points)")
    return Normalization(
        mean=mean[kept], std=std[kept], scale=scale, kept=kept,
        raw_feature_names=tuple(raw_feature_names),
    )


def split_sizes(n, validation_fraction=Config.VALIDATION_FRACTION,
                explain_max=Config.EXPLAIN_SPLIT_MAX):
    n_val = int(round(n * validation_fraction))
    n_explain = min(explain_max, n_val)
    if n_val < 1 or n - n_val < 2:
        raise ConfigError(f"{n} rows are too few for a train/validation split")
    return n - n_val, n_val, n_explain


def preprocess(dataset: Dataset, seed=0, validation_fraction=Config.VALIDATION_FRACTION,
               explain_max=Config.EXPLAIN_SPLIT_MAX) -> PreparedData:
    n = len(dataset)
    n_train, n_val, n_explain = split_sizes(n, validation_fraction, explain_max)
    order = np.random.default_rng(int(seed)).permutation(n)
    train_rows, val_rows = order[:n_train], order[n_train:]

    raw_train = dataset.subset(train_rows)
    norm = fit_normalization(raw_train.features, seed=seed, raw_feature_names=dataset.feature_names)

    def normalized(part: Dataset) -> Dataset:
        return replace(
            part,
            features=norm.transform(part.features),
            feature_names=norm.feature_names,
            normalization=norm,
        )

    train = normalized(raw_train)
    validation = normalized(dataset.subset(val_rows))
    explain = validation.subset(np.arange(n_explain))
    logger.info(
        "Split %d rows: %d train, %d validation, %d explain (scale %.6g)",
        n, n_train, n_val, n_explain, norm.scale,
    )
    return PreparedData(train=train, validation=validation, explain=explain, normalization=norm)


# ---------------------------------------------------------------------------
# Synthetic fixtures
# ---------------------------------------------------------------------------

def _check_n(n):
    if n < 4:
        raise ConfigError(f"synthetic datasets need n >= 4, got {n}")


def synthetic_two_moons(seed=0, n=200, noise=0.1) -> Dataset:
    _check_n(n)
    X, y = make_moons(n_samples=n, noise=noise or None, random_state=seed)
    return Dataset(features=X, labels=np.where(y == 1, 1.0, -1.0), feature_names=('x1', 'x2'))


XOR_CORNERS = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
XOR_LABELS = np.array([-1.0, 1.0, 1.0, -1.0])


def synthetic_xor(seed=0, n=200, noise=0.1) -> Dataset:
    """Corners of the unit square cycled in order, labels +1 where the coordinate signs differ."""
    _check_n(n)
    rng = np.random.default_rng(seed)
    corner = np.arange(n) % 4
    X = XOR_CORNERS[corner] + noise * rng.standard_normal((n, 2))
    return Dataset(features=X, labels=XOR_LABELS[corner], feature_names=('x1', 'x2'))


def synthetic_gaussians(seed=0, n=200, noise=0.5) -> Dataset:
    _check_n(n)
    X, y = make_blobs(
        n_samples=n, centers=[[-2.0, -2.0], [2.0, 2.0]], cluster_std=noise, random_state=seed,
    )
    return Dataset(features=X, labels=np.where(y == 1, 1.0, -1.0), feature_names=('x1', 'x2'))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def dataset_frame(dataset: Dataset, label_column='label') -> pd.DataFrame:
    df = pd.DataFrame(dataset.features, columns=list(dataset.feature_names))
    df.insert(0, 'sample_id', dataset.sample_ids)
    df[label_column] = dataset.labels
    return df


def save_dataset(dataset: Dataset, path, label_column='label') -> Path:
    """CSV plus a `<name>.normalization.json` sidecar when the data is normalized."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_frame(dataset, label_column).to_csv(path, index=False, float_format='%.17g')
    if dataset.normalization is not None:
        sidecar = path.with_suffix('.normalization.json')
        sidecar.write_text(json.dumps(dataset.normalization.to_dict(), indent=2, sort_keys=True))
    return path


def load_saved_dataset(path, label_column='label', task='classification') -> Dataset:
    path = Path(path)
    df = pd.read_csv(path)
    sidecar = path.with_suffix('.normalization.json')
    norm = Normalization.from_dict(json.loads(sidecar.read_text())) if sidecar.exists() else None
    names = [c for c in df.columns if c not in ('sample_id', label_column)]
    return Dataset(
        features=df[names].to_numpy(dtype=float),
        labels=df[label_column].to_numpy(dtype=float),
        feature_names=tuple(names),
        task=task,
        normalization=norm,
        sample_ids=df['sample_id'].to_numpy() if 'sample_id' in df else None,
    )
