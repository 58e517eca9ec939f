"""
Result files: explanation CSV + JSON sidecars, flipping curves, AUFC
summaries and relevance tables. CSV content depends only on the inputs;
wall-clock timestamps go to the `metadata` block of JSON sidecars.
"""
import json
import logging
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from logging_utils import current_run_id

logger = logging.getLogger(__name__)


def _ensure_parent(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def metadata():
    return {
        'created': datetime.now(timezone.utc).isoformat(timespec='seconds'),
        'run_id': current_run_id(),
    }


def write_json(path, payload):
    path = _ensure_parent(path)
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return path


def write_explanation(out_dir, sample_id, feature_names, relevance, input_values,
                      sidecar: dict):
    """`sample_<id>.csv` (feature,relevance,input_value) plus `sample_<id>.json`."""
    out_dir = Path(out_dir)
    csv_path = _ensure_parent(out_dir / f'sample_{sample_id}.csv')
    pd.DataFrame({
        'feature': list(feature_names),
        'relevance': np.asarray(relevance, dtype=float),
        'input_value': np.asarray(input_values, dtype=float),
    }).to_csv(csv_path, index=False)
    write_json(out_dir / f'sample_{sample_id}.json', {
        'sample_id': int(sample_id),
        **sidecar,
        'metadata': metadata(),
    })
    return csv_path


def relevance_table(sample_ids, feature_names, inputs, relevance) -> pd.DataFrame:
    """Long format: one row per (sample, feature)."""
    inputs = np.atleast_2d(inputs)
    relevance = np.atleast_2d(relevance)
    d = len(feature_names)
    return pd.DataFrame({
        'sample_id': np.repeat(np.asarray(sample_ids, dtype=int), d),
        'feature': np.tile(np.asarray(feature_names, dtype=object), len(sample_ids)),
        'input_value': inputs.reshape(-1),
        'relevance': relevance.reshape(-1),
    })


def write_relevance_table(path, table: pd.DataFrame):
    path = _ensure_parent(path)
    table.to_csv(path, index=False)
    return path


def write_curves(path, summary):
    rows = [
        (curve.sample_id, step + 1, float(value))
        for curve in summary.curves
        for step, value in enumerate(curve.outcomes)
    ]
    path = _ensure_parent(path)
    pd.DataFrame(rows, columns=['sample_id', 'step', 'outcome']).to_csv(path, index=False)
    return path


def write_summary(path, summaries):
    path = _ensure_parent(path)
    pd.DataFrame(
        [s.to_row() for s in summaries], columns=['method', 'mean_aufc', 'std', 'n'],
    ).to_csv(path, index=False)
    logger.info("Wrote AUFC summary for %d methods to %s", len(summaries), path)
    return path
