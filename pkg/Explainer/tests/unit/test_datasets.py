import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from scipy.spatial.distance import pdist

ROOT = Path(__file__).resolve().parents[2]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from datasets import (
    CsvSchema,
    Dataset,
    fit_normalization,
    load_csv,
    load_saved_dataset,
    map_labels,
    median_pairwise_distance,
    preprocess,
    save_dataset,
    split_sizes,
    synthetic_gaussians,
    synthetic_two_moons,
    synthetic_xor,
)
from errors import ConfigError, DataFormatError

pytestmark = pytest.mark.ci_smoke


def write_csv(path, text):
    path.write_text(text)
    return path


def random_dataset(n=1000, d=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(loc=[1.0, -3.0, 10.0, 0.0][:d], scale=[0.5, 2.0, 7.0, 1.0][:d], size=(n, d))
    y = np.where(X[:, 0] + rng.normal(scale=0.2, size=n) > 1.0, 1.0, -1.0)
    return Dataset(features=X, labels=y)


def test_load_toy_csv(tmp_path):
    path = write_csv(tmp_path / 'toy.csv', 'a,b,y\n1,2,0\n3,4,1\n')
    data = load_csv(path, CsvSchema(label_column='y'))
    assert data.features.shape == (2, 2)
    assert data.feature_names == ('a', 'b')
    np.testing.assert_array_equal(data.labels, [-1, 1])


def test_median_threshold_balances_labels(tmp_path):
    df = pd.DataFrame({'a': np.arange(10.0), 'quality': np.arange(10.0)})
    df.to_csv(tmp_path / 'q.csv', index=False)
    data = load_csv(tmp_path / 'q.csv', CsvSchema(label_column='quality', threshold='median'))
    assert (data.labels == 1).sum() == 5
    assert (data.labels == -1).sum() == 5


def test_quantile_and_numeric_thresholds():
    y = np.arange(10.0)
    assert (map_labels(y, 'q0.8') == 1).sum() == 2
    assert (map_labels(y, 6) == 1).sum() == 3
    with pytest.raises(ConfigError):
        map_labels(y, 'q1.5')


def test_missing_cell_names_row_and_column(tmp_path):
    path = write_csv(tmp_path / 'bad.csv', 'a,b,y\n1,2,0\n3,,1\n')
    with pytest.raises(DataFormatError, match=r"row 2, column 'b'"):
        load_csv(path, CsvSchema(label_column='y'))


def test_non_numeric_cell(tmp_path):
    path = write_csv(tmp_path / 'bad.csv', 'a,b,y\n1,2,0\nx,4,1\n')
    with pytest.raises(DataFormatError, match=r"column 'a'"):
        load_csv(path, CsvSchema(label_column='y'))


def test_single_class_and_many_values_rejected(tmp_path):
    with pytest.raises(DataFormatError, match='single class'):
        load_csv(write_csv(tmp_path / 'one.csv', 'a,y\n1,1\n2,1\n'), CsvSchema(label_column='y'))
    with pytest.raises(DataFormatError, match='threshold'):
        load_csv(write_csv(tmp_path / 'three.csv', 'a,y\n1,1\n2,2\n3,3\n'),
                 CsvSchema(label_column='y'))


def test_missing_file_and_unknown_label(tmp_path):
    with pytest.raises(DataFormatError):
        load_csv(tmp_path / 'nope.csv', CsvSchema(label_column='y'))
    with pytest.raises(DataFormatError):
        load_csv(write_csv(tmp_path / 't.csv', 'a,y\n1,0\n2,1\n'), CsvSchema(label_column='z'))


def test_split_sizes():
    assert split_sizes(1000) == (800, 200, 200)
    assert split_sizes(5000) == (4000, 1000, 300)
    with pytest.raises(ConfigError):
        split_sizes(2)


def test_preprocess_protocol():
    prepared = preprocess(random_dataset(), seed=3)
    assert len(prepared.train) == 800
    assert len(prepared.validation) == 200
    assert len(prepared.explain) == 200
    assert np.median(pdist(prepared.train.features)) == pytest.approx(1.0, abs=1e-6)
    assert np.abs(prepared.train.features.mean(axis=0)).max() < 1e-8
    np.testing.assert_array_equal(prepared.explain.sample_ids,
                                  prepared.validation.sample_ids[:200])


def test_preprocess_is_seeded_and_leak_free():
    data = random_dataset(n=300)
    a = preprocess(data, seed=11)
    b = preprocess(data, seed=11)
    np.testing.assert_array_equal(a.train.sample_ids, b.train.sample_ids)
    np.testing.assert_array_equal(a.validation.features, b.validation.features)
    assert not set(a.train.sample_ids) & set(a.validation.sample_ids)
    c = preprocess(data, seed=12)
    assert not np.array_equal(a.train.sample_ids, c.train.sample_ids)


def test_normalization_round_trip_and_idempotence():
    data = random_dataset(n=200)
    prepared = preprocess(data, seed=0)
    norm = prepared.normalization
    raw = data.features[prepared.validation.sample_ids]
    np.testing.assert_allclose(norm.inverse(norm.transform(raw)), raw, rtol=0, atol=1e-10)

    again = fit_normalization(prepared.train.features)
    np.testing.assert_allclose(again.transform(prepared.train.features),
                               prepared.train.features, atol=1e-10)


def test_constant_feature_dropped(caplog):
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.normal(size=50), np.full(50, 4.0), rng.normal(size=50)])
    with caplog.at_level('WARNING'):
        norm = fit_normalization(X, raw_feature_names=('a', 'const', 'c'))
    assert norm.feature_names == ('a', 'c')
    assert 'const' in caplog.text
    assert norm.transform(X).shape == (50, 2)


def test_median_distance_subsamples_large_inputs():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(2500, 2))
    first = median_pairwise_distance(X, seed=4)
    assert first == median_pairwise_distance(X, seed=4)
    assert first == pytest.approx(np.median(pdist(X[:2000])), rel=0.05)


@pytest.mark.parametrize('make', [synthetic_two_moons, synthetic_xor, synthetic_gaussians])
def test_synthetic_generators_are_deterministic(make):
    a, b = make(seed=5, n=64), make(seed=5, n=64)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert set(np.unique(a.labels)) == {-1.0, 1.0}


def test_noiseless_xor_is_the_four_corners():
    data = synthetic_xor(seed=0, n=4, noise=0.0)
    np.testing.assert_array_equal(data.features, [[-1, -1], [-1, 1], [1, -1], [1, 1]])
    np.testing.assert_array_equal(data.labels, [-1, 1, 1, -1])


def test_noiseless_gaussians_are_separable():
    data = synthetic_gaussians(seed=0, n=20, noise=0.0)
    np.testing.assert_array_equal(np.sign(data.features[:, 0]), data.labels)


def test_synthetic_rejects_tiny_n():
    with pytest.raises(ConfigError):
        synthetic_xor(n=3)


def test_save_and_load_prepared_split(tmp_path):
    prepared = preprocess(random_dataset(n=100), seed=0)
    path = save_dataset(prepared.validation, tmp_path / 'validation.csv')
    assert path.with_suffix('.normalization.json').exists()
    loaded = load_saved_dataset(path)
    np.testing.assert_array_equal(loaded.features, prepared.validation.features)
    np.testing.assert_array_equal(loaded.sample_ids, prepared.validation.sample_ids)
    assert loaded.normalization.scale == prepared.normalization.scale
