import numpy as np
import pytest

from gpc_discovery.core.datasets import Dataset, Standardizer
from gpc_discovery.exceptions import DatasetLoadingError, ShapeMismatchError


def test_one_dimensional_features_are_promoted():
    dataset = Dataset(np.array([0.1, 0.2, 0.3]), np.array([0, 1, 1]))
    assert dataset.X.shape == (3, 1)
    assert dataset.n == len(dataset) == 3
    assert dataset.d == 1


@pytest.mark.parametrize(
    ("X", "y", "names", "error"),
    [
        (np.zeros((3, 2)), np.zeros(2), None, ShapeMismatchError),
        (np.zeros((2, 2)), np.array([0, 2]), None, DatasetLoadingError),
        (np.array([[0.0, np.nan], [1.0, 2.0]]), np.zeros(2), None, DatasetLoadingError),
        (np.zeros((2, 2)), np.zeros(2), ["a"], ShapeMismatchError),
    ],
)
def test_invalid_datasets(X, y, names, error):
    with pytest.raises(error):
        Dataset(X, y, names)


def test_batches_cover_the_rows_in_order(small_dataset):
    batches = list(small_dataset.batches(5))
    assert [b.n for b in batches] == [5, 5, 2]
    merged = batches[0].append(batches[1]).append(batches[2])
    np.testing.assert_array_equal(merged.X, small_dataset.X)
    np.testing.assert_array_equal(merged.y, small_dataset.y)
    assert merged.feature_names == ["x1", "x2"]


def test_empty_dataset(small_dataset):
    empty = Dataset.empty(2)
    assert empty.n == 0
    assert list(empty.batches(3)) == []
    assert empty.append(small_dataset).n == small_dataset.n
    with pytest.raises(ShapeMismatchError):
        Dataset.empty(3).append(small_dataset)


def test_standardizer_uses_training_statistics():
    train = Dataset(np.array([[0.0, 5.0], [2.0, 5.0]]), np.array([0, 1]))
    test = Dataset(np.array([[4.0, 6.0]]), np.array([1]))
    standardizer = Standardizer().fit(train)
    np.testing.assert_allclose(standardizer.transform(train).X, [[-1, 0], [1, 0]])
    np.testing.assert_allclose(standardizer.transform(test).X, [[3, 1]])
    np.testing.assert_allclose(standardizer.scale, [1.0, 1.0])


def test_standardized_columns_have_zero_mean_and_unit_variance(small_dataset):
    standardized = Standardizer().fit_transform(small_dataset)
    np.testing.assert_allclose(standardized.X.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(standardized.X.std(axis=0), 1.0)
    np.testing.assert_array_equal(standardized.y, small_dataset.y)


def test_standardizer_errors(small_dataset):
    with pytest.raises(DatasetLoadingError):
        Standardizer().transform(small_dataset)
    with pytest.raises(DatasetLoadingError):
        Standardizer().transform_features(small_dataset.X)
    standardizer = Standardizer().fit(small_dataset)
    with pytest.raises(ShapeMismatchError):
        standardizer.transform(Dataset(np.zeros((2, 3)), np.zeros(2)))


def test_standardizer_serialization(small_dataset):
    assert Standardizer().to_dict() == {"mean": None, "scale": None}
    assert not Standardizer.from_dict({"mean": None, "scale": None}).is_fitted
    standardizer = Standardizer().fit(small_dataset)
    restored = Standardizer.from_dict(standardizer.to_dict())
    np.testing.assert_array_equal(
        restored.transform_features(small_dataset.X),
        standardizer.transform_features(small_dataset.X),
    )
