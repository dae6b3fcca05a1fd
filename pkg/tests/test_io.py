import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from gpc_discovery.core.datasets import Dataset, Standardizer
from gpc_discovery.core.io.readers import load_checkpoint, load_csv, load_features
from gpc_discovery.core.io.savers import (
    RunSaver,
    predictions_dataframe,
    save_checkpoint,
    save_dataset,
)
from gpc_discovery.exceptions import (
    CheckpointLoadingError,
    DatasetLoadingError,
    ImpossibleSaveError,
)
from gpc_discovery.inference.checkpoint import Checkpoint
from gpc_discovery.inference.particles import ParticleSet
from gpc_discovery.inference.smc import SmcSampler
from gpc_discovery.kernels.expressions import parse_kernel
from gpc_discovery.prediction.predictor import Predictor


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv(tmp_path):
    path = _write(tmp_path / "data.csv", "a,b,label\n1,2,0\n3,4,1\n5,6,1\n")
    raw = load_csv(path, standardize=False)
    np.testing.assert_array_equal(raw.X, [[1, 2], [3, 4], [5, 6]])
    np.testing.assert_array_equal(raw.y, [0, 1, 1])
    assert raw.feature_names == ["a", "b"]
    standardized = load_csv(str(path))
    np.testing.assert_allclose(standardized.X.mean(axis=0), 0.0, atol=1e-12)


@pytest.mark.parametrize(
    "content",
    [
        "a,b\n1,2\n",
        "a,label\n1,0\nx,1\n",
        "a,label\n1,0\n2,3\n",
        "a,label\n1,0\n,1\n",
    ],
)
def test_invalid_csv_files(tmp_path, content):
    path = _write(tmp_path / "data.csv", content)
    with pytest.raises(DatasetLoadingError):
        load_csv(path)


def test_missing_csv_file(tmp_path):
    with pytest.raises(DatasetLoadingError):
        load_csv(tmp_path / "missing.csv")


def test_load_features_with_and_without_labels(tmp_path):
    labeled = _write(tmp_path / "labeled.csv", "a,b,label\n1,2,0\n3,4,1\n")
    X, y, names = load_features(labeled)
    np.testing.assert_array_equal(X, [[1, 2], [3, 4]])
    np.testing.assert_array_equal(y, [0, 1])
    assert names == ["a", "b"]
    unlabeled = _write(tmp_path / "unlabeled.csv", "a,b\n1,2\n3,4\n")
    X, y, names = load_features(unlabeled)
    assert y is None
    assert X.shape == (2, 2)


def test_save_dataset_is_readable(tmp_path, small_dataset):
    path = save_dataset(small_dataset, tmp_path / "nested" / "data.csv")
    loaded = load_csv(path, standardize=False)
    np.testing.assert_allclose(loaded.X, small_dataset.X)
    np.testing.assert_array_equal(loaded.y, small_dataset.y)
    assert loaded.feature_names == small_dataset.feature_names
    assert not list(path.parent.glob("*.tmp"))


def _sampler(pcfg, smc_cfg, model, data, fixed="(SE + LIN)"):
    cfg = replace(smc_cfg, fixed_kernel=parse_kernel(fixed))
    sampler = SmcSampler(pcfg, cfg, model)
    sampler.run(data.batches(3))
    return sampler


def test_checkpoint_round_trip(tmp_path, small_dataset, pcfg, smc_cfg, model):
    first_half = small_dataset.subset(slice(0, 6))
    sampler = _sampler(pcfg, smc_cfg, model, first_half)
    standardizer = Standardizer().fit(small_dataset)
    checkpoint = Checkpoint.from_sampler(sampler, standardizer, ["x1", "x2"])
    path = save_checkpoint(checkpoint, tmp_path / "checkpoint.json")
    restored = load_checkpoint(path)
    assert restored.step == sampler.step
    assert restored.next_step == sampler.step + 1
    assert restored.particle_set.is_identical(sampler.particle_set)
    np.testing.assert_array_equal(restored.X_train, first_half.X)
    assert restored.train.feature_names == ["x1", "x2"]
    assert restored.smc.fixed_kernel == parse_kernel("(SE + LIN)")
    np.testing.assert_array_equal(restored.standardizer.mean, standardizer.mean)
    content = json.loads(path.read_text(encoding="utf-8"))
    assert content["next_step"] == sampler.step + 1


def test_resumed_runs_match_uninterrupted_runs(
    tmp_path,
    small_dataset,
    pcfg,
    smc_cfg,
    model,
):
    first_half = small_dataset.subset(slice(0, 6))
    second_half = small_dataset.subset(slice(6, 12))
    sampler = _sampler(pcfg, smc_cfg, model, first_half)
    path = save_checkpoint(
        Checkpoint.from_sampler(sampler),
        tmp_path / "checkpoint.json",
    )
    resumed = load_checkpoint(path).to_sampler()
    sampler.absorb(second_half, is_final=True)
    resumed.absorb(second_half, is_final=True)
    assert resumed.step == sampler.step
    assert resumed.particle_set.is_identical(sampler.particle_set)


def test_restored_checkpoints_predict_like_the_original(
    tmp_path,
    small_dataset,
    pcfg,
    smc_cfg,
    model,
):
    sampler = _sampler(pcfg, smc_cfg, model, small_dataset)
    path = save_checkpoint(Checkpoint.from_sampler(sampler), tmp_path / "c.json")
    restored = load_checkpoint(path)
    queries = np.array([[0.0, 0.5], [1.0, -1.0]])
    original = Predictor(sampler.particle_set, small_dataset.X, model)
    again = Predictor(restored.particle_set, restored.X_train, restored.model)
    np.testing.assert_array_equal(
        original.predict_proba(queries),
        again.predict_proba(queries),
    )


def test_invalid_checkpoints(tmp_path, small_dataset, pcfg, smc_cfg, model):
    with pytest.raises(CheckpointLoadingError):
        load_checkpoint(tmp_path / "missing.json")
    with pytest.raises(CheckpointLoadingError):
        load_checkpoint(_write(tmp_path / "broken.json", "{not json"))
    sampler = _sampler(pcfg, smc_cfg, model, small_dataset.subset(slice(0, 6)))
    content = Checkpoint.from_sampler(sampler).to_dict()
    incomplete = {k: v for k, v in content.items() if k != "pcfg"}
    with pytest.raises(CheckpointLoadingError):
        Checkpoint.from_dict(incomplete)
    content["train"]["X"] = content["train"]["X"][:3]
    content["train"]["y"] = content["train"]["y"][:3]
    with pytest.raises(CheckpointLoadingError):
        Checkpoint.from_dict(content)


def test_run_saver(tmp_path):
    blocker = _write(tmp_path / "file", "")
    with pytest.raises(ImpossibleSaveError):
        RunSaver(blocker)
    saver = RunSaver(tmp_path / "run")
    path = saver.save_report({"value": np.float64(0.5), "count": np.int64(2)})
    assert json.loads(path.read_text(encoding="utf-8")) == {"value": 0.5, "count": 2}


def test_predictions_dataframe(small_dataset, make_particle):
    particles = [
        make_particle("(SE)", n=small_dataset.n, seed=i) for i in range(2)
    ]
    ps = ParticleSet(particles=particles, absorbed=small_dataset.n)
    results = Predictor(ps, small_dataset.X).predict(small_dataset.X[:3], detail=True)
    df = predictions_dataframe(results, small_dataset.y[:3])
    assert list(df.columns) == [
        "prob_class1",
        "label",
        "true_label",
        "latent_mean_0",
        "latent_var_0",
        "latent_mean_1",
        "latent_var_1",
    ]
    assert isinstance(df, pd.DataFrame)
    assert len(df) == 3
    short = predictions_dataframe(
        Predictor(ps, small_dataset.X).predict(small_dataset.X),
    )
    assert list(short.columns) == ["prob_class1", "label"]


def test_datasets_with_default_names(tmp_path):
    dataset = Dataset(np.array([[1.0], [2.0]]), np.array([0, 1]))
    path = save_dataset(dataset, tmp_path / "d.csv")
    assert path.read_text(encoding="utf-8").splitlines()[0] == "x1,label"
