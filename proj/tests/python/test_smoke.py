import math
import pathlib

import numpy as np
import pytest

import mdgan


def test_metrics_on_known_examples():
    scores = [0.1, 0.4, 0.35, 0.8]
    labels = [0, 0, 1, 1]
    assert mdgan.auc_roc(scores, labels) == pytest.approx(0.75)
    assert mdgan.auc_pr(scores, labels) == pytest.approx(5 / 6)
    rate, _ = mdgan.eer([0.0, 1.0, 2.0, 3.0], [0, 0, 1, 1])
    assert rate == 0.0
    m = mdgan.compute_metrics(scores, labels)
    assert set(m) >= {"auc_roc", "auc_pr", "eer"}


def test_t_test_and_table():
    assert mdgan.t_critical_95(29) == pytest.approx(2.045, abs=5e-4)
    r = mdgan.paired_t_test([1.0, 2.0, 3.0, 4.0], [0.5, 1.0, 2.5, 3.0])
    assert r["df"] == 3
    assert r["mean_difference"] == pytest.approx(0.75)


def test_builders_shapes():
    assert mdgan.derive_seed(1, "run") == mdgan.derive_seed(1, "run") != mdgan.derive_seed(2, "run")
    assert mdgan.d2_widths(20) == [20, 14, 10, 14, 20]
    d2 = mdgan.build_d2(20, seed=1)
    out = d2.forward(np.zeros((3, 20)))
    assert out.shape == (3, 20)
    g = mdgan.build_generator(6, seed=2)
    x = g.forward(np.random.default_rng(0).normal(size=(5, g.input_dim)), mode="train")
    assert x.shape == (5, 6)
    assert np.all(np.abs(x) <= 1.0)
    d1 = mdgan.build_d1(6, seed=3)
    p = d1.forward(np.zeros((4, 6)), mode="train")
    assert np.all((p > 0) & (p < 1))


def test_losses_return_gradients():
    loss, grad = mdgan.mse_loss(np.zeros((2, 2)), np.ones((2, 2)))
    assert loss == pytest.approx(1.0)
    assert grad.shape == (2, 2)
    loss, grad = mdgan.bce_loss(np.full((4, 1), 0.5), np.ones((4, 1)))
    assert loss == pytest.approx(math.log(2))


def test_partition_and_training():
    data = mdgan.make_synthetic("blob", n_normal=300, n_anomaly=40, dim=6, separation=4.0, seed=3)
    assert len(data) == 340
    split = mdgan.partition(data, seed=5, train_size=200)
    assert split.train.shape[0] + split.validation.shape[0] == 200
    assert split.test.shape[0] == 140
    assert split.train.min() >= -1 and split.train.max() <= 1

    cfg = mdgan.TrainConfig(epochs=5, batch_size=32, warm_up=0, seed=11)
    result = mdgan.train_mdgan(split, cfg)
    assert len(result.trace) == 5
    assert 1 <= result.checkpoint_epoch <= 5
    scores = mdgan.rmse_scores(result.model, split.test)
    assert mdgan.auc_roc(scores, split.test_labels) > 0.8

    again = mdgan.train_mdgan(split, cfg)
    assert np.array_equal(mdgan.rmse_scores(again.model, split.test), scores)
    baseline = mdgan.train_baseline(split, cfg)
    # header plus one reconstruction loss and one validation score per epoch
    assert baseline.trace_csv.count("\n") == 1 + 2 * 5


def test_errors_map_to_python_exceptions(tmp_path):
    with pytest.raises(ValueError):
        mdgan.TrainConfig(epochs=0)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(mdgan.SchemaError):
        mdgan.load_csv(bad, label_column="label")
    with pytest.raises(ValueError):
        mdgan.build_d2(20, seed=1).forward(np.zeros((2, 3)))


def test_run_experiment_end_to_end(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(
        "dataset:\n"
        "  name: tiny\n"
        "  synthetic: {kind: blob, n_normal: 120, n_anomaly: 20, dim: 4, separation: 3.0, seed: 1}\n"
        "  train_size: 80\n"
        "train: {epochs: 2, batch_size: 16, warm_up: [0, 1]}\n"
        "run: {seeds: [1, 2], output_dir: out}\n"
    )
    summary = mdgan.run_experiment(cfg, jobs=2)
    assert summary["all_ok"]
    assert len(summary["runs"]) == 6
    out = pathlib.Path(summary["output_dir"])
    assert (out / "aggregate.md").exists()
    assert mdgan.report_from_manifest(out / "manifest.json") == 6
