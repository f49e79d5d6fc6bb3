import math

import pytest
import torch

from segkit.dataset import load_examples
from segkit.errors import InputValidationError, TrainingDivergedError
from segkit.models.superseg import infer, init_params
from segkit.records.checkpoint import load_checkpoint, restore_model
from segkit.records.feature_cache import FeatureCache
from segkit.records.history import history_records
from segkit.schemas.boundary import FrameGrid
from segkit.schemas.features import AugmentConfig
from segkit.schemas.model import SuperSegConfig, TrainConfig
from segkit.training import (
    DEFAULT_THRESHOLD_GRID,
    Trainer,
    boundary_rate,
    evaluate_examples,
    metric_scheme,
    predict,
    select_threshold,
    threshold_curve,
    train,
    tune_threshold,
)

NO_AUDIO_AUGMENT = AugmentConfig(pitch_formant_enabled=False)


@pytest.fixture(scope="module")
def examples(synthetic_corpus, tmp_path_factory):
    _, manifest = synthetic_corpus
    cache = FeatureCache(tmp_path_factory.mktemp("features"))
    return {split: load_examples(manifest.split(split), cache, FrameGrid()) for split in ("train", "val", "test")}


def quick_config(**changes):
    settings = dict(lr=0.01, batch_size=4, max_epochs=2, augment=NO_AUDIO_AUGMENT, rng_seed=5)
    settings.update(changes)
    return TrainConfig(**settings)


class ScriptedTrainer(Trainer):
    """Reports a fixed validation R-value for each epoch in turn."""

    def __init__(self, metrics, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.metrics = list(metrics)

    def validate(self, model, val_set):
        value = self.metrics.pop(0)
        return tuple(score.model_copy(update={"r_value": value}) for score in super().validate(model, val_set))


def same_weights(left, right):
    right_state = right.state_dict()
    return all(torch.equal(value, right_state[name]) for name, value in left.state_dict().items())


def test_default_threshold_grid():
    assert len(DEFAULT_THRESHOLD_GRID) == 91
    assert DEFAULT_THRESHOLD_GRID[0] == 0.05 and DEFAULT_THRESHOLD_GRID[-1] == 0.95
    assert DEFAULT_THRESHOLD_GRID[45] == 0.5


def test_metric_scheme():
    assert metric_scheme("r_value_proposed") == "proposed"
    assert metric_scheme("r_value_conventional") == "conventional"
    with pytest.raises(InputValidationError):
        metric_scheme("f1_proposed")


def test_boundary_rate_is_clamped(examples):
    rate = boundary_rate(examples["train"])
    assert 0.0 < rate < 1.0
    assert boundary_rate([]) == pytest.approx(1e-4)


def test_training_reduces_the_loss(examples, tiny_model_config):
    config = quick_config(max_epochs=30, augment=AugmentConfig(freq_mask_enabled=False, pitch_formant_enabled=False))
    trained = train(tiny_model_config, config, examples["train"], examples["val"])
    frozen = train(tiny_model_config, config.model_copy(update={"lr": 0.0}), examples["train"], examples["val"])
    assert len(trained.history) == 30
    assert trained.history[-1].train_loss < frozen.history[-1].train_loss
    assert trained.history[-1].train_loss < trained.history[0].train_loss


def test_zero_learning_rate_leaves_parameters_unchanged(examples, tiny_model_config):
    config = quick_config(lr=0.0)
    result = train(tiny_model_config, config, examples["train"], examples["val"])
    initial = init_params(tiny_model_config, config.rng_seed, boundary_rate(examples["train"])).state_dict()
    for name, value in result.model.state_dict().items():
        assert torch.equal(value, initial[name]), name


def test_run_directory_contents(examples, tiny_model_config, tmp_path):
    result = train(tiny_model_config, quick_config(), examples["train"], examples["val"], run_dir=tmp_path)
    history = history_records.read(history_records.path(tmp_path))
    assert [record.epoch for record in history] == [1, 2]
    assert sum(record.is_best for record in history) >= 1
    assert {score.scheme for score in history[0].validation} == {"conventional", "proposed"}
    last = load_checkpoint(tmp_path / "last.ckpt")
    assert last.epoch == 2
    assert last.has_optimizer_state
    best = load_checkpoint(tmp_path / "best.ckpt")
    assert best.epoch == result.best_epoch
    assert not best.has_optimizer_state
    assert best.meta["best_metric"] == pytest.approx(result.best_metric)


def test_resumed_run_matches_uninterrupted_run(examples, tiny_model_config, tmp_path):
    model_config = tiny_model_config.model_copy(update={"dropout": 0.2})
    straight, resumed = tmp_path / "straight", tmp_path / "resumed"
    train(model_config, quick_config(max_epochs=3), examples["train"], examples["val"], run_dir=straight)
    train(model_config, quick_config(max_epochs=1), examples["train"], examples["val"], run_dir=resumed)
    train(model_config, quick_config(max_epochs=3), examples["train"], examples["val"], run_dir=resumed)
    assert (straight / "last.ckpt").read_bytes() == (resumed / "last.ckpt").read_bytes()
    assert (straight / "history.jsonl").read_bytes() == (resumed / "history.jsonl").read_bytes()


def test_fresh_start_ignores_existing_checkpoint(examples, tiny_model_config, tmp_path):
    train(tiny_model_config, quick_config(max_epochs=2), examples["train"], examples["val"], run_dir=tmp_path)
    trainer = Trainer(tiny_model_config, quick_config(max_epochs=1), run_dir=tmp_path)
    result = trainer.train(examples["train"], examples["val"], resume=False)
    assert [record.epoch for record in result.history] == [1]
    assert [record.epoch for record in history_records.read(history_records.path(tmp_path))] == [1]


def test_returned_model_holds_the_best_validation_weights(examples, tiny_model_config):
    peaked = ScriptedTrainer([0.5, 0.9, 0.1], tiny_model_config, quick_config(max_epochs=3))
    result = peaked.train(examples["train"], examples["val"])
    assert result.best_epoch == 2
    assert result.best_metric == 0.9
    assert [record.is_best for record in result.history] == [True, True, False]

    second_epoch = ScriptedTrainer([0.5, 0.9], tiny_model_config, quick_config(max_epochs=2))
    third_epoch = ScriptedTrainer([0.1, 0.2, 0.3], tiny_model_config, quick_config(max_epochs=3))
    assert same_weights(result.model, second_epoch.train(examples["train"], examples["val"]).model)
    assert not same_weights(result.model, third_epoch.train(examples["train"], examples["val"]).model)


def test_resumed_run_returns_the_best_checkpoint(examples, tiny_model_config, tmp_path):
    first = ScriptedTrainer([0.9, 0.1], tiny_model_config, quick_config(max_epochs=2), run_dir=tmp_path)
    first.train(examples["train"], examples["val"])
    resumed = ScriptedTrainer([0.2], tiny_model_config, quick_config(max_epochs=3), run_dir=tmp_path)
    result = resumed.train(examples["train"], examples["val"])
    assert [record.epoch for record in result.history] == [1, 2, 3]
    assert result.best_epoch == 1
    assert load_checkpoint(tmp_path / "last.ckpt").epoch == 3
    assert same_weights(result.model, restore_model(load_checkpoint(tmp_path / "best.ckpt")))


def test_training_needs_both_sets(examples, tiny_model_config):
    with pytest.raises(InputValidationError):
        train(tiny_model_config, quick_config(), examples["train"], [])
    with pytest.raises(InputValidationError):
        train(tiny_model_config, quick_config(), [], examples["val"])


def test_audio_augmentation_needs_audio(examples, tiny_model_config):
    with pytest.raises(InputValidationError):
        train(tiny_model_config, quick_config(augment=AugmentConfig()), examples["train"], examples["val"])


def test_non_finite_loss_stops_training(examples, tiny_model_config):
    model = init_params(tiny_model_config)
    with torch.no_grad():
        model.head.bias.fill_(math.nan)
    with pytest.raises(TrainingDivergedError):
        train(tiny_model_config, quick_config(), examples["train"], examples["val"], model=model)


def test_predict_matches_single_utterance_inference(examples, tiny_model_config):
    model = init_params(tiny_model_config, boundary_rate=boundary_rate(examples["train"]))
    batched = predict(model, examples["test"], 0.3, batch_size=2)
    for example, predicted in zip(examples["test"], batched):
        assert predicted == infer(model, example.mel, 0.3)
        assert predicted.total_frames == example.total_frames


def test_single_point_grid_returns_that_point(examples, tiny_model_config):
    model = init_params(tiny_model_config)
    assert tune_threshold(model, examples["val"], 2, grid=(0.5,)) == 0.5


def test_selected_threshold_is_the_curve_maximum(examples, tiny_model_config):
    model = init_params(tiny_model_config, boundary_rate=boundary_rate(examples["train"]))
    curve = threshold_curve(model, examples["val"], 2, grid=(0.02, 0.05, 0.1, 0.3, 0.5))
    assert [threshold for threshold, _ in curve] == [0.02, 0.05, 0.1, 0.3, 0.5]
    chosen = select_threshold(curve)
    best = dict(curve)[chosen]
    assert all(best >= value for _, value in curve)


def test_ties_go_to_the_smaller_threshold():
    assert select_threshold([(0.6, 0.8), (0.4, 0.8), (0.5, 0.7)]) == 0.4


def test_tuning_rejects_bad_input(examples, tiny_model_config):
    model = init_params(tiny_model_config)
    with pytest.raises(InputValidationError):
        tune_threshold(model, [], 2)
    with pytest.raises(InputValidationError):
        tune_threshold(model, examples["val"], 2, grid=())
    with pytest.raises(InputValidationError):
        tune_threshold(model, examples["val"], 2, grid=(0.5, 1.0))
    with pytest.raises(InputValidationError):
        predict(model, examples["val"], 1.0)


@pytest.mark.slow
def test_full_size_model_overfits_a_small_subset(examples):
    subset = examples["train"][:10]
    config = quick_config(
        lr=0.001,
        batch_size=10,
        max_epochs=200,
        augment=AugmentConfig(freq_mask_enabled=False, pitch_formant_enabled=False),
    )
    result = train(SuperSegConfig(dropout=0.0), config, subset, subset)
    _, proposed = evaluate_examples(subset, predict(result.model, subset, 0.5), 2)
    assert proposed.r_value > 0.99
