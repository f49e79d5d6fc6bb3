"""
Teacher-forced training, batched decoding and threshold tuning for SuperSeg.

Every epoch draws its randomness (shuffle order, augmentation, dropout) from a
stream seeded with ``(rng_seed, epoch)``, so a run resumed from ``last.ckpt``
continues exactly as the uninterrupted run would have.
"""
import copy
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

from segkit.augment import Augmenter
from segkit.boundaries import boundaries_from_frames
from segkit.dataset import TrainingExample, batched, collate
from segkit.errors import InputValidationError, TrainingDivergedError
from segkit.features import align_frames, logmel
from segkit.metrics import aggregate_scores, score_pair
from segkit.models.superseg import SuperSeg, init_params
from segkit.records.checkpoint import load_checkpoint, restore_model, restore_optimizer, save_checkpoint
from segkit.records.history import history_records
from segkit.schemas.boundary import BoundarySequence, FrameGrid
from segkit.schemas.metrics import SCHEMES, Aggregation, CorpusScore, Tolerance
from segkit.schemas.model import SuperSegConfig, TrainConfig
from segkit.schemas.records import HistoryRecord
from segkit.tracing import get_tracer

logger = logging.getLogger(__name__)
tracer = get_tracer()

PROBABILITY_CLAMP = 1e-7
DEFAULT_THRESHOLD_GRID: Tuple[float, ...] = tuple(round(0.05 + 0.01 * step, 2) for step in range(91))
LAST_CHECKPOINT = "last.ckpt"
BEST_CHECKPOINT = "best.ckpt"
DECODE_BATCH = 256

ThresholdCurve = List[Tuple[float, float]]


def bce_loss(
    probabilities: torch.Tensor,
    labels: torch.Tensor,
    mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Mean binary cross entropy over unmasked frames."""
    if probabilities.shape != labels.shape:
        raise ValueError(f"probabilities {tuple(probabilities.shape)} and labels {tuple(labels.shape)} differ")
    p = probabilities.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    y = labels.to(p.dtype)
    per_frame = -(y * torch.log(p) + (1.0 - y) * torch.log1p(-p))
    if mask is None:
        return per_frame.mean()
    mask = mask.to(p.dtype)
    return (per_frame * mask).sum() / mask.sum().clamp_min(1.0)


def metric_scheme(metric: str) -> str:
    """``r_value_proposed`` -> ``proposed``."""
    scheme = metric.rsplit("_", 1)[-1]
    if not metric.startswith("r_value_") or scheme not in SCHEMES:
        raise InputValidationError(f"unknown threshold metric {metric!r}", metric=metric)
    return scheme


def _model_device(model: SuperSeg) -> torch.device:
    return next(model.parameters()).device


@torch.no_grad()
def decode_examples(
    model: SuperSeg,
    examples: Sequence[TrainingExample],
    thresholds: Sequence[float],
    batch_size: int = DECODE_BATCH,
) -> List[List[BoundarySequence]]:
    """
    Boundaries of every example at every threshold: result[k][i] is example i at thresholds[k].

    The encoder runs once per batch; autoregressive decoding runs the thresholds side by
    side as extra batch rows.
    """
    model.eval()
    device = _model_device(model)
    results: List[List[Optional[BoundarySequence]]] = [[None] * len(examples) for _ in thresholds]
    for indices in batched(range(len(examples)), max(1, batch_size)):
        batch = collate([examples[i].mel.values for i in indices], [[] for _ in indices], device=str(device))
        hidden = model.encode(batch.mel, batch.mask)
        group = max(1, batch_size // len(indices))
        for start in range(0, len(thresholds), group):
            chunk = list(thresholds[start:start + group])
            threshold_rows = torch.tensor(chunk, dtype=hidden.dtype, device=device).repeat_interleave(len(indices))
            _, labels = model.decode(hidden.repeat(len(chunk), 1, 1), threshold_rows)
            labels = labels.view(len(chunk), len(indices), -1).cpu().numpy()
            for k in range(len(chunk)):
                for row, index in enumerate(indices):
                    length = batch.lengths[row]
                    frames = np.flatnonzero(labels[k, row, :length])
                    results[start + k][index] = boundaries_from_frames(frames, length)
    return results


def predict(
    model: SuperSeg,
    examples: Sequence[TrainingExample],
    threshold: float,
    batch_size: int = DECODE_BATCH,
) -> List[BoundarySequence]:
    if not 0.0 < threshold < 1.0:
        raise InputValidationError("threshold must be in (0, 1)", threshold=threshold)
    return decode_examples(model, examples, [threshold], batch_size)[0]


def evaluate_examples(
    examples: Sequence[TrainingExample],
    predictions: Sequence[BoundarySequence],
    tolerance: Union[Tolerance, int],
    aggregation: Aggregation = "pooled",
) -> Tuple[CorpusScore, ...]:
    """Corpus scores under both schemes, conventional first."""
    return tuple(
        aggregate_scores(
            [score_pair(example.boundaries, pred, tolerance, scheme) for example, pred in zip(examples, predictions)],
            aggregation,
        )
        for scheme in SCHEMES
    )


def threshold_curve(
    model: SuperSeg,
    examples: Sequence[TrainingExample],
    tolerance: Union[Tolerance, int],
    metric: str = "r_value_proposed",
    grid: Sequence[float] = DEFAULT_THRESHOLD_GRID,
    aggregation: Aggregation = "pooled",
) -> ThresholdCurve:
    """Validation R-value (of the metric's scheme) at every grid threshold, in grid order."""
    if not examples:
        raise InputValidationError("threshold tuning needs a non-empty validation set")
    if not grid:
        raise InputValidationError("threshold grid is empty")
    if any(not 0.0 < value < 1.0 for value in grid):
        raise InputValidationError("threshold grid values must lie in (0, 1)", grid=list(grid))
    scheme = metric_scheme(metric)
    with tracer.start_as_current_span("threshold-curve") as span:
        span.set_attribute("tune.grid_size", len(grid))
        per_threshold = decode_examples(model, examples, list(grid))
        curve = []
        for threshold, predictions in zip(grid, per_threshold):
            scores = [score_pair(example.boundaries, pred, tolerance, scheme) for example, pred in zip(examples, predictions)]
            curve.append((float(threshold), aggregate_scores(scores, aggregation).r_value))
    return curve


def select_threshold(curve: ThresholdCurve) -> float:
    """Argmax of the curve; ties go to the smaller threshold."""
    best_threshold, best_value = None, -math.inf
    for threshold, value in sorted(curve):
        if value > best_value:
            best_threshold, best_value = threshold, value
    return best_threshold


def tune_threshold(
    model: SuperSeg,
    examples: Sequence[TrainingExample],
    tolerance: Union[Tolerance, int],
    metric: str = "r_value_proposed",
    grid: Sequence[float] = DEFAULT_THRESHOLD_GRID,
    aggregation: Aggregation = "pooled",
) -> float:
    return select_threshold(threshold_curve(model, examples, tolerance, metric, grid, aggregation))


def boundary_rate(examples: Sequence[TrainingExample]) -> float:
    frames = sum(example.total_frames for example in examples)
    boundaries = sum(len(example.boundaries) for example in examples)
    rate = boundaries / frames if frames else 0.0
    return min(max(rate, 1e-4), 1.0 - 1e-4)


def epoch_streams(seed: int, epoch: int, device: str = "cpu") -> Tuple[np.random.Generator, torch.Generator]:
    rng = np.random.default_rng([seed, epoch])
    generator = torch.Generator(device=device).manual_seed(int(rng.integers(0, 2**63 - 1)))
    return rng, generator


@dataclass
class TrainResult:
    model: SuperSeg
    history: List[HistoryRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_metric: float = -math.inf


class Trainer:
    """
    Epoch loop of {augment -> features -> teacher-forced forward -> BCE -> AdamW step}.

    With a ``run_dir`` the trainer keeps ``history.jsonl``, ``last.ckpt`` (every epoch)
    and ``best.ckpt`` (on validation improvement), and resumes from ``last.ckpt``.
    ``train`` hands back the model holding the best-validation weights, not the last
    epoch's.
    """

    def __init__(
        self,
        model_config: SuperSegConfig,
        train_config: TrainConfig,
        grid: FrameGrid = FrameGrid(),
        tolerance: Union[Tolerance, int] = 2,
        run_dir: Optional[Path] = None,
        device: str = "cpu",
        augmenter: Optional[Augmenter] = None,
    ):
        self.model_config = model_config
        self.train_config = train_config
        self.grid = grid
        self.tolerance = tolerance
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.device = device
        self.augmenter = augmenter or Augmenter(train_config.augment)
        self.scheme = metric_scheme(train_config.threshold_metric)

    @property
    def last_checkpoint(self) -> Optional[Path]:
        return self.run_dir / LAST_CHECKPOINT if self.run_dir else None

    @property
    def best_checkpoint(self) -> Optional[Path]:
        return self.run_dir / BEST_CHECKPOINT if self.run_dir else None

    def _history_path(self) -> Optional[Path]:
        return history_records.path(self.run_dir) if self.run_dir else None

    def features_for(self, example: TrainingExample, rng: np.random.Generator) -> np.ndarray:
        mel = example.mel
        if self.augmenter.touches_audio:
            if example.audio is None:
                raise InputValidationError(
                    f"pitch/formant augmentation needs the audio of {example.utterance_id}",
                    utterance_id=example.utterance_id,
                )
            audio = self.augmenter.augment_audio(example.audio, self.grid.sample_rate, rng)
            mel = align_frames(logmel(audio, self.grid.sample_rate, self.grid, mel.d_mel), example.total_frames)
        return self.augmenter.augment_features(mel, rng).values

    def _optimizer(self, model: SuperSeg) -> torch.optim.AdamW:
        config = self.train_config
        return torch.optim.AdamW(
            model.parameters(),
            lr=config.lr,
            betas=config.betas,
            weight_decay=config.weight_decay,
        )

    def _meta(self, epoch: int, best_epoch: int, best_metric: float, rate: float) -> dict:
        return {
            "epoch": epoch,
            "best_epoch": best_epoch,
            "best_metric": best_metric if math.isfinite(best_metric) else None,
            "boundary_rate": rate,
            "threshold": self.train_config.validation_threshold,
            "train": self.train_config.model_dump(mode="json"),
            "grid": self.grid.model_dump(mode="json"),
        }

    def _load_best(self, model: SuperSeg, best_state: Optional[dict]) -> None:
        """Put the best-validation weights back into ``model``."""
        if best_state is None:
            best = self.best_checkpoint
            # a resumed run whose best epoch predates the resume
            if best is None or not best.is_file():
                return
            best_state = restore_model(load_checkpoint(best), self.device).state_dict()
        model.load_state_dict(best_state)

    def _start(self, train_set: Sequence[TrainingExample], resume: bool, model: Optional[SuperSeg]):
        rate = self.train_config.boundary_rate or boundary_rate(train_set)
        last = self.last_checkpoint
        if resume and last is not None and last.is_file():
            checkpoint = load_checkpoint(last)
            model = restore_model(checkpoint, self.device)
            optimizer = self._optimizer(model)
            restore_optimizer(checkpoint, model, optimizer)
            completed = checkpoint.epoch
            history = history_records.keep(self._history_path(), lambda record: record.epoch <= completed)
            best_metric = checkpoint.meta.get("best_metric")
            logger.info("resuming from %s after epoch %d", last, completed)
            return (
                model,
                optimizer,
                completed + 1,
                history,
                int(checkpoint.meta.get("best_epoch", 0)),
                -math.inf if best_metric is None else float(best_metric),
                float(checkpoint.meta.get("boundary_rate", rate)),
            )

        if model is None:
            model = init_params(self.model_config, self.train_config.rng_seed, rate)
        model = model.to(self.device)
        if self.run_dir is not None:
            history_records.write(self._history_path(), [])
        return model, self._optimizer(model), 1, [], 0, -math.inf, rate

    def train_epoch(
        self,
        model: SuperSeg,
        optimizer: torch.optim.Optimizer,
        train_set: Sequence[TrainingExample],
        epoch: int,
    ) -> float:
        """One pass over the shuffled training set; returns the frame-weighted mean loss."""
        rng, generator = epoch_streams(self.train_config.rng_seed, epoch, self.device)
        order = rng.permutation(len(train_set))
        model.train()
        loss_sum, frame_count = 0.0, 0
        for indices in batched(order.tolist(), self.train_config.batch_size):
            examples = [train_set[i] for i in indices]
            batch = collate(
                [self.features_for(example, rng) for example in examples],
                [example.labels.labels for example in examples],
                device=self.device,
            )
            logits = model(batch.mel, batch.labels, batch.mask, generator)
            loss = bce_loss(torch.sigmoid(logits), batch.labels, batch.mask)
            if not torch.isfinite(loss):
                last = self.last_checkpoint if self.last_checkpoint and self.last_checkpoint.is_file() else None
                raise TrainingDivergedError(
                    f"non-finite training loss in epoch {epoch}",
                    epoch=epoch,
                    checkpoint_path=last,
                )
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            frames = int(batch.mask.sum().item())
            loss_sum += loss.item() * frames
            frame_count += frames
        return loss_sum / max(frame_count, 1)

    def validate(self, model: SuperSeg, val_set: Sequence[TrainingExample]) -> Tuple[CorpusScore, ...]:
        predictions = predict(model, val_set, self.train_config.validation_threshold)
        return evaluate_examples(val_set, predictions, self.tolerance)

    def train(
        self,
        train_set: Sequence[TrainingExample],
        val_set: Sequence[TrainingExample],
        resume: bool = True,
        model: Optional[SuperSeg] = None,
    ) -> TrainResult:
        if not train_set or not val_set:
            raise InputValidationError(
                "training needs non-empty training and validation sets",
                n_train=len(train_set),
                n_val=len(val_set),
            )
        model, optimizer, first_epoch, history, best_epoch, best_metric, rate = self._start(train_set, resume, model)
        best_state = None

        with tracer.start_as_current_span("train-superseg") as span:
            span.set_attribute("train.first_epoch", first_epoch)
            span.set_attribute("train.max_epochs", self.train_config.max_epochs)
            span.set_attribute("model.autoregressive", self.model_config.autoregressive)
            for epoch in range(first_epoch, self.train_config.max_epochs + 1):
                train_loss = self.train_epoch(model, optimizer, train_set, epoch)
                validation = self.validate(model, val_set)
                metric = next(score.r_value for score in validation if score.scheme == self.scheme)
                is_best = metric > best_metric
                if is_best:
                    best_epoch, best_metric = epoch, metric
                    best_state = copy.deepcopy(model.state_dict())
                record = HistoryRecord(
                    epoch=epoch,
                    train_loss=train_loss,
                    validation=validation,
                    validation_metric=metric,
                    is_best=is_best,
                )
                history.append(record)
                logger.info(
                    "epoch %d: loss %.5f, val %s R-value %.4f%s",
                    epoch, train_loss, self.scheme, metric, " (best)" if is_best else "",
                )
                if self.run_dir is not None:
                    meta = self._meta(epoch, best_epoch, best_metric, rate)
                    save_checkpoint(self.last_checkpoint, model, meta, optimizer)
                    if is_best:
                        save_checkpoint(self.best_checkpoint, model, meta)
                    history_records.append(self._history_path(), record)
                span.add_event("epoch", {"epoch": epoch, "loss": train_loss, "metric": metric})
            span.set_attribute("train.best_epoch", best_epoch)

        self._load_best(model, best_state)
        return TrainResult(model=model, history=history, best_epoch=best_epoch, best_metric=best_metric)


def train(
    model_config: SuperSegConfig,
    train_config: TrainConfig,
    train_set: Sequence[TrainingExample],
    val_set: Sequence[TrainingExample],
    grid: FrameGrid = FrameGrid(),
    tolerance: Union[Tolerance, int] = 2,
    run_dir: Optional[Path] = None,
    device: str = "cpu",
    model: Optional[SuperSeg] = None,
) -> TrainResult:
    trainer = Trainer(model_config, train_config, grid, tolerance, run_dir, device)
    return trainer.train(train_set, val_set, model=model)
