"""Text tables and plot files for evaluation, seed-sweep and ablation results."""
from __future__ import annotations

from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from segkit.schemas.boundary import BoundarySequence
from segkit.schemas.features import MelFrames
from segkit.schemas.metrics import SCHEMES, CorpusScore
from segkit.schemas.records import CorpusMetricRecord

METRIC_COLUMNS = (
    ("precision", "P"),
    ("recall", "R"),
    ("f1", "F1"),
    ("r_value", "R-value"),
)


def _percent(value: float) -> str:
    return f"{100.0 * value:6.2f}"


def format_score_table(scores: Iterable[CorpusScore]) -> str:
    """One row per scheme, metrics in percent."""
    header = f"{'scheme':<14}" + "".join(f"{label:>9}" for _, label in METRIC_COLUMNS) + f"{'hits(P)':>9}{'pred':>7}{'ref':>7}"
    lines = [header, "-" * len(header)]
    for score in scores:
        lines.append(
            f"{score.scheme:<14}"
            + "".join(f"{_percent(getattr(score, name)):>9}" for name, _ in METRIC_COLUMNS)
            + f"{score.n_hit_precision:>9}{score.n_pred:>7}{score.n_ref:>7}"
        )
    return "\n".join(lines)


def r_value_gap(record: CorpusMetricRecord) -> Optional[float]:
    """Conventional minus proposed R-value, when both schemes were scored."""
    try:
        return record.score("conventional").r_value - record.score("proposed").r_value
    except KeyError:
        return None


def format_evaluation_report(record: CorpusMetricRecord) -> str:
    lines = [
        f"run {record.run} ({record.variant}), split {record.split}, seed {record.seed}",
        f"threshold {record.threshold:.2f}, tolerance {record.gamma_frames} frame(s), {record.aggregation} aggregation",
        f"utterance start and end {'counted' if record.include_edges else 'not counted'} as boundaries; "
        "a ratio over an empty reference list scores 1.0",
        "",
        format_score_table(record.scores),
        "",
        f"duplicate boundaries: {100.0 * record.duplicate_rate:.2f}% of predictions have another within tolerance",
    ]
    gap = r_value_gap(record)
    if gap is not None:
        lines.append(f"R-value gap (conventional - proposed): {100.0 * gap:.2f} points")
        lines.append(f"R-value ordered differently by the schemes on {record.r_value_dominance_violations} utterance(s)")
    return "\n".join(lines) + "\n"


class MeanStd(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: float
    std: float

    def __str__(self) -> str:
        return f"{100.0 * self.mean:.2f}±{100.0 * self.std:.2f}"


class SweepRow(BaseModel):
    """Mean and population standard deviation over the runs of one (label, variant, split)."""
    model_config = ConfigDict(frozen=True)

    label: str
    variant: str
    split: str
    n_runs: int
    metrics: Dict[str, Dict[str, MeanStd]]
    gap: Optional[MeanStd] = None


def _mean_std(values: Sequence[float]) -> MeanStd:
    array = np.asarray(values, dtype=np.float64)
    return MeanStd(mean=float(array.mean()), std=float(array.std()))


def summarize_runs(records: Iterable[CorpusMetricRecord]) -> List[SweepRow]:
    groups: "OrderedDict[Tuple[str, str, str], List[CorpusMetricRecord]]" = OrderedDict()
    for record in records:
        key = (record.label or record.run, record.variant, record.split)
        groups.setdefault(key, []).append(record)

    rows = []
    for (label, variant, split), members in groups.items():
        metrics: Dict[str, Dict[str, MeanStd]] = {}
        for scheme in SCHEMES:
            scored = [member.score(scheme) for member in members if any(s.scheme == scheme for s in member.scores)]
            if scored:
                metrics[scheme] = {name: _mean_std([getattr(s, name) for s in scored]) for name, _ in METRIC_COLUMNS}
        gaps = [gap for gap in (r_value_gap(member) for member in members) if gap is not None]
        rows.append(SweepRow(
            label=label,
            variant=variant,
            split=split,
            n_runs=len(members),
            metrics=metrics,
            gap=_mean_std(gaps) if gaps else None,
        ))
    return rows


def format_sweep_table(rows: Sequence[SweepRow]) -> str:
    header = f"{'label':<20}{'variant':<8}{'split':<6}{'n':>3}  {'scheme':<13}" + "".join(
        f"{label:>14}" for _, label in METRIC_COLUMNS
    )
    lines = [header, "-" * len(header)]
    for row in rows:
        for scheme, values in row.metrics.items():
            lines.append(
                f"{row.label:<20}{row.variant:<8}{row.split:<6}{row.n_runs:>3}  {scheme:<13}"
                + "".join(f"{str(values[name]):>14}" for name, _ in METRIC_COLUMNS)
            )

    lines.append("")
    lines.append("R-value gap (conventional - proposed), points")
    gaps: Dict[str, Dict[str, List[float]]] = OrderedDict()
    for row in rows:
        if row.gap is not None:
            lines.append(f"  {row.label:<20}{row.variant:<8}{row.split:<6}{str(row.gap):>14}")
            gaps.setdefault(row.split, {}).setdefault(row.variant, []).append(row.gap.mean)
    for split, by_variant in gaps.items():
        if "ar" in by_variant and "non-ar" in by_variant:
            wider = np.mean(by_variant["non-ar"]) > np.mean(by_variant["ar"])
            lines.append(f"  {split}: non-AR gap {'exceeds' if wider else 'does not exceed'} AR gap")
    return "\n".join(lines) + "\n"


def format_ablation_table(cells: Sequence[Tuple[bool, bool, CorpusMetricRecord]]) -> str:
    """Frequency mask x pitch/formant grid, one row per cell and scheme."""
    header = f"{'freq mask':<11}{'pitch/formant':<15}{'scheme':<14}" + "".join(
        f"{label:>9}" for _, label in METRIC_COLUMNS
    )
    lines = [header, "-" * len(header)]
    for freq_mask, pitch_formant, record in cells:
        for score in record.scores:
            lines.append(
                f"{'yes' if freq_mask else 'no':<11}{'yes' if pitch_formant else 'no':<15}{score.scheme:<14}"
                + "".join(f"{_percent(getattr(score, name)):>9}" for name, _ in METRIC_COLUMNS)
            )
    return "\n".join(lines) + "\n"


def plot_segmentation(
    mel: MelFrames,
    predicted: BoundarySequence,
    path: Union[str, Path],
    truth: Optional[BoundarySequence] = None,
    title: Optional[str] = None,
) -> Path:
    """Mel-spectrogram with predicted (and optionally reference) boundaries overlaid."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    hop = mel.grid.hop_s
    figure, axis = plt.subplots(figsize=(max(6.0, mel.total_frames * hop * 4.0), 3.0))
    axis.imshow(
        mel.values.T,
        origin="lower",
        aspect="auto",
        cmap="magma",
        extent=(0.0, mel.total_frames * hop, 0, mel.d_mel),
    )
    if truth is not None:
        for frame in truth.frames:
            axis.axvline(frame * hop, color="white", linestyle=":", linewidth=1.0)
    for frame in predicted.frames:
        axis.axvline(frame * hop, color="cyan", linewidth=1.0)
    axis.set_xlabel("time (s)")
    axis.set_ylabel("mel channel")
    if title:
        axis.set_title(title)
    figure.tight_layout()
    figure.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(figure)
    return path
