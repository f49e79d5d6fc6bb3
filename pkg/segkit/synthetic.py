"""Seeded generator for corpora whose phone boundaries are exact by construction."""
import logging
from pathlib import Path
from typing import List, NamedTuple, Optional, Union

import numpy as np
from scipy import signal

from segkit.audio import write_wav
from segkit.corpus import build_synthetic_manifest, serialize_timit_phn
from segkit.schemas.boundary import PhoneInterval
from segkit.schemas.corpus import Manifest
from segkit.schemas.run import SyntheticSpec
from segkit.tracing import get_tracer

logger = logging.getLogger(__name__)
tracer = get_tracer()

RAMP_S = 0.002
MIN_BAND_HZ = 150.0
MAX_BAND_HZ = 6500.0


class Template(NamedTuple):
    label: str
    low_hz: float
    high_hz: float
    level: float
    f0_hz: Optional[float]
    n_harmonics: int


def template_bank(spec: SyntheticSpec) -> List[Template]:
    rng = np.random.default_rng([spec.seed, 0x5e9])
    nyquist = spec.sample_rate / 2.0
    bank = []
    for index in range(spec.n_templates):
        centre = float(np.exp(rng.uniform(np.log(MIN_BAND_HZ * 2), np.log(MAX_BAND_HZ * 0.8))))
        width = float(rng.uniform(0.3, 1.2))
        low = max(MIN_BAND_HZ, centre / (1.0 + width))
        high = min(nyquist * 0.95, centre * (1.0 + width))
        harmonic = rng.uniform() < spec.harmonic_probability
        bank.append(Template(
            label=f"t{index:02d}",
            low_hz=low,
            high_hz=high,
            level=float(rng.uniform(0.3, 1.0)),
            f0_hz=float(rng.uniform(90.0, 250.0)) if harmonic else None,
            n_harmonics=int(rng.integers(4, 16)) if harmonic else 0,
        ))
    return bank


def draw_segment_durations(rng: np.random.Generator, total_s: float, spec: SyntheticSpec) -> List[float]:
    """Log-normal durations until ``total_s`` is covered; the last one is cut to fit."""
    durations: List[float] = []
    covered = 0.0
    while covered < total_s:
        duration = float(rng.lognormal(np.log(spec.median_segment_s), spec.sigma))
        durations.append(min(duration, total_s - covered))
        covered += duration
    if len(durations) > 1 and durations[-1] < spec.min_segment_s:
        tail = durations.pop()
        durations[-1] += tail
    return durations


def segment_intervals(durations: List[float], labels: List[str], sample_rate: int) -> List[PhoneInterval]:
    edges = np.rint(np.cumsum([0.0] + durations) * sample_rate).astype(int)
    return [
        PhoneInterval(int(start), int(end), label)
        for start, end, label in zip(edges[:-1], edges[1:], labels)
    ]


def render_segment(template: Template, n_samples: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    sos = signal.butter(4, [template.low_hz, template.high_hz], btype="bandpass", fs=sample_rate, output="sos")
    noise = signal.sosfilt(sos, rng.standard_normal(n_samples + 512))[512:]
    noise /= max(np.std(noise), 1e-8)
    waveform = 0.4 * noise
    if template.f0_hz is not None:
        t = np.arange(n_samples) / sample_rate
        phases = rng.uniform(0, 2 * np.pi, template.n_harmonics)
        for k, phase in enumerate(phases, start=1):
            if k * template.f0_hz >= sample_rate / 2:
                break
            waveform += np.sin(2 * np.pi * k * template.f0_hz * t + phase) / k

    # random slow envelope, ramped at both ends so segments switch without clicks
    knots = rng.uniform(0.5, 1.0, 4)
    envelope = np.interp(np.linspace(0, 3, n_samples), np.arange(4), knots)
    ramp = min(int(RAMP_S * sample_rate), n_samples // 2)
    if ramp > 0:
        envelope[:ramp] *= np.linspace(0.0, 1.0, ramp, endpoint=False)
        envelope[n_samples - ramp:] *= np.linspace(1.0, 0.0, ramp)
    return template.level * envelope * waveform


def synthesize_utterance(spec: SyntheticSpec, index: int, bank: List[Template]):
    """Audio and exact phone intervals of utterance ``index``."""
    rng = np.random.default_rng([spec.seed, index + 1])
    total_s = float(rng.uniform(spec.min_duration_s, spec.max_duration_s))
    durations = draw_segment_durations(rng, total_s, spec)

    labels, previous = [], -1
    for _ in durations:
        choice = int(rng.integers(0, len(bank) - 1))
        if choice >= previous >= 0:
            choice += 1
        labels.append(choice)
        previous = choice

    intervals = segment_intervals(durations, [bank[i].label for i in labels], spec.sample_rate)
    pieces = []
    for (start, end, _), template_index in zip(intervals, labels):
        pieces.append(render_segment(bank[template_index], end - start, spec.sample_rate, rng))
    audio = np.concatenate(pieces)
    audio *= spec.peak / max(np.max(np.abs(audio)), 1e-8)
    return audio.astype(np.float32), intervals


def utterance_id(index: int) -> str:
    return f"syn{index:04d}"


def generate_corpus(
    spec: SyntheticSpec,
    out_dir: Union[str, Path],
    ratios=(8, 1, 1),
) -> Manifest:
    """Write ``<id>.wav`` and ``<id>.phn`` pairs for every utterance and return the split manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bank = template_bank(spec)
    with tracer.start_as_current_span("synthesize-corpus") as span:
        span.set_attribute("synth.n_utterances", spec.n_utterances)
        span.set_attribute("synth.seed", spec.seed)
        for index in range(spec.n_utterances):
            audio, intervals = synthesize_utterance(spec, index, bank)
            write_wav(out_dir / f"{utterance_id(index)}.wav", audio, spec.sample_rate)
            (out_dir / f"{utterance_id(index)}.phn").write_text(serialize_timit_phn(intervals), encoding="utf-8")
    logger.info("wrote %d synthetic utterances to %s", spec.n_utterances, out_dir)
    return build_synthetic_manifest(out_dir, ratios, spec.seed)
