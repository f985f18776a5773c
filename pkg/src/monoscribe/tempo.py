"""
Global tempo and beat lengths.

The tempo is the most prominent period of the novelty curve's autocorrelation, weighted by a log-normal prior on the
tempo. In the pipeline the curve is reduced to equal pulses at the picked onsets first. Note durations are
inter-onset intervals; the last note ends where its energy fades below a threshold.
"""
import dataclasses
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import correlate, fftconvolve
from scipy.signal.windows import hann

from .audio import AudioBuffer, FrameSpec
from .onset import DEFAULT_FRAME_SPEC, NoveltyCurve, OnsetList, local_energy
from .settings import (
    ALLOWED_GRIDS, END_THRESHOLD, GRID, PULSE_WIDTH_FRAMES, TEMPO_AMBIGUITY_RATIO, TEMPO_PRIOR_BPM, TEMPO_PRIOR_SIGMA,
    TEMPO_RANGE_BPM,
)
from .utils import parabolic_interpolation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TempoEstimate:
    """A global tempo."""

    #: beats per minute
    bpm: float

    #: share of the winning lag in the total positive tempogram weight
    confidence: float = 1.0

    #: halving or doubling the tempo scores nearly as well
    ambiguous: bool = False

    #: given by the user instead of estimated
    overridden: bool = False

    def __post_init__(self):
        if not self.bpm > 0:
            raise ValueError(f'Tempo must be positive, got {self.bpm}.')
        if not 0 <= self.confidence <= 1:
            raise ValueError(f'Confidence must lie in [0, 1], got {self.confidence}.')

    @classmethod
    def override(cls, bpm: float) -> 'TempoEstimate':
        """A user-given tempo."""
        return cls(bpm=float(bpm), confidence=1.0, overridden=True)

    @property
    def seconds_per_beat(self) -> float:
        return 60.0 / self.bpm


@dataclass(frozen=True)
class TimedNote:
    """A note with its duration in seconds and beats."""

    onset_s: float
    duration_s: float
    beats_raw: float
    beats_quantized: Fraction

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError(f'Duration must be positive, got {self.duration_s}.')


def _tempo_prior(bpm: np.ndarray, center_bpm: float, sigma_octaves: float) -> np.ndarray:
    return np.exp(-0.5 * (np.log2(bpm / center_bpm) / sigma_octaves) ** 2)


def estimate_tempo(
    curve: NoveltyCurve,
    range_bpm: Tuple[float, float] = TEMPO_RANGE_BPM,
    prior_center_bpm: float = TEMPO_PRIOR_BPM,
    prior_sigma_octaves: float = TEMPO_PRIOR_SIGMA,
    ambiguity_ratio: float = TEMPO_AMBIGUITY_RATIO,
) -> TempoEstimate:
    """
    Estimate the global tempo from the novelty curve.

    :param curve:
        The novelty curve.
    :param range_bpm:
        The searched tempo range.
    :param prior_center_bpm:
        The centre of the log-normal tempo prior.
    :param prior_sigma_octaves:
        The width of the prior, in octaves.
    :param ambiguity_ratio:
        Halving or doubling scoring within this fraction of the winner flags the estimate as ambiguous.

    :return:
        The estimate. Falls back to the prior centre with confidence 0 if the curve is too short or flat.
    """
    low, high = range_bpm
    if not 0 < low < high:
        raise ValueError(f'Invalid tempo range {range_bpm}.')
    hop = curve.hop_length_s
    min_lag = max(1, int(math.ceil(60.0 / (hop * high))))
    max_lag = int(math.floor(60.0 / (hop * low)))
    fallback = TempoEstimate(bpm=prior_center_bpm, confidence=0.0)
    values = curve.values
    if len(curve) <= max_lag:
        logger.warning('Novelty curve of %d frames is shorter than the largest lag %d, using %s bpm.',
                       len(curve), max_lag, prior_center_bpm)
        return fallback

    autocorrelation = correlate(values, values, mode='full', method='fft')[len(curve) - 1:]
    if autocorrelation[0] <= 0:
        logger.warning('Flat novelty curve, using %s bpm.', prior_center_bpm)
        return fallback
    autocorrelation = autocorrelation / autocorrelation[0]

    lags = np.arange(min_lag, max_lag + 1)
    scores = autocorrelation[lags] * _tempo_prior(
        bpm=60.0 / (hop * lags),
        center_bpm=prior_center_bpm,
        sigma_octaves=prior_sigma_octaves,
    )
    best = int(np.argmax(scores))
    positive = scores[scores > 0].sum()
    if positive <= 0:
        return fallback
    confidence = float(np.clip(scores[best] / positive, 0.0, 1.0))

    lag, _ = parabolic_interpolation(autocorrelation, int(lags[best]))
    bpm = float(np.clip(60.0 / (hop * lag), low, high))

    ambiguous = False
    for alternative in (2 * lags[best], lags[best] / 2):
        index = int(round(alternative)) - min_lag
        if 0 <= index < scores.shape[0] and index != best and scores[index] >= (1 - ambiguity_ratio) * scores[best]:
            ambiguous = True
            logger.warning('Tempo %.1f bpm is ambiguous, %.1f bpm scores within %d%%.',
                           bpm, 60.0 / (hop * lags[index]), int(round(100 * ambiguity_ratio)))
    logger.info('Estimated tempo: %.2f bpm (confidence %.3f)', bpm, confidence)
    return TempoEstimate(bpm=bpm, confidence=confidence, ambiguous=ambiguous)


def onset_pulses(curve: NoveltyCurve, onsets: OnsetList, width_frames: int = PULSE_WIDTH_FRAMES) -> NoveltyCurve:
    """
    Replace the novelty curve by equal pulses at the picked onsets.

    Every onset gets the same weight, however far the previous note had faded.

    :param curve:
        The novelty curve the onsets were picked from.
    :param onsets:
        The onsets.
    :param width_frames:
        The width of the Hann window of every pulse, odd.

    :return:
        A peak-normalized curve on the frames of the input curve.
    """
    if width_frames < 1 or width_frames % 2 == 0:
        raise ValueError(f'Pulse width must be a positive odd number of frames, got {width_frames}.')
    pulses = np.zeros(len(curve))
    if len(curve) > 0 and len(onsets) > 0:
        frames = np.rint((onsets.times_s - curve.frame_times_s[0]) / curve.hop_length_s).astype(int)
        pulses[frames[(frames >= 0) & (frames < len(curve))]] = 1.0
        pulses = np.maximum(fftconvolve(pulses, hann(width_frames), mode='same'), 0.0)
        peak = pulses.max()
        if peak > 0:
            pulses = pulses / peak
    return dataclasses.replace(curve, values=pulses)


def octave_corrected_tempo(estimate: TempoEstimate, reference_bpm: float) -> TempoEstimate:
    """Scale the estimate by the power of two that brings it closest to the reference tempo."""
    exponent = int(round(math.log2(reference_bpm / estimate.bpm)))
    return TempoEstimate(bpm=estimate.bpm * 2.0 ** exponent, confidence=estimate.confidence, overridden=True)


def note_durations(
    onsets: OnsetList,
    buffer: AudioBuffer,
    spec: FrameSpec = DEFAULT_FRAME_SPEC,
    end_threshold: float = END_THRESHOLD,
) -> List[Tuple[float, float]]:
    """
    Compute note durations from the onsets.

    Every note lasts until the next onset. The last note ends at the latest frame whose local energy reaches
    end_threshold times the peak energy after the last onset, found by scanning backward from the end of the buffer.

    :param onsets:
        The onsets, non-empty.
    :param buffer:
        The signal, for the energy of the last note.
    :param spec:
        The framing of the local energy.
    :param end_threshold:
        The relative energy threshold of the last note's end.

    :return:
        Pairs (onset_s, duration_s).
    """
    if len(onsets) == 0:
        raise ValueError('Need at least one onset.')
    times = onsets.times_s.tolist()
    result = [(start, end - start) for start, end in zip(times[:-1], times[1:])]

    last = times[-1]
    hop = spec.hop_length_s
    energy = local_energy(buffer=buffer, spec=spec)
    after = energy.frame_times_s >= last - 1.0e-9
    end = last
    if after.any():
        tail = energy.energies[after]
        peak = tail.max()
        if peak > 0:
            above = np.flatnonzero(tail >= end_threshold * peak)
            end = energy.frame_times_s[after][above[-1]]
    result.append((last, max(end - last, hop)))
    return result


def quantize_beats(
    notes: Sequence[Tuple[float, float]],
    tempo: TempoEstimate,
    grid: Fraction = GRID,
) -> List[TimedNote]:
    """
    Convert durations to beats and round them to the grid.

    Halfway cases round up; no note gets less than one grid unit.

    :param notes:
        Pairs (onset_s, duration_s).
    :param tempo:
        The tempo.
    :param grid:
        The grid in beats, one of 1/8, 1/4, 1/2 and 1.
    """
    grid = Fraction(grid)
    if grid not in ALLOWED_GRIDS:
        raise ValueError(f'Grid must be one of {[str(g) for g in ALLOWED_GRIDS]}, got {grid}.')
    result = []
    for onset, duration in notes:
        beats_raw = duration * tempo.bpm / 60.0
        steps = math.floor(beats_raw / grid + 0.5)
        result.append(TimedNote(
            onset_s=onset,
            duration_s=duration,
            beats_raw=beats_raw,
            beats_quantized=max(grid, steps * grid),
        ))
    return result


def timed_notes(
    onsets: OnsetList,
    buffer: AudioBuffer,
    tempo: TempoEstimate,
    spec: FrameSpec = DEFAULT_FRAME_SPEC,
    end_threshold: float = END_THRESHOLD,
    grid: Optional[Fraction] = None,
) -> List[TimedNote]:
    """Durations followed by quantization."""
    return quantize_beats(
        notes=note_durations(onsets=onsets, buffer=buffer, spec=spec, end_threshold=end_threshold),
        tempo=tempo,
        grid=GRID if grid is None else grid,
    )
