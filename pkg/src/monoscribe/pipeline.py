"""
The transcription pipeline and its evaluation on synthesized references.

audio -> local energy -> novelty -> onsets -> tempo (from onset pulses) -> durations -> beats -> per-note pitch -> score
"""
import dataclasses
import logging
import pathlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Collection, Mapping, Optional, Sequence, Tuple, Union

import pandas
from tqdm import tqdm

from .audio import AudioBuffer, FrameSpec
from .evaluation import ErrorReport, error_rates
from .onset import PeakPickParams, energy_novelty, local_energy, novelty_frame, pick_onsets
from .pitch import PitchRangeError, YinParams, f0_to_midi, note_pitch, pitch_track
from .score import NoteEvent, ScoreModel
from .settings import (
    AMP_THRESHOLD, DEFAULT_SAMPLE_RATE, END_THRESHOLD, GAMMA, GRID, HOP_LENGTH_S, MIN_SEPARATION_S,
    ROBUSTNESS_TEMPOS, TIME_SIGNATURE, WINDOW_LENGTH_S, YIN_THRESHOLD, YIN_WINDOW_LENGTH_S,
)
from .synthesis import RefScore, ToneModel, read_reference, render
from .tempo import (
    TempoEstimate, estimate_tempo, note_durations, octave_corrected_tempo, onset_pulses, quantize_beats,
)

logger = logging.getLogger(__name__)


class NoNotesFoundError(RuntimeError):
    """The transcription is empty."""

    def __init__(self, message: str = 'no notes found'):
        super().__init__(message)


@dataclass(frozen=True)
class PipelineConfig:
    """All parameters of the transcription pipeline."""

    window_length_s: float = WINDOW_LENGTH_S
    hop_length_s: float = HOP_LENGTH_S
    gamma: float = GAMMA
    amp_threshold: float = AMP_THRESHOLD
    min_separation_s: float = MIN_SEPARATION_S
    yin_window_length_s: float = YIN_WINDOW_LENGTH_S
    yin_threshold: float = YIN_THRESHOLD
    grid: Fraction = GRID
    #: bypasses the tempo estimation
    tempo_bpm: Optional[float] = None
    #: 4/4 with a warning if not given
    time_signature: Optional[Tuple[int, int]] = None
    end_threshold: float = END_THRESHOLD

    def frame_spec(self) -> FrameSpec:
        return FrameSpec(window_length_s=self.window_length_s, hop_length_s=self.hop_length_s, window_kind='hann')

    def peak_params(self) -> PeakPickParams:
        return PeakPickParams(amplitude_threshold=self.amp_threshold, min_separation_s=self.min_separation_s)

    def yin_params(self) -> YinParams:
        return YinParams(window_length_s=self.yin_window_length_s, threshold=self.yin_threshold)

    def replace(self, **changes: Any) -> 'PipelineConfig':
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Mapping[str, Any]:
        """The parameters as loggable values."""
        data = dataclasses.asdict(self)
        data['grid'] = str(self.grid)
        if self.time_signature is not None:
            data['time_signature'] = '{}/{}'.format(*self.time_signature)
        return data


def estimate_buffer_tempo(buffer: AudioBuffer, config: Optional[PipelineConfig] = None) -> TempoEstimate:
    """Estimate the tempo of a recording from its onsets, ignoring any override."""
    config = config or PipelineConfig()
    curve = energy_novelty(local_energy(buffer=buffer, spec=config.frame_spec()), gamma=config.gamma)
    return estimate_tempo(onset_pulses(curve=curve, onsets=pick_onsets(curve=curve, params=config.peak_params())))


def transcribe(buffer: AudioBuffer, config: Optional[PipelineConfig] = None) -> ScoreModel:
    """
    Transcribe a monophonic recording.

    :param buffer:
        The recording.
    :param config:
        The pipeline parameters, defaults to PipelineConfig().

    :return:
        The score. Notes without a detectable pitch are skipped with a warning.

    :raises NoNotesFoundError:
        If no onset is found, or no note has a pitch.
    """
    config = config or PipelineConfig()
    spec = config.frame_spec()
    warnings = []

    curve = energy_novelty(local_energy(buffer=buffer, spec=spec), gamma=config.gamma)
    onsets = pick_onsets(curve=curve, params=config.peak_params())
    if len(onsets) == 0:
        raise NoNotesFoundError()
    logger.info('Detected %d onsets', len(onsets))

    if config.tempo_bpm is not None:
        tempo = TempoEstimate.override(config.tempo_bpm)
    else:
        tempo = estimate_tempo(onset_pulses(curve=curve, onsets=onsets))
        if tempo.ambiguous:
            warnings.append(f'tempo {tempo.bpm:.1f} bpm may be off by a factor of two')

    notes = quantize_beats(
        notes=note_durations(onsets=onsets, buffer=buffer, spec=spec, end_threshold=config.end_threshold),
        tempo=tempo,
        grid=config.grid,
    )

    yin = config.yin_params()
    events = []
    for i, note in enumerate(notes):
        f0 = note_pitch(buffer=buffer, note_span=(note.onset_s, note.onset_s + note.duration_s), params=yin)
        try:
            midi, _ = f0_to_midi(f0)
        except PitchRangeError:
            message = f'note {i} at {note.onset_s:.3f} s has no detectable pitch, skipped'
            logger.warning(message)
            warnings.append(message)
            continue
        events.append(NoteEvent(
            onset_s=note.onset_s,
            duration_s=note.duration_s,
            f0_hz=f0,
            midi=midi,
            beats=note.beats_quantized,
        ))
    if not events:
        raise NoNotesFoundError()

    time_signature = config.time_signature
    if time_signature is None:
        time_signature = TIME_SIGNATURE
        message = 'no time signature given, assuming {}/{}'.format(*TIME_SIGNATURE)
        logger.warning(message)
        warnings.append(message)
    return ScoreModel(tempo_bpm=tempo.bpm, time_signature=time_signature, events=events, warnings=warnings)


def debug_frames(
    buffer: AudioBuffer,
    config: Optional[PipelineConfig] = None,
) -> Tuple[pandas.DataFrame, pandas.DataFrame]:
    """
    Frame-wise intermediate curves.

    :return:
        The local energy and novelty per frame, and the pitch track.
    """
    config = config or PipelineConfig()
    novelty = novelty_frame(buffer=buffer, spec=config.frame_spec(), gamma=config.gamma)
    return novelty, pitch_track(buffer=buffer, params=config.yin_params()).to_frame()


def evaluate_reference(
    reference: RefScore,
    config: Optional[PipelineConfig] = None,
    tone: Optional[ToneModel] = None,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    correct_tempo_octave: bool = False,
) -> Tuple[ErrorReport, ScoreModel]:
    """
    Render a reference, transcribe the rendering and compare.

    :param reference:
        The reference score. Its time signature is used unless the config sets one.
    :param config:
        The pipeline parameters.
    :param tone:
        The synthesizer tone.
    :param sample_rate:
        The rendering sample rate.
    :param correct_tempo_octave:
        Replace the estimated tempo by its power-of-two multiple closest to the reference tempo.

    :return:
        The error report and the transcription.
    """
    config = config or PipelineConfig()
    if config.time_signature is None:
        config = config.replace(time_signature=reference.time_signature)
    buffer = render(score=reference, tone=tone, sample_rate=sample_rate)
    if correct_tempo_octave and config.tempo_bpm is None:
        corrected = octave_corrected_tempo(estimate_buffer_tempo(buffer, config), reference_bpm=reference.tempo_bpm)
        config = config.replace(tempo_bpm=corrected.bpm)
    try:
        detected = transcribe(buffer=buffer, config=config)
    except NoNotesFoundError:
        detected = ScoreModel(tempo_bpm=reference.tempo_bpm, time_signature=reference.time_signature)
    return error_rates(reference=reference, detected=detected), detected


def _report_row(report: ErrorReport) -> Mapping[str, Any]:
    return dict(
        n_original=report.n_original,
        n_detected=report.n_detected,
        note_error_pct=report.note_error_pct,
        pitch_error_pct=report.pitch_error_pct,
        beat_error_pct=report.beat_error_pct,
        octave_error_count=report.octave_error_count,
    )


def evaluate_corpus(
    paths: Collection[Union[str, pathlib.Path]],
    config: Optional[PipelineConfig] = None,
    tone: Optional[ToneModel] = None,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    correct_tempo_octave: bool = True,
) -> pandas.DataFrame:
    """
    Evaluate the pipeline on a corpus of reference scores.

    :return:
        A dataframe with one row per melody, and columns ["melody", "reference_bpm", "detected_bpm", "n_original",
        "n_detected", "note_error_pct", "pitch_error_pct", "beat_error_pct", "octave_error_count"].
    """
    rows = []
    for path in tqdm(sorted(map(pathlib.Path, paths)), unit='melody'):
        reference = read_reference(path)
        report, detected = evaluate_reference(
            reference=reference,
            config=config,
            tone=tone,
            sample_rate=sample_rate,
            correct_tempo_octave=correct_tempo_octave,
        )
        rows.append(dict(
            melody=path.stem,
            reference_bpm=reference.tempo_bpm,
            detected_bpm=detected.tempo_bpm,
            **_report_row(report),
        ))
    return pandas.DataFrame(data=rows)


def evaluate_tempo_robustness(
    paths: Collection[Union[str, pathlib.Path]],
    tempos: Sequence[float] = ROBUSTNESS_TEMPOS,
    config: Optional[PipelineConfig] = None,
    tone: Optional[ToneModel] = None,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    correct_tempo_octave: bool = True,
) -> pandas.DataFrame:
    """
    Evaluate the pipeline on the same melodies played at several tempos.

    :return:
        A dataframe with one row per tempo and the error rates averaged over the melodies, columns ["tempo_bpm",
        "num_melodies", "note_error_pct", "pitch_error_pct", "beat_error_pct"].
    """
    references = [read_reference(path) for path in sorted(map(pathlib.Path, paths))]
    rows = []
    for tempo in tqdm(tempos, unit='tempo'):
        for reference in references:
            report, _ = evaluate_reference(
                reference=reference.with_tempo(tempo),
                config=config,
                tone=tone,
                sample_rate=sample_rate,
                correct_tempo_octave=correct_tempo_octave,
            )
            rows.append(dict(tempo_bpm=tempo, **_report_row(report)))
    df = pandas.DataFrame(data=rows)
    return df.groupby(by='tempo_bpm').agg(
        num_melodies=('n_original', 'size'),
        note_error_pct=('note_error_pct', 'mean'),
        pitch_error_pct=('pitch_error_pct', 'mean'),
        beat_error_pct=('beat_error_pct', 'mean'),
    ).reset_index()
