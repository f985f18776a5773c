"""
Additive synthesis of reference scores.

Renders a reference score to audio with piano-like tones so that the transcription pipeline can be checked end-to-end
against known onsets, pitches and beat lengths.
"""
import json
import logging
import math
import pathlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .audio import AudioBuffer
from .settings import (
    ALLOWED_DENOMINATORS, ATTACK_S, DECAY_RATE_PER_S, DEFAULT_SAMPLE_RATE, HARMONIC_ROLLOFF_DB, N_HARMONICS,
    PIANO_MIDI_RANGE, RELEASE_S, SUSTAIN_LEVEL, TAIL_S, TEMPO_LIMITS_BPM, TIME_SIGNATURE,
)
from .utils import format_fraction, parse_fraction, parse_time_signature

logger = logging.getLogger(__name__)


def midi_to_f0(midi: float) -> float:
    """Equal-temperament frequency of a MIDI note number, A4 = 69 = 440 Hz."""
    return 440.0 * 2.0 ** ((midi - 69) / 12)


@dataclass(frozen=True)
class RefNote:
    """A note of a reference score."""

    #: The MIDI note number, within the piano range.
    midi: int

    #: The length in beats.
    beats: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'beats', parse_fraction(self.beats))
        low, high = PIANO_MIDI_RANGE
        if int(self.midi) != self.midi or not low <= self.midi <= high:
            raise ValueError(f'MIDI note must be an integer in [{low}, {high}], got {self.midi}.')
        object.__setattr__(self, 'midi', int(self.midi))
        if self.beats <= 0:
            raise ValueError(f'Beat count must be positive, got {self.beats}.')


@dataclass(frozen=True)
class RefScore:
    """A monophonic reference score."""

    tempo_bpm: float
    time_signature: Tuple[int, int] = TIME_SIGNATURE
    notes: Tuple[RefNote, ...] = ()

    def __post_init__(self):
        low, high = TEMPO_LIMITS_BPM
        if not low <= self.tempo_bpm <= high:
            raise ValueError(f'Tempo must lie in [{low}, {high}] bpm, got {self.tempo_bpm}.')
        numerator, denominator = self.time_signature
        if denominator not in ALLOWED_DENOMINATORS:
            raise ValueError(f'Time signature denominator must be one of {ALLOWED_DENOMINATORS}, got {denominator}.')
        object.__setattr__(self, 'time_signature', (int(numerator), int(denominator)))
        object.__setattr__(self, 'notes', tuple(self.notes))

    def __len__(self) -> int:
        return len(self.notes)

    @property
    def total_beats(self) -> Fraction:
        """The summed length of all notes in beats."""
        return sum((note.beats for note in self.notes), Fraction(0))

    def with_tempo(self, tempo_bpm: float) -> 'RefScore':
        """The same notes at another tempo."""
        return RefScore(tempo_bpm=tempo_bpm, time_signature=self.time_signature, notes=self.notes)


@dataclass(frozen=True)
class ToneModel:
    """
    Envelope and spectrum of the synthetic piano tone.

    The amplitude envelope is a linear attack ramp followed by a pure exponential decay. A sustain level above zero
    makes the decay level off, a release time fades the note out linearly before the next one starts.
    """

    n_harmonics: int = N_HARMONICS
    harmonic_rolloff_db_per_partial: float = HARMONIC_ROLLOFF_DB
    attack_s: float = ATTACK_S
    decay_rate_per_s: float = DECAY_RATE_PER_S
    sustain_level: float = SUSTAIN_LEVEL
    release_s: float = RELEASE_S
    tail_s: float = TAIL_S

    def __post_init__(self):
        if self.n_harmonics < 1:
            raise ValueError(f'Need at least one harmonic, got {self.n_harmonics}.')
        if self.harmonic_rolloff_db_per_partial < 0:
            raise ValueError('Harmonic rolloff must be non-negative.')
        if min(self.attack_s, self.decay_rate_per_s, self.release_s, self.tail_s) < 0:
            raise ValueError('Attack, decay, release and tail must be non-negative.')
        if not 0 <= self.sustain_level <= 1:
            raise ValueError(f'Sustain level must lie in [0, 1], got {self.sustain_level}.')

    def partial_amplitudes(self) -> np.ndarray:
        """Linear amplitude of every partial, the fundamental has amplitude one."""
        return 10.0 ** (-self.harmonic_rolloff_db_per_partial * np.arange(self.n_harmonics) / 20.0)

    def envelope(self, num_samples: int, sample_rate: int) -> np.ndarray:
        """The amplitude envelope of a note lasting num_samples samples."""
        t = np.arange(num_samples) / sample_rate
        duration = num_samples / sample_rate
        envelope = self.sustain_level + (1.0 - self.sustain_level) * np.exp(-self.decay_rate_per_s * t)
        if self.attack_s > 0:
            envelope *= np.minimum(1.0, t / self.attack_s)
        # the release fits in whatever the attack leaves over
        release = min(self.release_s, max(duration - self.attack_s, 0.0))
        if release > 0:
            envelope *= np.clip((duration - t) / release, 0.0, 1.0)
        return envelope


def _beat_to_sample(beats: Fraction, tempo_bpm: float, sample_rate: int) -> int:
    return math.floor(beats * 60 * sample_rate / Fraction(tempo_bpm))


def note_boundaries(score: RefScore, sample_rate: int) -> np.ndarray:
    """
    Sample positions of all note starts, followed by the end of the last note.

    :return: shape: (num_notes + 1,)
    """
    positions = [Fraction(0)]
    for note in score.notes:
        positions.append(positions[-1] + note.beats)
    return np.asarray([_beat_to_sample(p, score.tempo_bpm, sample_rate) for p in positions], dtype=np.int64)


def onset_times(score: RefScore, sample_rate: int = DEFAULT_SAMPLE_RATE) -> np.ndarray:
    """The onset time of every note as rendered, in seconds."""
    return note_boundaries(score, sample_rate)[:-1] / sample_rate


def render(
    score: RefScore,
    tone: Optional[ToneModel] = None,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> AudioBuffer:
    """
    Render a reference score with additive synthesis.

    Every note decays until the start of the next one, the last note until its nominal end, where it is cut off like a
    released key. Partials above the Nyquist frequency are dropped.

    :param score:
        The score, non-empty.
    :param tone:
        The tone model, defaults to ToneModel().
    :param sample_rate:
        The sample rate in Hz.

    :return:
        The peak-normalized rendering, followed by a silent tail of tone.tail_s seconds.
    """
    if len(score) == 0:
        raise ValueError('Cannot render an empty score.')
    tone = tone or ToneModel()
    boundaries = note_boundaries(score, sample_rate)
    shortest = np.diff(boundaries).min() / sample_rate
    if tone.attack_s >= shortest:
        raise ValueError(f'Attack of {tone.attack_s} s does not fit into the shortest note ({shortest:.4f} s).')

    amplitudes = tone.partial_amplitudes()
    output = np.zeros(boundaries[-1] + int(round(tone.tail_s * sample_rate)))
    dropped = 0
    for note, start, end in zip(score.notes, boundaries[:-1], boundaries[1:]):
        f0 = midi_to_f0(note.midi)
        t = np.arange(end - start) / sample_rate
        segment = np.zeros_like(t)
        for harmonic, amplitude in enumerate(amplitudes, start=1):
            if harmonic * f0 >= sample_rate / 2:
                dropped += 1
                continue
            segment += amplitude * np.sin(2 * np.pi * harmonic * f0 * t)
        output[start:end] = segment * tone.envelope(num_samples=end - start, sample_rate=sample_rate)
    if dropped:
        logger.warning('Dropped %d partials above the Nyquist frequency.', dropped)

    peak = np.abs(output).max()
    if peak > 0:
        output /= peak
    return AudioBuffer(samples=output, sample_rate=sample_rate)


def parse_reference(data: Mapping[str, Any]) -> RefScore:
    """
    Build a reference score from its JSON object.

    Unknown fields, e.g. the f0_hz and onset_s of transcriptions, are ignored.
    """
    try:
        notes = [
            RefNote(midi=note['midi'], beats=parse_fraction(note['beats']))
            for note in data['notes']
        ]
        return RefScore(
            tempo_bpm=float(data['tempo_bpm']),
            time_signature=parse_time_signature(data.get('time_signature', TIME_SIGNATURE)),
            notes=tuple(notes),
        )
    except (KeyError, TypeError) as error:
        raise ValueError(f'Malformed reference score: {error!r}') from error


def read_reference(source: Union[str, pathlib.Path]) -> RefScore:
    """Read a reference score from a JSON file, or from JSON text."""
    if isinstance(source, pathlib.Path) or not source.lstrip().startswith('{'):
        source = pathlib.Path(source).read_text(encoding='utf8')
    return parse_reference(json.loads(source))


def reference_to_dict(score: RefScore) -> Mapping[str, Any]:
    """The JSON object of a reference score."""
    return dict(
        tempo_bpm=score.tempo_bpm,
        time_signature=list(score.time_signature),
        notes=[dict(midi=note.midi, beats=format_fraction(note.beats)) for note in score.notes],
    )


def reference_to_json(score: RefScore) -> str:
    """Serialize a reference score."""
    return json.dumps(reference_to_dict(score), indent=2) + '\n'


@dataclass
class RandomMelodySpec:
    """Parameters of random reference melodies."""

    min_notes: int = 8
    max_notes: int = 16
    tempo_range_bpm: Tuple[float, float] = (60.0, 180.0)
    #: two octaves from C4
    midi_range: Tuple[int, int] = (60, 84)
    beat_values: Sequence[Fraction] = field(default_factory=lambda: (Fraction(1), Fraction(3, 2), Fraction(2)))


def random_reference(
    rng: np.random.Generator,
    spec: Optional[RandomMelodySpec] = None,
) -> RefScore:
    """Draw a random melody."""
    spec = spec or RandomMelodySpec()
    num_notes = int(rng.integers(spec.min_notes, spec.max_notes + 1))
    tempo = float(np.round(rng.uniform(*spec.tempo_range_bpm), 1))
    low, high = spec.midi_range
    notes = tuple(
        RefNote(midi=int(rng.integers(low, high + 1)), beats=spec.beat_values[int(rng.integers(len(spec.beat_values)))])
        for _ in range(num_notes)
    )
    return RefScore(tempo_bpm=tempo, notes=notes)
