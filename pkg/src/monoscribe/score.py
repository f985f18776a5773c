"""
Score assembly and serialization to LilyPond, MusicXML and JSON.

All beat arithmetic uses fractions. One beat is a quarter note; notes that do not fit a single note value or cross a
barline are split into tied atoms.
"""
import json
import logging
import pathlib
import shutil
import subprocess
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, List, Mapping, Optional, Sequence, Tuple, Union

from .settings import ALLOWED_DENOMINATORS, LILYPOND_VERSION, PIANO_MIDI_RANGE, TIME_SIGNATURE
from .synthesis import midi_to_f0
from .utils import format_fraction, parse_fraction, parse_time_signature

logger = logging.getLogger(__name__)

#: note values available for a single notated atom, in beats
ATOMS = (
    Fraction(6), Fraction(4), Fraction(3), Fraction(2), Fraction(3, 2), Fraction(1),
    Fraction(1, 2), Fraction(1, 4), Fraction(1, 8),
)
FINEST_ATOM = Fraction(1, 8)

PITCH_CLASSES = ('c', 'cis', 'd', 'dis', 'e', 'f', 'fis', 'g', 'gis', 'a', 'ais', 'b')

_LILYPOND_DURATIONS = {
    Fraction(6): '1.',
    Fraction(4): '1',
    Fraction(3): '2.',
    Fraction(2): '2',
    Fraction(3, 2): '4.',
    Fraction(1): '4',
    Fraction(1, 2): '8',
    Fraction(1, 4): '16',
    Fraction(1, 8): '32',
}

# (type, dotted)
_MUSICXML_TYPES = {
    Fraction(6): ('whole', True),
    Fraction(4): ('whole', False),
    Fraction(3): ('half', True),
    Fraction(2): ('half', False),
    Fraction(3, 2): ('quarter', True),
    Fraction(1): ('quarter', False),
    Fraction(1, 2): ('eighth', False),
    Fraction(1, 4): ('16th', False),
    Fraction(1, 8): ('32nd', False),
}

_MUSICXML_HEADER = (
    '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
    '<!DOCTYPE score-partwise PUBLIC "-//Recordare//DTD MusicXML 3.1 Partwise//EN" '
    '"http://www.musicxml.org/dtds/partwise.dtd">\n'
)

EMPTY_SCORE_WARNING = 'no notes detected'

# serialized onsets and durations are rounded
_TIME_TOLERANCE = 1.0e-3


@dataclass(frozen=True)
class NoteEvent:
    """A transcribed note."""

    onset_s: float
    duration_s: float
    f0_hz: float
    midi: int
    beats: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'beats', parse_fraction(self.beats))
        if self.beats <= 0:
            raise ValueError(f'Beat count must be positive, got {self.beats}.')


@dataclass
class ScoreModel:
    """A monophonic score ready for serialization."""

    tempo_bpm: float
    time_signature: Tuple[int, int] = TIME_SIGNATURE
    events: Sequence[NoteEvent] = ()
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self):
        numerator, denominator = self.time_signature
        if numerator <= 0 or denominator not in ALLOWED_DENOMINATORS:
            raise ValueError(f'Invalid time signature {numerator}/{denominator}.')
        if not self.tempo_bpm > 0:
            raise ValueError(f'Tempo must be positive, got {self.tempo_bpm}.')
        self.events = tuple(self.events)
        for previous, current in zip(self.events, self.events[1:]):
            if current.onset_s <= previous.onset_s:
                raise ValueError(
                    f'Events must be strictly ordered by onset, got {previous.onset_s} then {current.onset_s}.'
                )
            if previous.onset_s + previous.duration_s > current.onset_s + _TIME_TOLERANCE:
                raise ValueError(f'Note at {previous.onset_s} s overlaps the note at {current.onset_s} s.')

    def __len__(self) -> int:
        return len(self.events)

    @property
    def measure_beats(self) -> Fraction:
        """The length of a measure in quarter-note beats."""
        numerator, denominator = self.time_signature
        return Fraction(4 * numerator, denominator)

    @property
    def total_beats(self) -> Fraction:
        return sum((event.beats for event in self.events), Fraction(0))


def decompose_duration(
    beats: Fraction,
    position_in_measure: Fraction,
    measure_beats: Fraction,
) -> List[Fraction]:
    """
    Split a note into notated atoms, to be tied in order.

    The note is first cut at the barlines. Each piece is then covered greedily with the largest fitting atom.

    :param beats:
        The note length, a positive multiple of 1/8.
    :param position_in_measure:
        The start of the note within its measure.
    :param measure_beats:
        The length of a measure.

    :return:
        The atom lengths, summing to beats.
    """
    beats = Fraction(beats)
    if beats <= 0 or (beats / FINEST_ATOM).denominator != 1:
        raise ValueError(f'Cannot notate a duration of {beats} beats.')
    position = Fraction(position_in_measure) % measure_beats
    atoms = []
    remaining = beats
    while remaining > 0:
        span = min(remaining, measure_beats - position)
        remaining -= span
        position = (position + span) % measure_beats
        while span > 0:
            atom = next(a for a in ATOMS if a <= span)
            atoms.append(atom)
            span -= atom
    return atoms


@dataclass(frozen=True)
class Atom:
    """A notated piece of a note."""

    midi: int
    beats: Fraction
    tie_stop: bool
    tie_start: bool


def split_measures(score: ScoreModel) -> List[List[Atom]]:
    """
    Lay out all notes as atoms in measures.

    :return:
        The measures, at least one; only the last one may be incomplete.
    """
    measure = score.measure_beats
    measures: List[List[Atom]] = [[]]
    position = Fraction(0)
    for event in score.events:
        atoms = decompose_duration(beats=event.beats, position_in_measure=position, measure_beats=measure)
        for i, beats in enumerate(atoms):
            if position == measure:
                measures.append([])
                position = Fraction(0)
            measures[-1].append(Atom(midi=event.midi, beats=beats, tie_stop=i > 0, tie_start=i < len(atoms) - 1))
            position += beats
    return measures


def _emission_warnings(score: ScoreModel) -> List[str]:
    warnings = list(score.warnings)
    if len(score) == 0:
        warnings.append(EMPTY_SCORE_WARNING)
    low, high = PIANO_MIDI_RANGE
    for i, event in enumerate(score.events):
        if not low <= event.midi <= high:
            warnings.append(f'note {i} (MIDI {event.midi}) lies outside the piano range')
    for message in warnings[len(score.warnings):]:
        logger.warning(message)
    return warnings


def _format_tempo(bpm: float) -> str:
    return str(int(round(bpm)))


def lilypond_pitch(midi: int) -> str:
    """Absolute LilyPond pitch with sharps, c' = MIDI 60."""
    octave = midi // 12 - 1
    marks = octave - 3
    return PITCH_CLASSES[midi % 12] + ("'" * marks if marks > 0 else ',' * -marks)


def to_lilypond(score: ScoreModel) -> str:
    """
    Write the score as LilyPond source.

    Warnings become comments at the top of the file. Every complete measure ends with a bar check.
    """
    lines = [f'\\version "{LILYPOND_VERSION}"', '']
    warnings = _emission_warnings(score)
    if warnings:
        lines.extend(f'% warning: {message}' for message in warnings)
        lines.append('')
    numerator, denominator = score.time_signature
    lines.extend([
        '\\score {',
        '  \\new Staff {',
        '    \\clef treble',
        f'    \\time {numerator}/{denominator}',
        f'    \\tempo 4 = {_format_tempo(score.tempo_bpm)}',
    ])
    for measure in split_measures(score):
        if not measure:
            continue
        tokens = [
            lilypond_pitch(atom.midi) + _LILYPOND_DURATIONS[atom.beats] + ('~' if atom.tie_start else '')
            for atom in measure
        ]
        if sum(atom.beats for atom in measure) == score.measure_beats:
            tokens.append('|')
        lines.append('    ' + ' '.join(tokens))
    lines.extend([
        '  }',
        '  \\layout { }',
        '}',
    ])
    return '\n'.join(lines) + '\n'


def _sub(parent: ET.Element, tag: str, text: Optional[str] = None, **attributes: str) -> ET.Element:
    element = ET.SubElement(parent, tag, attributes)
    if text is not None:
        element.text = text
    return element


def _musicxml_note(measure: ET.Element, atom: Atom, divisions: int) -> None:
    note = _sub(measure, 'note')
    pitch = _sub(note, 'pitch')
    name = PITCH_CLASSES[atom.midi % 12]
    _sub(pitch, 'step', name[0].upper())
    if name.endswith('is'):
        _sub(pitch, 'alter', '1')
    _sub(pitch, 'octave', str(atom.midi // 12 - 1))
    _sub(note, 'duration', str(int(atom.beats * divisions)))
    ties = [kind for kind, flag in (('stop', atom.tie_stop), ('start', atom.tie_start)) if flag]
    for kind in ties:
        _sub(note, 'tie', type=kind)
    kind, dotted = _MUSICXML_TYPES[atom.beats]
    _sub(note, 'type', kind)
    if dotted:
        _sub(note, 'dot')
    if ties:
        notations = _sub(note, 'notations')
        for kind in ties:
            _sub(notations, 'tied', type=kind)


def to_musicxml(score: ScoreModel) -> str:
    """
    Write the score as a MusicXML 3.1 partwise document.

    Durations are counted in 4 divisions per quarter note, 8 if the score uses 32nd notes.
    """
    warnings = _emission_warnings(score)
    measures = split_measures(score)
    finest = all((atom.beats * 4).denominator == 1 for measure in measures for atom in measure)
    divisions = 4 if finest else 8

    root = ET.Element('score-partwise', version='3.1')
    for message in warnings:
        root.append(ET.Comment(f' warning: {message} '))
    part_list = _sub(root, 'part-list')
    score_part = _sub(part_list, 'score-part', id='P1')
    _sub(score_part, 'part-name', 'Piano')
    part = _sub(root, 'part', id='P1')
    numerator, denominator = score.time_signature
    tempo = _format_tempo(score.tempo_bpm)
    for number, atoms in enumerate(measures, start=1):
        measure = _sub(part, 'measure', number=str(number))
        if number == 1:
            attributes = _sub(measure, 'attributes')
            _sub(attributes, 'divisions', str(divisions))
            key = _sub(attributes, 'key')
            _sub(key, 'fifths', '0')
            time = _sub(attributes, 'time')
            _sub(time, 'beats', str(numerator))
            _sub(time, 'beat-type', str(denominator))
            clef = _sub(attributes, 'clef')
            _sub(clef, 'sign', 'G')
            _sub(clef, 'line', '2')
            direction = _sub(measure, 'direction', placement='above')
            direction_type = _sub(direction, 'direction-type')
            metronome = _sub(direction_type, 'metronome')
            _sub(metronome, 'beat-unit', 'quarter')
            _sub(metronome, 'per-minute', tempo)
            _sub(direction, 'sound', tempo=tempo)
        for atom in atoms:
            _musicxml_note(measure=measure, atom=atom, divisions=divisions)
    ET.indent(root, space='  ')
    return _MUSICXML_HEADER + ET.tostring(root, encoding='unicode') + '\n'


def score_to_dict(score: ScoreModel) -> Mapping[str, Any]:
    """The JSON object of a score: the reference score format plus per-note timing and frequency."""
    return dict(
        tempo_bpm=score.tempo_bpm,
        time_signature=list(score.time_signature),
        notes=[
            dict(
                midi=event.midi,
                beats=format_fraction(event.beats),
                f0_hz=round(float(event.f0_hz), 3),
                onset_s=round(float(event.onset_s), 4),
                duration_s=round(float(event.duration_s), 4),
            )
            for event in score.events
        ],
        warnings=list(score.warnings),
    )


def to_json(score: ScoreModel) -> str:
    """Serialize a score to JSON."""
    return json.dumps(score_to_dict(score), indent=2) + '\n'


def parse_score(data: Mapping[str, Any]) -> ScoreModel:
    """
    Build a score from its JSON object.

    Reference scores are accepted as well: missing onsets and durations are derived from the beats and the tempo, a
    missing frequency from the MIDI number.
    """
    try:
        tempo = float(data['tempo_bpm'])
        seconds_per_beat = 60.0 / tempo
        events = []
        position = 0.0
        for note in data['notes']:
            beats = parse_fraction(note['beats'])
            midi = int(note['midi'])
            onset = float(note.get('onset_s', position))
            duration = float(note.get('duration_s', float(beats) * seconds_per_beat))
            events.append(NoteEvent(
                onset_s=onset,
                duration_s=duration,
                f0_hz=float(note.get('f0_hz', midi_to_f0(midi))),
                midi=midi,
                beats=beats,
            ))
            position = onset + duration
        return ScoreModel(
            tempo_bpm=tempo,
            time_signature=parse_time_signature(data.get('time_signature', TIME_SIGNATURE)),
            events=events,
            warnings=list(data.get('warnings', [])),
        )
    except (KeyError, TypeError) as error:
        raise ValueError(f'Malformed score: {error!r}') from error


def read_score_json(source: Union[str, pathlib.Path]) -> ScoreModel:
    """Read a score from a JSON file, or from JSON text."""
    if isinstance(source, pathlib.Path) or not source.lstrip().startswith('{'):
        source = pathlib.Path(source).read_text(encoding='utf8')
    return parse_score(json.loads(source))


def engrave(
    ly_path: Union[str, pathlib.Path],
    engraver: Union[str, pathlib.Path] = 'lilypond',
) -> Optional[pathlib.Path]:
    """
    Render LilyPond source to a PNG image with an external engraver.

    :param ly_path:
        The LilyPond source file.
    :param engraver:
        The engraver binary, a path or a name on the PATH.

    :return:
        The image path, or None if the engraver is missing or fails.
    """
    ly_path = pathlib.Path(ly_path)
    binary = shutil.which(str(engraver))
    if binary is None:
        logger.warning('Engraver %s not found, skipping the image output.', engraver)
        return None
    stem = ly_path.with_suffix('')
    completed = subprocess.run(
        [binary, '--png', '-o', str(stem), str(ly_path)],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        check=False,
    )
    if completed.returncode != 0:
        logger.warning(
            'Engraver exited with code %d: %s', completed.returncode, completed.stderr.decode(errors='replace'),
        )
        return None
    return stem.with_suffix('.png')
