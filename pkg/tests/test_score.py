"""Tests for the score model and its serializations."""
import json
import pathlib
import unittest
import xml.etree.ElementTree as ET
from fractions import Fraction
from typing import Mapping
from unittest import mock

import pytest

from monoscribe.settings import CORPUS_ROOT
from monoscribe.score import (
    EMPTY_SCORE_WARNING, NoteEvent, ScoreModel, decompose_duration, engrave, lilypond_pitch, parse_score,
    read_score_json, score_to_dict, split_measures, to_json, to_lilypond, to_musicxml,
)
from monoscribe.synthesis import midi_to_f0, read_reference

GOLDEN = pathlib.Path(__file__).resolve().parent / 'golden'


def _score(tempo_bpm: float, *notes, time_signature=(4, 4), warnings=()) -> ScoreModel:
    """Consecutive notes given as (midi, beats)."""
    events = []
    onset = 0.0
    for midi, beats in notes:
        duration = float(Fraction(beats)) * 60.0 / tempo_bpm
        events.append(NoteEvent(onset_s=onset, duration_s=duration, f0_hz=midi_to_f0(midi), midi=midi, beats=beats))
        onset += duration
    return ScoreModel(tempo_bpm=tempo_bpm, time_signature=time_signature, events=events, warnings=list(warnings))


GOLDEN_SCORES: Mapping[str, ScoreModel] = {
    'single_quarter': _score(120, (60, 1)),
    'tied_two_and_three_quarters': _score(120, (67, Fraction(11, 4)), (64, Fraction(5, 4))),
    'three_four_quarters': _score(90, *((m, 1) for m in (60, 62, 64, 65, 67, 69)), time_signature=(3, 4)),
    'sharps_and_octaves': _score(100, (78, 3), (49, Fraction(3, 2)), (21, Fraction(1, 2)), (108, 6)),
    'empty': _score(120),
}


class DecomposeTests(unittest.TestCase):
    """Tests for decompose_duration."""

    measure = Fraction(4)

    def test_two_and_three_quarters(self):
        atoms = decompose_duration(Fraction(11, 4), Fraction(0), self.measure)
        assert atoms == [Fraction(2), Fraction(1, 2), Fraction(1, 4)]

    def test_single_beat(self):
        for position in (0, 1, Fraction(1, 2), 3):
            assert decompose_duration(Fraction(1), Fraction(position), self.measure) == [Fraction(1)]

    def test_barline(self):
        assert decompose_duration(Fraction(1), Fraction(7, 2), self.measure) == [Fraction(1, 2), Fraction(1, 2)]

    def test_dotted(self):
        assert decompose_duration(Fraction(3), Fraction(0), self.measure) == [Fraction(3)]
        assert decompose_duration(Fraction(6), Fraction(0), Fraction(6)) == [Fraction(6)]

    def test_long_note(self):
        atoms = decompose_duration(Fraction(9), Fraction(2), self.measure)
        assert atoms == [Fraction(2), Fraction(4), Fraction(3)]

    def test_sums(self):
        for eighths in range(1, 80):
            for position in range(0, 24):
                beats = Fraction(eighths, 8)
                atoms = decompose_duration(beats, Fraction(position, 8), Fraction(3))
                assert sum(atoms) == beats

    def test_invalid(self):
        for beats in (Fraction(0), Fraction(-1), Fraction(1, 3), Fraction(1, 16)):
            with self.assertRaises(ValueError):
                decompose_duration(beats, Fraction(0), self.measure)


class ScoreModelTests(unittest.TestCase):
    """Tests for ScoreModel."""

    def test_validation(self):
        with self.assertRaises(ValueError):
            ScoreModel(tempo_bpm=120, time_signature=(4, 3))
        with self.assertRaises(ValueError):
            ScoreModel(tempo_bpm=0)
        first = NoteEvent(onset_s=0.0, duration_s=0.5, f0_hz=440.0, midi=69, beats=1)
        overlapping = NoteEvent(onset_s=0.4, duration_s=0.5, f0_hz=440.0, midi=69, beats=1)
        with self.assertRaises(ValueError):
            ScoreModel(tempo_bpm=120, events=[first, overlapping])
        with self.assertRaises(ValueError):
            ScoreModel(tempo_bpm=120, events=[first, first])

    def test_beats(self):
        score = GOLDEN_SCORES['tied_two_and_three_quarters']
        assert score.total_beats == 4
        assert ScoreModel(tempo_bpm=90, time_signature=(6, 8)).measure_beats == 3

    def test_split_measures(self):
        measures = split_measures(GOLDEN_SCORES['three_four_quarters'])
        assert len(measures) == 2
        assert all(sum(atom.beats for atom in measure) == 3 for measure in measures)


def test_lilypond_pitch():
    """Test absolute LilyPond pitch names."""
    assert lilypond_pitch(60) == "c'"
    assert lilypond_pitch(59) == 'b'
    assert lilypond_pitch(48) == 'c'
    assert lilypond_pitch(47) == 'b,'
    assert lilypond_pitch(70) == "ais'"
    assert lilypond_pitch(21) == 'a,,,'
    assert lilypond_pitch(108) == "c'''''"


@pytest.mark.parametrize('name', sorted(GOLDEN_SCORES))
def test_lilypond_golden(name):
    """The LilyPond output is byte-identical to the golden file."""
    expected = (GOLDEN / f'{name}.ly').read_text(encoding='utf8')
    assert to_lilypond(GOLDEN_SCORES[name]) == expected


@pytest.mark.parametrize('name', sorted(GOLDEN_SCORES))
def test_musicxml_golden(name):
    """The MusicXML output is byte-identical to the golden file."""
    expected = (GOLDEN / f'{name}.musicxml').read_text(encoding='utf8')
    assert to_musicxml(GOLDEN_SCORES[name]) == expected


def _measure_divisions(document: str):
    root = ET.fromstring(document.split('\n', 2)[2])
    divisions = int(root.find('part/measure/attributes/divisions').text)
    return divisions, [
        sum(int(duration.text) for duration in measure.iter('duration'))
        for measure in root.iter('measure')
    ]


class MusicXMLTests(unittest.TestCase):
    """Structural tests for to_musicxml."""

    def test_tie_durations(self):
        document = to_musicxml(GOLDEN_SCORES['tied_two_and_three_quarters'])
        root = ET.fromstring(document.split('\n', 2)[2])
        notes = root.findall('part/measure/note')
        g_notes = [note for note in notes if note.find('pitch/step').text == 'G']
        assert sum(int(note.find('duration').text) for note in g_notes) == 11
        assert [tie.get('type') for tie in g_notes[0].findall('tie')] == ['start']
        assert [tie.get('type') for tie in g_notes[-1].findall('tie')] == ['stop']

    def test_thirty_seconds(self):
        document = to_musicxml(_score(120, (60, Fraction(1, 8)), (62, Fraction(7, 8))))
        divisions, sums = _measure_divisions(document)
        assert divisions == 8
        assert sums == [8]

    def test_corpus_measures(self):
        for path in sorted(CORPUS_ROOT.glob('*.json')):
            score = read_score_json(path)
            divisions, sums = _measure_divisions(to_musicxml(score))
            numerator, denominator = score.time_signature
            measure = divisions * 4 * numerator // denominator
            assert all(total == measure for total in sums[:-1]), path.stem
            assert 0 < sums[-1] <= measure

    def test_out_of_range_warning(self):
        score = ScoreModel(tempo_bpm=120, events=[
            NoteEvent(onset_s=0.0, duration_s=0.5, f0_hz=16.35, midi=12, beats=1),
        ])
        with self.assertLogs('monoscribe.score', level='WARNING'):
            document = to_musicxml(score)
        assert '<!-- warning: note 0 (MIDI 12) lies outside the piano range -->' in document
        assert '<octave>0</octave>' in document

    def test_deterministic(self):
        score = GOLDEN_SCORES['sharps_and_octaves']
        assert to_musicxml(score) == to_musicxml(score)


class JsonTests(unittest.TestCase):
    """Tests for the JSON serialization."""

    def test_reference_reader(self):
        score = GOLDEN_SCORES['sharps_and_octaves']
        reference = read_reference(to_json(score))
        assert [(note.midi, note.beats) for note in reference.notes] == [
            (event.midi, event.beats) for event in score.events
        ]
        assert reference.tempo_bpm == 100

    def test_fields(self):
        data = json.loads(to_json(GOLDEN_SCORES['tied_two_and_three_quarters']))
        assert data['time_signature'] == [4, 4]
        assert data['notes'][0] == dict(midi=67, beats='11/4', f0_hz=391.995, onset_s=0.0, duration_s=1.375)
        assert data['notes'][1]['beats'] == '5/4'
        assert data['warnings'] == []

    def test_empty(self):
        data = json.loads(to_json(GOLDEN_SCORES['empty']))
        assert data['notes'] == []

    def test_round_trip(self):
        score = GOLDEN_SCORES['sharps_and_octaves']
        parsed = parse_score(score_to_dict(score))
        assert [(e.midi, e.beats) for e in parsed.events] == [(e.midi, e.beats) for e in score.events]
        assert parsed.time_signature == score.time_signature

    def test_reference_input(self):
        score = read_score_json('{"tempo_bpm": 120, "notes": [{"midi": 69, "beats": 1}, {"midi": 71, "beats": "1/2"}]}')
        assert [e.onset_s for e in score.events] == [0.0, 0.5]
        assert score.events[1].duration_s == 0.25
        assert score.events[0].f0_hz == 440.0

    def test_malformed(self):
        with self.assertRaises(ValueError):
            parse_score(dict(notes=[]))


class EngraveTests(unittest.TestCase):
    """Tests for the external engraver call."""

    def test_missing_engraver(self):
        with self.assertLogs('monoscribe.score', level='WARNING'):
            assert engrave(ly_path='score.ly', engraver='surely-not-an-engraver') is None

    def test_command(self):
        completed = mock.Mock(returncode=0, stderr=b'')
        with mock.patch('monoscribe.score.shutil.which', return_value='/usr/bin/lilypond'), \
                mock.patch('monoscribe.score.subprocess.run', return_value=completed) as run:
            image = engrave(ly_path=pathlib.Path('out') / 'score.ly')
        assert image == pathlib.Path('out') / 'score.png'
        assert run.call_args[0][0] == ['/usr/bin/lilypond', '--png', '-o', str(pathlib.Path('out') / 'score'),
                                       str(pathlib.Path('out') / 'score.ly')]

    def test_failure(self):
        completed = mock.Mock(returncode=1, stderr=b'error: syntax')
        with mock.patch('monoscribe.score.shutil.which', return_value='/usr/bin/lilypond'), \
                mock.patch('monoscribe.score.subprocess.run', return_value=completed):
            assert engrave(ly_path='score.ly') is None


def test_empty_warning_in_lilypond():
    """Empty scores still produce a complete file, with a warning."""
    text = to_lilypond(GOLDEN_SCORES['empty'])
    assert f'% warning: {EMPTY_SCORE_WARNING}' in text
    assert text.rstrip().endswith('}')
