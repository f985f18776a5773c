"""Tests for evaluation methods."""
import itertools
import json
import unittest
from fractions import Fraction
from typing import Iterator, List, Sequence

import numpy
import pytest

from monoscribe.evaluation import (
    AlignedPair, align, align_sequences, alignment_cost, error_rates, report_frame, report_table, report_to_dict,
    report_to_json,
)
from monoscribe.score import NoteEvent, ScoreModel
from monoscribe.synthesis import RefNote, RefScore, random_reference


def _reference(*pitches, beats=1) -> RefScore:
    return RefScore(tempo_bpm=120, notes=[RefNote(midi=midi, beats=beats) for midi in pitches])


def _detected(*notes) -> ScoreModel:
    """Consecutive notes given as (midi, beats)."""
    events = []
    onset = 0.0
    for midi, beats in notes:
        events.append(NoteEvent(onset_s=onset, duration_s=0.5, f0_hz=440.0, midi=midi, beats=beats))
        onset += 0.5
    return ScoreModel(tempo_bpm=120, events=events)


def _monotone_alignments(n: int, m: int) -> Iterator[List[AlignedPair]]:
    """Enumerate every global alignment of two sequences of lengths n and m."""
    if n == 0 and m == 0:
        yield []
        return
    if n > 0 and m > 0:
        for rest in _monotone_alignments(n - 1, m - 1):
            yield rest + [(n - 1, m - 1)]
    if n > 0:
        for rest in _monotone_alignments(n - 1, m):
            yield rest + [(n - 1, None)]
    if m > 0:
        for rest in _monotone_alignments(n, m - 1):
            yield rest + [(None, m - 1)]


def _brute_force_cost(reference: Sequence[int], detected: Sequence[int]) -> float:
    return min(
        alignment_cost(reference, detected, alignment)
        for alignment in _monotone_alignments(len(reference), len(detected))
    )


class AlignTests(unittest.TestCase):
    """Tests for the pitch sequence alignment."""

    def test_identical(self):
        pairs = align_sequences([60, 62, 64], [60, 62, 64])
        assert pairs == [(0, 0), (1, 1), (2, 2)]

    def test_missing_note(self):
        pairs = align_sequences([60, 62, 64], [60, 64])
        assert pairs == [(0, 0), (1, None), (2, 1)]
        assert alignment_cost([60, 62, 64], [60, 64], pairs) == _brute_force_cost([60, 62, 64], [60, 64])

    def test_extra_note(self):
        reference = list(range(60, 84))
        detected = reference[:10] + [90] + reference[10:]
        pairs = align_sequences(reference, detected)
        assert sum(1 for i, j in pairs if i is not None and j is not None) == 24
        assert pairs[10] == (None, 10)

    def test_empty_detected(self):
        assert align_sequences([60, 62], []) == [(0, None), (1, None)]

    def test_substitution_beats_two_gaps(self):
        # one mismatch (1.0) is cheaper than two gaps (1.5)
        assert align_sequences([60], [61]) == [(0, 0)]

    def test_earliest_pairs(self):
        # both detected notes could pair with the single reference note
        assert align_sequences([60], [60, 60]) == [(0, 0), (None, 1)]

    def test_brute_force(self):
        rng = numpy.random.default_rng(seed=8)
        count = 0
        for n, m in itertools.product(range(1, 6), range(0, 6)):
            for _ in range(20):
                reference = rng.integers(60, 64, size=n).tolist()
                detected = rng.integers(60, 64, size=m).tolist()
                pairs = align_sequences(reference, detected)
                assert alignment_cost(reference, detected, pairs) == pytest.approx(
                    _brute_force_cost(reference, detected)
                )
                count += 1
        assert count >= 500

    @pytest.mark.acceptance_test
    def test_brute_force_up_to_eight_notes(self):
        rng = numpy.random.default_rng(seed=9)
        for n, m in ((8, 8), (8, 7), (7, 8), (8, 6), (6, 8)):
            reference = rng.integers(60, 63, size=n).tolist()
            detected = rng.integers(60, 63, size=m).tolist()
            pairs = align_sequences(reference, detected)
            assert alignment_cost(reference, detected, pairs) == pytest.approx(_brute_force_cost(reference, detected))

    def test_align_scores(self):
        pairs = align(_reference(60, 62), _detected((60, 1), (62, 1)))
        assert pairs == [(0, 0), (1, 1)]


class ErrorRatesTests(unittest.TestCase):
    """Tests for error_rates."""

    def test_one_extra_note(self):
        reference = _reference(*[60 + i % 12 for i in range(24)])
        notes = [(note.midi, note.beats) for note in reference.notes]
        detected = _detected(*(notes[:5] + [(100, Fraction(1, 4))] + notes[5:]))
        report = error_rates(reference, detected)
        assert report.n_original == 24
        assert report.n_detected == 25
        assert report.note_error_pct == pytest.approx(100 / 24, abs=1e-9)
        assert report.pitch_error_pct == 0.0
        assert report.beat_error_pct == 0.0

    def test_identical(self):
        rng = numpy.random.default_rng(seed=3)
        for _ in range(100):
            reference = random_reference(rng)
            detected = _detected(*((note.midi, note.beats) for note in reference.notes))
            assert error_rates(reference, detected).rates == (0.0, 0.0, 0.0)

    def test_octave_down(self):
        reference = _reference(60, 64, 67, 72)
        detected = _detected(*((note.midi - 12, note.beats) for note in reference.notes))
        report = error_rates(reference, detected)
        assert report.pitch_error_pct == 100.0
        assert report.octave_error_count == 4
        assert report.beat_error_pct == 0.0

    def test_missing_note(self):
        report = error_rates(_reference(60, 62, 64), _detected((60, 1), (64, 1)))
        assert report.pitch_error_count == 1
        assert report.beat_error_count == 1
        assert report.note_error_pct == pytest.approx(100 / 3)

    def test_beats_are_exact(self):
        report = error_rates(_reference(60, 62), _detected((60, Fraction(1)), (62, Fraction(5, 4))))
        assert report.beat_error_count == 1
        assert report.pitch_error_count == 0

    def test_empty_detected(self):
        report = error_rates(_reference(60, 62), ScoreModel(tempo_bpm=120))
        assert report.rates == (100.0, 100.0, 100.0)

    def test_empty_reference(self):
        with self.assertRaises(ValueError):
            error_rates(RefScore(tempo_bpm=120), _detected((60, 1)))

    def test_counts_bounded(self):
        rng = numpy.random.default_rng(seed=4)
        for _ in range(50):
            reference = random_reference(rng)
            detected = random_reference(rng)
            report = error_rates(reference, _detected(*((n.midi, n.beats) for n in detected.notes)))
            pairs = [pair for pair in report.alignment if pair[0] is not None]
            assert report.pitch_error_count <= len(pairs)
            assert report.beat_error_count <= len(pairs)


class ReportTests(unittest.TestCase):
    """Tests for report formatting."""

    def setUp(self):
        self.reference = _reference(60, 62, 64)
        self.detected = _detected((60, 1), (64, 1), (65, 1))
        self.report = error_rates(self.reference, self.detected)

    def test_frame(self):
        df = report_frame(self.report, self.reference, self.detected)
        assert list(df.columns) == [
            'ref_index', 'ref_midi', 'ref_beats', 'det_index', 'det_midi', 'det_beats', 'pitch_ok', 'beat_ok',
        ]
        assert len(df) == len(self.report.alignment)

    def test_table(self):
        text = report_table(self.report, self.reference, self.detected)
        assert 'note error: 0.00%' in text
        assert 'pitch error:' in text

    def test_json(self):
        data = json.loads(report_to_json(self.report))
        assert data == json.loads(json.dumps(report_to_dict(self.report)))
        assert data['n_original'] == 3
        assert data['alignment'] == [list(pair) for pair in self.report.alignment]
