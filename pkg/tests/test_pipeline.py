"""Tests for the transcription pipeline."""
import unittest
from fractions import Fraction

import numpy
import pytest

from monoscribe.audio import AudioBuffer
from monoscribe.pipeline import (
    NoNotesFoundError, PipelineConfig, debug_frames, estimate_buffer_tempo, evaluate_corpus, evaluate_reference,
    evaluate_tempo_robustness, transcribe,
)
from monoscribe.settings import CORPUS_ROOT, DATA_ROOT, ROBUSTNESS_MELODIES
from monoscribe.synthesis import RefNote, RefScore, ToneModel, read_reference, render

# six harmonics rolling off by 6 dB, 10 ms attack and a pure exp(-3 t) decay
DECAYING_TONE = ToneModel(
    n_harmonics=6, harmonic_rolloff_db_per_partial=6.0, attack_s=0.01, decay_rate_per_s=3.0, sustain_level=0.0,
    release_s=0.0,
)


class PipelineConfigTests(unittest.TestCase):
    """Tests for PipelineConfig."""

    def test_defaults(self):
        config = PipelineConfig()
        assert config.frame_spec().hop_length_s == 0.01
        assert config.peak_params().amplitude_threshold == 0.1
        assert config.yin_params().threshold == 0.1

    def test_to_dict(self):
        data = PipelineConfig(time_signature=(3, 4)).to_dict()
        assert data['grid'] == '1/4'
        assert data['time_signature'] == '3/4'
        assert data['tempo_bpm'] is None
        assert PipelineConfig().to_dict()['time_signature'] is None

    def test_replace(self):
        config = PipelineConfig().replace(tempo_bpm=90.0)
        assert config.tempo_bpm == 90.0
        assert PipelineConfig().tempo_bpm is None


class TranscribeTests(unittest.TestCase):
    """Tests for transcribe."""

    def test_single_note(self):
        buffer = render(RefScore(tempo_bpm=120, notes=[RefNote(midi=69, beats=2)]))
        score = transcribe(buffer, PipelineConfig(tempo_bpm=120.0, time_signature=(4, 4)))
        assert len(score) == 1
        assert score.events[0].midi == 69
        assert score.events[0].f0_hz == pytest.approx(440.0, abs=2.0)
        assert score.tempo_bpm == 120.0
        assert score.warnings == []

    def test_silence(self):
        buffer = AudioBuffer(samples=numpy.zeros(44100), sample_rate=44100)
        with self.assertRaises(NoNotesFoundError):
            transcribe(buffer)

    def test_default_time_signature(self):
        buffer = render(RefScore(tempo_bpm=100, notes=[RefNote(midi=m, beats=1) for m in (60, 64, 67)]))
        with self.assertLogs('monoscribe.pipeline', level='WARNING'):
            score = transcribe(buffer, PipelineConfig(tempo_bpm=100.0))
        assert score.time_signature == (4, 4)
        assert 'no time signature given, assuming 4/4' in score.warnings

    def test_quantized_beats(self):
        notes = [RefNote(midi=60, beats=1), RefNote(midi=62, beats=Fraction(1, 2)), RefNote(midi=64, beats=2)]
        buffer = render(RefScore(tempo_bpm=90, notes=notes))
        score = transcribe(buffer, PipelineConfig(tempo_bpm=90.0, time_signature=(4, 4)))
        assert [event.midi for event in score.events] == [60, 62, 64]
        assert [event.beats for event in score.events][:2] == [Fraction(1), Fraction(1, 2)]

    @pytest.mark.acceptance_test
    def test_twinkle(self):
        reference = read_reference(CORPUS_ROOT / 'twinkle_twinkle.json')
        score = transcribe(render(reference), PipelineConfig(time_signature=reference.time_signature))
        assert len(score) == 42
        assert [event.midi for event in score.events] == [note.midi for note in reference.notes]


class DebugFramesTests(unittest.TestCase):
    """Tests for debug_frames."""

    def test_silence(self):
        novelty, track = debug_frames(AudioBuffer(samples=numpy.zeros(22050), sample_rate=44100))
        assert list(novelty.columns) == ['frame_time_s', 'energy', 'novelty']
        assert len(novelty) == 50
        assert not novelty['novelty'].any()
        assert list(track.columns) == ['frame_time_s', 'f0_hz', 'cmndf_min']
        assert len(track) > 0


class EvaluateReferenceTests(unittest.TestCase):
    """Tests for evaluate_reference."""

    def test_scale(self):
        reference = RefScore(tempo_bpm=100, notes=[RefNote(midi=m, beats=1) for m in (60, 62, 64, 65, 67, 69)])
        report, detected = evaluate_reference(reference, PipelineConfig(tempo_bpm=100.0))
        assert report.n_original == 6
        assert report.pitch_error_pct == 0.0
        assert report.note_error_pct == 0.0
        assert detected.time_signature == (4, 4)

    def test_octave_correction(self):
        reference = RefScore(tempo_bpm=100, notes=[RefNote(midi=60 + (i % 5), beats=1) for i in range(16)])
        _, detected = evaluate_reference(reference, correct_tempo_octave=True)
        assert detected.tempo_bpm == pytest.approx(100.0, abs=4.0)


def test_default_tone():
    """The evaluations render with the decaying tone unless told otherwise."""
    assert ToneModel() == DECAYING_TONE


@pytest.mark.acceptance_test
def test_corpus():
    """Note, pitch and beat errors on the corpus stay low once the tempo octave is fixed."""
    df = evaluate_corpus(sorted(CORPUS_ROOT.glob('*.json')), tone=DECAYING_TONE)
    assert list(df.columns) == [
        'melody', 'reference_bpm', 'detected_bpm', 'n_original', 'n_detected', 'note_error_pct', 'pitch_error_pct',
        'beat_error_pct', 'octave_error_count',
    ]
    assert len(df) == 8
    assert ((df['detected_bpm'] - df['reference_bpm']).abs() <= 3.0).all()
    assert (df['pitch_error_pct'] == 0.0).all()
    assert df['note_error_pct'].max() <= 4.2
    assert df['beat_error_pct'].max() <= 4.0


@pytest.mark.acceptance_test
def test_dotted_corpus_melody():
    """The dotted quarters of auld_lang_syne do not pull the estimate to two thirds of the tempo."""
    reference = read_reference(CORPUS_ROOT / 'auld_lang_syne.json')
    estimate = estimate_buffer_tempo(render(reference, tone=DECAYING_TONE))
    assert estimate.bpm == pytest.approx(100.0, abs=3.0)
    report, detected = evaluate_reference(reference, tone=DECAYING_TONE, correct_tempo_octave=True)
    assert detected.tempo_bpm == pytest.approx(100.0, abs=3.0)
    assert report.beat_error_pct <= 4.0


@pytest.mark.acceptance_test
def test_tempo_robustness():
    """The errors barely move across tempos."""
    paths = [CORPUS_ROOT / f'{name}.json' for name in ROBUSTNESS_MELODIES]
    df = evaluate_tempo_robustness(paths, tempos=(80, 100, 120), tone=DECAYING_TONE)
    assert df['tempo_bpm'].tolist() == [80, 100, 120]
    assert (df['num_melodies'] == 2).all()
    assert (df['pitch_error_pct'] == 0.0).all()
    assert df['note_error_pct'].max() <= 2.4
    assert df['beat_error_pct'].max() <= 1.1


@pytest.mark.acceptance_test
def test_dotted_rhythm_needs_the_tempo():
    """A dotted 3/4 melody at 70 bpm is beat for beat wrong at twice its tempo."""
    reference = read_reference(DATA_ROOT / 'silent_night.json')
    estimate = estimate_buffer_tempo(render(reference, tone=DECAYING_TONE))
    assert estimate.bpm == pytest.approx(70.0, abs=3.0)
    for config in (PipelineConfig(), PipelineConfig(tempo_bpm=70.0)):
        report, _ = evaluate_reference(reference, config, tone=DECAYING_TONE)
        assert report.pitch_error_pct == 0.0
        assert report.beat_error_pct <= 4.0
    report, detected = evaluate_reference(reference, PipelineConfig(tempo_bpm=140.0), tone=DECAYING_TONE)
    assert detected.tempo_bpm == 140.0
    assert report.pitch_error_pct == 0.0
    assert report.beat_error_pct >= 90.0
