"""Evaluation utilities: note, pitch and beat error rates of a transcription."""
import json
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas

from .score import ScoreModel
from .settings import GAP_COST, MISMATCH_COST
from .synthesis import RefScore

#: A pair of aligned note indices, (reference, detected); None marks a gap.
AlignedPair = Tuple[Optional[int], Optional[int]]

Notes = Union[RefScore, ScoreModel]


@dataclass(frozen=True)
class ErrorReport:
    """Error rates of a transcription against its reference, in percent of the reference notes."""

    n_original: int
    n_detected: int
    note_error_pct: float
    pitch_error_pct: float
    beat_error_pct: float
    pitch_error_count: int
    beat_error_count: int
    octave_error_count: int
    alignment: Tuple[AlignedPair, ...]

    @property
    def rates(self) -> Tuple[float, float, float]:
        """The note, pitch and beat error rates."""
        return self.note_error_pct, self.pitch_error_pct, self.beat_error_pct


def _notes(score: Notes):
    return score.notes if isinstance(score, RefScore) else score.events


def alignment_cost(
    reference: Sequence[int],
    detected: Sequence[int],
    alignment: Sequence[AlignedPair],
    mismatch_cost: float = MISMATCH_COST,
    gap_cost: float = GAP_COST,
) -> float:
    """The total cost of an alignment of two pitch sequences."""
    cost = 0.0
    for i, j in alignment:
        if i is None or j is None:
            cost += gap_cost
        elif reference[i] != detected[j]:
            cost += mismatch_cost
    return cost


def align_sequences(
    reference: Sequence[int],
    detected: Sequence[int],
    mismatch_cost: float = MISMATCH_COST,
    gap_cost: float = GAP_COST,
) -> List[AlignedPair]:
    """
    Globally align two pitch sequences with minimal cost.

    Equal pitches cost nothing, unequal ones mismatch_cost, every gap gap_cost. Among optimal alignments the one with
    the earliest pairs is returned.

    :return:
        The aligned pairs in order.
    """
    n, m = len(reference), len(detected)
    table = np.zeros((n + 1, m + 1))
    table[:, 0] = np.arange(n + 1) * gap_cost
    table[0, :] = np.arange(m + 1) * gap_cost
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            substitution = 0.0 if reference[i - 1] == detected[j - 1] else mismatch_cost
            table[i, j] = min(
                table[i - 1, j - 1] + substitution,
                table[i - 1, j] + gap_cost,
                table[i, j - 1] + gap_cost,
            )

    # trace back, taking gaps before pairs so that pairs end up as early as possible
    pairs = []
    i, j = n, m
    while i > 0 or j > 0:
        if j > 0 and table[i, j] == table[i, j - 1] + gap_cost:
            pairs.append((None, j - 1))
            j -= 1
        elif i > 0 and table[i, j] == table[i - 1, j] + gap_cost:
            pairs.append((i - 1, None))
            i -= 1
        else:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
    return pairs[::-1]


def align(reference: Notes, detected: Notes) -> List[AlignedPair]:
    """Align the notes of a transcription to its reference by pitch."""
    return align_sequences(
        reference=[note.midi for note in _notes(reference)],
        detected=[note.midi for note in _notes(detected)],
    )


def error_rates(reference: Notes, detected: Notes) -> ErrorReport:
    """
    Compute the note, pitch and beat error rates.

    The note error is the relative difference of the note counts. Pitch and beat errors are counted over the aligned
    pairs, without the extra detected notes; every reference note left without partner counts as both.

    :param reference:
        The reference score, non-empty.
    :param detected:
        The transcription.
    """
    reference_notes = _notes(reference)
    detected_notes = _notes(detected)
    n_original, n_detected = len(reference_notes), len(detected_notes)
    if n_original == 0:
        raise ValueError('The reference score has no notes.')
    alignment = align(reference=reference, detected=detected)

    pitch_errors = beat_errors = octave_errors = 0
    for i, j in alignment:
        if i is None:
            continue
        if j is None:
            pitch_errors += 1
            beat_errors += 1
            continue
        difference = reference_notes[i].midi - detected_notes[j].midi
        if difference != 0:
            pitch_errors += 1
            if difference % 12 == 0:
                octave_errors += 1
        if reference_notes[i].beats != detected_notes[j].beats:
            beat_errors += 1

    return ErrorReport(
        n_original=n_original,
        n_detected=n_detected,
        note_error_pct=abs(n_detected - n_original) / n_original * 100,
        pitch_error_pct=pitch_errors / n_original * 100,
        beat_error_pct=beat_errors / n_original * 100,
        pitch_error_count=pitch_errors,
        beat_error_count=beat_errors,
        octave_error_count=octave_errors,
        alignment=tuple(alignment),
    )


def report_frame(report: ErrorReport, reference: Notes, detected: Notes) -> pandas.DataFrame:
    """
    Tabulate the aligned pairs.

    :return:
        A dataframe with columns ["ref_index", "ref_midi", "ref_beats", "det_index", "det_midi", "det_beats",
        "pitch_ok", "beat_ok"]; gaps are shown as "-".
    """
    reference_notes = _notes(reference)
    detected_notes = _notes(detected)
    rows = []
    for i, j in report.alignment:
        ref = reference_notes[i] if i is not None else None
        det = detected_notes[j] if j is not None else None
        rows.append((
            '-' if ref is None else i,
            '-' if ref is None else ref.midi,
            '-' if ref is None else str(ref.beats),
            '-' if det is None else j,
            '-' if det is None else det.midi,
            '-' if det is None else str(det.beats),
            ref is not None and det is not None and ref.midi == det.midi,
            ref is not None and det is not None and ref.beats == det.beats,
        ))
    return pandas.DataFrame(data=rows, columns=[
        "ref_index", "ref_midi", "ref_beats", "det_index", "det_midi", "det_beats", "pitch_ok", "beat_ok",
    ])


def report_table(report: ErrorReport, reference: Notes, detected: Notes) -> str:
    """Render the aligned pairs and the error rates as text."""
    table = report_frame(report=report, reference=reference, detected=detected).to_string(index=False)
    summary = (
        f'notes: {report.n_original} original, {report.n_detected} detected\n'
        f'note error: {report.note_error_pct:.2f}%\n'
        f'pitch error: {report.pitch_error_pct:.2f}% ({report.octave_error_count} octave errors)\n'
        f'beat error: {report.beat_error_pct:.2f}%\n'
    )
    return table + '\n\n' + summary


def report_to_dict(report: ErrorReport) -> dict:
    """The JSON object of a report."""
    data = asdict(report)
    data['alignment'] = [list(pair) for pair in report.alignment]
    return data


def report_to_json(report: ErrorReport) -> str:
    """Serialize a report."""
    return json.dumps(report_to_dict(report), indent=2) + '\n'

