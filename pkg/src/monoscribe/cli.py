"""
Command line interface.

Exit codes: 0 success, 1 usage error, 2 decode error, 3 empty transcription.
"""
import argparse
import logging
import pathlib
import sys
from fractions import Fraction
from typing import Optional, Sequence

from .audio import SAMPLE_FORMATS, AudioDecodeError, decode_wav, encode_wav
from .evaluation import error_rates, report_table, report_to_json
from .pipeline import NoNotesFoundError, PipelineConfig, debug_frames, transcribe
from .score import engrave, read_score_json, to_json, to_lilypond, to_musicxml
from .settings import (
    ALLOWED_GRIDS, AMP_THRESHOLD, ATTACK_S, DECAY_RATE_PER_S, DEFAULT_SAMPLE_RATE, END_THRESHOLD, GAMMA, GRID,
    HARMONIC_ROLLOFF_DB, HOP_LENGTH_S, MIN_SEPARATION_S, N_HARMONICS, RELEASE_S, SUSTAIN_LEVEL, TAIL_S,
    WINDOW_LENGTH_S, YIN_THRESHOLD, YIN_WINDOW_LENGTH_S,
)
from .synthesis import ToneModel, read_reference, render
from .utils import parse_fraction, parse_time_signature

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DECODE = 2
EXIT_EMPTY = 3

WRITERS = {
    'ly': (to_lilypond, '.ly'),
    'musicxml': (to_musicxml, '.musicxml'),
    'json': (to_json, '.json'),
}


class UsageError(Exception):
    """Invalid command line arguments."""


class _ArgumentParser(argparse.ArgumentParser):
    """Raise instead of exiting with argparse's own status."""

    def error(self, message):
        raise UsageError(message)


def _grid(text: str) -> Fraction:
    grid = parse_fraction(text)
    if grid not in ALLOWED_GRIDS:
        raise argparse.ArgumentTypeError(f'grid must be one of {", ".join(map(str, ALLOWED_GRIDS))}')
    return grid


def _time_signature(text: str):
    try:
        return parse_time_signature(text)
    except ValueError as error:
        raise argparse.ArgumentTypeError(str(error)) from error


def _add_pipeline_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('input', type=pathlib.Path, help='The WAV recording.')
    parser.add_argument('--window-ms', type=float, default=1000 * WINDOW_LENGTH_S, help='Onset window length.')
    parser.add_argument('--hop-ms', type=float, default=1000 * HOP_LENGTH_S, help='Onset hop length.')
    parser.add_argument('--gamma', type=float, default=GAMMA, help='Logarithmic compression constant.')
    parser.add_argument('--amp-threshold', type=float, default=AMP_THRESHOLD, help='Novelty peak threshold.')
    parser.add_argument('--min-sep-ms', type=float, default=1000 * MIN_SEPARATION_S, help='Minimum onset distance.')
    parser.add_argument('--yin-window-ms', type=float, default=1000 * YIN_WINDOW_LENGTH_S, help='YIN window length.')
    parser.add_argument('--yin-threshold', type=float, default=YIN_THRESHOLD, help='YIN absolute threshold.')
    parser.add_argument('--grid', type=_grid, default=GRID, help='Beat quantization grid, e.g. 1/4.')
    parser.add_argument('--tempo', type=float, default=None, help='Tempo in bpm, skips the estimation.')
    parser.add_argument('--time-signature', type=_time_signature, default=None, metavar='N/D')
    parser.add_argument(
        '--end-threshold', type=float, default=END_THRESHOLD, help='Energy of the last note end, relative to its peak.',
    )


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    """Build the pipeline configuration from parsed arguments."""
    return PipelineConfig(
        window_length_s=args.window_ms / 1000,
        hop_length_s=args.hop_ms / 1000,
        gamma=args.gamma,
        amp_threshold=args.amp_threshold,
        min_separation_s=args.min_sep_ms / 1000,
        yin_window_length_s=args.yin_window_ms / 1000,
        yin_threshold=args.yin_threshold,
        grid=args.grid,
        tempo_bpm=args.tempo,
        time_signature=args.time_signature,
        end_threshold=args.end_threshold,
    )


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with all subcommands."""
    parser = _ArgumentParser(prog='monoscribe', description='Monophonic piano transcription.')
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    commands = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)
    commands.required = True

    transcribe_parser = commands.add_parser('transcribe', help='Transcribe a WAV recording.')
    _add_pipeline_arguments(transcribe_parser)
    transcribe_parser.add_argument('--output', type=pathlib.Path, default=None,
                                   help='Output path without extension, defaults to the input path.')
    transcribe_parser.add_argument('--format', choices=sorted(WRITERS) + ['all'], default='all')
    transcribe_parser.add_argument('--engrave', type=pathlib.Path, default=None, metavar='PATH',
                                   help='Engraver binary rendering the LilyPond output to an image.')

    eval_parser = commands.add_parser('eval', help='Compare a transcription with its reference.')
    eval_parser.add_argument('reference', type=pathlib.Path)
    eval_parser.add_argument('detected', type=pathlib.Path)
    eval_parser.add_argument('--format', choices=['json', 'table'], default='json')
    eval_parser.add_argument('--output', type=pathlib.Path, default=None, help='Write the report here.')

    synth_parser = commands.add_parser('synth', help='Render a reference score.')
    synth_parser.add_argument('reference', type=pathlib.Path)
    synth_parser.add_argument('output', type=pathlib.Path)
    synth_parser.add_argument('--harmonics', type=int, default=N_HARMONICS)
    synth_parser.add_argument('--rolloff-db', type=float, default=HARMONIC_ROLLOFF_DB)
    synth_parser.add_argument('--attack-ms', type=float, default=1000 * ATTACK_S)
    synth_parser.add_argument('--decay-rate', type=float, default=DECAY_RATE_PER_S)
    synth_parser.add_argument('--sustain-level', type=float, default=SUSTAIN_LEVEL)
    synth_parser.add_argument('--release-ms', type=float, default=1000 * RELEASE_S)
    synth_parser.add_argument('--tail-ms', type=float, default=1000 * TAIL_S)
    synth_parser.add_argument('--sample-rate', type=int, default=DEFAULT_SAMPLE_RATE)
    synth_parser.add_argument('--sample-format', choices=sorted(SAMPLE_FORMATS), default='pcm16')

    debug_parser = commands.add_parser('debug', help='Dump novelty and pitch track as CSV.')
    _add_pipeline_arguments(debug_parser)
    debug_parser.add_argument('--output', type=pathlib.Path, default=None,
                              help='Output path without extension, defaults to the input path.')
    return parser


def cmd_transcribe(args: argparse.Namespace) -> int:
    buffer = decode_wav(args.input)
    score = transcribe(buffer=buffer, config=config_from_args(args))
    stem = args.output or args.input.with_suffix('')
    stem.parent.mkdir(parents=True, exist_ok=True)
    formats = sorted(WRITERS) if args.format == 'all' else [args.format]
    for name in formats:
        writer, suffix = WRITERS[name]
        path = stem.with_name(stem.name + suffix)
        path.write_text(writer(score), encoding='utf8')
        logger.info('Wrote %s', path)
    if args.engrave is not None:
        ly_path = stem.with_name(stem.name + '.ly')
        if 'ly' not in formats:
            ly_path.write_text(to_lilypond(score), encoding='utf8')
        engrave(ly_path=ly_path, engraver=args.engrave)
    print(f'{len(score)} notes at {score.tempo_bpm:.1f} bpm')
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    reference = read_reference(args.reference)
    detected = read_score_json(args.detected)
    report = error_rates(reference=reference, detected=detected)
    if args.format == 'json':
        text = report_to_json(report)
    else:
        text = report_table(report=report, reference=reference, detected=detected)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text, encoding='utf8')
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    tone = ToneModel(
        n_harmonics=args.harmonics,
        harmonic_rolloff_db_per_partial=args.rolloff_db,
        attack_s=args.attack_ms / 1000,
        decay_rate_per_s=args.decay_rate,
        sustain_level=args.sustain_level,
        release_s=args.release_ms / 1000,
        tail_s=args.tail_ms / 1000,
    )
    buffer = render(score=read_reference(args.reference), tone=tone, sample_rate=args.sample_rate)
    encode_wav(buffer=buffer, path=args.output, sample_format=args.sample_format)
    logger.info('Wrote %.2f s to %s', buffer.duration_s, args.output)
    return EXIT_OK


def cmd_debug(args: argparse.Namespace) -> int:
    buffer = decode_wav(args.input)
    novelty, track = debug_frames(buffer=buffer, config=config_from_args(args))
    stem = args.output or args.input.with_suffix('')
    stem.parent.mkdir(parents=True, exist_ok=True)
    for name, table in (('novelty', novelty), ('pitch', track)):
        path = stem.with_name(f'{stem.name}.{name}.csv')
        table.to_csv(path, index=False)
        logger.info('Wrote %d rows to %s', len(table), path)
    return EXIT_OK


COMMANDS = {
    'transcribe': cmd_transcribe,
    'eval': cmd_eval,
    'synth': cmd_synth,
    'debug': cmd_debug,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line interface and return the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as error:
        print(f'monoscribe: error: {error}', file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except AudioDecodeError as error:
        logger.error('%s', error)
        return EXIT_DECODE
    except NoNotesFoundError as error:
        logger.error('%s', error)
        return EXIT_EMPTY
    except (OSError, ValueError) as error:
        logger.error('%s', error)
        return EXIT_USAGE
