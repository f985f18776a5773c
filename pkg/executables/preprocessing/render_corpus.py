"""Render the reference corpus to WAV files."""
import argparse
import logging
import pathlib

import tqdm

from monoscribe.audio import SAMPLE_FORMATS, encode_wav
from monoscribe.settings import CORPUS_ROOT, DEFAULT_SAMPLE_RATE, OUTPUT_ROOT
from monoscribe.synthesis import ToneModel, read_reference, render

logger = logging.getLogger(__name__)


def main():
    logging.basicConfig(level=logging.INFO)
    parser = argparse.ArgumentParser()
    parser.add_argument('--input_dir', default=CORPUS_ROOT, type=pathlib.Path)
    parser.add_argument('--output_dir', default=OUTPUT_ROOT / 'wav', type=pathlib.Path)
    parser.add_argument('--sample_rate', default=DEFAULT_SAMPLE_RATE, type=int)
    parser.add_argument('--sample_format', default='pcm16', choices=sorted(SAMPLE_FORMATS))
    parser.add_argument('--tempo', default=None, type=float, help='Play every melody at this tempo.')
    args = parser.parse_args()

    tone = ToneModel()
    for path in tqdm.tqdm(sorted(args.input_dir.glob('*.json')), unit='melody'):
        reference = read_reference(path)
        if args.tempo is not None:
            reference = reference.with_tempo(args.tempo)
        buffer = render(score=reference, tone=tone, sample_rate=args.sample_rate)
        output = encode_wav(buffer=buffer, path=args.output_dir / f'{path.stem}.wav', sample_format=args.sample_format)
        logger.info('Rendered %s: %d notes, %.2f s', output, len(reference), buffer.duration_s)


if __name__ == '__main__':
    main()
