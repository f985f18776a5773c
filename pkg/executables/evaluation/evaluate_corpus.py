"""Evaluation of the transcription pipeline on the reference corpus."""
import argparse
import logging
import pathlib
from fractions import Fraction
from hashlib import sha512

import tqdm

from monoscribe.experiment import Experiment
from monoscribe.pipeline import PipelineConfig, evaluate_corpus
from monoscribe.settings import CORPUS_ROOT
from monoscribe.utils import select_configurations

logging.basicConfig(level=logging.ERROR)

GAMMAS = (
    10.0,
    100.0,
    1000.0,
)
AMP_THRESHOLDS = (
    0.05,
    0.1,
    0.2,
)
GRIDS = (
    Fraction(1, 8),
    Fraction(1, 4),
)


def main():
    logging.basicConfig(level=logging.INFO)
    parser = argparse.ArgumentParser()
    parser.add_argument('--corpus', default=CORPUS_ROOT, type=pathlib.Path)
    parser.add_argument('--exp_name', default='corpus', type=str)
    parser.add_argument('--no_octave_correction', action='store_true', default=False)
    parser.add_argument('--force', action='store_true', default=False)
    parser.add_argument('--filter', default=None, type=str, required=False, nargs='*', help='e.g. gamma=100 grid=1/8')
    args = parser.parse_args()
    paths = sorted(args.corpus.glob('*.json'))
    configs = [
        dict(gamma=gamma, amp_threshold=amp_threshold, grid=grid)
        for gamma in GAMMAS
        for amp_threshold in AMP_THRESHOLDS
        for grid in GRIDS
    ]

    if args.filter:
        try:
            configs = select_configurations(configs, args.filter)
        except ValueError as error:
            parser.error(str(error))
        logging.info("Selected %d configurations", len(configs))

    experiment = Experiment(exp_name=args.exp_name)
    for config in tqdm.tqdm(configs, unit='configuration', unit_scale=True):
        hash_digest = sha512(str(sorted(config.items())).encode(encoding='utf8')).hexdigest()[:20]
        if experiment.client.search_runs(
            experiment_ids=[experiment.experiment_id],
            filter_string=f"params.hash_digest='{hash_digest}'",
        ) and not args.force:
            logging.info("Skipping existing run")
            continue

        pipeline_config = PipelineConfig(**config)
        run_id, output_path = experiment.init_experiment(hyper_parameters=dict(
            pipeline=pipeline_config.to_dict(),
            num_melodies=len(paths),
            octave_correction=not args.no_octave_correction,
            hash_digest=hash_digest,
        ))
        result_df = evaluate_corpus(
            paths=paths,
            config=pipeline_config,
            correct_tempo_octave=not args.no_octave_correction,
        )
        experiment.save_table(path=output_path, table=result_df, name='corpus')
        agg = result_df[['note_error_pct', 'pitch_error_pct', 'beat_error_pct']].mean()
        experiment.finalise_experiment(experiment_id=run_id, result=dict(
            octave_error_count=int(result_df['octave_error_count'].sum()),
            **agg.to_dict(),
        ))


if __name__ == '__main__':
    main()
