"""Evaluation of the transcription pipeline on the same melodies played at several tempos."""
import argparse
import logging

from monoscribe.experiment import Experiment
from monoscribe.pipeline import PipelineConfig, evaluate_tempo_robustness
from monoscribe.settings import CORPUS_ROOT, ROBUSTNESS_MELODIES, ROBUSTNESS_TEMPOS

logging.basicConfig(level=logging.ERROR)


def main():
    logging.basicConfig(level=logging.INFO)
    parser = argparse.ArgumentParser()
    parser.add_argument('--melodies', default=list(ROBUSTNESS_MELODIES), type=str, nargs='*')
    parser.add_argument('--tempos', default=list(ROBUSTNESS_TEMPOS), type=float, nargs='*')
    parser.add_argument('--exp_name', default='tempo_robustness', type=str)
    parser.add_argument('--no_octave_correction', action='store_true', default=False)
    args = parser.parse_args()
    paths = [CORPUS_ROOT / f'{name}.json' for name in args.melodies]
    config = PipelineConfig()

    experiment = Experiment(exp_name=args.exp_name)
    run_id, output_path = experiment.init_experiment(hyper_parameters=dict(
        pipeline=config.to_dict(),
        melodies=','.join(args.melodies),
        tempos=','.join(map(str, args.tempos)),
        octave_correction=not args.no_octave_correction,
    ))
    result_df = evaluate_tempo_robustness(
        paths=paths,
        tempos=args.tempos,
        config=config,
        correct_tempo_octave=not args.no_octave_correction,
    )
    experiment.save_table(path=output_path, table=result_df, name='tempo_robustness')
    print(result_df.to_string(index=False))
    experiment.finalise_experiment(experiment_id=run_id, result={
        f'{column}_at_{tempo:g}': value
        for tempo, row in zip(result_df['tempo_bpm'], result_df.to_dict(orient='records'))
        for column, value in row.items()
        if column.endswith('_pct')
    })


if __name__ == '__main__':
    main()
