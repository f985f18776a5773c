"""Tests for experiment tracking."""
import unittest
from unittest import mock

import pandas

from monoscribe.experiment import Experiment
from monoscribe.pipeline import PipelineConfig


class ExperimentTests(unittest.TestCase):
    """Tests for Experiment with a mocked tracking client."""

    def setUp(self):
        self.client = mock.Mock()
        self.client.get_experiment_by_name.return_value = None
        self.client.create_experiment.return_value = '7'
        self.client.create_run.return_value.info.run_id = 'run-1'

    def test_create_experiment(self):
        with self.assertLogs('monoscribe.experiment', level='INFO'):
            experiment = Experiment(root='unused', exp_name='corpus', client=self.client)
        self.client.create_experiment.assert_called_once_with('corpus')
        assert experiment.experiment_id == '7'

    def test_existing_experiment(self):
        self.client.get_experiment_by_name.return_value = mock.Mock(experiment_id='3')
        experiment = Experiment(root='unused', client=self.client)
        self.client.create_experiment.assert_not_called()
        assert experiment.experiment_id == '3'

    def test_run(self):
        with self.subTest('init'), mock.patch('pathlib.Path.mkdir') as mkdir:
            experiment = Experiment(root='runs', client=self.client)
            run_id, path = experiment.init_experiment(hyper_parameters=dict(
                pipeline=PipelineConfig().to_dict(),
                num_melodies=8,
            ))
            assert run_id == 'run-1'
            assert path.name == 'run-1'
            mkdir.assert_called_once()
            logged = {c.kwargs['key']: c.kwargs['value'] for c in self.client.log_param.call_args_list}
            assert logged['pipeline.gamma'] == 100.0
            assert logged['pipeline.grid'] == '1/4'
            assert logged['num_melodies'] == 8
            assert logged['out_dir'] == str(path)
            assert 'create_time_utc' in logged

        with self.subTest('finalise'):
            experiment.finalise_experiment(experiment_id=run_id, result=dict(note_error_pct=2.5, beat_error_pct=1))
            metrics = {c.kwargs['key']: c.kwargs['value'] for c in self.client.log_metric.call_args_list}
            assert metrics == dict(note_error_pct=2.5, beat_error_pct=1.0)
            self.client.set_terminated.assert_called_once_with('run-1')


def test_save_table(tmp_path):
    """Result tables are written as CSV into the run directory."""
    table = pandas.DataFrame(data=dict(melody=['a', 'b'], note_error_pct=[0.0, 2.5]))
    path = Experiment.save_table(path=tmp_path, table=table, name='corpus')
    assert path == tmp_path / 'corpus.csv'
    pandas.testing.assert_frame_equal(pandas.read_csv(path), table)
