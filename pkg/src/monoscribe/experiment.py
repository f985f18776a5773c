"""
Module for handling experiments.
"""
import datetime
import logging
import pathlib
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import pandas
from mlflow.tracking import MlflowClient

from .settings import DATA_EXPERIMENTS, EXPERIMENT_NAME, MLFLOW_TRACKING_URI
from .utils import flatten_dict

logger = logging.getLogger(__name__)


class Experiment:
    """Base class for initializing and finalizing experiments."""

    def __init__(
        self,
        root: Union[str, pathlib.Path] = DATA_EXPERIMENTS,
        tracking_uri: str = MLFLOW_TRACKING_URI,
        exp_name: str = EXPERIMENT_NAME,
        client: Optional[MlflowClient] = None,
    ):
        self.root = pathlib.Path(root)
        self.tracking_uri = tracking_uri
        self.exp_name = exp_name
        self.client = client or MlflowClient(tracking_uri=tracking_uri)
        experiment = self.client.get_experiment_by_name(self.exp_name)
        if experiment is None:
            logger.info('Creating experiment %s', self.exp_name)
            self.experiment_id = self.client.create_experiment(self.exp_name)
        else:
            self.experiment_id = experiment.experiment_id

    def init_experiment(
        self,
        hyper_parameters: Mapping[str, Any],
    ) -> Tuple[str, pathlib.Path]:
        """
        Initialising an experiment. Creates an experiment run and an output directory based on the run id.

        :param hyper_parameters: The (possibly nested) hyperparameters for this experiment to save in DB.
        :return: The id of the experiment run and the created output path.
        """
        current_run = self.client.create_run(self.experiment_id)
        run_id = current_run.info.run_id
        self.client.log_param(run_id=run_id, key="create_time_utc",
                              value=datetime.datetime.now(tz=datetime.timezone.utc))

        for key, value in flatten_dict(dict(hyper_parameters)).items():
            self.client.log_param(run_id=run_id, key=key, value=value)

        output_path = self.root / str(run_id)
        logger.debug('Create experiment directory: %s', output_path)
        if output_path.exists():
            logger.error('Output path already exists! %s', output_path)
        output_path.mkdir(parents=True, exist_ok=True)

        self.client.log_param(run_id=run_id, key="out_dir", value=str(output_path))
        # return id as experiment handle, and path of existing directory to store outputs to
        return run_id, output_path

    def finalise_experiment(
        self,
        experiment_id: str,
        result: Dict[str, float],
    ) -> None:
        """
        Finalise the experiment by saving high-level results in DB.

        :param experiment_id: The id of the run to finalise.
        :param result: The result metrics to save.
        """
        for key, value in result.items():
            self.client.log_metric(run_id=experiment_id, key=key, value=float(value))
        self.client.set_terminated(experiment_id)

    @staticmethod
    def save_table(
        path: Union[str, pathlib.Path],
        table: pandas.DataFrame,
        name: str,
    ) -> pathlib.Path:
        """
        Save a result table as CSV to given output path.

        :param path: The run's output directory.
        :param table: The table to save.
        :param name: The file name without extension.
        :return: The path of the CSV file.
        """
        output = pathlib.Path(path) / f'{name}.csv'
        table.to_csv(output, index=False)
        return output
