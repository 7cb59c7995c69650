import csv
import logging
import os

import pandas as pd

from models import LossReport
from utils.errors import DataError

logger = logging.getLogger(__name__)

COLUMNS = ('iteration',) + LossReport.FIELDS


class TrainingLog:
    """Append-only CSV of LossReports, one row per iteration."""

    def __init__(self, path):
        self.path = path

    def start(self, iteration=0):
        """Open for a run starting at `iteration`; rows from a later point are dropped."""
        if iteration == 0 or not os.path.exists(self.path):
            with open(self.path, 'w', newline='') as handle:
                csv.writer(handle).writerow(COLUMNS)
            return
        frame = read_training_log(self.path)
        kept = frame[frame['iteration'] < iteration]
        if len(kept) < len(frame):
            logger.info(f"Dropping {len(frame) - len(kept)} log rows past iteration {iteration}")
        with open(self.path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(COLUMNS)
            for row in kept.itertuples(index=False):
                writer.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])

    def append(self, report):
        with open(self.path, 'a', newline='') as handle:
            csv.writer(handle).writerow([report.iteration] + [repr(float(v)) for v in report.values()])


def read_training_log(path):
    """The log as a DataFrame with columns iteration + LossReport fields."""
    if not os.path.exists(path):
        raise DataError(f"training log not found: {path}")
    frame = pd.read_csv(path, float_precision='round_trip')
    missing = [column for column in COLUMNS if column not in frame.columns]
    if missing:
        raise DataError(f"training log {path} lacks columns {', '.join(missing)}")
    return frame


def smoothed(frame, column, window):
    """Mean of column over consecutive non-overlapping windows of `window` rows."""
    values = frame[column].to_numpy()
    usable = len(values) // window * window
    return values[:usable].reshape(-1, window).mean(axis=1)
