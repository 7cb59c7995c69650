import logging

import numpy as np
import pandas as pd
from mongoengine.errors import ValidationError
from scipy.stats import t

from models import RankRecord
from utils.errors import DataError

logger = logging.getLogger(__name__)

RANK_COLUMNS = ('rater_id', 'set_id', 'method', 'rank')


def rank_to_score(rank, m):
    """Rank 1 -> 100, rank m -> 1, linear in between."""
    return 100.0 - (rank - 1) * 99.0 / (m - 1)


def _validated(records):
    records = list(records)
    if not records:
        raise DataError('no rank records to aggregate')
    for record in records:
        try:
            record.validate()
        except ValidationError as e:
            raise DataError(f"invalid rank record {record.label}: {e}")
    entries = set(records[0].entries)
    for record in records[1:]:
        if set(record.entries) != entries:
            raise DataError(f"record {record.label} ranks {sorted(record.entries)}, "
                            f"expected the same entries as the first record {sorted(entries)}")
    return records


def scores_frame(records):
    """One row per (record, entry) with its rank and score."""
    rows = []
    for record in _validated(records):
        m = len(record.entries)
        for entry, rank in record.ranking.items():
            rows.append({'rater_id': record.rater_id, 'set_id': record.image_set_id,
                         'scenario': record.scenario, 'method': entry, 'rank': rank,
                         'score': rank_to_score(rank, m)})
    return pd.DataFrame(rows)


def mos_statistics(records, scenario='TOTAL'):
    """Per-entry MOS with std and 95% Student-t half-width over records.

    scenario TOTAL pools every record, W_REF / WO_REF keep only that tag.
    """
    frame = scores_frame(records)
    if scenario != 'TOTAL':
        frame = frame[frame['scenario'] == scenario]
        if frame.empty:
            return pd.DataFrame(columns=['mos', 'std', 'ci95', 'n'])
    grouped = frame.groupby('method', sort=False)['score']
    stats = pd.DataFrame({
        'mos': grouped.mean().clip(1.0, 100.0),
        'std': grouped.std(ddof=1),
        'n': grouped.count(),
    })
    stats['ci95'] = [
        float(t.ppf(0.975, n - 1) * std / np.sqrt(n)) if n > 1 else np.nan
        for n, std in zip(stats['n'], stats['std'])
    ]
    return stats


def mos_aggregate(records, scenario='TOTAL'):
    """method name -> MOS in [1, 100]."""
    return {method: float(value) for method, value in mos_statistics(records, scenario)['mos'].items()}


def load_rank_records(path):
    """Read rank records from CSV (rater_id, set_id, method, rank[, scenario])."""
    try:
        frame = pd.read_csv(path, dtype={'rater_id': str, 'set_id': str, 'method': str})
    except FileNotFoundError:
        raise DataError(f"rank file not found: {path}")
    missing = [column for column in RANK_COLUMNS if column not in frame.columns]
    if missing:
        raise DataError(f"rank file {path} lacks columns {', '.join(missing)}")
    if 'scenario' not in frame.columns:
        frame['scenario'] = 'WO_REF'

    records = []
    for (rater, image_set, scenario), group in frame.groupby(['rater_id', 'set_id', 'scenario'], sort=False):
        records.append(RankRecord(rater_id=str(rater), image_set_id=str(image_set), scenario=str(scenario),
                                  entries=[str(m) for m in group['method']],
                                  ranks=[int(r) for r in group['rank']]))
    logger.info(f"Loaded {len(records)} rank records from {path}")
    return records
