import logging
import math

import pandas as pd

from models import MethodScores, MetricReport, SCENARIOS
from utils.errors import DataError
from metrics.distances import fid, kid_with_std
from metrics.embedders import embed_set
from metrics.mos import mos_statistics

logger = logging.getLogger(__name__)

SCENARIO_TITLES = {'W_REF': 'W Ref', 'WO_REF': 'W/O Ref', 'TOTAL': 'Total'}
METRIC_TITLES = {'fid768': 'FID768', 'fid2048': 'FID2048', 'kid': 'KID', 'mos': 'MOS'}
HIGHER_IS_BETTER = {'mos'}
REPORT_COLUMNS = [name for name in MethodScores._fields_ordered]

BEST_MARK = '*'
SECOND_MARK = '+'


def _with_total(sets):
    """Add a TOTAL entry pooling W_REF and WO_REF when both are given and TOTAL is not."""
    sets = dict(sets)
    if 'TOTAL' not in sets and 'W_REF' in sets and 'WO_REF' in sets:
        sets['TOTAL'] = list(sets['W_REF']) + list(sets['WO_REF'])
    return sets


def score_method(method, scenario, generated, reference, embedder, dims=(768, 2048), kid_blocks=1,
                 kid_dim=2048):
    """FID per requested dim and KID for one method's volumes against a reference set."""
    if len(generated) < 2 or len(reference) < 2:
        raise DataError(f"{method}/{scenario}: need at least 2 generated and 2 reference volumes, "
                        f"got {len(generated)} and {len(reference)}")
    row = MethodScores(method=method, scenario=scenario,
                       n_generated=len(generated), n_reference=len(reference))
    features = {}
    for dim in sorted(set(dims) | {kid_dim}):
        features[dim] = (embed_set(generated, embedder, dim), embed_set(reference, embedder, dim))
    for dim in dims:
        setattr(row, f'fid{dim}', fid(*features[dim]))
    row.kid, row.kid_std = kid_with_std(*features[kid_dim], n_blocks=kid_blocks)
    return row


def build_report(methods, references, embedder, dims=(768, 2048), rank_records=None, kid_blocks=1,
                 scenarios=SCENARIOS):
    """MetricReport over every (method, scenario) pair that has both generated and reference volumes.

    methods maps method name -> scenario -> list of Volumes; references maps
    scenario -> list of Volumes. Missing scenarios are skipped with a warning.
    """
    references = _with_total(references)
    report = MetricReport(embedder=embedder.name, kid_blocks=kid_blocks)
    for method, sets in methods.items():
        sets = _with_total(sets)
        for scenario in scenarios:
            if scenario not in sets or scenario not in references:
                logger.warning(f"{method}: scenario {scenario} missing, omitted from the report")
                continue
            report.upsert(score_method(method, scenario, sets[scenario], references[scenario],
                                       embedder, dims, kid_blocks))
    if rank_records:
        merge_mos(report, rank_records, scenarios=scenarios)
    return report


def merge_mos(report, records, methods=None, scenarios=SCENARIOS):
    """Fill MOS columns for reported methods (or the given names) in each scenario."""
    methods = methods or report.methods()
    for scenario in scenarios:
        stats = mos_statistics(records, scenario)
        for method in methods:
            if method not in stats.index:
                continue
            entry = stats.loc[method]
            row = MethodScores(method=method, scenario=scenario, mos=float(entry['mos']),
                               mos_std=_finite_or_none(entry['std']), mos_ci95=_finite_or_none(entry['ci95']))
            report.upsert(row)
    return report


def _finite_or_none(value):
    value = float(value)
    return value if math.isfinite(value) else None


def report_to_frame(report):
    """Long table: one row per (method, scenario)."""
    return pd.DataFrame([row.to_dict() for row in report.rows], columns=REPORT_COLUMNS)


def write_report_csv(report, path):
    report_to_frame(report).to_csv(path, index=False, float_format='%.10g')
    logger.info(f"Wrote {len(report.rows)} report rows to {path}")
    return path


def read_report_csv(path):
    try:
        frame = pd.read_csv(path, dtype={'method': str, 'scenario': str})
    except FileNotFoundError:
        raise DataError(f"metric file not found: {path}")
    unknown = [column for column in frame.columns if column not in REPORT_COLUMNS]
    if unknown or 'method' not in frame.columns or 'scenario' not in frame.columns:
        raise DataError(f"{path} is not a metric report (columns {list(frame.columns)})")
    report = MetricReport()
    for record in frame.to_dict(orient='records'):
        clean = {key: value for key, value in record.items() if not _is_missing(value)}
        for key in ('n_generated', 'n_reference'):
            if key in clean:
                clean[key] = int(clean[key])
        report.upsert(MethodScores(**clean))
    return report


def _is_missing(value):
    return value is None or (isinstance(value, float) and math.isnan(value))


def merge_reports(reports):
    merged = MetricReport()
    for report in reports:
        for row in report.rows:
            merged.upsert(MethodScores.from_dict(row.to_dict()))
    return merged


def rank_marks(report, scenario, metric):
    """method -> BEST_MARK / SECOND_MARK for the best and second-best value of one column."""
    values = []
    for method in report.methods():
        row = report.get(method, scenario)
        value = getattr(row, metric) if row is not None else None
        if value is not None:
            values.append((value, method))
    if not values:
        return {}
    ordered = sorted({value for value, _ in values}, reverse=metric in HIGHER_IS_BETTER)
    marks = {}
    for value, method in values:
        if value == ordered[0]:
            marks[method] = BEST_MARK
        elif len(ordered) > 1 and value == ordered[1]:
            marks[method] = SECOND_MARK
    return marks


def _format_value(value, metric):
    if value is None:
        return '-'
    return f"{value:.3f}" if metric != 'mos' else f"{value:.2f}"


def format_table(report, scenarios=None):
    """Plain-text table with FID768/FID2048/KID/MOS grouped under each scenario.

    The best value per column is suffixed with '*', the second best with '+'.
    """
    scenarios = scenarios or report.scenarios()
    metrics = list(MetricReport.METRICS)
    header_methods = ['Method'] + report.methods()
    cells = {}
    for scenario in scenarios:
        for metric in metrics:
            marks = rank_marks(report, scenario, metric)
            for method in report.methods():
                row = report.get(method, scenario)
                value = getattr(row, metric) if row is not None else None
                cells[(method, scenario, metric)] = _format_value(value, metric) + marks.get(method, '')

    name_width = max(len(name) for name in header_methods)
    column_width = max([len(title) for title in METRIC_TITLES.values()]
                       + [len(text) for text in cells.values()]) + 1
    group_width = len(metrics) * (column_width + 1) - 1

    lines = [
        ' ' * name_width + ' | ' + ' | '.join(SCENARIO_TITLES[s].center(group_width) for s in scenarios),
        'Method'.ljust(name_width) + ' | ' + ' | '.join(
            ' '.join(METRIC_TITLES[m].rjust(column_width) for m in metrics) for _ in scenarios),
    ]
    lines.append('-' * len(lines[1]))
    for method in report.methods():
        lines.append(method.ljust(name_width) + ' | ' + ' | '.join(
            ' '.join(cells[(method, s, m)].rjust(column_width) for m in metrics) for s in scenarios))
    lines.append(f"{BEST_MARK} best, {SECOND_MARK} second best; lower is better except MOS")
    return '\n'.join(lines) + '\n'
