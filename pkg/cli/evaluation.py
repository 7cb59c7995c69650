import logging
import os

import click

from cli.common import pass_run, parse_dims, ensure_free_file, recorded_run
from config import resolve_device
from metrics import (make_embedder, build_report, load_rank_records, write_report_csv, read_report_csv,
                     merge_reports, format_table)
from models import SCENARIOS
from utils.errors import ConfigError, DataError
from utils.storage import prepare_output_dir
from volume_core import load_volumes

logger = logging.getLogger(__name__)

METRICS_CSV = 'metrics.csv'
METRICS_TABLE = 'metrics.txt'


def _parse_generated(values):
    """METHOD=DIR pairs (a bare DIR is named after its folder), order kept."""
    methods = {}
    for value in values:
        name, sep, path = value.partition('=')
        if not sep:
            name, path = os.path.basename(os.path.normpath(value)), value
        if not name or not path:
            raise ConfigError(f"--generated expects METHOD=DIR, got {value!r}")
        if name in methods:
            raise ConfigError(f"method {name!r} given twice")
        methods[name] = path
    return methods


@click.command('evaluate')
@click.argument('out_dir', type=click.Path(file_okay=False))
@click.option('--generated', 'generated', multiple=True, required=True, metavar='METHOD=DIR',
              help='Generated volumes of one method; repeatable.')
@click.option('--reference', type=click.Path(exists=True, file_okay=False), required=True,
              help='Real volumes of the target domain.')
@click.option('--ranks', type=click.Path(exists=True, dir_okay=False), help='Rater rankings CSV for MOS.')
@click.option('--scenario', type=click.Choice(SCENARIOS), default='TOTAL', show_default=True,
              help='Scenario the volumes belong to.')
@click.option('--dims', default='768,2048', show_default=True, help='FID feature dimensions.')
@click.option('--embedder', 'embedder_name', type=click.Choice(['random', 'inception']), default='inception',
              show_default=True, help='Feature extractor.')
@click.option('--kid-blocks', type=click.IntRange(min=1), default=1, show_default=True,
              help='Disjoint subsets averaged for KID.')
@pass_run
def evaluate(run, out_dir, generated, reference, ranks, scenario, dims, embedder_name, kid_blocks):
    """Score generated volumes against references with FID, KID and (optionally) MOS."""
    dims = parse_dims(dims)
    methods = _parse_generated(generated)
    embedder = make_embedder(embedder_name, weights_path=run.settings.INCEPTION_WEIGHTS,
                             device=resolve_device(run.settings))
    for dim in dims:
        embedder.check_dim(dim)

    references = load_volumes(reference)
    if not references:
        raise DataError(f"no volumes under {reference}")
    volumes = {}
    for name, path in methods.items():
        volumes[name] = {scenario: load_volumes(path)}
        logger.info(f"{name}: {len(volumes[name][scenario])} volumes from {path}")
    rank_records = load_rank_records(ranks) if ranks else None
    prepare_output_dir(out_dir, run.force)

    config = {'scenario': scenario, 'dims': list(dims), 'embedder': embedder.name, 'kid_blocks': kid_blocks,
              'methods': methods}
    inputs = [reference] + list(methods.values()) + ([ranks] if ranks else [])
    with recorded_run(run, 'evaluate', out_dir, config=config, inputs=inputs) as manifest:
        report = build_report(volumes, {scenario: references}, embedder, dims, rank_records=rank_records,
                              kid_blocks=kid_blocks, scenarios=(scenario,))
        csv_path = write_report_csv(report, os.path.join(out_dir, METRICS_CSV))
        table = format_table(report)
        table_path = os.path.join(out_dir, METRICS_TABLE)
        with open(table_path, 'w', encoding='utf-8') as handle:
            handle.write(table)
        manifest.outputs.extend([csv_path, table_path])
    click.echo(table, nl=False)


@click.command('report')
@click.argument('metric_files', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--out', 'out_path', type=click.Path(dir_okay=False), help='Merged CSV; the table goes next to it.')
@pass_run
def report(run, metric_files, out_path):
    """Merge metric CSVs and print the comparison table."""
    merged = merge_reports(read_report_csv(path) for path in metric_files)
    table = format_table(merged)
    if out_path:
        ensure_free_file(out_path, run.force)
        with recorded_run(run, 'report', out_path, inputs=metric_files) as manifest:
            write_report_csv(merged, out_path)
            table_path = os.path.splitext(out_path)[0] + '.txt'
            with open(table_path, 'w', encoding='utf-8') as handle:
                handle.write(table)
            manifest.outputs.extend([out_path, table_path])
    click.echo(table, nl=False)
