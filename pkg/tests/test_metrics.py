import itertools
import logging

import numpy as np
import pytest
from scipy.stats import t

from conftest import random_volume
from metrics import (fid, kid, kid_with_std, mmd2_unbiased, RandomProjectionEmbedder, make_embedder, embed_set,
                     projection_batch, rank_to_score, mos_aggregate, mos_statistics, load_rank_records,
                     build_report, merge_mos, format_table, rank_marks, write_report_csv, read_report_csv,
                     merge_reports)
from models import RankRecord, MethodScores, MetricReport
from utils.errors import ConfigError, DataError


def features(rows, dims, seed):
    return np.random.default_rng(seed).normal(size=(rows, dims))


def kernel(x, y):
    return (sum(a * b for a, b in zip(x, y)) / len(x) + 1.0) ** 3


def looped_mmd(a, b):
    n, m = len(a), len(b)
    within_a = sum(kernel(a[i], a[j]) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
    within_b = sum(kernel(b[i], b[j]) for i in range(m) for j in range(m) if i != j) / (m * (m - 1))
    if n == m:
        cross = sum(kernel(a[i], b[j]) for i in range(n) for j in range(m) if i != j) / (n * (n - 1))
    else:
        cross = sum(kernel(a[i], b[j]) for i in range(n) for j in range(m)) / (n * m)
    return within_a + within_b - 2.0 * cross


def test_fid_of_a_set_with_itself():
    a = features(50, 8, seed=0)
    assert 0.0 <= fid(a, a) <= 1e-6


def test_fid_one_dimensional_moments():
    # means 0 and 1, both unbiased variances 2: 1 + 2 + 2 - 2 * sqrt(4)
    assert fid([[-1.0], [1.0]], [[0.0], [2.0]]) == pytest.approx(1.0, abs=1e-9)


def test_fid_symmetry_and_shift():
    a, b = features(40, 6, seed=1), features(30, 6, seed=2)
    assert fid(a, b) == pytest.approx(fid(b, a), rel=1e-8)
    shift = np.array([1.0, -2.0, 0.5, 0.0, 0.0, 3.0])
    assert fid(a, a + shift) == pytest.approx(float(shift @ shift), rel=1e-6)


def test_fid_warns_on_singular_covariance(caplog):
    a, b = features(3, 5, seed=3), features(3, 5, seed=4)
    with caplog.at_level(logging.WARNING, logger='metrics.distances'):
        value = fid(a, b)
    assert value >= 0.0
    assert 'near-singular' in caplog.text


def test_feature_sets_are_checked():
    with pytest.raises(DataError, match='mismatch'):
        fid(features(4, 3, 0), features(4, 2, 0))
    with pytest.raises(DataError, match='at least 2'):
        kid(features(1, 3, 0), features(4, 3, 0))
    with pytest.raises(DataError, match='2-D'):
        fid(np.zeros(4), np.zeros(4))


def test_kid_matches_a_looped_estimator():
    a, b = features(3, 4, seed=5), features(3, 4, seed=6)
    assert kid(a, b) == pytest.approx(looped_mmd(a.tolist(), b.tolist()), abs=1e-10)
    c = features(4, 4, seed=7)
    assert mmd2_unbiased(a, c) == pytest.approx(looped_mmd(a.tolist(), c.tolist()), abs=1e-10)


def test_kid_of_a_set_with_itself():
    a = features(20, 16, seed=8)
    assert abs(kid(a, a)) <= 1e-8


def test_kid_blocks():
    a, b = features(8, 4, seed=9), features(8, 4, seed=10)
    mean, std = kid_with_std(a, b, n_blocks=2)
    halves = [mmd2_unbiased(a[:4], b[:4]), mmd2_unbiased(a[4:], b[4:])]
    assert mean == pytest.approx(np.mean(halves), abs=1e-12)
    assert std == pytest.approx(np.std(halves, ddof=1), abs=1e-12)
    assert kid_with_std(a, b)[1] == 0.0
    with pytest.raises(DataError, match='blocks'):
        kid_with_std(a, b, n_blocks=5)
    with pytest.raises(DataError):
        kid_with_std(a, b, n_blocks=0)


def test_rank_to_score():
    assert rank_to_score(1, 3) == 100.0
    assert rank_to_score(3, 3) == 1.0
    assert rank_to_score(2, 3) == 50.5
    assert all(1.0 <= rank_to_score(r, 7) <= 100.0 for r in range(1, 8))


def rank_records():
    return [
        RankRecord.from_ranking('r1', 's1', {'ours': 1, 'cyclegan': 2, 'ref': 3}),
        RankRecord.from_ranking('r2', 's1', {'ours': 1, 'cyclegan': 3, 'ref': 2}),
        RankRecord.from_ranking('r1', 's2', {'ours': 2, 'cyclegan': 3, 'ref': 1}, scenario='W_REF'),
    ]


def test_mos_aggregate_and_confidence():
    records = rank_records()[:2]
    mos = mos_aggregate(records)
    assert mos == {'ours': 100.0, 'cyclegan': 25.75, 'ref': 25.75}

    stats = mos_statistics(records)
    assert stats.loc['ours', 'ci95'] == 0.0
    scores = np.array([50.5, 1.0])
    expected = t.ppf(0.975, 1) * scores.std(ddof=1) / np.sqrt(2)
    assert stats.loc['cyclegan', 'ci95'] == pytest.approx(expected)


def test_mos_scenarios():
    records = rank_records()
    assert mos_aggregate(records, 'W_REF') == {'ours': 50.5, 'cyclegan': 1.0, 'ref': 100.0}
    assert mos_aggregate(records, 'WO_REF')['ours'] == 100.0
    assert mos_aggregate(records, 'TOTAL')['ours'] == pytest.approx((100.0 + 100.0 + 50.5) / 3)
    assert mos_aggregate(records[:2], 'W_REF') == {}


def test_mos_bounds_under_random_rankings():
    rng = np.random.default_rng(11)
    for m in range(2, 8):
        methods = [f'm{i}' for i in range(m)]
        records = [RankRecord.from_ranking(f'r{k % 4}', f's{k}', dict(zip(methods, rng.permutation(m) + 1)))
                   for k in range(50)]
        stats = mos_statistics(records)
        assert set(stats.index) == set(methods)
        assert ((stats['mos'] >= 1.0) & (stats['mos'] <= 100.0)).all()
        assert (stats['ci95'] >= 0.0).all()


def test_every_permutation_once_gives_the_midpoint():
    methods = ['a', 'b', 'c', 'd', 'e']
    records = [RankRecord.from_ranking('r', f's{k}', dict(zip(methods, ranks)))
               for k, ranks in enumerate(itertools.permutations(range(1, 6)))]
    assert len(records) == 120
    for value in mos_aggregate(records).values():
        assert value == pytest.approx(50.5)


def test_mos_rejects_bad_records():
    with pytest.raises(DataError, match='permutation'):
        mos_aggregate([RankRecord(rater_id='r', image_set_id='s', entries=['a', 'b'], ranks=[1, 1])])
    with pytest.raises(DataError, match='same entries'):
        mos_aggregate([RankRecord.from_ranking('r', 's', {'a': 1, 'b': 2}),
                       RankRecord.from_ranking('r', 't', {'a': 1, 'c': 2})])
    with pytest.raises(DataError):
        mos_aggregate([])


def test_load_rank_records(tmp_path):
    path = tmp_path / 'ranks.csv'
    path.write_text('rater_id,set_id,method,rank\n'
                    'r1,1,ours,1\nr1,1,baseline,2\n'
                    'r2,1,ours,2\nr2,1,baseline,1\n')
    records = load_rank_records(str(path))
    assert len(records) == 2
    assert records[0].scenario == 'WO_REF'
    assert mos_aggregate(records) == {'ours': 50.5, 'baseline': 50.5}
    with pytest.raises(DataError, match='not found'):
        load_rank_records(str(tmp_path / 'missing.csv'))


def test_random_projection_embedder():
    embedder = RandomProjectionEmbedder()
    images = projection_batch([random_volume((2, 8, 8, 3), seed=i) for i in range(2)], embedder.input_size)
    assert images.shape == (2, 3, 32, 32)
    assert 0.0 <= images.min() and images.max() <= 1.0
    assert embedder.embed(images, 768).shape == (2, 768)
    assert embedder.embed(images, 2048).shape == (2, 2048)
    assert np.array_equal(embedder.embed(images, 768), RandomProjectionEmbedder().embed(images, 768))
    with pytest.raises(ConfigError):
        embedder.embed(images, 64)
    with pytest.raises(ConfigError):
        make_embedder('vgg')


def test_embed_set_keeps_input_order():
    embedder = make_embedder('random')
    volumes = [random_volume((2, 8, 8, 1), seed=i) for i in range(3)]
    both = embed_set(volumes, embedder, 768)
    assert both.shape == (3, 768)
    assert np.allclose(both[2], embed_set(volumes[2:], embedder, 768)[0])
    with pytest.raises(DataError):
        embed_set([], embedder, 768)


def test_build_report_pools_total():
    embedder = make_embedder('random')
    with_ref = [random_volume((2, 8, 8, 3), seed=i) for i in range(2)]
    without_ref = [random_volume((2, 8, 8, 3), seed=10 + i) for i in range(2)]
    references = {'W_REF': with_ref, 'WO_REF': without_ref}
    report = build_report({'copy': references}, references, embedder, rank_records=rank_records())

    assert report.methods() == ['copy']
    assert report.scenarios() == ['W_REF', 'WO_REF', 'TOTAL']
    total = report.get('copy', 'TOTAL')
    assert total.n_generated == 4 and total.n_reference == 4
    assert 0.0 <= total.fid768 <= 1e-3
    assert abs(total.kid) <= 1e-8
    assert report.get('copy', 'W_REF').mos is None


def test_build_report_skips_a_missing_scenario():
    embedder = make_embedder('random')
    volumes = [random_volume((2, 8, 8, 3), seed=i) for i in range(2)]
    report = build_report({'only': {'WO_REF': volumes}}, {'WO_REF': volumes}, embedder, dims=(768,))
    assert report.scenarios() == ['WO_REF']
    assert report.get('only', 'WO_REF').fid2048 is None


def sample_report():
    report = MetricReport()
    for method, fid768, kid_value in (('ours', 10.0, 0.01), ('cyclegan', 12.0, 0.02), ('cut', 15.0, 0.005)):
        report.upsert(MethodScores(method=method, scenario='WO_REF', fid768=fid768, fid2048=fid768 * 2,
                                   kid=kid_value))
    return merge_mos(report, rank_records()[:2], scenarios=('WO_REF',))


def test_rank_marks():
    report = sample_report()
    assert rank_marks(report, 'WO_REF', 'fid768') == {'ours': '*', 'cyclegan': '+'}
    assert rank_marks(report, 'WO_REF', 'kid') == {'cut': '*', 'ours': '+'}
    assert rank_marks(report, 'WO_REF', 'mos') == {'ours': '*', 'cyclegan': '+'}
    assert rank_marks(report, 'W_REF', 'mos') == {}


def test_merge_mos_keeps_scores():
    row = sample_report().get('ours', 'WO_REF')
    assert row.mos == 100.0
    assert row.fid768 == 10.0


def test_format_table():
    table = format_table(sample_report())
    lines = table.splitlines()
    assert 'W/O Ref' in lines[0]
    assert 'FID768' in lines[1] and 'MOS' in lines[1]
    assert any(line.startswith('ours') and '10.000*' in line and '100.00*' in line for line in lines)
    assert any(line.startswith('cut') and '0.005*' in line for line in lines)


def test_report_csv_round_trip_and_merge(tmp_path):
    report = sample_report()
    path = write_report_csv(report, str(tmp_path / 'metrics.csv'))
    again = read_report_csv(path)
    assert again.methods() == report.methods()
    assert again.get('cut', 'WO_REF').kid == pytest.approx(0.005)

    extra = MetricReport()
    extra.upsert(MethodScores(method='ours', scenario='W_REF', fid768=9.0))
    merged = merge_reports([again, extra])
    assert merged.scenarios() == ['W_REF', 'WO_REF']
    assert merged.get('ours', 'W_REF').fid768 == 9.0
    assert merged.get('ours', 'WO_REF').mos == 100.0

    bad = tmp_path / 'bad.csv'
    bad.write_text('a,b\n1,2\n')
    with pytest.raises(DataError, match='not a metric report'):
        read_report_csv(str(bad))
