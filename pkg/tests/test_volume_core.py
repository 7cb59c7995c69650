import os

import numpy as np
import pytest
import tifffile
import torch
from PIL import Image

from conftest import random_volume
from utils.errors import DataError
from volume_core import (Domain, Volume, normalize, denormalize, to_luminance, replicate_channels,
                         project_fundus, save_projection, load_volume, save_volume, load_volumes)


def test_volume_contracts():
    with pytest.raises(DataError):
        Volume(torch.zeros(3, 4, 4))
    with pytest.raises(DataError):
        Volume(torch.zeros(0, 4, 4, 1))
    with pytest.raises(DataError):
        Volume(torch.zeros(2, 4, 4, 2))
    with pytest.raises(DataError):
        Volume(torch.zeros(2, 4, 4, 1), Domain.CONFOCAL_LIKE)
    with pytest.raises(DataError):
        Volume(torch.full((2, 4, 4, 1), 1.5))
    with pytest.raises(DataError):
        Volume(torch.full((2, 4, 4, 1), float('nan')))
    assert Volume(torch.zeros(2, 4, 4, 3)).domain is Domain.CONFOCAL_LIKE


def test_batch_layout_round_trip(colour_volume):
    batch = colour_volume.to_batch()
    assert batch.shape == (1, 3, 3, 8, 8)
    assert torch.equal(Volume.from_batch(batch).data, colour_volume.data)


def test_normalize_endpoints():
    v = normalize(np.array([0, 255, 128], dtype=np.uint8).reshape(1, 1, 3))
    values = v.data.flatten().tolist()
    assert values[0] == -1.0
    assert values[1] == 1.0
    assert values[2] == pytest.approx(128 / 127.5 - 1, abs=1e-7)
    assert normalize(np.full((1, 1, 1), 127.5)).data.item() == 0.0


def test_normalize_names_offending_index():
    raw = np.zeros((2, 2, 2, 1), dtype=np.int32)
    raw[1, 0, 1, 0] = 300
    with pytest.raises(DataError, match=r'\(1, 0, 1, 0\)'):
        normalize(raw)


def test_denormalize_inverts_normalize():
    raw = np.arange(256, dtype=np.uint8).reshape(1, 16, 16, 1)
    assert np.array_equal(denormalize(normalize(raw)).numpy(), raw)


def test_denormalize_rounds_half_up():
    v = Volume(torch.tensor([-1.0, 0.0, 1.0]).reshape(1, 1, 3, 1))
    assert denormalize(v).flatten().tolist() == [0, 128, 255]


def test_to_luminance_examples():
    v = Volume(torch.tensor([[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [0.3, 0.3, 0.3]]).reshape(1, 1, 3, 3))
    out = to_luminance(v)
    assert out.domain is Domain.OCT_LIKE
    values = out.data.flatten().tolist()
    assert values[0] == pytest.approx(1.0, abs=1e-7)
    assert values[1] == pytest.approx(-0.402, abs=1e-6)
    assert values[2] == pytest.approx(0.3, abs=1e-7)
    with pytest.raises(DataError):
        to_luminance(Volume(torch.zeros(1, 1, 1, 1)))


def test_luminance_inverts_replication(gray_volume):
    rgb = replicate_channels(gray_volume)
    assert rgb.shape == (3, 8, 8, 3)
    assert rgb.domain is Domain.CONFOCAL_LIKE
    assert torch.equal(to_luminance(rgb).data, gray_volume.data)
    with pytest.raises(DataError):
        replicate_channels(rgb)


def test_project_fundus_mean():
    constant = Volume(torch.zeros(4, 2, 2, 1))
    assert torch.allclose(project_fundus(constant).data, torch.full((2, 2, 1), 0.5))
    endpoints = Volume(torch.stack([torch.full((2, 2, 3), -1.0), torch.full((2, 2, 3), 1.0)]))
    assert torch.allclose(project_fundus(endpoints).data, torch.full((2, 2, 3), 0.5))


def test_project_fundus_matches_loop():
    v = random_volume((3, 2, 2, 1), seed=5)
    p = project_fundus(v)
    for h in range(2):
        for w in range(2):
            expected = sum((v.data[d, h, w, 0].item() + 1) / 2 for d in range(3)) / 3
            assert p.data[h, w, 0].item() == pytest.approx(expected, abs=1e-6)


def test_project_fundus_ignores_depth_order():
    v = random_volume((5, 4, 4, 3), seed=6)
    shuffled = Volume(v.data[torch.tensor([3, 0, 4, 1, 2])])
    assert torch.allclose(project_fundus(v).data, project_fundus(shuffled).data, atol=1e-6)
    assert torch.allclose(project_fundus(v, 'max').data, project_fundus(shuffled, 'max').data)


def test_project_fundus_max_and_unknown_mode():
    v = Volume(torch.tensor([-1.0, 0.0, 1.0]).reshape(3, 1, 1, 1))
    assert project_fundus(v, 'max').data.item() == 1.0
    with pytest.raises(DataError):
        project_fundus(v, 'median')


def test_save_projection_writes_png(tmp_path, colour_volume):
    path = save_projection(project_fundus(colour_volume), str(tmp_path / 'p.png'))
    with Image.open(path) as image:
        assert image.mode == 'RGB'
        assert image.size == (8, 8)


def _random_8bit(shape, seed):
    raw = np.random.default_rng(seed).integers(0, 256, size=shape, dtype=np.uint8)
    return raw, normalize(raw)


@pytest.mark.parametrize('channels', [1, 3])
@pytest.mark.parametrize('name', ['stack', 'stack.tif'])
def test_save_load_round_trip(tmp_path, channels, name):
    raw, v = _random_8bit((4, 6, 5, channels), seed=channels)
    path = save_volume(v, str(tmp_path / name))
    loaded = load_volume(path, v.domain)
    assert torch.equal(loaded.data, v.data)
    assert np.array_equal(denormalize(loaded).numpy(), raw)


def test_slice_directory_is_read_in_name_order(tmp_path):
    directory = tmp_path / 'slices'
    directory.mkdir()
    for index, value in [(2, 30), (0, 10), (1, 20)]:
        Image.fromarray(np.full((4, 4), value, dtype=np.uint8)).save(directory / f'z{index}.png')
    v = load_volume(str(directory))
    assert v.shape == (3, 4, 4, 1)
    assert denormalize(v)[:, 0, 0, 0].tolist() == [10, 20, 30]


def test_single_page_tiff_has_depth_one(tmp_path):
    path = str(tmp_path / 'one.tif')
    tifffile.imwrite(path, np.zeros((4, 4), dtype=np.uint8))
    assert load_volume(path).shape == (1, 4, 4, 1)


def test_load_errors(tmp_path):
    empty = tmp_path / 'empty'
    empty.mkdir()
    with pytest.raises(DataError, match='no PNG slices'):
        load_volume(str(empty))
    with pytest.raises(DataError, match='not found'):
        load_volume(str(tmp_path / 'missing'))

    mixed = tmp_path / 'mixed'
    mixed.mkdir()
    Image.fromarray(np.zeros((4, 4), dtype=np.uint8)).save(mixed / 'a.png')
    Image.fromarray(np.zeros((4, 5), dtype=np.uint8)).save(mixed / 'b.png')
    with pytest.raises(DataError, match='b.png'):
        load_volume(str(mixed))

    corrupt = tmp_path / 'corrupt'
    corrupt.mkdir()
    Image.fromarray(np.zeros((4, 4), dtype=np.uint8)).save(corrupt / 'a.png')
    (corrupt / 'b.png').write_bytes(b'not an image')
    with pytest.raises(DataError, match='cannot read slice .*b.png'):
        load_volume(str(corrupt))

    _, gray = _random_8bit((2, 4, 4, 1), seed=0)
    path = save_volume(gray, str(tmp_path / 'gray'))
    with pytest.raises(DataError, match='CONFOCAL_LIKE'):
        load_volume(path, Domain.CONFOCAL_LIKE)


def test_load_volumes_lists_sorted_entries(tmp_path):
    for name in ('b', 'a.tif'):
        _, v = _random_8bit((2, 4, 4, 1), seed=len(name))
        save_volume(v, str(tmp_path / name))
    volumes = load_volumes(str(tmp_path))
    assert len(volumes) == 2
    assert sorted(os.listdir(tmp_path)) == ['a.tif', 'b']
