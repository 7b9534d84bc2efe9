import numpy as np
from pytest import mark, param, raises

from unida.classical.localization import (
    LocalizationConfig,
    gaspari_cohn,
    gc_taper_matrix,
    grid_distance,
    observation_coords,
    state_coords,
)
from unida.common.errors import ValidationError
from unida.observe.operators import Downsample, SparseMask


@mark.parametrize(
    "d, c, expected",
    [
        param(0.0, 1.0, 1.0, id="origin"),
        param(1.0, 1.0, 5.0 / 24.0, id="half support"),
        param(2.0, 1.0, 0.0, id="support edge"),
        param(7.5, 2.0, 0.0, id="beyond support"),
        param(-1.0, 1.0, 5.0 / 24.0, id="symmetric"),
    ],
)
def test__gaspari_cohn__values(d, c, expected):
    assert abs(float(gaspari_cohn(d, c)) - expected) < 1e-12


def test__gaspari_cohn__continuous_and_decreasing():
    r = np.linspace(0.0, 2.5, 2501)
    taper = gaspari_cohn(r, 1.0)
    assert np.all(np.diff(taper) <= 1e-15)
    assert np.max(np.abs(np.diff(taper))) < 2e-3


def test__gaspari_cohn__invalid_length__FAILS():
    with raises(ValidationError):
        gaspari_cohn(1.0, 0.0)


def test__grid_distance__periodic_wraps():
    a = np.array([[0, 0]])
    b = np.array([[0, 7], [7, 7], [4, 0]])
    np.testing.assert_allclose(grid_distance(a, b, (8, 8)), [[1.0, np.sqrt(2.0), 4.0]])
    np.testing.assert_allclose(
        grid_distance(a, b, (8, 8), periodic=False), [[7.0, np.sqrt(98.0), 4.0]]
    )


def test__gc_taper_matrix__symmetric_with_unit_diagonal():
    coords = state_coords((1, 6, 6))
    taper = gc_taper_matrix(coords, coords, LocalizationConfig(c_loc=4.0), (6, 6))
    np.testing.assert_allclose(taper, taper.T)
    np.testing.assert_allclose(np.diag(taper), 1.0)
    assert taper.min() >= 0


def test__LocalizationConfig__half_width():
    assert LocalizationConfig().half_width == 7.5


def test__state_coords__repeats_per_channel():
    coords = state_coords((2, 2, 3))
    assert coords.shape == (12, 2)
    assert coords[:6].tolist() == coords[6:].tolist()
    assert coords[4].tolist() == [1, 1]


def test__observation_coords__mask_and_unsupported_operator():
    op = SparseMask((2, 4, 4), 0.25, mask_seed=1)
    coords = observation_coords(op)
    assert coords.shape == (8, 2)
    np.testing.assert_array_equal(coords[:4], op.pixel_coords)
    with raises(ValidationError):
        observation_coords(Downsample((1, 4, 4), 2))
