import numpy as np
from pytest import raises

from unida.common.errors import ShapeError
from unida.metrics.spectrum import SpectrumBands, radial_spectrum, spectrum_error

BANDS = SpectrumBands(low=(0.5, 4.0), mid=(4.0, 8.0), high=(8.0, 12.0), all=(0.5, 12.0))


def test__radial_spectrum__single_mode():
    N = 16
    x = np.arange(N)
    field = np.cos(2 * np.pi * 3 * x / N)[np.newaxis, :].repeat(N, axis=0)
    k, energy = radial_spectrum(field)
    assert k[0] == 0
    assert np.argmax(energy) == np.flatnonzero(k == 3)[0]
    others = energy[k != 3]
    assert np.all(others < 1e-20)


def test__radial_spectrum__channels_add():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((2, 8, 8))
    _, ea = radial_spectrum(a)
    _, eb = radial_spectrum(b)
    _, both = radial_spectrum(np.stack([a, b]))
    np.testing.assert_allclose(both, ea + eb)


def test__spectrum_error__self_is_zero_and_scaling():
    field = np.random.default_rng(1).standard_normal((1, 16, 16))
    assert spectrum_error(field, field, BANDS) == {"low": 0.0, "mid": 0.0, "high": 0.0, "all": 0.0}
    doubled = spectrum_error(2 * field, field, BANDS)
    for value in doubled.values():
        assert abs(value - 3.0) < 1e-9


def test__spectrum_error__empty_band_is_nan():
    field = np.random.default_rng(2).standard_normal((8, 8))
    errors = spectrum_error(field, field)
    assert np.isnan(errors["high"])
    assert errors["low"] == 0.0


def test__spectrum_error__invalid__FAILS():
    with raises(ShapeError):
        spectrum_error(np.zeros((8, 8)), np.zeros((16, 16)))
    with raises(ShapeError):
        radial_spectrum(np.zeros((8, 4)))
    with raises(ShapeError):
        radial_spectrum(np.zeros(8))
    with raises(ValueError):
        SpectrumBands(low=(4.0, 2.0))


def test__spectrum_error__invariant_to_joint_translation():
    rng = np.random.default_rng(4)
    pred, truth = rng.standard_normal((2, 2, 16, 16))
    shifted_pred = np.roll(pred, (3, -5), axis=(-2, -1))
    shifted_truth = np.roll(truth, (3, -5), axis=(-2, -1))
    expected = spectrum_error(pred, truth, BANDS)
    got = spectrum_error(shifted_pred, shifted_truth, BANDS)
    for band, value in expected.items():
        np.testing.assert_allclose(got[band], value, rtol=1e-10)
