from pytest import mark, param, raises

from unida.common.errors import CapacityError, ValidationError
from unida.schedule.window import sliding_window


@mark.parametrize(
    "total, K, u, expected",
    [
        param(5, 5, 0, [(0, 0)], id="fits in one window"),
        param(
            50, 30, 10,
            [(0, 3), (3, 3), (6, 3), (9, 3), (12, 3), (15, 3), (18, 2), (20, 0)],
            id="pyramid advance",
        ),
        param(10, 4, 4, [(0, 1), (1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (6, 0)], id="advance 1"),
        param(7, 4, 1, [(0, 3), (3, 0)], id="end aligned"),
    ],
)
def test__sliding_window__covers_sequence(total, K, u, expected):
    windows = sliding_window(total, K, u)
    assert windows == expected
    assert windows[-1][0] + K == total


def test__sliding_window__full_sequence_cannot_slide__FAILS():
    with raises(CapacityError):
        sliding_window(10, 4, 0)


def test__sliding_window__invalid__FAILS():
    with raises(ValidationError):
        sliding_window(3, 4, 1)
    with raises(ValidationError):
        sliding_window(5, 4, -1)
