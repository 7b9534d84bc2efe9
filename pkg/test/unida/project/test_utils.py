import pytest
from pytest import raises

from unida.common.errors import ConfigError
from unida.project.utils import NUM_THREADS_ENV_VAR, resolve_num_threads


@pytest.fixture(scope="function")
def env_vars(monkeypatch):
    monkeypatch.delenv(NUM_THREADS_ENV_VAR, raising=False)
    return monkeypatch


def test__resolve_num_threads__default(env_vars):
    assert resolve_num_threads() == 1


def test__resolve_num_threads__env_var(env_vars):
    env_vars.setenv(NUM_THREADS_ENV_VAR, "4")
    assert resolve_num_threads() == 4


def test__resolve_num_threads__command_line_wins(env_vars):
    env_vars.setenv(NUM_THREADS_ENV_VAR, "4")
    assert resolve_num_threads(2) == 2


@pytest.mark.parametrize("value", ["four", "0", "-2"])
def test__resolve_num_threads__invalid_env_var__FAILS(env_vars, value):
    env_vars.setenv(NUM_THREADS_ENV_VAR, value)
    with raises(ConfigError):
        resolve_num_threads()


def test__resolve_num_threads__invalid_command_line__FAILS(env_vars):
    with raises(ConfigError) as e:
        resolve_num_threads(0)
    assert e.value.key == "threads"
