__all__ = ["resolve_num_threads", "NUM_THREADS_ENV_VAR"]

import logging

from aibs_informatics_core.utils.os_operations import get_env_var

from unida.common.errors import ConfigError

logger = logging.getLogger(__name__)

NUM_THREADS_ENV_VAR = "UNIDA_NUM_THREADS"


def resolve_num_threads(cli_value: int | None = None) -> int:
    """Resolve the worker thread count.

    Order of resolution:
        1. command-line value (`--threads`)
        2. `UNIDA_NUM_THREADS` environment variable
        3. 1

    Raises:
        ConfigError: if the resolved value is not a positive integer.
    """
    if cli_value is not None:
        threads, source = cli_value, "COMMAND LINE"
    else:
        env_value = get_env_var(NUM_THREADS_ENV_VAR)
        if env_value:
            try:
                threads, source = int(env_value), "ENV VAR"
            except ValueError:
                raise ConfigError(
                    f"{NUM_THREADS_ENV_VAR}={env_value!r} is not an integer", NUM_THREADS_ENV_VAR
                )
        else:
            threads, source = 1, "DEFAULT"
    if threads < 1:
        raise ConfigError(f"Thread count must be >= 1, got {threads}", "threads")
    logger.info(f"Using {threads} worker thread(s) from {source}")
    return threads
