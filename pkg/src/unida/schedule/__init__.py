from unida.schedule.cat import CatConfig, sample_cat_levels
from unida.schedule.matrix import (
    Regime,
    SchedulingMatrix,
    active_set,
    build_schedule,
    schedule_to_csv,
)
from unida.schedule.window import sliding_window

__all__ = [
    "CatConfig",
    "Regime",
    "SchedulingMatrix",
    "active_set",
    "build_schedule",
    "sample_cat_levels",
    "schedule_to_csv",
    "sliding_window",
]
