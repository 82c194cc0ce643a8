from .commands import (
    PRESETS,
    cmd_converge,
    cmd_green,
    cmd_phase_scan,
    cmd_sample,
    cmd_spectrum,
    cmd_trajectories,
    commands,
    run,
    variance_limit,
)
from .config import ExperimentConfig, load_config, parse_float_list, parse_int_list
from .svg import render_polylines, write_svg

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_int_list",
    "parse_float_list",
    "PRESETS",
    "commands",
    "run",
    "cmd_trajectories",
    "cmd_phase_scan",
    "cmd_green",
    "cmd_sample",
    "cmd_converge",
    "cmd_spectrum",
    "variance_limit",
    "render_polylines",
    "write_svg",
]
