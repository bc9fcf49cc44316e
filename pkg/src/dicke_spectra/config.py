import logging
import math
import os

import numpy as np
import yaml
from voluptuous import All, Any, Coerce, Length, Optional, Range, Required

from . import DEFAULT_EPSILON
from .errors import InvalidParameters
from .model import ModelParams
from .paths import get_preset_path, list_presets
from .util.schema import Schema, validate_schema

logger = logging.getLogger(__name__)

number = Any(int, float)

grid_def = Any(
    [Any(number, str)],
    {
        Required("start"): number,
        Required("stop"): number,
        Optional("step"): All(number, Range(min=0, min_included=False)),
    },
)

run_config_schema = Schema(
    {
        Optional("omega"): Coerce(float),
        Optional("omega0"): Coerce(float),
        Optional("gamma"): Coerce(float),
        # j may be written as a fraction, e.g. "5/2"
        Optional("j"): Any(number, str),
        Optional("epsilon"): Coerce(float),
        Optional("basis"): Any("fock", "coherent", "both"),
        Optional("level"): All(int, Range(min=0)),
        Optional("cutoff"): All(int, Range(min=0)),
        Optional("cutoff_limit"): All(int, Range(min=0)),
        Optional("workers"): All(int, Range(min=1)),
        Optional("out"): str,
        Optional("scan_policy"): Any("linear", "bisect"),
        Optional("window"): All(int, Range(min=1)),
        Optional("index_by"): Any("lower", "upper"),
        Optional("swept_parameter"): Any("j", "gamma", "omega0", "cutoff"),
        Optional("grid"): grid_def,
        Optional("cutoff_range"): Any(
            All([All(int, Range(min=0))], Length(min=1)),
            {
                Required("start"): All(int, Range(min=0)),
                Required("stop"): All(int, Range(min=0)),
                Optional("step"): All(int, Range(min=1)),
            },
        ),
    }
)

DEFAULTS = {
    "omega": 1.0,
    "omega0": 1.0,
    "epsilon": DEFAULT_EPSILON,
    "basis": "both",
    "level": 0,
    "workers": 1,
    "scan_policy": "linear",
    "window": 1,
    "index_by": "lower",
}

PARAMETER_KEYS = ("omega", "omega0", "gamma", "j", "epsilon")

CONFIG_KEYS = frozenset(str(key) for key in run_config_schema.schema)


def load_config_file(path):
    """Load and validate a flat YAML run configuration."""
    if not os.path.exists(path):
        raise InvalidParameters(f"Couldn't find configuration file: {path}")
    logger.debug(f"loading config from `{path}`")
    with open(path) as f:
        config = yaml.safe_load(f) or {}
    if not isinstance(config, dict):
        raise InvalidParameters(f"Configuration file {path} is not a flat mapping")
    return validate_schema(run_config_schema, config, f"Invalid configuration {path}:")


def load_preset(name):
    path = get_preset_path(name)
    if not path.exists():
        raise InvalidParameters(
            f"unknown preset, expected one of {', '.join(list_presets())}",
            preset=name,
        )
    return load_config_file(path)


def resolve_options(flags, config_path=None, preset=None):
    """
    Merge built-in defaults, a preset, a configuration file and command-line
    flags, later sources winning. Flags whose value is None were not given.
    """
    options = dict(DEFAULTS)
    if preset:
        options.update(load_preset(preset))
    if config_path:
        options.update(load_config_file(config_path))
    overrides = {k: v for k, v in flags.items() if v is not None and k in CONFIG_KEYS}
    options.update(validate_schema(run_config_schema, overrides, "Invalid flags:"))
    return options


def expand_grid(grid):
    """Explicit list, or an inclusive {start, stop, step} range."""
    if isinstance(grid, dict):
        start, stop, step = grid["start"], grid["stop"], grid.get("step", 1)
        if stop < start:
            raise InvalidParameters("grid stop lies below start", **grid)
        # never past stop; the slack absorbs float error in the division
        count = math.floor((stop - start) / step + 1e-9)
        values = np.round(start + step * np.arange(count + 1), 12)
        if all(isinstance(v, int) for v in (start, stop, step)):
            return [int(v) for v in values]
        return [float(v) for v in values]
    return list(grid)


def params_from_options(options):
    missing = [key for key in ("gamma", "j") if options.get(key) is None]
    if missing:
        raise InvalidParameters(
            "missing model parameters, give them as flags or in the config",
            missing=missing,
        )
    return ModelParams(**{key: options[key] for key in PARAMETER_KEYS})


def basis_kinds(value):
    if value == "both":
        return ["fock", "coherent"]
    return [value]
