"""Python access to the nadac simulator."""

import json
from os import PathLike
from pathlib import Path

from ._core import (
    NadacError,
    RunAbort,
    ValidationError,
    smoothed_clamp_slope,
    smoothed_clamp_value,
    solve_dare,
    version,
)
from . import _core

__all__ = [
    "NadacError",
    "RunAbort",
    "ValidationError",
    "load_config",
    "run",
    "smoothed_clamp_slope",
    "smoothed_clamp_value",
    "solve_dare",
    "validate",
    "version",
]


def load_config(source):
    """A dict, or a path to a JSON config or manifest."""
    if isinstance(source, dict):
        return source
    if isinstance(source, (str, PathLike)):
        return json.loads(Path(source).read_text())
    raise TypeError("config must be a dict or a path")


def validate(config):
    _core.validate_json(json.dumps(load_config(config)))


def run(config, **overrides):
    """Run a config; keyword overrides replace top-level fields (horizon, seed, ...)."""
    cfg = dict(load_config(config))
    cfg.update(overrides)
    return _core.run_json(json.dumps(cfg))
