"""Flexible boundary conditions for atomistic/continuum coupling."""

import json as _json

from ._core import (
    Chain1d,
    ConfigError,
    __version__,
    dyn_relax_alpha,
    error_bound_1d,
    experiment_names,
    gf_1d,
    open_grid,
    stab1d_scan,
    verify_1d_theory,
)
from . import _core


def run_experiment(config_text, name=None):
    """Run one experiment of an INI config and return its summary as a dict."""
    return _json.loads(_core.run_experiment_json(config_text, name or ""))


__all__ = [
    "Chain1d",
    "ConfigError",
    "dyn_relax_alpha",
    "error_bound_1d",
    "experiment_names",
    "gf_1d",
    "open_grid",
    "run_experiment",
    "stab1d_scan",
    "verify_1d_theory",
]
