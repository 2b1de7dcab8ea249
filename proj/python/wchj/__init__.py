"""Twisted Lax-Oleinik operators for weakly coupled Hamilton-Jacobi systems.

Thin wrapper over the C++ core. Reports come back as JSON text; the helpers
below decode them.
"""

import json as _json

from ._wchj import (
    Config,
    WchjError,
    appendix_exact_W,
    appendix_residual,
    exp_neg,
    run_command,
    scenario_names,
    set_threads,
    validate_coupling,
)

__all__ = [
    "Config",
    "WchjError",
    "appendix_exact_W",
    "appendix_residual",
    "exp_neg",
    "run_command",
    "scenario_names",
    "set_threads",
    "validate_coupling",
    "converge",
    "properties",
    "appendix",
]


def _config(cfg):
    if isinstance(cfg, Config):
        return cfg
    if isinstance(cfg, dict):
        return Config(_json.dumps(cfg))
    return Config(cfg)


def converge(cfg):
    return _json.loads(_config(cfg).converge())


def properties(cfg, seed=None, random_fields=None):
    return _json.loads(_config(cfg).properties(seed, random_fields))


def appendix(cfg, times=()):
    return _json.loads(_config(cfg).appendix(list(times)))
