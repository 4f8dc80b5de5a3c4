"""Oscillation-property falsification for parametric ODE models."""

import json

from . import _core
from ._core import ConfigError, OscfError, laub_loomis_dynamics, nominal_parameters, preset_names

__all__ = [
    "ConfigError",
    "OscfError",
    "edge_list",
    "emit_matrix",
    "laub_loomis_dynamics",
    "mh_matrix",
    "nominal_parameters",
    "preset",
    "preset_names",
    "run_experiment",
]


def _config_arg(config):
    return config if isinstance(config, str) else json.dumps(config)


def preset(name):
    """Preset configuration (exp1, exp2, exp3) as a dict."""
    return json.loads(_core.preset(name))


def run_experiment(config="exp2", seed=None, points=None):
    """Run one exploration.

    `config` is a preset name, a JSON file path or a config dict. Returns a
    dict with the report, the witness trace CSV text and the wall time.
    """
    report, trace_csv, seconds = _core.run_experiment(
        _config_arg(config), -1 if seed is None else seed, -1 if points is None else points
    )
    return {"report": json.loads(report), "trace_csv": trace_csv, "seconds": seconds}


def emit_matrix(config="exp2"):
    return _core.emit_matrix(_config_arg(config))


def edge_list(config="exp2"):
    return _core.edge_list(_config_arg(config))


def mh_matrix(n, edges, pi):
    return _core.mh_matrix(n, [tuple(e) for e in edges], list(pi))
