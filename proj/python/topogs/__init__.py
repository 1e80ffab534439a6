"""Topology-preserving Gaussian splat embeddings of high-dimensional data."""

import json

import numpy as np

from . import _core
from ._core import (
    DataError,
    Error,
    NumericalError,
    UsageError,
    compute_metrics,
    continuity,
    generate_swiss_roll,
    generate_trajectory,
    num_threads,
    read_ply,
    set_num_threads,
    standardize,
    stress1,
    trustworthiness,
)


def default_config():
    """Default fit configuration as a plain dict."""
    return json.loads(_core.default_config())


def fit(points, energy=None, standardize_input=True, **config):
    """Fit one Gaussian per row of `points`.

    Keyword arguments override the defaults from default_config(). Returns
    a dict of numpy arrays plus the per-step loss history and the resolved
    config.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if energy is not None:
        energy = np.ascontiguousarray(energy, dtype=np.float64)
    out = _core.fit(points, energy, json.dumps(config), standardize_input)
    out["config"] = json.loads(out["config"])
    return out


def cli(*args):
    """Run the command-line interface in-process; returns (code, stdout, stderr)."""
    return _core.run([str(a) for a in args])


__all__ = [
    "DataError",
    "Error",
    "NumericalError",
    "UsageError",
    "cli",
    "compute_metrics",
    "continuity",
    "default_config",
    "fit",
    "generate_swiss_roll",
    "generate_trajectory",
    "num_threads",
    "read_ply",
    "set_num_threads",
    "standardize",
    "stress1",
    "trustworthiness",
]
