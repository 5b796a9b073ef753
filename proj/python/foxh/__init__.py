"""Generalized Fox-H processes."""

import json

from ._foxh import (
    FoxhError,
    Process,
    Spec,
    kernel_inner_product,
    ks_two_sample,
    msd,
    schema_version,
    trajectory_csv,
)

__all__ = [
    "FoxhError",
    "Process",
    "Spec",
    "kernel_inner_product",
    "ks_two_sample",
    "msd",
    "process",
    "schema_version",
    "trajectory_csv",
]


def process(hurst, upper=(), lower=(), decomposition=()):
    """Build a Process from parameter pairs and a list of factor dicts.

    Factors use the configuration file layout, e.g. {"type": "mwright", "beta": 0.75}.
    """
    doc = {
        "schema_version": schema_version,
        "process": {
            "hurst": hurst,
            "spec": {"upper": [list(p) for p in upper], "lower": [list(p) for p in lower]},
            "decomposition": list(decomposition),
        },
    }
    return Process.from_json(json.dumps(doc))
