"""Density and fibre-angle topology optimization with P-norm stress constraints."""

import json

from ._core import (
    ConfigError,
    ConstitutiveError,
    OrthotropicMaterial,
    SolverError,
    case_config,
    constitutive_matrix,
    element_stiffness,
    gradcheck,
    normalize_config,
    pnorm,
    transformed_constitutive,
)
from ._core import run as _run

__all__ = [
    "ConfigError",
    "ConstitutiveError",
    "OrthotropicMaterial",
    "SolverError",
    "case_config",
    "constitutive_matrix",
    "element_stiffness",
    "gradcheck",
    "load_case",
    "normalize_config",
    "pnorm",
    "run",
    "transformed_constitutive",
]


def load_case(case_id, variant=""):
    """Built-in case study as a dict."""
    return json.loads(case_config(case_id, variant))


def run(config, max_iter=0, output_dir=""):
    """Run an optimization. `config` is a dict or JSON text."""
    text = config if isinstance(config, str) else json.dumps(config)
    return _run(text, max_iter, str(output_dir))
