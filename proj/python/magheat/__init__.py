"""Python access to the magheat core."""

import json

from . import _core
from ._core import (
    ConfigError,
    NumericError,
    ResolutionError,
    ab_spectrum,
    beta,
    free_gaussian_norm,
    radial_levels,
)

__all__ = [
    "ConfigError",
    "NumericError",
    "ResolutionError",
    "ab_spectrum",
    "alpha_infinity",
    "beta",
    "compare",
    "free_gaussian_norm",
    "lambda_curve",
    "preset_suite",
    "radial_levels",
    "run",
    "total_flux",
]


def total_flux(field):
    return _core.total_flux(json.dumps(field))


def alpha_infinity(field, theta):
    return _core.alpha_infinity(json.dumps(field), theta)


def lambda_curve(field, s_values, R_dom=16.0, N=256):
    return _core.lambda_curve(json.dumps(field), list(s_values), R_dom, N)


def run(config, out_dir="", workers=1):
    """Run one experiment config (a dict) and return the run record as a dict."""
    return json.loads(_core.run(json.dumps(config), str(out_dir), workers))


def preset_suite(name):
    return json.loads(_core.preset_suite(name))


def compare(a, b):
    return _core.compare(str(a), str(b))
