"""
The versioned defaults table.

Every tolerance, grid, family and seed the toolkit uses when a run
configuration is silent lives here, and the whole table is echoed into the
header of every report. Each key can be overridden from the environment as
GAUSSBESOV_<KEY in upper case>.
"""

import logging

from utils.helpers import get_env_float, get_env_int

DEFAULTS_VERSION = "2026.10-1"

DEFAULTS = {
    # time grid for the Haar-measure outer norms
    "t_min": 1e-6,
    "t_max": 60.0,
    "t_count": 601,
    # Gauss-Hermite points per axis against gamma_d
    "gauss_points": 60,
    "gauss_points_2d": 40,
    # points for the dense composite rule used with non-smooth integrands
    "trapezoid_points": 4001,
    "trapezoid_half_width": 10.0,
    # tolerances
    "bisection_rtol": 1e-13,
    "operator_tol": 1e-10,
    "subordination_tol": 1e-10,
    "kernel_tol": 1e-8,
    "quadrature_slack": 1e-6,
    "refinement_slack": 0.05,
    "closed_form_tol": 1e-3,
    # test family
    "family_max_order": 16,
    "family_extension_order": 25,
    "family_random_count": 20,
    "family_random_order": 9,
    "seed": 0,
    # verification runner
    "workers": 4,
    "dimension": 1,
}


def load_defaults(environ_prefix="GAUSSBESOV_"):
    """Return a copy of DEFAULTS with environment overrides applied"""
    defaults = dict(DEFAULTS)
    for key, value in DEFAULTS.items():
        env_key = f"{environ_prefix}{key.upper()}"
        if isinstance(value, int):
            defaults[key] = get_env_int(env_key, value)
        else:
            defaults[key] = get_env_float(env_key, value)
        if defaults[key] != value:
            logging.info(f"Default {key} overridden from environment: {defaults[key]}")
    return defaults


def defaults_header(defaults=None):
    """The header block written at the top of every report"""
    return {
        "defaults_version": DEFAULTS_VERSION,
        "defaults": dict(defaults if defaults is not None else DEFAULTS),
    }


def defaults_from_config(mapping, prefix="GAUSSBESOV_"):
    """Read the defaults table back out of a Flask app.config"""
    return {key: mapping.get(f"{prefix}{key.upper()}", value) for key, value in DEFAULTS.items()}
