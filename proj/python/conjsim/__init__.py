"""Python interface to the conjsim C++ core."""

import json as _json

from . import _core
from ._core import (
    DimensionError,
    Error,
    FormatError,
    PreconditionError,
    c_of,
    hamiltonian_identity_residual,
    real_simulation_operator,
    real_simulation_state,
    run_cli,
    sim_hamiltonian,
    sim_state,
)

__version__ = _core.version()


def c_property_suite(dim=4, trials=100, seed=1, tol=1e-10):
    return _json.loads(_core.c_property_suite(dim, trials, seed, tol))


def correlations(kind="mayersyao", a=1.0, c=0.0, cross=False):
    return _json.loads(_core.correlations(kind, a, complex(c), cross))


def selftest(kind="mayersyao", a=1.0, c=0.0, tol=1e-9, experiment=None):
    """Self-test a family member, or an experiment given as a dict in the CLI file format."""
    if experiment is not None:
        return _json.loads(_core.selftest_experiment(_json.dumps(experiment), kind, tol))
    return _json.loads(_core.selftest_family(kind, a, complex(c), tol))


def qkd(strategy, n, seed, workers=1):
    """Run n six-state rounds; strategy is a dict such as {"type": "honest", "a": 0.25}."""
    return _json.loads(_core.qkd(_json.dumps(strategy), n, seed, workers))


__all__ = [
    "DimensionError",
    "Error",
    "FormatError",
    "PreconditionError",
    "c_of",
    "c_property_suite",
    "correlations",
    "hamiltonian_identity_residual",
    "qkd",
    "real_simulation_operator",
    "real_simulation_state",
    "run_cli",
    "selftest",
    "sim_hamiltonian",
    "sim_state",
]
