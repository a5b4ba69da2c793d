"""Dynamical canonical systems built by GBDT."""

import json

from ._gbdt import (
    Error,
    ExplicitModel,
    GeneralModel,
    InputError,
    NotPositiveDefiniteError,
    Signature,
    SpectralSeparationError,
    Triple,
    complete_s0,
    random_triple,
    verify_identity,
)
from ._gbdt import check as _check
from ._gbdt import solve as _solve

__all__ = [
    "Error",
    "ExplicitModel",
    "GeneralModel",
    "InputError",
    "NotPositiveDefiniteError",
    "Signature",
    "SpectralSeparationError",
    "Triple",
    "check",
    "complete_s0",
    "random_triple",
    "solve",
    "verify_identity",
]


def check(scenario, seed=None):
    """Run the verification suite of a scenario file and return its checks."""
    return _check(str(scenario), seed)


def solve(scenario, seed=None):
    """Sample a scenario on its grid.

    Returns a dict with ``xs``, ``ts``, ``Y`` of shape (nx, nt, m, n),
    ``Hcal`` of shape (nx, m, m) and the parsed ``metadata``.
    """
    out = _solve(str(scenario), seed)
    out["metadata"] = json.loads(out["metadata"])
    return out
