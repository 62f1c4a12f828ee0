"""Estimators for transporting treatment effects from a trial to a target population."""

import json

import numpy as np

from ._core import (
    CausalTransportError,
    __version__,
    estimator_ids,
    gamma,
    generate,
    measure_names,
    phi,
    spec_names,
    truth,
)
from . import _core

__all__ = [
    "CausalTransportError",
    "__version__",
    "estimate",
    "estimator_ids",
    "gamma",
    "generate",
    "measure_names",
    "phi",
    "simulate",
    "spec_names",
    "truth",
]


def estimate(S, X, A, Y, estimators=("ee",), measures=("RD",), pi=0.5, link="auto",
             sandwich=True, folds=1, seed=1):
    """Estimate target-population effects. A is -1 and Y is NaN where unobserved.

    Returns one dict per (estimator, measure) cell, estimator-major.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    text = _core.estimate_json(
        np.asarray(S, dtype=np.int32), X, np.asarray(A, dtype=np.int32), np.asarray(Y, dtype=float),
        list(estimators), list(measures), pi, link, sandwich, folds, seed)
    return json.loads(text)


def simulate(spec, n, reps, seed=1, estimators=("wht", "tG", "ee"), measures=("RD", "RR", "OR"),
             truth_draws=1_000_000, threads=1, sandwich=False):
    """Monte Carlo study on a built-in design; returns the report as a dict."""
    return json.loads(_core.simulate_json(spec, n, reps, seed, list(estimators), list(measures),
                                          truth_draws, threads, sandwich))
