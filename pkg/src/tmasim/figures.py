"""Data behind the two figures: marginal shape against the threshold, and the
slowly decaying sample ACF of the (5, -3) feedback model."""

from __future__ import annotations

import numpy as np

from . import analytics, estimate
from .model import TmaModel, load_model
from .noise import StandardNormal
from .stationary import simulate_recursive

FIG1_MU = (4.0, -1.0)
FIG1_GRID = (-6.0, 8.0, 0.05)


def parse_grid(text: str):
    """``"lo:hi:step"`` to a tuple of floats."""
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValueError(f"grid must look like lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise ValueError(f"invalid grid {text!r}")
    return lo, hi, step


def grid_points(lo, hi, step):
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def fig1_rows(grid=FIG1_GRID, mu=FIG1_MU, dist=StandardNormal):
    """``(r, skewness, kurtosis)`` of the drift-switching model over a threshold grid."""
    r = grid_points(*grid)
    sk, ku = analytics.ex31_skewness_kurtosis(mu[0], mu[1], r, dist)
    return np.column_stack([r, sk, ku])


def fig2_model() -> TmaModel:
    return load_model("eq31")


def fig2_report(seed=0, n=10**4, max_lag=20, burn_in=None) -> estimate.AcfReport:
    """Sample ACF of one stationary run of the (5, -3) model."""
    model = fig2_model()
    path = simulate_recursive(model, n, burn_in=burn_in, seed=seed)
    rep = estimate.sample_acf(path, max_lag)
    rep.meta.update({"seed": seed, "model_hash": model.hash, "burn_in": path.burn_in})
    return rep
