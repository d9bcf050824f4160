"""Sample statistics on simulated paths and decay-rate fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import noise
from .model import TmaModel, contraction_delta
from .stationary import default_truncation, stationary_sample

BLOCK_REPLICATES = 4096


def _values(path):
    return np.asarray(getattr(path, "values", path), dtype=float)


@dataclass
class DecayFit:
    """Least-squares fit of ``log|value|`` on lag; ``rate = exp(slope)``."""

    rate: float
    intercept: float
    r2: float
    slope: float
    slope_se: float
    lag_range: tuple
    n_lags: int

    def to_dict(self):
        return {
            "rate": self.rate,
            "intercept": self.intercept,
            "r2": self.r2,
            "slope": self.slope,
            "slope_se": self.slope_se,
            "lag_range": list(self.lag_range),
            "n_lags": self.n_lags,
        }


@dataclass
class AcfReport:
    """Autocorrelations by lag, with Bartlett standard errors when sampled.

    ``band`` is the white-noise half-width ``2/sqrt(n)``.
    """

    lags: np.ndarray
    rho_hat: np.ndarray
    n: int | None = None
    band: float | None = None
    se: np.ndarray | None = None
    decay_fit: DecayFit | None = None
    meta: dict = field(default_factory=dict)

    @property
    def values(self):
        return self.rho_hat


@dataclass
class DependenceReport:
    """``|P(y_0<=u, y_k<=v) - P(y_0<=u) P(y_k<=v)|`` by lag."""

    lags: np.ndarray
    dep: np.ndarray
    u: float
    v: float
    se: np.ndarray
    replicates: int
    decay_fit: DecayFit | None = None
    meta: dict = field(default_factory=dict)

    @property
    def values(self):
        return self.dep

    band = None


def sample_acf(path, max_lag: int) -> AcfReport:
    """Sample autocorrelations for lags ``0..max_lag``.

    Autocovariances are divided by ``n`` rather than ``n - k``, which keeps
    the sequence nonnegative definite. Standard errors use Bartlett's
    formula ``sqrt((1 + 2 sum_{j<k} rho_j^2) / n)``.
    """
    x = _values(path)
    n = x.shape[0]
    max_lag = int(max_lag)
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if n < 4 * max_lag or n < 2:
        raise ValueError(f"path of length {n} is too short for max_lag={max_lag} (need >= 4*max_lag)")
    xc = x - x.mean()
    c0 = float(xc @ xc)
    if c0 == 0:
        raise ValueError("path has zero variance")
    rho = np.empty(max_lag + 1)
    rho[0] = 1.0
    for k in range(1, max_lag + 1):
        rho[k] = float(xc[k:] @ xc[:-k]) / c0
    cum = np.concatenate([[0.0], np.cumsum(rho[1:] ** 2)])
    se = np.sqrt((1 + 2 * cum[:-1]) / n)
    se = np.concatenate([[0.0], se])[: max_lag + 1]
    return AcfReport(lags=np.arange(max_lag + 1), rho_hat=rho, n=n, band=2 / math.sqrt(n), se=se)


def sample_autocov(x, max_lag: int) -> np.ndarray:
    """Biased sample autocovariances for lags ``0..max_lag``."""
    x = _values(x)
    xc = x - x.mean()
    n = x.shape[0]
    out = np.empty(max_lag + 1)
    out[0] = float(xc @ xc) / n
    for k in range(1, max_lag + 1):
        out[k] = float(xc[k:] @ xc[:-k]) / n
    return out


def batch_means_se(x, statistic, n_batches: int | None = None) -> float:
    """Standard error of ``statistic(x)`` from its spread over contiguous batches.

    ``n_batches`` defaults to ``ceil(sqrt(n))``; a trailing remainder shorter
    than one batch is dropped.
    """
    x = _values(x)
    n = x.shape[0]
    B = int(n_batches) if n_batches else math.ceil(math.sqrt(n))
    size = n // B
    if B < 2 or size < 2:
        raise ValueError("not enough data for batch means")
    vals = np.array([statistic(x[i * size : (i + 1) * size]) for i in range(B)])
    return float(vals.std(ddof=1) / math.sqrt(B))


def _moments(x):
    m = x.mean()
    xc = x - m
    v = float(np.mean(xc * xc))
    return m, v, float(np.mean(xc**3)) / v**1.5, float(np.mean(xc**4)) / v**2


@dataclass
class SampleMoments:
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    se: dict
    n: int

    def to_dict(self):
        return {
            "n": self.n,
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
            "se": dict(self.se),
        }


def sample_moments(path, n_batches: int | None = None) -> SampleMoments:
    """Mean, variance, skewness and kurtosis with batch-means standard errors.

    Kurtosis is not excess kurtosis (3 for a Gaussian).
    """
    x = _values(path)
    n = x.shape[0]
    if n < 10**4:
        raise ValueError(f"need at least 1e4 observations, got {n}")
    if np.all(x == x[0]):
        raise ValueError("path is constant; moments are degenerate")
    mean, var, skew, kurt = _moments(x)
    B = int(n_batches) if n_batches else math.ceil(math.sqrt(n))
    size = n // B
    per = np.array([_moments(x[i * size : (i + 1) * size]) for i in range(B)])
    se = per.std(axis=0, ddof=1) / math.sqrt(B)
    names = ("mean", "variance", "skewness", "kurtosis")
    return SampleMoments(mean, var, skew, kurt, dict(zip(names, map(float, se))), n)


def dependence_decay(model: TmaModel, u: float, v: float, lags, replicates: int = 10**5, seed=0,
                     K: int | None = None, delta=None) -> DependenceReport:
    """Estimate the joint-minus-product distribution gap by lag.

    Each replicate is an independent stationary stretch ``y_0, ..., y_L``
    (closed-form start, then the recursion); replicates are generated in
    fixed blocks of 4096, block ``i`` drawing from substream
    ``(STREAM_REPLICATE, i)`` of ``seed``. Standard errors are those of the
    sample covariance of the two indicators.
    """
    lags = np.asarray(sorted({int(k) for k in lags}), dtype=np.int64)
    if lags.size == 0 or lags[0] < 0:
        raise ValueError("lags must be non-negative integers")
    R = int(replicates)
    if delta is None:
        delta = contraction_delta(model, seed=seed)
    if K is None:
        K, _ = default_truncation(model.m, float(getattr(delta, "value", delta)))
    length = int(lags[-1]) + 1
    y = np.empty((R, length))
    for blk, lo in enumerate(range(0, R, BLOCK_REPLICATES)):
        hi = min(R, lo + BLOCK_REPLICATES)
        rng = noise.stream(seed, noise.STREAM_REPLICATE, blk)
        y[lo:hi] = stationary_sample(model, hi - lo, length, rng, K)
    x0 = (y[:, 0] <= u).astype(float)
    yk = (y[:, lags] <= v).astype(float)
    z = (x0 - x0.mean())[:, None] * (yk - yk.mean(axis=0))
    cov = z.mean(axis=0)
    se = z.std(axis=0) / math.sqrt(R)
    return DependenceReport(
        lags=lags, dep=np.abs(cov), u=float(u), v=float(v), se=se, replicates=R,
        meta={"K": int(K), "seed": seed, "model_hash": model.hash},
    )


def fit_decay(report, lag_range=None, min_snr: float = 5.0) -> DecayFit:
    """Fit ``log|value| = intercept + slope * lag`` over ``lag_range``.

    ``report`` is an :class:`AcfReport`, a :class:`DependenceReport` or a
    plain sequence of values for lags ``1, 2, ...``. When standard errors are
    available only lags whose magnitude exceeds ``min_snr`` of them enter the
    fit; the lags actually used are recorded in ``lag_range``.
    """
    if hasattr(report, "lags"):
        lags = np.asarray(report.lags)
        vals = np.abs(np.asarray(report.values, dtype=float))
        se = None if getattr(report, "se", None) is None else np.asarray(report.se, dtype=float)
    else:
        vals = np.abs(np.asarray(report, dtype=float))
        lags = np.arange(1, vals.shape[0] + 1)
        se = None
    keep = lags >= 1
    if lag_range is not None:
        lo, hi = lag_range
        keep &= (lags >= lo) & (lags <= hi)
    if se is None:
        if np.any(vals[keep] <= 0):
            raise ValueError("nonpositive magnitudes in the fit range")
    else:
        keep &= vals > min_snr * se
    if np.count_nonzero(keep) < 4:
        raise ValueError(f"only {np.count_nonzero(keep)} usable lags; need at least 4")
    k = lags[keep].astype(float)
    res = stats.linregress(k, np.log(vals[keep]))
    return DecayFit(
        rate=float(math.exp(res.slope)),
        intercept=float(res.intercept),
        r2=float(res.rvalue**2),
        slope=float(res.slope),
        slope_se=float(res.stderr),
        lag_range=(int(k[0]), int(k[-1])),
        n_lags=int(k.shape[0]),
    )


def lambda_terms(path, r: float, k: int) -> np.ndarray:
    """Per-time products ``e_{n-k} 1(y_{n-1} <= r)`` whose mean estimates ``lambda_k``."""
    y = _values(path)
    e = np.asarray(path.aligned_innovations, dtype=float)
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    s = (y <= r).astype(float)
    # with t = n-1: e_{t-k+1} * s_t for t >= k-1
    return e[: e.shape[0] - k + 1] * s[k - 1 :]


def lambda_estimate(path, r: float, k: int, n_batches: int | None = None):
    """Monte Carlo ``lambda_k`` with its batch-means standard error."""
    z = lambda_terms(path, r, k)
    return float(z.mean()), batch_means_se(z, np.mean, n_batches)
