"""Closed-form results for special TMA models and covariance-bound constants.

Two model shapes admit exact second-order results:

* drift switching on the previous value (``q = 0, d = 1``), whose regime
  indicator is a two-state Markov chain with stationary probability
  ``delta0`` and autocorrelation factor ``beta``;
* the driftless TMA(1) switching on ``y_{n-2}``, whose ACF is nonzero at
  lag 1 only.

For general models only the exponential covariance envelope
:class:`CovarianceBound` is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import noise
from .model import DeltaEstimate, ModelError, TmaModel, contraction_delta, structural_m
from .noise import Innovation


@dataclass(frozen=True)
class Ex31Constants:
    """Constants of the drift-switching model.

    beta   : ``G(r-mu1) - G(r-mu2)``
    delta0 : stationary ``P(y_n <= r)``
    lambda1: ``E[e_{n-1} 1(y_{n-1} <= r)]``
    sigma2 : innovation variance
    """

    beta: float
    delta0: float
    lambda1: float
    sigma2: float

    def lam(self, k):
        """``lambda_k = E[e_{n-k} 1(y_{n-1} <= r)] = beta**(k-1) * lambda1``."""
        k = np.asarray(k)
        if np.any(k < 1):
            raise ValueError("lambda_k is defined for k >= 1")
        return self.lambda1 * np.power(self.beta, k - 1.0)


def _finite_variance(dist: Innovation):
    if not dist.has_finite_variance:
        raise ValueError(f"{dist} has infinite variance")


def ex31_constants(mu1: float, mu2: float, r: float, dist: Innovation = noise.StandardNormal) -> Ex31Constants:
    """Exact constants for ``y_n = mu_{regime} + e_n`` switching on ``y_{n-1}``.

    ``lambda1`` comes from unrolling ``1(y_n <= r) = U_n + W_n 1(y_{n-1} <= r)``
    once and using independence of ``e_n`` from the past::

        lambda1 = M(r-mu2) + delta0 * (M(r-mu1) - M(r-mu2)),   M(c) = E[e 1(e <= c)]

    and the same step gives ``lambda_k = beta * lambda_{k-1}``.
    """
    _finite_variance(dist)
    g1 = float(noise.cdf(dist, r - mu1))
    g2 = float(noise.cdf(dist, r - mu2))
    beta = g1 - g2
    denom = 1.0 - g1 + g2
    delta0 = g2 / denom
    m1 = noise.partial_first_moment(dist, r - mu1)
    m2 = noise.partial_first_moment(dist, r - mu2)
    lambda1 = m2 + delta0 * (m1 - m2)
    return Ex31Constants(beta=beta, delta0=delta0, lambda1=lambda1, sigma2=dist.variance)


def ex31_variance(c: Ex31Constants, mu1: float, mu2: float) -> float:
    return c.sigma2 + (mu1 - mu2) ** 2 * c.delta0 * (1 - c.delta0)


def ex31_acf(k, c: Ex31Constants, mu1: float, mu2: float):
    """Autocorrelation at lag(s) ``k >= 1``.

    ``[(mu1-mu2) lambda_k + (mu1-mu2)^2 delta0 (1-delta0) beta^k] / var(y)``
    """
    k = np.asarray(k)
    if np.any(k < 1):
        raise ValueError("lag must be >= 1")
    dm = mu1 - mu2
    pq = c.delta0 * (1 - c.delta0)
    num = dm * c.lam(k) + dm * dm * pq * np.power(c.beta, k.astype(float))
    out = num / ex31_variance(c, mu1, mu2)
    return float(out) if out.ndim == 0 else out


def ex31_autocov(k, c: Ex31Constants, mu1: float, mu2: float):
    return ex31_acf(k, c, mu1, mu2) * ex31_variance(c, mu1, mu2)


def ex31_skewness_kurtosis(mu1: float, mu2: float, r: float, dist: Innovation = noise.StandardNormal):
    """Skewness and (non-excess) kurtosis of the stationary marginal.

    Vectorised over ``r``.
    """
    if dist.kind == "student_t" and dist.param <= 4:
        raise ValueError(f"{dist} has no finite fourth moment")
    s2 = dist.variance
    m3 = noise.raw_moment(dist, 3)
    m4 = noise.raw_moment(dist, 4)
    r = np.asarray(r, dtype=float)
    g1 = noise.cdf(dist, r - mu1)
    g2 = noise.cdf(dist, r - mu2)
    p = g2 / (1.0 - g1 + g2)
    dm = mu1 - mu2
    v = s2 + dm**2 * p * (1 - p)
    skew = (m3 + dm**3 * (p - 3 * p**2 + 2 * p**3)) / v**1.5
    kurt = (m4 + 6 * s2 * dm**2 * p * (1 - p) + dm**4 * (p - 4 * p**2 + 6 * p**3 - 3 * p**4)) / v**2
    if r.ndim == 0:
        return float(skew), float(kurt)
    return skew, kurt


def ex31_marginal_density(x, mu1: float, mu2: float, r: float, dist: Innovation = noise.StandardNormal):
    """Two-component mixture density of the stationary marginal."""
    c = ex31_constants(mu1, mu2, r, dist)
    x = np.asarray(x, dtype=float)
    return c.delta0 * noise.pdf(dist, x - mu1) + (1 - c.delta0) * noise.pdf(dist, x - mu2)


def _two_term_cdf(dist: Innovation, coef: float, r: float):
    """``P(e_2 + coef * e_1 <= r)`` exactly for normal laws, else ``None``."""
    if dist.kind in ("normal", "scaled_normal"):
        return float(special.ndtr(r / (dist.scale * math.sqrt(1 + coef * coef))))
    return None


def ex32_varrho(phi: float, psi: float, r: float, dist: Innovation = noise.StandardNormal,
                mc_samples: int = 10**7, seed=0):
    """Stationary ``P(y_n <= r)`` of the driftless TMA(1) with delay 2.

    ``P(a <= r) / [P(b > r) + P(a <= r)]`` with ``a = e_2 + psi e_1`` and
    ``b = e_2 + phi e_1``. Exact for normal innovations; otherwise both
    probabilities are Monte Carlo estimates from one sample and the returned
    standard error comes from the delta method.

    Returns ``(varrho, se)``.
    """
    pa = _two_term_cdf(dist, psi, r)
    pb = _two_term_cdf(dist, phi, r)
    if pa is not None:
        return pa / ((1.0 - pb) + pa), 0.0
    rng = noise.stream(seed, noise.STREAM_AUX, 2)
    n = int(mc_samples)
    sa = sb = sab = 0
    chunk = 2**20
    done = 0
    while done < n:
        k = min(chunk, n - done)
        e1 = noise.sample(dist, k, rng)
        e2 = noise.sample(dist, k, rng)
        ia = e2 + psi * e1 <= r
        ib = e2 + phi * e1 <= r
        sa += int(ia.sum())
        sb += int(ib.sum())
        sab += int((ia & ib).sum())
        done += k
    pa, pb, pab = sa / n, sb / n, sab / n
    den = 1.0 - pb + pa
    val = pa / den
    # gradient of pa/(1-pb+pa) wrt (pa, pb)
    ga = (1.0 - pb) / den**2
    gb = pa / den**2
    var = ga * ga * pa * (1 - pa) + gb * gb * pb * (1 - pb) + 2 * ga * gb * (pab - pa * pb)
    return val, math.sqrt(max(var, 0.0) / n)


def ex32_acf(k, phi: float, psi: float, varrho: float):
    """ACF of the driftless TMA(1) with delay 2 given ``varrho``.

    Lag 1 is ``[psi + (phi-psi) varrho] / [1 + psi^2 + (phi^2-psi^2) varrho]``;
    every lag ``>= 2`` is exactly zero.
    """
    k = np.asarray(k)
    if np.any(k < 1):
        raise ValueError("lag must be >= 1")
    rho1 = (psi + (phi - psi) * varrho) / (1 + psi * psi + (phi * phi - psi * psi) * varrho)
    out = np.where(k == 1, rho1, 0.0)
    return float(out) if out.ndim == 0 else out


def ex32_acf1(phi: float, psi: float, r: float, dist: Innovation = noise.StandardNormal,
              mc_samples: int = 10**7, seed=0) -> float:
    varrho, _ = ex32_varrho(phi, psi, r, dist, mc_samples, seed)
    return ex32_acf(1, phi, psi, varrho)


@dataclass(frozen=True)
class CovarianceBound:
    """Exponential envelope for ``|Cov(y_0, y_n)|``.

    ``bound(n) = H (m+1) / (1 - sqrt(delta)) * sqrt(delta)**(floor((n-q-d)/(d(m+1))) - 1)``,
    valid for ``n >= (m+2) d + q``; ``delta`` is the conservative upper
    value of the contraction estimate.
    """

    H: float
    m: int
    delta: float
    delta_estimate: DeltaEstimate
    d: int
    q: int

    @property
    def min_lag(self):
        return (self.m + 2) * self.d + self.q

    def bound(self, n):
        n = np.asarray(n)
        if self.H == 0:
            out = np.where(n >= self.min_lag, 0.0, np.inf)
        else:
            sd = math.sqrt(self.delta)
            expo = (n - self.q - self.d) // (self.d * (self.m + 1)) - 1
            with np.errstate(over="ignore"):
                val = self.H * (self.m + 1) / (1 - sd) * np.power(sd, expo.astype(float))
            out = np.where(n >= self.min_lag, val, np.inf)
        return float(out) if out.ndim == 0 else out

    __call__ = bound


def thm31_bound_constants(model: TmaModel, mc_samples: int = 10**6, seed=0, delta=None) -> CovarianceBound:
    """Constants of the exponential covariance envelope for ``model``.

    ``H = [|mu1-mu2| + s * sum|phi_i-psi_i|] * [|mu1|+|mu2| + s * sum(|phi_i|+|psi_i|)]``
    with ``s = sqrt(E e^2)``.
    """
    if not model.innovation.has_finite_variance:
        raise ModelError("covariance bound needs finite innovation variance")
    s = math.sqrt(model.innovation.variance)
    phi, psi = model.phi_array, model.psi_array
    H = (abs(model.mu1 - model.mu2) + s * np.abs(phi - psi).sum()) * (
        abs(model.mu1) + abs(model.mu2) + s * (np.abs(phi).sum() + np.abs(psi).sum())
    )
    if delta is None:
        delta = contraction_delta(model, mc_samples, seed)
    return CovarianceBound(
        H=float(H), m=structural_m(model.d, model.q), delta=delta.upper, delta_estimate=delta, d=model.d, q=model.q
    )
