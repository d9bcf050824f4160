"""Innovation distributions and seeded random streams.

Every supported law has a continuous, strictly positive density on the real
line and mean zero. Besides sampling, the module exposes the functionals the
closed-form autocorrelation results are written in: the distribution function,
the density, the partial first moment ``E[e 1(e <= c)]`` and raw moments.

Random streams
--------------
All randomness is drawn from :func:`stream`, which maps a run seed and a tuple
of integer keys onto an independent Philox (counter-based) generator through
``numpy.random.SeedSequence(seed, spawn_key=keys)``. Key assignments used by
the package are the ``STREAM_*`` constants below; replicate ``i`` of a Monte
Carlo loop uses ``(STREAM_x, i)``. A substream depends only on
``(seed, keys)``, never on how many draws other substreams consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

STREAM_MAIN = 0
STREAM_PRESAMPLE = 1
STREAM_DELTA = 2
STREAM_REPLICATE = 3
STREAM_AUX = 4

KINDS = ("normal", "student_t", "laplace", "scaled_normal")


def stream(seed, *keys):
    """Return the generator for substream ``keys`` of run ``seed``."""
    if isinstance(seed, np.random.Generator):
        if keys:
            raise TypeError("substream keys need an integer seed")
        return seed
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Innovation:
    """I.i.d. innovation law.

    Parameters
    ----------
    kind : {"normal", "student_t", "laplace", "scaled_normal"}
        ``normal`` is the standard normal and takes no parameter.
    param : float, optional
        Degrees of freedom (``student_t``), scale (``laplace``) or standard
        deviation (``scaled_normal``).
    """

    kind: str = "normal"
    param: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown innovation kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "normal":
            if self.param not in (None, 1, 1.0):
                raise ValueError("'normal' is the standard normal and takes no param")
            object.__setattr__(self, "param", None)
            return
        if self.param is None:
            defaults = {"laplace": 1.0, "scaled_normal": 1.0}
            if self.kind not in defaults:
                raise ValueError("'student_t' needs its degrees of freedom as param")
            object.__setattr__(self, "param", defaults[self.kind])
        p = float(self.param)
        if not (math.isfinite(p) and p > 0):
            raise ValueError(f"{self.kind} param must be a positive finite number, got {self.param!r}")
        object.__setattr__(self, "param", p)

    @classmethod
    def from_dict(cls, spec):
        return cls(kind=spec["kind"], param=spec.get("param"))

    def to_dict(self):
        return {"kind": self.kind, "param": self.param}

    @property
    def scale(self):
        return 1.0 if self.kind in ("normal", "student_t") else self.param

    @property
    def has_finite_variance(self):
        return not (self.kind == "student_t" and self.param <= 2)

    @property
    def variance(self):
        if not self.has_finite_variance:
            return math.inf
        return raw_moment(self, 2)

    def __str__(self):
        return self.kind if self.param is None else f"{self.kind}({self.param:g})"


StandardNormal = Innovation("normal")


def sample(dist: Innovation, n: int, seed=0) -> np.ndarray:
    """Draw ``n`` i.i.d. innovations.

    ``seed`` is an integer run seed (the main substream is used) or an
    already constructed ``numpy.random.Generator``. Draws are sequential, so a
    shorter request from the same stream is a prefix of a longer one.
    """
    n = int(n)
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    rng = stream(seed, STREAM_MAIN) if not isinstance(seed, np.random.Generator) else seed
    if dist.kind == "normal":
        return rng.standard_normal(n)
    if dist.kind == "scaled_normal":
        return dist.param * rng.standard_normal(n)
    if dist.kind == "laplace":
        return rng.laplace(0.0, dist.param, n)
    return rng.standard_t(dist.param, n)


def cdf(dist: Innovation, x):
    """Distribution function G(x); vectorised over ``x``."""
    x = np.asarray(x, dtype=float)
    if dist.kind == "normal":
        out = special.ndtr(x)
    elif dist.kind == "scaled_normal":
        out = special.ndtr(x / dist.param)
    elif dist.kind == "laplace":
        z = x / dist.param
        out =np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(z, 0.0)))
    else:
        out = special.stdtr(dist.param, x)
    return out[()] if out.ndim == 0 else out


def pdf(dist: Innovation, x):
    """Density of the innovation law."""
    x = np.asarray(x, dtype=float)
    if dist.kind in ("normal", "scaled_normal"):
        s = dist.scale
        out = np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi))
    elif dist.kind == "laplace":
        b = dist.param
        out = np.exp(-np.abs(x) / b) / (2 * b)
    else:
        nu = dist.param
        logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        out = np.exp(logc - (nu + 1) / 2 * np.log1p(x * x / nu))
    return out[()] if out.ndim == 0 else out


def partial_first_moment(dist: Innovation, c: float) -> float:
    """Return ``E[e 1(e <= c)]``.

    Closed forms are used for the normal and Laplace laws. For Student's t
    the integral is evaluated by adaptive quadrature (absolute tolerance
    1e-9). ``c = +inf`` gives the mean, i.e. zero.
    """
    if dist.kind == "student_t" and dist.param <= 1:
        raise ValueError(f"student_t with dof={dist.param:g} has no first moment")
    c = float(c)
    if math.isnan(c):
        raise ValueError("c is NaN")
    if math.isinf(c):
        return 0.0
    if dist.kind in ("normal", "scaled_normal"):
        s = dist.scale
        return -s * float(pdf(StandardNormal, c / s))
    if dist.kind == "laplace":
        b = dist.param
        if c <= 0:
            return 0.5 * math.exp(c / b) * (c - b)
        return -0.5 * math.exp(-c / b) * (c + b)
    f = lambda t: t * pdf(dist, t)  # noqa: E731
    # integrate over the smaller tail; the full integral is zero
    if c <= 0:
        val, _ = integrate.quad(f, -math.inf, c, epsabs=1e-9, epsrel=1e-10, limit=200)
        return val
    val, _ = integrate.quad(f, c, math.inf, epsabs=1e-9, epsrel=1e-10, limit=200)
    return -val


def raw_moment(dist: Innovation, order: int) -> float:
    """Exact ``E[e^order]`` for ``order`` in 1..4."""
    order = int(order)
    if order not in (1, 2, 3, 4):
        raise ValueError(f"order must be in 1..4, got {order}")
    if order % 2 == 1:
        if dist.kind == "student_t" and dist.param <= order:
            raise ValueError(f"student_t with dof={dist.param:g} has no moment of order {order}")
        return 0.0
    if dist.kind in ("normal", "scaled_normal"):
        s2 = dist.scale**2
        return s2 if order == 2 else 3.0 * s2 * s2
    if dist.kind == "laplace":
        return math.factorial(order) * dist.param**order
    nu = dist.param
    if nu <= order:
        raise ValueError(f"student_t with dof={nu:g} has no moment of order {order}")
    if order == 2:
        return nu / (nu - 2)
    return 3.0 * nu * nu / ((nu - 2) * (nu - 4))
