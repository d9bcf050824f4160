"""Two-regime threshold moving-average model with feedback.

The process switches between two MA(q) expressions according to whether the
value ``d`` steps back is at or below the threshold ``r``::

    y_n = mu1 + e_n + sum_i phi_i e_{n-i}    if y_{n-d} <= r
    y_n = mu2 + e_n + sum_i psi_i e_{n-i}    if y_{n-d} >  r

``b_n`` is the lower-regime expression (``mu1``, ``phi``) and ``a_n`` the
upper-regime one (``mu2``, ``psi``), both evaluated on the same innovation
window. ``U_n = 1(a_n <= r)`` and ``W_n = 1(b_n <= r) - 1(a_n <= r)`` unroll
the feedback: ``1(y_n <= r) = U_n + W_n 1(y_{n-d} <= r)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import noise
from .noise import Innovation


class ModelError(ValueError):
    """Invalid model parameterisation or model file."""


@dataclass(frozen=True)
class TmaModel:
    """Parameters of a TMA(q) model.

    ``q`` is inferred from the coefficient vectors; passing it explicitly
    only adds a consistency check. Instances are validated on construction
    and immutable afterwards.
    """

    mu1: float
    mu2: float
    phi: tuple = ()
    psi: tuple = ()
    d: int = 1
    r: float = 0.0
    innovation: Innovation = field(default_factory=Innovation)
    q: int | None = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("phi", tuple(float(x) for x in np.atleast_1d(np.asarray(self.phi, dtype=float))))
        set_("psi", tuple(float(x) for x in np.atleast_1d(np.asarray(self.psi, dtype=float))))
        if isinstance(self.innovation, dict):
            set_("innovation", Innovation.from_dict(self.innovation))
        validate(self)
        set_("q", len(self.phi))
        set_("mu1", float(self.mu1))
        set_("mu2", float(self.mu2))
        set_("r", float(self.r))
        set_("d", int(self.d))

    @property
    def phi_array(self):
        return np.asarray(self.phi, dtype=float)

    @property
    def psi_array(self):
        return np.asarray(self.psi, dtype=float)

    @property
    def m(self):
        return structural_m(self.d, self.q)

    @property
    def max_lag(self):
        """Length of the initial-value vector accepted by the recursion."""
        return max(self.d, self.q)

    @property
    def is_linear(self):
        """Both regimes coincide, i.e. a plain MA(q)."""
        return self.mu1 == self.mu2 and self.phi == self.psi

    @property
    def is_ex31_shape(self):
        """Pure drift switching on the previous value (q=0, d=1)."""
        return self.q == 0 and self.d == 1

    @property
    def is_ex32_shape(self):
        """Driftless TMA(1) switching on the value two steps back."""
        return self.q == 1 and self.d == 2 and self.mu1 == 0 and self.mu2 == 0

    def to_dict(self):
        return {
            "mu1": self.mu1,
            "mu2": self.mu2,
            "phi": list(self.phi),
            "psi": list(self.psi),
            "d": self.d,
            "r": self.r,
            "innovation": self.innovation.to_dict(),
        }

    @classmethod
    def from_dict(cls, spec):
        try:
            return cls(
                mu1=spec["mu1"],
                mu2=spec["mu2"],
                phi=spec.get("phi", []),
                psi=spec.get("psi", []),
                d=spec["d"],
                r=spec["r"],
                innovation=Innovation.from_dict(spec.get("innovation", {"kind": "normal"})),
                q=spec.get("q"),
            )
        except KeyError as exc:
            raise ModelError(f"model spec is missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise ModelError(str(exc)) from None

    def replace(self, **changes):
        spec = self.to_dict()
        if "innovation" in changes and isinstance(changes["innovation"], Innovation):
            changes["innovation"] = changes["innovation"].to_dict()
        spec.update(changes)
        return TmaModel.from_dict(spec)

    @property
    def hash(self):
        """Short SHA-256 digest of the canonical JSON form."""
        return model_hash(self)


def validate(model: TmaModel) -> TmaModel:
    """Check the model invariants and return the model unchanged."""
    if len(model.phi) != len(model.psi):
        raise ModelError(f"phi has length {len(model.phi)} but psi has length {len(model.psi)}")
    if model.q is not None and int(model.q) != len(model.phi):
        raise ModelError(f"declared q={model.q} does not match coefficient length {len(model.phi)}")
    if isinstance(model.d, bool) or int(model.d) != model.d or model.d < 1:
        raise ModelError(f"delay d must be an integer >= 1, got {model.d!r}")
    vals = [model.mu1, model.mu2, model.r, *model.phi, *model.psi]
    if not all(math.isfinite(float(v)) for v in vals):
        raise ModelError("model parameters must be finite")
    if not isinstance(model.innovation, Innovation):
        raise ModelError("innovation must be an Innovation")
    return model


def model_hash(model: TmaModel) -> str:
    text = json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


SHIPPED_MODELS = ("ex31", "ex32", "eq31")


def load_model(source) -> TmaModel:
    """Load a model from a JSON file, a dict, or a shipped model name."""
    if isinstance(source, TmaModel):
        return source
    if isinstance(source, dict):
        return TmaModel.from_dict(source)
    if str(source) in SHIPPED_MODELS:
        text = resources.files("tmasim").joinpath("models", f"{source}.json").read_text()
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ModelError(f"cannot read model file {source}: {exc}") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {source} is not valid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise ModelError("model JSON must be an object")
    return TmaModel.from_dict(spec)


class RegimePair(NamedTuple):
    a: float
    b: float


def regime_pair(model: TmaModel, window) -> RegimePair:
    """Upper (``a``) and lower (``b``) regime values for one window.

    ``window`` is ``(e_n, e_{n-1}, ..., e_{n-q})``. The summation order
    matches :func:`regime_arrays` so results agree bit for bit.
    """
    w = [float(x) for x in window]
    if len(w) != model.q + 1:
        raise ModelError(f"window must have length q+1={model.q + 1}, got {len(w)}")
    a = model.mu2 + w[0]
    b = model.mu1 + w[0]
    for i in range(1, model.q + 1):
        a = a + model.psi[i - 1] * w[i]
        b = b + model.phi[i - 1] * w[i]
    return RegimePair(a, b)


def regime_arrays(model: TmaModel, e):
    """Vectorised :func:`regime_pair` over a stream of innovations.

    Returns arrays ``a, b`` of length ``len(e) - q``; entry ``t`` uses the
    window ending at ``e[t + q]``.
    """
    e = np.asarray(e, dtype=float)
    q = model.q
    n = e.shape[-1] - q
    if n < 0:
        raise ModelError(f"need at least q={q} innovations")
    cur = e[..., q:]
    a = model.mu2 + cur
    b = model.mu1 + cur
    for i in range(1, q + 1):
        lagged = e[..., q - i : q - i + n]
        a = a + model.psi[i - 1] * lagged
        b = b + model.phi[i - 1] * lagged
    return a, b


def indicators(pair, r):
    """Return ``(U, W)`` with ``U = 1(a <= r)`` and ``W = 1(b <= r) - 1(a <= r)``.

    Works elementwise on arrays as well as on a single :class:`RegimePair`.
    The comparison is an exact ``<=``.
    """
    a, b = pair
    u = np.asarray(a <= r, dtype=np.int8)
    w = np.asarray(b <= r, dtype=np.int8) - u
    if u.ndim == 0:
        return int(u), int(w)
    return u, w


def structural_m(d: int, q: int) -> int:
    """The unique ``m >= 0`` with ``m*d < max(d, q+1) <= (m+1)*d``."""
    d, q = int(d), int(q)
    if d < 1:
        raise ModelError(f"d must be >= 1, got {d}")
    if q < 0:
        raise ModelError(f"q must be >= 0, got {q}")
    return -(-max(d, q + 1) // d) - 1


class DeltaEstimate(NamedTuple):
    value: float
    se: float
    exact: bool
    samples: int

    @property
    def upper(self):
        """Conservative upper value, ``value + 3*se``, kept below 1."""
        return min(self.value + 3.0 * self.se, math.nextafter(1.0, 0.0))


def contraction_delta(model: TmaModel, mc_samples: int = 10**6, seed=0) -> DeltaEstimate:
    """Estimate ``delta = E|W_1|``, the chance that exactly one regime is below ``r``.

    For q=0 the value ``|G(r-mu1) - G(r-mu2)|`` is returned exactly. For
    q >= 1 the windows are drawn independently, so the binomial standard
    error applies.
    """
    if model.q == 0:
        g = noise.cdf(model.innovation, [model.r - model.mu1, model.r - model.mu2])
        return DeltaEstimate(abs(float(g[0] - g[1])), 0.0, True, 0)
    if model.is_linear:
        return DeltaEstimate(0.0, 0.0, True, 0)
    mc_samples = int(mc_samples)
    if mc_samples < 10**4:
        raise ValueError("contraction_delta needs at least 1e4 samples")
    rng = noise.stream(seed, noise.STREAM_DELTA)
    hits = 0
    chunk = 2**18
    done = 0
    while done < mc_samples:
        k = min(chunk, mc_samples - done)
        # row t is the window (e_{n-q}, ..., e_n)
        e = noise.sample(model.innovation, k * (model.q + 1), rng).reshape(k, model.q + 1)
        a, b = regime_arrays(model, e)
        hits += int(np.count_nonzero((a[:, 0] <= model.r) != (b[:, 0] <= model.r)))
        done += k
    p = hits / mc_samples
    return DeltaEstimate(p, math.sqrt(p * (1 - p) / mc_samples), False, mc_samples)
