"""Forward recursion, closed-form stationary construction and coupling.

Index convention
----------------
Innovations carry absolute time indices. ``e_1, e_2, ...`` come from the
main substream of the run seed and the pre-sample ``e_0, e_-1, ...`` from a
separate substream drawn backwards in time, so any two runs with the same
seed see the same ``e_n`` for every ``n`` they share, however much history
either of them asked for.

The indicator ``alpha_n = 1(y_n <= r)`` of the stationary solution is

    alpha_n = sum_{j>=0} (prod_{s=0}^{j-1} W_{n-sd}) U_{n-jd}

and ``y_n`` equals ``b_n`` when ``alpha_{n-d} = 1`` and ``a_n`` otherwise.
:func:`alpha_series` follows the lag-one form used for ``y_n`` directly,
``alpha_{n-d} = sum_{j>=1} (prod_{s=1}^{j-1} W_{n-sd}) U_{n-jd}``, which is
the same series shifted by ``d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import noise
from .model import ModelError, TmaModel, contraction_delta, indicators, regime_arrays, regime_pair

DEFAULT_TAIL_TOL = 1e-12
MAX_TRUNCATION = 10**4
MIN_BURN_IN = 500
DELTA_REFUSAL = 1.0 - 1e-9


class NumericRefusal(RuntimeError):
    """The contraction factor is too close to 1 for a usable tail bound."""


@dataclass
class AlphaSeries:
    """Truncated alpha-series used by a closed-form path.

    ``alpha[i]`` is the regime selector ``alpha_{n-d}`` of value ``i``;
    ``terms_used[i]`` counts the series terms evaluated before a partial
    product of ``W`` vanished (or ``K`` if it never did).
    """

    K: int
    alpha: np.ndarray
    terms_used: np.ndarray
    tail_bound: float
    delta: float
    m: int

    @property
    def truncated(self):
        """Entries whose series was still alive after ``K`` terms."""
        return self.terms_used >= self.K


@dataclass
class SeriesPath:
    """A realised trajectory together with its innovations.

    ``values[i]`` is ``y`` at time ``start + i``. ``innovations`` holds
    ``e`` from time ``start - q`` onwards, so it is ``q`` entries longer than
    ``values``. ``history`` holds the ``d`` values preceding ``start`` when
    known (burn-in, initial values or closed-form evaluation).
    """

    values: np.ndarray
    innovations: np.ndarray
    q: int
    start: int = 1
    burn_in: int = 0
    seed: int | None = None
    model_hash: str | None = None
    method: str = "recursive"
    history: np.ndarray | None = None
    alpha: AlphaSeries | None = None
    delta: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.innovations = np.asarray(self.innovations, dtype=float)
        if self.innovations.shape[0] != self.values.shape[0] + self.q:
            raise ValueError(
                f"expected {self.values.shape[0] + self.q} innovations for {self.values.shape[0]} values, "
                f"got {self.innovations.shape[0]}"
            )

    def __len__(self):
        return self.values.shape[0]

    @property
    def index(self):
        return np.arange(self.start, self.start + len(self), dtype=np.int64)

    @property
    def aligned_innovations(self):
        """``e_n`` for each value's own time index."""
        return self.innovations[self.q :]


def innovation_block(dist, seed, lo: int, hi: int) -> np.ndarray:
    """Innovations ``e_lo, ..., e_hi`` (inclusive) of run ``seed``."""
    if hi < lo:
        return np.empty(0)
    n_main = max(hi, 0)
    n_pre = max(1 - lo, 0)
    main = noise.sample(dist, n_main, noise.stream(seed, noise.STREAM_MAIN))
    pre = noise.sample(dist, n_pre, noise.stream(seed, noise.STREAM_PRESAMPLE))
    # pre[k] is e_{-k}
    full = np.concatenate([pre[::-1], main])  # times 1-n_pre .. n_main
    off = n_pre - 1
    return full[lo + off : hi + off + 1]


def tail_bound(K: int, m: int, delta: float) -> float:
    """Bound on the expected mass of the series beyond ``K`` terms.

    ``(m+1) * delta**floor((K-1)/(m+1)) / (1-delta)``.
    """
    if delta >= 1:
        return math.inf
    expo = (K - 1) // (m + 1)
    if delta == 0:
        return 0.0 if expo > 0 else (m + 1.0)
    return (m + 1) * delta**expo / (1 - delta)


def default_truncation(m: int, delta: float, tol: float = DEFAULT_TAIL_TOL, cap: int = MAX_TRUNCATION):
    """Smallest ``K`` whose tail bound is below ``tol``, capped at ``cap``.

    Returns ``(K, tail_bound(K))``.
    """
    if delta >= DELTA_REFUSAL:
        raise NumericRefusal(f"delta estimate {delta:.12g} is too close to 1 for a usable tail bound")
    if delta == 0:
        return 1 + (m + 1), 0.0
    # delta**expo < tol*(1-delta)/(m+1)
    need = math.log(tol * (1 - delta) / (m + 1)) / math.log(delta)
    expo = max(0, math.floor(need) + 1)
    K = expo * (m + 1) + 1
    while K > 1 and tail_bound(K - 1, m, delta) < tol:
        K -= 1
    while tail_bound(K, m, delta) >= tol and K < cap:
        K += 1
    K = min(K, cap)
    return K, tail_bound(K, m, delta)


def default_burn_in(m: int, delta: float) -> int:
    if delta >= 1:
        raise NumericRefusal("delta >= 1")
    return max(MIN_BURN_IN, math.ceil(10 * (m + 1) / (1 - delta)))


@numba.njit(cache=True)
def _recurse(a, b, hist, r):
    d = hist.shape[0]
    n = a.shape[0]
    y = np.empty(d + n)
    y[:d] = hist
    for t in range(n):
        y[t + d] = b[t] if y[t] <= r else a[t]
    return y[d:]


@numba.njit(cache=True)
def _alpha_lagged(u, w, targets, d, K):
    """alpha_{n-d,K} for each regime index n in ``targets``."""
    n_t = targets.shape[0]
    alpha = np.empty(n_t, dtype=np.int8)
    used = np.empty(n_t, dtype=np.int64)
    for i in range(n_t):
        n = targets[i]
        prod = 1
        acc = 0
        j = 1
        while j <= K:
            idx = n - j * d
            acc += prod * u[idx]
            prod *= w[idx]
            if prod == 0:
                break
            j += 1
        alpha[i] = acc
        used[i] = min(j, K)
    return alpha, used


def simulate_recursive(
    model: TmaModel, n: int, burn_in: int | None = None, init=None, seed=0, delta=None
) -> SeriesPath:
    """Iterate the model forward from initial values.

    Parameters
    ----------
    model : TmaModel
    n : int
        Number of values returned.
    burn_in : int, optional
        Values discarded first. Defaults to ``10*(m+1)/(1-delta)``, at least 500.
    init : array_like, optional
        ``max(d, q)`` initial values ``(y_{1-L}, ..., y_0)``, oldest first;
        only the last ``d`` of them enter the switch. Defaults to zeros.
    seed : int
        Run seed; fixes the innovation stream.
    delta : float or DeltaEstimate, optional
        Contraction factor used for the default burn-in.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    L = model.max_lag
    init = np.zeros(L) if init is None else np.asarray(init, dtype=float).ravel()
    if init.shape[0] != L:
        raise ModelError(f"init must have length max(d, q)={L}, got {init.shape[0]}")
    if burn_in is None:
        if delta is None:
            delta = contraction_delta(model, seed=seed)
        burn_in = default_burn_in(model.m, float(getattr(delta, "value", delta)))
    burn_in = int(burn_in)
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    total = burn_in + n
    e = innovation_block(model.innovation, seed, 1 - model.q, total)
    a, b = regime_arrays(model, e)
    full = _recurse(a, b, init[L - model.d :], model.r)
    hist_all = np.concatenate([init[L - model.d :], full])
    return SeriesPath(
        values=full[burn_in:],
        innovations=e[burn_in:],
        q=model.q,
        start=burn_in + 1,
        burn_in=burn_in,
        seed=_seed_tag(seed),
        model_hash=model.hash,
        method="recursive",
        history=hist_all[burn_in : burn_in + model.d].copy(),
        delta=None if delta is None else float(getattr(delta, "value", delta)),
    )


def alpha_series(model: TmaModel, innovations, index: int, K: int):
    """Truncated series for ``alpha_{n-d}`` at position ``index`` of ``innovations``.

    ``innovations[index]`` plays the role of ``e_n``; the ``K`` terms need
    ``innovations[index - K*d - q]`` onwards. The sum stops early once a
    partial product of ``W`` is zero, since every later term vanishes.

    Returns ``(alpha, terms_used)`` with ``alpha`` in {0, 1}.
    """
    e = np.asarray(innovations, dtype=float)
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    lo = index - K * model.d - model.q
    if lo < 0 or index >= e.shape[0]:
        raise ModelError(f"alpha_series needs innovations back to position {lo}; history too short")
    total = 0
    prod = 1
    for j in range(1, K + 1):
        t = index - j * model.d
        u, w = indicators(regime_pair(model, e[t - model.q : t + 1][::-1]), model.r)
        total += prod * u
        prod *= w
        if prod == 0:
            return total, j
    return total, K


def simulate_closed_form(
    model: TmaModel, n: int, K: int | None = None, seed=0, burn_in: int = 0, delta=None, tail_tol=DEFAULT_TAIL_TOL
) -> SeriesPath:
    """Build the stationary solution directly from the innovations.

    Each value is ``b_n`` if the truncated ``alpha_{n-d}`` equals 1 and
    ``a_n`` otherwise, which is the closed form
    ``a_n + (b_n - a_n) * alpha_{n-d}`` evaluated without rounding. No initial
    values are involved. ``burn_in`` only shifts the time window, so the
    output lines up with :func:`simulate_recursive` for the same seed.

    Raises
    ------
    NumericRefusal
        If the estimate of ``delta`` is within 1e-9 of 1.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if delta is None:
        delta = contraction_delta(model, seed=seed)
    dval = float(getattr(delta, "value", delta))
    m = model.m
    if dval >= DELTA_REFUSAL:
        raise NumericRefusal(f"delta estimate {dval:.12g} is too close to 1 for a usable tail bound")
    if K is None:
        K, tb = default_truncation(m, dval, tail_tol)
    else:
        K = int(K)
        tb = tail_bound(K, m, dval)
    d, q = model.d, model.q
    start = int(burn_in) + 1
    first = start - d  # first target, for the history
    last = start + n - 1
    lo = first - K * d - q
    e = innovation_block(model.innovation, seed, lo, last)
    a, b = regime_arrays(model, e)  # regime index t <-> time lo + q + t
    u, w = indicators((a, b), model.r)
    base = lo + q
    targets = np.arange(first - base, last - base + 1, dtype=np.int64)
    alpha, used = _alpha_lagged(u, w, targets, d, K)
    y = np.where(alpha == 1, b[targets], a[targets])
    return SeriesPath(
        values=y[d:],
        innovations=e[start - q - lo :],
        q=q,
        start=start,
        burn_in=int(burn_in),
        seed=_seed_tag(seed),
        model_hash=model.hash,
        method="closed-form",
        history=y[:d].copy(),
        alpha=AlphaSeries(K=K, alpha=alpha[d:], terms_used=used[d:], tail_bound=tb, delta=dval, m=m),
        delta=dval,
    )


@numba.njit(cache=True)
def _rows_from_history(u, w, a, b, H, q, d, K, Kh, r, out, done):
    """Per row: closed-form selectors at the start, then the recursion."""
    R = u.shape[0]
    targets = np.arange(H - q, H - q + d)
    for i in range(R):
        if done[i]:
            continue
        sel, used = _alpha_lagged(u[i], w[i], targets, d, Kh)
        if Kh < K and np.any(used >= Kh):
            continue
        init = np.empty(d)
        for t in range(d):
            init[t] = -np.inf if sel[t] == 1 else np.inf
        out[i] = _recurse(a[i, H - q :], b[i, H - q :], init, r)
        done[i] = True


def stationary_sample(model: TmaModel, replicates: int, length: int, rng, K: int, init_history: int = 256):
    """Independent stationary stretches ``y_0, ..., y_{length-1}``, one per row.

    The regime state at the start of each row is the closed-form indicator,
    computed over a backward history that is doubled for the rows whose
    series has not terminated, up to ``K`` terms; the rest of the row follows
    the recursion. All draws come from ``rng`` in a fixed order.
    """
    d, q = model.d, model.q
    R = int(replicates)
    full_need = K * d + q
    fwd = noise.sample(model.innovation, R * length, rng).reshape(R, length)
    H = min(max(init_history, q + d), full_need)
    # columns run backwards in time: e_{-1}, e_{-2}, ...
    hist = noise.sample(model.innovation, R * H, rng).reshape(R, H)
    out = np.empty((R, length))
    done = np.zeros(R, dtype=np.bool_)
    rows = np.arange(R)
    while True:
        e = np.concatenate([hist[:, ::-1], fwd[rows]], axis=1)  # times -H .. length-1
        a, b = regime_arrays(model, e)  # regime index t <-> time t + q - H
        u, w = indicators((a, b), model.r)
        sub_out = np.empty((rows.size, length))
        sub_done = np.zeros(rows.size, dtype=np.bool_)
        Kh = min(K, (H - q) // d)
        _rows_from_history(u, w, a, b, H, q, d, K, Kh, model.r, sub_out, sub_done)
        out[rows[sub_done]] = sub_out[sub_done]
        done[rows[sub_done]] = True
        if sub_done.all():
            return out
        rows = rows[~sub_done]
        hist = hist[~sub_done]
        extra = min(2 * H, full_need) - H
        more = noise.sample(model.innovation, rows.size * extra, rng).reshape(rows.size, extra)
        hist = np.concatenate([hist, more], axis=1)
        H += extra


def coupling_time(x, y, d: int = 1):
    """First position from which ``x`` and ``y`` are identical to the end.

    Returns 0 for identical sequences and ``None`` when the last ``d``
    positions still differ (not coupled within the horizon).
    """
    x = np.asarray(x)
    y = np.asarray(y)
    diff = np.flatnonzero(x != y)
    if diff.size == 0:
        return 0
    last = int(diff[-1])
    if last >= x.shape[0] - d:
        return None
    return last + 1


@dataclass
class CouplingResult:
    times: dict
    paths: list

    @property
    def coupled(self):
        return all(t is not None for t in self.times.values())

    @property
    def max_time(self):
        if not self.coupled:
            return None
        return max(self.times.values(), default=0)


def coupling_check(model: TmaModel, n: int, inits, seed=0) -> CouplingResult:
    """Run the recursion from several initial vectors on shared innovations.

    Returns the coupling time of every pair ``(i, j)``, ``None`` for pairs
    still apart at the end of the horizon.
    """
    inits = [np.asarray(v, dtype=float) for v in inits]
    if len(inits) < 2:
        raise ValueError("coupling_check needs at least two initial vectors")
    paths = [simulate_recursive(model, n, burn_in=0, init=v, seed=seed) for v in inits]
    times = {}
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            times[(i, j)] = coupling_time(paths[i].values, paths[j].values, model.d)
    return CouplingResult(times, paths)


def extreme_inits(model: TmaModel, count: int = 5, seed=0):
    """Initial vectors for coupling runs: all-below, all-above, then random ones."""
    L = model.max_lag
    out = [np.full(L, model.r - 10.0), np.full(L, model.r + 10.0)]
    rng = noise.stream(seed, noise.STREAM_AUX, 1)
    while len(out) < count:
        out.append(model.r + 5.0 * rng.standard_normal(L))
    return out[:count]


def exactness_violations(model: TmaModel, path: SeriesPath) -> np.ndarray:
    """Positions where a value does not reproduce the model equation exactly.

    Both regime values are recomputed from the innovation window and the
    switch is re-evaluated on the lagged value. Positions whose lagged value
    is unknown (no ``history``) are not checked. For closed-form paths the
    stored selectors must also agree with the lagged values.
    """
    if path.q != model.q:
        raise ModelError("path and model disagree on q")
    d = model.d
    a, b = regime_arrays(model, path.innovations)
    y = path.values
    if path.history is not None:
        lagged = np.concatenate([np.asarray(path.history, dtype=float), y])[: len(y)]
        checked = np.ones(len(y), dtype=bool)
    else:
        lagged = np.concatenate([np.full(d, np.nan), y])[: len(y)]
        checked = np.arange(len(y)) >= d
    expect = np.where(lagged <= model.r, b, a)
    bad = checked & (expect != y)
    if path.alpha is not None:
        sel = path.alpha.alpha
        bad |= checked & (sel != (lagged <= model.r))
        bad |= np.where(sel == 1, b, a) != y
    return np.flatnonzero(bad)


def _seed_tag(seed):
    return None if isinstance(seed, np.random.Generator) else int(seed)
