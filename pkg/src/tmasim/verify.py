"""End-to-end verification of a model against its structural guarantees.

Six checks, each recorded as pass, fail or not applicable (with the reason):

a. exactness      every simulated value reproduces the model equation
b. coupling       recursions from different initial values merge
c. agreement      closed-form and recursive paths coincide after coupling
d. analytic       sample moments/ACF match the closed forms for the model shapes
                  that have them (drift switching, delay-2 TMA(1), linear MA)
e. cov_bound      sample autocovariances stay under the exponential envelope
f. dependence     the joint-distribution gap decays geometrically
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analytics, estimate
from .model import TmaModel, contraction_delta
from .stationary import (
    coupling_check,
    exactness_violations,
    extreme_inits,
    simulate_closed_form,
    simulate_recursive,
)

PASS, FAIL, NA = "pass", "fail", "n/a"


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str
    metrics: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status != FAIL

    def to_dict(self):
        return {"name": self.name, "status": self.status, "detail": self.detail, "metrics": self.metrics}


@dataclass
class VerificationReport:
    model_hash: str
    seed: int
    checks: list

    @property
    def passed(self):
        return all(c.ok for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "model_hash": self.model_hash,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }

    def lines(self):
        return [f"[{c.status.upper():4}] {c.name}: {c.detail}" for c in self.checks]


def check_exactness(model, paths) -> CheckResult:
    bad = {p.method: int(exactness_violations(model, p).size) for p in paths}
    total = sum(len(p) for p in paths)
    ok = not any(bad.values())
    return CheckResult("a_exactness", PASS if ok else FAIL,
                       f"{sum(bad.values())} violations in {total} values", {"violations": bad})


def check_coupling(model, horizon, seed):
    res = coupling_check(model, horizon, extreme_inits(model, 5, seed), seed=seed)
    times = {f"{i}-{j}": t for (i, j), t in res.times.items()}
    if res.coupled:
        c = CheckResult("b_coupling", PASS, f"5 initial vectors coupled by step {res.max_time} of {horizon}",
                        {"times": times})
    else:
        c = CheckResult("b_coupling", FAIL, f"paths still apart after {horizon} steps", {"times": times})
    return c, res


def check_agreement(model, res, seed, delta) -> CheckResult:
    if not res.coupled:
        return CheckResult("c_agreement", FAIL, "no coupling time to compare from")
    horizon = len(res.paths[0])
    closed = simulate_closed_form(model, horizon, seed=seed, delta=delta)
    t0 = res.max_time
    mism = [int(np.count_nonzero(p.values[t0:] != closed.values[t0:])) for p in res.paths]
    ok = not any(mism)
    return CheckResult("c_agreement", PASS if ok else FAIL,
                       f"closed form vs {len(res.paths)} recursions after step {t0}: {sum(mism)} mismatches",
                       {"mismatches": mism, "K": closed.alpha.K, "tail_bound": closed.alpha.tail_bound})


def _within(name, est, se, target, nse):
    z = abs(est - target) / se if se > 0 else (0.0 if est == target else math.inf)
    return {"name": name, "estimate": est, "target": target, "se": se, "z": z, "ok": z <= nse}


def check_analytic(model, path) -> CheckResult:
    x = path.values
    n = len(x)
    rows = []
    if model.is_ex31_shape and model.innovation.has_finite_variance:
        mu1, mu2 = model.mu1, model.mu2
        c = analytics.ex31_constants(mu1, mu2, model.r, model.innovation)
        rho1 = estimate.sample_acf(x, 1).rho_hat[1]
        se1 = estimate.batch_means_se(x, lambda b: estimate.sample_acf(b, 1).rho_hat[1])
        rows.append(_within("rho1", rho1, se1, analytics.ex31_acf(1, c, mu1, mu2), 4))
        mom = estimate.sample_moments(x)
        rows.append(_within("variance", mom.variance, mom.se["variance"], analytics.ex31_variance(c, mu1, mu2), 4))
        if not (model.innovation.kind == "student_t" and model.innovation.param <= 4):
            sk, ku = analytics.ex31_skewness_kurtosis(mu1, mu2, model.r, model.innovation)
            rows.append(_within("skewness", mom.skewness, mom.se["skewness"], sk, 4))
            rows.append(_within("kurtosis", mom.kurtosis, mom.se["kurtosis"], ku, 4))
        if model.innovation.kind != "student_t" or model.innovation.param > 1:
            for k in range(2, 7):
                z = estimate.lambda_terms(path, model.r, k)
                zp = estimate.lambda_terms(path, model.r, k - 1)[1:]
                diff = z - c.beta * zp
                rows.append(_within(f"lambda{k}-beta*lambda{k-1}", float(diff.mean()),
                                    estimate.batch_means_se(diff, np.mean), 0.0, 3))
        label = "drift-switching closed forms"
    elif model.is_ex32_shape and model.innovation.has_finite_variance:
        phi, psi = model.phi[0], model.psi[0]
        target = analytics.ex32_acf1(phi, psi, model.r, model.innovation)
        acf = estimate.sample_acf(x, 10)
        se1 = estimate.batch_means_se(x, lambda b: estimate.sample_acf(b, 1).rho_hat[1])
        rows.append(_within("rho1", acf.rho_hat[1], se1, target, 3))
        for k in range(2, 11):
            rows.append(_within(f"rho{k}", acf.rho_hat[k], acf.se[k], 0.0, 4))
        label = "delay-2 TMA(1) lag-1 ACF and cut-off"
    elif model.is_linear:
        acf = estimate.sample_acf(x, model.q + 10)
        for k in range(model.q + 1, model.q + 11):
            rows.append(_within(f"rho{k}", acf.rho_hat[k], acf.se[k], 0.0, 4))
        label = f"linear MA({model.q}) cut-off after lag {model.q}"
    else:
        return CheckResult("d_analytic", NA, "no closed-form ACF or moments exist for this model shape")
    ok = all(r["ok"] for r in rows)
    worst = max(rows, key=lambda r: r["z"])
    return CheckResult("d_analytic", PASS if ok else FAIL,
                       f"{label}: {sum(r['ok'] for r in rows)}/{len(rows)} within tolerance "
                       f"(worst {worst['name']} at {worst['z']:.2f} SE), n={n}",
                       {"rows": rows})


def check_cov_bound(model, path, delta, max_lag=100) -> CheckResult:
    if not model.innovation.has_finite_variance:
        return CheckResult("e_cov_bound", NA, "innovation variance is infinite")
    cb = analytics.thm31_bound_constants(model, delta=delta)
    lags = np.arange(cb.min_lag, max_lag + 1)
    if lags.size == 0:
        return CheckResult("e_cov_bound", NA, f"envelope starts at lag {cb.min_lag} > {max_lag}")
    x = path.values
    xc = x - x.mean()
    n = len(x)
    bad = []
    worst = -math.inf
    for k in lags:
        z = xc[k:] * xc[: n - k]
        cov = float(z.sum()) / n
        se = estimate.batch_means_se(z, np.mean)
        slack = cb.bound(k) + 4 * se - abs(cov)
        worst = max(worst, abs(cov) - cb.bound(k))
        if slack < 0:
            bad.append(int(k))
    if model.is_ex31_shape:
        c = analytics.ex31_constants(model.mu1, model.mu2, model.r, model.innovation)
        exact = np.abs(analytics.ex31_autocov(lags, c, model.mu1, model.mu2))
        bad += [int(k) for k in lags[exact > cb.bound(lags)] if k not in bad]
    ok = not bad
    return CheckResult("e_cov_bound", PASS if ok else FAIL,
                       f"|Cov(y0,yk)| under envelope for k={lags[0]}..{lags[-1]} (H={cb.H:.4g}, m={cb.m}, "
                       f"delta<={cb.delta:.6g}); {len(bad)} violations",
                       {"H": cb.H, "m": cb.m, "delta": cb.delta, "violations": bad})


def check_dependence(model, u, v, replicates, seed, delta, max_lag=60) -> CheckResult:
    rep = estimate.dependence_decay(model, u, v, range(1, max_lag + 1), replicates, seed=seed, delta=delta)
    usable = rep.dep > 5 * rep.se
    metrics = {"u": u, "v": v, "replicates": replicates, "usable_lags": int(usable.sum())}
    if usable.sum() >= 4:
        fit = estimate.fit_decay(rep)
        metrics.update(fit.to_dict())
        ok = fit.slope < 0
        return CheckResult("f_dependence", PASS if ok else FAIL,
                           f"log-linear decay rate {fit.rate:.6g} (r2={fit.r2:.4f}) over lags {fit.lag_range}",
                           metrics)
    # nothing measurable: the gap must at least vanish at the far lags
    far = rep.dep[-10:] <= 3 * rep.se[-10:] + 1e-15
    ok = bool(far.all())
    return CheckResult("f_dependence", PASS if ok else FAIL,
                       f"{int(usable.sum())} lags above 5 SE; far lags within 3 SE of 0: {ok}", metrics)


def run_verification(model: TmaModel, seed: int = 0, n: int = 10**5, horizon: int = 10**4,
                     replicates: int = 10**5, path=None, u=None, v=None) -> VerificationReport:
    """Run all six checks; ``path`` adds an externally supplied path to check (a)."""
    delta = contraction_delta(model, seed=seed)
    rec = simulate_recursive(model, n, seed=seed, delta=delta)
    closed = simulate_closed_form(model, n, seed=seed, delta=delta, burn_in=rec.burn_in)
    checks = []
    to_check = [rec, closed] if path is None else [rec, closed, path]
    checks.append(check_exactness(model, to_check))
    c, res = check_coupling(model, horizon, seed)
    checks.append(c)
    checks.append(check_agreement(model, res, seed, delta))
    checks.append(check_analytic(model, rec))
    checks.append(check_cov_bound(model, rec, delta))
    u = model.r if u is None else u
    v = model.r if v is None else v
    checks.append(check_dependence(model, u, v, replicates, seed, delta))
    return VerificationReport(model.hash, seed, checks)
