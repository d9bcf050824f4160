"""Acceptance criteria, one test per criterion, at the stated tolerances."""

import csv
import math
import time

import numpy as np
import pytest
from oracles import random_model

from tmasim import analytics, cli, estimate
from tmasim.model import TmaModel, contraction_delta, load_model
from tmasim.stationary import (
    NumericRefusal,
    default_truncation,
    exactness_violations,
    simulate_closed_form,
    simulate_recursive,
)
from tmasim.verify import check_agreement, check_coupling

SHIPPED = ["ex31", "ex32", "eq31"]


@pytest.fixture(scope="module")
def deltas():
    return {name: contraction_delta(load_model(name)) for name in SHIPPED}


@pytest.fixture(scope="module")
def ex31_path():
    return simulate_recursive(load_model("ex31"), 10**6, seed=2024)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_c01_exactness(record):
    t0 = time.perf_counter()
    models = [load_model(name) for name in SHIPPED]
    rng = np.random.default_rng(12345)
    while len(models) < len(SHIPPED) + 100:
        models.append(random_model(rng))
    bad = checked = 0
    for i, m in enumerate(models):
        delta = contraction_delta(m, mc_samples=10**5, seed=i)
        rec = simulate_recursive(m, 2000, seed=i, delta=delta)
        try:
            closed = simulate_closed_form(m, 2000, seed=i, delta=delta, burn_in=rec.burn_in)
        except NumericRefusal:
            closed = None
        for p in (rec, closed):
            if p is not None:
                bad += exactness_violations(m, p).size
                checked += len(p)
    elapsed = time.perf_counter() - t0
    record(f"{len(models)} models, {checked} values, {bad} violations, {elapsed:.1f}s")
    assert bad == 0
    assert elapsed < 30


def test_c02_coupling_and_agreement(deltas, record):
    failures = []
    worst = 0
    for name in SHIPPED:
        m = load_model(name)
        for seed in range(100):
            c, res = check_coupling(m, 10**4, seed)
            agree = check_agreement(m, res, seed, deltas[name])
            if not (c.ok and agree.ok):
                failures.append((name, seed))
            else:
                worst = max(worst, res.max_time)
    record(f"300 runs, {len(failures)} failures, latest coupling step {worst}")
    assert not failures


@pytest.mark.parametrize("name", SHIPPED)
def test_c03_alpha_truncation(name, deltas, record):
    m = load_model(name)
    dv = deltas[name].value
    K, tb = default_truncation(m.m, dv)
    n = 10**5
    a = simulate_closed_form(m, n, seed=7, delta=dv, K=K)
    b = simulate_closed_form(m, n, seed=7, delta=dv, K=K + 50)
    diff = (a.alpha.alpha != b.alpha.alpha).astype(float)
    p = diff.mean()
    se = estimate.batch_means_se(diff, np.mean) if p > 0 else 0.0
    record(f"{name}: K={K}, mismatch rate {p:.3g} vs tail bound {tb:.3g} + 3*{se:.2g}")
    assert p <= tb + 3 * se


def test_c04_ex31_agreement(record):
    t0 = time.perf_counter()
    m = load_model("ex31")
    path = simulate_recursive(m, 10**6, seed=2024)
    x = path.values
    c = analytics.ex31_constants(4, -1, 0)
    rho1 = estimate.sample_acf(x, 1).rho_hat[1]
    se1 = estimate.batch_means_se(x, lambda blk: estimate.sample_acf(blk, 1).rho_hat[1])
    mom = estimate.sample_moments(x)
    sk, ku = analytics.ex31_skewness_kurtosis(4, -1, 0)
    rows = {
        "rho1": (rho1, se1, analytics.ex31_acf(1, c, 4, -1)),
        "variance": (mom.variance, mom.se["variance"], analytics.ex31_variance(c, 4, -1)),
        "skewness": (mom.skewness, mom.se["skewness"], sk),
        "kurtosis": (mom.kurtosis, mom.se["kurtosis"], ku),
    }
    z = {k: abs(v - t) / s for k, (v, s, t) in rows.items()}
    elapsed = time.perf_counter() - t0
    record("ex31: " + ", ".join(f"{k} z={v:.2f}" for k, v in z.items()) + f"; {elapsed:.1f}s")
    assert all(v <= 4 for v in z.values())
    assert elapsed < 120


def test_c05_lambda_recursion(ex31_path, record):
    c = analytics.ex31_constants(4, -1, 0)
    zs = []
    for k in range(2, 7):
        cur = estimate.lambda_terms(ex31_path, 0.0, k)
        prev = estimate.lambda_terms(ex31_path, 0.0, k - 1)[1:]
        diff = cur - c.beta * prev
        zs.append(abs(diff.mean()) / estimate.batch_means_se(diff, np.mean))
    record("lambda_k - beta*lambda_{k-1}, k=2..6: z=" + ", ".join(f"{z:.2f}" for z in zs))
    assert all(z <= 3 for z in zs)


def test_c06_ex32_cutoff(record):
    m = load_model("ex32")
    n = 10**6
    x = simulate_recursive(m, n, seed=2025).values
    acf = estimate.sample_acf(x, 10)
    se1 = estimate.batch_means_se(x, lambda blk: estimate.sample_acf(blk, 1).rho_hat[1])
    target = analytics.ex32_acf1(0.2, 0.8, 0.5)
    z1 = abs(acf.rho_hat[1] - target) / se1
    far = np.abs(acf.rho_hat[2:11]) * math.sqrt(n)
    record(f"rho1 {acf.rho_hat[1]:.5f} vs {target:.5f} (z={z1:.2f}); max sqrt(n)|rho_k|, k=2..10: {far.max():.2f}")
    assert z1 <= 3
    assert np.all(far <= 3)


def test_c07_covariance_bound(deltas, record):
    m31 = load_model("ex31")
    cb31 = analytics.thm31_bound_constants(m31, delta=deltas["ex31"])
    c = analytics.ex31_constants(4, -1, 0)
    k31 = np.arange(cb31.min_lag, 101)
    ok31 = np.all(np.abs(analytics.ex31_autocov(k31, c, 4, -1)) <= cb31.bound(k31))

    m = load_model("eq31")
    cb = analytics.thm31_bound_constants(m, delta=deltas["eq31"])
    x = simulate_recursive(m, 10**6, seed=2026).values
    xc = x - x.mean()
    n = len(x)
    lags = np.arange(cb.min_lag, 101)
    slack = []
    for k in lags:
        z = xc[k:] * xc[: n - k]
        slack.append(cb.bound(k) + 4 * estimate.batch_means_se(z, np.mean) - abs(z.sum() / n))
    ok_eq = min(slack) >= 0

    rho = analytics.ex31_acf(np.arange(1, 101), c, 4, -1)
    fit = estimate.fit_decay(rho)
    rate_err = abs(fit.rate - abs(c.beta))
    record(f"ex31 analytic under envelope: {bool(ok31)}; eq31 min slack {min(slack):.3g}; "
           f"fitted rate error {rate_err:.2e}")
    assert ok31 and ok_eq
    assert rate_err <= 1e-6


def test_c08_dependence_decay(deltas, record):
    m = load_model("eq31")
    rep = estimate.dependence_decay(m, 0.5, 0.5, range(1, 121), 10**5, seed=2027, delta=deltas["eq31"])
    fit = estimate.fit_decay(rep)
    ctrl = TmaModel(0.0, 0.0, [], [], 1, 0.0)
    crep = estimate.dependence_decay(ctrl, 0.0, 0.0, range(1, 21), 10**5, seed=2028)
    zmax = float(np.max(crep.dep / crep.se))
    record(f"eq31 slope {fit.slope:.3g} (rate {fit.rate:.5f}), r2 {fit.r2:.4f} over lags {fit.lag_range}; "
           f"iid control max |dep|/SE {zmax:.2f}")
    assert fit.slope < 0 and fit.r2 >= 0.9
    assert np.all(crep.dep <= 3 * crep.se)


def test_c09_figures(tmp_path, record):
    f1 = tmp_path / "fig1.csv"
    assert cli.main(["figure", "fig1", "--out", str(f1)]) == 0
    rows = _read_csv(f1)
    sk = np.array([float(r["skewness"]) for r in rows])
    ku = np.array([float(r["kurtosis"]) for r in rows])
    sign_change = bool(np.any(np.sign(sk[1:]) != np.sign(sk[:-1])))
    kmax = float(ku.max())

    outside = signed = 0
    for seed in range(100):
        f2 = tmp_path / f"fig2_{seed}.csv"
        assert cli.main(["figure", "fig2", "--seed", str(seed), "--out", str(f2)]) == 0
        r2 = _read_csv(f2)[1:21]
        vals = np.array([float(r["value"]) for r in r2])
        band = float(r2[0]["band"])
        outside += bool(np.all(np.abs(vals) > band))
        signed += bool(np.all(vals > band))
    record(f"fig1 skewness sign change {sign_change}, max kurtosis {kmax:.3f}; "
           f"fig2 |rho_k| outside the band through lag 20 in {outside}/100 seeds "
           f"(signed rho_k above +band: {signed}/100)")
    assert sign_change and kmax > 3
    assert outside >= 95


COMMANDS = [
    ["simulate", "--model", "eq31", "--n", "500"],
    ["simulate", "--model", "ex32", "--n", "500", "--method", "closed-form"],
    ["simulate", "--model", "ex31", "--n", "50", "--format", "json"],
    ["theory", "--model", "ex31"],
    ["theory", "--model", "ex32", "--format", "json"],
    ["theory", "--model", "ex31", "--grid=-2:2:0.5"],
    ["acf", "--model", "eq31", "--n", "20000"],
    ["moments", "--model", "ex31", "--n", "20000"],
    ["decay", "--model", "ex32", "--replicates", "5000"],
    ["figure", "fig1"],
    ["figure", "fig2"],
    ["verify", "--model", "ex32", "--n", "20000", "--replicates", "5000", "--horizon", "2000"],
]


def test_c10_determinism(tmp_path, record):
    mismatched = []
    for i, argv in enumerate(COMMANDS):
        outs = []
        for rep in range(2):
            out = tmp_path / f"{i}_{rep}.out"
            assert cli.main([*argv, "--seed", "11", "--out", str(out)]) in (0, 3)
            outs.append(out)
        if outs[0].read_bytes() != outs[1].read_bytes():
            mismatched.append(" ".join(argv))
        side = [p.with_name(p.name + ".json") for p in outs]
        if side[0].exists() and side[0].read_bytes() != side[1].read_bytes():
            mismatched.append(" ".join(argv) + " (sidecar)")
    record(f"{len(COMMANDS)} commands rerun, {len(mismatched)} byte mismatches")
    assert not mismatched
