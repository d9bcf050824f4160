import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmasim import noise
from tmasim.noise import Innovation, StandardNormal

ALL = [
    StandardNormal,
    Innovation("laplace", 1.0),
    Innovation("laplace", 0.7),
    Innovation("scaled_normal", 2.5),
    Innovation("student_t", 5.0),
    Innovation("student_t", 3.0),
]
FINITE_VAR = [d for d in ALL if d.has_finite_variance]


def test_sample_deterministic():
    a = noise.sample(StandardNormal, 3, 42)
    b = noise.sample(StandardNormal, 3, 42)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, noise.sample(StandardNormal, 3, 43))


@pytest.mark.parametrize("dist", ALL, ids=str)
def test_sample_prefix_consistent(dist):
    long = noise.sample(dist, 1000, 7)
    assert np.array_equal(noise.sample(dist, 10, 7), long[:10])


def test_substreams_differ_and_repeat():
    a = noise.stream(5, 3, 0).standard_normal(4)
    assert np.array_equal(a, noise.stream(5, 3, 0).standard_normal(4))
    assert not np.array_equal(a, noise.stream(5, 3, 1).standard_normal(4))
    with pytest.raises(ValueError):
        noise.stream(-1)


def test_normal_sample_mean():
    x = noise.sample(StandardNormal, 10**6, 11)
    assert abs(x.mean()) < 4e-3


def test_laplace_sample_variance():
    x = noise.sample(Innovation("laplace", 1.0), 10**6, 12)
    assert abs(x.var() / 2.0 - 1) < 0.02


def test_cdf_values():
    assert noise.cdf(StandardNormal, 0.0) == 0.5
    # 30-digit mpmath values
    assert abs(noise.cdf(StandardNormal, 1.0) - 0.841344746068542948585) < 1e-12
    assert abs(noise.cdf(Innovation("laplace", 1.0), 0.5) - 0.696734670143683288198) < 1e-12
    assert abs(noise.cdf(Innovation("student_t", 5.0), 1.3) - 0.874849682914661388025) < 1e-9


@pytest.mark.parametrize("x", [-7.5, -2.0, -0.3, 0.0, 0.9, 3.0, 8.0])
def test_cdf_against_mpmath(x):
    assert abs(noise.cdf(StandardNormal, x) - float(mp.ncdf(x))) < 1e-12
    b = 1.3
    lap = 0.5 * mp.e ** (x / b) if x < 0 else 1 - 0.5 * mp.e ** (-x / b)
    assert abs(noise.cdf(Innovation("laplace", b), x) - float(lap)) < 1e-12
    nu = 4.5
    dens = lambda t: mp.gamma((nu + 1) / 2) / (mp.sqrt(nu * mp.pi) * mp.gamma(nu / 2)) * (1 + t * t / nu) ** (-(nu + 1) / 2)  # noqa: E731
    assert abs(noise.cdf(Innovation("student_t", nu), x) - float(mp.quad(dens, [-mp.inf, x]))) < 1e-9


@given(st.floats(-30, 30), st.floats(-30, 30))
@settings(max_examples=200, deadline=None)
def test_cdf_monotone(x, y):
    lo, hi = min(x, y), max(x, y)
    for dist in ALL:
        assert noise.cdf(dist, lo) <= noise.cdf(dist, hi)


@pytest.mark.parametrize("dist", ALL, ids=str)
def test_cdf_limits_and_density_positive(dist):
    assert noise.cdf(dist, -np.inf) == 0.0
    assert noise.cdf(dist, np.inf) == 1.0
    xs = np.linspace(-20, 20, 101)
    assert np.all(noise.pdf(dist, xs) > 0)


@pytest.mark.parametrize("dist", FINITE_VAR, ids=str)
def test_empirical_cdf_dkw(dist):
    n = 10**6
    x = np.sort(noise.sample(dist, n, 99))
    for t in (-1.0, 0.0, 1.0):
        emp = np.searchsorted(x, t, side="right") / n
        assert abs(emp - noise.cdf(dist, t)) <= 3 / math.sqrt(2 * n)


def test_partial_first_moment_values():
    assert noise.partial_first_moment(StandardNormal, math.inf) == 0.0
    assert abs(noise.partial_first_moment(StandardNormal, 0.0) + 0.398942280401432678) < 1e-15
    assert noise.partial_first_moment(Innovation("laplace", 1.0), 0.0) == -0.5
    assert abs(noise.partial_first_moment(StandardNormal, 10.0)) < 1e-6


def test_partial_first_moment_mc():
    x = noise.sample(StandardNormal, 10**7, 3)
    z = x * (x <= 0)
    assert abs(z.mean() - noise.partial_first_moment(StandardNormal, 0.0)) < 4 * z.std() / math.sqrt(x.size)


@pytest.mark.parametrize("c", [-5.0, -1.2, 0.0, 0.7, 2.5, 9.0])
@pytest.mark.parametrize("dist", ALL, ids=str)
def test_partial_first_moment_quadrature_oracle(dist, c):
    got = noise.partial_first_moment(dist, c)
    if dist.kind == "student_t":
        # closed form -(nu + c^2)/(nu - 1) f(c), independent of the quadrature path
        nu = dist.param
        ref = -(nu + c * c) / (nu - 1) * noise.pdf(dist, c)
        assert abs(got - ref) < 1e-9
    else:
        ref = mp.quad(lambda t: t * noise.pdf(dist, float(t)), [-mp.inf, min(c, 0), c] if c > 0 else [-mp.inf, c])
        assert abs(got - float(ref)) < 1e-10


def test_partial_first_moment_rejects_cauchy_like():
    with pytest.raises(ValueError):
        noise.partial_first_moment(Innovation("student_t", 1.0), 0.0)


def test_raw_moments():
    assert noise.raw_moment(StandardNormal, 3) == 0
    assert noise.raw_moment(StandardNormal, 4) == 3
    assert noise.raw_moment(Innovation("laplace", 1.0), 4) == 24
    assert noise.raw_moment(Innovation("scaled_normal", 2.0), 2) == 4.0
    with pytest.raises(ValueError):
        noise.raw_moment(Innovation("student_t", 4.0), 4)
    with pytest.raises(ValueError):
        noise.raw_moment(Innovation("student_t", 2.0), 2)


@pytest.mark.parametrize("dist", [Innovation("laplace", 0.8), Innovation("student_t", 7.0), Innovation("scaled_normal", 1.7)], ids=str)
@pytest.mark.parametrize("order", [2, 4])
def test_raw_moment_quadrature(dist, order):
    ref = mp.quad(lambda t: t**order * noise.pdf(dist, float(t)), [-mp.inf, 0, mp.inf])
    assert abs(noise.raw_moment(dist, order) / float(ref) - 1) < 1e-8


def test_gaussian_fourth_moment_mc():
    x = noise.sample(StandardNormal, 10**6, 5)
    z = x**4
    assert abs(z.mean() - 3) < 4 * z.std() / 1000


def test_invalid_innovations():
    with pytest.raises(ValueError):
        Innovation("uniform")
    with pytest.raises(ValueError):
        Innovation("student_t")
    with pytest.raises(ValueError):
        Innovation("laplace", -1.0)
    assert Innovation.from_dict({"kind": "laplace", "param": 2}).variance == 8.0
    assert not Innovation("student_t", 2.0).has_finite_variance
