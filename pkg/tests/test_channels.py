import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from rllcap.channels import (
    GaussianChannel,
    InvalidInterval,
    ParameterOutOfRange,
    bec,
    binary_entropy,
    bsc,
    entropy,
    gaussian_mass,
    gaussian_pdf,
    relative_entropy,
)


def test_bec_rows():
    c = bec(0.25)
    assert c.outputs == ("0", "?", "1")
    assert c.rows == ((0.75, 0.25, 0.0), (0.0, 0.25, 0.75))


def test_bec_noiseless():
    c = bec(0.0)
    assert c.rows == ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0))


def test_bsc_rows():
    c = bsc(0.1)
    assert c.rows == ((0.9, 0.1), (0.1, 0.9))


@pytest.mark.parametrize("ctor", [bec, bsc])
def test_parameter_range(ctor):
    with pytest.raises(ParameterOutOfRange):
        ctor(-0.01)
    with pytest.raises(ParameterOutOfRange):
        ctor(1.01)


def test_gaussian_channel_validation():
    with pytest.raises(ParameterOutOfRange):
        GaussianChannel(0.0)
    assert GaussianChannel(1.0).signal(0) == 1.0
    assert GaussianChannel(1.0).signal(1) == -1.0


def test_relative_entropy_identity_and_fair_coin():
    assert relative_entropy([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert relative_entropy([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)


def test_relative_entropy_absolute_continuity():
    assert relative_entropy([0.5, 0.5], [1.0, 0.0]) == math.inf


def test_relative_entropy_bec_structured():
    # D([1-e, e, 0] || [b(1-e), e, (1-b)(1-e)]) = (1-e) log2(1/b)
    rng = np.random.default_rng(0)
    for _ in range(50):
        e, b = rng.uniform(0.05, 0.95, 2)
        p = [1 - e, e, 0.0]
        q = [b * (1 - e), e, (1 - b) * (1 - e)]
        assert relative_entropy(p, q) == pytest.approx(
            (1 - e) * math.log2(1 / b), abs=1e-12)


def test_relative_entropy_nonnegative_bulk():
    rng = np.random.default_rng(1)
    for _ in range(10**4):
        p = rng.dirichlet(np.ones(3))
        q = rng.dirichlet(np.ones(3))
        d = relative_entropy(p, q)
        assert d >= 0.0
    # zero iff equal
    p = rng.dirichlet(np.ones(4))
    assert relative_entropy(p, p) == 0.0


@given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=100, deadline=None)
def test_relative_entropy_gibbs(n, seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(n))
    q = rng.dirichlet(np.ones(n))
    d = relative_entropy(p, q)
    assert d >= -1e-15
    if not np.allclose(p, q):
        assert d > 0.0


def test_bec_row_self_divergence_grid():
    for eps in np.linspace(0.0, 1.0, 101):
        c = bec(float(eps))
        for x in (0, 1):
            assert relative_entropy(c.row(x), c.row(x)) == 0.0


def test_entropy_helpers():
    assert entropy([0.5, 0.5]) == pytest.approx(1.0)
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0)


def test_gaussian_mass_basics():
    assert gaussian_mass(0, 1, -math.inf, math.inf) == pytest.approx(1.0)
    assert gaussian_mass(0, 1, -math.inf, 0.0) == pytest.approx(0.5)
    with pytest.raises(InvalidInterval):
        gaussian_mass(0, 1, 1.0, -1.0)
    with pytest.raises(InvalidInterval):
        gaussian_mass(0, 0.0, 0.0, 1.0)


def test_gaussian_mass_vs_quadrature():
    val, _ = quad(lambda x: gaussian_pdf(1.0, 2.0, x), -1.0, 3.0,
                  epsabs=1e-14, epsrel=1e-14)
    assert abs(gaussian_mass(1.0, 2.0, -1.0, 3.0) - val) <= 1e-12


def test_gaussian_mass_additive():
    rng = np.random.default_rng(2)
    for _ in range(200):
        mu, sigma = rng.normal(), rng.uniform(0.2, 3.0)
        a, b, c = np.sort(rng.normal(size=3) * 4)
        lhs = gaussian_mass(mu, sigma, a, b) + gaussian_mass(mu, sigma, b, c)
        assert abs(lhs - gaussian_mass(mu, sigma, a, c)) <= 1e-13
