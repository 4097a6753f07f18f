from __future__ import annotations

import math

import numpy as np
import pytest

from semigraph.mittag import (
    MLParams,
    ml_function,
    ml_function_vec,
    ml_sample,
    ml_sample_n,
    ml_survival,
    ml_survival_vec,
)

from .reference import ks_distance, ml_reference, ml_survival_reference

BETAS = [0.3, 0.5, 0.7, 0.9, 0.95, 0.98, 0.99, 1.0]


def test_value_at_zero_is_exactly_one():
    for beta in BETAS:
        assert ml_function(beta, 0.0) == 1.0


def test_beta_one_matches_exp():
    for z in np.linspace(-10.0, 0.0, 101):
        assert abs(ml_function(1.0, z) - math.exp(z)) <= 1e-12


def test_half_beta_closed_form():
    # E_{1/2}(-x) = exp(x^2) * erfc(x); at x = 1 this is e * erfc(1).
    expected = math.e * math.erfc(1.0)
    assert abs(ml_function(0.5, -1.0) - expected) <= 1e-9
    assert abs(expected - 0.4275835761558070) <= 1e-15


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.7, 0.9, 0.95, 0.99])
def test_against_high_precision_series(beta):
    # Spans all three evaluation regimes, including both crossovers.
    zs = -np.concatenate(
        [
            np.logspace(-3, 1, 25),  # |z| in [0.001, 10]: strict relative regime
            np.array([15.0, 30.0, 60.0, 99.0, 101.0, 300.0]),
        ]
    )
    for z in zs:
        w = (-z) ** (1.0 / beta)
        if w > 800:
            continue  # keep the oracle cheap; the tail is covered separately
        ref = ml_reference(beta, z)
        got = ml_function(beta, z)
        assert abs(got - ref) <= 1e-10, (beta, z)
        if -z <= 10.0:
            assert abs(got - ref) <= 1e-10 * abs(ref), (beta, z)


def test_vector_path_matches_scalar():
    for beta in [0.5, 0.9, 0.99]:
        z = -np.concatenate([np.logspace(-3, 2.5, 60), [0.0]])
        vec = ml_function_vec(beta, z)
        scal = np.array([ml_function(beta, zz) for zz in z])
        assert np.max(np.abs(vec - scal)) <= 1e-9


def test_monotone_nonincreasing_in_magnitude():
    for beta in [0.5, 0.9, 0.99]:
        z = -np.logspace(-3, 3, 200)
        vals = ml_function_vec(beta, z)
        assert np.all(np.diff(vals) <= 1e-14)  # |z| increasing along the grid
        assert np.all(vals > 0.0)
        assert np.all(vals <= 1.0)


def test_survival_basics():
    p = MLParams(beta=0.9, scale=1.0)
    assert ml_survival(p, 0.0) == 1.0
    assert abs(ml_survival(MLParams(1.0, 1.0), 2.0) - math.exp(-2.0)) < 1e-14
    assert abs(ml_survival(MLParams(0.5, 1.0), 1.0) - ml_reference(0.5, -1.0)) < 1e-10
    with pytest.raises(ValueError):
        ml_survival(p, -0.5)


def test_survival_heavy_tail():
    # t**beta * survival -> scale**beta / Gamma(1 - beta) as t grows.
    for beta in (0.5, 0.9):
        p = MLParams(beta=beta, scale=1.0)
        for t in (1e3, 1e4):
            limit = 1.0 / math.gamma(1.0 - beta)
            val = ml_survival(p, t) * t**beta
            assert abs(val - limit) <= 0.05 * limit


def test_survival_scale_parameter():
    p1 = MLParams(beta=0.9, scale=1.0)
    p3 = MLParams(beta=0.9, scale=3.0)
    assert abs(ml_survival(p3, 6.0) - ml_survival(p1, 2.0)) < 1e-12


def test_param_validation():
    for bad in (0.0, -0.1, 1.5, float("nan")):
        with pytest.raises(ValueError):
            MLParams(beta=bad)
    with pytest.raises(ValueError):
        MLParams(beta=0.9, scale=0.0)
    with pytest.raises(ValueError):
        ml_function(0.9, 0.5)
    with pytest.raises(ValueError):
        ml_function(0.9, float("nan"))


def test_sampler_exponential_special_case():
    p = MLParams(beta=1.0, scale=1.0)
    rng = np.random.default_rng(101)
    x = ml_sample_n(p, rng, 100_000)
    assert abs(x.mean() - 1.0) <= 0.02
    assert np.all(x > 0.0)


@pytest.mark.parametrize("beta", [0.9, 0.99])
def test_sampler_distribution_ks(beta):
    p = MLParams(beta=beta, scale=1.0)
    rng = np.random.default_rng(2024)
    n = 20_000
    x = np.sort(ml_sample_n(p, rng, n))
    cdf = 1.0 - ml_survival_vec(p, x)
    assert ks_distance(x, cdf) < 1.63 / math.sqrt(n)
    assert np.all(x > 0.0)


def test_sampler_scale():
    rng1 = np.random.default_rng(5)
    rng2 = np.random.default_rng(5)
    a = ml_sample_n(MLParams(0.9, 1.0), rng1, 1000)
    b = ml_sample_n(MLParams(0.9, 2.5), rng2, 1000)
    assert np.allclose(2.5 * a, b)


def test_sampler_scalar_matches_block_of_one():
    rng1 = np.random.default_rng(7)
    rng2 = np.random.default_rng(7)
    p = MLParams(0.95, 1.0)
    assert ml_sample(p, rng1) == ml_sample_n(p, rng2, 1)[0]


def test_vec_survival_against_reference_grid():
    p = MLParams(beta=0.9, scale=1.0)
    t = np.logspace(-2, 2, 40)
    vec = ml_survival_vec(p, t)
    ref = np.array([ml_survival_reference(0.9, 1.0, tt) for tt in t])
    assert np.max(np.abs(vec - ref)) < 1e-9
