"""The rational-approximation probit kernel against the erf-based oracle."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prefelicit.probit import (
    binary_entropy_bits,
    clamp_prob,
    normal_cdf,
    normal_cdf_scalar,
    normal_icdf,
)

from oracles import cdf_oracle, icdf_oracle


def test_cdf_matches_oracle_within_1e9():
    x = np.linspace(-37.0, 37.0, 200_001)
    assert np.max(np.abs(normal_cdf(x) - cdf_oracle(x))) < 1e-9


def test_icdf_matches_oracle_within_1e9():
    # The erfinv-based oracle itself loses digits past p ~ 1-1e-8
    # (cancellation in 2p-1), so the comparison stays inside that domain.
    p = np.linspace(1e-8, 1 - 1e-8, 100_001)
    assert np.max(np.abs(normal_icdf(p) - icdf_oracle(p))) < 1e-9


def test_cdf_known_values():
    assert normal_cdf(0.0) == pytest.approx(0.5, abs=1e-12)
    assert normal_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-10)
    assert normal_icdf(0.5) == pytest.approx(0.0, abs=1e-12)
    assert normal_icdf(0.8413447460685429) == pytest.approx(1.0, abs=1e-9)


def test_scalar_path_equals_array_path():
    # np.exp and math.exp may disagree by one ulp; beyond that the two
    # paths are the same polynomial.
    xs = np.concatenate([np.linspace(-9, 9, 4001), [-40.0, 40.0, 0.0]])
    arr = normal_cdf(xs)
    sc = np.array([normal_cdf_scalar(float(v)) for v in xs])
    assert np.max(np.abs(arr - sc)) <= 3e-16


def test_cdf_tails_and_infinities():
    assert normal_cdf(-40.0) == 0.0
    assert normal_cdf(40.0) == 1.0
    assert normal_icdf(0.0) == -np.inf
    assert normal_icdf(1.0) == np.inf


@given(st.floats(min_value=-5.0, max_value=5.0))
def test_cdf_icdf_roundtrip(x):
    # |x| <= 5 keeps 1/pdf(x) small enough that double rounding of the
    # probability cannot dominate the comparison.
    assert normal_icdf(normal_cdf(x)) == pytest.approx(x, abs=1e-9)


@given(st.floats(min_value=-20.0, max_value=20.0), st.floats(min_value=-20.0, max_value=20.0))
def test_cdf_monotone(a, b):
    lo, hi = sorted((a, b))
    assert normal_cdf(lo) <= normal_cdf(hi)


def test_clamp_prob_bounds():
    p = clamp_prob(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
    assert p.min() >= 1e-12
    assert p.max() <= 1 - 1e-12
    assert p[2] == 0.5


def test_binary_entropy():
    assert binary_entropy_bits(0.5) == pytest.approx(1.0, abs=1e-12)
    assert binary_entropy_bits(1e-12) == pytest.approx(0.0, abs=1e-9)
    # symmetry
    p = np.linspace(0.01, 0.99, 99)
    assert np.allclose(binary_entropy_bits(p), binary_entropy_bits(1 - p), atol=1e-14)
