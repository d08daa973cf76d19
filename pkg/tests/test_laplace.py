"""Test the Laplace-type integral checks."""

import math

import pytest

from fvlab.laplace import (
    CATALOG,
    EXACT_CASE_TOLERANCE,
    ORDER_RATIO_RANGE,
    LaplaceResult,
    laplace_check,
    laplace_order_check,
)


def test_gaussian_is_exact() -> None:
    """Test that the quadratic exponent has no approximation error."""
    result = laplace_check("gaussian", 100)
    assert result.asymptotic == pytest.approx(math.sqrt(2 * math.pi / 100))
    assert result.rel_err <= EXACT_CASE_TOLERANCE
    assert laplace_order_check("gaussian", (16, 32)).passed


def test_quartic_order() -> None:
    """Test that the quartic case converges at rate 1/n."""
    check = laplace_order_check("quartic")
    assert check.passed
    low, high = ORDER_RATIO_RANGE
    assert len(check.ratios) == 4
    assert all(low <= r <= high for r in check.ratios)
    assert all(r.numeric < r.asymptotic for r in check.results)


def test_rel_err() -> None:
    """Test the relative error of a result."""
    result = LaplaceResult(case="gaussian", n=1, numeric=1.1, asymptotic=1.0)
    assert result.rel_err == pytest.approx(0.1)


def test_invalid_arguments() -> None:
    """Test unknown cases and nonpositive n."""
    with pytest.raises(ValueError):
        laplace_check("cubic", 10)
    with pytest.raises(ValueError):
        laplace_check("gaussian", 0)
    assert set(CATALOG) == {"gaussian", "quartic", "simplex_kl"}


@pytest.mark.slow
def test_simplex_curve_order() -> None:
    """Test the relative entropy integral over a curve on the simplex."""
    check = laplace_order_check("simplex_kl", (64, 128, 256))
    assert check.passed
    assert check.results[-1].rel_err < check.results[0].rel_err
