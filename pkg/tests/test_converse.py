"""Test the entropy sphere grid and the mixture converse."""

import math

import numpy as np
import pytest

from fvlab.alphabet import Dist, TypeVector
from fvlab.asymptotics import j_value
from fvlab.converse import (
    InfeasibleGammaError,
    MixtureInformation,
    converse_bits_for_rate,
    converse_epsilon_lower,
    entropy_sphere_grid,
    max_converse_bound,
    mixture_bound_check,
    mixture_bound_report,
    tau_grid,
    worst_case_bits,
)

TERNARY = Dist.parse("0.5,0.3,0.2")


@pytest.fixture(scope="module")
def ternary_grid():
    """Return a coarse grid through the ternary test source at n = 60."""
    gamma = j_value(TERNARY, 60, 0.1)
    return entropy_sphere_grid(3, gamma, 0.1, 60, resolution=24)


def test_binary_grid() -> None:
    """Test that two symbols give the two symmetric roots."""
    grid = entropy_sphere_grid(2, 0.8, 0.1, 100)
    assert len(grid) == 2
    assert grid.dim == 0
    assert grid.volume == 2.0
    p, q = grid.points[:, 0]
    assert p + q == pytest.approx(1.0)
    for P in grid.dists:
        assert j_value(P, 100, 0.1) == pytest.approx(0.8, abs=1e-9)


def test_binary_grid_on_larger_alphabet() -> None:
    """Test that a support set is embedded into the full alphabet."""
    grid = entropy_sphere_grid((0, 2), 0.8, 0.1, 100, alphabet_size=3)
    assert grid.m == 3
    assert np.all(grid.points[:, 1] == 0.0)
    assert grid.support == (0, 2)


@pytest.mark.parametrize("gamma", [0.0, -0.5, 1.0, 2.0])
def test_infeasible_gamma(gamma: float) -> None:
    """Test that gamma outside (0, log2 k) is rejected."""
    with pytest.raises(InfeasibleGammaError):
        entropy_sphere_grid(2, gamma, 0.1, 100)


def test_ternary_grid(ternary_grid) -> None:
    """Test the closed curve of three-symbol laws."""
    grid = ternary_grid
    assert grid.dim == 1
    assert 3 <= len(grid) <= 24
    assert np.allclose(grid.points.sum(axis=1), 1.0)
    assert grid.points.min() >= grid.beta_floor
    assert grid.closed_curve == (grid.dropped == 0)
    for P in grid.dists:
        assert j_value(P, 60, 0.1) == pytest.approx(grid.gamma, abs=1e-9)
    assert grid.spacing > 0
    assert grid.volume == pytest.approx(len(grid) * grid.spacing)


def test_sobol_grid() -> None:
    """Test the quasi-random rays for four symbols."""
    P = Dist.parse("0.4,0.3,0.2,0.1")
    gamma = j_value(P, 100, 0.1)
    grid = entropy_sphere_grid(4, gamma, 0.1, 100, resolution=16)
    assert grid.dim == 2
    assert 1 <= len(grid) <= 16
    for Q in grid.dists:
        assert j_value(Q, 100, 0.1) == pytest.approx(gamma, abs=1e-9)


def test_tau_grid() -> None:
    """Test the tau candidates."""
    taus = tau_grid(256, count=8)
    assert taus.min() == pytest.approx(1.0)
    assert taus.max() == pytest.approx(16.0)
    assert np.any(np.isclose(taus, 4.0))
    assert np.all(np.diff(taus) > 0)


def test_mixture_information(ternary_grid) -> None:
    """Test the total mass and the monotonicity of the converse bound."""
    information = MixtureInformation(ternary_grid, 60)
    assert information.total_mass == pytest.approx(1.0)
    assert information.exceed(-math.inf) == pytest.approx(1.0)
    assert information.exceed(math.inf) == 0.0
    bounds = [information.bound(k, 4.0) for k in range(40, 120, 10)]
    assert bounds == sorted(bounds, reverse=True)
    assert all(0.0 <= value <= 1.0 for value in bounds)
    with pytest.raises(ValueError):
        information.bound(50, 0.0)
    assert converse_epsilon_lower(50, ternary_grid, 60, 4.0) == pytest.approx(
        information.bound(50, 4.0)
    )


def test_max_converse_bound(ternary_grid) -> None:
    """Test that the maximised bound dominates every single tau."""
    information = MixtureInformation(ternary_grid, 60)
    result = max_converse_bound(70, ternary_grid, 60, information=information)
    assert result.k_bits == 70
    for tau in tau_grid(60):
        assert result.bound >= information.bound(70, float(tau))
    assert result.tau_star in tau_grid(60)


@pytest.mark.parametrize("code_name", ["type-size", "2s-fv", "2s-ff"])
def test_converse_respects_universal_codes(ternary_grid, code_name: str) -> None:
    """Test that no universal code beats the converse at its own bit count."""
    eps = 0.1
    k = worst_case_bits(code_name, ternary_grid, 60, eps)
    result = max_converse_bound(converse_bits_for_rate(k), ternary_grid, 60)
    assert result.bound <= eps + 1e-9


def test_converse_is_active_below_the_rate(ternary_grid) -> None:
    """Test that the bound exceeds eps well below the achievable bit count."""
    k = worst_case_bits("type-size", ternary_grid, 60, 0.1)
    result = max_converse_bound(k - 20, ternary_grid, 60)
    assert result.bound > 0.1


def test_mixture_bound_binary() -> None:
    """Test the exact two-point mixture against its closed form."""
    grid = entropy_sphere_grid(2, 0.8, 0.1, 100)
    check = mixture_bound_check(TypeVector.of(30, 70), grid)
    assert check.unique
    assert 0.0 <= check.residual <= 1.0
    balanced = mixture_bound_check(TypeVector.of(50, 50), grid)
    assert not balanced.unique


def test_mixture_bound_report(ternary_grid) -> None:
    """Test that mixture probabilities stay below their upper bound."""
    report = mixture_bound_report(ternary_grid, 60)
    assert report.checked > 0
    assert report.max_excess <= 0.5


@pytest.mark.slow
@pytest.mark.parametrize("n", [100, 200, 400])
def test_converse_sandwiches_type_size(n: int) -> None:
    """Test both sides of the converse around the Type Size bit count."""
    eps = 0.1
    grid = entropy_sphere_grid(3, j_value(TERNARY, n, eps), eps, n)
    information = MixtureInformation(grid, n)
    k = converse_bits_for_rate(worst_case_bits("type-size", grid, n, eps))
    achievable = max_converse_bound(k, grid, n, information=information)
    assert achievable.bound <= eps + 1e-9
    shifted = max_converse_bound(
        k - math.ceil(2 * math.log2(n)), grid, n, information=information
    )
    assert shifted.bound > eps
