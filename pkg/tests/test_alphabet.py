"""Test the combinatorics of types."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fvlab.alphabet import (
    Alphabet,
    Dist,
    InvalidDistributionError,
    InvalidTypeError,
    TypeVector,
    c_minus,
    class_sizes,
    enumerate_types,
    f_bound,
    kl,
    log2_class_sizes,
    num_types,
    sample_distributions,
    sandwich_violations,
    scalar_functionals,
    sequence_log2_prob,
    type_class_size,
    type_table,
)


def counts_strategy(max_m: int = 4, max_count: int = 30):
    """Return a strategy for count vectors with n >= 1."""
    return (
        st.lists(st.integers(0, max_count), min_size=1, max_size=max_m)
        .filter(lambda counts: sum(counts) > 0)
        .map(tuple)
    )


def test_alphabet_labels() -> None:
    """Test default labels and label validation."""
    assert Alphabet(3).labels == ("x0", "x1", "x2")
    assert Alphabet.binary().format_sequence((0, 1, 1)) == "ABB"
    with pytest.raises(ValueError):
        Alphabet(2, ("A", "A"))
    with pytest.raises(ValueError):
        Alphabet(0)


def test_dist_validation() -> None:
    """Test that invalid probability vectors are rejected."""
    with pytest.raises(InvalidDistributionError):
        Dist(np.array([0.5, 0.6]))
    with pytest.raises(InvalidDistributionError):
        Dist(np.array([1.5, -0.5]))
    with pytest.raises(InvalidDistributionError):
        Dist.parse("a,b")
    with pytest.raises(InvalidDistributionError):
        Dist.parse("0.5,0.4")

    P = Dist.parse("0.5,0.5000000001")
    assert math.isclose(P.probs.sum(), 1.0, abs_tol=1e-12)
    assert P.support == (0, 1)
    assert Dist.parse("0.6,0,0.4").support == (0, 2)
    with pytest.raises(ValueError):
        P.probs[0] = 0.9


def test_dist_equality_and_str() -> None:
    """Test equality, hashing and the string form of a law."""
    assert Dist.uniform(2) == Dist.parse("0.5,0.5")
    assert len({Dist.uniform(3), Dist.uniform(3)}) == 1
    assert str(Dist.parse("0.8,0.2")) == "0.8,0.2"


def test_type_vector_validation() -> None:
    """Test that negative and all-zero counts are rejected."""
    with pytest.raises(InvalidTypeError):
        TypeVector.of(1, -1)
    with pytest.raises(InvalidTypeError):
        TypeVector.of(0, 0)
    t = TypeVector.of(2, 0, 1)
    assert (t.n, t.m, t.support) == (3, 3, (0, 2))


def test_enumeration_order() -> None:
    """Test the canonical descending lexicographic order."""
    counts = [t.counts for t in enumerate_types(2, 2)]
    assert counts == [(2, 0), (1, 1), (0, 2)]
    counts = [t.counts for t in enumerate_types(2, Alphabet(3))]
    assert counts == [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)]
    with pytest.raises(InvalidTypeError):
        list(enumerate_types(0, 2))


@pytest.mark.parametrize("n, m", [(1, 1), (3, 2), (5, 3), (4, 4)])
def test_type_table(n: int, m: int) -> None:
    """Test that the type table matches the stream and covers m^n sequences."""
    table = type_table(n, m)
    assert table.shape == (num_types(n, m), m)
    assert [tuple(row) for row in table.tolist()] == [
        t.counts for t in enumerate_types(n, m)
    ]
    assert sum(class_sizes(table)) == m**n
    assert not table.flags.writeable


def test_num_types() -> None:
    """Test the number of types."""
    assert num_types(5, 3) == 21
    assert num_types(10, 2) == 11


def test_type_class_size() -> None:
    """Test exact multinomial coefficients."""
    assert type_class_size(TypeVector.of(2, 1, 1)) == 12
    assert type_class_size(TypeVector.of(5, 0)) == 1
    assert type_class_size(TypeVector.of(50, 50)) == math.comb(100, 50)


@settings(max_examples=50, deadline=None)
@given(counts=counts_strategy(max_count=200))
def test_log2_class_sizes_precision(counts: tuple[int, ...]) -> None:
    """Test the log-gamma class size against multiprecision factorials."""
    n = sum(counts)
    exact = mpmath.factorial(n)
    for c in counts:
        exact /= mpmath.factorial(c)
    reference = float(mpmath.log(exact, 2))
    value = log2_class_sizes(np.asarray([counts]))[0]
    assert value == pytest.approx(reference, abs=1e-8 * max(1.0, reference))


def test_log2_class_sizes_permutation() -> None:
    """Test that permuted types get identical floats."""
    values = log2_class_sizes(np.asarray([[7, 2, 3], [3, 7, 2], [2, 3, 7]]))
    assert values[0] == values[1] == values[2]


def test_scalar_functionals() -> None:
    """Test entropy and varentropy of simple laws."""
    H, V = scalar_functionals(Dist.uniform(4))
    assert H == pytest.approx(2.0)
    assert V == pytest.approx(0.0, abs=1e-15)

    H, V = scalar_functionals(Dist.parse("0.5,0.25,0.25"))
    assert H == pytest.approx(1.5)
    assert V == pytest.approx(0.25)

    H, V = scalar_functionals(TypeVector.of(3, 0))
    assert (H, V) == (0.0, 0.0)


def test_kl() -> None:
    """Test the relative entropy including the infinite case."""
    P = Dist.parse("0.5,0.5")
    assert kl(TypeVector.of(1, 1), P) == 0.0
    assert kl(Dist.parse("1,0"), P) == pytest.approx(1.0)
    assert kl(TypeVector.of(1, 1), Dist.point_mass(2)) == math.inf


@settings(max_examples=50, deadline=None)
@given(
    counts=counts_strategy(max_m=3),
    weights=st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3),
)
def test_sequence_log2_prob_identity(
    counts: tuple[int, ...], weights: list[float]
) -> None:
    """Test log2 P^n(x) = -n (H(t) + D(t || P))."""
    weights = np.asarray(weights[: len(counts)])
    P = Dist(weights / weights.sum())
    t = TypeVector(counts)
    H, _ = scalar_functionals(t)
    expected = -t.n * (H + kl(t, P))
    assert sequence_log2_prob(t, P) == pytest.approx(expected, abs=1e-9 * t.n)


def test_sequence_log2_prob_outside_support() -> None:
    """Test that types leaving the support have probability zero."""
    assert sequence_log2_prob(TypeVector.of(1, 1), Dist.point_mass(2)) == -math.inf


def test_sandwich_constants() -> None:
    """Test the sandwich constant and f for a known type."""
    assert c_minus(2) == pytest.approx(-1.5662, abs=1e-3)
    t = TypeVector.of(3, 2)
    assert t.n * f_bound(t) == pytest.approx(4.7232, abs=1e-3)
    log_size = math.log2(type_class_size(t))
    assert t.n * f_bound(t) + c_minus(2) <= log_size <= t.n * f_bound(t)


@pytest.mark.parametrize("n, m", [(1, 2), (10, 2), (60, 2), (25, 3), (12, 4)])
def test_sandwich(n: int, m: int) -> None:
    """Test the type-class size sandwich over all types."""
    assert sandwich_violations(n, m) == []


@pytest.mark.slow
def test_sandwich_large() -> None:
    """Test the sandwich at the largest default sizes."""
    assert sandwich_violations(100, 3) == []


def test_sample_distributions() -> None:
    """Test the deterministic family of laws."""
    family = sample_distributions(3, 8)
    assert len(family) == 8
    assert family[0] == Dist.point_mass(3)
    assert family[1].support == (0, 1)
    assert all(min(P.probs) > 0 for P in family[2:])
    assert family == sample_distributions(3, 8)
    assert_allclose([P.probs.sum() for P in family], 1.0, atol=1e-12)
