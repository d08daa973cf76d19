"""Test the ranked code abstraction and the ε-rate evaluation."""

import numpy as np
import pytest

from fvlab.alphabet import Alphabet, Dist, sample_distributions, type_table
from fvlab.coding import (
    CodeShapeError,
    CoverageError,
    LengthDistribution,
    OracleSizeError,
    RankedCode,
    all_sequences,
    brute_force_eval,
    eps_threshold,
    epsilon_bits,
    expand_sequences,
    fast_epsilon_bits,
    length_counts,
    length_distribution,
    max_bits_for,
    optimal_code,
    optimal_rate_bits,
    optimal_tail_table,
    string_length_of_rank,
    total_variation,
)


def test_string_length_of_rank() -> None:
    """Test the length of the rank-th binary string."""
    assert [string_length_of_rank(r) for r in range(1, 9)] == [0, 1, 1, 2, 2, 2, 2, 3]
    assert string_length_of_rank(2**100) == 100
    with pytest.raises(ValueError):
        string_length_of_rank(0)


def test_length_counts() -> None:
    """Test splitting rank blocks at dyadic boundaries."""
    assert list(length_counts(1, 7)) == [(0, 1), (1, 2), (2, 4)]
    assert list(length_counts(3, 3, stride=2)) == [(1, 1), (2, 2)]
    assert list(length_counts(6, 1)) == [(2, 1)]
    huge = 2**200
    assert list(length_counts(huge, huge)) == [(200, huge)]


def test_optimal_code_example() -> None:
    """Test the optimal code of a skewed binary source at n = 3."""
    P = Dist.parse("0.8,0.2")
    code = optimal_code(P, 3)
    assert [tuple(row) for row in code.counts.tolist()] == [
        (3, 0),
        (2, 1),
        (1, 2),
        (0, 3),
    ]
    ld = length_distribution(code, P)
    assert ld.mass[0] == pytest.approx(0.512)
    assert ld.mass[3] == pytest.approx(0.008)
    assert ld.tail(1) == pytest.approx(0.232)
    assert epsilon_bits(ld, 0.05) == 2
    assert optimal_rate_bits(P, 3, 0.05) == 2
    assert epsilon_bits(ld, 0.9) == 0


def test_optimal_code_ties() -> None:
    """Test that equiprobable types keep the canonical order."""
    code = optimal_code(Dist.uniform(2), 2)
    assert [tuple(row) for row in code.counts.tolist()] == [(2, 0), (1, 1), (0, 2)]
    assert code.is_dense()
    assert code.max_length() == 2


def test_epsilon_bits_range() -> None:
    """Test that eps outside (0, 1) is rejected."""
    ld = LengthDistribution(n=1, mass={0: 0.5, 1: 0.5})
    for eps in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            epsilon_bits(ld, eps)


def test_epsilon_bits_tiny_eps() -> None:
    """Test that the eps slack is relative to eps."""
    assert eps_threshold(0.1) == pytest.approx(0.1, rel=1e-11)
    assert eps_threshold(1e-13) < 2e-13
    ld = LengthDistribution(n=1, mass={0: 1.0 - 2e-13, 5: 2e-13})
    assert epsilon_bits(ld, 1e-13) == 5
    assert epsilon_bits(ld, 2e-13) == 0


def test_length_distribution_validation() -> None:
    """Test that length distributions must sum to one."""
    with pytest.raises(ValueError):
        LengthDistribution(n=2, mass={0: 0.5, 1: 0.4})
    ld = LengthDistribution(n=2, mass={2: 0.25, 0: 0.75, 5: 0.0})
    assert ld.lengths == [0, 2]
    assert ld.tail(0) == pytest.approx(0.25)
    assert ld.tail(2) == 0.0
    assert LengthDistribution.from_json(ld.to_json()) == ld


def test_code_shape_errors() -> None:
    """Test the validation of ranked codes."""
    alphabet = Alphabet(2)
    with pytest.raises(CodeShapeError):
        RankedCode(
            n=2,
            alphabet=alphabet,
            counts=np.array([[2, 0], [1, 1]]),
            sizes=(1,),
            starts=(1, 2),
            strides=(1, 1),
            partition=(0, 0),
        )
    with pytest.raises(CodeShapeError):
        RankedCode.dense(2, alphabet, np.array([[2, 1]]))
    with pytest.raises(CodeShapeError):
        RankedCode.dense(2, alphabet, np.array([[2, 0]]), header_bits=-1)


def test_coverage_error() -> None:
    """Test that a code missing a type cannot be evaluated."""
    code = RankedCode.dense(2, Alphabet(2), np.array([[2, 0], [1, 1]]), name="short")
    with pytest.raises(CoverageError, match="short"):
        length_distribution(code, Dist.uniform(2))
    with pytest.raises(CoverageError):
        brute_force_eval(code, Dist.uniform(2))
    # Types without probability need not be covered
    ld = length_distribution(code, Dist.parse("1,0"))
    assert ld.mass == {0: 1.0}


def test_expand_sequences() -> None:
    """Test the explicit rank of every sequence."""
    code = optimal_code(Dist.parse("0.7,0.3"), 2)
    assignment = expand_sequences(code)
    assert assignment.sequences.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert assignment.ranks.tolist() == [1, 2, 3, 4]
    assert assignment.lengths.tolist() == [0, 1, 1, 2]


def test_oracle_size_limit() -> None:
    """Test that the oracle refuses to enumerate too many sequences."""
    with pytest.raises(OracleSizeError):
        all_sequences(21, 2)


@pytest.mark.parametrize("m, n", [(2, 1), (2, 9), (3, 5), (4, 4)])
def test_type_level_matches_oracle(m: int, n: int) -> None:
    """Test type-level length distributions against sequence enumeration."""
    for P in sample_distributions(m, 6):
        code = optimal_code(P, n)
        exact = length_distribution(code, P)
        oracle = brute_force_eval(code, P)
        assert total_variation(exact, oracle) <= 1e-12


@pytest.mark.parametrize(
    "probs, n, eps",
    [
        ("0.5,0.5", 40, 0.1),
        ("0.9,0.1", 60, 0.05),
        ("0.5,0.3,0.2", 30, 0.1),
        ("0.6,0.3,0.1", 25, 0.2),
        ("0.4,0.3,0.2,0.1", 12, 0.01),
    ],
)
def test_log_domain_matches_exact(probs: str, n: int, eps: float) -> None:
    """Test the log-domain tail table against exact evaluation."""
    P = Dist.parse(probs)
    exact = epsilon_bits(length_distribution(optimal_code(P, n), P), eps)
    fast = fast_epsilon_bits(
        [optimal_tail_table(P, n)], eps, 0, max_bits_for(n, P.m)
    )
    assert fast == exact


def test_optimal_bits_monotone_in_eps() -> None:
    """Test that the optimal bit count does not increase with eps."""
    P = Dist.parse("0.5,0.3,0.2")
    bits = [optimal_rate_bits(P, 20, eps) for eps in (0.01, 0.05, 0.1, 0.2, 0.5)]
    assert bits == sorted(bits, reverse=True)


def test_type_table_cache_is_read_only() -> None:
    """Test that cached tables cannot be modified by codes."""
    code = optimal_code(Dist.uniform(3), 3)
    assert not code.counts.flags.writeable
    assert not type_table(3, 3).flags.writeable
