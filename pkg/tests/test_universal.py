"""Test the universal codes and their rate formulas."""

from fractions import Fraction

import pytest

from fvlab.alphabet import Alphabet, Dist, sample_distributions
from fvlab.coding import (
    CodeShapeError,
    brute_force_eval,
    epsilon_bits,
    length_distribution,
    total_variation,
)
from fvlab.universal import (
    CODE_NAMES,
    _type_size_solution_fast,
    binary_interleave_code,
    first_stage_bits,
    interleave_sequences,
    one_bit_gap,
    ranked_code,
    rate_bits,
    support_keys,
    two_stage_rate,
    two_stage_ranked_code,
    type_size_ranked_code,
    type_size_solution,
)

SKEWED = Dist.parse("0.9,0.1")


def test_first_stage_bits() -> None:
    """Test the first-stage header length."""
    assert first_stage_bits(3, 2) == 2
    assert first_stage_bits(10, 3) == 7
    assert first_stage_bits(5, 1) == 0


def test_rate_bits_example() -> None:
    """Test all codes on a skewed binary source at n = 3."""
    assert rate_bits("optimal", SKEWED, 3, 0.05) == 2
    assert rate_bits("2s-fv", SKEWED, 3, 0.05) == 3
    assert rate_bits("2s-ff", SKEWED, 3, 0.05) == 4
    assert rate_bits("type-size", SKEWED, 3, 0.05) == 3
    assert rate_bits("interleave", SKEWED, 3, 0.05) <= 3


def test_two_stage_rate_parts() -> None:
    """Test the split into first- and second-stage bits."""
    result = two_stage_rate("fv", 3, SKEWED, 0.05)
    assert (result.variant, result.s, result.k) == ("FV", 2, 1)
    assert result.rate == pytest.approx(1.0)
    with pytest.raises(ValueError):
        two_stage_rate("XY", 3, SKEWED, 0.05)


def test_type_size_solution_example() -> None:
    """Test M* and the balance point of the skewed binary source."""
    solution = type_size_solution(3, Alphabet(2), SKEWED, 0.05)
    assert solution.M_star == 3
    assert solution.bits == 3
    assert solution.tau_star == {(0,): None, (1,): None, (0, 1): 3}
    assert solution.lambda_star[(0, 1)] == Fraction(1, 2)


def test_type_size_realised_supports() -> None:
    """Test that only support sets with positive probability are solved."""
    P = Dist.parse("0.6,0,0.4")
    solution = type_size_solution(6, Alphabet(3), P, 0.1)
    assert set(solution.tau_star) <= {(0,), (2,), (0, 2)}


def test_type_size_solution_errors() -> None:
    """Test invalid tie rules and mismatched alphabets."""
    with pytest.raises(ValueError):
        type_size_solution(3, Alphabet(2), SKEWED, 0.05, tie_rule="random")
    with pytest.raises(ValueError):
        type_size_solution(3, Alphabet(3), SKEWED, 0.05)


def test_proportional_tie_rule() -> None:
    """Test that the proportional rule yields a valid balance point."""
    P = Dist.parse("0.5,0.3,0.2")
    solution = type_size_solution(8, Alphabet(3), P, 0.1, tie_rule="proportional")
    assert solution.tie_rule == "proportional"
    for value in solution.lambda_star.values():
        assert value is None or 0 <= value < 1


@pytest.mark.parametrize("m, n", [(2, 6), (2, 15), (3, 7), (4, 5)])
def test_rate_formulas_match_codes(m: int, n: int) -> None:
    """Test each rate formula against the length distribution of its code."""
    for P in sample_distributions(m, 5):
        for eps in (0.01, 0.1, 0.5):
            expected = epsilon_bits(
                length_distribution(type_size_ranked_code(n, P.alphabet), P), eps
            )
            assert type_size_solution(n, P.alphabet, P, eps).bits == expected
            for variant in ("FV", "FF"):
                code = two_stage_ranked_code(variant, n, P.alphabet, P.support)
                expected = epsilon_bits(length_distribution(code, P), eps)
                assert two_stage_rate(variant, n, P, eps).bits == expected


@pytest.mark.parametrize(
    "probs, n", [("0.7,0.3", 30), ("0.5,0.3,0.2", 20), ("0.6,0,0.4", 25)]
)
def test_type_size_log_domain(probs: str, n: int) -> None:
    """Test the log-domain Type Size solution against the exact one."""
    P = Dist.parse(probs)
    for eps in (0.05, 0.2):
        exact = type_size_solution(n, P.alphabet, P, eps)
        fast = _type_size_solution_fast(n, P, eps, "ordered")
        assert fast.bits == exact.bits
        assert fast.M_star is None


def test_type_size_code_layout() -> None:
    """Test the support header and the ascending class sizes."""
    code = type_size_ranked_code(4, Alphabet(3))
    assert code.header_bits == 3
    assert code.partition_keys == tuple(support_keys(3))
    assert code.is_dense()
    for p in range(code.num_partitions):
        sizes = [s for s, q in zip(code.sizes, code.partition) if q == p]
        assert sizes == sorted(sizes)


def test_support_keys() -> None:
    """Test the order of support sets."""
    assert support_keys(3) == [(0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]


def test_two_stage_ff_codewords() -> None:
    """Test that the fixed-length second stage uses strings of one length."""
    code = two_stage_ranked_code("FF", 4, Alphabet(2))
    assignment_lengths = {
        tuple(row): code.header_bits + (start.bit_length() - 1)
        for row, start in zip(code.counts.tolist(), code.starts)
    }
    # |T| = 4 for (3, 1) needs two bits, |T| = 6 for (2, 2) three bits
    assert assignment_lengths[(3, 1)] == code.header_bits + 2
    assert assignment_lengths[(2, 2)] == code.header_bits + 3
    assert assignment_lengths[(4, 0)] == code.header_bits


def test_interleave_order() -> None:
    """Test the interleaved sequence order for n = 3."""
    alphabet = Alphabet.binary()
    order = [alphabet.format_sequence(seq) for seq in interleave_sequences(3)]
    assert order == ["AAA", "BBB", "AAB", "BBA", "ABA", "BAB", "BAA", "ABB"]


@pytest.mark.parametrize("n", [1, 2, 3, 8, 11])
def test_interleave_code_matches_sequences(n: int) -> None:
    """Test the type-level interleaved code against the sequence construction."""
    rank_of = {seq: r for r, seq in enumerate(interleave_sequences(n), start=1)}
    code = binary_interleave_code(n)
    code.check_coverage()
    for P in sample_distributions(2, 4):
        probs = {
            seq: P.probs[list(seq)].prod() for seq in rank_of
        }
        mass: dict[int, float] = {}
        for seq, rank in rank_of.items():
            length = rank.bit_length() - 1
            mass[length] = mass.get(length, 0.0) + probs[seq]
        oracle = brute_force_eval(code, P)
        assert sum(mass.values()) == pytest.approx(1.0)
        for length, value in mass.items():
            assert oracle.mass.get(length, 0.0) == pytest.approx(value, abs=1e-12)
        assert total_variation(length_distribution(code, P), oracle) <= 1e-12


@pytest.mark.parametrize("n", [1, 2, 5, 10, 40])
@pytest.mark.parametrize("p", [0.05, 0.3, 0.5, 0.7, 0.95])
def test_interleave_one_bit(n: int, p: float) -> None:
    """Test that the interleaved code needs at most one extra bit."""
    P = Dist.from_values([p, 1 - p])
    for eps in (0.01, 0.1, 0.5):
        bits, optimal = one_bit_gap(n, P, eps)
        assert optimal <= bits <= optimal + 1


def test_interleave_needs_binary() -> None:
    """Test that the interleaved code rejects larger alphabets."""
    with pytest.raises(CodeShapeError):
        binary_interleave_code(3, Alphabet(3))
    with pytest.raises(CodeShapeError):
        one_bit_gap(3, Dist.uniform(3), 0.1)


def test_unknown_code_name() -> None:
    """Test the dispatch on code names."""
    with pytest.raises(ValueError):
        rate_bits("huffman", SKEWED, 3, 0.1)
    with pytest.raises(ValueError):
        ranked_code("huffman", 3, SKEWED)
    for name in CODE_NAMES:
        assert ranked_code(name, 3, SKEWED).n == 3
