"""Test guessing functions and their duality with codes."""

import math

import numpy as np
import pytest

from fvlab.alphabet import (
    Alphabet,
    Dist,
    sample_distributions,
    sequence_log2_probs,
    type_table,
)
from fvlab.coding import (
    CodeShapeError,
    RankedCode,
    epsilon_bits,
    expand_sequences,
    length_distribution,
    optimal_code,
)
from fvlab.guessing import (
    GuessingFunction,
    code_to_guesser,
    flatten_code,
    guesser_to_code,
    guessing_tail,
)
from fvlab.universal import (
    binary_interleave_code,
    two_stage_ranked_code,
    type_size_ranked_code,
    type_size_solution,
)


def test_guessing_tail_uniform() -> None:
    """Test the number of guesses for a uniform binary source."""
    P = Dist.uniform(2)
    G = code_to_guesser(optimal_code(P, 2))
    assert guessing_tail(G, P, 0.3) == 3
    assert guessing_tail(G, P, 0.99) == 1
    assert guessing_tail(G, P, 0.01) == 4


def test_guesser_validation() -> None:
    """Test that only bijections onto 1..m^n are guessers."""
    alphabet = Alphabet(2)
    table = type_table(3, 2)
    with pytest.raises(CodeShapeError):
        GuessingFunction(RankedCode.dense(3, alphabet, table, header_bits=1))
    with pytest.raises(CodeShapeError):
        GuessingFunction(RankedCode.dense(3, alphabet, table[:3]))
    with pytest.raises(CodeShapeError):
        code_to_guesser(type_size_ranked_code(3, alphabet))


def test_from_type_order() -> None:
    """Test guessers listing whole type classes."""
    G = GuessingFunction.from_type_order(2, Alphabet(2), [2, 1, 0])
    assert [tuple(row) for row in G.order.counts.tolist()] == [(0, 2), (1, 1), (2, 0)]
    assert (G.n, G.alphabet.size) == (2, 2)
    with pytest.raises(CodeShapeError):
        GuessingFunction.from_type_order(2, Alphabet(2), [0, 1])


@pytest.mark.parametrize("m, n", [(2, 8), (3, 5)])
def test_guesser_code_identity(m: int, n: int) -> None:
    """Test floor(log2 M(G)) = nR(code(G)) for guesser-induced codes."""
    alphabet = Alphabet(m)
    table = type_table(n, m)
    canonical = np.arange(table.shape[0])
    for P in sample_distributions(m, 5):
        by_probability = np.argsort(-sequence_log2_probs(table, P), kind="stable")
        for order in (canonical, canonical[::-1], by_probability):
            G = GuessingFunction.from_type_order(n, alphabet, order)
            code = guesser_to_code(G)
            for eps in (0.05, 0.2, 0.6):
                M = guessing_tail(G, P, eps)
                bits = epsilon_bits(length_distribution(code, P), eps)
                assert math.floor(math.log2(M)) == bits


@pytest.mark.parametrize("n", [4, 7])
def test_code_induced_guesser(n: int) -> None:
    """Test floor(log2 M(G_C)) <= nR(C) for flattened universal codes."""
    for P in sample_distributions(2, 5):
        codes = [
            flatten_code(two_stage_ranked_code("FF", n, P.alphabet)),
            flatten_code(type_size_ranked_code(n, P.alphabet)),
            binary_interleave_code(n, P.alphabet),
        ]
        for code in codes:
            G = code_to_guesser(code)
            for eps in (0.05, 0.3):
                M = guessing_tail(G, P, eps)
                bits = epsilon_bits(length_distribution(code, P), eps)
                assert math.floor(math.log2(M)) <= bits


def test_flatten_position_bound() -> None:
    """Test that flattening K rank spaces moves rank r to at most K r."""
    code = type_size_ranked_code(4, Alphabet(3))
    flat = flatten_code(code)
    assert flat.header_bits == 0
    assert flat.num_partitions == 1
    assert flat.is_dense()
    original = expand_sequences(code)
    flattened = expand_sequences(flat)
    assert np.all(flattened.ranks <= code.num_partitions * original.ranks)
    assert sorted(flattened.ranks.tolist()) == list(range(1, 3**4 + 1))


def test_flatten_rejects_strided_blocks() -> None:
    """Test that multi-space codes with strided blocks cannot be flattened."""
    base = binary_interleave_code(3)
    code = RankedCode(
        n=3,
        alphabet=base.alphabet,
        counts=base.counts,
        sizes=base.sizes,
        starts=base.starts,
        strides=base.strides,
        partition=(0,) * (base.num_blocks - 1) + (1,),
        partition_keys=("a", "b"),
    )
    with pytest.raises(CodeShapeError):
        flatten_code(code)


def test_type_size_guesser_budget() -> None:
    """Test M(G) <= 2^m M* for the guesser of the Type Size code."""
    for P in sample_distributions(3, 6):
        code = type_size_ranked_code(5, P.alphabet)
        G = code_to_guesser(flatten_code(code))
        for eps in (0.05, 0.2):
            M_star = type_size_solution(5, P.alphabet, P, eps).M_star
            assert guessing_tail(G, P, eps) <= 2**P.m * M_star
