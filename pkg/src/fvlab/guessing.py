"""
Module for guessing functions.

A guessing function is a bijection from all m^n sequences to the positions
1, ..., m^n. At type granularity it is a `RankedCode` with a single dense rank space
and no header, so codes and guessers share one representation.
"""

import math
from dataclasses import dataclass, replace
from itertools import pairwise

import numpy as np

from fvlab.alphabet import Alphabet, Dist, sequence_log2_probs, type_table
from fvlab.coding import (
    CodeShapeError,
    RankedCode,
    eps_threshold,
    length_counts,
    scaled_probability,
)


@dataclass(frozen=True, eq=False)
class GuessingFunction:
    """
    Guessing function stored as an ordered block list over one rank space.

    Attributes
    ----------
    order : RankedCode
        Dense, single rank space, no header, covering every sequence exactly once.
    """

    order: RankedCode

    def __post_init__(self) -> None:
        """Check that the order is a bijection onto 1, ..., m^n."""
        code = self.order
        if code.num_partitions != 1 or code.header_bits != 0:
            msg = "A guessing function needs a single rank space without header!"
            raise CodeShapeError(msg)
        if sum(code.sizes) != code.m**code.n or not code.is_dense():
            msg = f"Order '{code.name}' does not use exactly the positions 1..m^n!"
            raise CodeShapeError(msg)
        code.check_coverage()

    @classmethod
    def from_type_order(
        cls, n: int, alphabet: Alphabet, order: list[int] | np.ndarray
    ) -> "GuessingFunction":
        """
        Create a guesser that lists whole type classes in the given order.

        Parameters
        ----------
        n : int
            Sequence length.
        alphabet : Alphabet
            Source alphabet.
        order : sequence of int
            Permutation of the row indices of `type_table(n, m)`.
        """
        table = type_table(n, alphabet.size)
        code = RankedCode.dense(n, alphabet, table[np.asarray(order)], name="guesser")
        return cls(code)

    @property
    def n(self) -> int:
        """Sequence length."""
        return self.order.n

    @property
    def alphabet(self) -> Alphabet:
        """Source alphabet."""
        return self.order.alphabet


def code_to_guesser(code: RankedCode) -> GuessingFunction:
    """
    Return the guesser that lists sequences by ascending codeword length.

    Within a length the code's rank order is kept. A dense code already lists its
    sequences by length, any other code is compacted level by level.

    Raises
    ------
    CodeShapeError
        If the code has several rank spaces or a header; use `flatten_code` first.
    """
    if code.num_partitions != 1 or code.header_bits != 0:
        msg = (
            f"Code '{code.name}' has {code.num_partitions} rank spaces and "
            f"{code.header_bits} header bits, flatten it first!"
        )
        raise CodeShapeError(msg)
    if code.is_dense():
        return GuessingFunction(replace(code, name=f"guesser({code.name})"))

    pieces = []
    for block in range(code.num_blocks):
        start, stride = code.starts[block], code.strides[block]
        for length, count in length_counts(start, code.sizes[block], stride):
            low = max(start, 1 << length)
            first = start + stride * -(-(low - start) // stride)
            pieces.append((length, first, block, count))
    pieces.sort()

    position = 1
    starts, sizes = [], []
    for _, _, _, count in pieces:
        starts.append(position)
        sizes.append(count)
        position += count
    blocks = [block for _, _, block, _ in pieces]
    compact = RankedCode(
        n=code.n,
        alphabet=code.alphabet,
        counts=code.counts[blocks],
        sizes=tuple(sizes),
        starts=tuple(starts),
        strides=(1,) * len(sizes),
        partition=(0,) * len(sizes),
        name=f"guesser({code.name})",
    )
    return GuessingFunction(compact)


def guesser_to_code(G: GuessingFunction) -> RankedCode:
    """Return the code that maps the sequence at position r to the r-th string."""
    return replace(G.order, name=f"code({G.order.name})")


def _partition_sort_key(key: object) -> tuple:
    if isinstance(key, tuple):
        return (len(key), key)
    return (0, (key,))


def flatten_code(code: RankedCode) -> RankedCode:
    """
    Merge the rank spaces of a code into one, rank by rank.

    Rank spaces are visited in canonical order of their keys (by size, then
    lexicographically). The sequences holding rank r in the spaces that use rank r
    are placed next to each other, so a sequence with rank r lands at a position of
    at most K r for K rank spaces. The header is dropped.

    Raises
    ------
    CodeShapeError
        If a multi-space code has strided blocks.
    """
    if code.num_partitions == 1:
        return replace(code, header_bits=0, name=f"flat({code.name})")
    if any(stride != 1 for stride in code.strides):
        msg = f"Code '{code.name}' has strided blocks and cannot be flattened!"
        raise CodeShapeError(msg)

    ordered = sorted(
        range(code.num_partitions),
        key=lambda p: _partition_sort_key(code.partition_keys[p]),
    )
    intervals: list[list[tuple[int, int, int]]] = [[] for _ in ordered]
    for block, p in enumerate(code.partition):
        start = code.starts[block]
        intervals[p].append((start, start + code.sizes[block], block))
    for spans in intervals:
        spans.sort()
    edges = {edge for spans in intervals for s, e, _ in spans for edge in (s, e)}
    breakpoints = sorted(edges)

    pointers = [0] * code.num_partitions
    rows, sizes, starts, strides = [], [], [], []
    position = 1
    for low, high in pairwise(breakpoints):
        active = []
        for p in ordered:
            spans, i = intervals[p], pointers[p]
            while i < len(spans) and spans[i][1] <= low:
                i += 1
            pointers[p] = i
            if i < len(spans) and spans[i][0] <= low:
                active.append(spans[i][2])
        width = high - low
        for j, block in enumerate(active):
            rows.append(block)
            sizes.append(width)
            starts.append(position + j)
            strides.append(len(active))
        position += len(active) * width

    return RankedCode(
        n=code.n,
        alphabet=code.alphabet,
        counts=code.counts[rows],
        sizes=tuple(sizes),
        starts=tuple(starts),
        strides=tuple(strides),
        partition=(0,) * len(sizes),
        name=f"flat({code.name})",
    )


def _count_above(start: int, size: int, stride: int, budget: int) -> int:
    if budget < start:
        return size
    return max(0, size - ((budget - start) // stride + 1))


def guessing_tail(G: GuessingFunction, P: Dist, eps: float) -> int:
    """
    Return M(G; eps, P) = min{M : P(G(X^n) > M) <= eps}.

    The tail is evaluated exactly at every integer M, inside a block it is the
    number of remaining positions times the per-sequence probability.

    Parameters
    ----------
    G : GuessingFunction
        Guesser.
    P : Dist
        Source law.
    eps : float
        Error probability in (0, 1).

    Returns
    -------
    int
        The minimal number of guesses M.
    """
    threshold = eps_threshold(eps)
    code = G.order
    seq_log2 = sequence_log2_probs(code.counts, P).tolist()
    pieces = [
        (code.starts[block], code.sizes[block], code.strides[block], q)
        for block, q in enumerate(seq_log2)
        if q > -math.inf
    ]

    def tail(budget: int) -> float:
        return math.fsum(
            scaled_probability(_count_above(start, size, stride, budget), q)
            for start, size, stride, q in pieces
        )

    low, high = 1, sum(code.sizes)
    while low < high:
        middle = (low + high) // 2
        if tail(middle) <= threshold:
            high = middle
        else:
            low = middle + 1
    return low
