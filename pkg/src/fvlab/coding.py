"""
Module for the fixed-to-variable code abstraction.

Includes tools to:
- Describe a code as ranked blocks of type classes (`RankedCode`), where rank r is
  mapped to the r-th string of {∅, 0, 1, 00, 01, ...} and thus has length
  floor(log2 r).
- Compute exact length distributions at type granularity and the ε-rate.
- Materialise every sequence as an independent brute-force oracle.
- Evaluate ε-rates in the log domain when there are too many types for exact
  big-natural arithmetic (`DyadicTailTable`).
"""

import itertools
import math
from bisect import bisect_right
from collections import defaultdict
from collections.abc import Hashable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from fvlab.alphabet import (
    LN2,
    Alphabet,
    Dist,
    TypeVector,
    class_sizes,
    log2_type_sizes,
    num_types,
    sequence_log2_probs,
    type_table,
)
from fvlab.logging_tools import logger

# Uniform relative slack for every `tail <= eps` comparison
EPS_SLACK = 1e-12

# Above this number of types, rates are computed in the log domain
EXACT_TYPE_LIMIT = 200_000

# Largest number of sequences the brute-force oracle materialises
ORACLE_LIMIT = 10**6


class CoverageError(LookupError):
    """Raised when a code misses sequences of a type with positive probability."""


class OracleSizeError(ValueError):
    """Raised when the brute-force oracle would exceed `ORACLE_LIMIT` sequences."""


class CodeShapeError(ValueError):
    """Raised when a code does not have the shape an operation requires."""


def check_eps(eps: float) -> float:
    """Return eps as float if it lies in (0, 1), raise `ValueError` otherwise."""
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        msg = f"eps must lie in (0, 1), got {eps}!"
        raise ValueError(msg)
    return eps


def eps_threshold(eps: float) -> float:
    """Return the largest tail accepted as `<= eps`, eps * (1 + `EPS_SLACK`)."""
    return check_eps(eps) * (1.0 + EPS_SLACK)


def string_length_of_rank(rank: int) -> int:
    """
    Return the length of the rank-th binary string, floor(log2 rank).

    Parameters
    ----------
    rank : int
        Rank, at least one (rank 1 is the empty string).

    Returns
    -------
    int
        String length.

    Raises
    ------
    ValueError
        If rank < 1.
    """
    if rank < 1:
        msg = f"Ranks start at 1, got {rank}!"
        raise ValueError(msg)
    return int(rank).bit_length() - 1


def rank_of_length_range(length: int) -> range:
    """Return the ranks [2^length, 2^(length+1)) of all strings of that length."""
    return range(1 << length, 1 << (length + 1))


def length_counts(start: int, size: int, stride: int = 1) -> Iterator[tuple[int, int]]:
    """
    Split the ranks start, start + stride, ... of a block by string length.

    Yields
    ------
    tuple of int
        Pairs (length, number of ranks of that length), lengths ascending.
    """
    last = start + stride * (size - 1)
    for length in range(start.bit_length() - 1, last.bit_length()):
        low = max(start, 1 << length)
        high = min(last, (1 << (length + 1)) - 1)
        first_index = -(-(low - start) // stride)
        last_index = (high - start) // stride
        if last_index >= first_index:
            yield length, last_index - first_index + 1


def scaled_probability(count: int, log2_prob: float) -> float:
    """Return count * 2**log2_prob without overflowing for huge counts."""
    if count == 0 or log2_prob == -math.inf:
        return 0.0
    return 2.0 ** (math.log2(count) + log2_prob)


def compensated_suffix_sums(values: Sequence[float]) -> list[float]:
    """
    Return suffix sums s[i] = sum(values[i:]) with Neumaier compensation.

    The result has one trailing entry s[len(values)] = 0.
    """
    out = [0.0] * (len(values) + 1)
    total = compensation = 0.0
    for i in range(len(values) - 1, -1, -1):
        value = values[i]
        new_total = total + value
        if abs(total) >= abs(value):
            compensation += (total - new_total) + value
        else:
            compensation += (value - new_total) + total
        total = new_total
        out[i] = total + compensation
    return out


@dataclass(frozen=True, eq=False)
class RankedCode:
    """
    Code given by an assignment of type classes to ranks.

    Block i holds `sizes[i]` sequences of the type `counts[i]`, placed at the ranks
    `starts[i] + strides[i] * j` of the rank space `partition[i]`. Within a type the
    sequences are taken in lexicographic order. Every codeword additionally carries
    `header_bits` bits.

    Attributes
    ----------
    n : int
        Sequence length.
    alphabet : Alphabet
        Source alphabet.
    counts : numpy.ndarray
        Read-only array of shape (B, m), the type of each block.
    sizes : tuple of int
        Number of sequences per block.
    starts : tuple of int
        First rank per block.
    strides : tuple of int
        Rank step per block (1 for contiguous blocks).
    partition : tuple of int
        Rank space index per block.
    partition_keys : tuple
        Label per rank space, e.g. a support set.
    header_bits : int
        Bits added to every codeword.
    name : str
        Human readable name used in reports and errors.
    """

    n: int
    alphabet: Alphabet
    counts: np.ndarray
    sizes: tuple[int, ...]
    starts: tuple[int, ...]
    strides: tuple[int, ...]
    partition: tuple[int, ...]
    partition_keys: tuple[Hashable, ...] = ((),)
    header_bits: int = 0
    name: str = "code"

    def __post_init__(self) -> None:
        """Validate the layout and freeze the arrays."""
        counts = np.array(self.counts, dtype=np.int64).reshape(-1, self.alphabet.size)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        for attribute in ("sizes", "starts", "strides", "partition"):
            values = tuple(int(v) for v in getattr(self, attribute))
            object.__setattr__(self, attribute, values)
        object.__setattr__(self, "partition_keys", tuple(self.partition_keys))

        num_blocks = counts.shape[0]
        described = (self.sizes, self.starts, self.strides, self.partition)
        if {len(values) for values in described} != {num_blocks}:
            msg = f"Code '{self.name}' has inconsistent block descriptions!"
            raise CodeShapeError(msg)
        if np.any(counts.sum(axis=1) != self.n):
            msg = f"Code '{self.name}' contains a type that does not sum to n={self.n}!"
            raise CodeShapeError(msg)
        if min(self.sizes, default=1) < 1 or min(self.starts, default=1) < 1:
            msg = f"Code '{self.name}' has an empty block or a rank below 1!"
            raise CodeShapeError(msg)
        if min(self.strides, default=1) < 1:
            msg = f"Code '{self.name}' has a stride below 1!"
            raise CodeShapeError(msg)
        if any(not 0 <= p < len(self.partition_keys) for p in self.partition):
            msg = f"Code '{self.name}' refers to an unknown rank space!"
            raise CodeShapeError(msg)
        if self.header_bits < 0:
            msg = f"Header bits must be nonnegative, got {self.header_bits}!"
            raise CodeShapeError(msg)

    @classmethod
    def dense(
        cls,
        n: int,
        alphabet: Alphabet,
        counts: np.ndarray,
        *,
        sizes: Sequence[int] | None = None,
        partition: Sequence[int] | None = None,
        partition_keys: Sequence[Hashable] = ((),),
        header_bits: int = 0,
        name: str = "code",
    ) -> "RankedCode":
        """
        Create a code whose blocks fill each rank space contiguously from rank 1.

        Parameters
        ----------
        n : int
            Sequence length.
        alphabet : Alphabet
            Source alphabet.
        counts : numpy.ndarray
            Types in assignment order, shape (B, m).
        sizes : sequence of int, optional
            Block sizes, defaults to the full class sizes.
        partition : sequence of int, optional
            Rank space per block, defaults to a single space.
        partition_keys : sequence, optional
            Label per rank space.
        header_bits : int, optional
            Bits added to every codeword.
        name : str, optional
            Name of the code.

        Returns
        -------
        RankedCode
            The dense code.
        """
        counts = np.asarray(counts)
        sizes = class_sizes(counts) if sizes is None else [int(s) for s in sizes]
        if partition is None:
            partition = [0] * len(sizes)
        next_rank = [1] * len(partition_keys)
        starts = []
        for p, size in zip(partition, sizes):
            starts.append(next_rank[p])
            next_rank[p] += size
        return cls(
            n=n,
            alphabet=alphabet,
            counts=counts,
            sizes=tuple(sizes),
            starts=tuple(starts),
            strides=(1,) * len(sizes),
            partition=tuple(partition),
            partition_keys=tuple(partition_keys),
            header_bits=header_bits,
            name=name,
        )

    @property
    def m(self) -> int:
        """Alphabet size."""
        return self.alphabet.size

    @property
    def num_blocks(self) -> int:
        """Number of blocks."""
        return len(self.sizes)

    @property
    def num_partitions(self) -> int:
        """Number of independent rank spaces."""
        return len(self.partition_keys)

    def blocks(self) -> Iterator[tuple[TypeVector, int]]:
        """Iterate over (type, block size) in block order."""
        for row, size in zip(self.counts.tolist(), self.sizes):
            yield TypeVector(tuple(row)), size

    def last_rank(self, block: int) -> int:
        """Return the highest rank used by a block."""
        return self.starts[block] + self.strides[block] * (self.sizes[block] - 1)

    def partition_totals(self) -> dict[Hashable, int]:
        """Return the number of ranks used per rank space, keyed by its label."""
        totals = dict.fromkeys(self.partition_keys, 0)
        for p, size in zip(self.partition, self.sizes):
            totals[self.partition_keys[p]] += size
        return totals

    def is_dense(self) -> bool:
        """Return whether every rank space uses exactly the ranks 1..total."""
        highest = [0] * self.num_partitions
        totals = [0] * self.num_partitions
        for block, p in enumerate(self.partition):
            highest[p] = max(highest[p], self.last_rank(block))
            totals[p] += self.sizes[block]
        return highest == totals

    def max_length(self) -> int:
        """Return the longest codeword length including the header."""
        longest = max(
            string_length_of_rank(self.last_rank(block))
            for block in range(self.num_blocks)
        )
        return self.header_bits + longest

    def coverage(self) -> dict[tuple[int, ...], int]:
        """Return the number of assigned sequences per type."""
        assigned: dict[tuple[int, ...], int] = defaultdict(int)
        for row, size in zip(self.counts.tolist(), self.sizes):
            assigned[tuple(row)] += size
        return assigned

    def check_coverage(self, P: Dist | None = None) -> None:
        """
        Check that every sequence of every type is assigned exactly once.

        Parameters
        ----------
        P : Dist, optional
            If given, only types with positive probability must be covered.

        Raises
        ------
        CoverageError
            Naming the first type that is not covered exactly.
        """
        assigned = self.coverage()
        table = type_table(self.n, self.m)
        if P is not None:
            table = table[np.isfinite(sequence_log2_probs(table, P))]
        for row, size in zip(table.tolist(), class_sizes(table)):
            got = assigned.get(tuple(row), 0)
            if got != size:
                msg = (
                    f"Code '{self.name}' assigns {got} of the {size} sequences "
                    f"of type {tuple(row)}!"
                )
                raise CoverageError(msg)


@dataclass(frozen=True)
class LengthDistribution:
    """
    Distribution of codeword lengths.

    Attributes
    ----------
    n : int
        Sequence length of the code.
    mass : dict
        Probability per length, lengths ascending.
    """

    n: int
    mass: Mapping[int, float]
    _lengths: list[int] = field(init=False, repr=False, compare=False)
    _suffix: list[float] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Validate the masses and prepare the tail table."""
        mass = {int(k): float(p) for k, p in sorted(self.mass.items()) if p > 0}
        if any(k < 0 for k in mass):
            msg = "Codeword lengths must be nonnegative!"
            raise ValueError(msg)
        total = math.fsum(mass.values())
        if abs(total - 1.0) > 1e-9:
            msg = f"Length distribution sums to {total!r} instead of 1!"
            raise ValueError(msg)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "_lengths", list(mass))
        suffix = compensated_suffix_sums(list(mass.values()))
        object.__setattr__(self, "_suffix", suffix)

    @property
    def lengths(self) -> list[int]:
        """Lengths with positive probability, ascending."""
        return list(self._lengths)

    @property
    def min_length(self) -> int:
        """Shortest length with positive probability."""
        return self._lengths[0]

    @property
    def max_length(self) -> int:
        """Longest length with positive probability."""
        return self._lengths[-1]

    def tail(self, k: int) -> float:
        """Return P(length > k)."""
        return self._suffix[bisect_right(self._lengths, k)]

    def to_json(self) -> dict:
        """Return a JSON-serialisable representation."""
        return {"n": self.n, "mass": [[k, p] for k, p in self.mass.items()]}

    @classmethod
    def from_json(cls, data: Mapping) -> "LengthDistribution":
        """Create a length distribution from `to_json` output."""
        return cls(n=int(data["n"]), mass={int(k): float(p) for k, p in data["mass"]})


def total_variation(a: LengthDistribution, b: LengthDistribution) -> float:
    """Return the total variation distance between two length distributions."""
    keys = set(a.mass) | set(b.mass)
    return 0.5 * math.fsum(abs(a.mass.get(k, 0.0) - b.mass.get(k, 0.0)) for k in keys)


def length_distribution(code: RankedCode, P: Dist) -> LengthDistribution:
    """
    Return the exact length distribution of a code under P at type granularity.

    Each block is split at the dyadic rank boundaries [2^l, 2^(l+1)) with exact
    integer arithmetic. The masses are accumulated in the log domain.

    Parameters
    ----------
    code : RankedCode
        Code covering every type with positive probability.
    P : Dist
        Source law.

    Returns
    -------
    LengthDistribution
        Lengths including the header bits.

    Raises
    ------
    CoverageError
        If a type with positive probability is not fully assigned.
    """
    code.check_coverage(P)
    seq_log2 = sequence_log2_probs(code.counts, P)
    buckets: dict[int, list[float]] = defaultdict(list)
    for block, q in enumerate(seq_log2.tolist()):
        if q == -math.inf:
            continue
        for length, count in length_counts(
            code.starts[block], code.sizes[block], code.strides[block]
        ):
            buckets[length + code.header_bits].append(scaled_probability(count, q))
    mass = {k: math.fsum(values) for k, values in buckets.items()}
    return LengthDistribution(n=code.n, mass=mass)


def epsilon_bits(ld: LengthDistribution, eps: float) -> int:
    """
    Return the minimum integer k >= 0 with P(length > k) <= eps.

    The comparison allows the relative slack `EPS_SLACK`.
    """
    threshold = eps_threshold(eps)
    if ld.tail(0) <= threshold:
        return 0
    for length in ld.lengths:
        if ld.tail(length) <= threshold:
            return length
    return ld.max_length


def epsilon_rate(ld: LengthDistribution, eps: float, n: int | None = None) -> float:
    """Return the ε-rate k/n in bits per symbol."""
    return epsilon_bits(ld, eps) / (ld.n if n is None else n)


def optimal_code(P: Dist, n: int) -> RankedCode:
    """
    Return the non-universal optimal code for P.

    Types are sorted by descending per-sequence probability, ties keep the
    canonical type order.
    """
    table = type_table(n, P.m)
    order = np.argsort(-sequence_log2_probs(table, P), kind="stable")
    return RankedCode.dense(n, P.alphabet, table[order], name="optimal")


@dataclass(frozen=True)
class SequenceAssignment:
    """
    Explicit rank of every sequence under a code.

    Attributes
    ----------
    sequences : numpy.ndarray
        All m^n sequences as symbol indices, lexicographic order, shape (m^n, n).
    ranks : numpy.ndarray
        Rank per sequence, 0 for unassigned sequences.
    partition : numpy.ndarray
        Rank space per sequence, -1 for unassigned sequences.
    lengths : numpy.ndarray
        Codeword length including the header, -1 for unassigned sequences.
    """

    sequences: np.ndarray
    ranks: np.ndarray
    partition: np.ndarray
    lengths: np.ndarray


def all_sequences(n: int, m: int) -> np.ndarray:
    """Return all m^n sequences in lexicographic order."""
    if m**n > ORACLE_LIMIT:
        msg = f"{m}^{n} sequences exceed the oracle limit of {ORACLE_LIMIT}!"
        raise OracleSizeError(msg)
    sequences = list(itertools.product(range(m), repeat=n))
    return np.array(sequences, dtype=np.int64).reshape(-1, n)


def expand_sequences(code: RankedCode) -> SequenceAssignment:
    """
    Assign an explicit rank to every sequence, independently of any source law.

    Within a type, sequences are consumed in lexicographic order across the blocks
    of that type.

    Raises
    ------
    OracleSizeError
        If m^n exceeds `ORACLE_LIMIT`.
    ValueError
        If two sequences share a rank in the same rank space.
    """
    n, m = code.n, code.m
    sequences = all_sequences(n, m)
    seq_counts = np.stack([(sequences == x).sum(axis=1) for x in range(m)], axis=1)
    key = seq_counts @ ((n + 1) ** np.arange(m))
    order = np.argsort(key, kind="stable")
    groups: dict[int, np.ndarray] = {}
    boundaries = np.flatnonzero(np.diff(key[order])) + 1
    for members in np.split(order, boundaries):
        groups[int(key[members[0]])] = members

    ranks = np.zeros(len(sequences), dtype=np.int64)
    partition = np.full(len(sequences), -1, dtype=np.int64)
    cursor: dict[int, int] = defaultdict(int)
    block_keys = (code.counts @ ((n + 1) ** np.arange(m))).tolist()
    for block, type_key in enumerate(block_keys):
        members = groups.get(type_key, np.empty(0, dtype=np.int64))
        size = code.sizes[block]
        chosen = members[cursor[type_key] : cursor[type_key] + size]
        if len(chosen) != size:
            msg = f"Code '{code.name}' assigns more sequences than a type class holds!"
            raise CoverageError(msg)
        cursor[type_key] += size
        ranks[chosen] = code.starts[block] + code.strides[block] * np.arange(size)
        partition[chosen] = code.partition[block]

    assigned = ranks > 0
    pairs = np.stack([partition[assigned], ranks[assigned]], axis=1)
    if len(np.unique(pairs, axis=0)) != len(pairs):
        msg = f"Code '{code.name}' assigns one rank to two sequences!"
        raise ValueError(msg)

    lengths = np.full(len(sequences), -1, dtype=np.int64)
    exponents = np.frexp(ranks[assigned].astype(float))[1]
    lengths[assigned] = exponents - 1 + code.header_bits
    return SequenceAssignment(sequences, ranks, partition, lengths)


def sequence_probabilities(sequences: np.ndarray, P: Dist) -> np.ndarray:
    """Return the probability of each sequence (rows of symbol indices)."""
    return np.prod(P.probs[sequences], axis=1)


def brute_force_eval(
    code: RankedCode, P: Dist, n: int | None = None
) -> LengthDistribution:
    """
    Return the length distribution by materialising every sequence.

    Raises
    ------
    OracleSizeError
        If m^n exceeds `ORACLE_LIMIT`.
    CoverageError
        If a sequence with positive probability has no rank.
    """
    if n is not None and n != code.n:
        msg = f"Code '{code.name}' is for n={code.n}, not n={n}!"
        raise ValueError(msg)
    assignment = expand_sequences(code)
    probs = sequence_probabilities(assignment.sequences, P)
    missing = (assignment.ranks == 0) & (probs > 0)
    if np.any(missing):
        sequence = assignment.sequences[np.argmax(missing)]
        msg = f"Code '{code.name}' does not assign sequence {tuple(sequence.tolist())}!"
        raise CoverageError(msg)
    mass = {
        int(length): math.fsum(probs[assignment.lengths == length].tolist())
        for length in np.unique(assignment.lengths[assignment.ranks > 0])
    }
    return LengthDistribution(n=code.n, mass=mass)


def dyadic_log2_ranks(max_bits: int) -> np.ndarray:
    """Return log2(2^(j+1) - 1) for j = 0, ..., max_bits."""
    exponents = np.arange(1, max_bits + 2, dtype=float)
    return exponents + np.log1p(-np.exp2(-exponents)) / LN2


def max_bits_for(n: int, m: int) -> int:
    """Return an upper bound on the codeword length of any n-sequence code."""
    return math.ceil(n * math.log2(m)) + 1 if m > 1 else 1


class DyadicTailTable:
    """
    Tail probabilities of one dense rank space, evaluated at dyadic ranks.

    Blocks are given in rank order by their log2 size and the log2 probability of
    each of their sequences. Cumulative rank boundaries are kept in the log domain,
    so rank spaces with far more than 2^1024 ranks are handled.

    Parameters
    ----------
    log2_sizes : numpy.ndarray
        log2 of the block sizes in rank order.
    seq_log2_probs : numpy.ndarray
        log2 probability of one sequence per block.
    """

    def __init__(self, log2_sizes: np.ndarray, seq_log2_probs: np.ndarray) -> None:
        self.log2_sizes = np.asarray(log2_sizes, dtype=float)
        self.seq_log2_probs = np.asarray(seq_log2_probs, dtype=float)
        self.log2_ends = np.logaddexp2.accumulate(self.log2_sizes)
        masses = np.exp2(self.log2_sizes + self.seq_log2_probs)
        suffix = np.cumsum(masses[::-1])[::-1]
        self.after = np.append(suffix[1:], 0.0)
        self.total_mass = float(suffix[0]) if suffix.size else 0.0

    def __len__(self) -> int:
        return self.log2_sizes.size

    def tails(self, log2_ranks: np.ndarray) -> np.ndarray:
        """Return the probability of all ranks above each given rank."""
        log2_ranks = np.asarray(log2_ranks, dtype=float)
        if len(self) == 0:
            return np.zeros_like(log2_ranks)
        idx = np.searchsorted(self.log2_ends, log2_ranks, side="left")
        beyond = idx >= len(self)
        idx = np.minimum(idx, len(self) - 1)
        ends = self.log2_ends[idx]
        with np.errstate(over="ignore", invalid="ignore"):
            partial = np.exp2(ends + self.seq_log2_probs[idx]) * -np.expm1(
                (log2_ranks - ends) * LN2
            )
        partial = np.where(np.isfinite(partial), np.maximum(partial, 0.0), 0.0)
        return np.where(beyond, 0.0, self.after[idx] + partial)


def fast_epsilon_bits(
    tables: Sequence[DyadicTailTable], eps: float, header_bits: int, max_bits: int
) -> int:
    """
    Return the ε-bit count of a code made of independent dense rank spaces.

    Parameters
    ----------
    tables : sequence of DyadicTailTable
        One table per rank space.
    eps : float
        Error probability in (0, 1).
    header_bits : int
        Bits added to every codeword.
    max_bits : int
        Upper bound on the payload length.

    Returns
    -------
    int
        header_bits + min{j : P(payload length > j) <= eps}.
    """
    threshold = eps_threshold(eps)
    log2_ranks = dyadic_log2_ranks(max_bits)
    tails = np.zeros_like(log2_ranks)
    for table in tables:
        tails += table.tails(log2_ranks)
    passing = np.flatnonzero(tails <= threshold)
    payload = int(passing[0]) if passing.size else max_bits + 1
    return header_bits + payload


def optimal_tail_table(P: Dist, n: int) -> DyadicTailTable:
    """Return the log-domain tail table of the optimal code."""
    table = type_table(n, P.m)
    seq_log2 = sequence_log2_probs(table, P)
    keep = np.isfinite(seq_log2)
    order = np.argsort(-seq_log2[keep], kind="stable")
    return DyadicTailTable(log2_type_sizes(n, P.m)[keep][order], seq_log2[keep][order])


def optimal_rate_bits(P: Dist, n: int, eps: float) -> int:
    """
    Return n R*(n, eps, P), the ε-bit count of the optimal code.

    Exact big-natural evaluation is used up to `EXACT_TYPE_LIMIT` types, the
    log-domain tail table beyond.
    """
    if num_types(n, P.m) <= EXACT_TYPE_LIMIT:
        return epsilon_bits(length_distribution(optimal_code(P, n), P), eps)
    logger.debug(f"optimal code at n={n}: log-domain evaluation")
    return fast_epsilon_bits([optimal_tail_table(P, n)], eps, 0, max_bits_for(n, P.m))
