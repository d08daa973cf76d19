"""
Module for universal fixed-to-variable codes.

Includes tools to:
- Compute Two-Stage rates with a fixed-length first stage (`two_stage_rate`) and
  build the corresponding explicit codes (`two_stage_ranked_code`).
- Build the Type Size code (support header, then ascending type-class size) and
  solve its rate formula exactly (`type_size_solution`).
- Build the binary interleaved code that is within one bit of the optimal code.
- Dispatch ε-bit counts by code name (`rate_bits`).
"""

import itertools
import math
from bisect import bisect_left, bisect_right
from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from fvlab.alphabet import (
    Alphabet,
    Dist,
    class_sizes,
    log2_type_sizes,
    num_types,
    sequence_log2_probs,
    type_table,
)
from fvlab.coding import (
    EXACT_TYPE_LIMIT,
    CodeShapeError,
    DyadicTailTable,
    RankedCode,
    compensated_suffix_sums,
    eps_threshold,
    epsilon_bits,
    fast_epsilon_bits,
    length_distribution,
    max_bits_for,
    optimal_code,
    optimal_rate_bits,
    scaled_probability,
)
from fvlab.logging_tools import logger

CODE_NAMES = ("optimal", "type-size", "2s-fv", "2s-ff", "interleave")

# Margin for comparing log2 class sizes against integer bit counts
LOG2_SIZE_MARGIN = 1e-9

TieRule = Literal["ordered", "proportional"]


@dataclass(frozen=True)
class TwoStageRate:
    """
    Bit counts of a Two-Stage code.

    Attributes
    ----------
    variant : str
        "FV" (variable-length second stage) or "FF" (fixed-length second stage).
    n : int
        Sequence length.
    s : int
        First-stage bits, ceil(log2 of the number of types on the support).
    k : int
        Second-stage bits.
    """

    variant: str
    n: int
    s: int
    k: int

    @property
    def bits(self) -> int:
        """Total bit count s + k."""
        return self.s + self.k

    @property
    def rate(self) -> float:
        """Rate (s + k) / n."""
        return self.bits / self.n


def _variant(variant: str) -> str:
    variant = variant.upper()
    if variant not in ("FV", "FF"):
        msg = f"Unknown Two-Stage variant '{variant}', choose FV or FF!"
        raise ValueError(msg)
    return variant


def first_stage_bits(n: int, support_size: int) -> int:
    """Return ceil(log2 binom(n + k - 1, k - 1)) for a support of size k."""
    return (num_types(n, support_size) - 1).bit_length()


def _smallest(predicate: Callable[[int], bool], high: int) -> int:
    """Return the smallest k in [0, high] with predicate(k), assuming monotonicity."""
    low = 0
    while low < high:
        middle = (low + high) // 2
        if predicate(middle):
            high = middle
        else:
            low = middle + 1
    return low


def _support_table(n: int, P: Dist) -> tuple[np.ndarray, Dist]:
    support = P.support
    restricted = Dist(P.probs[list(support)])
    return type_table(n, len(support)), restricted


def two_stage_rate(variant: str, n: int, P: Dist, eps: float) -> TwoStageRate:
    """
    Return the bit counts of the Two-Stage code for P.

    The FV second stage needs the smallest k with
    sum_t P(T_t) |1 - (2^(k+1) - 1) / |T_t||^+ <= eps, the FF second stage the
    smallest k with P(log2 |T_t| > k) <= eps.

    Parameters
    ----------
    variant : {"FV", "FF"}
        Second-stage variant.
    n : int
        Sequence length.
    P : Dist
        Source law.
    eps : float
        Error probability in (0, 1).

    Returns
    -------
    TwoStageRate
        First- and second-stage bits.
    """
    variant = _variant(variant)
    threshold = eps_threshold(eps)
    table, restricted = _support_table(n, P)
    s = first_stage_bits(n, restricted.m)
    seq_log2 = sequence_log2_probs(table, restricted)

    if table.shape[0] <= EXACT_TYPE_LIMIT:
        sizes = class_sizes(table)
        masses = [
            scaled_probability(size, q) for size, q in zip(sizes, seq_log2.tolist())
        ]
        high = max(sizes).bit_length()
        if variant == "FV":

            def passes(k: int) -> bool:
                ranks = (1 << (k + 1)) - 1
                excess = (
                    w * ((size - ranks) / size)
                    for w, size in zip(masses, sizes)
                    if size > ranks
                )
                return math.fsum(excess) <= threshold

        else:

            def passes(k: int) -> bool:
                cap = 1 << k
                above = (w for w, size in zip(masses, sizes) if size > cap)
                return math.fsum(above) <= threshold

    else:
        logger.debug(f"Two-Stage {variant} at n={n}: log-domain evaluation")
        log_sizes = log2_type_sizes(n, restricted.m)
        masses = np.exp2(log_sizes + seq_log2)
        high = math.ceil(float(log_sizes.max())) + 1
        if variant == "FV":

            def passes(k: int) -> bool:
                log2_ranks = math.log2((1 << (k + 1)) - 1)
                excess = -np.expm1((log2_ranks - log_sizes) * math.log(2.0))
                return float(np.sum(masses * np.maximum(excess, 0.0))) <= threshold

        else:

            def passes(k: int) -> bool:
                above = log_sizes > k + LOG2_SIZE_MARGIN
                return float(np.sum(masses[above])) <= threshold

    return TwoStageRate(variant=variant, n=n, s=s, k=_smallest(passes, high))


def two_stage_ranked_code(
    variant: str, n: int, alphabet: Alphabet, support: Sequence[int] | None = None
) -> RankedCode:
    """
    Return the explicit Two-Stage code over the types supported on `support`.

    Every type has its own rank space and the first stage is a header of
    `first_stage_bits(n, len(support))` bits. The FV second stage ranks the class
    densely from 1, the FF second stage uses the ranks 2^c, ..., 2^c + |T| - 1 with
    c = ceil(log2 |T|), which are exactly the strings of length c.
    """
    variant = _variant(variant)
    support = tuple(range(alphabet.size)) if support is None else tuple(support)
    sub = type_table(n, len(support))
    counts = np.zeros((sub.shape[0], alphabet.size), dtype=np.int64)
    counts[:, list(support)] = sub
    sizes = class_sizes(counts)
    if variant == "FV":
        starts = [1] * len(sizes)
    else:
        starts = [1 << (size - 1).bit_length() for size in sizes]
    return RankedCode(
        n=n,
        alphabet=alphabet,
        counts=counts,
        sizes=tuple(sizes),
        starts=tuple(starts),
        strides=(1,) * len(sizes),
        partition=tuple(range(len(sizes))),
        partition_keys=tuple(tuple(row) for row in counts.tolist()),
        header_bits=first_stage_bits(n, len(support)),
        name=f"2s-{variant.lower()}",
    )


def support_keys(m: int) -> list[tuple[int, ...]]:
    """Return all nonempty support sets, ordered by size, then lexicographically."""
    return [
        key
        for size in range(1, m + 1)
        for key in itertools.combinations(range(m), size)
    ]


def _support_key_of(row: Sequence[int]) -> tuple[int, ...]:
    return tuple(x for x, c in enumerate(row) if c > 0)


def type_size_ranked_code(n: int, alphabet: Alphabet) -> RankedCode:
    """
    Return the Type Size code.

    One rank space per support set, blocks ascending by class size with ties in
    canonical type order, and an alphabet-size header recording the support.
    """
    table = type_table(n, alphabet.size)
    keys = support_keys(alphabet.size)
    key_index = {key: i for i, key in enumerate(keys)}
    rows = table.tolist()
    sizes = class_sizes(table)
    partition = [key_index[_support_key_of(row)] for row in rows]
    order = sorted(range(len(rows)), key=lambda i: (partition[i], sizes[i], i))
    return RankedCode.dense(
        n,
        alphabet,
        table[order],
        sizes=[sizes[i] for i in order],
        partition=[partition[i] for i in order],
        partition_keys=keys,
        header_bits=alphabet.size,
        name="type-size",
    )


@dataclass(frozen=True)
class TypeSizeSolution:
    """
    Solution of the Type Size rate formula.

    Attributes
    ----------
    n : int
        Sequence length.
    m : int
        Alphabet size (the header length).
    bits : int
        m + floor(log2 M*).
    M_star : int or None
        Minimal rank budget per support set, None for log-domain solutions.
    tau_star : dict
        Class size at which M* is reached, per realised support set. None when the
        budget covers the whole support set.
    lambda_star : dict
        Fraction of the tie group of size tau* inside the budget, in [0, 1).
    tie_rule : str
        "ordered" or "proportional".
    """

    n: int
    m: int
    bits: int
    M_star: int | None
    tau_star: dict[Hashable, int | None]
    lambda_star: dict[Hashable, Fraction | None]
    tie_rule: str = "ordered"

    @property
    def rate(self) -> float:
        """Rate in bits per symbol."""
        return self.bits / self.n


class _SupportSegments:
    """Ascending size segments of one support set with prefix and suffix tables."""

    def __init__(self, sizes: list[int], masses: list[float]) -> None:
        self.sizes = sizes
        self.masses = masses
        self.ends = list(itertools.accumulate(sizes))
        self.after = compensated_suffix_sums(masses)[1:]

    @property
    def total(self) -> int:
        return self.ends[-1]

    def tail(self, budget: int) -> float:
        """Return P(rank > budget, support = this set)."""
        j = bisect_left(self.ends, budget)
        if j == len(self.ends):
            return 0.0
        share = (self.ends[j] - budget) / self.sizes[j]
        return self.after[j] + self.masses[j] * share


def _group_ties(sizes: list[int], masses: list[float]) -> tuple[list[int], list[float]]:
    group_sizes: list[int] = []
    group_masses: list[float] = []
    for size, values in itertools.groupby(zip(sizes, masses), key=lambda pair: pair[0]):
        pairs = list(values)
        group_sizes.append(size * len(pairs))
        group_masses.append(math.fsum(mass for _, mass in pairs))
    return group_sizes, group_masses


def _balance(sizes: list[int], budget: int) -> tuple[int | None, Fraction | None]:
    """Return (tau*, lambda*) of the budget within one support set."""
    tie_sizes = [size for size, _ in itertools.groupby(sizes)]
    tie_totals = [size * len(list(group)) for size, group in itertools.groupby(sizes)]
    ends = list(itertools.accumulate(tie_totals))
    g = bisect_right(ends, budget)
    if g == len(ends):
        return None, None
    below = ends[g - 1] if g else 0
    return tie_sizes[g], Fraction(budget - below, tie_totals[g])


def type_size_solution(
    n: int,
    alphabet: Alphabet,
    P: Dist,
    eps: float,
    tie_rule: TieRule = "ordered",
) -> TypeSizeSolution:
    """
    Solve the Type Size rate formula.

    M* is the smallest budget M with sum over support sets of
    P(support = X) eps(X, M) <= eps. With the "ordered" rule eps(X, M) follows the
    code's own tie order. With the "proportional" rule the budget is shared
    proportionally within a tie group, as in the balance equation
    sum_{|T|<tau} |T| + lambda sum_{|T|=tau} |T| = M.

    Parameters
    ----------
    n : int
        Sequence length.
    alphabet : Alphabet
        Source alphabet, its size is the header length.
    P : Dist
        Source law.
    eps : float
        Error probability in (0, 1).
    tie_rule : {"ordered", "proportional"}, optional
        Treatment of equal class sizes.

    Returns
    -------
    TypeSizeSolution
        Bits, M* and the balance point per realised support set.
    """
    threshold = eps_threshold(eps)
    if tie_rule not in ("ordered", "proportional"):
        msg = f"Unknown tie rule '{tie_rule}'!"
        raise ValueError(msg)
    if P.m != alphabet.size:
        msg = f"Distribution has {P.m} symbols, the alphabet {alphabet.size}!"
        raise ValueError(msg)

    m = alphabet.size
    if num_types(n, m) > EXACT_TYPE_LIMIT:
        return _type_size_solution_fast(n, P, eps, tie_rule)

    table = type_table(n, m)
    seq_log2 = sequence_log2_probs(table, P).tolist()
    sizes = class_sizes(table)
    by_support: dict[tuple[int, ...], list[int]] = {}
    for i, row in enumerate(table.tolist()):
        if seq_log2[i] > -math.inf:
            by_support.setdefault(_support_key_of(row), []).append(i)

    segments: dict[tuple[int, ...], _SupportSegments] = {}
    ordered_sizes: dict[tuple[int, ...], list[int]] = {}
    for key, members in by_support.items():
        members.sort(key=lambda i: (sizes[i], i))
        block_sizes = [sizes[i] for i in members]
        masses = [scaled_probability(sizes[i], seq_log2[i]) for i in members]
        if tie_rule == "proportional":
            segments[key] = _SupportSegments(*_group_ties(block_sizes, masses))
        else:
            segments[key] = _SupportSegments(block_sizes, masses)
        ordered_sizes[key] = block_sizes

    def passes(budget: int) -> bool:
        return math.fsum(part.tail(budget) for part in segments.values()) <= threshold

    high = max(part.total for part in segments.values())
    low = 1
    while low < high:
        middle = (low + high) // 2
        if passes(middle):
            high = middle
        else:
            low = middle + 1
    M_star = low

    tau_star: dict[Hashable, int | None] = {}
    lambda_star: dict[Hashable, Fraction | None] = {}
    for key in sorted(ordered_sizes, key=lambda k: (len(k), k)):
        tau_star[key], lambda_star[key] = _balance(ordered_sizes[key], M_star)

    return TypeSizeSolution(
        n=n,
        m=m,
        bits=m + M_star.bit_length() - 1,
        M_star=M_star,
        tau_star=tau_star,
        lambda_star=lambda_star,
        tie_rule=tie_rule,
    )


def _type_size_solution_fast(
    n: int, P: Dist, eps: float, tie_rule: TieRule
) -> TypeSizeSolution:
    logger.debug(f"Type Size code at n={n}: log-domain evaluation")
    m = P.m
    table = type_table(n, m)
    seq_log2 = sequence_log2_probs(table, P)
    log_sizes = log2_type_sizes(n, m)
    masks = (table > 0).astype(np.int64) @ (1 << np.arange(m))
    realised = np.isfinite(seq_log2)

    tables = []
    for mask in np.unique(masks[realised]):
        members = np.flatnonzero((masks == mask) & realised)
        order = members[np.argsort(log_sizes[members], kind="stable")]
        sizes, probs = log_sizes[order], seq_log2[order]
        if tie_rule == "proportional":
            sizes, probs = _group_ties_log2(sizes, probs)
        tables.append(DyadicTailTable(sizes, probs))

    bits = fast_epsilon_bits(tables, eps, m, max_bits_for(n, m))
    return TypeSizeSolution(
        n=n, m=m, bits=bits, M_star=None, tau_star={}, lambda_star={}, tie_rule=tie_rule
    )


def _group_ties_log2(
    log_sizes: np.ndarray, seq_log2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Merge runs of equal log2 sizes into single segments with averaged probability."""
    starts = np.flatnonzero(
        np.concatenate([[True], np.abs(np.diff(log_sizes)) > LOG2_SIZE_MARGIN])
    )
    group_log_sizes = np.logaddexp2.reduceat(log_sizes, starts)
    group_log_masses = np.logaddexp2.reduceat(log_sizes + seq_log2, starts)
    return group_log_sizes, group_log_masses - group_log_sizes


def binary_interleave_code(n: int, alphabet: Alphabet | None = None) -> RankedCode:
    """
    Return the binary code that alternates between the two descending orders.

    The descending-A order lists types by decreasing number of A's, the descending-B
    order is its reverse. Alternating between them places the types with a strict
    A majority at odd ranks and those with a strict B majority at even ranks, each
    side in its own order. For even n the balanced type follows contiguously.

    Raises
    ------
    CodeShapeError
        If the alphabet does not have two symbols.
    """
    alphabet = Alphabet.binary() if alphabet is None else alphabet
    if alphabet.size != 2:
        msg = f"The interleaved code needs two symbols, got {alphabet.size}!"
        raise CodeShapeError(msg)
    table = type_table(n, 2)
    sizes = class_sizes(table)
    counts, block_sizes, starts, strides = [], [], [], []

    offset = 0
    for row, size in zip(table.tolist(), sizes):
        if 2 * row[0] > n:
            counts.append(row)
            block_sizes.append(size)
            starts.append(2 * offset + 1)
            strides.append(2)
            offset += size
    majority = offset

    offset = 0
    for row, size in zip(reversed(table.tolist()), reversed(sizes)):
        if 2 * row[1] > n:
            counts.append(row)
            block_sizes.append(size)
            starts.append(2 * offset + 2)
            strides.append(2)
            offset += size

    if n % 2 == 0:
        counts.append([n // 2, n // 2])
        block_sizes.append(sizes[n // 2])
        starts.append(2 * majority + 1)
        strides.append(1)

    return RankedCode(
        n=n,
        alphabet=alphabet,
        counts=np.asarray(counts, dtype=np.int64).reshape(-1, 2),
        sizes=tuple(block_sizes),
        starts=tuple(starts),
        strides=tuple(strides),
        partition=(0,) * len(block_sizes),
        name="interleave",
    )


def interleave_sequences(n: int) -> list[tuple[int, ...]]:
    """
    Return all binary n-sequences in interleaved order, built sequence by sequence.

    Symbol 0 stands for A. Within a type the descending-A order is lexicographic.
    """
    descending_a = sorted(
        itertools.product((0, 1), repeat=n), key=lambda seq: (sum(seq), seq)
    )
    descending_b = descending_a[::-1]
    placed: set[tuple[int, ...]] = set()
    order: list[tuple[int, ...]] = []
    sources = (iter(descending_a), iter(descending_b))
    turn = 0
    while len(order) < len(descending_a):
        for seq in sources[turn]:
            if seq not in placed:
                placed.add(seq)
                order.append(seq)
                break
        turn = 1 - turn
    return order


def interleave_rate_bits(P: Dist, n: int, eps: float) -> int:
    """Return the ε-bit count of the interleaved code."""
    code = binary_interleave_code(n, P.alphabet)
    return epsilon_bits(length_distribution(code, P), eps)


def one_bit_gap(n: int, P: Dist, eps: float) -> tuple[int, int]:
    """
    Return (nR, nR*) for the interleaved and the optimal code.

    The interleaved code needs at most one bit more, nR <= nR* + 1.

    Raises
    ------
    CodeShapeError
        If the source is not binary.
    """
    if P.m != 2:
        msg = f"The interleaved code needs a binary source, got {P.m} symbols!"
        raise CodeShapeError(msg)
    return interleave_rate_bits(P, n, eps), optimal_rate_bits(P, n, eps)


def rate_bits(code_name: str, P: Dist, n: int, eps: float) -> int:
    """
    Return the ε-bit count n R(eps) of a named code.

    Parameters
    ----------
    code_name : str
        One of `CODE_NAMES`.
    P : Dist
        Source law.
    n : int
        Sequence length.
    eps : float
        Error probability in (0, 1).

    Returns
    -------
    int
        Bit count including headers.
    """
    match code_name:
        case "optimal":
            return optimal_rate_bits(P, n, eps)
        case "type-size":
            return type_size_solution(n, P.alphabet, P, eps).bits
        case "2s-fv":
            return two_stage_rate("FV", n, P, eps).bits
        case "2s-ff":
            return two_stage_rate("FF", n, P, eps).bits
        case "interleave":
            return interleave_rate_bits(P, n, eps)
        case _:
            msg = f"Unknown code '{code_name}', choose from {', '.join(CODE_NAMES)}!"
            raise ValueError(msg)


def ranked_code(code_name: str, n: int, P: Dist) -> RankedCode:
    """Return the explicit code of a given name for sequence length n."""
    match code_name:
        case "optimal":
            return optimal_code(P, n)
        case "type-size":
            return type_size_ranked_code(n, P.alphabet)
        case "2s-fv" | "2s-ff":
            return two_stage_ranked_code(code_name[-2:], n, P.alphabet, P.support)
        case "interleave":
            return binary_interleave_code(n, P.alphabet)
        case _:
            msg = f"Unknown code '{code_name}', choose from {', '.join(CODE_NAMES)}!"
            raise ValueError(msg)
