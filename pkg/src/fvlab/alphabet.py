"""
Module for the exact combinatorics of types.

Includes tools to:
- Describe alphabets, distributions and types (`Alphabet`, `Dist`, `TypeVector`).
- Enumerate all n-types, either as a stream or as a vectorised table.
- Compute exact type-class sizes (big naturals) and their log-gamma approximations.
- Evaluate entropy, varentropy, relative entropy and per-sequence log-probabilities.
- Evaluate the type-class size sandwich `n f(t) + C- <= log|T_t| <= n f(t)`.

All probabilities are carried in the log2 domain, exact counts as Python integers.
The canonical type order is descending lexicographic on counts, e.g. (2,0), (1,1),
(0,2), and every tie-break in the package refers to it.
"""

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from functools import lru_cache
from itertools import accumulate
from operator import mul

import numpy as np
from scipy.special import entr, gammaln
from scipy.stats import qmc

LN2 = math.log(2.0)

# Slack for float evaluations of the type-class size sandwich
SANDWICH_SLACK = 1e-9


class InvalidDistributionError(ValueError):
    """Raised when probabilities are negative, not normalised or have empty support."""


class InvalidTypeError(ValueError):
    """Raised when a count vector is not a valid type (negative counts, n = 0)."""


@dataclass(frozen=True)
class Alphabet:
    """
    Finite source alphabet.

    Attributes
    ----------
    size : int
        Number of symbols m.
    labels : tuple of str
        Distinct symbol names, defaults to "x0", ..., "x{m-1}".
    """

    size: int
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Fill in default labels and validate."""
        if self.size < 1:
            msg = f"Alphabet size must be positive, got {self.size}!"
            raise ValueError(msg)
        if not self.labels:
            object.__setattr__(
                self, "labels", tuple(f"x{x}" for x in range(self.size))
            )
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) != self.size or len(set(labels)) != self.size:
            msg = f"Need {self.size} distinct labels, got {labels}!"
            raise ValueError(msg)

    @classmethod
    def binary(cls) -> "Alphabet":
        """Return the binary alphabet {A, B}."""
        return cls(2, ("A", "B"))

    def __len__(self) -> int:
        return self.size

    def format_sequence(self, sequence: Sequence[int]) -> str:
        """Return a sequence of symbol indices as a string of labels."""
        return "".join(self.labels[x] for x in sequence)


@dataclass(frozen=True, eq=False)
class Dist:
    """
    Probability vector over a finite alphabet (the source law P).

    Attributes
    ----------
    probs : numpy.ndarray
        Read-only vector of m nonnegative probabilities summing to one within 1e-12.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        """Validate and freeze the probability vector."""
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            msg = "A distribution needs a non-empty one-dimensional probability vector!"
            raise InvalidDistributionError(msg)
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            msg = f"Probabilities must be finite and nonnegative, got {probs}!"
            raise InvalidDistributionError(msg)
        total = math.fsum(probs.tolist())
        if abs(total - 1.0) > 1e-12:
            msg = f"Probabilities sum to {total!r} instead of 1!"
            raise InvalidDistributionError(msg)
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_values(
        cls, values: Sequence[float], tolerance: float = 1e-12
    ) -> "Dist":
        """
        Create a distribution, accepting a total within `tolerance` of one.

        The values are renormalised, so the result sums to one within 1e-12.

        Parameters
        ----------
        values : sequence of float
            Unnormalised probabilities.
        tolerance : float, optional
            Accepted deviation of the total from one.

        Returns
        -------
        Dist
            The normalised distribution.

        Raises
        ------
        InvalidDistributionError
            If a value is negative or the total is off by more than `tolerance`.
        """
        probs = np.array(values, dtype=float)
        if probs.ndim != 1 or probs.size == 0 or np.any(probs < 0):
            msg = f"Invalid probability values {values}!"
            raise InvalidDistributionError(msg)
        total = math.fsum(probs.tolist())
        if abs(total - 1.0) > tolerance:
            msg = f"Probabilities sum to {total!r}, allowed deviation is {tolerance}!"
            raise InvalidDistributionError(msg)
        return cls(probs / total)

    @classmethod
    def parse(cls, text: str, tolerance: float = 1e-9) -> "Dist":
        """Parse a comma separated list of probabilities, e.g. "0.5,0.3,0.2"."""
        try:
            values = [float(item) for item in text.split(",") if item.strip()]
        except ValueError as err:
            msg = f"Cannot parse distribution '{text}': {err}"
            raise InvalidDistributionError(msg) from err
        return cls.from_values(values, tolerance=tolerance)

    @classmethod
    def uniform(cls, m: int) -> "Dist":
        """Return the uniform distribution on m symbols."""
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def point_mass(cls, m: int, x: int = 0) -> "Dist":
        """Return the distribution concentrated on symbol x."""
        probs = np.zeros(m)
        probs[x] = 1.0
        return cls(probs)

    @property
    def m(self) -> int:
        """Alphabet size."""
        return self.probs.size

    @property
    def alphabet(self) -> Alphabet:
        """Default alphabet of matching size."""
        return Alphabet(self.m)

    @property
    def support(self) -> tuple[int, ...]:
        """Indices of the symbols with positive probability."""
        return tuple(int(x) for x in np.flatnonzero(self.probs > 0))

    @property
    def log2(self) -> np.ndarray:
        """Elementwise log2 of the probabilities (-inf outside the support)."""
        with np.errstate(divide="ignore"):
            return np.log2(self.probs)

    def __len__(self) -> int:
        return self.m

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def __str__(self) -> str:
        return ",".join(f"{p:.12g}" for p in self.probs)


@dataclass(frozen=True)
class TypeVector:
    """
    Empirical type of a sequence, given as integer counts summing to n.

    Attributes
    ----------
    counts : tuple of int
        Nonnegative counts, one per alphabet symbol.
    """

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate the counts."""
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts or any(c < 0 for c in counts):
            msg = f"Counts must be nonnegative integers, got {counts}!"
            raise InvalidTypeError(msg)
        if sum(counts) == 0:
            msg = "A type needs n >= 1, got an all-zero count vector!"
            raise InvalidTypeError(msg)

    @classmethod
    def of(cls, *counts: int) -> "TypeVector":
        """Create a type from counts given as arguments."""
        return cls(tuple(counts))

    @property
    def n(self) -> int:
        """Sequence length."""
        return sum(self.counts)

    @property
    def m(self) -> int:
        """Alphabet size."""
        return len(self.counts)

    @property
    def support(self) -> tuple[int, ...]:
        """Indices of the symbols that occur."""
        return tuple(x for x, c in enumerate(self.counts) if c > 0)

    @property
    def frequencies(self) -> np.ndarray:
        """Relative frequencies t(x) = counts[x] / n."""
        return np.asarray(self.counts, dtype=float) / self.n

    def as_dist(self) -> Dist:
        """Return the type as a distribution."""
        return Dist(self.frequencies)


@dataclass(frozen=True)
class TypeClassStats:
    """
    Size and probability of one type class under a given source.

    Attributes
    ----------
    size_exact : int
        Exact multinomial coefficient |T_t|.
    log2_size : float
        log2 |T_t| from log-gamma.
    seq_log2_prob : float
        log2 of the probability of any single member sequence.
    class_log2_prob : float
        log2 of the probability of the whole class.
    """

    size_exact: int
    log2_size: float
    seq_log2_prob: float
    class_log2_prob: float


def num_types(n: int, m: int) -> int:
    """Return the number of n-types over m symbols, binom(n+m-1, m-1)."""
    return math.comb(n + m - 1, m - 1)


def _compositions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, m - 1):
            yield (first, *rest)


def enumerate_types(n: int, alphabet: Alphabet | int) -> Iterator[TypeVector]:
    """
    Stream all n-types in canonical (descending lexicographic) order.

    Parameters
    ----------
    n : int
        Sequence length, at least one.
    alphabet : Alphabet or int
        Alphabet or its size.

    Yields
    ------
    TypeVector
        Each count vector with sum n exactly once.

    Raises
    ------
    InvalidTypeError
        If n < 1.
    """
    if n < 1:
        msg = f"Types need n >= 1, got n = {n}!"
        raise InvalidTypeError(msg)
    m = alphabet if isinstance(alphabet, int) else alphabet.size
    for counts in _compositions(n, m):
        yield TypeVector(counts)


def _table(n: int, m: int) -> np.ndarray:
    if m == 1:
        return np.array([[n]], dtype=np.int32)
    if m == 2:
        first = np.arange(n, -1, -1, dtype=np.int32)
        return np.column_stack([first, n - first])
    blocks = []
    for first in range(n, -1, -1):
        rest = _table(n - first, m - 1)
        column = np.full((rest.shape[0], 1), first, dtype=np.int32)
        blocks.append(np.hstack([column, rest]))
    return np.concatenate(blocks)


@lru_cache(maxsize=2)
def type_table(n: int, m: int) -> np.ndarray:
    """
    Return all n-types over m symbols as a read-only integer array.

    Rows follow the canonical order of `enumerate_types`.

    Parameters
    ----------
    n : int
        Sequence length, at least one.
    m : int
        Alphabet size.

    Returns
    -------
    numpy.ndarray
        Array of shape (binom(n+m-1, m-1), m).
    """
    if n < 1:
        msg = f"Types need n >= 1, got n = {n}!"
        raise InvalidTypeError(msg)
    table = _table(n, m)
    table.flags.writeable = False
    return table


def type_class_size(t: TypeVector) -> int:
    """Return the exact multinomial coefficient n! / prod_x counts[x]!."""
    size, remaining = 1, t.n
    for c in t.counts:
        size *= math.comb(remaining, c)
        remaining -= c
    return size


def class_sizes(table: np.ndarray) -> list[int]:
    """Return the exact class sizes of all rows of a type table."""
    table = np.asarray(table)
    if table.shape[0] == 0:
        return []
    n = int(table[0].sum())
    factorials = list(accumulate(range(1, n + 1), mul, initial=1))
    return [
        factorials[n] // math.prod(factorials[c] for c in row)
        for row in table.tolist()
    ]


def log2_class_sizes(table: np.ndarray) -> np.ndarray:
    """
    Return log2 |T_t| for all rows of a type table via log-gamma.

    Rows are sorted before summation, so permuted types give identical floats.
    """
    table = np.asarray(table)
    n = table.sum(axis=1)
    ordered = np.sort(table, axis=1)
    return (gammaln(n + 1.0) - gammaln(ordered + 1.0).sum(axis=1)) / LN2


@lru_cache(maxsize=2)
def log2_type_sizes(n: int, m: int) -> np.ndarray:
    """Return `log2_class_sizes(type_table(n, m))`, cached."""
    sizes = log2_class_sizes(type_table(n, m))
    sizes.flags.writeable = False
    return sizes


def sequence_log2_probs(table: np.ndarray, P: Dist) -> np.ndarray:
    """
    Return log2 of the probability of one sequence of each type in the table.

    Symbols with equal probability are pooled before multiplying, so types that
    differ only by such a permutation receive identical floats.

    Parameters
    ----------
    table : numpy.ndarray
        Type table of shape (B, m).
    P : Dist
        Source law on m symbols.

    Returns
    -------
    numpy.ndarray
        Vector of length B, -inf for types that use a symbol outside the support.
    """
    table = np.asarray(table)
    values, group = np.unique(P.probs, return_inverse=True)
    indicator = np.zeros((P.m, values.size), dtype=np.int64)
    indicator[np.arange(P.m), group] = 1
    pooled = table.astype(np.int64) @ indicator
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pooled > 0, pooled * np.log2(values), 0.0)
    return terms.sum(axis=1)


def class_log2_masses(table: np.ndarray, P: Dist) -> np.ndarray:
    """Return log2 P(T_t) for all rows of a type table."""
    return log2_class_sizes(table) + sequence_log2_probs(table, P)


def type_entropies(table: np.ndarray) -> np.ndarray:
    """Return the empirical entropies H(t) in bits for all rows of a type table."""
    table = np.asarray(table, dtype=float)
    freqs = table / table.sum(axis=1, keepdims=True)
    return entr(freqs).sum(axis=1) / LN2


def _frequencies(t: "Dist | TypeVector | Sequence[float]") -> np.ndarray:
    if isinstance(t, Dist):
        return t.probs
    if isinstance(t, TypeVector):
        return t.frequencies
    return np.asarray(t, dtype=float)


def scalar_functionals(P: "Dist | TypeVector") -> tuple[float, float]:
    """
    Return entropy and varentropy of a distribution or of a type's frequencies.

    Parameters
    ----------
    P : Dist or TypeVector
        Source law or empirical type.

    Returns
    -------
    tuple of float
        (H, V) in bits and bits squared, with 0 log 0 = 0.
    """
    probs = _frequencies(P)
    p = probs[probs > 0]
    info = -np.log2(p)
    H = math.fsum((p * info).tolist())
    V = math.fsum((p * (info - H) ** 2).tolist())
    return max(H, 0.0), max(V, 0.0)


def kl(t: "TypeVector | Dist | Sequence[float]", P: Dist) -> float:
    """
    Return the relative entropy D(t || P) in bits.

    Returns +inf if t puts mass on a symbol outside the support of P.
    """
    q = _frequencies(t)
    mask = q > 0
    if np.any(P.probs[mask] == 0):
        return math.inf
    value = math.fsum((q[mask] * np.log2(q[mask] / P.probs[mask])).tolist())
    return max(value, 0.0)


def sequence_log2_prob(t: TypeVector, P: Dist) -> float:
    """
    Return log2 of the probability of one sequence of type t.

    This equals -n (H(t) + D(t || P)), and -inf if t leaves the support of P.
    """
    if any(c > 0 and P.probs[x] == 0 for x, c in enumerate(t.counts)):
        return -math.inf
    log2p = P.log2
    return math.fsum(c * log2p[x] for x, c in enumerate(t.counts) if c > 0)


def type_class_stats(t: TypeVector, P: Dist) -> TypeClassStats:
    """Return exact and log-domain size and probability of the class of t."""
    log2_size = float(log2_class_sizes(np.asarray([t.counts]))[0])
    seq = sequence_log2_prob(t, P)
    return TypeClassStats(
        size_exact=type_class_size(t),
        log2_size=log2_size,
        seq_log2_prob=seq,
        class_log2_prob=log2_size + seq,
    )


def f_bound(t: TypeVector) -> float:
    """
    Return f(t) of the type-class size sandwich.

    f(t) = H(t) + (1-m)/(2n) log n + 1/(2n) sum_x min{log n, -log t(x)}, where a
    zero count contributes log n.
    """
    n, m = t.n, t.m
    log_n = math.log2(n)
    H = scalar_functionals(t)[0]
    terms = [
        log_n if c == 0 else min(log_n, -math.log2(c / n)) for c in t.counts
    ]
    return H + (1 - m) / (2 * n) * log_n + math.fsum(terms) / (2 * n)


def f_bounds(table: np.ndarray) -> np.ndarray:
    """Vectorised `f_bound` over the rows of a type table."""
    table = np.asarray(table)
    m = table.shape[1]
    n = float(table[0].sum())
    log_n = math.log2(n)
    with np.errstate(divide="ignore"):
        neg_log_t = -np.log2(table / n)
    terms = np.minimum(log_n, neg_log_t).sum(axis=1)
    return type_entropies(table) + (1 - m) / (2 * n) * log_n + terms / (2 * n)


def c_minus(m: int) -> float:
    """Return the sandwich constant C- = (1-m)/2 log(2 pi) - m / (12 ln 2)."""
    return (1 - m) / 2 * math.log2(2 * math.pi) - m / (12 * LN2)


def sandwich_violations(n: int, m: int) -> list[TypeVector]:
    """
    Return every n-type violating `n f(t) + C- <= log2|T_t| <= n f(t)`.

    The comparison allows `SANDWICH_SLACK` for float evaluation.
    """
    table = type_table(n, m)
    log_size = log2_type_sizes(n, m)
    upper = n * f_bounds(table)
    lower = upper + c_minus(m)
    bad = (log_size < lower - SANDWICH_SLACK) | (log_size > upper + SANDWICH_SLACK)
    return [TypeVector(tuple(row)) for row in table[bad].tolist()]


def sample_distributions(m: int, count: int) -> list[Dist]:
    """
    Return a deterministic family of `count` distributions on m symbols.

    The family starts with boundary laws (a point mass and, for m >= 3, a law with
    a zero entry) followed by interior laws from unscrambled Sobol points mapped to
    the simplex by sorted spacings.
    """
    if m == 1:
        return [Dist.point_mass(1)] * count
    boundary = [Dist.point_mass(m, 0)]
    if m >= 3:
        probs = np.zeros(m)
        probs[:2] = (0.6, 0.4)
        boundary.append(Dist(probs))
    boundary = boundary[:count]
    needed = count - len(boundary)
    if needed <= 0:
        return boundary

    exponent = max(1, math.ceil(math.log2(needed + 1)))
    points = qmc.Sobol(d=m - 1, scramble=False).random_base2(exponent)[1 : needed + 1]
    interior = []
    for point in points:
        cuts = np.concatenate([[0.0], np.sort(point), [1.0]])
        spacings = 0.9 * np.diff(cuts) + 0.1 / m
        interior.append(Dist(spacings / spacings.sum()))
    return boundary + interior
