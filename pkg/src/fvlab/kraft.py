"""
Module for the Kraft linear program of prefix codes.

Includes tools to:
- Solve max t s.t. sum_{j <= i} 2^(k_j - k_i) alpha_j >= t for all i,
  sum_i alpha_i <= 1, alpha >= 0 in closed form with exact fractions.
- Cross-check the closed form by vertex enumeration and by scipy's HiGHS solver.
- Compute the exact Kraft sum of a ranked code.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from fvlab.coding import RankedCode, length_counts


class InvalidProfileError(ValueError):
    """Raised for length profiles that are not strictly increasing."""


@dataclass(frozen=True)
class KraftProfile:
    """
    Strictly increasing codeword lengths k_0 < k_1 < ... < k_I.

    Attributes
    ----------
    k : tuple of int
        Nonnegative lengths with k_i - k_{i-1} >= 1.
    """

    k: tuple[int, ...]

    def __post_init__(self) -> None:
        """Check the profile."""
        object.__setattr__(self, "k", tuple(int(length) for length in self.k))
        if not self.k:
            msg = "A Kraft profile needs at least one length!"
            raise InvalidProfileError(msg)
        if self.k[0] < 0 or any(b - a < 1 for a, b in zip(self.k, self.k[1:])):
            msg = f"Lengths must be nonnegative and strictly increasing, got {self.k}!"
            raise InvalidProfileError(msg)

    @property
    def levels(self) -> int:
        """Number of lengths I + 1."""
        return len(self.k)

    def constraint_matrix(self) -> np.ndarray:
        """Return W with W[i, j] = 2^(k_j - k_i) for j <= i and 0 otherwise."""
        k = np.asarray(self.k, dtype=float)
        weights = np.exp2(k[None, :] - k[:, None])
        return np.tril(weights)


def kraft_lp_optimal(profile: KraftProfile) -> Fraction:
    """
    Return the optimal value t* = 1 / sum_i (1 - 2^(k_{i-1} - k_i)).

    With k_{-1} = -inf the first level contributes 1 to the sum.
    """
    total = Fraction(1)
    for previous, current in zip(profile.k, profile.k[1:]):
        total += 1 - Fraction(1, 2 ** (current - previous))
    return 1 / total


def kraft_lp_bruteforce(profile: KraftProfile) -> float:
    """
    Solve the Kraft LP by enumerating all vertices of its feasible polytope.

    Variables are (alpha_0, ..., alpha_I, t). Every choice of I + 2 constraints
    that are linearly independent is made active, and the best feasible solution
    is returned.
    """
    size = profile.levels
    W = profile.constraint_matrix()
    # Rows are constraints a x <= b
    rows = [np.append(-W[i], 1.0) for i in range(size)]
    bounds = [0.0] * size
    rows.append(np.append(np.ones(size), 0.0))
    bounds.append(1.0)
    for i in range(size):
        rows.append(-np.eye(size + 1)[i])
        bounds.append(0.0)
    A, b = np.array(rows), np.array(bounds)

    best = -np.inf
    for active in itertools.combinations(range(len(rows)), size + 1):
        system = A[list(active)]
        if np.linalg.matrix_rank(system) < size + 1:
            continue
        x = np.linalg.solve(system, b[list(active)])
        if np.all(A @ x <= b + 1e-9):
            best = max(best, float(x[-1]))
    return best


def kraft_lp_linprog(profile: KraftProfile) -> float:
    """Solve the Kraft LP with scipy's HiGHS solver."""
    size = profile.levels
    W = profile.constraint_matrix()
    A_ub = np.vstack(
        [
            np.hstack([-W, np.ones((size, 1))]),
            np.append(np.ones(size), 0.0)[None, :],
        ]
    )
    b_ub = np.append(np.zeros(size), 1.0)
    cost = np.append(np.zeros(size), -1.0)
    result = linprog(
        cost,
        A_ub=A_ub,
        b_ub=b_ub,
        bounds=[(0, None)] * size + [(None, None)],
        method="highs",
    )
    if not result.success:
        msg = f"HiGHS failed on profile {profile.k}: {result.message}!"
        raise RuntimeError(msg)
    return float(-result.fun)


def enumerate_profiles(
    count: int, max_levels: int = 6, max_length: int = 20
) -> list[KraftProfile]:
    """
    Return a deterministic family of Kraft profiles.

    Profile number j has 1 + (j mod max_levels) lengths. Its start and its gaps of 1
    to 4 follow from j div max_levels, and lengths stop before exceeding max_length.
    """
    profiles = []
    for j in range(count):
        levels = 1 + j % max_levels
        seed = j // max_levels
        lengths = [seed % 5]
        for i in range(1, levels):
            gap = 1 + (seed * (i + 1) + i * i) % 4
            if lengths[-1] + gap > max_length:
                break
            lengths.append(lengths[-1] + gap)
        profiles.append(KraftProfile(tuple(lengths)))
    return profiles


def kraft_sum(code: RankedCode) -> Fraction:
    """Return the exact sum of 2^-length over all codewords, headers included."""
    total = Fraction(0)
    for block in range(code.num_blocks):
        for length, count in length_counts(
            code.starts[block], code.sizes[block], code.strides[block]
        ):
            total += Fraction(count, 2 ** (length + code.header_bits))
    return total

