"""
Module for the invariant suite run by `fvlab verify`.

Includes tools to:
- Check the type-class size sandwich, the oracle equivalence of type-level and
  sequence-level evaluation, and the Type Size formula identity.
- Check that the interleaved binary code needs at most one bit more than the
  optimal code, sequence by sequence for small n and per type for larger n.
- Check the code/guesser identities and the Kraft LP closed form.
- Check the Gaussian approximations of the empirical entropy and of the log
  type-class size.

Every check returns a `CheckResult` and logs it as a PASS or FAIL line.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from fvlab.alphabet import (
    Alphabet,
    Dist,
    num_types,
    sample_distributions,
    sandwich_violations,
    scalar_functionals,
    type_table,
)
from fvlab.asymptotics import entropy_cdf_check, q_inv, type_size_cdf_deviation
from fvlab.coding import (
    ORACLE_LIMIT,
    LengthDistribution,
    RankedCode,
    brute_force_eval,
    epsilon_bits,
    length_distribution,
    optimal_code,
    optimal_rate_bits,
    total_variation,
)
from fvlab.guessing import (
    GuessingFunction,
    code_to_guesser,
    flatten_code,
    guesser_to_code,
    guessing_tail,
)
from fvlab.kraft import (
    enumerate_profiles,
    kraft_lp_bruteforce,
    kraft_lp_linprog,
    kraft_lp_optimal,
    kraft_sum,
)
from fvlab.logging_tools import log_check, logger, timed
from fvlab.universal import (
    binary_interleave_code,
    interleave_sequences,
    one_bit_gap,
    ranked_code,
    two_stage_ranked_code,
    type_size_ranked_code,
    type_size_solution,
)

EPS_GRID = (0.01, 0.05, 0.1, 0.2, 0.5)
BINARY_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))

# Accepted total variation between type-level and sequence-level evaluation
ORACLE_TOLERANCE = 1e-9

# Accepted disagreement of the Kraft LP solvers with the closed form
KRAFT_TOLERANCE = 1e-9
LINPROG_TOLERANCE = 1e-7

# Bound on sqrt(n) times the deviation of the log type-class size tail
TYPE_SIZE_CDF_CONSTANT = 10.0

# Details kept per failed check
MAX_DETAILS = 10


@dataclass
class CheckResult:
    """
    Outcome of one invariant check.

    Attributes
    ----------
    name : str
        Check name.
    checked : int
        Number of evaluated cases.
    violations : int
        Number of failed cases.
    details : list of str
        Descriptions of the first failures.
    """

    name: str
    checked: int = 0
    violations: int = 0
    details: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Whether no case failed."""
        return self.violations == 0

    def record(self, ok: bool, detail: str = "") -> None:
        """Count one case and keep a description if it failed."""
        self.checked += 1
        if not ok:
            self.fail(detail)

    def fail(self, detail: str) -> None:
        """Count a violation of an already counted case."""
        self.violations += 1
        if len(self.details) < MAX_DETAILS:
            self.details.append(detail)

    def as_row(self) -> dict:
        """Return the report row of the check."""
        return {
            "check": self.name,
            "checked": self.checked,
            "violations": self.violations,
            "passed": self.passed,
        }

    def log(self) -> None:
        """Log the outcome, with failure details at error level."""
        summary = f"{self.checked} cases, {self.violations} violations"
        log_check(self.name, self.passed, summary)
        for detail in self.details:
            logger.error(f"{self.name}: {detail}")


def _sources(alphabet_sizes: Iterable[int], count: int) -> list[Dist]:
    return [P for m in alphabet_sizes for P in sample_distributions(m, count)]


def full_codes(n: int, P: Dist) -> dict[str, RankedCode]:
    """Return every applicable code for P, each covering all sequences."""
    alphabet = P.alphabet
    codes = {
        "optimal": optimal_code(P, n),
        "type-size": type_size_ranked_code(n, alphabet),
        "2s-fv": two_stage_ranked_code("FV", n, alphabet),
        "2s-ff": two_stage_ranked_code("FF", n, alphabet),
    }
    if P.m == 2:
        codes["interleave"] = binary_interleave_code(n, alphabet)
    return codes


def oracle_max_n(alphabet_sizes: Iterable[int] = (2, 3)) -> int:
    """Return the largest n whose m^n sequences stay within `ORACLE_LIMIT`."""
    m = max(alphabet_sizes)
    n = 1
    while m ** (n + 1) <= ORACLE_LIMIT:
        n += 1
    return n


def check_sandwich(
    max_n: int = 100, alphabet_sizes: Sequence[int] = (2, 3, 4)
) -> CheckResult:
    """Check n f(t) + C-(m) <= log2 |T_t| <= n f(t) for every type."""
    result = CheckResult("type-size sandwich")
    with timed("sandwich check"):
        for m in alphabet_sizes:
            for n in range(1, max_n + 1):
                result.checked += num_types(n, m)
                for t in sandwich_violations(n, m):
                    result.fail(f"n={n}, m={m}: type {t.counts}")
    return result


def check_oracle(
    max_n: int = 8,
    alphabet_sizes: Sequence[int] = (2, 3),
    count: int = 20,
) -> CheckResult:
    """Check type-level length distributions against sequence enumeration."""
    result = CheckResult("oracle equivalence")
    with timed("oracle check"):
        for P in _sources(alphabet_sizes, count):
            for n in range(1, max_n + 1):
                for name, code in full_codes(n, P).items():
                    candidates = [code]
                    if name.startswith("2s") and len(P.support) < P.m:
                        candidates.append(ranked_code(name, n, P))
                    for candidate in candidates:
                        fast = length_distribution(candidate, P)
                        slow = brute_force_eval(candidate, P)
                        distance = total_variation(fast, slow)
                        result.record(
                            distance <= ORACLE_TOLERANCE,
                            f"{name}, n={n}, P={P}: TV={distance:.3g}",
                        )
    return result


def check_type_size_identity(
    max_n: int = 8,
    alphabet_sizes: Sequence[int] = (2, 3),
    count: int = 20,
    eps_values: Sequence[float] = EPS_GRID,
) -> CheckResult:
    """Check that the Type Size formula gives the ε-bits of the explicit code."""
    result = CheckResult("type-size formula identity")
    for P in _sources(alphabet_sizes, count):
        for n in range(1, max_n + 1):
            ld = length_distribution(type_size_ranked_code(n, P.alphabet), P)
            for eps in eps_values:
                formula = type_size_solution(n, P.alphabet, P, eps).bits
                code = epsilon_bits(ld, eps)
                result.record(
                    formula == code,
                    f"n={n}, P={P}, eps={eps}: {formula} != {code}",
                )
    return result


def _interleaved_lengths(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the number of B's and the codeword length of each interleaved rank."""
    order = interleave_sequences(n)
    b_counts = np.array([sum(seq) for seq in order], dtype=np.int64)
    lengths = np.frexp(np.arange(1, len(order) + 1, dtype=float))[1] - 1
    return b_counts, lengths


def _sequence_length_distribution(
    n: int, b_counts: np.ndarray, lengths: np.ndarray, P: Dist
) -> LengthDistribution:
    probs = P.probs[0] ** (n - b_counts) * P.probs[1] ** b_counts
    mass = {
        int(k): math.fsum(probs[lengths == k].tolist()) for k in np.unique(lengths)
    }
    return LengthDistribution(n=n, mass=mass)


def check_one_bit_sequences(
    max_n: int = 14,
    p_values: Sequence[float] = BINARY_GRID,
    eps_values: Sequence[float] = EPS_GRID,
) -> CheckResult:
    """
    Check nR <= nR* + 1 for the interleaved order built sequence by sequence.

    The sequence-level length distribution must also match the type-level code.
    """
    result = CheckResult("one extra bit (sequences)")
    for n in range(1, max_n + 1):
        b_counts, lengths = _interleaved_lengths(n)
        code = binary_interleave_code(n)
        for p in p_values:
            P = Dist.from_values([p, 1.0 - p])
            ld = _sequence_length_distribution(n, b_counts, lengths, P)
            distance = total_variation(ld, length_distribution(code, P))
            result.record(
                distance <= ORACLE_TOLERANCE,
                f"n={n}, P(A)={p}: TV to the type-level code {distance:.3g}",
            )
            for eps in eps_values:
                bits = epsilon_bits(ld, eps)
                optimal = optimal_rate_bits(P, n, eps)
                result.record(
                    bits <= optimal + 1,
                    f"n={n}, P(A)={p}, eps={eps}: {bits} > {optimal} + 1",
                )
    return result


def check_one_bit_types(
    low: int = 15,
    high: int = 200,
    p_values: Sequence[float] = BINARY_GRID,
    eps_values: Sequence[float] = EPS_GRID,
) -> CheckResult:
    """Check nR <= nR* + 1 for the type-level interleaved code."""
    result = CheckResult("one extra bit (types)")
    with timed("type-level interleave check"):
        for n in range(low, high + 1):
            for p in p_values:
                P = Dist.from_values([p, 1.0 - p])
                for eps in eps_values:
                    bits, optimal = one_bit_gap(n, P, eps)
                    result.record(
                        bits <= optimal + 1,
                        f"n={n}, P(A)={p}, eps={eps}: {bits} > {optimal} + 1",
                    )
    return result


def _guessers(n: int, P: Dist) -> dict[str, GuessingFunction]:
    alphabet = P.alphabet
    order = np.arange(len(type_table(n, P.m)))
    type_size = type_size_ranked_code(n, alphabet)
    return {
        "probability order": code_to_guesser(optimal_code(P, n)),
        "canonical order": GuessingFunction.from_type_order(n, alphabet, order),
        "reversed order": GuessingFunction.from_type_order(n, alphabet, order[::-1]),
        "flat type-size": code_to_guesser(flatten_code(type_size)),
    }


def check_guessing(
    max_n: int = 8,
    alphabet_sizes: Sequence[int] = (2, 3),
    count: int = 20,
    eps_values: Sequence[float] = EPS_GRID,
) -> CheckResult:
    """
    Check the correspondence between codes and guessing functions.

    - A guesser and its induced code satisfy floor(log2 M) = nR exactly.
    - A code and its induced guesser satisfy floor(log2 M) <= nR.
    - The guesser of the flattened Type Size code needs at most 2^m M* guesses.
    """
    result = CheckResult("guessing identities")
    for P in _sources(alphabet_sizes, count):
        for n in range(1, max_n + 1):
            guessers = _guessers(n, P)
            for label, G in guessers.items():
                ld = length_distribution(guesser_to_code(G), P)
                for eps in eps_values:
                    M = guessing_tail(G, P, eps)
                    bits = epsilon_bits(ld, eps)
                    result.record(
                        M.bit_length() - 1 == bits,
                        f"{label}, n={n}, P={P}, eps={eps}: M={M}, nR={bits}",
                    )

            for name, code in full_codes(n, P).items():
                G = code_to_guesser(flatten_code(code))
                ld = length_distribution(code, P)
                for eps in eps_values:
                    M = guessing_tail(G, P, eps)
                    bits = epsilon_bits(ld, eps)
                    result.record(
                        M.bit_length() - 1 <= bits,
                        f"guesser of {name}, n={n}, P={P}, eps={eps}: "
                        f"M={M}, nR={bits}",
                    )

            for eps in eps_values:
                M = guessing_tail(guessers["flat type-size"], P, eps)
                M_star = type_size_solution(n, P.alphabet, P, eps).M_star
                result.record(
                    M <= 2**P.m * M_star,
                    f"flat type-size, n={n}, P={P}, eps={eps}: "
                    f"M={M} > 2^{P.m} * {M_star}",
                )
    return result


def check_kraft(
    count: int = 100, max_n: int = 8, alphabet_sizes: Sequence[int] = (2, 3)
) -> CheckResult:
    """Check the Kraft LP closed form and the Kraft sum of the FF Two-Stage code."""
    result = CheckResult("Kraft LP")
    for profile in enumerate_profiles(count):
        closed = float(kraft_lp_optimal(profile))
        brute = kraft_lp_bruteforce(profile)
        highs = kraft_lp_linprog(profile)
        result.record(
            abs(closed - brute) <= KRAFT_TOLERANCE
            and abs(closed - highs) <= LINPROG_TOLERANCE,
            f"k={profile.k}: closed {closed}, vertices {brute}, HiGHS {highs}",
        )
    for m in alphabet_sizes:
        for n in range(1, max_n + 1):
            total = kraft_sum(two_stage_ranked_code("FF", n, Alphabet(m)))
            result.record(total <= 1, f"2s-ff, n={n}, m={m}: sum {total}")
    return result


def check_entropy_cdf(
    sources: Sequence[Sequence[float]] = ((0.3, 0.7), (0.25, 0.35, 0.4)),
    deltas: Sequence[float] = (-3.0, -1.0, 0.0, 1.0, 3.0),
    ns: Sequence[int] = (50, 200, 1000),
) -> CheckResult:
    """Check |P(H(t) >= H + sqrt(V/n) delta) - Q(delta)| <= B / sqrt(n)."""
    result = CheckResult("empirical entropy bound")
    with timed("empirical entropy check"):
        for probs in sources:
            P = Dist.from_values(probs)
            for n in ns:
                for delta in deltas:
                    check = entropy_cdf_check(P, n, delta)
                    result.record(
                        check.holds,
                        f"P={P}, n={n}, delta={delta}: "
                        f"{check.deviation:.3g} > {check.bound:.3g}",
                    )
    return result


def check_type_size_cdf(
    sources: Sequence[Sequence[float]] = ((0.3, 0.7), (0.2, 0.3, 0.5)),
    quantiles: Sequence[float] = (0.05, 0.25, 0.5, 0.75, 0.95),
    ns: Sequence[int] = (50, 200, 800),
) -> CheckResult:
    """
    Check that sqrt(n) times the log type-class size deviation stays bounded.

    The levels gamma are placed at Gaussian quantiles of the limit law, so every
    n covers the same part of the distribution.
    """
    result = CheckResult("log type-class size bound")
    with timed("log type-class size check"):
        for probs in sources:
            P = Dist.from_values(probs)
            H, V = scalar_functionals(P)
            shift = (1 - len(P.support)) / 2
            for n in ns:
                for quantile in quantiles:
                    gamma = (
                        n * H
                        + shift * math.log2(n)
                        + math.sqrt(n * V) * q_inv(quantile)
                    )
                    scaled = math.sqrt(n) * type_size_cdf_deviation(P, n, gamma)
                    result.record(
                        scaled <= TYPE_SIZE_CDF_CONSTANT,
                        f"P={P}, n={n}, gamma={gamma:.4g}: sqrt(n) deviation "
                        f"{scaled:.3g}",
                    )
    return result


def run_suite(
    max_n: int = 8, sandwich_n: int = 100, interleave_n: int = 200
) -> list[CheckResult]:
    """
    Run every invariant check and log the outcomes.

    Parameters
    ----------
    max_n : int, optional
        Largest n of the oracle-scale checks (m^n sequences are enumerated),
        capped at `oracle_max_n()`.
    sandwich_n : int, optional
        Largest n of the type-class size sandwich.
    interleave_n : int, optional
        Largest n of the type-level interleaving check, which starts above the
        sequence-level range.

    Returns
    -------
    list of CheckResult
        One result per check.
    """
    limit = oracle_max_n()
    if max_n > limit:
        logger.warning(
            f"max_n={max_n} exceeds the oracle limit of {ORACLE_LIMIT} sequences, "
            f"the oracle-scale checks stop at n={limit}"
        )
        max_n = limit
    sequence_n = min(14, interleave_n)
    checks = [
        lambda: check_sandwich(sandwich_n),
        lambda: check_oracle(max_n),
        lambda: check_type_size_identity(max_n),
        lambda: check_one_bit_sequences(sequence_n),
        lambda: check_one_bit_types(sequence_n + 1, interleave_n),
        lambda: check_guessing(max_n),
        lambda: check_kraft(max_n=max_n),
        lambda: check_entropy_cdf(),
        lambda: check_type_size_cdf(),
    ]
    results = []
    for check in checks:
        result = check()
        result.log()
        results.append(result)
    return results
