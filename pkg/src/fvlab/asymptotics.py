"""
Module for the Gaussian approximations of finite-blocklength rates.

Includes tools to:
- Evaluate the Gaussian tail Q and its inverse.
- Compute the exact finite-n distributions of the empirical entropy and of the
  log type-class size, and compare them with their Gaussian approximations.
- Predict rates H + sqrt(V/n) Q^-1(eps) + c log2(n)/n and fit c from exact rates.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from fvlab.alphabet import (
    Dist,
    log2_type_sizes,
    scalar_functionals,
    sequence_log2_probs,
    type_entropies,
    type_table,
)
from fvlab.logging_tools import logger, timed
from fvlab.universal import rate_bits

Variant = Literal["optimal", "type-size", "two-stage"]

# Third-order variant that governs each named code
VARIANT_OF_CODE: dict[str, Variant] = {
    "optimal": "optimal",
    "interleave": "optimal",
    "type-size": "type-size",
    "2s-fv": "two-stage",
    "2s-ff": "two-stage",
}

# Slack for the closed inequality H(t) >= threshold
THRESHOLD_SLACK = 1e-12


class FitDesignError(ValueError):
    """Raised when the points of a third-order fit cannot identify the slope."""


def q(x: float) -> float:
    """Return the Gaussian tail Q(x) = P(Z > x)."""
    return float(0.5 * erfc(x / math.sqrt(2.0)))


def _phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def q_inv(p: float) -> float:
    """
    Return the inverse Gaussian tail, the x with Q(x) = p.

    Bisection (Brent) to 1e-13 is followed by two Newton steps.

    Raises
    ------
    ValueError
        If p is not in (0, 1).
    """
    if not 0.0 < p < 1.0:
        msg = f"Q^-1 is defined on (0, 1), got {p}!"
        raise ValueError(msg)
    if p == 0.5:
        return 0.0
    x = brentq(lambda z: q(z) - p, -40.0, 40.0, xtol=1e-13)
    for _ in range(2):
        x += (q(x) - p) / _phi(x)
    return float(x)


def j_value(P: Dist, n: int, eps: float) -> float:
    """Return J(P) = H(P) + sqrt(V(P)/n) Q^-1(eps)."""
    H, V = scalar_functionals(P)
    return H + math.sqrt(V / n) * q_inv(eps)


def _class_masses(P: Dist, n: int) -> tuple[np.ndarray, np.ndarray]:
    table = type_table(n, P.m)
    masses = np.exp2(log2_type_sizes(n, P.m) + sequence_log2_probs(table, P))
    return table, masses


def empirical_entropy_cdf(P: Dist, n: int, delta: float) -> float:
    """
    Return P(H(t_{X^n}) >= H(P) + sqrt(V(P)/n) delta) exactly.

    The event uses the closed inequality with `THRESHOLD_SLACK`.
    """
    H, V = scalar_functionals(P)
    table, masses = _class_masses(P, n)
    if delta == -math.inf:
        return math.fsum(masses.tolist())
    threshold = H + math.sqrt(V / n) * delta
    selected = type_entropies(table) >= threshold - THRESHOLD_SLACK
    return math.fsum(masses[selected].tolist())


def entropy_cdf_constant(m: int, beta: float) -> float:
    """
    Return the Berry-Esseen style constant B of the empirical entropy bound.

    B = max{4/beta^2, 1 + m/beta + 400 m^3 / beta^(3/2) + 1/sqrt(2 pi beta)}.
    """
    return max(
        4.0 / beta**2,
        1.0 + m / beta + 400.0 * m**3 / beta**1.5 + 1.0 / math.sqrt(2 * math.pi * beta),
    )


@dataclass(frozen=True)
class EntropyCdfCheck:
    """Deviation of the empirical entropy CDF from Q(delta) and its bound B/sqrt(n)."""

    n: int
    delta: float
    deviation: float
    bound: float

    @property
    def holds(self) -> bool:
        """Whether the deviation stays within the bound."""
        return self.deviation <= self.bound + 1e-12


def entropy_cdf_check(
    P: Dist, n: int, delta: float, beta: float | None = None
) -> EntropyCdfCheck:
    """
    Compare the exact empirical entropy CDF with Q(delta).

    Parameters
    ----------
    P : Dist
        Source law with P(x) >= beta for every symbol and V(P) >= beta.
    n : int
        Sequence length.
    delta : float
        Normalised threshold.
    beta : float, optional
        Lower bound constant, defaults to min{min_x P(x), V(P)}.

    Returns
    -------
    EntropyCdfCheck
        Deviation and bound B / sqrt(n).

    Raises
    ------
    ValueError
        If the preconditions on beta are not met.
    """
    V = scalar_functionals(P)[1]
    if beta is None:
        beta = min(float(P.probs.min()), V)
    if beta <= 0 or P.probs.min() < beta or V < beta:
        msg = f"Need P(x) >= beta and V(P) >= beta > 0, got beta={beta}, V={V}!"
        raise ValueError(msg)
    deviation = abs(empirical_entropy_cdf(P, n, delta) - q(delta))
    bound = entropy_cdf_constant(P.m, beta) / math.sqrt(n)
    return EntropyCdfCheck(n=n, delta=delta, deviation=deviation, bound=bound)


def log_type_size_cdf(P: Dist, n: int, gamma: float) -> float:
    """Return P(log2 |T_{t_{X^n}}| > gamma) exactly."""
    table, masses = _class_masses(P, n)
    selected = log2_type_sizes(n, P.m) > gamma
    return math.fsum(masses[selected].tolist())


def type_size_cdf_deviation(P: Dist, n: int, gamma: float) -> float:
    """
    Return the deviation of the log type-class size tail from its Gaussian limit.

    The limit is Q((gamma - (1 - |X_P|)/2 log2 n - n H) / sqrt(n V)).

    Raises
    ------
    ValueError
        If V(P) = 0.
    """
    H, V = scalar_functionals(P)
    if V <= 0:
        msg = "The log type-class size has no Gaussian limit when V(P) = 0!"
        raise ValueError(msg)
    support_size = len(P.support)
    centred = gamma - (1 - support_size) / 2 * math.log2(n) - n * H
    return abs(log_type_size_cdf(P, n, gamma) - q(centred / math.sqrt(n * V)))


@dataclass(frozen=True)
class RatePrediction:
    """
    Third-order rate approximation H + sqrt(V/n) Q^-1(eps) + c log2(n)/n.

    Attributes
    ----------
    H : float
        Entropy in bits.
    V : float
        Varentropy in bits squared.
    c : float
        Third-order coefficient.
    """

    H: float
    V: float
    c: float

    @classmethod
    def for_variant(cls, P: Dist, variant: Variant) -> "RatePrediction":
        """Return the prediction for the optimal, Type Size or Two-Stage code."""
        H, V = scalar_functionals(P)
        support_size = len(P.support)
        match variant:
            case "optimal":
                c = -0.5
            case "type-size":
                c = (support_size - 3) / 2
            case "two-stage":
                c = (support_size - 1) / 2
            case _:
                msg = f"Unknown variant '{variant}'!"
                raise ValueError(msg)
        return cls(H=H, V=V, c=c)

    def value(self, n: int, eps: float) -> float:
        """Return the predicted rate in bits per symbol."""
        return self.H + math.sqrt(self.V / n) * q_inv(eps) + self.c * math.log2(n) / n


def predicted_rate(P: Dist, n: int, eps: float, variant: Variant) -> float:
    """Return the third-order rate prediction of a code variant."""
    return RatePrediction.for_variant(P, variant).value(n, eps)


@dataclass(frozen=True)
class SweepPoint:
    """One exact rate of a sweep with its normalised third-order residue y."""

    n: int
    bits: int
    y: float


@dataclass(frozen=True)
class FitResult:
    """
    Least-squares fit y(n) = slope log2(n) + intercept.

    Attributes
    ----------
    slope : float
        Estimated third-order coefficient c.
    intercept : float
        Constant term.
    residual : float
        Root mean square residual.
    n_points : int
        Number of points used.
    """

    slope: float
    intercept: float
    residual: float
    n_points: int


def third_order_residue(P: Dist, n: int, eps: float, bits: int) -> float:
    """Return y(n) = nR - nH - sqrt(nV) Q^-1(eps)."""
    H, V = scalar_functionals(P)
    return bits - n * H - math.sqrt(n * V) * q_inv(eps)


def geometric_grid(low: int, high: int, per_octave: int = 4) -> list[int]:
    """
    Return integers from low to high spaced geometrically.

    Parameters
    ----------
    low, high : int
        Positive bounds, both included.
    per_octave : int, optional
        Points per doubling.
    """
    if low < 1 or high < low or per_octave < 1:
        msg = f"Invalid geometric grid {low}:{high}:{per_octave}!"
        raise ValueError(msg)
    steps = math.floor(per_octave * math.log2(high / low) + 1e-9)
    values = {round(low * 2 ** (i / per_octave)) for i in range(steps + 1)}
    values.add(high)
    return sorted(values)


def third_order_sweep(
    code_name: str, P: Dist, eps: float, ns: Iterable[int]
) -> list[SweepPoint]:
    """Return the exact bit counts of a named code across sequence lengths."""
    points = []
    for n in ns:
        with timed(f"{code_name} at n={n}"):
            bits = rate_bits(code_name, P, n, eps)
        y = third_order_residue(P, n, eps, bits)
        points.append(SweepPoint(n=n, bits=bits, y=y))
        logger.debug(f"{code_name}: n={n}, bits={bits}")
    return points


def third_order_fit(
    points: Sequence[tuple[int, float]] | Sequence[SweepPoint],
    P: Dist | None = None,
    eps: float | None = None,
) -> FitResult:
    """
    Fit the third-order coefficient by least squares on log2 n.

    Parameters
    ----------
    points : sequence
        `SweepPoint` rows, or (n, value) pairs. Pairs hold bit counts when P and
        eps are given and residues y otherwise.
    P : Dist, optional
        Source law used to turn bit counts into residues.
    eps : float, optional
        Error probability used to turn bit counts into residues.

    Returns
    -------
    FitResult
        Slope, intercept and RMS residual.

    Raises
    ------
    FitDesignError
        If there are fewer than 5 points, n spans less than a factor 8, or the
        design matrix is singular.
    """
    ns, ys = [], []
    for point in points:
        if isinstance(point, SweepPoint):
            ns.append(point.n)
            ys.append(point.y)
        else:
            n, value = point
            ns.append(n)
            if P is not None and eps is not None:
                ys.append(third_order_residue(P, n, eps, value))
            else:
                ys.append(value)
    if len(ns) < 5:
        msg = f"A third-order fit needs at least 5 points, got {len(ns)}!"
        raise FitDesignError(msg)
    if min(ns) < 1 or max(ns) < 8 * min(ns):
        msg = f"The n-values must span a factor of 8, got {min(ns)}..{max(ns)}!"
        raise FitDesignError(msg)

    design = np.column_stack([np.log2(np.asarray(ns, dtype=float)), np.ones(len(ns))])
    if np.linalg.matrix_rank(design) < 2:
        msg = "The design matrix of the fit is singular!"
        raise FitDesignError(msg)
    ys = np.asarray(ys, dtype=float)
    (slope, intercept), *_ = np.linalg.lstsq(design, ys, rcond=None)
    residual = math.sqrt(float(np.mean((design @ [slope, intercept] - ys) ** 2)))
    return FitResult(
        slope=float(slope),
        intercept=float(intercept),
        residual=residual,
        n_points=len(ns),
    )


def fit_passes(fit: FitResult, target: float, tolerance: float = 0.35) -> bool:
    """Return whether a fitted slope lies within tolerance of its target."""
    return abs(fit.slope - target) <= tolerance
