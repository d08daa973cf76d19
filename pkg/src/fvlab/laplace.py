"""
Module for numerical checks of Laplace-type integral approximations.

Includes tools to:
- Evaluate a catalog of integrals of the form int g exp(-n f) by adaptive quadrature.
- Compare them with the leading term (2 pi / n)^(k/2) g(x*) |A|^(-1/2).
- Check that the relative error decays like 1/n.
"""

import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from fvlab.alphabet import LN2, Dist, scalar_functionals
from fvlab.asymptotics import j_value, q_inv
from fvlab.converse import ray_root

CATALOG = ("gaussian", "quartic", "simplex_kl")

# Relative quadrature accuracy
QUAD_EPSREL = 1e-12

# Order ratios are only checked from this n on
ORDER_THRESHOLD = 64

# Accepted range of rel_err(2n) / rel_err(n)
ORDER_RATIO_RANGE = (0.3, 0.8)

# Closed-form cases must match to this relative error
EXACT_CASE_TOLERANCE = 1e-10

# Setting of the curve case: the curve J = J(CURVE_SOURCE) at (CURVE_EPS, CURVE_N)
CURVE_SOURCE = (0.5, 0.3, 0.2)
CURVE_EPS = 0.1
CURVE_N = 500
CURVE_ANGLE = 0.7


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature does not reach the requested accuracy."""


@dataclass(frozen=True)
class LaplaceResult:
    """Numeric and asymptotic value of one catalog integral."""

    case: str
    n: int
    numeric: float
    asymptotic: float

    @property
    def rel_err(self) -> float:
        """Relative error |numeric / asymptotic - 1|."""
        return abs(self.numeric / self.asymptotic - 1.0)


@dataclass(frozen=True)
class OrderCheck:
    """
    Decay of the relative error of a catalog case over doubling n.

    Attributes
    ----------
    case : str
        Catalog case.
    results : tuple of LaplaceResult
        One result per n, ascending.
    ratios : tuple of float
        rel_err(n_{i+1}) / rel_err(n_i) for consecutive n at or above
        `ORDER_THRESHOLD`.
    passed : bool
        Whether every ratio lies in `ORDER_RATIO_RANGE`, or for the Gaussian case
        whether every relative error is below `EXACT_CASE_TOLERANCE`.
    """

    case: str
    results: tuple[LaplaceResult, ...]
    ratios: tuple[float, ...]
    passed: bool


def _integrate(
    integrand: Callable[[float], float],
    low: float,
    high: float,
    points: Sequence[float] | None = None,
) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(
                integrand,
                low,
                high,
                points=points,
                epsabs=0.0,
                epsrel=QUAD_EPSREL,
                limit=500,
            )
        except IntegrationWarning as err:
            msg = f"Quadrature on [{low}, {high}] did not converge: {err}!"
            raise QuadratureError(msg) from err
    return float(value)


def _gaussian(n: int) -> tuple[float, float]:
    # f(x) = x^2 / 2 after the substitution u = sqrt(n) x
    integral = _integrate(lambda u: math.exp(-0.5 * u * u), -40.0, 40.0, [0.0])
    return integral / math.sqrt(n), math.sqrt(2 * math.pi / n)


def _quartic(n: int) -> tuple[float, float]:
    # f(x) = x^2 / 2 + x^4, so n f(u / sqrt(n)) = u^2 / 2 + u^4 / n
    integral = _integrate(
        lambda u: math.exp(-0.5 * u * u - u**4 / n), -12.0, 12.0, [0.0]
    )
    return integral / math.sqrt(n), math.sqrt(2 * math.pi / n)


class SimplexCurve:
    """
    The closed curve {P : J(P) = gamma} on the 3-symbol simplex.

    Points are parameterised by the angle of the ray from the centroid. The
    tangent follows from implicit differentiation of J along the ray.
    """

    b1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
    b2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)

    def __init__(self, gamma: float, eps: float, n: int) -> None:
        self.gamma = gamma
        self.n = n
        self.q_eps = q_inv(eps)

    def _direction(self, angle: float) -> tuple[np.ndarray, np.ndarray]:
        u = math.cos(angle) * self.b1 + math.sin(angle) * self.b2
        du = -math.sin(angle) * self.b1 + math.cos(angle) * self.b2
        return u, du

    def point(self, angle: float) -> np.ndarray:
        """Return the curve point on the ray at the given angle."""
        direction, _ = self._direction(angle)
        found = ray_root(direction, self.gamma, self.n, self.q_eps)
        if found is None:
            msg = f"The ray at angle {angle} does not reach J = {self.gamma}!"
            raise ValueError(msg)
        return found

    def gradient(self, p: np.ndarray) -> np.ndarray:
        """Return a gradient of J at p, valid along directions summing to zero."""
        info = -np.log2(p)
        H, V = scalar_functionals(Dist(p / p.sum()))
        grad_h = info - 1.0 / LN2
        grad_v = info**2 - 2.0 * info / LN2 - 2.0 * H * grad_h
        return grad_h + self.q_eps / math.sqrt(self.n) * grad_v / (2.0 * math.sqrt(V))

    def tangent(self, angle: float) -> tuple[np.ndarray, np.ndarray]:
        """Return the point and the derivative of the curve at the given angle."""
        p = self.point(angle)
        u, du = self._direction(angle)
        radius = float(np.dot(p - 1.0 / 3.0, u))
        grad = self.gradient(p)
        d_radius = -radius * float(grad @ du) / float(grad @ u)
        return p, d_radius * u + radius * du


def _simplex_kl(n: int) -> tuple[float, float]:
    gamma = j_value(Dist(CURVE_SOURCE), CURVE_N, CURVE_EPS)
    curve = SimplexCurve(gamma, CURVE_EPS, CURVE_N)
    anchor, velocity = curve.tangent(CURVE_ANGLE)

    def integrand(angle: float) -> float:
        p, dp = curve.tangent(angle)
        divergence = float(np.sum(anchor * np.log(anchor / p)))
        return math.exp(-n * divergence) * float(np.linalg.norm(dp))

    numeric = _integrate(
        integrand, CURVE_ANGLE - math.pi, CURVE_ANGLE + math.pi, [CURVE_ANGLE]
    )
    curvature = float(np.sum(velocity**2 / anchor))
    asymptotic = math.sqrt(2 * math.pi / n) * float(np.linalg.norm(velocity))
    return numeric, asymptotic / math.sqrt(curvature)


def laplace_check(case: str, n: int) -> LaplaceResult:
    """
    Evaluate one catalog integral and its Laplace approximation.

    Parameters
    ----------
    case : str
        One of `CATALOG`:
        - "gaussian": f(x) = x^2 / 2 on the line, where the approximation is exact.
        - "quartic": f(x) = x^2 / 2 + x^4 on the line.
        - "simplex_kl": f = D(t || P) over the curve {P : J(P) = gamma} on the
          3-symbol simplex with t on the curve.
    n : int
        Positive scale parameter.

    Returns
    -------
    LaplaceResult
        Numeric value, leading term and relative error.

    Raises
    ------
    QuadratureError
        If the quadrature fails to converge.
    """
    if n < 1:
        msg = f"The scale n must be positive, got {n}!"
        raise ValueError(msg)
    match case:
        case "gaussian":
            numeric, asymptotic = _gaussian(n)
        case "quartic":
            numeric, asymptotic = _quartic(n)
        case "simplex_kl":
            numeric, asymptotic = _simplex_kl(n)
        case _:
            msg = f"Unknown Laplace case '{case}', choose from {', '.join(CATALOG)}!"
            raise ValueError(msg)
    return LaplaceResult(case=case, n=n, numeric=numeric, asymptotic=asymptotic)


def laplace_order_check(
    case: str, ns: Sequence[int] = (64, 128, 256, 512, 1024)
) -> OrderCheck:
    """Run a catalog case over several n and check the 1/n decay of its error."""
    results = tuple(laplace_check(case, n) for n in sorted(ns))
    if case == "gaussian":
        passed = all(r.rel_err <= EXACT_CASE_TOLERANCE for r in results)
        return OrderCheck(case=case, results=results, ratios=(), passed=passed)

    low, high = ORDER_RATIO_RANGE
    ratios = tuple(
        b.rel_err / a.rel_err
        for a, b in zip(results, results[1:])
        if a.n >= ORDER_THRESHOLD and a.rel_err > 0
    )
    passed = bool(ratios) and all(low <= r <= high for r in ratios)
    return OrderCheck(case=case, results=results, ratios=ratios, passed=passed)
