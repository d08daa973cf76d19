"""
Module for the mixture converse.

Includes tools to:
- Discretise the set {P : J(P) = Gamma} of distributions on a support set
  (`entropy_sphere_grid`), where J(P) = H(P) + sqrt(V(P)/n) Q^-1(eps).
- Evaluate the uniform mixture of i.i.d. laws over the grid at type granularity.
- Lower-bound the error probability of any code under the mixture.
- Compare the mixture probability of a type with its Laplace-type upper bound.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq
from scipy.spatial import cKDTree
from scipy.special import logsumexp, ndtri
from scipy.stats import qmc

from fvlab.alphabet import (
    LN2,
    Dist,
    TypeVector,
    log2_type_sizes,
    scalar_functionals,
    type_table,
)
from fvlab.asymptotics import q_inv
from fvlab.coding import compensated_suffix_sums
from fvlab.logging_tools import logger
from fvlab.universal import rate_bits

# Required accuracy of J(P) = Gamma on every grid point
J_TOLERANCE = 1e-10

# Grid points with smaller varentropy are dropped
MIN_VARENTROPY = 1e-6

# Rows per chunk when evaluating the mixture over a type table
MIXTURE_CHUNK = 20_000


class InfeasibleGammaError(ValueError):
    """Raised when no distribution on the support set reaches J(P) = Gamma."""


def _functionals(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return H and V of each row of a probability matrix."""
    with np.errstate(divide="ignore", invalid="ignore"):
        info = np.where(points > 0, -np.log2(points), 0.0)
    H = np.sum(points * info, axis=1)
    V = np.sum(points * (info - H[:, None]) ** 2, axis=1)
    return H, np.maximum(V, 0.0)


def _j_values(points: np.ndarray, n: int, q_eps: float) -> np.ndarray:
    H, V = _functionals(np.atleast_2d(points))
    return H + np.sqrt(V / n) * q_eps


@dataclass(frozen=True, eq=False)
class ManifoldGrid:
    """
    Finite set of distributions with J(P) = Gamma, weighted uniformly.

    Attributes
    ----------
    points : numpy.ndarray
        Read-only array of shape (N, m), one distribution per row.
    support : tuple of int
        Common support set of all points.
    gamma : float
        Target value of J in bits.
    eps : float
        Error probability in J.
    n : int
        Sequence length in J.
    beta_floor : float
        Smallest coordinate allowed on the support.
    dropped : int
        Number of rays or points discarded during construction.
    closed_curve : bool
        Whether consecutive rows trace a closed curve.
    """

    points: np.ndarray
    support: tuple[int, ...]
    gamma: float
    eps: float
    n: int
    beta_floor: float = 0.0
    dropped: int = 0
    closed_curve: bool = False

    def __post_init__(self) -> None:
        """Freeze the point array."""
        points = np.array(self.points, dtype=float, ndmin=2)
        points.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "support", tuple(self.support))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        """Alphabet size."""
        return self.points.shape[1]

    @property
    def dists(self) -> list[Dist]:
        """Grid points as distributions."""
        return [Dist.from_values(row) for row in self.points]

    @property
    def weights(self) -> np.ndarray:
        """Uniform mixture weights."""
        return np.full(len(self), 1.0 / len(self))

    @property
    def dim(self) -> int:
        """Dimension |support| - 2 of the manifold."""
        return max(len(self.support) - 2, 0)

    @property
    def spacing(self) -> float:
        """Mean nearest-neighbour distance between grid points."""
        if len(self) < 2:
            return 0.0
        distances, _ = cKDTree(self.points).query(self.points, k=2)
        return float(np.mean(distances[:, 1]))

    @property
    def volume(self) -> float:
        """Volume surrogate N h^dim with the mean spacing h."""
        if self.dim == 0:
            return float(len(self))
        return len(self) * self.spacing**self.dim


def _binary_roots(gamma: float, n: int, q_eps: float) -> np.ndarray:
    def excess(p: float) -> float:
        return float(_j_values(np.array([[p, 1.0 - p]]), n, q_eps)[0]) - gamma

    grid = np.linspace(1e-12, 1.0 - 1e-12, 4097)
    values = _j_values(np.column_stack([grid, 1.0 - grid]), n, q_eps) - gamma
    roots = [float(p) for p, v in zip(grid, values) if v == 0.0]
    for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        roots.append(brentq(excess, grid[i], grid[i + 1], xtol=1e-15))
    if abs(excess(0.5)) <= 1e-12:
        roots.append(0.5)
    roots.sort()
    unique = [r for i, r in enumerate(roots) if i == 0 or r - roots[i - 1] > 1e-9]
    return np.array([[r, 1.0 - r] for r in unique]).reshape(-1, 2)


def ray_root(
    direction: np.ndarray, gamma: float, n: int, q_eps: float, samples: int = 257
) -> np.ndarray | None:
    """Return the first point with J = gamma on the ray from the centroid."""
    k = direction.size
    centre = np.full(k, 1.0 / k)
    negative = direction < 0
    if not np.any(negative):
        return None
    reach = float(np.min(centre[negative] / -direction[negative])) * (1.0 - 1e-12)
    radii = np.linspace(0.0, reach, samples)
    values = _j_values(centre + radii[:, None] * direction, n, q_eps) - gamma
    crossing = np.flatnonzero(values[1:] <= 0.0)
    if crossing.size == 0:
        return None
    i = int(crossing[0])
    if values[i + 1] == 0.0:
        return centre + radii[i + 1] * direction

    def excess(r: float) -> float:
        return float(_j_values(centre + r * direction, n, q_eps)[0]) - gamma

    radius = brentq(excess, radii[i], radii[i + 1], xtol=1e-15)
    return centre + radius * direction


def _curve_points(
    gamma: float, n: int, q_eps: float, resolution: int
) -> tuple[np.ndarray, int]:
    """Return points equally spaced in arc length on the closed curve (3 symbols)."""
    b1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
    b2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)

    def sweep(angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        found, kept = [], []
        for angle in angles:
            direction = math.cos(angle) * b1 + math.sin(angle) * b2
            point = ray_root(direction, gamma, n, q_eps)
            if point is not None:
                found.append(point)
                kept.append(angle)
        return np.array(found).reshape(-1, 3), np.array(kept)

    start = np.linspace(0.0, 2 * math.pi, 8 * resolution, endpoint=False)
    dense, angles = sweep(start)
    if len(dense) < 3:
        msg = f"J = {gamma} is not reached on enough rays!"
        raise InfeasibleGammaError(msg)
    closed = np.vstack([dense, dense[:1]])
    segments = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(segments)])
    targets = np.arange(resolution) * arc[-1] / resolution
    resampled = np.interp(targets, arc, np.append(angles, angles[0] + 2 * math.pi))
    points, _ = sweep(resampled)
    return points, resolution - len(points)


def _sobol_points(
    k: int, gamma: float, n: int, q_eps: float, resolution: int
) -> tuple[np.ndarray, int]:
    """Return ray roots along unscrambled Sobol directions (4 or more symbols)."""
    basis = null_space(np.ones((1, k)))
    exponent = max(1, math.ceil(math.log2(resolution + 2)))
    uniforms = qmc.Sobol(d=k - 1, scramble=False).random_base2(exponent)[1:]
    normals = ndtri(uniforms)
    norms = np.linalg.norm(normals, axis=1)
    valid = norms > 1e-12
    directions = (normals[valid] / norms[valid, None])[:resolution]
    found = []
    for direction in directions @ basis.T:
        point = ray_root(direction, gamma, n, q_eps)
        if point is not None:
            found.append(point)
    return np.array(found).reshape(-1, k), len(directions) - len(found)


def entropy_sphere_grid(
    support: int | Sequence[int],
    gamma: float,
    eps: float,
    n: int,
    resolution: int = 64,
    *,
    alphabet_size: int | None = None,
    beta_floor: float = 0.01,
) -> ManifoldGrid:
    """
    Discretise {P : support(P) = support, J(P) = gamma}.

    Two symbols give at most two points, found exactly. Three symbols give a
    closed curve, found by rays from the centroid and resampled to equal arc
    length. More symbols use rays along quasi-random directions.

    Parameters
    ----------
    support : int or sequence of int
        Support set, or its size for the support {0, ..., size-1}.
    gamma : float
        Target value in (0, log2 |support|).
    eps : float
        Error probability in (0, 1).
    n : int
        Sequence length in J.
    resolution : int, optional
        Number of directions (three or more symbols).
    alphabet_size : int, optional
        Size of the ambient alphabet, defaults to max(support) + 1.
    beta_floor : float, optional
        Points with a coordinate below this value are dropped.

    Returns
    -------
    ManifoldGrid
        The grid with the number of dropped rays and points.

    Raises
    ------
    InfeasibleGammaError
        If gamma is outside (0, log2 |support|) or no point survives.
    """
    if isinstance(support, int):
        support = tuple(range(support))
    support = tuple(sorted(support))
    k = len(support)
    m = max(support) + 1 if alphabet_size is None else alphabet_size
    if k < 2 or not 0.0 < gamma < math.log2(k):
        msg = f"Gamma must lie in (0, log2 {k}), got {gamma}!"
        raise InfeasibleGammaError(msg)
    q_eps = q_inv(eps)

    if k == 2:
        sub, dropped = _binary_roots(gamma, n, q_eps), 0
    elif k == 3:
        sub, dropped = _curve_points(gamma, n, q_eps, resolution)
    else:
        sub, dropped = _sobol_points(k, gamma, n, q_eps, resolution)

    keep = np.ones(len(sub), dtype=bool)
    if len(sub):
        keep &= sub.min(axis=1) >= beta_floor
        keep &= np.abs(_j_values(sub, n, q_eps) - gamma) <= J_TOLERANCE
        if k >= 3:
            keep &= _functionals(sub)[1] >= MIN_VARENTROPY
    dropped += int(np.count_nonzero(~keep))
    sub = sub[keep]
    if len(sub) == 0:
        msg = f"No distribution with J = {gamma} survives the floor {beta_floor}!"
        raise InfeasibleGammaError(msg)
    if dropped:
        logger.warning(f"Entropy sphere grid: dropped {dropped} rays or points")

    points = np.zeros((len(sub), m))
    points[:, list(support)] = sub
    return ManifoldGrid(
        points=points,
        support=support,
        gamma=gamma,
        eps=eps,
        n=n,
        beta_floor=beta_floor,
        dropped=dropped,
        closed_curve=(k == 3 and dropped == 0),
    )


def mixture_log2_probs(table: np.ndarray, grid: ManifoldGrid) -> np.ndarray:
    """
    Return log2 of the mixture probability of one sequence of each type.

    Types that use a symbol outside the grid support get -inf.
    """
    table = np.atleast_2d(np.asarray(table))
    support = list(grid.support)
    outside = [x for x in range(grid.m) if x not in grid.support]
    logs = np.log2(grid.points[:, support])
    result = np.empty(table.shape[0])
    for low in range(0, table.shape[0], MIXTURE_CHUNK):
        chunk = table[low : low + MIXTURE_CHUNK, support].astype(float)
        per_point = chunk @ logs.T
        result[low : low + MIXTURE_CHUNK] = logsumexp(per_point * LN2, axis=1) / LN2
    result -= math.log2(len(grid))
    if outside:
        result[np.any(table[:, outside] > 0, axis=1)] = -math.inf
    return result


def mixture_type_log2_prob(t: TypeVector, grid: ManifoldGrid) -> float:
    """Return log2 of the mixture probability of any one sequence of type t."""
    return float(mixture_log2_probs(np.asarray([t.counts]), grid)[0])


class MixtureInformation:
    """
    Distribution of the information -log2 P_mix(X^n) when X^n follows the mixture.

    The full type table of size C(n + m - 1, m - 1) is held in memory together
    with one log-probability per type and grid point (in row chunks). This suits
    ternary and quaternary alphabets up to a few hundred symbols per sequence.
    Larger n or m need a log-domain tail without the exact table.

    Parameters
    ----------
    grid : ManifoldGrid
        Mixture components.
    n : int
        Sequence length.
    """

    def __init__(self, grid: ManifoldGrid, n: int) -> None:
        table = type_table(n, grid.m)
        mixture = mixture_log2_probs(table, grid)
        keep = np.isfinite(mixture)
        information = -mixture[keep]
        masses = np.exp2(log2_type_sizes(n, grid.m)[keep] + mixture[keep])
        order = np.argsort(information, kind="stable")
        self.n = n
        self.information = information[order]
        self.suffix = compensated_suffix_sums(masses[order].tolist())
        self.total_mass = self.suffix[0]

    def exceed(self, threshold: float) -> float:
        """Return P_mix(-log2 P_mix(X^n) >= threshold)."""
        return self.suffix[int(np.searchsorted(self.information, threshold, "left"))]

    def bound(self, k_bits: float, tau: float) -> float:
        """Return the lower bound on P_mix(length >= k_bits), clamped to [0, 1]."""
        if tau <= 0:
            msg = f"tau must be positive, got {tau}!"
            raise ValueError(msg)
        value = self.exceed(k_bits + tau) - 2.0**-tau
        return min(max(value, 0.0), 1.0)


def converse_epsilon_lower(
    k_bits: float, grid: ManifoldGrid, n: int, tau: float
) -> float:
    """
    Return P_mix(-log2 P_mix(X^n) >= k_bits + tau) - 2^-tau, clamped to [0, 1].

    For every code this lower-bounds P_mix(length >= k_bits). A code with
    P(length > k) <= eps under every grid point is therefore compared at k + 1,
    see `converse_bits_for_rate`.
    """
    return MixtureInformation(grid, n).bound(k_bits, tau)


def converse_bits_for_rate(k: int) -> int:
    """Return the threshold k + 1 at which a code with ε-bit count k is evaluated."""
    return k + 1


def tau_grid(n: int, count: int = 16) -> np.ndarray:
    """Return {1/2 log2 n} joined with a geometric grid on [1, 2 log2 n]."""
    upper = max(2.0 * math.log2(n), 1.0)
    return np.unique(np.append(np.geomspace(1.0, upper, count), 0.5 * math.log2(n)))


@dataclass(frozen=True)
class ConverseBound:
    """Maximised converse bound at one length threshold."""

    k_bits: float
    tau_star: float
    bound: float


def max_converse_bound(
    k_bits: float,
    grid: ManifoldGrid,
    n: int,
    taus: Sequence[float] | None = None,
    information: MixtureInformation | None = None,
) -> ConverseBound:
    """Return the largest bound over the tau grid and the maximising tau."""
    information = MixtureInformation(grid, n) if information is None else information
    taus = tau_grid(n) if taus is None else taus
    values = [information.bound(k_bits, float(tau)) for tau in taus]
    best = int(np.argmax(values))
    return ConverseBound(k_bits=k_bits, tau_star=float(taus[best]), bound=values[best])


def worst_case_bits(code_name: str, grid: ManifoldGrid, n: int, eps: float) -> int:
    """Return the largest ε-bit count of a named code over all grid points."""
    return max(rate_bits(code_name, P, n, eps) for P in grid.dists)


def _kl_to_grid(t: TypeVector, grid: ManifoldGrid) -> np.ndarray:
    freqs = t.frequencies
    used = freqs > 0
    if any(x not in grid.support for x in np.flatnonzero(used)):
        return np.full(len(grid), math.inf)
    logs = np.log2(grid.points[:, used])
    values = (freqs[used] * (np.log2(freqs[used]) - logs)).sum(axis=1)
    return np.maximum(values, 0.0)


@dataclass(frozen=True)
class MixtureBoundCheck:
    """
    Comparison of a type's mixture probability with its Laplace-type bound.

    Attributes
    ----------
    excess : float
        log2 P_mix minus the upper bound; nonpositive up to O(1/n).
    residual : float or None
        log2 P_mix minus the sharp Laplace approximation, None when no local
        curve model is available.
    unique : bool
        Whether the closest grid point in relative entropy is unique.
    nearest : int
        Index of the closest grid point.
    kl_min : float
        Relative entropy to the closest grid point in bits.
    """

    excess: float
    residual: float | None
    unique: bool
    nearest: int
    kl_min: float


def mixture_bound_check(
    t: TypeVector, grid: ManifoldGrid, k: int | None = None
) -> MixtureBoundCheck:
    """
    Compare log2 P_mix(x^n) for x^n of type t with its upper bound.

    The bound is -n H(t) - log2 Vol + (k/2) log2(2 pi / (p_min n)), where p_min is
    the smallest positive frequency of t and Vol the grid's volume surrogate.

    Parameters
    ----------
    t : TypeVector
        Type with support inside the grid support.
    grid : ManifoldGrid
        Mixture components.
    k : int, optional
        Manifold dimension, defaults to the grid dimension.

    Returns
    -------
    MixtureBoundCheck
        Excess over the bound and the residual of the sharp approximation.
    """
    k = grid.dim if k is None else k
    n = t.n
    log2_mix = mixture_type_log2_prob(t, grid)
    H_t = scalar_functionals(t)[0]
    p_min = float(t.frequencies[t.frequencies > 0].min())
    spread = k / 2 * math.log2(2 * math.pi / (p_min * n))
    bound = -n * H_t - math.log2(grid.volume) + spread

    distances = _kl_to_grid(t, grid)
    nearest = int(np.argmin(distances))
    kl_min = float(distances[nearest])
    ties = np.abs(distances - kl_min) <= 1e-12 * max(1.0, kl_min)
    unique = int(np.count_nonzero(ties)) == 1

    residual = None
    if grid.dim == 0:
        residual = log2_mix - (-n * (H_t + kl_min) - math.log2(len(grid)))
    elif grid.dim == 1 and grid.closed_curve and len(grid) >= 3:
        neighbours = [(nearest - 1) % len(grid), nearest, (nearest + 1) % len(grid)]
        previous, centre, following = grid.points[neighbours]
        before = float(np.linalg.norm(centre - previous))
        after = float(np.linalg.norm(following - centre))
        a, b, c = np.polyfit([-before, 0.0, after], distances[neighbours], 2)
        if a > 0:
            kl_star = c - b * b / (4 * a)
            curvature = 2 * a * LN2
            local_spacing = 0.5 * (before + after)
            sharp = (
                -n * (H_t + kl_star)
                - math.log2(len(grid) * local_spacing)
                + 0.5 * math.log2(2 * math.pi / (n * curvature))
            )
            residual = log2_mix - sharp
        else:
            residual = math.nan

    return MixtureBoundCheck(
        excess=log2_mix - bound,
        residual=residual,
        unique=unique,
        nearest=nearest,
        kl_min=kl_min,
    )


@dataclass(frozen=True)
class MixtureBoundReport:
    """Aggregate of `mixture_bound_check` over the types close to the grid."""

    n: int
    checked: int
    skipped: int
    max_excess: float


def mixture_bound_report(
    grid: ManifoldGrid, n: int, max_kl: float | None = None
) -> MixtureBoundReport:
    """
    Run `mixture_bound_check` on every n-type within max_kl (default 1/n) of the grid.

    Types without a unique closest grid point are skipped and counted.
    """
    max_kl = 1.0 / n if max_kl is None else max_kl
    checked = skipped = 0
    max_excess = -math.inf
    for row in type_table(n, grid.m).tolist():
        t = TypeVector(tuple(row))
        if any(x not in grid.support for x in t.support):
            continue
        if float(_kl_to_grid(t, grid).min()) > max_kl:
            continue
        result = mixture_bound_check(t, grid)
        if not result.unique:
            skipped += 1
            continue
        checked += 1
        max_excess = max(max_excess, result.excess)
    if skipped:
        logger.warning(f"Mixture bound: skipped {skipped} types, projection not unique")
    return MixtureBoundReport(
        n=n, checked=checked, skipped=skipped, max_excess=max_excess
    )
