"""
Distances between laws: Kolmogorov-Smirnov, total variation and Renyi divergence
"""

import math
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Tuple, Union

import numpy as np
from scipy import special

from loguru import logger

from .distributions import ClassTag, ScalarDistribution
from .errors import DomainError, UnsupportedPairError
from .numerics import DEFAULT_TOL, integrate_pieces, refine_maximum, top_local_maxima

KS_GRID_POINTS = 100_000
RATIO_GRID_POINTS = 10_000

METHOD_EXACT_DISCRETE = "exact_discrete"
METHOD_SUP_GRID = "sup_grid"
METHOD_QUADRATURE = "quadrature"


@dataclass(frozen=True)
class DistancePair:
    """A computed distance together with how it was obtained"""
    value: float
    method_tag: str
    grid_resolution: int = 0

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"distance must be nonnegative, got {self.value}")
        if self.method_tag not in (METHOD_EXACT_DISCRETE, METHOD_SUP_GRID, METHOD_QUADRATURE):
            raise ValueError(f"unknown method tag '{self.method_tag}'")


class RenyiSandwich(NamedTuple):
    lower: float
    value: float
    upper: float


def _joint_range(P: ScalarDistribution, Q: ScalarDistribution) -> Tuple[float, float]:
    return min(P.support_hint[0], Q.support_hint[0]), max(P.support_hint[1], Q.support_hint[1])


def _aligned_masses(P: ScalarDistribution, Q: ScalarDistribution) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Atom masses of P and Q on the union of their atom locations"""
    values = np.union1d(P.atom_values, Q.atom_values)
    p = np.zeros(values.size)
    q = np.zeros(values.size)
    if P.has_atoms:
        p[np.searchsorted(values, P.atom_values)] = P.atom_masses
    if Q.has_atoms:
        q[np.searchsorted(values, Q.atom_values)] = Q.atom_masses
    return values, p, q


def _breakpoints(P: ScalarDistribution, Q: ScalarDistribution) -> List[float]:
    points = {P.support_hint[0], P.support_hint[1], Q.support_hint[0], Q.support_hint[1]}
    for dist in (P, Q):
        points.update(x for x, _ in dist.density_jumps)
    lo, hi = _joint_range(P, Q)
    return sorted(x for x in points if lo <= x <= hi)


def ks_distance(P: ScalarDistribution, Q: ScalarDistribution, detailed: bool = False) -> Union[float, DistancePair]:
    """
    Kolmogorov-Smirnov distance sup_x |F(x) - G(x)|

    Both one-sided limits are compared at every atom of either law; when either
    law has a continuous part, a grid on the joint support is searched as well
    and its largest local maxima are refined.

    Args:
        P: First law
        Q: Second law
        detailed: Return a DistancePair instead of the bare value

    Returns:
        The distance, or a DistancePair when detailed is set
    """
    best = 0.0
    atoms = np.union1d(P.atom_values, Q.atom_values)
    if atoms.size:
        right = np.abs(np.asarray(P.cdf(atoms)) - np.asarray(Q.cdf(atoms)))
        left = np.abs(np.asarray(P.cdf_left(atoms)) - np.asarray(Q.cdf_left(atoms)))
        best = float(max(right.max(), left.max()))

    if P.is_discrete and Q.is_discrete:
        result = DistancePair(best, METHOD_EXACT_DISCRETE, int(atoms.size))
        return result if detailed else result.value

    lo, hi = _joint_range(P, Q)
    grid = np.linspace(lo, hi, KS_GRID_POINTS)
    gap = np.abs(np.asarray(P.cdf(grid)) - np.asarray(Q.cdf(grid)))
    best = max(best, float(gap.max()))

    def abs_gap(x: float) -> float:
        return abs(float(P.cdf(x)) - float(Q.cdf(x)))

    for idx in top_local_maxima(gap, count=3):
        left_x = grid[max(idx - 1, 0)]
        right_x = grid[min(idx + 1, grid.size - 1)]
        best = max(best, refine_maximum(abs_gap, left_x, right_x))

    logger.debug(f"ks_distance({P.name}, {Q.name}) = {best:.6g} over {grid.size} grid points")
    result = DistancePair(min(best, 1.0), METHOD_SUP_GRID, KS_GRID_POINTS)
    return result if detailed else result.value


def _check_same_class(P: ScalarDistribution, Q: ScalarDistribution, metric: str):
    for dist in (P, Q):
        if dist.class_tag is ClassTag.SINGULAR_CONTINUOUS:
            raise UnsupportedPairError(f"{metric} is not supported for singular law {dist.name}; use ks_distance")
    if P.is_discrete and Q.is_discrete:
        return
    if P.has_density and Q.has_density:
        if P.has_atoms or Q.has_atoms:
            if not np.array_equal(P.atom_values, Q.atom_values):
                raise UnsupportedPairError(
                    f"{metric} needs aligned atoms for mixtures ({P.name} vs {Q.name}); use ks_distance"
                )
        return
    raise UnsupportedPairError(
        f"{metric} is not supported for the pair {P.class_tag.value} / {Q.class_tag.value}; use ks_distance"
    )


def _density_or_zero(dist: ScalarDistribution) -> Callable[[float], float]:
    if dist.has_density:
        return lambda x: float(dist.density(x))
    return lambda x: 0.0


def tv_distance(P: ScalarDistribution, Q: ScalarDistribution, detailed: bool = False) -> Union[float, DistancePair]:
    """
    Total variation distance sup_A |P(A) - Q(A)|

    Discrete pairs use 1/2 sum |p - q|; pairs with densities add 1/2 int |p - q|
    by adaptive Simpson between the support endpoints and density jumps.

    Raises:
        UnsupportedPairError: mixed-class pair, singular law or mixtures with non-aligned atoms
    """
    _check_same_class(P, Q, "tv_distance")
    _, p_atoms, q_atoms = _aligned_masses(P, Q)
    atom_part = 0.5 * float(np.abs(p_atoms - q_atoms).sum())

    if P.is_discrete and Q.is_discrete:
        result = DistancePair(atom_part, METHOD_EXACT_DISCRETE, int(p_atoms.size))
        return result if detailed else result.value

    p = _density_or_zero(P)
    q = _density_or_zero(Q)
    integral, err = integrate_pieces(lambda x: abs(p(x) - q(x)), _breakpoints(P, Q), DEFAULT_TOL)
    if err > DEFAULT_TOL:
        logger.warning(f"tv_distance quadrature error estimate {err:.3g} exceeds {DEFAULT_TOL}")
    value = min(max(atom_part + 0.5 * integral, 0.0), 1.0)
    result = DistancePair(value, METHOD_QUADRATURE)
    return result if detailed else result.value


def _density_grid(P: ScalarDistribution, Q: ScalarDistribution) -> np.ndarray:
    """Sample points for ess-sup / ess-inf of density ratios, one-sided near every breakpoint"""
    points = _breakpoints(P, Q)
    pieces = []
    for lo, hi in zip(points[:-1], points[1:]):
        if hi <= lo:
            continue
        inset = (hi - lo) * 1e-9
        pieces.append(np.linspace(lo + inset, hi - inset, max(RATIO_GRID_POINTS // max(len(points) - 1, 1), 3)))
    return np.concatenate(pieces) if pieces else np.empty(0)


def _renyi_infinity(P, Q, p_atoms, q_atoms) -> float:
    ratio = 0.0
    hit = p_atoms > 0
    if hit.any():
        if np.any(q_atoms[hit] == 0):
            return math.inf
        ratio = float((p_atoms[hit] / q_atoms[hit]).max())
    if P.has_density:
        grid = _density_grid(P, Q)
        p_vals = np.asarray(P.density(grid))
        q_vals = np.asarray(Q.density(grid)) if Q.has_density else np.zeros_like(p_vals)
        on = p_vals > 0
        if np.any(on & (q_vals <= 0)):
            return math.inf
        if on.any():
            ratio = max(ratio, float((p_vals[on] / q_vals[on]).max()))
    return math.log(ratio) if ratio > 0 else -math.inf


def renyi_divergence(P: ScalarDistribution, Q: ScalarDistribution, alpha: float) -> float:
    """
    Renyi divergence D_alpha(P || Q) with its continuous extensions

    alpha = 0 gives -log Q(supp P), alpha = 1 the relative entropy and
    alpha = inf the log ess-sup of dP/dQ. A failure of absolute continuity
    returns +inf for alpha >= 1 rather than raising.

    Args:
        P: Numerator law
        Q: Reference law
        alpha: Order in [0, inf]

    Returns:
        The divergence in nats
    """
    if not alpha >= 0:
        raise DomainError(f"Renyi order must be nonnegative, got {alpha}")
    _check_same_class(P, Q, "renyi_divergence")
    _, p_atoms, q_atoms = _aligned_masses(P, Q)
    has_density = P.has_density or Q.has_density
    p = _density_or_zero(P)
    q = _density_or_zero(Q)
    breakpoints = _breakpoints(P, Q)

    def integrate(f):
        if not has_density:
            return 0.0
        value, _ = integrate_pieces(f, breakpoints, DEFAULT_TOL)
        return value

    if math.isinf(alpha):
        return _renyi_infinity(P, Q, p_atoms, q_atoms)

    if alpha == 0:
        atom_mass = float(q_atoms[p_atoms > 0].sum())
        dens_mass = integrate(lambda x: q(x) if p(x) > 0 else 0.0)
        covered = atom_mass + dens_mass
        return -math.log(covered) if covered > 0 else math.inf

    if alpha == 1:
        atom_kl = float(special.rel_entr(p_atoms, q_atoms).sum())
        if math.isinf(atom_kl):
            return math.inf
        escaped = integrate(lambda x: p(x) if q(x) <= 0 else 0.0)
        if escaped > DEFAULT_TOL:
            return math.inf
        return atom_kl + integrate(lambda x: float(special.rel_entr(p(x), q(x))) if q(x) > 0 else 0.0)

    if alpha > 1:
        if np.any((p_atoms > 0) & (q_atoms == 0)):
            return math.inf
        if integrate(lambda x: p(x) if q(x) <= 0 else 0.0) > DEFAULT_TOL:
            return math.inf

    def chernoff(pv, qv):
        if pv <= 0 or qv <= 0:
            return 0.0
        return pv ** alpha * qv ** (1.0 - alpha)

    with np.errstate(divide="ignore"):
        atom_sum = float(np.sum(np.where(
            (p_atoms > 0) & (q_atoms > 0),
            p_atoms ** alpha * np.where(q_atoms > 0, q_atoms, 1.0) ** (1.0 - alpha),
            0.0,
        )))
    total = atom_sum + integrate(lambda x: chernoff(p(x), q(x)))
    if total <= 0:
        return math.inf
    return max(math.log(total) / (alpha - 1.0), 0.0)


def tv_sandwich_bounds(tv: float, alpha: float) -> Tuple[float, float]:
    """(log(1 + tv), log(1 - tv)) / (alpha - 1) for alpha in (0, 1); the upper end is +inf at tv = 1"""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"sandwich order must lie in (0, 1), got {alpha}")
    lower = math.log1p(tv) / (alpha - 1.0)
    upper = math.inf if tv >= 1.0 else math.log1p(-tv) / (alpha - 1.0)
    return lower, upper


def renyi_tv_sandwich(P: ScalarDistribution, Q: ScalarDistribution, alpha: float) -> RenyiSandwich:
    """
    Bracket D_alpha(P || Q) for alpha in (0, 1) by the total variation distance

    lower = log(1 + TV) / (alpha - 1) and upper = log(1 - TV) / (alpha - 1),
    with TV the sup_A distance. upper is +inf when TV = 1.

    Raises:
        DomainError: alpha outside (0, 1)
        UnsupportedPairError: as tv_distance
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"sandwich order must lie in (0, 1), got {alpha}")
    tv = tv_distance(P, Q)
    value = renyi_divergence(P, Q, alpha)
    lower, upper = tv_sandwich_bounds(tv, alpha)
    return RenyiSandwich(lower, value, upper)
