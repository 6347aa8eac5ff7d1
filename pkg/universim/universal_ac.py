"""
Universal sawtooth simulation for absolutely continuous seeds
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from loguru import logger

from .distributions import DiscretePmf, ScalarDistribution, from_pmf
from .errors import DomainError, NumericError, PreconditionError
from .numerics import integrate_pieces, refine_maximum, top_local_maxima

U_GRID_POINTS = 10_000
SERIES_RESIDUAL = 1e-12
CELL_MASS_FLOOR = 1e-15
CELL_NODES = 65
CELL_CHUNK = 1024
DERIVATIVE_STEP = 1e-6
WINDOW_STARTS = 1000
WINDOW_OFFSETS = 100
WINDOW_MASS_FLOOR = 1e-12


def _check_delta(delta: float):
    if not (delta > 0 and math.isfinite(delta)):
        raise DomainError(f"cell width must be a positive real, got {delta}")


def sawtooth_fraction(x, delta: float):
    """
    In-cell offset (x - i*delta) / delta in (0, 1] over cells (i*delta, (i+1)*delta]

    Multiples of delta belong to the cell on their left and map to 1.
    """
    q = np.asarray(x, dtype=float) / delta
    frac = q - (np.ceil(q) - 1.0)
    frac = np.where(frac <= 0.0, frac + 1.0, frac)
    frac = np.clip(frac, np.finfo(float).tiny, 1.0)
    return float(frac) if np.ndim(x) == 0 else frac


@dataclass(frozen=True)
class SawtoothSimulator:
    """Seed-agnostic map x -> G_Y^{-1}(in-cell offset of x)"""
    delta: float
    target: ScalarDistribution

    def __post_init__(self):
        _check_delta(self.delta)

    def target_quantile(self, t):
        return self.target.quantile(t)

    def target_cdf(self, y):
        return self.target.cdf(y)

    def __call__(self, x):
        return sawtooth_eval(self, x)


def sawtooth_eval(sim: SawtoothSimulator, x):
    """G_Y^{-1} of the half-open-cell offset of x"""
    return sim.target.quantile(sawtooth_fraction(x, sim.delta))


def sawtooth_pushforward(sim: SawtoothSimulator, seed: ScalarDistribution) -> ScalarDistribution:
    """Exact output law of the sawtooth map for a discrete seed"""
    if not seed.is_discrete:
        raise PreconditionError("the sawtooth pushforward is only tabulated for discrete seeds")
    outputs = np.asarray(sim(seed.atom_values), dtype=float).reshape(-1)
    values, inverse = np.unique(outputs, return_inverse=True)
    masses = np.bincount(inverse, weights=seed.atom_masses, minlength=values.size)
    return from_pmf(DiscretePmf(values, masses, tol=1e-9), name=f"sawtooth({seed.name}, {sim.delta:g})")


# ---------------------------------------------------------------------------
# Cell bookkeeping
# ---------------------------------------------------------------------------

def _cell_range(dist: ScalarDistribution, delta: float) -> np.ndarray:
    lo, hi = dist.support_hint
    i_lo = math.ceil(lo / delta) - 2
    i_hi = math.ceil(hi / delta) + 1
    return np.arange(i_lo, i_hi + 1, dtype=np.int64)


def _cell_masses(dist: ScalarDistribution, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    idx = _cell_range(dist, delta)
    masses = np.asarray(dist.cdf((idx + 1) * delta)) - np.asarray(dist.cdf(idx * delta))
    return idx, np.clip(masses, 0.0, None)


def _series_cells(dist: ScalarDistribution, delta: float) -> np.ndarray:
    """Cell indices by decreasing mass, dropped once the residual mass is below SERIES_RESIDUAL"""
    idx, masses = _cell_masses(dist, delta)
    order = np.argsort(-masses, kind="stable")
    residual = 1.0 - np.cumsum(masses[order])
    cut = np.flatnonzero(residual < SERIES_RESIDUAL)
    keep = order[: cut[0] + 1] if cut.size else order
    keep = keep[masses[keep] > 0]
    logger.debug(f"sawtooth series for {dist.name}, delta={delta:g}: {keep.size} of {idx.size} cells")
    return np.sort(idx[keep])


def _offset_sum(cells: np.ndarray, delta: float, u: np.ndarray, func: Callable, base: Optional[Callable] = None):
    """sum_i func(i*delta + delta*u) - base(i*delta), chunked over cells"""
    total = np.zeros(u.shape)
    for start in range(0, cells.size, CELL_CHUNK):
        left = cells[start:start + CELL_CHUNK] * delta
        values = np.asarray(func(left[:, None] + delta * u[None, :]))
        if base is not None:
            values = values - np.asarray(base(left))[:, None]
        total += values.sum(axis=0)
    return total


# ---------------------------------------------------------------------------
# Averaged density and TV bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AveragedDensity:
    """Piecewise-constant density whose cell means match the seed's cell masses"""
    delta: float
    cell_index: np.ndarray
    cell_means: np.ndarray
    source: str = ""

    @property
    def total_mass(self) -> float:
        return float(self.cell_means.sum() * self.delta)

    def __call__(self, x):
        cell = np.ceil(np.asarray(x, dtype=float) / self.delta).astype(np.int64) - 1
        pos = np.searchsorted(self.cell_index, cell)
        pos_c = np.clip(pos, 0, self.cell_index.size - 1)
        values = np.where(self.cell_index[pos_c] == cell, self.cell_means[pos_c], 0.0)
        return float(values) if np.ndim(x) == 0 else values


def averaged_density(
    p: Union[ScalarDistribution, Callable[[float], float]],
    delta: float,
    support: Optional[Tuple[float, float]] = None,
) -> AveragedDensity:
    """
    Cell means (1/delta) * int_cell p over cells (i*delta, (i+1)*delta]

    A law carrying a CDF gets exact cell masses from CDF differences, and the
    mass outside the covered cells is added to the two boundary cells. A bare
    density callable is integrated per cell by adaptive Simpson over support.

    Args:
        p: Seed law, or a density evaluator
        delta: Cell width
        support: Interval to cover; defaults to the law's support hint

    Returns:
        AveragedDensity over the covered cells

    Raises:
        NumericError: a cell integral is not finite
    """
    _check_delta(delta)
    if isinstance(p, ScalarDistribution):
        if not p.has_density or p.has_atoms:
            raise PreconditionError(f"{p.name} is not absolutely continuous")
        idx, masses = _cell_masses(p, delta)
        carrying = np.flatnonzero(masses > 0)
        idx, masses = idx[carrying[0]:carrying[-1] + 1], masses[carrying[0]:carrying[-1] + 1].copy()
        masses[0] += float(p.cdf(idx[0] * delta))
        masses[-1] += 1.0 - float(p.cdf((idx[-1] + 1) * delta))
        return AveragedDensity(delta, idx, masses / delta, p.name)

    if support is None:
        raise DomainError("a bare density needs an explicit support interval")
    lo, hi = support
    # cells meeting (lo, hi] in positive length only
    idx = np.arange(math.floor(lo / delta), math.ceil(hi / delta), dtype=np.int64)
    means = np.empty(idx.size)
    for k, i in enumerate(idx):
        a = max(i * delta, lo)
        b = min((i + 1) * delta, hi)
        value, _ = integrate_pieces(p, [a, b]) if b > a else (0.0, 0.0)
        if not math.isfinite(value):
            raise NumericError(f"cell integral is not finite on ({a:g}, {b:g}]", cell_index=int(i))
        means[k] = value / delta
    return AveragedDensity(delta, idx, means, getattr(p, "__name__", "density"))


def _positive_part(dist: ScalarDistribution, delta: float, cells: np.ndarray, means: np.ndarray) -> np.ndarray:
    """
    int_cell [p - mean]^+ per cell

    The positive set is located between CELL_NODES nodes per cell, crossings are
    bisected, and every positive segment contributes F(b) - F(a) - mean * (b - a).
    """
    out = np.zeros(cells.size)
    grid = np.linspace(0.0, 1.0, CELL_NODES)
    for start in range(0, cells.size, CELL_CHUNK):
        sl = slice(start, start + CELL_CHUNK)
        m = means[sl][:, None]
        xs = cells[sl][:, None] * delta + delta * grid[None, :]
        excess = np.asarray(dist.density(xs)) - m
        positive = ~(excess <= 0.0)
        cdf = np.asarray(dist.cdf(xs))

        a, b = xs[:, :-1], xs[:, 1:]
        pa, pb = positive[:, :-1], positive[:, 1:]
        mm = np.broadcast_to(m, a.shape)
        contrib = np.where(pa & pb, cdf[:, 1:] - cdf[:, :-1] - mm * (b - a), 0.0)

        rows, cols = np.nonzero(pa != pb)
        if rows.size:
            lo = a[rows, cols].copy()
            hi = b[rows, cols].copy()
            level = mm[rows, cols]
            left_positive = pa[rows, cols]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                mid_positive = ~(np.asarray(dist.density(mid)) - level <= 0.0)
                same = mid_positive == left_positive
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
            cross = 0.5 * (lo + hi)
            f_cross = np.asarray(dist.cdf(cross))
            seg = np.where(
                left_positive,
                f_cross - cdf[rows, cols] - level * (cross - a[rows, cols]),
                cdf[rows, cols + 1] - f_cross - level * (b[rows, cols] - cross),
            )
            contrib[rows, cols] += seg
        out[sl] = np.clip(contrib.sum(axis=1), 0.0, None)
    return out


def tv_upper_bound(p: ScalarDistribution, delta: float) -> float:
    """
    2 * int [p - p_hat]^+ for the cell-averaged density p_hat

    Cells lighter than CELL_MASS_FLOOR are skipped.
    """
    _check_delta(delta)
    avg = averaged_density(p, delta)
    heavy = avg.cell_means * delta >= CELL_MASS_FLOOR
    per_cell = _positive_part(p, delta, avg.cell_index[heavy], avg.cell_means[heavy])
    bound = 2.0 * float(per_cell.sum())
    logger.debug(f"tv_upper_bound({p.name}, delta={delta:g}) = {bound:.6g} over {int(heavy.sum())} cells")
    return bound


# ---------------------------------------------------------------------------
# Output law of the sawtooth map
# ---------------------------------------------------------------------------

def _u_grid() -> np.ndarray:
    return np.linspace(0.0, 1.0, U_GRID_POINTS + 1)[1:]


def _midpoint_u_grid() -> np.ndarray:
    return (np.arange(U_GRID_POINTS) + 0.5) / U_GRID_POINTS


def sawtooth_offset_cdf(dist: ScalarDistribution, delta: float, u, left: bool = False):
    """
    CDF of the in-cell offset, sum_i [F(i*delta + delta*u) - F(i*delta)]

    With left set, the left limit in u is returned instead.
    """
    _check_delta(delta)
    cells = _series_cells(dist, delta)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    func = dist.cdf_left if left else dist.cdf
    values = np.clip(_offset_sum(cells, delta, u_arr, func, dist.cdf), 0.0, 1.0)
    return float(values[0]) if np.ndim(u) == 0 else values


def exact_ks_sawtooth(dist: ScalarDistribution, delta: float, target: Optional[ScalarDistribution] = None) -> float:
    """
    KS distance between the sawtooth output and its target

    For a continuous target this is sup_u |S(u) - u| with S the offset CDF,
    which also bounds the error for any other target. A discrete target only
    sees S at its cumulative levels. Jumps of S at offsets of seed atoms are
    checked from both sides.

    Args:
        dist: Seed law, any class
        delta: Cell width
        target: Target law, continuous when omitted

    Returns:
        The KS distance
    """
    _check_delta(delta)
    cells = _series_cells(dist, delta)

    def offset_cdf(u: np.ndarray, left: bool = False) -> np.ndarray:
        func = dist.cdf_left if left else dist.cdf
        return _offset_sum(cells, delta, u, func, dist.cdf)

    if target is not None and target.is_discrete:
        levels = np.clip(np.cumsum(target.atom_masses), 0.0, 1.0)
        return float(np.abs(offset_cdf(levels) - levels).max())

    u = _u_grid()
    gap = np.abs(offset_cdf(u) - u)
    best = float(gap.max())

    if dist.has_atoms:
        jumps = np.unique(sawtooth_fraction(dist.atom_values, delta))
        best = max(best, float(np.abs(offset_cdf(jumps) - jumps).max()))
        best = max(best, float(np.abs(offset_cdf(jumps, left=True) - jumps).max()))

    def abs_gap(x: float) -> float:
        return abs(float(offset_cdf(np.array([x]))[0]) - x)

    for k in top_local_maxima(gap, count=3):
        lo = u[k - 1] if k > 0 else 0.0
        hi = u[min(k + 1, u.size - 1)]
        best = max(best, refine_maximum(abs_gap, lo, hi))

    logger.debug(f"exact_ks_sawtooth({dist.name}, delta={delta:g}) = {best:.6g}")
    return min(best, 1.0)


def offset_density(dist: ScalarDistribution, delta: float, u) -> np.ndarray:
    """Likelihood ratio r(u) = delta * sum_i p(i*delta + delta*u) of the offset against Unif(0, 1]"""
    if not dist.has_density or dist.has_atoms:
        raise PreconditionError(f"{dist.name} has no density")
    cells = _series_cells(dist, delta)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    return delta * _offset_sum(cells, delta, u_arr, dist.density)


def sawtooth_output_tv(dist: ScalarDistribution, delta: float) -> float:
    """TV between the sawtooth output and a continuous target, 1/2 int |r - 1|"""
    _check_delta(delta)
    u = _midpoint_u_grid()
    r = offset_density(dist, delta, u)
    return 0.5 * float(np.mean(np.abs(r - 1.0)))


# ---------------------------------------------------------------------------
# Rates and smoothness
# ---------------------------------------------------------------------------

def rate_slope(dist: ScalarDistribution, include_jumps: bool = False) -> float:
    """
    int |p'| over the interior of the support

    Returns +inf for unbounded densities. Boundary jumps of the density are
    added as their magnitudes only when include_jumps is set.
    """
    if not dist.has_density:
        raise PreconditionError(f"{dist.name} has no density")
    if not math.isfinite(dist.density_bound):
        return math.inf

    if dist.density_derivative is not None:
        derivative = dist.density_derivative
    else:
        def derivative(x):
            return (np.asarray(dist.density(x + DERIVATIVE_STEP)) - np.asarray(dist.density(x - DERIVATIVE_STEP))) / (
                2.0 * DERIVATIVE_STEP
            )

    lo, hi = dist.support_hint
    quartiles = np.asarray(dist.quantile(np.array([0.25, 0.5, 0.75])), dtype=float).tolist()
    points = sorted({lo, hi, *quartiles, *(x for x, _ in dist.density_jumps if lo <= x <= hi)})
    value, err = integrate_pieces(lambda x: abs(float(derivative(x))), points)
    if include_jumps:
        value += sum(abs(size) for _, size in dist.density_jumps)
    logger.debug(f"rate_slope({dist.name}) = {value:.8g} (err~{err:.2g})")
    return value


def smoothness_defect(dist: ScalarDistribution, delta: float) -> float:
    """
    sup over windows [x1, x1 + delta] of |(F(x1 + x) - F(x1)) / (F(x1 + delta) - F(x1)) - x / delta|

    Window starts are a grid over [lo, hi - delta] of the support hint plus every
    atom and every atom minus delta inside that range; offsets are multiples of
    delta / WINDOW_OFFSETS, compared through right values and left limits.
    Windows carrying at most WINDOW_MASS_FLOOR are skipped.
    """
    _check_delta(delta)
    lo, hi = dist.support_hint
    last = hi - delta
    if last < lo:
        logger.warning(f"window width {delta:g} exceeds the support of {dist.name}")
        last = lo

    starts = [np.linspace(lo, last, WINDOW_STARTS)]
    if dist.has_atoms:
        starts.append(dist.atom_values)
        starts.append(dist.atom_values - delta)
    x1 = np.unique(np.concatenate(starts))
    x1 = x1[(x1 >= lo) & (x1 <= last)]

    offsets = delta * np.arange(1, WINDOW_OFFSETS + 1) / WINDOW_OFFSETS
    ratios = offsets / delta
    best = 0.0
    for start in range(0, x1.size, CELL_CHUNK):
        xs = x1[start:start + CELL_CHUNK]
        base = np.asarray(dist.cdf(xs))
        mass = np.asarray(dist.cdf(xs + delta)) - base
        heavy = mass > WINDOW_MASS_FLOOR
        if not heavy.any():
            continue
        xs, base, mass = xs[heavy], base[heavy], mass[heavy]
        points = xs[:, None] + offsets[None, :]
        for evaluator in (dist.cdf, dist.cdf_left):
            rel = (np.asarray(evaluator(points)) - base[:, None]) / mass[:, None]
            best = max(best, float(np.abs(rel - ratios[None, :]).max()))
    return best


# ---------------------------------------------------------------------------
# Renyi error
# ---------------------------------------------------------------------------

def renyi_sawtooth(dist: ScalarDistribution, delta: float, alpha: float, reverse: bool = False) -> float:
    """
    Renyi divergence between the sawtooth output and a continuous target

    Computed from the offset likelihood ratio r(u) on a midpoint grid:
    forward D_alpha(P_Y || Q_Y) = log int r^alpha / (alpha - 1),
    reverse D_alpha(Q_Y || P_Y) = log int r^(1 - alpha) / (alpha - 1).

    Args:
        dist: Absolutely continuous seed
        delta: Cell width
        alpha: Order in [0, inf]
        reverse: Swap the arguments of the divergence

    Returns:
        The divergence in nats, +inf when r vanishes on a set the order cannot ignore
    """
    _check_delta(delta)
    if not alpha >= 0:
        raise DomainError(f"Renyi order must be nonnegative, got {alpha}")
    u = _midpoint_u_grid()
    r = offset_density(dist, delta, u)
    positive = r > 0

    if math.isinf(alpha):
        if reverse:
            low = float(r.min())
            return math.inf if low <= 0 else max(-math.log(low), 0.0)
        return max(math.log(float(r.max())), 0.0)

    if alpha == 0:
        covered = float(np.mean(positive)) if not reverse else float(np.mean(r))
        return max(-math.log(covered), 0.0) if covered > 0 else math.inf

    if alpha == 1:
        if reverse:
            if not positive.all():
                return math.inf
            return max(-float(np.mean(np.log(r))), 0.0)
        rlogr = np.where(positive, r * np.log(np.where(positive, r, 1.0)), 0.0)
        return max(float(np.mean(rlogr)), 0.0)

    power = 1.0 - alpha if reverse else alpha
    if reverse and alpha > 1 and not positive.all():
        return math.inf
    with np.errstate(divide="ignore"):
        integrand = np.where(positive, np.where(positive, r, 1.0) ** power, 0.0)
    total = float(np.mean(integrand))
    if total <= 0:
        return math.inf
    return max(math.log(total) / (alpha - 1.0), 0.0)
