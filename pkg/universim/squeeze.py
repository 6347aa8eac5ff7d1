"""
Periodicized functions and their asymptotic decorrelation from integrable functions
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from loguru import logger

from .distributions import ScalarDistribution
from .errors import DomainError, NumericError, PreconditionError
from .universal_ac import sawtooth_fraction

SIMPSON_NODES = 33
ESSSUP_GRID = 10_001
DIRAC_GRID = 10_000

Integrable = Union[ScalarDistribution, Callable]


@dataclass(frozen=True)
class PeriodicizedFunction:
    """g compressed onto every cell (i*delta, (i+1)*delta]: x -> g(a + (b - a) * offset(x))"""
    base: Callable
    a: float
    b: float
    delta: float

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError(f"need a < b, got [{self.a}, {self.b}]")
        if not self.delta > 0:
            raise DomainError(f"period must be positive, got {self.delta}")

    def __call__(self, x):
        s = self.a + (self.b - self.a) * np.asarray(sawtooth_fraction(x, self.delta))
        values = np.broadcast_to(np.asarray(self.base(s), dtype=float), np.shape(s))
        return float(values) if np.ndim(x) == 0 else np.array(values)

    def on_cell(self, t, *rest) -> np.ndarray:
        """
        Values on one closed cell at relative offsets t in [0, 1], extra arguments passed through

        Offset 0 is the limit from inside the cell, so the same nodes serve every cell.
        """
        s = self.a + (self.b - self.a) * np.asarray(t, dtype=float)
        return _sample(self.base, s, *rest)

    def esssup(self, nodes: int = ESSSUP_GRID) -> float:
        """sup |g| over one period on a uniform grid"""
        return float(np.abs(self.on_cell(np.linspace(0.0, 1.0, nodes))).max())


@dataclass(frozen=True)
class CorrelationDefect:
    L_delta: float
    L: float
    defect: float
    bound: float
    truncated_mass: float = 0.0


def _simpson_weights(nodes: int) -> np.ndarray:
    weights = np.ones(nodes)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return weights / (3.0 * (nodes - 1))


def _resolve_integrand(f: Integrable, support: Optional[Tuple[float, float]]):
    """Vectorized integrand vanishing off support, the support, and the mass left outside it"""
    if isinstance(f, ScalarDistribution):
        if not f.has_density:
            raise PreconditionError(f"{f.name} has no density")
        lo, hi = support if support is not None else f.support_hint
        truncated = 1.0 - (float(f.cdf(hi)) - float(f.cdf_left(lo)))
        density = f.density
    else:
        if support is None:
            raise DomainError("a bare integrand needs an explicit finite support")
        lo, hi = support
        truncated = math.nan
        density = f
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise DomainError(f"support must be a finite interval, got ({lo}, {hi})")

    def integrand(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.broadcast_to(np.asarray(density(x), dtype=float), x.shape)
        values = np.where((x >= lo) & (x <= hi), values, 0.0)
        return np.where(np.isfinite(values), values, 0.0)

    return integrand, (lo, hi), max(truncated, 0.0) if not math.isnan(truncated) else truncated


def _cell_lefts(support: Tuple[float, float], delta: float) -> np.ndarray:
    lo, hi = support
    first = math.floor(lo / delta + 1e-9)
    last = math.ceil(hi / delta - 1e-9)
    return np.arange(first, max(last, first + 1), dtype=np.int64) * delta


def _cell_values(integrand: Callable, support, delta: float, t: np.ndarray) -> np.ndarray:
    lefts = _cell_lefts(support, delta)
    return integrand(lefts[:, None] + delta * t[None, :])


def _cell_l1(values: np.ndarray, weights: np.ndarray, delta: float) -> Tuple[float, float]:
    """(int f, sum_i int_cell |f - cell mean|) by composite Simpson on each cell"""
    cell_means = values @ weights
    total = delta * float(cell_means.sum())
    l1 = delta * float((np.abs(values - cell_means[:, None]) @ weights).sum())
    return total, l1


def _sample(g: Callable, *args) -> np.ndarray:
    shape = np.broadcast(*args).shape
    return np.broadcast_to(np.asarray(g(*args), dtype=float), shape)


def correlation_defect(
    f: Integrable,
    g: Callable,
    delta: float,
    support: Optional[Tuple[float, float]] = None,
    interval: Tuple[float, float] = (0.0, 1.0),
) -> CorrelationDefect:
    """
    Compare int f * g_delta with (1 / (b - a)) int f * int g

    Both integrals, and the bound esssup|g| * sum_i int_cell |f - f_hat|, use the
    same composite Simpson nodes on every cell.

    Args:
        f: Integrable function (or a law with a density), zero off support
        g: Bounded vectorized function on interval
        delta: Period
        support: Finite support of f; a law's support hint by default
        interval: [a, b] on which g is given

    Returns:
        CorrelationDefect with the truncated tail mass of f
    """
    g_delta = PeriodicizedFunction(g, *interval, delta)
    integrand, support, truncated = _resolve_integrand(f, support)
    t = np.linspace(0.0, 1.0, SIMPSON_NODES)
    weights = _simpson_weights(SIMPSON_NODES)
    g_nodes = g_delta.on_cell(t)

    values = _cell_values(integrand, support, delta, t)
    total, l1 = _cell_l1(values, weights, delta)
    L_delta = delta * float((values @ (weights * g_nodes)).sum())
    L = total * float(weights @ g_nodes)
    if not (math.isfinite(L_delta) and math.isfinite(L)):
        raise NumericError(f"correlation integrals are not finite at delta={delta:g}")

    esssup = max(g_delta.esssup(), float(np.abs(g_nodes).max()))
    result = CorrelationDefect(L_delta, L, abs(L_delta - L), esssup * l1, truncated)
    logger.debug(f"correlation_defect(delta={delta:g}): defect={result.defect:.6g}, bound={result.bound:.6g}")
    return result


def correlation_defect_bivariate(
    f: Integrable,
    g: Callable,
    delta: float,
    y_grid: np.ndarray,
    support: Optional[Tuple[float, float]] = None,
    interval: Tuple[float, float] = (0.0, 1.0),
) -> CorrelationDefect:
    """
    L1 distance over y between L_delta(y) = int f(x) g_delta(x, y) dx and L(y)

    g(s, y) must broadcast over arrays. The defect is integrated over y_grid by
    the trapezoid rule; the bound is esssup_s int |g(s, y)| dy * sum_i int_cell |f - f_hat|.
    L_delta and L in the result are the y-integrals of the two curves.
    """
    g_delta = PeriodicizedFunction(g, *interval, delta)
    y = np.asarray(y_grid, dtype=float)
    if y.ndim != 1 or y.size < 2 or np.any(np.diff(y) <= 0):
        raise DomainError("y grid must be strictly increasing with at least two points")
    integrand, support, truncated = _resolve_integrand(f, support)
    t = np.linspace(0.0, 1.0, SIMPSON_NODES)
    weights = _simpson_weights(SIMPSON_NODES)

    values = _cell_values(integrand, support, delta, t)
    total, l1 = _cell_l1(values, weights, delta)
    g_nodes = g_delta.on_cell(t[:, None], y[None, :])
    curve_delta = delta * ((weights * values.sum(axis=0)) @ g_nodes)
    curve = total * (weights @ g_nodes)
    defect = float(integrate.trapezoid(np.abs(curve_delta - curve), y))

    g_fine = g_delta.on_cell(np.linspace(0.0, 1.0, 1001)[:, None], y[None, :])
    esssup = max(
        float(integrate.trapezoid(np.abs(g_fine), y, axis=1).max()),
        float(integrate.trapezoid(np.abs(g_nodes), y, axis=1).max()),
    )
    return CorrelationDefect(
        float(integrate.trapezoid(curve_delta, y)),
        float(integrate.trapezoid(curve, y)),
        defect,
        esssup * l1,
        truncated,
    )


def correlation_defect_dirac(
    f: Integrable,
    g3: Callable,
    g2: Callable,
    delta: float,
    support: Optional[Tuple[float, float]] = None,
    interval: Tuple[float, float] = (0.0, 1.0),
) -> CorrelationDefect:
    """
    L1 defect for g(s, y) = g3(s) * dirac(y - g2(s)) with g2 strictly monotone

    Substituting y = g2(s) removes the Dirac term: the defect becomes
    mean over s of |g3(s)| * |delta * sum_i f(x_i(s)) - int f|, evaluated on a
    midpoint grid of DIRAC_GRID points. The bound uses esssup|g3|.

    Raises:
        PreconditionError: g2 is not strictly monotone on the grid
    """
    if not delta > 0:
        raise DomainError(f"period must be positive, got {delta}")
    a, b = interval
    integrand, support, truncated = _resolve_integrand(f, support)

    u = (np.arange(DIRAC_GRID) + 0.5) / DIRAC_GRID
    s = a + (b - a) * u
    steps = np.diff(_sample(g2, s))
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise PreconditionError("g2 must be strictly monotone on the interval")

    t = np.linspace(0.0, 1.0, SIMPSON_NODES)
    weights = _simpson_weights(SIMPSON_NODES)
    total, l1 = _cell_l1(_cell_values(integrand, support, delta, t), weights, delta)

    lefts = _cell_lefts(support, delta)
    folded = np.zeros(u.size)
    for start in range(0, lefts.size, 1024):
        block = lefts[start:start + 1024]
        folded += integrand(block[:, None] + delta * u[None, :]).sum(axis=0)
    folded *= delta

    g3_values = _sample(g3, s)
    defect = float(np.mean(np.abs(g3_values) * np.abs(folded - total)))
    esssup = float(np.abs(g3_values).max())
    return CorrelationDefect(
        float(np.mean(g3_values * folded)),
        float(np.mean(g3_values)) * total,
        defect,
        esssup * l1,
        truncated,
    )
