"""
One-dimensional probability laws with CDF, quantile and density/pmf evaluators
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from loguru import logger

from .errors import ConfigError, DomainError, PreconditionError, SizeCapError
from .numerics import bisect_increasing

QUANTILE_TOL = 1e-10
QUANTIZE_MASS_FLOOR = 1e-15
# Relative slack when locating lattice atoms i/n from floating point arguments.
LATTICE_SNAP = 1e-9
CANTOR_DIGITS = 64

ArrayLike = np.ndarray


class ClassTag(Enum):
    """Lebesgue-decomposition class of a law"""
    DISCRETE = "discrete"
    ABSOLUTELY_CONTINUOUS = "absolutely_continuous"
    SINGULAR_CONTINUOUS = "singular_continuous"
    MIXTURE = "mixture"


def _shaped(x, values):
    """Return a float for scalar input, an array otherwise"""
    if np.ndim(x) == 0:
        return float(np.asarray(values).reshape(-1)[0])
    return np.asarray(values, dtype=float)


@dataclass(frozen=True, eq=False)
class DiscretePmf:
    """Finite pmf on strictly ascending real support"""
    support: np.ndarray
    probs: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        support = np.ascontiguousarray(self.support, dtype=np.float64)
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

        if support.ndim != 1 or probs.shape != support.shape or support.size == 0:
            raise DomainError("support and probs must be non-empty 1-D arrays of equal length")
        if np.any(np.diff(support) <= 0):
            raise DomainError("support must be strictly ascending")
        if np.any(probs <= 0):
            raise DomainError("pmf masses must be positive")
        if abs(probs.sum() - 1.0) > self.tol:
            raise DomainError(f"pmf masses sum to {probs.sum():.15g}, expected 1 within {self.tol}")

    @cached_property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.probs)

    @property
    def size(self) -> int:
        return int(self.support.size)

    @property
    def max_mass(self) -> float:
        return float(self.probs.max())

    def cdf(self, x):
        idx = np.searchsorted(self.support, np.asarray(x, dtype=float), side="right")
        cum = np.concatenate(([0.0], self.cumulative))
        return _shaped(x, np.clip(cum[idx], 0.0, 1.0))

    def cdf_left(self, x):
        idx = np.searchsorted(self.support, np.asarray(x, dtype=float), side="left")
        cum = np.concatenate(([0.0], self.cumulative))
        return _shaped(x, np.clip(cum[idx], 0.0, 1.0))

    def quantile(self, t):
        t_arr = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.cumulative, t_arr - 1e-13, side="left")
        idx = np.clip(idx, 0, self.size - 1)
        return _shaped(t, self.support[idx])


@dataclass(frozen=True, eq=False)
class ScalarDistribution:
    """
    A one-dimensional law

    Evaluators accept scalars or numpy arrays. Atoms are stored as parallel
    value/mass arrays; for mixtures the masses sum to the discrete weight.
    """
    name: str
    class_tag: ClassTag
    cdf_fn: Callable
    support_hint: Tuple[float, float]
    quantile_fn: Optional[Callable] = None
    density_fn: Optional[Callable] = None
    cdf_left_fn: Optional[Callable] = None
    atom_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    atom_masses: np.ndarray = field(default_factory=lambda: np.empty(0))
    density_derivative: Optional[Callable] = None
    density_jumps: Tuple[Tuple[float, float], ...] = ()
    density_bound: float = math.inf
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.ascontiguousarray(self.atom_values, dtype=np.float64)
        masses = np.ascontiguousarray(self.atom_masses, dtype=np.float64)
        object.__setattr__(self, "atom_values", values)
        object.__setattr__(self, "atom_masses", masses)
        if values.shape != masses.shape:
            raise DomainError("atom values and masses must have equal length")
        if values.size and np.any(np.diff(values) <= 0):
            raise DomainError("atoms must be strictly ascending")
        lo, hi = self.support_hint
        if not lo <= hi:
            raise DomainError(f"support hint {self.support_hint} is not an interval")

    # -- evaluators -------------------------------------------------------

    def cdf(self, x):
        return _shaped(x, np.clip(self.cdf_fn(np.asarray(x, dtype=float)), 0.0, 1.0))

    def cdf_left(self, x):
        """Left limit F(x-)"""
        x_arr = np.asarray(x, dtype=float)
        if self.cdf_left_fn is not None:
            return _shaped(x, np.clip(self.cdf_left_fn(x_arr), 0.0, 1.0))
        values = np.asarray(self.cdf(x_arr), dtype=float)
        if self.has_atoms:
            idx = np.searchsorted(self.atom_values, x_arr)
            idx_c = np.clip(idx, 0, self.atom_values.size - 1)
            hit = self.atom_values[idx_c] == x_arr
            values = values - np.where(hit, self.atom_masses[idx_c], 0.0)
        return _shaped(x, np.clip(values, 0.0, 1.0))

    def quantile(self, t):
        """min{y : F(y) >= t} for t in (0, 1]"""
        t_arr = np.asarray(t, dtype=float)
        if np.any(~((t_arr > 0.0) & (t_arr <= 1.0))):
            raise DomainError(f"quantile level must lie in (0, 1], got {t}")
        if self.quantile_fn is not None:
            return _shaped(t, self.quantile_fn(t_arr))
        lo, hi = self.bracket
        return _shaped(t, bisect_increasing(self.cdf_fn, t_arr.reshape(-1), lo, hi, QUANTILE_TOL))

    def density(self, x):
        if self.density_fn is None:
            raise PreconditionError(f"{self.name} has no density")
        with np.errstate(divide="ignore", invalid="ignore"):
            return _shaped(x, self.density_fn(np.asarray(x, dtype=float)))

    # -- structure ----------------------------------------------------------

    @property
    def has_atoms(self) -> bool:
        return self.atom_values.size > 0

    @property
    def is_continuous(self) -> bool:
        return not self.has_atoms

    @property
    def is_discrete(self) -> bool:
        return self.class_tag is ClassTag.DISCRETE

    @property
    def has_density(self) -> bool:
        return self.density_fn is not None

    @property
    def max_atom(self) -> float:
        return float(self.atom_masses.max()) if self.has_atoms else 0.0

    @property
    def atoms(self) -> List[Tuple[float, float]]:
        return list(zip(self.atom_values.tolist(), self.atom_masses.tolist()))

    @property
    def pmf(self) -> DiscretePmf:
        if not self.is_discrete:
            raise PreconditionError(f"{self.name} is not discrete")
        return DiscretePmf(self.atom_values, self.atom_masses, tol=1e-9)

    @cached_property
    def bracket(self) -> Tuple[float, float]:
        """Support hint widened by three interquartile ranges"""
        lo, hi = self.support_hint
        if hi == lo:
            return lo - 1.0, hi + 1.0
        q25, q75 = bisect_increasing(self.cdf_fn, np.array([0.25, 0.75]), lo, hi, QUANTILE_TOL)
        iqr = max(float(q75 - q25), (hi - lo) * 1e-6)
        return lo - 3.0 * iqr, hi + 3.0 * iqr


def cdf_eval(dist: ScalarDistribution, x):
    """Right-continuous CDF value(s) of dist at x"""
    return dist.cdf(x)


def quantile_eval(dist: ScalarDistribution, t):
    """Generalized inverse min{y : F(y) >= t}; t outside (0, 1] raises DomainError"""
    return dist.quantile(t)


# ---------------------------------------------------------------------------
# Built-in laws
# ---------------------------------------------------------------------------

def uniform(a: float = 0.0, b: float = 1.0) -> ScalarDistribution:
    if not b > a:
        raise DomainError(f"uniform needs a < b, got [{a}, {b}]")
    width = b - a
    return ScalarDistribution(
        name=f"Unif[{a:g},{b:g}]",
        class_tag=ClassTag.ABSOLUTELY_CONTINUOUS,
        cdf_fn=lambda x: np.clip((x - a) / width, 0.0, 1.0),
        quantile_fn=lambda t: a + t * width,
        density_fn=lambda x: np.where((x >= a) & (x <= b), 1.0 / width, 0.0),
        density_derivative=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        density_jumps=((a, 1.0 / width), (b, 1.0 / width)),
        density_bound=1.0 / width,
        support_hint=(a, b),
        params={"kind": "uniform", "a": a, "b": b},
    )


def normal(mu: float = 0.0, sigma: float = 1.0) -> ScalarDistribution:
    if not sigma > 0:
        raise DomainError(f"normal needs sigma > 0, got {sigma}")
    norm_const = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def pdf(x):
        z = (x - mu) / sigma
        return norm_const * np.exp(-0.5 * z * z)

    return ScalarDistribution(
        name=f"N({mu:g},{sigma:g}^2)",
        class_tag=ClassTag.ABSOLUTELY_CONTINUOUS,
        cdf_fn=lambda x: special.ndtr((x - mu) / sigma),
        quantile_fn=lambda t: mu + sigma * special.ndtri(t),
        density_fn=pdf,
        density_derivative=lambda x: -(x - mu) / sigma ** 2 * pdf(x),
        density_bound=norm_const,
        support_hint=(mu - 9.0 * sigma, mu + 9.0 * sigma),
        params={"kind": "normal", "mu": mu, "sigma": sigma},
    )


def exponential(lam: float = 1.0) -> ScalarDistribution:
    if not lam > 0:
        raise DomainError(f"exponential needs lambda > 0, got {lam}")
    return ScalarDistribution(
        name=f"Exp({lam:g})",
        class_tag=ClassTag.ABSOLUTELY_CONTINUOUS,
        cdf_fn=lambda x: np.where(x > 0, -np.expm1(-lam * np.maximum(x, 0.0)), 0.0),
        quantile_fn=lambda t: -np.log1p(-t) / lam,
        density_fn=lambda x: np.where(x >= 0, lam * np.exp(-lam * np.maximum(x, 0.0)), 0.0),
        density_derivative=lambda x: np.where(x > 0, -lam * lam * np.exp(-lam * np.maximum(x, 0.0)), 0.0),
        density_jumps=((0.0, lam),),
        density_bound=lam,
        support_hint=(0.0, 40.0 / lam),
        params={"kind": "exp", "lambda": lam},
    )


def neglog() -> ScalarDistribution:
    """Density -log x on (0, 1]"""
    def cdf(x):
        xc = np.clip(x, 0.0, 1.0)
        return xc - special.xlogy(xc, xc)

    return ScalarDistribution(
        name="NegLog(0,1]",
        class_tag=ClassTag.ABSOLUTELY_CONTINUOUS,
        cdf_fn=cdf,
        density_fn=lambda x: np.where((x > 0) & (x <= 1), -np.log(np.where(x > 0, x, 1.0)), 0.0)
        + np.where(x == 0, np.inf, 0.0),
        density_derivative=lambda x: np.where((x > 0) & (x <= 1), -1.0 / np.where(x > 0, x, 1.0), 0.0),
        density_bound=math.inf,
        support_hint=(0.0, 1.0),
        params={"kind": "neglog"},
    )


def powerlaw(r: float = 0.5) -> ScalarDistribution:
    """Density (1-r) x^(-r) on (0, 1]"""
    if not 0.0 <= r < 1.0:
        raise DomainError(f"powerlaw needs 0 <= r < 1, got {r}")
    expo = 1.0 - r

    def pdf(x):
        inside = (x > 0) & (x <= 1)
        safe = np.where(inside, x, 1.0)
        values = np.where(inside, expo * safe ** (-r), 0.0)
        return values + np.where((x == 0) & (r > 0), np.inf, 0.0)

    return ScalarDistribution(
        name=f"PowerLaw(r={r:g})",
        class_tag=ClassTag.ABSOLUTELY_CONTINUOUS,
        cdf_fn=lambda x: np.clip(x, 0.0, 1.0) ** expo,
        quantile_fn=lambda t: t ** (1.0 / expo),
        density_fn=pdf,
        density_derivative=lambda x: np.where(
            (x > 0) & (x <= 1), -r * expo * np.where(x > 0, x, 1.0) ** (-r - 1.0), 0.0
        ),
        density_jumps=((1.0, expo),),
        density_bound=math.inf if r > 0 else expo,
        support_hint=(0.0, 1.0),
        params={"kind": "powerlaw", "r": r},
    )


def ramp(a: float = 0.5, b: float = 1.5) -> ScalarDistribution:
    """Linear density from a at 0 to b at 1; bounded within [min(a,b), max(a,b)]"""
    if a < 0 or b < 0 or abs(a + b - 2.0) > 1e-12:
        raise DomainError(f"ramp density needs a, b >= 0 with a + b = 2, got a={a}, b={b}")
    slope = b - a

    def quantile(t):
        if slope == 0.0:
            return t
        return (-a + np.sqrt(a * a + 2.0 * slope * t)) / slope

    return ScalarDistribution(
        name=f"Ramp[{a:g},{b:g}]",
        class_tag=ClassTag.ABSOLUTELY_CONTINUOUS,
        cdf_fn=lambda x: np.where(
            x <= 0, 0.0, np.where(x >= 1, 1.0, a * x + 0.5 * slope * np.clip(x, 0.0, 1.0) ** 2)
        ),
        quantile_fn=quantile,
        density_fn=lambda x: np.where((x >= 0) & (x <= 1), a + slope * x, 0.0),
        density_derivative=lambda x: np.where((x > 0) & (x < 1), slope, 0.0),
        density_jumps=((0.0, a), (1.0, b)),
        density_bound=max(a, b),
        support_hint=(0.0, 1.0),
        params={"kind": "bounded", "a": a, "b": b},
    )


def cantor_cdf(x):
    """
    Cantor function by ternary-digit expansion

    Digits are extracted by repeated tripling to CANTOR_DIGITS places; the
    first digit 1 terminates the expansion. Exact 0 / 1 outside [0, 1].
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.where(x_arr >= 1.0, 1.0, 0.0)
    inside = (x_arr > 0.0) & (x_arr < 1.0)

    frac = x_arr[inside].copy()
    value = np.zeros_like(frac)
    active = np.ones(frac.shape, dtype=bool)
    scale = 0.5
    for _ in range(CANTOR_DIGITS):
        frac = frac * 3.0
        digit = np.floor(frac)
        frac = frac - digit
        value = value + np.where(active & (digit >= 1.0), scale, 0.0)
        active = active & (digit != 1.0)
        scale *= 0.5
        if not active.any():
            break

    out[inside] = value
    return _shaped(x, out)


def cantor() -> ScalarDistribution:
    return ScalarDistribution(
        name="Cantor",
        class_tag=ClassTag.SINGULAR_CONTINUOUS,
        cdf_fn=cantor_cdf,
        support_hint=(0.0, 1.0),
        params={"kind": "cantor"},
    )


def pmf(support: Sequence[float], probs: Sequence[float], tol: float = 1e-12) -> ScalarDistribution:
    """Finite discrete law; zero-mass entries are dropped, support is sorted"""
    support_arr = np.asarray(support, dtype=float)
    probs_arr = np.asarray(probs, dtype=float)
    if support_arr.shape != probs_arr.shape:
        raise DomainError("pmf support and probs must have equal length")
    if np.any(probs_arr < 0):
        raise DomainError("pmf masses must be nonnegative")
    keep = probs_arr > 0
    order = np.argsort(support_arr[keep], kind="stable")
    law = DiscretePmf(support_arr[keep][order], probs_arr[keep][order], tol=tol)
    return from_pmf(law)


def from_pmf(law: DiscretePmf, name: Optional[str] = None, params: Optional[Dict] = None) -> ScalarDistribution:
    return ScalarDistribution(
        name=name or f"pmf({law.size} atoms)",
        class_tag=ClassTag.DISCRETE,
        cdf_fn=law.cdf,
        cdf_left_fn=law.cdf_left,
        quantile_fn=law.quantile,
        atom_values=law.support,
        atom_masses=law.probs,
        support_hint=(float(law.support[0]), float(law.support[-1])),
        params=params or {"kind": "pmf", "support": law.support.tolist(), "probs": law.probs.tolist()},
    )


def bernoulli(p: float) -> ScalarDistribution:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"bernoulli needs 0 <= p <= 1, got {p}")
    law = pmf([0.0, 1.0], [1.0 - p, p])
    return _renamed(law, f"Bern({p:g})", {"kind": "bernoulli", "p": p})


def point_mass(x0: float) -> ScalarDistribution:
    return _renamed(pmf([x0], [1.0]), f"delta({x0:g})", {"kind": "point", "x": x0})


def geometric(p: float) -> ScalarDistribution:
    """P(k) = p (1-p)^k on k = 0, 1, ... truncated where the tail drops below QUANTIZE_MASS_FLOOR"""
    if not 0.0 < p <= 1.0:
        raise DomainError(f"geometric needs 0 < p <= 1, got {p}")
    kmax = int(stats.geom.isf(QUANTIZE_MASS_FLOOR, p)) + 1 if p < 1.0 else 0
    ks = np.arange(kmax + 1)
    masses = stats.geom.pmf(ks + 1, p)
    return _renamed(pmf(ks, masses / masses.sum()), f"Geom({p:g})", {"kind": "geometric", "p": p})


def poisson(lam: float) -> ScalarDistribution:
    if not lam > 0:
        raise DomainError(f"poisson needs lambda > 0, got {lam}")
    kmax = int(stats.poisson.isf(QUANTIZE_MASS_FLOOR, lam)) + 1
    ks = np.arange(kmax + 1)
    masses = stats.poisson.pmf(ks, lam)
    return _renamed(pmf(ks, masses / masses.sum()), f"Poisson({lam:g})", {"kind": "poisson", "lambda": lam})


def _renamed(dist: ScalarDistribution, name: str, params: Dict) -> ScalarDistribution:
    return ScalarDistribution(
        name=name,
        class_tag=dist.class_tag,
        cdf_fn=dist.cdf_fn,
        cdf_left_fn=dist.cdf_left_fn,
        quantile_fn=dist.quantile_fn,
        atom_values=dist.atom_values,
        atom_masses=dist.atom_masses,
        support_hint=dist.support_hint,
        params=params,
    )


def mixture(weight: float, discrete: ScalarDistribution, continuous: ScalarDistribution) -> ScalarDistribution:
    """weight * discrete + (1 - weight) * continuous"""
    if not 0.0 < weight < 1.0:
        raise DomainError(f"mixture weight must lie in (0, 1), got {weight}")
    if not discrete.is_discrete or continuous.class_tag is not ClassTag.ABSOLUTELY_CONTINUOUS:
        raise PreconditionError("mixture needs a discrete part and an absolutely continuous part")
    w = weight

    def density(x):
        return (1.0 - w) * np.asarray(continuous.density(x))

    return ScalarDistribution(
        name=f"{w:g}*{discrete.name}+{1 - w:g}*{continuous.name}",
        class_tag=ClassTag.MIXTURE,
        cdf_fn=lambda x: w * np.asarray(discrete.cdf(x)) + (1.0 - w) * np.asarray(continuous.cdf(x)),
        cdf_left_fn=lambda x: w * np.asarray(discrete.cdf_left(x)) + (1.0 - w) * np.asarray(continuous.cdf(x)),
        density_fn=density,
        atom_values=discrete.atom_values,
        atom_masses=w * discrete.atom_masses,
        density_bound=(1.0 - w) * continuous.density_bound,
        support_hint=(
            min(discrete.support_hint[0], continuous.support_hint[0]),
            max(discrete.support_hint[1], continuous.support_hint[1]),
        ),
        params={"kind": "mixture", "weight": w, "discrete": discrete.params, "continuous": continuous.params},
    )


def quantize(dist: ScalarDistribution, n: int) -> ScalarDistribution:
    """
    Law of floor(nX)/n

    Atoms sit at i/n with mass F((i+1)/n) - F(i/n); atoms lighter than
    QUANTIZE_MASS_FLOOR are dropped from the atom list.

    Args:
        dist: Base law
        n: Inverse quantization step

    Returns:
        Discrete ScalarDistribution
    """
    if int(n) != n or n < 1:
        raise DomainError(f"quantization level must be a positive integer, got {n}")
    n = int(n)
    if not math.isfinite(dist.density_bound):
        logger.warning(f"Quantizing {dist.name}, whose density is unbounded")

    lo, hi = dist.support_hint
    idx = np.arange(math.floor(lo * n), math.ceil(hi * n) + 1, dtype=np.int64)
    upper = np.asarray(dist.cdf((idx + 1) / n))
    lower = np.asarray(dist.cdf(idx / n))
    masses = upper - lower
    keep = masses >= QUANTIZE_MASS_FLOOR
    values = idx[keep] / n
    masses = masses[keep]
    logger.debug(f"quantize({dist.name}, {n}): {values.size} atoms kept of {idx.size}")

    law = DiscretePmf(values, masses, tol=1e-9)

    def cdf(y):
        k = np.floor(np.asarray(y) * n + LATTICE_SNAP)
        return np.asarray(dist.cdf((k + 1.0) / n))

    def cdf_left(y):
        k = np.ceil(np.asarray(y) * n - LATTICE_SNAP)
        return np.asarray(dist.cdf(k / n))

    return ScalarDistribution(
        name=f"quantize({dist.name}, 1/{n})",
        class_tag=ClassTag.DISCRETE,
        cdf_fn=cdf,
        cdf_left_fn=cdf_left,
        quantile_fn=law.quantile,
        atom_values=law.support,
        atom_masses=law.probs,
        support_hint=(float(values[0]), float(values[-1])),
        params={"kind": "quantized", "base": dist.params, "n": n},
    )


def pushforward(dist: ScalarDistribution, g: Callable) -> ScalarDistribution:
    """Law of g(X) for a discrete X; atoms landing on the same value are merged"""
    if not dist.is_discrete:
        raise PreconditionError("pushforward is only exact for discrete laws")
    mapped = np.asarray([float(g(v)) for v in dist.atom_values])
    values, inverse = np.unique(mapped, return_inverse=True)
    masses = np.bincount(inverse, weights=dist.atom_masses, minlength=values.size)
    return from_pmf(DiscretePmf(values, masses, tol=1e-9), name=f"g#{dist.name}")


# ---------------------------------------------------------------------------
# Sequence laws
# ---------------------------------------------------------------------------

def sequence_digits(alphabet_size: int, n: int, cap: int) -> np.ndarray:
    """
    All sequences of length n over {0..alphabet_size-1} in lexicographic order

    Raises:
        SizeCapError: alphabet_size ** n exceeds cap
    """
    total = alphabet_size ** n
    if total > cap:
        raise SizeCapError(f"{alphabet_size}^{n} = {total} sequences exceeds the cap {cap:.0e}")
    dtype = np.int8 if alphabet_size <= 127 else np.int32
    index = np.arange(total, dtype=np.int64)
    digits = np.empty((total, n), dtype=dtype)
    for pos in range(n - 1, -1, -1):
        digits[:, pos] = index % alphabet_size
        index //= alphabet_size
    return digits


@dataclass(frozen=True, eq=False)
class SequenceLaw:
    """Finite law over symbol-index sequences, atoms in lexicographic order"""
    atoms: np.ndarray
    probs: np.ndarray
    alphabet: Tuple[float, ...] = ()

    def __post_init__(self):
        atoms = np.asarray(self.atoms)
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        if atoms.ndim != 2 or atoms.shape[0] != probs.size:
            raise DomainError("sequence law needs an (N, n) atom array and N masses")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise DomainError("sequence law masses must be nonnegative and sum to 1")

    @property
    def size(self) -> int:
        return int(self.probs.size)

    @property
    def length(self) -> int:
        return int(self.atoms.shape[1])

    @property
    def max_mass(self) -> float:
        return float(self.probs.max())

    def atom_labels(self) -> List[Tuple[int, ...]]:
        return [tuple(int(s) for s in row) for row in self.atoms]


def symbol_counts(digits: np.ndarray, alphabet_size: int) -> np.ndarray:
    """Per-sequence symbol count vectors, shape (N, alphabet_size)"""
    counts = np.zeros((digits.shape[0], alphabet_size), dtype=np.int64)
    for symbol in range(alphabet_size):
        counts[:, symbol] = (digits == symbol).sum(axis=1)
    return counts


def product_law(base: ScalarDistribution, n: int, cap: int = 10 ** 7) -> SequenceLaw:
    """
    i.i.d. product law of a finite discrete base over sequences of length n

    Sequence masses are computed from symbol counts so that sequences of the
    same type carry bit-identical masses.
    """
    if not base.is_discrete:
        raise PreconditionError(f"product_law needs a discrete base, got {base.class_tag.value}")
    size = base.atom_values.size
    digits = sequence_digits(size, n, cap)
    counts = symbol_counts(digits, size)
    with np.errstate(divide="ignore"):
        log_probs = counts @ np.log(base.atom_masses)
    return SequenceLaw(digits, np.exp(log_probs), tuple(base.atom_values.tolist()))


# ---------------------------------------------------------------------------
# Config literals
# ---------------------------------------------------------------------------

_LITERAL_KEYS = {
    "normal": ({"mu", "sigma"}, set()),
    "uniform": ({"a", "b"}, set()),
    "exp": ({"lambda"}, set()),
    "neglog": (set(), set()),
    "powerlaw": ({"r"}, set()),
    "bounded": ({"a", "b"}, set()),
    "pmf": (set(), {"support", "probs"}),
    "bernoulli": (set(), {"p"}),
    "point": (set(), {"x"}),
    "geometric": (set(), {"p"}),
    "poisson": (set(), {"lambda"}),
    "cantor": (set(), set()),
    "quantized": (set(), {"base", "n"}),
    "mixture": (set(), {"weight", "discrete", "continuous"}),
}


def from_literal(literal: Dict) -> ScalarDistribution:
    """
    Build a law from a config literal such as {"kind": "normal", "mu": 0, "sigma": 1}

    Raises:
        ConfigError: unknown kind, unknown key, missing key or invalid value
    """
    if not isinstance(literal, dict) or "kind" not in literal:
        raise ConfigError(f"distribution literal must be a mapping with a 'kind' key, got {literal!r}")
    kind = literal["kind"]
    if kind not in _LITERAL_KEYS:
        raise ConfigError(f"unknown distribution kind '{kind}'")

    optional, required = _LITERAL_KEYS[kind]
    keys = set(literal) - {"kind"}
    unknown = keys - optional - required
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in '{kind}' distribution literal")
    missing = required - keys
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} in '{kind}' distribution literal")

    try:
        if kind == "normal":
            return normal(float(literal.get("mu", 0.0)), float(literal.get("sigma", 1.0)))
        if kind == "uniform":
            return uniform(float(literal.get("a", 0.0)), float(literal.get("b", 1.0)))
        if kind == "exp":
            return exponential(float(literal.get("lambda", 1.0)))
        if kind == "neglog":
            return neglog()
        if kind == "powerlaw":
            return powerlaw(float(literal.get("r", 0.5)))
        if kind == "bounded":
            return ramp(float(literal.get("a", 0.5)), float(literal.get("b", 1.5)))
        if kind == "pmf":
            return pmf(literal["support"], literal["probs"], tol=1e-9)
        if kind == "bernoulli":
            return bernoulli(float(literal["p"]))
        if kind == "point":
            return point_mass(float(literal["x"]))
        if kind == "geometric":
            return geometric(float(literal["p"]))
        if kind == "poisson":
            return poisson(float(literal["lambda"]))
        if kind == "cantor":
            return cantor()
        if kind == "quantized":
            return quantize(from_literal(literal["base"]), literal["n"])
        return mixture(
            float(literal["weight"]),
            from_literal(literal["discrete"]),
            from_literal(literal["continuous"]),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as e:
        raise ConfigError(f"invalid '{kind}' distribution literal: {e}") from e
