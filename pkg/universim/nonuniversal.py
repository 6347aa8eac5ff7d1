"""
Simulators that know their seed law: inverse transform, atom midpoints, greedy discrete mapping
"""

import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from loguru import logger

from .distributions import (
    DiscretePmf,
    ScalarDistribution,
    SequenceLaw,
    from_pmf,
    sequence_digits,
    symbol_counts,
)
from .errors import DomainError, PreconditionError
from .universal_ac import sawtooth_fraction

GREEDY_CAP = 10 ** 7
MAX_INTERLEAVE_DIM = 16
MONOTONE_GRID_POINTS = 1001

SeedLaw = Union[ScalarDistribution, SequenceLaw]


@dataclass(frozen=True)
class Simulator:
    """Deterministic map from seed values to target values"""
    mapping: Callable
    name: str = "simulator"

    def __call__(self, x):
        return self.mapping(x)


@dataclass(frozen=True, eq=False)
class MappingTable:
    """
    Explicit mapping of every seed atom to a target value

    seed_atoms holds floats for scalar seeds and symbol-index tuples for
    sequence seeds. probabilities are the seed masses.
    """
    seed_atoms: Tuple
    probabilities: np.ndarray
    target_values: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        probs = np.ascontiguousarray(self.probabilities, dtype=np.float64)
        targets = np.ascontiguousarray(self.target_values, dtype=np.float64)
        object.__setattr__(self, "seed_atoms", tuple(self.seed_atoms))
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "target_values", targets)
        if not (len(self.seed_atoms) == probs.size == targets.size) or probs.size == 0:
            raise DomainError("mapping table needs equally many seed atoms, probabilities and targets")
        if np.any(probs < 0):
            raise DomainError("mapping table probabilities must be nonnegative")
        # Rounding in the mass sum grows with the atom count.
        if abs(probs.sum() - 1.0) > self.tol * max(1.0, math.sqrt(probs.size)):
            raise DomainError(f"mapping table probabilities sum to {probs.sum():.15g}")

    @property
    def size(self) -> int:
        return int(self.probabilities.size)

    @property
    def entries(self) -> List[Tuple]:
        return list(zip(self.seed_atoms, self.probabilities.tolist(), self.target_values.tolist()))

    def output_cdf(self, y):
        """Sum of probabilities whose target is <= y"""
        order = np.argsort(self.target_values, kind="stable")
        targets = self.target_values[order]
        cum = np.concatenate(([0.0], np.cumsum(self.probabilities[order])))
        idx = np.searchsorted(targets, np.asarray(y, dtype=float), side="right")
        values = np.clip(cum[idx], 0.0, 1.0)
        return float(values) if np.ndim(y) == 0 else values

    def output_law(self) -> ScalarDistribution:
        """Pushforward law, atoms on equal target values merged"""
        keep = self.probabilities > 0
        values, inverse = np.unique(self.target_values[keep], return_inverse=True)
        masses = np.bincount(inverse, weights=self.probabilities[keep], minlength=values.size)
        return from_pmf(DiscretePmf(values, masses, tol=1e-9), name="table output")

    def with_law(self, probabilities: Sequence[float]) -> "MappingTable":
        """Same mapping under other seed masses, aligned with seed_atoms"""
        return MappingTable(self.seed_atoms, np.asarray(probabilities, dtype=float), self.target_values, 1e-9)

    def with_targets(self, targets: Sequence[float]) -> "MappingTable":
        return MappingTable(self.seed_atoms, self.probabilities, np.asarray(targets, dtype=float), self.tol)

    def to_frame(self) -> pd.DataFrame:
        order = sorted(range(self.size), key=lambda i: self.seed_atoms[i])
        return pd.DataFrame({
            "seed_atom": [_atom_label(self.seed_atoms[i]) for i in order],
            "probability": self.probabilities[order],
            "target_value": self.target_values[order],
        })

    def to_csv(self, path: Union[str, Path]) -> Path:
        output_path = Path(path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(output_path, index=False, float_format="%.17g", lineterminator="\n")
        logger.info(f"Mapping table with {self.size} atoms saved to {output_path}")
        return output_path


def _atom_label(atom) -> str:
    if isinstance(atom, tuple):
        return " ".join(str(int(s)) for s in atom)
    return repr(float(atom))


def _require_continuous_target(Q_Y: ScalarDistribution):
    if Q_Y.has_atoms:
        raise PreconditionError(f"target {Q_Y.name} has atoms; the midpoint rule needs a continuous target")


def _safe_levels(t):
    # F_X(x) = 0 below the support; the smallest positive level maps to the target's left end.
    return np.clip(t, np.finfo(float).tiny, 1.0)


def inverse_transform_map(P_X: ScalarDistribution, Q_Y: ScalarDistribution) -> Simulator:
    """
    x -> G_Y^{-1}(F_X(x)) for a continuous seed

    Raises:
        PreconditionError: P_X has atoms
    """
    if P_X.has_atoms:
        raise PreconditionError(f"seed {P_X.name} has atoms; use atom_midpoint_map")

    def mapping(x):
        return Q_Y.quantile(_safe_levels(P_X.cdf(x)))

    return Simulator(mapping, name=f"inverse_transform({P_X.name} -> {Q_Y.name})")


def midpoint_evaluator(P: ScalarDistribution, Q_Y: ScalarDistribution) -> Simulator:
    """
    x -> G_Y^{-1}(F(x-) + P({x}) / 2)

    Continuity points reduce to the inverse transform; atoms go to the
    target quantile of their half-jump level. Covers mixtures.
    """
    _require_continuous_target(Q_Y)

    def mapping(x):
        left = np.asarray(P.cdf_left(x), dtype=float)
        right = np.asarray(P.cdf(x), dtype=float)
        level = _safe_levels(0.5 * (left + right))
        return Q_Y.quantile(level if np.ndim(x) else float(level))

    return Simulator(mapping, name=f"midpoint({P.name} -> {Q_Y.name})")


def atom_midpoint_map(P: SeedLaw, Q_Y: ScalarDistribution) -> MappingTable:
    """
    Map each seed atom to the target quantile of the midpoint of its CDF jump

    The achieved KS error equals half the largest atom mass. Works for any finite
    discrete law, sequence laws of i.i.d. products and Markov paths included.

    Args:
        P: Discrete scalar law or SequenceLaw
        Q_Y: Continuous target

    Returns:
        MappingTable over the seed atoms
    """
    _require_continuous_target(Q_Y)
    if isinstance(P, SequenceLaw):
        atoms = tuple(P.atom_labels())
        masses = P.probs
    else:
        if not P.has_atoms:
            raise PreconditionError(f"seed {P.name} has no atoms; use inverse_transform_map")
        if not P.is_discrete:
            raise PreconditionError(f"seed {P.name} is a mixture; use midpoint_evaluator")
        atoms = tuple(P.atom_values.tolist())
        masses = P.atom_masses

    keep = masses > 0
    masses = masses[keep]
    atoms = tuple(a for a, k in zip(atoms, keep) if k)
    left_cum = np.cumsum(masses) - masses
    levels = np.clip(left_cum + 0.5 * masses, np.finfo(float).tiny, 1.0)
    targets = np.asarray(Q_Y.quantile(levels), dtype=float)
    logger.debug(f"atom_midpoint_map: {masses.size} atoms, max mass {masses.max():.6g}")
    return MappingTable(atoms, masses / masses.sum(), targets, tol=1e-9)


def greedy_threshold(P_X: DiscretePmf, Q_Y: DiscretePmf) -> float:
    """Smallest sequence length for which the greedy error bound is asserted"""
    return Q_Y.size * P_X.max_mass / float(P_X.probs.min())


def greedy_error_bound(P_X: DiscretePmf, n: int) -> float:
    """Half the mass of the second least likely length-n sequence"""
    probs = np.sort(P_X.probs)
    if probs.size < 2:
        return 0.0
    return 0.5 * float(probs[1]) * float(probs[0]) ** (n - 1)


def _as_pmf(law: Union[DiscretePmf, ScalarDistribution]) -> DiscretePmf:
    return law if isinstance(law, DiscretePmf) else law.pmf


def greedy_discrete_map(
    P_X: Union[DiscretePmf, ScalarDistribution],
    Q_Y: Union[DiscretePmf, ScalarDistribution],
    n: int,
    cap: int = GREEDY_CAP,
) -> MappingTable:
    """
    Greedy mapping of length-n i.i.d. sequences onto a finite target

    Sequences are sorted by decreasing probability (ties lexicographic) and each
    is assigned to the target symbol with the largest remaining deficit (ties to
    the smallest symbol). The final |Y|+1 sequences are placed by the midpoint
    rule against the remaining deficits.

    Args:
        P_X: Seed symbol pmf
        Q_Y: Target pmf
        n: Sequence length
        cap: Maximum number of enumerated sequences

    Returns:
        MappingTable from symbol-index tuples to target support values

    Raises:
        SizeCapError: |X|^n exceeds cap
    """
    if n < 1:
        raise DomainError(f"sequence length must be positive, got {n}")
    seed = _as_pmf(P_X)
    target = _as_pmf(Q_Y)

    digits = sequence_digits(seed.size, n, cap)
    log_probs = symbol_counts(digits, seed.size) @ np.log(seed.probs)
    order = np.lexsort((np.arange(log_probs.size), -log_probs))
    masses = np.exp(log_probs[order])

    total = masses.size
    tail = min(target.size + 1, total)
    assignment = np.empty(total, dtype=np.int64)
    residual = target.probs.astype(float).copy()

    heap = [(-r, y) for y, r in enumerate(residual)]
    heapq.heapify(heap)
    for pos in range(total - tail):
        _, y = heapq.heappop(heap)
        assignment[pos] = y
        residual[y] -= masses[pos]
        heapq.heappush(heap, (-residual[y], y))

    if np.any(residual < -1e-15):
        logger.warning(f"greedy mapping overshot a target mass (n={n}); the error bound may not hold")

    deficit = np.clip(residual, 0.0, None)
    tail_masses = masses[total - tail:]
    scale = deficit.sum() / tail_masses.sum() if deficit.sum() > 0 else 1.0
    levels = (np.cumsum(tail_masses) - 0.5 * tail_masses) * scale
    deficit_cum = np.cumsum(deficit)
    tail_targets = np.searchsorted(deficit_cum, levels, side="left")
    assignment[total - tail:] = np.clip(tail_targets, 0, target.size - 1)

    atoms = [tuple(int(s) for s in row) for row in digits[order]]
    logger.debug(f"greedy_discrete_map: {total} sequences onto {target.size} symbols")
    return MappingTable(tuple(atoms), masses, target.support[assignment], tol=1e-9)


def monotone_transfer(
    sim: Union[MappingTable, Simulator, Callable],
    g: Callable[[float], float],
    domain: Tuple[float, float] = (0.0, 1.0),
) -> Union[MappingTable, Simulator]:
    """
    Compose a simulator with a non-decreasing g

    A MappingTable gets its targets transformed, so its error against the
    pushforward target can be recomputed exactly; a callable is composed.
    Monotonicity is checked on the table targets, or on a grid over domain.

    Raises:
        PreconditionError: g decreases somewhere on the checked points
    """
    if isinstance(sim, MappingTable):
        points = np.unique(sim.target_values)
    else:
        points = np.linspace(domain[0], domain[1], MONOTONE_GRID_POINTS)
    mapped = np.asarray([float(g(v)) for v in points])
    if np.any(np.diff(mapped) < -1e-12):
        raise PreconditionError("g is not non-decreasing on the checked points")

    if isinstance(sim, MappingTable):
        return sim.with_targets([float(g(v)) for v in sim.target_values])

    def mapping(x):
        inner = sim(x)
        if np.ndim(inner) == 0:
            return float(g(inner))
        return np.asarray([float(g(v)) for v in np.asarray(inner).reshape(-1)]).reshape(np.shape(inner))

    return Simulator(mapping, name=f"g o {getattr(sim, 'name', 'simulator')}")


def _interleave(u: float, conditionals: Sequence[Callable], total_bits: int) -> np.ndarray:
    d = len(conditionals)
    if d == 1:
        return np.array([float(conditionals[0](_safe_levels(u)))])

    bits = total_bits // d
    word_bits = bits * d
    word = min(int(math.floor(u * 2.0 ** word_bits)), 2 ** word_bits - 1)
    coords = [0] * d
    for k in range(word_bits):
        bit = (word >> (word_bits - 1 - k)) & 1
        coords[k % d] = (coords[k % d] << 1) | bit

    ys: List[float] = []
    for j, quantile in enumerate(conditionals):
        level = (coords[j] + 0.5) / 2.0 ** bits
        ys.append(float(quantile(level)) if j == 0 else float(quantile(level, tuple(ys))))
    return np.array(ys)


def _check_dimension(conditionals: Sequence[Callable], total_bits: int):
    d = len(conditionals)
    if d < 1:
        raise DomainError("need at least one conditional quantile")
    if d > MAX_INTERLEAVE_DIM or total_bits // d < 1:
        raise PreconditionError(
            f"{d} coordinates leave {total_bits // d} bits each; at most {MAX_INTERLEAVE_DIM} are supported"
        )


def digit_interleave_vector(
    P_X: ScalarDistribution,
    conditionals: Sequence[Callable],
    total_bits: int = 52,
) -> Simulator:
    """
    Vector-valued simulator from a continuous scalar seed

    U = F_X(x) is split into d uniforms by dealing its binary digits round-robin,
    floor(total_bits / d) digits each; coordinate j is the conditional quantile
    conditionals[j](v_j, (y_1..y_{j-1})), the first taking only the level.

    Args:
        P_X: Continuous seed law
        conditionals: Chain of conditional quantile evaluators
        total_bits: Mantissa digits shared between the coordinates

    Returns:
        Simulator mapping x to an array of length d
    """
    if P_X.has_atoms:
        raise PreconditionError(f"seed {P_X.name} has atoms")
    _check_dimension(conditionals, total_bits)

    def mapping(x):
        return _interleave(float(P_X.cdf(x)), conditionals, total_bits)

    return Simulator(mapping, name=f"interleave({P_X.name}, d={len(conditionals)})")


def universal_vector_map(delta: float, conditionals: Sequence[Callable], total_bits: int = 52) -> Simulator:
    """Seed-agnostic vector simulator: sawtooth offset onto [0, 1], then digit interleaving"""
    if not delta > 0:
        raise DomainError(f"cell width must be positive, got {delta}")
    _check_dimension(conditionals, total_bits)

    def mapping(x):
        return _interleave(float(sawtooth_fraction(x, delta)), conditionals, total_bits)

    return Simulator(mapping, name=f"universal_vector(delta={delta:g}, d={len(conditionals)})")
