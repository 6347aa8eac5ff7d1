"""
Universal simulation of discrete seeds by the method of types
"""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd

from loguru import logger

from .distributions import DiscretePmf, ScalarDistribution, SequenceLaw, sequence_digits, symbol_counts
from .errors import DomainError, PreconditionError, SizeCapError
from .nonuniversal import MappingTable

TYPE_CAP = 10 ** 6
SEQUENCE_CAP = 10 ** 7
MARKOV_CAP = 10 ** 6
MAX_LOOP_STATES = 12
DP_LENGTH = 2000


class TypeKind(Enum):
    IID = "iid"
    MARKOV = "markov"


@dataclass(frozen=True)
class TypeDescriptor:
    """
    Type of a sequence

    iid types carry a count per symbol; Markov types carry (window, count)
    pairs over windows of length k+1, read from the initial state onwards.
    """
    kind: TypeKind
    counts: Tuple
    n: int
    class_size: int
    initial_state: Tuple[int, ...] = ()

    def __post_init__(self):
        total = sum(self.counts) if self.kind is TypeKind.IID else sum(c for _, c in self.counts)
        if total != self.n:
            raise DomainError(f"type counts sum to {total}, expected n={self.n}")
        if self.class_size < 1:
            raise DomainError("type class must be non-empty")

    def log_sequence_prob(self, law: Union[DiscretePmf, "MarkovChainSpec"]) -> float:
        """Log-probability of any one sequence of this type"""
        with np.errstate(divide="ignore"):
            if self.kind is TypeKind.IID:
                probs = law.probs if isinstance(law, DiscretePmf) else np.asarray(law)
                return float(sum(c * math.log(p) if c else 0.0 for c, p in zip(self.counts, probs)))
            total = 0.0
            for window, count in self.counts:
                p = law.transition_prob(window[:-1], window[-1])
                if p == 0.0:
                    return -math.inf
                total += count * math.log(p)
            return total

    def class_log_prob(self, law) -> float:
        """Log-probability of the whole type class"""
        return math.log(self.class_size) + self.log_sequence_prob(law)


def _compositions(n: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Count vectors summing to n, first coordinate descending"""
    if parts == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def multinomial(n: int, counts: Sequence[int]) -> int:
    size = math.factorial(n)
    for c in counts:
        size //= math.factorial(c)
    return size


def iid_types(n: int, alphabet_size: int, cap: int = TYPE_CAP) -> List[TypeDescriptor]:
    """
    All i.i.d. types of length-n sequences with exact class sizes

    Raises:
        SizeCapError: the number of types C(n + |X| - 1, |X| - 1) exceeds cap
    """
    if n < 1 or alphabet_size < 1:
        raise DomainError(f"need n >= 1 and a non-empty alphabet, got n={n}, |X|={alphabet_size}")
    count = math.comb(n + alphabet_size - 1, alphabet_size - 1)
    if count > cap:
        raise SizeCapError(f"{count} types for n={n}, |X|={alphabet_size} exceeds the cap {cap:.0e}")
    return [
        TypeDescriptor(TypeKind.IID, counts, n, multinomial(n, counts))
        for counts in _compositions(n, alphabet_size)
    ]


def _alphabet_size(alphabet: Union[int, Sequence]) -> int:
    return int(alphabet) if isinstance(alphabet, (int, np.integer)) else len(alphabet)


def _classwise_table(digits: np.ndarray, signature: np.ndarray, Q_Y: ScalarDistribution) -> MappingTable:
    """
    Midpoint-quantile assignment inside each class of equal signature rows

    Rows of digits are in lexicographic order, so the running position inside
    a class is its lexicographic rank.
    """
    if Q_Y.has_atoms:
        raise PreconditionError(f"target {Q_Y.name} has atoms; the type-class mapping needs a continuous target")
    _, inverse, sizes = np.unique(signature, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    rank = np.empty(inverse.size, dtype=np.int64)
    rank[order] = np.arange(inverse.size) - np.repeat(starts, sizes)
    class_size = sizes[inverse]
    targets = np.asarray(Q_Y.quantile((rank + 0.5) / class_size), dtype=float)

    total = digits.shape[0]
    atoms = tuple(tuple(int(s) for s in row) for row in digits)
    logger.debug(f"type-class table: {total} sequences in {sizes.size} classes")
    return MappingTable(atoms, np.full(total, 1.0 / total), targets, tol=1e-9)


def typeclass_simulator(
    n: int,
    alphabet: Union[int, Sequence],
    Q_Y: ScalarDistribution,
    cap: int = TYPE_CAP,
) -> MappingTable:
    """
    Seed-agnostic mapping of length-n sequences through their type classes

    Inside a class of size N the sequence of lexicographic rank j goes to
    G_Y^{-1}((j + 1/2) / N). The table never reads a seed pmf; its
    probabilities are uniform placeholders, use MappingTable.with_law to
    evaluate it under a particular seed.

    Args:
        n: Sequence length
        alphabet: Alphabet size, or the alphabet itself
        Q_Y: Continuous target
        cap: Maximum number of types

    Returns:
        MappingTable keyed by symbol-index tuples
    """
    size = _alphabet_size(alphabet)
    types = math.comb(n + size - 1, size - 1)
    if types > cap:
        raise SizeCapError(f"{types} types for n={n}, |X|={size} exceeds the cap {cap:.0e}")
    digits = sequence_digits(size, n, SEQUENCE_CAP)
    return _classwise_table(digits, symbol_counts(digits, size), Q_Y)


def seed_masses(law: Union[DiscretePmf, ScalarDistribution], n: int) -> np.ndarray:
    """i.i.d. masses of all length-n sequences in lexicographic order, bit-identical within a type"""
    probs = law.probs if isinstance(law, DiscretePmf) else law.atom_masses
    digits = sequence_digits(probs.size, n, SEQUENCE_CAP)
    with np.errstate(divide="ignore"):
        return np.exp(symbol_counts(digits, probs.size) @ np.log(probs))


def _half_exp(exponent: float) -> float:
    # Vacuous bounds overflow a double for large alphabets.
    return 0.5 * math.exp(exponent) if exponent < 700.0 else math.inf


def universal_error_bound(P_X: Union[DiscretePmf, ScalarDistribution], n: int) -> float:
    """1/2 (n+1)^|X| (max_x P(x))^n, evaluated in the log domain"""
    law = P_X if isinstance(P_X, DiscretePmf) else P_X.pmf
    exponent = n * math.log(law.max_mass) + law.size * math.log(n + 1)
    return _half_exp(exponent)


def truncate_countable(P: ScalarDistribution, k: int) -> DiscretePmf:
    """
    Bucket an integer-valued law into (-inf, -k], {-k+1}, ..., {k-1}, [k, inf)

    Buckets are represented by -k..k; empty buckets are dropped.
    """
    if k < 1:
        raise DomainError(f"truncation level must be >= 1, got {k}")
    values = np.clip(np.rint(P.atom_values), -k, k).astype(np.int64)
    masses = np.bincount(values + k, weights=P.atom_masses, minlength=2 * k + 1)
    reps = np.arange(-k, k + 1)
    keep = masses > 0
    return DiscretePmf(reps[keep].astype(float), masses[keep], tol=1e-9)


def interval_quantize(F_X: ScalarDistribution, delta: float, k: int) -> DiscretePmf:
    """
    Bucket a law into (-inf, -k delta], (j delta, (j+1) delta] for j = -k..k-1, and (k delta, inf)

    Bucket j is represented by its right end; the upper tail by (k+1) delta.
    Empty buckets are dropped.
    """
    if not delta > 0 or k < 1:
        raise DomainError(f"need delta > 0 and k >= 1, got delta={delta}, k={k}")
    edges = np.arange(-k, k + 1) * delta
    cdf = np.asarray(F_X.cdf(edges))
    masses = np.concatenate(([cdf[0]], np.diff(cdf), [1.0 - cdf[-1]]))
    masses = np.clip(masses, 0.0, None)
    reps = np.arange(-k, k + 2) * delta
    keep = masses > 0
    return DiscretePmf(reps[keep], masses[keep], tol=1e-9)


def delta_for_k(k: int) -> float:
    """Cell width 1/sqrt(k) paired with truncation level k"""
    return 1.0 / math.sqrt(k)


def holder_schedule(n: int) -> Tuple[float, int]:
    """(delta, k) = (log n / n, ceil(n / sqrt(log n))) for Holder-continuous seeds"""
    if n < 3:
        raise DomainError(f"the schedule needs n >= 3, got {n}")
    log_n = math.log(n)
    return log_n / n, math.ceil(n / math.sqrt(log_n))


def type_table(types: Sequence[TypeDescriptor], law=None) -> pd.DataFrame:
    """Types as rows: counts, exact class size and (given a law) the class log-probability"""
    rows = []
    for t in types:
        if t.kind is TypeKind.IID:
            counts = " ".join(str(c) for c in t.counts)
        else:
            counts = " ".join(f"{''.join(map(str, w))}:{c}" for w, c in t.counts)
        rows.append({
            "counts": counts,
            "class_size": t.class_size,
            "log_class_prob": t.class_log_prob(law) if law is not None else math.nan,
        })
    return pd.DataFrame(rows, columns=["counts", "class_size", "log_class_prob"])


# ---------------------------------------------------------------------------
# Markov sources
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MarkovChainSpec:
    """
    Order-k Markov source on {0..state_count-1}

    transitions has one row per context in X^k, contexts in lexicographic order.
    """
    state_count: int
    order: int
    initial_state: Tuple[int, ...]
    transitions: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        table = np.ascontiguousarray(self.transitions, dtype=np.float64)
        object.__setattr__(self, "transitions", table)
        object.__setattr__(self, "initial_state", tuple(int(s) for s in self.initial_state))
        expected = (self.state_count ** self.order, self.state_count)
        if table.shape != expected:
            raise DomainError(f"transition table has shape {table.shape}, expected {expected}")
        if np.any(table < 0) or np.any(np.abs(table.sum(axis=1) - 1.0) > self.tol):
            raise DomainError("transition rows must be nonnegative and sum to 1")
        if len(self.initial_state) != self.order:
            raise DomainError(f"initial state {self.initial_state} must have length {self.order}")
        if any(not 0 <= s < self.state_count for s in self.initial_state):
            raise DomainError(f"initial state {self.initial_state} leaves the alphabet")

    def context_index(self, context: Sequence[int]) -> int:
        index = 0
        for s in context:
            index = index * self.state_count + int(s)
        return index

    def transition_prob(self, context: Sequence[int], symbol: int) -> float:
        return float(self.transitions[self.context_index(context), int(symbol)])

    @property
    def min_entropy_rate(self) -> float:
        return min_entropy_rate(self)


def markov_path_law(spec: MarkovChainSpec, n: int, cap: int = MARKOV_CAP) -> SequenceLaw:
    """Law of X^n started from the initial state, all |X|^n paths in lexicographic order"""
    digits = sequence_digits(spec.state_count, n, cap)
    extended = np.hstack([np.tile(np.asarray(spec.initial_state, dtype=np.int64), (digits.shape[0], 1)),
                          digits.astype(np.int64)])
    log_p = np.zeros(digits.shape[0])
    with np.errstate(divide="ignore"):
        log_table = np.log(spec.transitions)
        for t in range(n):
            ctx = np.zeros(digits.shape[0], dtype=np.int64)
            for j in range(spec.order):
                ctx = ctx * spec.state_count + extended[:, t + j]
            log_p += log_table[ctx, extended[:, t + spec.order]]
    return SequenceLaw(digits, np.exp(log_p), tuple(range(spec.state_count)))


def _window_indices(extended: np.ndarray, t: int, width: int, base: int) -> np.ndarray:
    idx = np.zeros(extended.shape[0], dtype=np.int64)
    for j in range(width):
        idx = idx * base + extended[:, t + j]
    return idx


@lru_cache(maxsize=4096)
def _realizations(context: Tuple[int, ...], remaining: Tuple[Tuple[Tuple[int, ...], int], ...]) -> int:
    """Number of ways to spend every remaining window count starting from context"""
    if not remaining:
        return 1
    total = 0
    for pos, (window, count) in enumerate(remaining):
        if window[:-1] != context:
            continue
        rest = list(remaining)
        if count == 1:
            del rest[pos]
        else:
            rest[pos] = (window, count - 1)
        total += _realizations(window[1:], tuple(rest))
    return total


def markov_type(x: Sequence[int], k: int, initial_state: Sequence[int]) -> TypeDescriptor:
    """
    Counts of every window of length k+1 in initial_state + x

    The class size is the exact number of sequences of the same length,
    started from the same initial state, sharing these counts.
    """
    if len(x) < 1:
        raise DomainError("markov_type needs a non-empty sequence")
    init = tuple(int(s) for s in initial_state)
    if len(init) != k:
        raise DomainError(f"initial state {init} must have length {k}")
    path = init + tuple(int(s) for s in x)
    tally: Dict[Tuple[int, ...], int] = {}
    for t in range(len(x)):
        window = path[t:t + k + 1]
        tally[window] = tally.get(window, 0) + 1
    counts = tuple(sorted(tally.items()))
    return TypeDescriptor(TypeKind.MARKOV, counts, len(x), _realizations(init, counts), init)


def markov_typeclass_simulator(
    n: int,
    spec_shape: Tuple[int, int, Sequence[int]],
    Q_Y: ScalarDistribution,
    cap: int = MARKOV_CAP,
) -> MappingTable:
    """
    Seed-agnostic mapping of Markov paths through their window-count classes

    Args:
        n: Path length
        spec_shape: (|X|, order k, initial state)
        Q_Y: Continuous target
        cap: Maximum number of enumerated paths

    Returns:
        MappingTable keyed by symbol-index tuples, uniform placeholder masses
    """
    size, order, initial_state = spec_shape
    init = np.asarray(tuple(initial_state), dtype=np.int64)
    if init.size != order:
        raise DomainError(f"initial state must have length {order}")
    digits = sequence_digits(size, n, cap)
    extended = np.hstack([np.tile(init, (digits.shape[0], 1)), digits.astype(np.int64)])
    windows = size ** (order + 1)
    counts = np.zeros((digits.shape[0], windows), dtype=np.int64)
    rows = np.arange(digits.shape[0])
    for t in range(n):
        counts[rows, _window_indices(extended, t, order + 1, size)] += 1
    return _classwise_table(digits, counts, Q_Y)


def max_path_log_prob(spec: MarkovChainSpec, n: int) -> float:
    """max over x^n of log P(x^n) by log-domain max-product dynamic programming"""
    contexts = spec.state_count ** spec.order
    with np.errstate(divide="ignore"):
        log_table = np.log(spec.transitions)
    value = np.full(contexts, -np.inf)
    value[spec.context_index(spec.initial_state)] = 0.0
    successor = (np.arange(contexts)[:, None] * spec.state_count + np.arange(spec.state_count)[None, :]) % max(
        contexts, 1
    )
    for _ in range(n):
        candidates = value[:, None] + log_table
        nxt = np.full(contexts, -np.inf)
        np.maximum.at(nxt, successor.reshape(-1), candidates.reshape(-1))
        value = nxt
    return float(value.max())


def markov_error_bound(spec: MarkovChainSpec, n: int) -> float:
    """1/2 (n+1)^(|X|^(k+1)) max_x^n P(x^n)"""
    exponent = spec.state_count ** (spec.order + 1) * math.log(n + 1) + max_path_log_prob(spec, n)
    return _half_exp(exponent)


def _context_graph(spec: MarkovChainSpec) -> nx.DiGraph:
    graph = nx.DiGraph()
    contexts = spec.state_count ** spec.order
    for ctx in range(contexts):
        graph.add_node(ctx)
        for symbol in range(spec.state_count):
            p = spec.transitions[ctx, symbol]
            if p > 0:
                nxt = (ctx * spec.state_count + symbol) % max(contexts, 1)
                graph.add_edge(ctx, nxt, weight=-math.log(p))
    return graph


def _loop_rate(spec: MarkovChainSpec) -> float:
    graph = _context_graph(spec)
    start = spec.context_index(spec.initial_state)
    reachable = nx.descendants(graph, start) | {start}
    sub = graph.subgraph(reachable)
    best = math.inf
    for cycle in nx.simple_cycles(sub):
        edges = zip(cycle, cycle[1:] + cycle[:1])
        weight = sum(sub[u][v]["weight"] for u, v in edges)
        best = min(best, weight / len(cycle))
    return best


def min_entropy_rate(spec: MarkovChainSpec, method: str = "auto", n: int = DP_LENGTH) -> float:
    """
    Min-entropy rate of a Markov source

    "loop" takes the smallest mean of -log p over simple cycles reachable from
    the initial context (order-k chains are lifted to contexts in X^k);
    "dp" returns -(1/n) max_x^n log P(x^n). "auto" uses loops when the context
    graph has at most MAX_LOOP_STATES nodes.

    Args:
        spec: Markov source
        method: "auto", "loop" or "dp"
        n: Path length for the dynamic-programming estimate

    Returns:
        Rate in nats per symbol
    """
    contexts = spec.state_count ** spec.order
    if method not in ("auto", "loop", "dp"):
        raise DomainError(f"unknown min-entropy method '{method}'")
    if method == "loop" or (method == "auto" and contexts <= MAX_LOOP_STATES):
        if contexts > MAX_LOOP_STATES:
            raise SizeCapError(f"{contexts} contexts exceed the loop enumeration cap {MAX_LOOP_STATES}")
        rate = _loop_rate(spec)
        logger.debug(f"min-entropy rate by loops over {contexts} contexts: {rate:.6g}")
        return max(rate, 0.0)
    rate = -max_path_log_prob(spec, n) / n
    logger.debug(f"min-entropy rate by max-product DP at n={n}: {rate:.6g}")
    return max(rate, 0.0)
