"""
Experiment engine for universim
Sweeps simulators over parameter grids and tabulates achieved errors against their bounds
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from scipy import signal  # noqa: E402

from loguru import logger  # noqa: E402

from .distributions import (  # noqa: E402
    ScalarDistribution,
    from_literal,
    normal,
    pmf,
    product_law,
    quantize,
    uniform,
)
from .errors import ConfigError, InvariantViolation, PreconditionError  # noqa: E402
from .metrics import ks_distance, tv_sandwich_bounds  # noqa: E402
from .nonuniversal import (  # noqa: E402
    atom_midpoint_map,
    greedy_discrete_map,
    greedy_error_bound,
    greedy_threshold,
)
from .squeeze import correlation_defect  # noqa: E402
from .universal_ac import (  # noqa: E402
    SawtoothSimulator,
    exact_ks_sawtooth,
    renyi_sawtooth,
    sawtooth_output_tv,
    smoothness_defect,
    tv_upper_bound,
)
from .universal_types import (  # noqa: E402
    MarkovChainSpec,
    markov_error_bound,
    markov_path_law,
    markov_typeclass_simulator,
    max_path_log_prob,
    min_entropy_rate,
    seed_masses,
    typeclass_simulator,
    universal_error_bound,
)

BOUND_SLACK = 1e-9
FLAG_DEFECT = 0.5
FFT_NOISE_FLOOR = 1e-16
LATTICE_TOL = 1e-9
CLT_SLOPE = -0.5
CLT_SLOPE_TOL = 0.1
TYPE_SLOPE_TOL = 0.15

CSV_OPTIONS = {"index": False, "float_format": "%.17g", "lineterminator": "\n"}


@dataclass
class ExperimentConfig:
    """Parameters of one experiment run"""
    experiment: str
    seed_distribution: Any = None
    target_distribution: Optional[Dict] = None
    delta_grid: List[float] = field(default_factory=list)
    n_grid: List[int] = field(default_factory=list)
    rng_seed: int = 0
    output_path: str = "results/experiment.csv"

    # Experiment-specific
    renyi_alpha: float = 0.5
    quantization_n: int = 10000
    greedy_target: Optional[Dict] = None
    markov: Optional[Dict] = None
    universal_cap: int = 10 ** 6
    g_function: Optional[Dict] = None
    support: Optional[List[float]] = None
    interval: List[float] = field(default_factory=lambda: [0.0, 1.0])

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> "ExperimentConfig":
        """Build from a validated configuration dictionary"""
        try:
            return cls(**config)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def seeds(self) -> List[ScalarDistribution]:
        literals = self.seed_distribution
        if literals is None:
            raise ConfigError("seed_distribution: required")
        if not isinstance(literals, list):
            literals = [literals]
        return [from_literal(literal) for literal in literals]

    def seed(self) -> ScalarDistribution:
        seeds = self.seeds()
        if len(seeds) != 1:
            raise ConfigError(f"seed_distribution: {self.experiment} takes a single law, got {len(seeds)}")
        return seeds[0]

    def target(self) -> ScalarDistribution:
        if self.target_distribution is None:
            return uniform(0.0, 1.0)
        return from_literal(self.target_distribution)


def _require(condition: bool, message: str, row: Dict):
    if not condition:
        raise InvariantViolation(f"{message} (row: {row})", row)


def _log_row(experiment: str, row: Dict):
    summary = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items())
    logger.info(f"{experiment}: {summary}")


def _fit_slope(x: np.ndarray, y: np.ndarray) -> float:
    keep = np.isfinite(y) & (y > 0)
    if keep.sum() < 2:
        return math.nan
    slope, _ = np.polyfit(x[keep], np.log(y[keep]), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# Sawtooth experiments
# ---------------------------------------------------------------------------

def run_sawtooth_sweep(config: ExperimentConfig) -> pd.DataFrame:
    """
    Exact KS, TV bound and Renyi error of the sawtooth map for every seed and cell width

    Rows carry seed, delta, ks_exact, output_tv, tv_upper_bound, renyi_alpha and
    renyi_value. Density-free seeds (quantized or singular) get NaN in the
    density-based columns.

    Raises:
        InvariantViolation: KS above the TV bound, or a Renyi value above its TV sandwich
    """
    alpha = float(config.renyi_alpha)
    rows = []
    for seed in config.seeds():
        smooth = seed.has_density and not seed.has_atoms
        for delta in config.delta_grid:
            ks = exact_ks_sawtooth(seed, delta)
            tv = sawtooth_output_tv(seed, delta) if smooth else math.nan
            bound = tv_upper_bound(seed, delta) if smooth else math.nan
            renyi = renyi_sawtooth(seed, delta, alpha) if smooth else math.nan
            row = {
                "seed": seed.name,
                "delta": float(delta),
                "ks_exact": ks,
                "output_tv": tv,
                "tv_upper_bound": bound,
                "renyi_alpha": alpha,
                "renyi_value": renyi,
            }
            if smooth:
                _require(ks <= bound + BOUND_SLACK, "ks_exact exceeds tv_upper_bound", row)
                if 0.0 < alpha < 1.0:
                    _, upper = tv_sandwich_bounds(min(tv, 1.0), alpha)
                    _require(renyi <= upper + BOUND_SLACK, "renyi_value exceeds its TV sandwich", row)
            _log_row(config.experiment, row)
            rows.append(row)
    return pd.DataFrame(rows)


def run_quantized_seed(config: ExperimentConfig) -> pd.DataFrame:
    """
    Sawtooth KS of each seed against its quantized version floor(nX)/n

    Rows whose smoothness defect reaches FLAG_DEFECT are flagged: the quantization
    step is too coarse for the cell width and the output is far from uniform.

    Raises:
        InvariantViolation: quantized KS above 2 * base KS + smoothness defect
    """
    n = int(config.quantization_n)
    rows = []
    for seed in config.seeds():
        quantized = quantize(seed, n)
        for delta in config.delta_grid:
            ks_base = exact_ks_sawtooth(seed, delta)
            ks_quantized = exact_ks_sawtooth(quantized, delta)
            defect = smoothness_defect(quantized, delta)
            row = {
                "seed": seed.name,
                "delta": float(delta),
                "quantization_n": n,
                "ks_base": ks_base,
                "ks_quantized": ks_quantized,
                "smoothness_defect": defect,
                "flagged": bool(defect >= FLAG_DEFECT),
            }
            if row["flagged"]:
                logger.warning(f"quantization step 1/{n} is coarse for delta={delta:g} (defect {defect:.3g})")
            _require(
                ks_quantized <= 2.0 * ks_base + defect + BOUND_SLACK,
                "ks_quantized exceeds 2 * ks_base + smoothness_defect",
                row,
            )
            _log_row(config.experiment, row)
            rows.append(row)
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# Discrete seeds
# ---------------------------------------------------------------------------

def _discrete_seed(config: ExperimentConfig) -> ScalarDistribution:
    seed = config.seed()
    if not seed.is_discrete:
        raise ConfigError(f"seed_distribution: {config.experiment} needs a discrete seed, got {seed.name}")
    return seed


def run_type_decay(config: ExperimentConfig) -> pd.DataFrame:
    """
    Universal and non-universal KS errors of length-n i.i.d. sequence seeds

    universal_ks comes from the type-class mapping, nonuniversal_ks from the
    midpoint mapping built with knowledge of the seed. With a greedy_target the
    greedy discrete mapping is evaluated as well.

    Raises:
        InvariantViolation: a KS value leaves [1/2 max p^n, bound], or the greedy
            error exceeds its bound past the length threshold
    """
    seed = _discrete_seed(config)
    target = config.target()
    law = seed.pmf
    greedy = from_literal(config.greedy_target) if config.greedy_target is not None else None
    if greedy is not None and not greedy.is_discrete:
        raise ConfigError(f"greedy_target: must be discrete, got {greedy.name}")
    threshold = greedy_threshold(law, greedy.pmf) if greedy is not None else math.nan

    rows = []
    for n in config.n_grid:
        table = typeclass_simulator(n, law.size, target).with_law(seed_masses(law, n))
        universal_ks = ks_distance(table.output_law(), target)
        midpoint = atom_midpoint_map(product_law(seed, n), target)
        nonuniversal_ks = ks_distance(midpoint.output_law(), target)
        half_max = 0.5 * law.max_mass ** n
        row = {
            "n": int(n),
            "universal_ks": universal_ks,
            "nonuniversal_ks": nonuniversal_ks,
            "half_max_prob": half_max,
            "error_bound": universal_error_bound(law, n),
        }
        _require(half_max <= universal_ks + BOUND_SLACK, "universal_ks below 1/2 max p^n", row)
        _require(universal_ks <= row["error_bound"] + BOUND_SLACK, "universal_ks exceeds error_bound", row)

        if greedy is not None:
            greedy_table = greedy_discrete_map(law, greedy.pmf, n)
            row["greedy_ks"] = ks_distance(greedy_table.output_law(), greedy)
            row["greedy_bound"] = greedy_error_bound(law, n)
            row["greedy_threshold_met"] = bool(n >= threshold)
            if row["greedy_threshold_met"]:
                _require(row["greedy_ks"] <= row["greedy_bound"] + BOUND_SLACK, "greedy_ks exceeds greedy_bound", row)
        _log_row(config.experiment, row)
        rows.append(row)

    frame = pd.DataFrame(rows)
    slope = _fit_slope(frame["n"].to_numpy(dtype=float), frame["universal_ks"].to_numpy())
    expected = math.log(law.max_mass)
    if math.isfinite(slope) and expected < 0:
        logger.info(f"universal KS log-slope {slope:.4f} per symbol, log max p = {expected:.4f}")
        if abs(slope - expected) > TYPE_SLOPE_TOL * abs(expected):
            logger.warning("universal KS slope is more than 15% away from log max p on this grid")
    return frame


def _markov_spec(config: ExperimentConfig) -> MarkovChainSpec:
    markov = config.markov
    if markov is None:
        raise ConfigError("markov: required")
    try:
        return MarkovChainSpec(
            state_count=int(markov["state_count"]),
            order=int(markov["order"]),
            initial_state=tuple(markov["initial_state"]),
            transitions=np.asarray(markov["transitions"], dtype=float),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"markov: {e}") from e


def run_markov_decay(config: ExperimentConfig) -> pd.DataFrame:
    """
    Universal KS error of Markov path seeds mapped through window-count classes

    Raises:
        InvariantViolation: KS outside [1/2 max path probability, error bound]
    """
    spec = _markov_spec(config)
    target = config.target()
    rate = min_entropy_rate(spec)
    shape = (spec.state_count, spec.order, spec.initial_state)

    rows = []
    for n in config.n_grid:
        paths = markov_path_law(spec, n)
        table = markov_typeclass_simulator(n, shape, target).with_law(paths.probs)
        universal_ks = ks_distance(table.output_law(), target)
        row = {
            "n": int(n),
            "universal_ks": universal_ks,
            "half_max_path_prob": 0.5 * math.exp(max_path_log_prob(spec, n)),
            "error_bound": markov_error_bound(spec, n),
            "min_entropy_rate": rate,
        }
        _require(row["half_max_path_prob"] <= universal_ks + BOUND_SLACK, "universal_ks below 1/2 max path prob", row)
        _require(universal_ks <= row["error_bound"] + BOUND_SLACK, "universal_ks exceeds error_bound", row)
        _log_row(config.experiment, row)
        rows.append(row)
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# Linear-mapping baseline
# ---------------------------------------------------------------------------

def _lattice(values: np.ndarray) -> float:
    """Common spacing of sorted atoms, which must sit on one arithmetic lattice"""
    if values.size < 2:
        raise PreconditionError("a one-atom seed has zero variance")
    step = float(np.diff(values).min())
    offsets = (values - values[0]) / step
    if np.abs(offsets - np.rint(offsets)).max() > LATTICE_TOL * max(1.0, float(offsets.max())):
        raise PreconditionError("seed atoms do not lie on an arithmetic lattice")
    return step


def _convolution_power(masses: np.ndarray, n: int) -> np.ndarray:
    """n-fold self-convolution of a lattice pmf by binary exponentiation"""
    result = np.array([1.0])
    base = masses
    while n:
        if n & 1:
            result = np.clip(signal.fftconvolve(result, base), 0.0, None)
        n >>= 1
        if n:
            base = np.clip(signal.fftconvolve(base, base), 0.0, None)
    return result


def standardized_sum_law(seed: ScalarDistribution, n: int) -> ScalarDistribution:
    """
    Exact law of (S_n - n mu) / sqrt(n var) for a lattice seed

    Masses below FFT_NOISE_FLOOR are round-off from the FFT and are dropped.
    """
    values = seed.atom_values
    step = _lattice(values)
    index = np.rint((values - values[0]) / step).astype(np.int64)
    masses = np.zeros(int(index.max()) + 1)
    masses[index] = seed.atom_masses
    mean = float(values @ seed.atom_masses)
    var = float(((values - mean) ** 2) @ seed.atom_masses)
    if not var > 0:
        raise PreconditionError(f"{seed.name} has zero variance")

    total = _convolution_power(masses, n)
    points = n * values[0] + step * np.arange(total.size)
    keep = total > FFT_NOISE_FLOOR
    z = (points[keep] - n * mean) / math.sqrt(n * var)
    return pmf(z, total[keep] / total[keep].sum(), tol=1e-9)


def run_clt_baseline(config: ExperimentConfig) -> pd.DataFrame:
    """
    KS distance of the standardized sum against N(0, 1) next to the type-based universal KS

    Continuous seeds are quantized at step 1/quantization_n first. The universal
    column is computed exactly while |X|^n stays within universal_cap; beyond it
    the column holds the type-counting bound and universal_exact is False.
    """
    seed = config.seed()
    if not seed.is_discrete:
        if seed.has_atoms:
            raise PreconditionError(f"{seed.name} mixes atoms and a density; quantize it explicitly")
        logger.info(f"Quantizing continuous seed {seed.name} at step 1/{config.quantization_n}")
        seed = quantize(seed, config.quantization_n)
    law = seed.pmf
    gaussian = normal(0.0, 1.0)

    rows = []
    for n in config.n_grid:
        clt_ks = ks_distance(standardized_sum_law(seed, n), gaussian)
        exact = law.size ** n <= config.universal_cap
        if exact:
            table = typeclass_simulator(n, law.size, gaussian).with_law(seed_masses(law, n))
            universal_ks = ks_distance(table.output_law(), gaussian)
        else:
            universal_ks = universal_error_bound(law, n)
        row = {"n": int(n), "clt_ks": clt_ks, "universal_ks": universal_ks, "universal_exact": exact}
        _log_row(config.experiment, row)
        rows.append(row)

    frame = pd.DataFrame(rows)
    slope = _fit_slope(np.log(frame["n"].to_numpy(dtype=float)), frame["clt_ks"].to_numpy())
    if math.isfinite(slope):
        logger.info(f"CLT baseline log-log slope {slope:.4f}")
        if abs(slope - CLT_SLOPE) > CLT_SLOPE_TOL:
            logger.warning(f"CLT baseline slope {slope:.4f} is outside {CLT_SLOPE} +/- {CLT_SLOPE_TOL}")
    return frame


# ---------------------------------------------------------------------------
# Squeeze sweep
# ---------------------------------------------------------------------------

def g_family(spec: Optional[Dict]) -> Callable:
    """Vectorized test function on [a, b] from a {"family": ..., params} mapping"""
    spec = spec or {"family": "sine"}
    family = spec.get("family")
    if family == "identity":
        return lambda s: np.asarray(s, dtype=float)
    if family == "constant":
        value = float(spec.get("value", 1.0))
        return lambda s: np.full(np.shape(s), value)
    if family == "sine":
        frequency = float(spec.get("frequency", 1.0))
        return lambda s: np.sin(2.0 * math.pi * frequency * np.asarray(s, dtype=float))
    if family == "power":
        exponent = float(spec.get("exponent", 2.0))
        return lambda s: np.asarray(s, dtype=float) ** exponent
    if family == "indicator":
        threshold = float(spec.get("threshold", 0.5))
        return lambda s: (np.asarray(s, dtype=float) <= threshold).astype(float)
    raise ConfigError(f"g_function.family: unknown family '{family}'")


def run_squeeze_sweep(config: ExperimentConfig) -> pd.DataFrame:
    """
    Correlation defect between a density f and the periodicized g over the cell widths

    Raises:
        InvariantViolation: defect above its bound on some row
    """
    f = config.seed()
    g = g_family(config.g_function)
    support = tuple(config.support) if config.support is not None else None
    interval = tuple(config.interval)

    rows = []
    for delta in config.delta_grid:
        result = correlation_defect(f, g, delta, support=support, interval=interval)
        row = {
            "delta": float(delta),
            "L_delta": result.L_delta,
            "L": result.L,
            "defect": result.defect,
            "bound": result.bound,
            "truncated_mass": result.truncated_mass,
        }
        _require(result.defect <= result.bound + BOUND_SLACK * max(1.0, result.bound), "defect exceeds bound", row)
        _log_row(config.experiment, row)
        rows.append(row)
    return pd.DataFrame(rows)


RUNNERS = {
    "sawtooth_sweep": run_sawtooth_sweep,
    "quantized_seed": run_quantized_seed,
    "type_decay": run_type_decay,
    "markov_decay": run_markov_decay,
    "clt_baseline": run_clt_baseline,
    "squeeze_sweep": run_squeeze_sweep,
}

HISTOGRAM_EXPERIMENTS = ("sawtooth_sweep", "quantized_seed")


class ExperimentEngine:
    """Runs one configured experiment and writes its artifacts"""

    def __init__(self, config: ExperimentConfig):
        if config.experiment not in RUNNERS:
            raise ConfigError(f"experiment: unknown experiment '{config.experiment}'")
        self.config = config
        self.results: Optional[pd.DataFrame] = None
        logger.info("Experiment Engine initialized")

    def run(self) -> pd.DataFrame:
        """Run the experiment over its grid, rows in grid order"""
        logger.info(f"Running {self.config.experiment}")
        self.results = RUNNERS[self.config.experiment](self.config)
        logger.info(f"{self.config.experiment} completed with {len(self.results)} rows")
        return self.results

    def save_results(self, output_path: Optional[str] = None) -> Path:
        """Write the result table as CSV with 17 significant digits"""
        if self.results is None:
            self.run()
        path = Path(output_path or self.config.output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.results.to_csv(path, **CSV_OPTIONS)
        logger.info(f"Experiment results saved to {path}")
        return path

    def plot_histogram(self, samples: int, output_path: Optional[str] = None) -> Optional[Path]:
        """
        Monte Carlo histogram of sawtooth outputs at the finest cell width

        Draws from numpy's default_rng seeded with rng_seed, so reruns give the
        same picture. Only sawtooth-type experiments produce a histogram.

        Args:
            samples: Number of seed draws per seed law
            output_path: PNG path, <output_path>.hist.png by default

        Returns:
            Path of the PNG, or None when the experiment has no histogram
        """
        if self.config.experiment not in HISTOGRAM_EXPERIMENTS:
            logger.warning(f"{self.config.experiment} has no histogram output; --samples ignored")
            return None
        if samples < 1:
            raise ConfigError(f"samples: must be positive, got {samples}")

        rng = np.random.default_rng(self.config.rng_seed)
        delta = min(self.config.delta_grid)
        sim = SawtoothSimulator(delta, self.config.target())
        seeds = self.config.seeds()
        if self.config.experiment == "quantized_seed":
            seeds = [law for seed in seeds for law in (seed, quantize(seed, self.config.quantization_n))]

        path = Path(output_path or f"{self.config.output_path}.hist.png")
        path.parent.mkdir(parents=True, exist_ok=True)
        fig, axes = plt.subplots(len(seeds), 1, figsize=(8, 3 * len(seeds)), squeeze=False)
        for ax, seed in zip(axes[:, 0], seeds):
            # 1 - random() lies in (0, 1], where every quantile is defined.
            x = np.asarray(seed.quantile(1.0 - rng.random(samples)), dtype=float)
            ax.hist(np.asarray(sim(x), dtype=float), bins=50, density=True, alpha=0.7, color="blue", edgecolor="black")
            ax.set_title(f"{seed.name}, delta={delta:g}")
            ax.set_ylabel("Density")
            ax.grid(True, alpha=0.3)
        axes[-1, 0].set_xlabel("Output value")
        fig.savefig(path, dpi=300, bbox_inches="tight")
        plt.close(fig)
        logger.info(f"Histogram saved to {path}")
        return path
