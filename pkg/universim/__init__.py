"""
universim
Universal and non-universal simulation of random variables with exact error accounting
"""

__version__ = "0.1.0"

from .distributions import (
    ClassTag,
    DiscretePmf,
    ScalarDistribution,
    SequenceLaw,
    cdf_eval,
    from_literal,
    product_law,
    quantile_eval,
    quantize,
)
from .errors import (
    ConfigError,
    DomainError,
    InvariantViolation,
    NumericError,
    PreconditionError,
    SizeCapError,
    UniversimError,
    UnsupportedPairError,
)
from .metrics import DistancePair, RenyiSandwich, ks_distance, renyi_divergence, renyi_tv_sandwich, tv_distance
from .nonuniversal import (
    MappingTable,
    Simulator,
    atom_midpoint_map,
    digit_interleave_vector,
    greedy_discrete_map,
    inverse_transform_map,
    monotone_transfer,
    universal_vector_map,
)
from .squeeze import (
    CorrelationDefect,
    PeriodicizedFunction,
    correlation_defect,
    correlation_defect_bivariate,
    correlation_defect_dirac,
)
from .universal_ac import (
    SawtoothSimulator,
    averaged_density,
    exact_ks_sawtooth,
    rate_slope,
    renyi_sawtooth,
    sawtooth_eval,
    smoothness_defect,
    tv_upper_bound,
)
from .universal_types import (
    MarkovChainSpec,
    TypeDescriptor,
    iid_types,
    markov_type,
    markov_typeclass_simulator,
    min_entropy_rate,
    typeclass_simulator,
    universal_error_bound,
)

__all__ = [
    "ClassTag",
    "DiscretePmf",
    "ScalarDistribution",
    "SequenceLaw",
    "cdf_eval",
    "from_literal",
    "product_law",
    "quantile_eval",
    "quantize",
    "ConfigError",
    "DomainError",
    "InvariantViolation",
    "NumericError",
    "PreconditionError",
    "SizeCapError",
    "UniversimError",
    "UnsupportedPairError",
    "DistancePair",
    "RenyiSandwich",
    "ks_distance",
    "renyi_divergence",
    "renyi_tv_sandwich",
    "tv_distance",
    "MappingTable",
    "Simulator",
    "atom_midpoint_map",
    "digit_interleave_vector",
    "greedy_discrete_map",
    "inverse_transform_map",
    "monotone_transfer",
    "universal_vector_map",
    "CorrelationDefect",
    "PeriodicizedFunction",
    "correlation_defect",
    "correlation_defect_bivariate",
    "correlation_defect_dirac",
    "SawtoothSimulator",
    "averaged_density",
    "exact_ks_sawtooth",
    "rate_slope",
    "renyi_sawtooth",
    "sawtooth_eval",
    "smoothness_defect",
    "tv_upper_bound",
    "MarkovChainSpec",
    "TypeDescriptor",
    "iid_types",
    "markov_type",
    "markov_typeclass_simulator",
    "min_entropy_rate",
    "typeclass_simulator",
    "universal_error_bound",
]
