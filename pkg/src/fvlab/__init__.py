"""
Top-level package interface for `fvlab`.

This module exposes the components of the fixed-to-variable source-coding lab,
making them directly accessible when importing `fvlab`.

Available components include:
- Alphabets, laws and types (`Alphabet`, `Dist`, `TypeVector`)
- Ranked codes and their length distributions (`RankedCode`, `epsilon_bits`)
- Universal codes (`rate_bits`, `ranked_code`, `CODE_NAMES`)
- Guessing functions and their duality with codes (`GuessingFunction`)
- Third-order predictions and fits (`RatePrediction`, `third_order_fit`)
- The mixture converse (`entropy_sphere_grid`, `max_converse_bound`)
- The invariant suite (`run_suite`)
"""

from importlib.metadata import PackageNotFoundError, version

from fvlab.alphabet import (
    Alphabet,
    Dist,
    InvalidDistributionError,
    InvalidTypeError,
    TypeVector,
    enumerate_types,
    kl,
    type_class_size,
)
from fvlab.asymptotics import (
    RatePrediction,
    geometric_grid,
    j_value,
    predicted_rate,
    third_order_fit,
    third_order_sweep,
)
from fvlab.coding import (
    CodeShapeError,
    CoverageError,
    LengthDistribution,
    OracleSizeError,
    RankedCode,
    brute_force_eval,
    epsilon_bits,
    length_distribution,
    optimal_code,
)
from fvlab.config import ConfigError, RunConfig
from fvlab.converse import (
    InfeasibleGammaError,
    MixtureInformation,
    entropy_sphere_grid,
    max_converse_bound,
    worst_case_bits,
)
from fvlab.guessing import (
    GuessingFunction,
    code_to_guesser,
    flatten_code,
    guesser_to_code,
    guessing_tail,
)
from fvlab.kraft import KraftProfile, kraft_lp_optimal, kraft_sum
from fvlab.laplace import laplace_check, laplace_order_check
from fvlab.universal import CODE_NAMES, ranked_code, rate_bits
from fvlab.verify import CheckResult, run_suite

try:
    __version__ = version("fvlab")
except PackageNotFoundError:
    __version__ = "dev"

__all__ = [
    "CodeShapeError",
    "ConfigError",
    "CoverageError",
    "InfeasibleGammaError",
    "InvalidDistributionError",
    "InvalidTypeError",
    "OracleSizeError",
    "Alphabet",
    "CheckResult",
    "Dist",
    "GuessingFunction",
    "KraftProfile",
    "LengthDistribution",
    "MixtureInformation",
    "RankedCode",
    "RatePrediction",
    "RunConfig",
    "TypeVector",
    "CODE_NAMES",
    "brute_force_eval",
    "code_to_guesser",
    "entropy_sphere_grid",
    "enumerate_types",
    "epsilon_bits",
    "flatten_code",
    "geometric_grid",
    "guesser_to_code",
    "guessing_tail",
    "j_value",
    "kl",
    "kraft_lp_optimal",
    "kraft_sum",
    "laplace_check",
    "laplace_order_check",
    "length_distribution",
    "max_converse_bound",
    "optimal_code",
    "predicted_rate",
    "ranked_code",
    "rate_bits",
    "run_suite",
    "third_order_fit",
    "third_order_sweep",
    "type_class_size",
    "worst_case_bits",
]
