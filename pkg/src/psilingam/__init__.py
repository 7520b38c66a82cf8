"""Prior-constrained LiNGAM causal discovery with partial-correlation screening."""

from psilingam.dataset import DataMatrix, load_matrix, zscore_columns, anderson_darling
from psilingam.errors import DataError, NumericalError, DegeneracyWarning
from psilingam.gaussianize import nonparanormal_transform
from psilingam.lingam import (
    CausalOrder,
    FitResult,
    WeightedDag,
    estimate_weights,
    find_causal_order,
    fit_psi_lingam,
    threshold_graph,
)
from psilingam.metrics import score
from psilingam.prior import PriorMatrix, build_prior, estimate_prior
from psilingam.simbench import BenchmarkConfig, run_benchmark, simulate

__all__ = [
    "BenchmarkConfig",
    "CausalOrder",
    "DataError",
    "DataMatrix",
    "DegeneracyWarning",
    "FitResult",
    "NumericalError",
    "PriorMatrix",
    "WeightedDag",
    "anderson_darling",
    "build_prior",
    "estimate_prior",
    "estimate_weights",
    "find_causal_order",
    "fit_psi_lingam",
    "load_matrix",
    "nonparanormal_transform",
    "run_benchmark",
    "score",
    "simulate",
    "threshold_graph",
    "zscore_columns",
]

__version__ = "0.1.0"
