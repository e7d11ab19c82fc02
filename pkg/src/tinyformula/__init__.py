"""Shrinking convolutional architectures under a FLOPs budget.

Sample scaled variants of a baseline network, keep the accuracy/FLOPs
frontier, regress resolution and depth on the FLOPs ratio with Gaussian
processes, and let the FLOPs budget decide the width.
"""

from .arch import (IDENTITY, ArchitectureSpec, CostReport, ResolvedArchitecture,
                   ScalingCoefficients, bundled_spec, cost, estimate, flops_ratio, load_spec,
                   resolve)
from .formula import TinyFormula, fit_formula, inversed_giant, solve, solve_resolved
from .gpr import GprModel, Kernel, Posterior, fit, fit_hyperparameters, predict
from .oracle import OracleConfig, oracle_accuracy
from .pareto import (ParetoFront, frontier_stats, nondominated_sort, select_frontier,
                     spearman)
from .search import (ExperimentRecord, RecordStore, SamplingConfig, ingest, sample_at_target,
                     sample_band)

__version__ = "0.1.0"
