"""Fair dimensionality reduction by choosing which principal components to keep."""

from .dataset import StandardizedDataset, load_csv, load_default_credit, standardize
from .dominance import FrontRecord, brute_force_front, dominates, nondominated_filter
from .estimator import MOFPCA
from .exceptions import ConfigError, EnumerationCapError, InputError, MofpcaError
from .pca import ObjectiveVector, PrincipalBasis, compute_basis, evaluate, evaluate_direct
from .selection import SelectionWeights, compute_lambda, select_solution
from .spea2 import Spea2Config, default_config, run

__all__ = [
    "MOFPCA",
    "ConfigError",
    "EnumerationCapError",
    "FrontRecord",
    "InputError",
    "MofpcaError",
    "ObjectiveVector",
    "PrincipalBasis",
    "SelectionWeights",
    "Spea2Config",
    "StandardizedDataset",
    "brute_force_front",
    "compute_basis",
    "compute_lambda",
    "default_config",
    "dominates",
    "evaluate",
    "evaluate_direct",
    "load_csv",
    "load_default_credit",
    "nondominated_filter",
    "run",
    "select_solution",
    "standardize",
]
