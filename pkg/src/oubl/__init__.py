"""Gauss-Markov processes as space-time scaled stationary Ornstein-Uhlenbeck processes."""
from .families import FAMILIES, FamilyModel, build_family, counterexample_kernel
from .process import (CovarianceKernel, DomainError, ProcessSpec, QuadratureError, TimeChangeMap,
                      build_time_change, covariance, spec_from_json)
from .representation import check_boundedness, kernel_representability, verify_representation
from .sup_location import (StandardizedArgmax, StandardizedProcessMap, SupLocConfig, SupLocationEngine,
                           argmax_density_of_standardized, reduce_argmax, sup_location_density)

__version__ = "0.1.0"

__all__ = [
    "FAMILIES", "FamilyModel", "build_family", "counterexample_kernel",
    "CovarianceKernel", "DomainError", "ProcessSpec", "QuadratureError", "TimeChangeMap",
    "build_time_change", "covariance", "spec_from_json",
    "check_boundedness", "kernel_representability", "verify_representation",
    "StandardizedArgmax", "StandardizedProcessMap", "SupLocConfig", "SupLocationEngine",
    "argmax_density_of_standardized", "reduce_argmax", "sup_location_density",
]
