"""Topological ordering for additive noise models with mixed linear and nonlinear mechanisms."""

from ._core import (
    DataError,
    Dag,
    EstimatorError,
    ParameterError,
    __version__,
    a_top,
    d_separated,
    er_random_dag,
    generate,
    independence_test,
    is_valid_order,
    losam,
    mrd_set,
    mutual_information,
    prune_edges,
    rand_sort,
    shd_f1,
    srd_set,
    standardize,
    var_sort,
)

__all__ = [
    "DataError",
    "Dag",
    "EstimatorError",
    "ParameterError",
    "__version__",
    "a_top",
    "d_separated",
    "er_random_dag",
    "generate",
    "independence_test",
    "is_valid_order",
    "losam",
    "mrd_set",
    "mutual_information",
    "prune_edges",
    "rand_sort",
    "shd_f1",
    "srd_set",
    "standardize",
    "var_sort",
]
