"""Chains of three-dimensional evolution algebras: construction,
Chapman-Kolmogorov verification, and time-dependent classification of
baric structure, absolute nilpotents and idempotents."""

__version__ = "0.1.0"

from .algebra import (  # noqa: F401
    BaricResult,
    IdempotentSet,
    NewtonOptions,
    NilpotentClassification,
    StructuralMatrix,
    Trajectory,
    baric_check,
    evolve,
    idempotents_numeric,
    idempotents_rank1,
    multiply,
    nilpotent_classify,
    rank1_factor,
    square,
)
from .expr import (  # noqa: F401
    EvalDomainError,
    ExprSyntaxError,
    TimeExpr,
    parse,
    restrict_variables,
)
from .families import (  # noqa: F401
    CeaFamily,
    CkReport,
    FamilyError,
    TripleSampler,
    UndefinedMatrixError,
    ck_residual,
    make_family,
    matrix_at,
    predicted_baric,
    predicted_idempotents,
    predicted_nilpotent_unique,
    rank1_factors,
    verify_ck,
)
