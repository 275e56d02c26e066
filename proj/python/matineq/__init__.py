"""Eigenvalue and singular value inequalities for positive matrices.

Matrices are numpy arrays; real input is accepted and returned as complex128.
Checks return an ``InequalityResult`` whose ``passed`` flag means
``min_margin >= -tolerance``.
"""

from ._core import (
    DegenerateInstance,
    DimensionMismatch,
    DomainError,
    Error,
    InequalityResult,
    NumericalFailure,
    PreconditionViolation,
    ReductionTrace,
    catalogue,
    check_amgm_loewner,
    check_amgm_variant,
    check_ando,
    check_bk1,
    check_bk2,
    check_bkd,
    check_conjecture,
    check_prop1,
    check_prop2,
    check_prop3,
    check_prop4,
    check_weyl_gm,
    default_t_grid,
    derive_seed,
    dsl_check,
    dsl_format,
    eigenvalues,
    geometric_mean,
    haar_unitary,
    hermitian_eig,
    lemma1_margin,
    loewner_margin,
    matrix_power,
    perturbation_sweep,
    polar_decompose,
    psd_sqrt,
    random_nonsingular,
    random_psd,
    run_reduction,
    search,
    singular_values,
    spectral_norm,
    svd,
)

__version__ = "0.1.0"
