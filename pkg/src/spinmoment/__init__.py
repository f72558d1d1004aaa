"""Feasibility of first and second su(2) moments for a total spin j system."""

from .matcore import (
    hermitian_eig,
    hermitize,
    is_psd,
    kron,
    min_eigenvalue,
    partial_trace,
    partial_transpose_b,
    symmetric_isometry,
)
from .spinalg import (
    MomentMatrix,
    SpinOperatorTriple,
    StandardForm,
    chi_matrix,
    extract_first_moments,
    moment_matrix,
    spin_operators,
    standard_form,
    validate_algebra,
    validate_moments,
)
from .reduction import (
    ReductionOperators,
    RenormalizedCoords,
    moments_from_coords,
    ppt_inner_test,
    reconstruct_rho,
    reduction_operators,
    renormalized_coords,
    tau,
)
from .sdp import SdpProblem, SdpSolution, orthonormalize, phase1_min_t, solve
from .feasibility import (
    Verdict,
    Witness,
    build_fixed_state,
    classify,
    exact_test_direct,
    exact_test_extension,
    first_moment_test,
    outer_test,
    witness_search,
)
from .scan import ScanResult, scan_grid

__version__ = "0.1.0"
