"""GB-spline Galerkin matrices, Toeplitz symbols and spectral bound checks."""

from .assembly import (
    GalerkinSet1D,
    GalerkinSet2D,
    QuadratureError,
    assemble_1d,
    assemble_2d_direct,
    assemble_2d_tensor,
    assemble_A_1d,
    assemble_case,
    decompose_2d,
    numerical_rank,
)
from .gbspline import (
    GBSplineBasis,
    Kind,
    KnotVector,
    Mode,
    PhaseConstraintError,
    SectionSpace,
    build_basis,
    eval_basis,
    make_knots,
    ratio_bounds,
)
from .spectral import BoundCheck, Spectrum, condition_2, gen_eigs, pencil_min, singular_values, sym_eigs
from .toeplitz import (
    SymbolCoeffs,
    TwoLevelSymbol,
    distribution_distance,
    extract_symbol,
    kron,
    sample_symbol,
    toeplitz,
    two_level_toeplitz,
)

__version__ = "0.1.0"
