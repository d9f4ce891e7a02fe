"""heisenlab: a spectral laboratory for the harmonic oscillator on the
Heisenberg group, built on the Dynin-Folland Lie algebra.

Layers:

* ``algebra``        exact Lie algebra, BCH group law, Pfaffian
* ``representation`` the generic unitary representation and its generators
* ``grids``/``assembly``  Dirichlet box discretizations (two routes)
* ``eigensolver``    shift-inverted Lanczos with inner conjugate gradients
* ``analysis``       boundary filtering, counting function, exponent fits
* ``cli``            configuration / orchestration / reports
"""

from .algebra import (
    AlgebraVector, BasisIndex, GroupElement, HeisPoint, LieAlgebraSpec,
    b_form_matrix, bch, bracket, build_dynin_folland, coad, df_mul,
    df_mul_printed, dilate, heis_mul, jacobi_defect, pfaffian,
    sublaplacian_generators,
)
from .analysis import (
    SpectrumReport, analyze_spectrum, boundary_mass, counting_function,
    fit_counting_exponent, fit_eigenvalue_exponent, gram_defect,
    refinement_study,
)
from .assembly import (
    StencilField, apply_oscillator_symbolic, assemble_oscillator_expanded,
    assemble_oscillator_sos, assemble_vector_field, matvec,
)
from .eigensolver import (
    CgConvergenceError, EigenPair, EigenResult, IndefiniteOperatorError,
    SolverConfig, cg_solve, smallest_eigenpairs,
)
from .grids import GridSpec
from .kernels import backend as kernel_backend
from .representation import (
    Gaussian, ReprParam, TestFunction, dpi_fd_check, dpi_generator, pi_apply,
    rho_apply,
)
from .sparse import CsrMatrix, SparseSymmetricMatrix, write_matrix_market

__version__ = "0.1.0"
