"""Hybrid conjugate-gradient linear solver built on quantum eigenvalue
transformation circuits, simulated at the dense-unitary level."""

from .encodings import (
    AmplificationConfig,
    BlockEncoding,
    LinearSystem,
    amplified_a_prime,
    cyclic_shift,
    exact_dilation,
    lamp_poly_no_gap,
    lamp_poly_with_gap,
    lcu_a_prime,
    poisson_system,
    spectral_norm,
    verify_block_encoding,
)
from .estimation import ShotModel, SwapTestResult, prepare_b, required_shots, swap_test
from .polytools import (
    DegreeReport,
    Domain,
    Polynomial,
    inverse_poly,
    lambert_w,
    max_abs,
    multiply,
    positive_shift,
    rect_poly,
    sign_poly,
    window_shift,
)
from .qet_engine import QetAssembly, qet_definite, qet_general, qet_oracle
from .qsp_core import (
    PhaseFactors,
    QspResidual,
    convert_convention,
    qsp_eval,
    solve_phases,
    verify_phases,
)
from .solvers import (
    CgCoefficients,
    QcgConfig,
    QcgTrace,
    cg_classical,
    cg_tracked,
    direct_qsvt_degree,
    fit_scalings,
    iteration_bound,
    qcg_solve,
    query_cost,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
