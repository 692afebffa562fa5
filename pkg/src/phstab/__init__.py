"""Stability analysis of linear port-Hamiltonian systems on an interval.

Systems have the form ``dx/dt = sum_k P_k d^k/dzeta^k (H x)`` with
boundary conditions ``W_B [(Hx)(b); (Hx)(a)] = 0`` and a piecewise-constant
Hamiltonian density ``H``.
"""

from .exceptions import ConvergenceError, DimensionError, InvalidSystemError
from .fundsol import (CompanionField, FundamentalSolution, build_companion,
                      continuity_gap, picard_fundamental, propagate, psi_at_b,
                      transfer_matrix)
from .generation import (GenerationVerdict, check_contraction_generator,
                         generation_matrix)
from .numkernel import is_psd, kernel_vector, mat_exp, smallest_singular_value
from .spectral import (EigenHit, SpectralScan, StabilityReport,
                       boundary_test_matrix, classify, find_imaginary_eigenvalues,
                       search_imaginary_axis, sigma_min_scan, verify_eigenpair)
from .strings import (Irrational, ParityClass, StringNetworkParams,
                      build_string_network, classify_constant_strings,
                      closed_form_psi, eta, parity_class, rational_dependence)
from .system import (HamiltonianDensity, SystemSpec, build_Q, build_R_ext,
                     energy_inner_product, load_system, validate_system)

__version__ = "0.1.0"
