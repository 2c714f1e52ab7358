"""Detailed-balance quantum Markov semigroups, their gradient-flow structure and GENERIC couplings."""
from .errors import (ConfigError, ConstructionError, ConvergenceError, DomainError, IntegrationError,
                     PreconditionError, RepresentationError, ShapeError, SymmetryError)
from .generic import (CoupledState, DampedSystem, GenericSystem, MacroFunctional, MacroSpace, jacobi_check,
                      nic_check, slack_generic)
from .integrator import IntegratorConfig, Trajectory, integrate, simulate
from .kubo_mori import apply_C, apply_D, kubo_mori, kubo_mori_product, log_mean, miracle_residuals
from .lindblad import (EigenpairQ, Superoperator, cp_check, dbc_check, decompose_dbc, eigenpair,
                       eigenpair_basis, make_MQ, make_SW, make_tensor_lindblad, spectral_decompose,
                       tensor_lindblad, y_sigma)
from .linalg import expm, hermitian_eigen, logm_h, partial_trace_2, sqrtm_h
from .markov import davies_diagonal_oracle, markov_chain, markov_trajectory
from .onsager import apply_K, gradient_form_check, onsager_simple, onsager_tensor, sum_onsager
from .rng import SplitMix64
from .states import density_matrix, relative_entropy, thermal_state, von_neumann_entropy

__version__ = "0.1.0"
