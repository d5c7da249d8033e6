"""Contact Lagrangian and Hamiltonian mechanics toolkit.

Herglotz dynamics, reparametrized action coordinates, equivalence checkers
and inverse-problem verifiers on the global chart (q, v, z), with a
batch-verification CLI.
"""

from .checks import CheckReport, SamplePlan, Tolerances, sample_states
from .contact import (
    ContactHamiltonianSystem, CoordOneForm, CoordVectorField, conformal_factor,
    exterior_derivative, hamiltonian_field, reeb_field,
)
from .dynamics import (
    SampledCurve, Trajectory, action, integrate, stationarity_test, z_operator,
)
from .equivalence import (
    conformal_similarity_check, dynamical_equivalence_check,
    general_equivalence_check, horizontal_similarity_check,
    projectability_check, strong_equivalence_check, zero_set_diagnostic,
)
from .expr import (
    Expr, ParamSet, StatePoint, differentiate, eval_jet2, evaluate, parse,
    unparse,
)
from .extended import (
    ActionFunction, ExtendedLagrangianSystem, compose_with_zeta,
    extended_lagrangian_form, zeta_energy, zeta_frame, zeta_herglotz_field,
    zeta_legendre, zeta_partial, zeta_regularity,
)
from .inverse import (
    SODESystem, di_ei_diagnostics, extended_inverse_check, naive_inverse_check,
)
from .lagrangian import (
    ContactLagrangianSystem, as_hamiltonian, energy, herglotz_field,
    herglotz_residual, lagrangian_form, regularity,
)

__version__ = "0.1.0"
