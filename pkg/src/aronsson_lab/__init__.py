"""Numerical laboratory for L-infinity variational calculus of
vector-valued maps: Aronsson PDE systems, infinity-Laplacians, gradient
flows, and p-Dirichlet relaxation."""

__version__ = "0.1.0"

from .linalg import (
    Jet,
    ProjectionPair,
    contract,
    dual_operator_norm,
    h_jacobian,
    identity_tensor,
    max_eigen_field,
    operator_norm,
    pair_tensor,
    svd_projections,
)
from .hamiltonians import (
    Hamiltonian,
    dual_norm_hamiltonian,
    euclidean_hamiltonian,
    hamiltonian_from_config,
    rank1_monotonicity_probe,
    segment_flat_hamiltonian,
)
from .operators import (
    OperatorReport,
    contracted_aronsson_system,
    contracted_inf_system,
    dual_inf_laplacian,
    full_aronsson,
    gamma_inf,
    inf_laplacian,
    p_euler_lagrange_residual,
    residual_split,
    tangential_aronsson,
    tangential_inf_laplacian,
)
from .families import (
    Domain,
    KProfile,
    MapFamily,
    affine_map,
    box_domain,
    curve_map,
    constant_map,
    eigen_field_jet,
    embedded_scalar_map,
    exp_diff_map,
    exp_sum_map,
    family_from_config,
    fd_jet,
    interface_locus,
    k_integral_map,
    k_profile,
    quadratic_map,
    quadratic_map_from_jet,
    rank_one_map,
    rhombus_domain,
    saddle_map,
    scalar_aronsson_map,
    separable_map,
)
from .flows import (
    FlowTrace,
    horizontal_flow,
    phase_split,
    tangential_flow,
    trajectory_identities,
    vertical_residual_at,
    vertical_system_residual,
)
from .relaxation import (
    DirichletProblem,
    GridField,
    am_perturbation_probe,
    discrete_energy_inf,
    discrete_energy_p,
    energy_comparison,
    family_energy_inf,
    lip_estimate,
    node_jet,
    p_descent_solve,
    p_sweep_diagnostics,
    split_residual_field,
)
