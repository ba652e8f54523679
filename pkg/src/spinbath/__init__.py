"""Collective-spin Lindblad dynamics.

Builds Markovian generators for spin ensembles damped by independent or
common baths, integrates the master equation, and evaluates the entropy
rates, variances, and stationary-subspace certificates that characterize
how entangled ensemble states decohere.
"""

from .config import (
    ConfigError,
    ScenarioConfig,
    config_digest,
    config_to_dict,
    load_config,
    parse_config,
)
from .diagnostics import (
    RateReport,
    StationaryReport,
    certify_stationary,
    coupled_state_rate,
    entanglement_entropy,
    entropy_rate_analytic,
    entropy_rate_estimate,
    entropy_rate_numeric,
    linear_entropy,
    pairing_residual,
    pure_fidelity,
    schmidt_number,
    variance_exact,
    variance_x_approx,
    von_neumann_entropy,
)
from .generator import (
    CommonBath,
    Generator,
    IndependentBath,
    IntegrationAbortError,
    NonSymmetricError,
    NotPositiveSemidefiniteError,
    Trajectory,
    apply_generator,
    build_generator,
    canonical_jumps,
    coupling_operators,
    evolve,
    stationary_residual,
    validate_damping,
)
from .spin_algebra import (
    CoupledLevel,
    SpinOperator,
    SpinQuantum,
    angular_momentum_ops,
    clebsch_gordan,
    composite_coupling_ops,
    coupled_basis_state,
    embed,
)
from .states import (
    DensityMatrix,
    EntangledStateSpec,
    coefficient_profile,
    coherent_x,
    density_from_pure,
    entangled_state,
    fock_state,
    partial_trace,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SpinQuantum",
    "SpinOperator",
    "CoupledLevel",
    "angular_momentum_ops",
    "embed",
    "composite_coupling_ops",
    "clebsch_gordan",
    "coupled_basis_state",
    "DensityMatrix",
    "EntangledStateSpec",
    "fock_state",
    "coherent_x",
    "coefficient_profile",
    "entangled_state",
    "density_from_pure",
    "partial_trace",
    "IndependentBath",
    "CommonBath",
    "Generator",
    "Trajectory",
    "NonSymmetricError",
    "NotPositiveSemidefiniteError",
    "IntegrationAbortError",
    "validate_damping",
    "canonical_jumps",
    "coupling_operators",
    "build_generator",
    "apply_generator",
    "stationary_residual",
    "evolve",
    "RateReport",
    "StationaryReport",
    "linear_entropy",
    "pure_fidelity",
    "entropy_rate_numeric",
    "entropy_rate_analytic",
    "entropy_rate_estimate",
    "von_neumann_entropy",
    "entanglement_entropy",
    "variance_exact",
    "variance_x_approx",
    "pairing_residual",
    "schmidt_number",
    "coupled_state_rate",
    "certify_stationary",
    "ConfigError",
    "ScenarioConfig",
    "parse_config",
    "load_config",
    "config_to_dict",
    "config_digest",
]
