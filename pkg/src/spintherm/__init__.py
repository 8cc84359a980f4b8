"""Thermal-equilibrium diagnostics for finite spin chains.

Dense exact-diagonalization toolkit for deciding, at desk scale, whether
states of a spin-1/2 chain are in macroscopic or microscopic thermal
equilibrium: macro-space decompositions, canonical-typicality machinery,
eigenstate scans, exact time averaging, and log-domain estimates of the
corresponding macroscopic magnitudes.
"""

from .register import SpinRegister
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    PureState,
    SpectralDecomposition,
    Subspace,
    eig_hermitian,
    embed_site_operator,
    partial_trace,
    partial_trace_state,
    project_onto,
    trace_norm,
    trace_norm_distance,
)
from .macrostates import (
    CoarseGrainSpec,
    MacroDecomposition,
    MacroObservableFamily,
    build_cell_magnetization,
    coarse_grain,
    energy_shell,
    find_equilibrium_macrostate,
    joint_decomposition,
    microcanonical_state,
)
from .models import (
    FieldConfiguration,
    ModelParams,
    build_gibbs,
    build_h2,
    build_h5,
    build_random_basis_hamiltonian,
    product_state,
    sample_fields,
)
from .diagnostics import (
    EthScanReport,
    MateVerdict,
    MiteVerdict,
    eth_scan,
    mate_test,
    mite_implies_mate_check,
    mite_test,
    mixed_state_mate_sweep,
    normality_test,
    offdiag_eth_scan,
    relative_equilibrium_test,
    tmate_test,
)
from .typicality import (
    Bipartition,
    abstract_bipartition,
    adversarial_subsystem,
    ensemble_equivalence_sweep,
    gap_mite_conjecture_probe,
    mite_most_estimate,
    moment_check,
    psw_check,
    sample_gap,
    sample_uniform,
    variance_bound_check,
)
from .dynamics import (
    EvolutionContext,
    build_context,
    evolve,
    gap_degeneracy_scan,
    infinite_time_average,
    mate_eth_average_bound,
    relaxation_experiment,
    time_variance,
)
from .estimates import (
    LogNumber,
    dmc_heuristics,
    delta_choice,
    exact_binomial_deviation,
    ideal_gas_level_count,
    mate_epsilon_estimate,
)

__version__ = "0.1.0"
