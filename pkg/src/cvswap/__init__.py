"""Truncated-Fock-space linear optics with ancilla-free overlap estimation."""

__version__ = "0.1.0"

from .fock import (  # noqa: F401
    Beamsplitter,
    CutoffSpec,
    Displacement,
    FockState,
    GateSpec,
    MixedEnsemble,
    ModeSwap,
    PhaseRotation,
    PhotonPattern,
    PreparationLeakError,
    Squeeze,
    TwoModeSqueeze,
    apply_circuit,
    apply_gate,
    basis_state,
    dagger,
    gate_matrix,
    inner_product,
    invert_circuit,
    load_state,
    pad,
    prepare,
    rectangular_decompose,
    save_state,
    single_particle_matrix,
    tensor,
    truncation_weight,
    local_cumulative,
)
from .sampling import (  # noqa: F401
    Seed,
    ShotOutcome,
    estimator_statistics,
    probability_vector,
    sample_patterns,
)
from .estimators import (  # noqa: F401
    CutoffPlan,
    EstimatorResult,
    analytic_squeezed_overlap,
    analytic_swap2m_squeezed,
    cutoff_for_coherent_chernoff,
    cutoff_for_coherent_exact,
    cutoff_for_coherent_normal,
    cutoff_for_squeezed,
    cv_swap_estimate,
    error_bound_global,
    error_bound_local,
    parity_overlap_estimate,
    parity_overlap_expectation,
    swap2m_expectation,
    swap2m_profile,
)
from .dv import (  # noqa: F401
    BellOutcome,
    DVEnsemble,
    DVState,
    dv_swap_estimate,
    dv_swap_expectation,
    qudit_bell_state,
    swap_eigenbasis,
    v_unitary,
    w_unitary,
)
from .protocols import (  # noqa: F401
    HybridOutcome,
    PermOutcomeWeight,
    compile_cost,
    compile_cost_expectation,
    hybrid_swap_estimate,
    hybrid_swap_expectation,
    perm_expectation,
    perm_test,
    two_copy_expectation,
    two_copy_test,
)
