"""Benchmarks for multi-qubit gates computed from reduced Choi matrices."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ChannelTrajectory,
    ChoiMatrix,
    SubsetSelector,
    SuperOperator,
    adjoint_superop,
    apply_choi,
    choi_of_unitary,
    choi_to_superop,
    compose,
    depolarizing_choi,
    identity_choi,
    is_cp,
    partial_trace,
    reduced_choi,
    superop_to_choi,
    tensor_product,
    trace_in,
    trace_out,
)
from .gatelab import (  # noqa: E402
    FluctuationSpec,
    HamiltonianSpec,
    LindbladSpec,
    PauliTerm,
    bloch_redfield_choi,
    build_hamiltonian,
    evolve_unitary,
    fluctuating_channel,
    gaussian_dephasing_choi,
    lindblad_channel,
    lindblad_generator,
    systematic_perturbation,
    trajectory,
)
from .metrics import max_pure_state_discrepancy, schatten2_diff, sigma_max_diff  # noqa: E402
from .benchmarks import (  # noqa: E402
    divisibility_defect,
    ds_violation,
    full_suite,
    observable_deviation,
    rank_property,
    rank_residue,
    symmetry_deviation,
    thermal_fixed_point_check,
)
