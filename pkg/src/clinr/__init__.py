"""Clifford noise reduction: CliNR/CZNR construction, simulation under the
ion-chain noise model, and tabu-search optimization of verification
sequences."""

from .builder import (
    ClinrProgram,
    CprepLayer,
    VerificationSequence,
    build_clinr,
    build_cprep,
    build_cznr,
    build_deferred_cznr_experiment,
    build_resource_prep,
    build_stabilizer_measurement,
    program_descriptor,
    serialize_program,
)
from .circuits import (
    Circuit,
    Op,
    SymplecticMap,
    as_symplectic,
    circuit_stabilizers,
    parse_circuit,
    propagate,
    random_clifford_circuit,
    resource_stabilizers,
    serialize_circuit,
    truncate,
)
from .estimator import (
    EstimateResult,
    estimate_plog,
    exact_output_distribution,
    exhaustive_single_fault_check,
)
from .noise import (
    FaultEvent,
    FaultLocation,
    NoiseParams,
    enumerate_single_faults,
    sample_faults,
    schedule_faults,
)
from .pauli import (
    GeneratorSet,
    PauliOp,
    canonical_form,
    commutes_with_all,
    format_pauli,
    in_span,
    multiply,
    parse_pauli,
    rank,
    sample_uniform_element,
    symplectic_product,
)
from .proxy import OmegaTable, precompute_omega, proxy
from .search import (
    OptimizationTrace,
    SearchParams,
    TabuList,
    alpha,
    count_sequences,
    count_subgroups,
    global_optimize,
    proxy_optimize,
    two_step_optimize,
)

__version__ = "0.1.0"
