"""Single-qubit dihedral-group randomized benchmarking.

Simulates noisy gate sequences over the order-2j dihedral gate group,
estimates the two decay rates and the average gate fidelity, and runs the
interleaved variant that characterizes the T gate directly with a
guaranteed fidelity interval.
"""

from .config import ConfigError, ExperimentConfig, load_config
from .dihedral import (
    DecayRates,
    GroupElement,
    Irrep,
    decay_params,
    group_elements,
    pauli_element,
    twirl,
)
from .estimation import (
    BoundEstimate,
    ExponentialFit,
    FitFailureError,
    FitReport,
    assemble_interleaved,
    assemble_standard,
    fit_exponential_with_offset,
    fit_single_exponential,
    fit_standard,
    interleaved_bound,
)
from .liouville import (
    Rotation,
    UnphysicalError,
    apply,
    assert_cptp,
    avg_fidelity,
    chi_to_fidelity,
    choi_matrix,
    compose,
    effect_vector,
    expectation,
    fidelity_to_chi,
    is_cptp,
    rotation_superop,
    state_vector,
    unitary_conjugation_superop,
)
from .noise import (
    GateNoiseMap,
    NoiseSpec,
    composed_spec,
    depolarizing,
    depolarizing_spec,
    no_noise,
    over_rotation_angle,
    over_rotation_for_fidelity,
    over_rotation_spec,
)
from .protocol import (
    DecayDataset,
    ExperimentPlan,
    SequenceRecord,
    build_record,
    decay_dataset,
    estimate_pr,
    exhaustive_pr,
    sample_sequence,
    survival_exact,
    survival_sampled,
)

__version__ = "0.1.0"
