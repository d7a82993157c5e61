"""Array-radar pulse-wave simulation, echo separation and PTT/PWV estimation."""

from .beamforming import (
    CaponSpectrum,
    CorrelationMatrix,
    ModeVector,
    capon_spectrum,
    mvdr_separate,
    mvdr_weight,
    sample_correlation,
    steering_vector,
)
from .errors import (
    ConfigurationError,
    DataFormatError,
    EstimationError,
    GateError,
    NumericalError,
    ParameterError,
    PulsewaveError,
)
from .estimate import (
    DisplacementEstimate,
    PttResult,
    estimate_ptt,
    extract_displacement,
    match_permutation,
    pwv,
    rms_error,
)
from .ga import GAConfig, GARunResult, Individual, run as ga_run
from .ingest import (
    GateSpec,
    RangeProfileSeries,
    range_gate,
    read_range_profile,
    remove_dc,
    whiten,
    write_range_profile,
)
from .jade import (
    CumulantSet,
    JointDiagResult,
    cumulant_matrices,
    fourth_cumulant,
    jade_separate,
    joint_diagonalize,
)
from .modelsep import (
    ImpulseResponse,
    ObjectiveBreakdown,
    UnmixingMatrix,
    beam_pattern,
    f1,
    f2,
    f3,
    f4,
    flatness_lambda2,
    impulse_response,
    objective,
)
from .scenario import (
    ArrayScenario,
    MixingMatrix,
    SlowTimeSeries,
    TargetSpec,
    channel_matrix,
    close_targets_scenario,
    default_scenario,
    phase_modulate,
    simulate,
    synth_displacement,
)

__version__ = "0.1.0"
