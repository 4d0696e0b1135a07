"""Joint uplink power control, MVDR detection and IRS passive beamforming
under per-user latency constraints, with a Monte-Carlo sweep harness."""

from .channel import (
    ChannelSet,
    GainParams,
    MultiAntennaChannels,
    PathLossParams,
    SteeringVector,
    path_loss_db,
    perturb_csi,
    sample_channel_set,
    sample_direct_channel,
    sample_irs_links,
    sample_multi_antenna_channels,
    ula_steering,
    ura_steering,
)
from .system import (
    EffectiveCoeffs,
    LatencyProfile,
    SolverState,
    SystemConfig,
    dbm_to_watts,
    effective_channel,
    effective_coeffs,
    latency,
    protection_ratios,
    sinr,
    watts_to_dbm,
)
from .power_detect import (
    DegenerateDetectorError,
    InfeasibleError,
    InterferenceMatrix,
    PowerSolveReport,
    build_interference,
    mvdr_bank,
    mvdr_detector,
    solve_power_fixed_point,
    spectral_radius,
)
from .beamform_admm import (
    AdmmResult,
    AdmmState,
    FractionalObjective,
    SingularDenominatorError,
    admm_q_step,
    admm_theta_step,
    run_admm,
    sum_of_ratios,
    update_beta,
)
from .beamform_ccmo import (
    CcmoResult,
    QuadraticForm,
    RetractionSingularityError,
    assemble_quadratic,
    largest_eigen_magnitude,
    optimize_phases,
    retract,
    riemannian_gradient,
    run_ccmo,
)
from .framework import (
    ConvergenceTrace,
    FrameworkConfig,
    PowerCapResult,
    solve,
    solve_multi_antenna,
    solve_with_power_caps,
)
from .experiments import (
    ExperimentSpec,
    ExperimentTable,
    SpecError,
    TrialResult,
    emit_csv,
    read_csv,
    run_experiment,
    scenario_default,
)

__version__ = "0.1.0"
