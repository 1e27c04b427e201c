"""Self-similar collapsing-cavity solutions of the radial compressible Euler
equations: admissibility conditions, phase-plane analysis, trajectory
construction, and physical field reconstruction."""

from .params import (
    ConditionCheck,
    DerivedConstants,
    GasParams,
    ParameterError,
    Params,
    PRESETS,
    SimilarityParams,
    check_algebraic_conditions,
    derive,
)
from .phaseplane import (
    ClassificationError,
    CriticalPoint,
    DegenerateLinearizationError,
    NullclineDomainError,
    PhasePoint,
    RhsValues,
    SonicPoleError,
    check_conditions_G_to_J,
    classified_points,
    classify,
    conditions_pass,
    critical_points,
    eval_rhs,
    full_condition_report,
    linearize,
    nullcline_F,
    nullcline_G,
)
from .trajectory import (
    GammaOptions,
    GammaResult,
    RayAnalysisP2,
    TrajectoryError,
    analyze_p2_rays,
    build_gamma,
    cross_P6,
    dg_limit_at_p2,
    integrate_phase,
    recover_x,
    start_at_P2,
)
from .reconstruct import (
    BoundaryReport,
    DensityProfile,
    FlowField,
    FluidRegionError,
    IntegrabilityReport,
    ReconstructError,
    ResidualReport,
    adiabatic_variation,
    boundary_exponents,
    density_from_adiabatic,
    flow_field,
    integrability_check,
    interface_kinematics_error,
    residual_check,
)

__version__ = "0.1.0"
