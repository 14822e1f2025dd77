"""Deterministic simulations of satellite-disciplined absolute time and
in-band message synchronization for vehicle ad hoc networks.

The package builds nominal navigation constellations, sweeps sky visibility
through sector elevation masks, synthesizes measurements and solves for
position/time, models receiver pulse-per-second error, and pits
satellite-disciplined clocks against message-exchange protocols.
"""

from .analysis import (
    OffsetSeries,
    OffsetStats,
    estimate_jitter_std_ns,
    guard_interval_gain,
    load_offset_series_csv,
    moving_window_mean,
    offset_statistics,
    ranging_error,
    relative_position_error,
    render_stats_table,
    required_timing_accuracy,
    save_offset_series_csv,
)
from .clocks import (
    PPS_PRESET_NAMES,
    DisciplinedClock,
    DriftProcess,
    PpsErrorModel,
    QuartzClock,
    RelativeClockParams,
    TimeTransferState,
    discipline_clock,
    gps_to_utc,
    pairwise_pps_series,
    pps_offset_at,
    pps_preset_fleet,
    pps_preset_pair,
    pps_series_ns,
    read_clock,
    relative_clock_params,
    time_transfer,
)
from .constants import (
    EARTH_RADIUS_M,
    EARTH_ROTATION_RATE,
    GM_EARTH,
    SPEED_OF_LIGHT,
)
from .constellation import (
    Constellation,
    ConstellationSet,
    EcefState,
    OrbitElements,
    build_nominal_constellation,
    elevation_azimuth,
    lla_to_ecef,
    propagate,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateClockError,
    DegenerateGeometryError,
    EmptyInputError,
    EmptyResultError,
    InsufficientReceiversError,
    InsufficientSatellitesError,
    ScenarioValidationError,
    SimulationError,
    SingularGeometryError,
    UndefinedRequirementError,
)
from .estimation import (
    DopValues,
    MeasurementNoiseModel,
    PseudorangeSet,
    PvtSolution,
    ReceiverTruth,
    dop,
    simulate_pseudoranges,
    solve_pvt,
    solve_velocity_drift,
    static_time_solve,
    timing_uncertainty,
)
from .protocols import (
    PROTOCOL_NAMES,
    ChannelModel,
    ComparisonReport,
    ComparisonSpec,
    DelayDistribution,
    SyncResult,
    SyncSummary,
    VehicleNode,
    compare_protocols,
    run_cts,
    run_ftsp,
    run_gnss_sync,
    run_rbs,
    run_tpsn,
)
from .rng import child_rng, derive_seed
from .scenario import (
    PRESET_NAMES,
    RunArtifacts,
    Scenario,
    load_preset,
    load_scenario,
    parse_scenario,
    run,
)
from .visibility import (
    AvailabilityClass,
    AvailabilityReport,
    MaskSchedule,
    Trajectory,
    VisibilityMask,
    availability_summary,
    classify_epoch,
    street_canyon,
    urban_canyon_schedule,
    visible_satellites,
)

__version__ = "0.1.0"
