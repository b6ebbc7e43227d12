//! Yard planning engine for import container terminals.
//!
//! Containers are classified by discriminant scores, stacked by a
//! slot-assignment solver inside category segments, and collected through
//! a truck appointment schedule that is rebalanced against gate capacity.

pub mod config;
pub mod fixture;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod placement;
pub mod scenario;
pub mod scheduler;
pub mod zscore;

pub use config::{ConfigError, EngineConfig};
pub use manifest::{
    parse_manifest, serialize_manifest, source_adapter, Arrival, ContainerSource, Manifest,
    ManifestError, RowError, SourceError, SourceKind,
};
pub use metrics::{
    histogram, pt_improvement, render_csv, render_ladder_text, render_text, throughput_gain,
    HistogramBin, MetricsError, MetricsReport,
};
pub use model::{
    containers_above, validate_yard, AppointmentRef, Container, ContainerId, GatePos, ModelError,
    Segment, Slot, StackPos, TerminalParams, TimeBlock, TruckVisit, Violation, VisitOrigin,
    YardLayout, YardState,
};
pub use placement::{
    expected_rehandles, partition_segments, place_incremental, place_randomly, placement_objective,
    segment_for, simulate_retrievals, solve_batch, solve_greedy, zorder_violations,
    IncrementalOptions, ObjectiveWeights, Optimality, PickupKey, PickupOrder, PlacementError,
    PlacementModel, PlacementPlan, PlacementRequest, Relocation, SearchBudget, SegmentPlan,
    SegmentSpan,
};
pub use scenario::{
    pickup_order, play_day, prepare, run_ladder, run_prepared, run_scenario, slack_candidates,
    BlockLoad, Dataset, DayOutcome, Prepared, Scenario, ScenarioError, ScenarioResult,
};
pub use scheduler::{
    deadline_block, departure_time, detect_congestion, fill_slack, internal_op_time, is_congested,
    processing_time, propose_block, rebalance, run_recursive, AppointmentObserver, Booking,
    Congestion, CreatedAppointment, NoObserver, RebalanceReport, Schedule, ScheduleError,
    SlackCandidate, UnresolvedVisit, VisitMove,
};
pub use zscore::{
    classify, classify_all, default_pickup_probability, discriminant_scores, Classification,
    ClassifyError, DiscriminantCoefficients, DiscriminantScores, OperationalCategory, StackClass,
};
