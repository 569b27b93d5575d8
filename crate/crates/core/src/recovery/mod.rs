//! Inverse-problem pipeline: heat-flow differences, their moments, heat-kernel comparison and
//! the gauge obstruction.

mod gauge;
mod moments;
mod pipeline;

pub use gauge::{gauge_pullback, GaugeMap, PulledBack};
pub use moments::{moment_table_from_samples, moment_vector, vanishing_test, MomentTable, VanishingReport, DEFAULT_MOMENTS};
pub use pipeline::{
    dtn_refinement_study, gauge_experiment, recover_heat_kernel_samples, KernelSample, MetricPair, MomentRow,
    RecoveryReport, RecoverySettings, RefinementReport, RefinementRow, StudyGeometry, GAUGE_RATIO,
};
