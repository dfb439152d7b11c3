//! Trace generation, replay and measurement around the HEDCS engine.

pub mod bench;
pub mod report;
pub mod run;
pub mod trace;

pub use bench::{fit_loglog, scaling_bench, BenchEngine, BenchError, BenchPoint, BenchReport, BenchSpec, LogLogFit};
pub use report::{bounds_report, BoundsReport};
pub use run::{
    engine_config, run_trace, AddLayerSummary, MetricsRecord, RunConfig, RunError, RunOutput, RunSummary,
    SparsifySummary,
};
pub use trace::{generate_trace, Trace, TraceError, TraceEvent, TraceHeader, TraceKind};
