//! Scoring and the experiment drivers built on the estimators.

mod ormse;
mod suite;
mod variance;

pub use ormse::{ormse, summarize, OrmseScore, Summary};
pub use suite::{run_benchmark_suite, summarize_reports, MethodSummary, OrmseReport, PredictorKind, SuiteOptions};
pub use variance::{
    run_consistency_experiment, run_variance_experiment, std_ratios, ConsistencyRow, VarianceReport, VarianceSetup,
};
