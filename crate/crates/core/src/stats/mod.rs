//! Statistics for comparing runs: rank test, effect size, hypervolume and
//! the aggregate report.

mod effect;
mod hypervolume;
mod rank;
mod report;

pub use effect::{vargha_delaney_a, EffectLabel};
pub use hypervolume::{hypervolume, hypervolume_normalized, HvResult};
pub use rank::{
    mann_whitney_u, mann_whitney_u_with, median, StatsError, UMethod, UTest, EXACT_MAX_N,
};
pub use report::{
    analyze, compare_runs, fronts_csv, AlgorithmReport, BenchmarkReport, Distribution,
    ObjectiveSummary, Report, ReportError, ALPHA,
};
