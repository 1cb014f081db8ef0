//! Walk-forward experiment engine: contiguous train/test split, online
//! learning through the test window, per-day PnL decomposition in return
//! space and portfolio statistics.

mod config;
mod engine;
mod records;
mod stats;

pub use config::{split, BacktestConfig, Hyper, Strategy, MIN_DATES};
pub use engine::{fit_features, run, AgentSummary, BacktestOutput, FitSummary};
pub use records::{read_records, write_records, StepRecord, RECORD_HEADER};
pub use stats::{
    aggregate_portfolio, annualized_compound, build_report, cumulative, decompose_funding, normal_cdf,
    performance_stats, PerformanceReport, StatsRow, StrategyReport,
};
