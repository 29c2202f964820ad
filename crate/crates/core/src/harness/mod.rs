//! Metrics, comparison reports and the `simloop` command line.
//!
//! A report scores each contender (an observer config, an open-loop run, an
//! external predictor) channel by channel and normalizes every score by the
//! worst contender on that channel, so indices fall in `(0, 1]`.

pub mod cli;
mod metrics;
mod report;

pub use metrics::{max_abs_error, rmse};
pub use report::{
    bars_csv, compare_report, gain_hash, spider_csv, summary_text, write_report, ChannelMetrics, Contender, RunReport,
    REPORT_CHANNELS,
};
