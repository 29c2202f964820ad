use std::fmt::Write as _;
use std::path::Path;

use super::metrics::{max_abs_error, rmse};
use crate::dataio::Dataset;
use crate::error::{DataError, ReportError};
use crate::observer::EstimateTrace;
use crate::tuner::truth_channel;

/// Channels every report covers.
pub const REPORT_CHANNELS: [&str; 10] = [
    "v_x", "beta", "f_x_fl", "f_x_fr", "f_x_rl", "f_x_rr", "f_y_fl", "f_y_fr", "f_y_rl", "f_y_rr",
];

/// One estimator run to be scored.
#[derive(Debug, Clone)]
pub struct Contender {
    pub name: String,
    pub predictor_id: String,
    /// Gain values used, if any.
    pub gains: Option<Vec<f64>>,
    pub trace: EstimateTrace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMetrics {
    pub channel: String,
    pub rmse: f64,
    pub max_abs_error: f64,
    /// `rmse` over the worst contender's `rmse` on the same channel.
    pub rmse_index: f64,
    pub max_abs_index: f64,
}

/// Scores of one contender on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub contender: String,
    pub dataset_id: String,
    pub predictor_id: String,
    /// FNV-1a hash of the gain values, `-` when none were given.
    pub gain_hash: String,
    pub channels: Vec<ChannelMetrics>,
}

impl RunReport {
    pub fn channel(&self, name: &str) -> Option<&ChannelMetrics> {
        self.channels.iter().find(|c| c.channel == name)
    }
}

/// Stable 64-bit FNV-1a over the bit patterns of `values`.
pub fn gain_hash(values: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

fn normalize(values: &[f64]) -> Vec<f64> {
    let worst = values.iter().copied().fold(0.0, f64::max);
    if worst == 0.0 {
        return vec![1.0; values.len()];
    }
    // A perfect estimate would score 0; keep indices inside (0, 1].
    values.iter().map(|v| (v / worst).max(f64::MIN_POSITIVE)).collect()
}

/// Score every contender on `dataset` and normalize across contenders.
pub fn compare_report(contenders: &[Contender], dataset: &Dataset, dataset_id: &str) -> Result<Vec<RunReport>, ReportError> {
    if contenders.is_empty() {
        return Err(ReportError::NoContenders);
    }
    let first = EstimateTrace::FIRST_ROW;
    let mut reports = Vec::with_capacity(contenders.len());
    for c in contenders {
        if c.trace.len() + first != dataset.len() {
            return Err(ReportError::LengthMismatch {
                estimate: c.trace.len() + first,
                truth: dataset.len(),
            });
        }
        let mut channels = Vec::new();
        for name in REPORT_CHANNELS {
            let est = c.trace.channel(name).ok_or_else(|| ReportError::MissingChannel {
                contender: c.name.clone(),
                channel: name.into(),
            })?;
            let truth = truth_channel(dataset, name).map_err(|_| DataError::MissingChannel(name.into()))?;
            channels.push(ChannelMetrics {
                channel: name.into(),
                rmse: rmse(&est, &truth[first..])?,
                max_abs_error: max_abs_error(&est, &truth[first..])?,
                rmse_index: 1.0,
                max_abs_index: 1.0,
            });
        }
        reports.push(RunReport {
            contender: c.name.clone(),
            dataset_id: dataset_id.into(),
            predictor_id: c.predictor_id.clone(),
            gain_hash: c.gains.as_deref().map_or_else(|| "-".into(), gain_hash),
            channels,
        });
    }
    for j in 0..REPORT_CHANNELS.len() {
        let r: Vec<f64> = reports.iter().map(|r| r.channels[j].rmse).collect();
        let m: Vec<f64> = reports.iter().map(|r| r.channels[j].max_abs_error).collect();
        for (rep, (ri, mi)) in reports.iter_mut().zip(normalize(&r).into_iter().zip(normalize(&m))) {
            rep.channels[j].rmse_index = ri;
            rep.channels[j].max_abs_index = mi;
        }
    }
    Ok(reports)
}

/// Bar-chart data: one row per dataset, contender and channel.
pub fn bars_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("dataset,contender,predictor,gain_hash,channel,rmse,max_abs_error\n");
    for r in reports {
        for c in &r.channels {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.dataset_id, r.contender, r.predictor_id, r.gain_hash, c.channel, c.rmse, c.max_abs_error
            );
        }
    }
    out
}

/// Spider-plot data: normalized indices, one row per axis.
pub fn spider_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("dataset,contender,metric,channel,index\n");
    for r in reports {
        for (metric, pick) in [("rmse", 0), ("max_abs_error", 1)] {
            for c in &r.channels {
                let v = if pick == 0 { c.rmse_index } else { c.max_abs_index };
                let _ = writeln!(out, "{},{},{},{},{}", r.dataset_id, r.contender, metric, c.channel, v);
            }
        }
    }
    out
}

/// Fixed-width table of RMSE values, one block per dataset.
pub fn summary_text(reports: &[RunReport]) -> String {
    let mut out = String::new();
    let mut datasets: Vec<&str> = Vec::new();
    for r in reports {
        if !datasets.contains(&r.dataset_id.as_str()) {
            datasets.push(&r.dataset_id);
        }
    }
    for d in datasets {
        let _ = writeln!(out, "dataset {d}: RMSE (max abs error)");
        let _ = write!(out, "{:<10}", "channel");
        let block: Vec<&RunReport> = reports.iter().filter(|r| r.dataset_id == d).collect();
        for r in &block {
            let _ = write!(out, " {:>24}", r.contender);
        }
        out.push('\n');
        for (j, name) in REPORT_CHANNELS.iter().enumerate() {
            let _ = write!(out, "{name:<10}");
            for r in &block {
                let c = &r.channels[j];
                let _ = write!(out, " {:>24}", format!("{:.4} ({:.4})", c.rmse, c.max_abs_error));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Write `bars.csv`, `spider.csv` and `summary.txt` into `dir`.
pub fn write_report(reports: &[RunReport], dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(|source| DataError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, text) in [
        ("bars.csv", bars_csv(reports)),
        ("spider.csv", spider_csv(reports)),
        ("summary.txt", summary_text(reports)),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|source| DataError::Io { path, source })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{canonical_scenario, generate_dataset, NoiseSpec};
    use crate::dynamics::{VehicleConfig, VehicleModel};
    use crate::observer::ObserverConfig;

    fn setup() -> (Dataset, ObserverConfig) {
        let mut s = canonical_scenario("test_lap_1").unwrap();
        s.duration = 8.0;
        let plant = VehicleModel::from_config(&VehicleConfig::default_plant());
        let ds = generate_dataset(&s, &plant, &NoiseSpec::automotive(3), 4).unwrap();
        (ds, ObserverConfig::benchmark_default())
    }

    fn contender(name: &str, cfg: &ObserverConfig, ds: &Dataset, k: &[f64]) -> Contender {
        Contender {
            name: name.into(),
            predictor_id: "benchmark".into(),
            gains: Some(k.to_vec()),
            trace: cfg.run(ds, k).unwrap(),
        }
    }

    #[test]
    fn single_contender_indices_are_one() {
        let (ds, cfg) = setup();
        let r = compare_report(&[contender("a", &cfg, &ds, &[0.0; 5])], &ds, "lap").unwrap();
        assert!(r[0].channels.iter().all(|c| c.rmse_index == 1.0 && c.max_abs_index == 1.0));
    }

    #[test]
    fn identical_contenders_identical_reports() {
        let (ds, cfg) = setup();
        let k = [0.05, 0.5, 0.9, 50.0, -40.0];
        let r = compare_report(&[contender("a", &cfg, &ds, &k), contender("b", &cfg, &ds, &k)], &ds, "lap").unwrap();
        assert_eq!(r[0].channels, r[1].channels);
        assert_eq!(r[0].gain_hash, r[1].gain_hash);
    }

    #[test]
    fn normalization_bounds() {
        let (ds, cfg) = setup();
        let r = compare_report(
            &[
                contender("open", &cfg, &ds, &[0.0; 5]),
                contender("tuned", &cfg, &ds, &[0.05, 0.5, 0.9, 50.0, -40.0]),
            ],
            &ds,
            "lap",
        )
        .unwrap();
        for j in 0..REPORT_CHANNELS.len() {
            let idx: Vec<f64> = r.iter().map(|x| x.channels[j].rmse_index).collect();
            assert!(idx.iter().all(|v| *v > 0.0 && *v <= 1.0));
            assert_eq!(idx.iter().copied().fold(0.0, f64::max), 1.0);
        }
        let text = summary_text(&r);
        assert!(text.contains("tuned") && text.contains("f_y_rr"));
        assert_eq!(bars_csv(&r).lines().count(), 1 + 2 * REPORT_CHANNELS.len());
        assert_eq!(spider_csv(&r).lines().count(), 1 + 4 * REPORT_CHANNELS.len());
    }

    #[test]
    fn missing_channel_is_named() {
        let (ds, cfg) = setup();
        let mut c = contender("a", &cfg, &ds, &[0.0; 5]);
        c.trace.labels.extended[3] = "renamed".into();
        match compare_report(&[c], &ds, "lap") {
            Err(ReportError::MissingChannel { channel, .. }) => assert_eq!(channel, "f_x_rr"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(gain_hash(&[]), "cbf29ce484222325");
        assert_ne!(gain_hash(&[0.0]), gain_hash(&[-0.0]));
    }
}
