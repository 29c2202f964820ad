use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;

use crate::dynamics::{FORCE_LABELS, INPUT_LABELS, OUTPUT_LABELS, STATE_LABELS};
use crate::error::DataError;

/// Prefix of measured-output columns (`meas_a_x`, `meas_omega_fl`, ...).
pub const MEAS_PREFIX: &str = "meas_";

/// What the dataset will be used for; decides the required channel set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Inputs, measurements and ground truth.
    Training,
    /// Inputs and measurements only.
    Deployment,
    /// No required channels, e.g. observer estimates.
    Any,
}

/// Named channels over a common uniform time grid.
///
/// Ground-truth columns use the predictor labels (`v_x`, `omega_rr`,
/// `f_y_fl`, ...); measured outputs carry the `meas_` prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dt: f64,
    pub time: Vec<f64>,
    pub channels: IndexMap<String, Vec<f64>>,
    pub metadata: IndexMap<String, String>,
}

pub fn input_channels() -> Vec<String> {
    INPUT_LABELS.iter().map(|s| s.to_string()).collect()
}

pub fn measurement_channels() -> Vec<String> {
    OUTPUT_LABELS.iter().map(|s| format!("{MEAS_PREFIX}{s}")).collect()
}

pub fn state_truth_channels() -> Vec<String> {
    STATE_LABELS.iter().map(|s| s.to_string()).collect()
}

pub fn force_truth_channels() -> Vec<String> {
    FORCE_LABELS.iter().map(|s| s.to_string()).collect()
}

pub fn required_channels(role: Role) -> Vec<String> {
    if role == Role::Any {
        return Vec::new();
    }
    let mut req = input_channels();
    req.extend(measurement_channels());
    if role == Role::Training {
        req.extend(state_truth_channels());
        req.extend(force_truth_channels());
    }
    req
}

fn unit_of(name: &str) -> &'static str {
    let base = ["meas_", "pred_", "innov_", "delta_"]
        .iter()
        .find_map(|p| name.strip_prefix(p))
        .unwrap_or(name);
    match base {
        "t" => "s",
        "steer" | "beta" => "rad",
        "engine_torque" => "N m",
        "gear" => "-",
        n if n.starts_with("brake_") => "bar",
        n if n.starts_with("a_") => "m/s^2",
        n if n.contains("omega") || n.contains("yaw_rate") => "rad/s",
        n if n.starts_with("v_") => "m/s",
        n if n.starts_with("f_") => "N",
        n if n.starts_with("relaxed_slip_") => "-",
        n if n.starts_with("filtered_a_") => "m/s^2",
        _ => "?",
    }
}

impl Dataset {
    pub fn new(dt: f64, time: Vec<f64>) -> Self {
        Dataset {
            dt,
            time,
            channels: IndexMap::new(),
            metadata: IndexMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn channel(&self, name: &str) -> Result<&[f64], DataError> {
        self.channels
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| DataError::MissingChannel(name.to_string()))
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.channels.insert(name.into(), values);
    }

    /// Checks equal lengths, a positive period and the channels of `role`.
    pub fn validate(&self, role: Role) -> Result<(), DataError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DataError::InvalidPeriod(self.dt));
        }
        if self.time.is_empty() {
            return Err(DataError::Empty);
        }
        for (name, values) in &self.channels {
            if values.len() != self.time.len() {
                return Err(DataError::LengthMismatch {
                    channel: name.clone(),
                    expected: self.time.len(),
                    got: values.len(),
                });
            }
        }
        for name in required_channels(role) {
            self.channel(&name)?;
        }
        Ok(())
    }

    /// Row-major view of the listed channels.
    pub fn rows(&self, names: &[String]) -> Result<Vec<Vec<f64>>, DataError> {
        let cols: Vec<&[f64]> = names.iter().map(|n| self.channel(n)).collect::<Result<_, _>>()?;
        Ok((0..self.len()).map(|k| cols.iter().map(|c| c[k]).collect()).collect())
    }

    /// Serialize to CSV text: metadata comments, a units comment, then `t` and
    /// every channel in insertion order. Floats use the shortest exact form.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# dt: {}\n", self.dt));
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut header = vec!["t".to_string()];
        header.extend(self.channels.keys().cloned());
        let units: Vec<String> = header.iter().map(|h| format!("{h}[{}]", unit_of(h))).collect();
        out.push_str(&format!("# units: {}\n", units.join(" ")));
        out.push_str(&header.join(","));
        out.push('\n');
        let cols: Vec<&Vec<f64>> = self.channels.values().collect();
        for k in 0..self.len() {
            out.push_str(&self.time[k].to_string());
            for c in &cols {
                out.push(',');
                out.push_str(&c[k].to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str, role: Role) -> Result<Self, DataError> {
        let mut metadata = IndexMap::new();
        let mut dt = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim();
            if let Some((k, v)) = body.split_once(':') {
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "dt" => {
                        dt = Some(v.parse::<f64>().map_err(|_| DataError::InvalidPeriod(f64::NAN))?);
                    }
                    "units" => {}
                    _ => {
                        metadata.insert(k.to_string(), v.to_string());
                    }
                }
            }
        }

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| DataError::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.first().map(String::as_str) != Some("t") {
            return Err(DataError::MissingChannel("t".into()));
        }
        let mut time = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
        for record in reader.records() {
            let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.len() != header.len() {
                return Err(DataError::MalformedRow {
                    line,
                    message: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| DataError::MalformedRow {
                    line,
                    message: format!("column `{}`: cannot parse `{field}`", header[j]),
                })?;
                if j == 0 {
                    time.push(v);
                } else {
                    cols[j - 1].push(v);
                }
            }
        }
        if time.is_empty() {
            return Err(DataError::Empty);
        }
        let dt = match dt {
            Some(dt) => dt,
            None if time.len() > 1 => time[1] - time[0],
            None => return Err(DataError::InvalidPeriod(f64::NAN)),
        };
        let mut ds = Dataset::new(dt, time);
        ds.metadata = metadata;
        for (name, values) in header.into_iter().skip(1).zip(cols) {
            ds.channels.insert(name, values);
        }
        ds.validate(role)?;
        Ok(ds)
    }
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let io = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(dataset.to_csv_string().as_bytes()).map_err(io)
}

pub fn load_dataset(path: &Path, role: Role) -> Result<Dataset, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Dataset::from_csv_str(&text, role)
}
