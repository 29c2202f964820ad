use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::CORNERS;
use crate::error::ConfigError;

/// A free gain parameter and its search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainParam {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// `K[row, col] = sign * k[param]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainEntry {
    pub row: String,
    pub col: String,
    pub param: String,
    #[serde(default = "plus_one")]
    pub sign: i8,
}

fn plus_one() -> i8 {
    1
}

/// Sparse placement of a few shared parameters inside the correction gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainTemplate {
    pub params: Vec<GainParam>,
    pub entries: Vec<GainEntry>,
}

/// Gain matrix together with the labels of its rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub k: DMatrix<f64>,
}

impl GainMatrix {
    pub fn zeros(rows: Vec<String>, cols: Vec<String>) -> Self {
        let k = DMatrix::zeros(rows.len(), cols.len());
        GainMatrix { rows, cols, k }
    }

    /// Coordinates and values of the nonzero entries, row-major.
    pub fn nonzeros(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.k.nrows() {
            for j in 0..self.k.ncols() {
                let v = self.k[(i, j)];
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.cols.iter().position(|c| c == col)?;
        Some(self.k[(i, j)])
    }
}

impl GainTemplate {
    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.params.iter().map(|p| (p.lower, p.upper)).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut names = HashSet::new();
        for p in &self.params {
            if !names.insert(p.name.as_str()) {
                return Err(ConfigError::Invalid(format!("gain parameter `{}` declared twice", p.name)));
            }
            if !(p.lower < p.upper) || !p.lower.is_finite() || !p.upper.is_finite() {
                return Err(ConfigError::Invalid(format!(
                    "gain parameter `{}`: bounds must satisfy lower < upper",
                    p.name
                )));
            }
        }
        let mut cells = HashSet::new();
        let mut used = HashSet::new();
        for e in &self.entries {
            if !names.contains(e.param.as_str()) {
                return Err(ConfigError::UnknownLabel(format!("gain parameter `{}`", e.param)));
            }
            if e.sign != 1 && e.sign != -1 {
                return Err(ConfigError::Invalid(format!("entry ({}, {}): sign must be +1 or -1", e.row, e.col)));
            }
            if !cells.insert((e.row.as_str(), e.col.as_str())) {
                return Err(ConfigError::Invalid(format!("entry ({}, {}) appears twice", e.row, e.col)));
            }
            used.insert(e.param.as_str());
        }
        if let Some(p) = self.params.iter().find(|p| !used.contains(p.name.as_str())) {
            return Err(ConfigError::Invalid(format!("gain parameter `{}` is not used by any entry", p.name)));
        }
        Ok(())
    }

    /// Place `k` into a `rows x cols` gain.
    pub fn assemble(&self, k: &[f64], rows: &[String], cols: &[String]) -> Result<GainMatrix, ConfigError> {
        self.validate()?;
        if k.len() != self.params.len() {
            return Err(ConfigError::Dimension {
                what: "gain parameter vector".into(),
                expected: self.params.len(),
                got: k.len(),
            });
        }
        for (p, v) in self.params.iter().zip(k) {
            if !v.is_finite() {
                return Err(ConfigError::Invalid(format!("gain parameter `{}` is not finite", p.name)));
            }
            if *v < p.lower || *v > p.upper {
                log::warn!("gain parameter `{}` = {v} lies outside [{}, {}]", p.name, p.lower, p.upper);
            }
        }
        let mut gain = GainMatrix::zeros(rows.to_vec(), cols.to_vec());
        for e in &self.entries {
            let i = rows
                .iter()
                .position(|r| *r == e.row)
                .ok_or_else(|| ConfigError::UnknownLabel(format!("gain row `{}`", e.row)))?;
            let j = cols
                .iter()
                .position(|c| *c == e.col)
                .ok_or_else(|| ConfigError::UnknownLabel(format!("gain column `{}`", e.col)))?;
            let p = self.params.iter().position(|p| p.name == e.param).expect("validated");
            gain.k[(i, j)] = f64::from(e.sign) * k[p];
        }
        Ok(gain)
    }
}

/// Free function form of [`GainTemplate::assemble`].
pub fn assemble_gain(
    template: &GainTemplate,
    k: &[f64],
    rows: &[String],
    cols: &[String],
) -> Result<GainMatrix, ConfigError> {
    template.assemble(k, rows, cols)
}

/// Reference optimum of the benchmark template, in parameter order.
pub const REFERENCE_GAINS: [f64; 5] = [0.0808, 0.1328, 0.9593, 98.42, -75.32];

/// The five-parameter benchmark template.
///
/// - `k_vx_omega`: every wheel-speed innovation onto `v_x`;
/// - `k_yaw_yaw`: yaw-rate innovation onto `yaw_rate`;
/// - `k_omega_omega`: each wheel-speed innovation onto its own wheel speed;
/// - `k_fx_ax`: longitudinal-acceleration innovation onto every `f_x` offset;
/// - `k_fy_yaw`: yaw-rate innovation onto every `f_y` offset, sign reversed on
///   the rear axle.
pub fn benchmark_template() -> GainTemplate {
    let param = |name: &str, lower: f64, upper: f64| GainParam {
        name: name.into(),
        lower,
        upper,
    };
    let entry = |row: String, col: String, param: &str, sign: i8| GainEntry {
        row,
        col,
        param: param.into(),
        sign,
    };
    let mut entries = Vec::new();
    for c in CORNERS {
        entries.push(entry("v_x".into(), format!("omega_{c}"), "k_vx_omega", 1));
    }
    entries.push(entry("yaw_rate".into(), "yaw_rate".into(), "k_yaw_yaw", 1));
    for c in CORNERS {
        entries.push(entry(format!("omega_{c}"), format!("omega_{c}"), "k_omega_omega", 1));
    }
    for c in CORNERS {
        entries.push(entry(format!("f_x_{c}"), "a_x".into(), "k_fx_ax", 1));
    }
    for c in CORNERS {
        let sign = if c.starts_with('f') { 1 } else { -1 };
        entries.push(entry(format!("f_y_{c}"), "yaw_rate".into(), "k_fy_yaw", sign));
    }
    GainTemplate {
        params: vec![
            param("k_vx_omega", 0.0, 1.0),
            param("k_yaw_yaw", 0.0, 1.0),
            param("k_omega_omega", 0.0, 1.0),
            param("k_fx_ax", 0.0, 100.0),
            param("k_fy_yaw", -100.0, 0.0),
        ],
        entries,
    }
}
