//! Broadband design orchestration.
//!
//! Parses a design config, runs one NC or INC solve per grid frequency (in
//! parallel), and collects per-frequency metrics. Per-frequency failures are
//! recorded in the report row instead of aborting the sweep.

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{preset_directivity, ArrayGeometry, SPEED_OF_SOUND};
use crate::error::{Error, Result};
use crate::metrics::{
    beampattern, directivity_factor, gamma_matrix, mse_quadratic, q_coupling_matrix, to_db,
    white_noise_gain,
};
use crate::pattern::{solve_coefficients, IdealPattern};
use crate::solvers::{
    build_constraints, solve_inc, solve_nc, solve_mwng, BeamformerFilter, Method,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignMethod {
    Nc,
    Inc,
}

/// A validated broadband design request. Angles are radians.
#[derive(Debug, Clone)]
pub struct DesignSpec {
    pub order_n: usize,
    pub steer_theta_s: f64,
    pub null_offsets: Vec<f64>,
    pub wng_slack_v: f64,
    pub freq_grid: Vec<f64>,
    pub speed_of_sound: f64,
    pub method: DesignMethod,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.wng_slack_v < 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "wng_slack_db must be >= 0, got {}",
                self.wng_slack_v
            )));
        }
        if self.freq_grid.is_empty() {
            return Err(Error::ConfigInvalid("freq grid is empty".into()));
        }
        for pair in self.freq_grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::ConfigInvalid(
                    "freq grid must be strictly increasing".into(),
                ));
            }
        }
        if self.freq_grid[0] <= 0.0 {
            return Err(Error::ConfigInvalid("frequencies must be positive".into()));
        }
        if self.speed_of_sound <= 0.0 {
            return Err(Error::ConfigInvalid("speed of sound must be positive".into()));
        }
        Ok(())
    }
}

/// One metrics row per grid frequency.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub frequency_hz: f64,
    pub df_db: f64,
    pub wng_db: f64,
    pub mse_db: f64,
    pub wmax_db: f64,
    /// Main-lobe direction in radians, argmax of |B| on a 0.5 degree grid.
    pub mainlobe_theta: f64,
    /// Per constrained null direction: (direction rad, min |B| dB in a +/-5
    /// degree window).
    pub null_depths_db: Vec<(f64, f64)>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub steer_theta_s: f64,
    pub null_offsets: Vec<f64>,
    pub order_n: usize,
    pub method: DesignMethod,
    pub wng_slack_v: f64,
}

/// Directions of the enforced nulls (offset pairs folded at pi).
pub fn null_directions(theta_s: f64, offsets: &[f64]) -> Vec<f64> {
    let mut dirs = Vec::new();
    for &phi in offsets {
        dirs.push(theta_s + phi);
        if (phi - std::f64::consts::PI).abs() >= 1e-12 {
            dirs.push(theta_s - phi);
        }
    }
    dirs
}

fn mainlobe_direction(h: &DVector<Complex64>, geom: &ArrayGeometry, k: f64) -> f64 {
    let mut best = (0.0, f64::NEG_INFINITY);
    // 0.5 degree evaluation grid
    for i in 0..720 {
        let theta = i as f64 * 0.5f64.to_radians();
        let mag = beampattern(h, geom, k, theta).unwrap().norm();
        if mag > best.1 {
            best = (theta, mag);
        }
    }
    best.0
}

fn null_depth(h: &DVector<Complex64>, geom: &ArrayGeometry, k: f64, dir: f64) -> f64 {
    let mut min = f64::INFINITY;
    for i in -10..=10 {
        let theta = dir + (i as f64 * 0.5).to_radians();
        let mag = beampattern(h, geom, k, theta).unwrap().norm();
        min = min.min(mag);
    }
    to_db(min.max(1e-150).powi(2))
}

fn design_one(
    spec: &DesignSpec,
    geom: &ArrayGeometry,
    pattern: &IdealPattern,
    freq: f64,
) -> Result<(BeamformerFilter, MetricsRow)> {
    let k = 2.0 * std::f64::consts::PI * freq / spec.speed_of_sound;
    let mut cs = build_constraints(geom, k, spec.steer_theta_s, &spec.null_offsets)?;
    cs.frequency_hz = freq;
    let wmax_db = solve_mwng(&cs)?.achieved_wng_db;

    let filter = match spec.method {
        DesignMethod::Nc => solve_nc(&cs)?,
        DesignMethod::Inc => {
            let gamma = gamma_matrix(geom, k);
            let q = q_coupling_matrix(geom, k, spec.steer_theta_s, spec.order_n)
                .project(&pattern.coeffs);
            solve_inc(&cs, &gamma, &q, spec.wng_slack_v)?
        }
    };

    let h = &filter.weights;
    let row = MetricsRow {
        frequency_hz: freq,
        df_db: directivity_factor(h, geom, k, spec.steer_theta_s)?,
        wng_db: white_noise_gain(h, geom, k, spec.steer_theta_s)?,
        mse_db: mse_quadratic(h, geom, k, pattern),
        wmax_db,
        mainlobe_theta: mainlobe_direction(h, geom, k),
        null_depths_db: null_directions(spec.steer_theta_s, &spec.null_offsets)
            .into_iter()
            .map(|dir| (dir, null_depth(h, geom, k, dir)))
            .collect(),
        status: RowStatus::Ok,
    };
    Ok((filter, row))
}

/// Runs the full frequency grid. Individual frequencies may fail softly;
/// `DesignFailed` is returned only if every one does.
pub fn design_broadband(
    spec: &DesignSpec,
    geom: &ArrayGeometry,
) -> Result<(Vec<BeamformerFilter>, MetricsReport)> {
    spec.validate()?;
    let pattern = solve_coefficients(spec.steer_theta_s, &spec.null_offsets, spec.order_n)
        .map_err(|e| Error::ConfigInvalid(format!("ideal pattern: {e}")))?;

    let results: Vec<Result<(BeamformerFilter, MetricsRow)>> = spec
        .freq_grid
        .par_iter()
        .map(|&freq| design_one(spec, geom, &pattern, freq))
        .collect();

    let mut filters = Vec::new();
    let mut rows = Vec::new();
    let mut failures = 0usize;
    for (freq, res) in spec.freq_grid.iter().zip(results) {
        match res {
            Ok((filter, row)) => {
                filters.push(filter);
                rows.push(row);
            }
            Err(e) => {
                failures += 1;
                rows.push(MetricsRow {
                    frequency_hz: *freq,
                    df_db: f64::NAN,
                    wng_db: f64::NAN,
                    mse_db: f64::NAN,
                    wmax_db: f64::NAN,
                    mainlobe_theta: f64::NAN,
                    null_depths_db: Vec::new(),
                    status: RowStatus::Failed(e.to_string()),
                });
            }
        }
    }
    if failures == spec.freq_grid.len() {
        return Err(Error::DesignFailed);
    }
    Ok((
        filters,
        MetricsReport {
            rows,
            steer_theta_s: spec.steer_theta_s,
            null_offsets: spec.null_offsets.clone(),
            order_n: spec.order_n,
            method: spec.method,
            wng_slack_v: spec.wng_slack_v,
        },
    ))
}

// ---------------------------------------------------------------------------
// config parsing

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ElementSpec {
    Preset(String),
    Explicit { a: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ArrayConfig {
    spacing_m: f64,
    elements: Vec<ElementSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FreqConfig {
    #[serde(default = "default_fmin")]
    min_hz: f64,
    #[serde(default = "default_fmax")]
    max_hz: f64,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(default = "default_spacing")]
    spacing: String,
}

fn default_fmin() -> f64 {
    200.0
}
fn default_fmax() -> f64 {
    5000.0
}
fn default_points() -> usize {
    49
}
fn default_spacing() -> String {
    "log".into()
}

impl Default for FreqConfig {
    fn default() -> Self {
        FreqConfig {
            min_hz: default_fmin(),
            max_hz: default_fmax(),
            points: default_points(),
            spacing: default_spacing(),
        }
    }
}

/// On-disk design config. Angles in degrees, converted at this boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignConfig {
    array: ArrayConfig,
    order: usize,
    steer_deg: f64,
    nulls_deg: Vec<f64>,
    #[serde(default = "default_slack")]
    wng_slack_db: f64,
    #[serde(default = "default_sound_speed")]
    speed_of_sound: f64,
    #[serde(default = "default_method")]
    method: DesignMethod,
    #[serde(default)]
    freq: FreqConfig,
}

fn default_slack() -> f64 {
    10.0
}
fn default_sound_speed() -> f64 {
    SPEED_OF_SOUND
}
fn default_method() -> DesignMethod {
    DesignMethod::Inc
}

pub fn build_freq_grid(min_hz: f64, max_hz: f64, points: usize, log_spaced: bool) -> Vec<f64> {
    if points == 1 {
        return vec![min_hz];
    }
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            if log_spaced {
                (min_hz.ln() + t * (max_hz.ln() - min_hz.ln())).exp()
            } else {
                min_hz + t * (max_hz - min_hz)
            }
        })
        .collect()
}

impl DesignConfig {
    pub fn into_spec(self) -> Result<(DesignSpec, ArrayGeometry)> {
        let dirs: Vec<f64> = self
            .array
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| match e {
                ElementSpec::Preset(name) => preset_directivity(name).ok_or_else(|| {
                    Error::ConfigInvalid(format!(
                        "array.elements[{i}]: unknown preset {name:?}"
                    ))
                }),
                ElementSpec::Explicit { a } => {
                    if (0.0..=1.0).contains(a) {
                        Ok(*a)
                    } else {
                        Err(Error::ConfigInvalid(format!(
                            "array.elements[{i}].a must be in [0, 1], got {a}"
                        )))
                    }
                }
            })
            .collect::<Result<_>>()?;
        let geom = ArrayGeometry::uniform(self.array.spacing_m, &dirs)
            .map_err(|e| Error::ConfigInvalid(format!("array: {e}")))?;

        let mut nulls_deg = self.nulls_deg.clone();
        nulls_deg.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, &d) in nulls_deg.iter().enumerate() {
            if !(d > 0.0 && d <= 180.0) {
                return Err(Error::ConfigInvalid(format!(
                    "nulls_deg[{i}]: offset must be in (0, 180], got {d}"
                )));
            }
        }
        if nulls_deg.len() != self.order {
            return Err(Error::ConfigInvalid(format!(
                "order {} needs exactly {} null offsets, got {}",
                self.order,
                self.order,
                nulls_deg.len()
            )));
        }

        let log_spaced = match self.freq.spacing.as_str() {
            "log" => true,
            "linear" => false,
            other => {
                return Err(Error::ConfigInvalid(format!(
                    "freq.spacing must be \"log\" or \"linear\", got {other:?}"
                )))
            }
        };
        if !(self.freq.min_hz > 0.0 && self.freq.max_hz > self.freq.min_hz) {
            return Err(Error::ConfigInvalid(
                "freq range must satisfy 0 < min_hz < max_hz".into(),
            ));
        }
        if self.freq.points == 0 {
            return Err(Error::ConfigInvalid("freq.points must be >= 1".into()));
        }

        let spec = DesignSpec {
            order_n: self.order,
            steer_theta_s: self.steer_deg.to_radians(),
            null_offsets: nulls_deg.iter().map(|d| d.to_radians()).collect(),
            wng_slack_v: self.wng_slack_db,
            freq_grid: build_freq_grid(
                self.freq.min_hz,
                self.freq.max_hz,
                self.freq.points,
                log_spaced,
            ),
            speed_of_sound: self.speed_of_sound,
            method: self.method,
        };
        spec.validate()?;
        Ok((spec, geom))
    }
}

/// Parses and validates a JSON design config document.
pub fn parse_design_config(document: &str) -> Result<(DesignSpec, ArrayGeometry)> {
    let config: DesignConfig = serde_json::from_str(document)
        .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    config.into_spec()
}

// ---------------------------------------------------------------------------
// output artifacts

/// `frequency_hz,df_db,wng_db,mse_db,wmax_db,mainlobe_deg,status`
pub fn write_metrics_csv<W: Write>(report: &MetricsReport, mut out: W) -> Result<()> {
    writeln!(out, "frequency_hz,df_db,wng_db,mse_db,wmax_db,mainlobe_deg,status")?;
    for row in &report.rows {
        let status = match &row.status {
            RowStatus::Ok => "ok".to_string(),
            RowStatus::Failed(msg) => format!("failed: {}", msg.replace(',', ";")),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.frequency_hz,
            row.df_db,
            row.wng_db,
            row.mse_db,
            row.wmax_db,
            row.mainlobe_theta.to_degrees(),
            status
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct WeightJson {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct FilterJson {
    frequency_hz: f64,
    method: String,
    zeta_wng_db: f64,
    weights: Vec<WeightJson>,
    achieved_wng_db: f64,
    mse_db: f64,
}

/// Filter export, one JSON object per designed frequency.
pub fn write_filters_json<W: Write>(
    filters: &[BeamformerFilter],
    report: &MetricsReport,
    mut out: W,
) -> Result<()> {
    let mse_by_freq: std::collections::BTreeMap<u64, f64> = report
        .rows
        .iter()
        .map(|r| (r.frequency_hz.to_bits(), r.mse_db))
        .collect();
    let docs: Vec<FilterJson> = filters
        .iter()
        .map(|f| {
            let wmax = report
                .rows
                .iter()
                .find(|r| r.frequency_hz == f.frequency_hz)
                .map(|r| r.wmax_db)
                .unwrap_or(f64::NAN);
            FilterJson {
                frequency_hz: f.frequency_hz,
                method: match f.method {
                    Method::Nc => "NC".into(),
                    Method::MWng => "mWNG".into(),
                    Method::Inc => "INC".into(),
                },
                zeta_wng_db: wmax - report.wng_slack_v,
                weights: f
                    .weights
                    .iter()
                    .map(|w| WeightJson { re: w.re, im: w.im })
                    .collect(),
                achieved_wng_db: f.achieved_wng_db,
                mse_db: mse_by_freq
                    .get(&f.frequency_hz.to_bits())
                    .copied()
                    .unwrap_or(f64::NAN),
            }
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &docs)
        .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// `theta_deg,frequency_hz,magnitude_db`, 1 degree steps, floored at -60 dB.
pub fn write_beampattern_grid_csv<W: Write>(
    filters: &[BeamformerFilter],
    geom: &ArrayGeometry,
    speed_of_sound: f64,
    mut out: W,
) -> Result<()> {
    writeln!(out, "theta_deg,frequency_hz,magnitude_db")?;
    for f in filters {
        let k = 2.0 * std::f64::consts::PI * f.frequency_hz / speed_of_sound;
        for deg in 0..360 {
            let theta = (deg as f64).to_radians();
            let mag = beampattern(&f.weights, geom, k, theta)
                .map(|b| b.norm())
                .unwrap_or(0.0);
            let db = to_db(mag.max(1e-12).powi(2)).max(-60.0);
            writeln!(out, "{},{},{:.4}", deg, f.frequency_hz, db)?;
        }
    }
    Ok(())
}
