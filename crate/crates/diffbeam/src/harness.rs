//! Offline evaluation harness.
//!
//! Replaces the rotating-array measurement with a synthetic one: plane-wave
//! transfer functions over a rotation grid, optionally corrupted by
//! per-microphone gain/phase mismatch, position jitter, and sensor noise.
//! With all sigmas at zero the synthetic set reproduces the analytic steering
//! vectors exactly, so the same scoring path applies to real measured data
//! loaded from CSV.

use std::io::{BufRead, Write};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::array::{ArrayGeometry, MicrophoneElement};
use crate::error::{Error, Result};
use crate::metrics::to_db;

/// Microphone imperfection model. Deterministic for a given seed; gains are
/// lognormal in amplitude (normal in dB), phases and positions are normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationModel {
    pub gain_sigma_db: f64,
    pub phase_sigma_deg: f64,
    pub position_sigma_m: f64,
    /// Additive complex measurement noise level in dB relative to a unit
    /// signal; `-inf` disables it.
    pub sensor_noise_db: f64,
    pub seed: u64,
}

impl Default for PerturbationModel {
    fn default() -> Self {
        PerturbationModel {
            gain_sigma_db: 0.0,
            phase_sigma_deg: 0.0,
            position_sigma_m: 0.0,
            sensor_noise_db: f64::NEG_INFINITY,
            seed: 0,
        }
    }
}

impl PerturbationModel {
    pub fn is_clean(&self) -> bool {
        self.gain_sigma_db == 0.0
            && self.phase_sigma_deg == 0.0
            && self.position_sigma_m == 0.0
            && self.sensor_noise_db == f64::NEG_INFINITY
    }
}

/// Per-microphone draws shared by a whole steering set.
struct MicErrors {
    gains: Vec<f64>,
    phases: Vec<f64>,
    positions: Vec<f64>,
}

fn draw_mic_errors(
    geom: &ArrayGeometry,
    perturb: &PerturbationModel,
    rng: &mut ChaCha8Rng,
) -> MicErrors {
    let m = geom.len();
    let gain_db = Normal::new(0.0, perturb.gain_sigma_db.max(0.0)).unwrap();
    let phase = Normal::new(0.0, perturb.phase_sigma_deg.max(0.0).to_radians()).unwrap();
    let pos = Normal::new(0.0, perturb.position_sigma_m.max(0.0)).unwrap();
    MicErrors {
        gains: (0..m)
            .map(|_| 10f64.powf(gain_db.sample(rng) / 20.0))
            .collect(),
        phases: (0..m).map(|_| phase.sample(rng)).collect(),
        positions: geom
            .elements()
            .iter()
            .map(|e| e.position_x + pos.sample(rng))
            .collect(),
    }
}

fn complex_noise(rng: &mut ChaCha8Rng, sigma: f64) -> Complex64 {
    let n = Normal::new(0.0, sigma / 2f64.sqrt()).unwrap();
    Complex64::new(n.sample(rng), n.sample(rng))
}

/// A set of per-angle array responses at one frequency, synthetic or measured.
#[derive(Debug, Clone)]
pub struct MeasuredSteeringSet {
    /// Rotation grid in degrees, covering [0, 360] inclusive.
    pub angles_deg: Vec<f64>,
    /// One complex vector of length M per grid angle.
    pub vectors: Vec<DVector<Complex64>>,
    pub frequency_hz: f64,
}

/// Default rotation grid: 0 to 360 degrees in 5 degree steps, 73 points.
pub fn default_angle_grid() -> Vec<f64> {
    (0..=72).map(|i| i as f64 * 5.0).collect()
}

/// Synthesizes a steering set on the default 5 degree grid.
pub fn synth_steering_set(
    geom: &ArrayGeometry,
    k: f64,
    perturb: &PerturbationModel,
) -> MeasuredSteeringSet {
    synth_steering_set_on(geom, k, &default_angle_grid(), perturb)
}

/// Synthesizes a steering set on an explicit angle grid (degrees).
pub fn synth_steering_set_on(
    geom: &ArrayGeometry,
    k: f64,
    angles_deg: &[f64],
    perturb: &PerturbationModel,
) -> MeasuredSteeringSet {
    let mut rng = ChaCha8Rng::seed_from_u64(perturb.seed);
    let errors = draw_mic_errors(geom, perturb, &mut rng);
    let jittered = ArrayGeometry::new(
        errors
            .positions
            .iter()
            .zip(geom.elements())
            .map(|(&x, e)| MicrophoneElement {
                position_x: x,
                directivity_a: e.directivity_a,
            })
            .collect(),
    )
    .unwrap_or_else(|_| geom.clone()); // jitter can reorder; fall back to nominal

    let noise_amp = if perturb.sensor_noise_db.is_finite() {
        10f64.powf(perturb.sensor_noise_db / 20.0)
    } else {
        0.0
    };

    let vectors = angles_deg
        .iter()
        .map(|&deg| {
            let d = jittered.steering_vector(k, deg.to_radians());
            DVector::from_iterator(
                geom.len(),
                d.iter().enumerate().map(|(m, v)| {
                    let mut out =
                        v * errors.gains[m] * Complex64::from_polar(1.0, errors.phases[m]);
                    if noise_amp > 0.0 {
                        out += complex_noise(&mut rng, noise_amp);
                    }
                    out
                }),
            )
        })
        .collect();

    MeasuredSteeringSet {
        angles_deg: angles_deg.to_vec(),
        vectors,
        frequency_hz: k * crate::array::SPEED_OF_SOUND / (2.0 * std::f64::consts::PI),
    }
}

/// `h^H v` at every grid angle.
pub fn offline_beampattern(
    set: &MeasuredSteeringSet,
    h: &DVector<Complex64>,
) -> Result<Vec<Complex64>> {
    for v in &set.vectors {
        if v.len() != h.len() {
            return Err(Error::DimensionMismatch {
                expected: v.len(),
                got: h.len(),
            });
        }
    }
    Ok(set.vectors.iter().map(|v| h.dotc(v)).collect())
}

/// Summary of an offline pattern against the intended design.
#[derive(Debug, Clone)]
pub struct OfflineScore {
    pub mainlobe_deg: f64,
    pub mainlobe_error_deg: f64,
    /// (direction deg, |B|^2 dB at the nearest grid angle)
    pub null_depths_db: Vec<(f64, f64)>,
}

pub fn score_offline(
    set: &MeasuredSteeringSet,
    h: &DVector<Complex64>,
    theta_s_deg: f64,
    null_dirs_deg: &[f64],
) -> Result<OfflineScore> {
    let pattern = offline_beampattern(set, h)?;
    let (mut best_deg, mut best_mag) = (0.0, f64::NEG_INFINITY);
    for (&deg, b) in set.angles_deg.iter().zip(&pattern) {
        if b.norm() > best_mag {
            best_mag = b.norm();
            best_deg = deg;
        }
    }
    let wrap = |d: f64| {
        let r = d.rem_euclid(360.0);
        if r > 180.0 {
            360.0 - r
        } else {
            r
        }
    };
    let null_depths_db = null_dirs_deg
        .iter()
        .map(|&dir| {
            let (mut depth, mut best) = (f64::INFINITY, f64::INFINITY);
            for (&deg, b) in set.angles_deg.iter().zip(&pattern) {
                let dist = wrap(deg - dir);
                if dist < best {
                    best = dist;
                    depth = b.norm();
                }
            }
            (dir, to_db(depth.max(1e-150).powi(2)))
        })
        .collect();
    Ok(OfflineScore {
        mainlobe_deg: best_deg,
        mainlobe_error_deg: wrap(best_deg - theta_s_deg),
        null_depths_db,
    })
}

/// One frequency-domain snapshot `y = d~(theta_s) x + v` with unit-power
/// desired signal and circular complex noise at the requested SNR. The
/// perturbation model also applies its gain/phase/position mismatch to the
/// signal path.
pub fn synth_snapshot(
    geom: &ArrayGeometry,
    k: f64,
    theta_s: f64,
    snr_db: f64,
    perturb: &PerturbationModel,
) -> DVector<Complex64> {
    synth_snapshots(geom, k, theta_s, snr_db, perturb, 1).pop().unwrap()
}

/// A deterministic stream of independent snapshots for one seed.
pub fn synth_snapshots(
    geom: &ArrayGeometry,
    k: f64,
    theta_s: f64,
    snr_db: f64,
    perturb: &PerturbationModel,
    count: usize,
) -> Vec<DVector<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(perturb.seed);
    let errors = draw_mic_errors(geom, perturb, &mut rng);
    let jittered: Vec<MicrophoneElement> = errors
        .positions
        .iter()
        .zip(geom.elements())
        .map(|(&x, e)| MicrophoneElement {
            position_x: x,
            directivity_a: e.directivity_a,
        })
        .collect();
    let geom_used = ArrayGeometry::new(jittered).unwrap_or_else(|_| geom.clone());
    let clean = geom_used.steering_vector(k, theta_s);
    let steer = DVector::from_iterator(
        geom.len(),
        clean.iter().enumerate().map(|(m, v)| {
            v * errors.gains[m] * Complex64::from_polar(1.0, errors.phases[m])
        }),
    );

    let sigma = if snr_db.is_finite() {
        10f64.powf(-snr_db / 20.0)
    } else {
        0.0
    };
    (0..count)
        .map(|_| {
            DVector::from_iterator(
                geom.len(),
                steer.iter().map(|&s| {
                    if sigma > 0.0 {
                        s + complex_noise(&mut rng, sigma)
                    } else {
                        s
                    }
                }),
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// CSV import/export

/// Loads a measured set from `theta_deg,mic_index,re,im` rows (header
/// optional). Mic indices are zero-based and must be dense.
pub fn load_measured_csv<R: BufRead>(
    reader: R,
    frequency_hz: f64,
) -> Result<MeasuredSteeringSet> {
    use std::collections::BTreeMap;
    let mut by_angle: BTreeMap<i64, BTreeMap<usize, Complex64>> = BTreeMap::new();
    let mut angle_values: BTreeMap<i64, f64> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("theta_deg") {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::ConfigInvalid(format!(
                "measured CSV line {}: expected 4 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| {
                Error::ConfigInvalid(format!(
                    "measured CSV line {}: bad {what} {s:?}",
                    lineno + 1
                ))
            })
        };
        let theta = parse(fields[0], "theta_deg")?;
        let mic = parse(fields[1], "mic_index")? as usize;
        let re = parse(fields[2], "re")?;
        let im = parse(fields[3], "im")?;
        let key = (theta * 1e6).round() as i64;
        angle_values.insert(key, theta);
        by_angle
            .entry(key)
            .or_default()
            .insert(mic, Complex64::new(re, im));
    }
    if by_angle.is_empty() {
        return Err(Error::ConfigInvalid("measured CSV is empty".into()));
    }
    let m = by_angle.values().next().unwrap().len();
    let mut angles_deg = Vec::new();
    let mut vectors = Vec::new();
    for (key, mics) in &by_angle {
        if mics.len() != m {
            return Err(Error::ConfigInvalid(format!(
                "measured CSV: angle {} has {} mics, expected {m}",
                angle_values[key],
                mics.len()
            )));
        }
        angles_deg.push(angle_values[key]);
        vectors.push(DVector::from_iterator(
            m,
            (0..m).map(|i| {
                mics.get(&i).copied().unwrap_or_else(|| {
                    Complex64::new(f64::NAN, f64::NAN)
                })
            }),
        ));
    }
    Ok(MeasuredSteeringSet {
        angles_deg,
        vectors,
        frequency_hz,
    })
}

/// Writes an offline pattern as `theta_deg,magnitude_db,phase_deg`.
pub fn write_offline_pattern_csv<W: Write>(
    set: &MeasuredSteeringSet,
    pattern: &[Complex64],
    mut out: W,
) -> Result<()> {
    writeln!(out, "theta_deg,magnitude_db,phase_deg")?;
    for (&deg, b) in set.angles_deg.iter().zip(pattern) {
        writeln!(
            out,
            "{},{:.6},{:.6}",
            deg,
            to_db(b.norm().max(1e-150).powi(2)),
            b.arg().to_degrees()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::pattern::solve_coefficients;
    use crate::solvers::{build_constraints, solve_inc, solve_mwng};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn paper_array(spacing: f64) -> ArrayGeometry {
        let dirs: Vec<f64> = (0..11).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        ArrayGeometry::uniform(spacing, &dirs).unwrap()
    }

    #[test]
    fn zero_perturbation_reproduces_steering_vectors() {
        let geom = paper_array(0.01);
        let k = 2.0 * PI * 1000.0 / 340.0;
        let set = synth_steering_set(&geom, k, &PerturbationModel::default());
        assert_eq!(set.angles_deg.len(), 73);
        for (&deg, v) in set.angles_deg.iter().zip(&set.vectors) {
            let d = geom.steering_vector(k, deg.to_radians());
            assert!((v - d).norm() < 1e-12);
        }
    }

    #[test]
    fn seeded_sets_are_deterministic() {
        let geom = paper_array(0.02);
        let k = 2.0 * PI * 1000.0 / 340.0;
        let perturb = PerturbationModel {
            gain_sigma_db: 0.5,
            phase_sigma_deg: 2.0,
            position_sigma_m: 0.0005,
            sensor_noise_db: -40.0,
            seed: 7,
        };
        let a = synth_steering_set(&geom, k, &perturb);
        let b = synth_steering_set(&geom, k, &perturb);
        for (va, vb) in a.vectors.iter().zip(&b.vectors) {
            assert_eq!(va, vb);
        }
    }

    #[test]
    fn offline_pattern_matches_analytic_when_clean() {
        let geom = paper_array(0.01);
        let k = 2.0 * PI * 1000.0 / 340.0;
        let cs = build_constraints(&geom, k, FRAC_PI_2, &[FRAC_PI_2, 5.0 * PI / 6.0]).unwrap();
        let f = solve_mwng(&cs).unwrap();
        let set = synth_steering_set(&geom, k, &PerturbationModel::default());
        let offline = offline_beampattern(&set, &f.weights).unwrap();
        for (&deg, b) in set.angles_deg.iter().zip(&offline) {
            let analytic =
                metrics::beampattern(&f.weights, &geom, k, deg.to_radians()).unwrap();
            assert!((b - analytic).norm() < 1e-12);
        }
    }

    #[test]
    fn mild_perturbation_keeps_main_lobe() {
        let geom = paper_array(0.02);
        let k = 2.0 * PI * 1000.0 / 340.0;
        let offsets = [FRAC_PI_2, 5.0 * PI / 6.0];
        let cs = build_constraints(&geom, k, FRAC_PI_2, &offsets).unwrap();
        let gamma = metrics::gamma_matrix(&geom, k);
        let pattern = solve_coefficients(FRAC_PI_2, &offsets, 2).unwrap();
        let q = metrics::q_coupling_matrix(&geom, k, FRAC_PI_2, 2).project(&pattern.coeffs);
        let f = solve_inc(&cs, &gamma, &q, 10.0).unwrap();
        let perturb = PerturbationModel {
            gain_sigma_db: 0.25,
            phase_sigma_deg: 1.0,
            position_sigma_m: 0.0002,
            sensor_noise_db: -50.0,
            seed: 3,
        };
        let set = synth_steering_set(&geom, k, &perturb);
        let score = score_offline(&set, &f.weights, 90.0, &[180.0, 240.0, 300.0, 0.0]).unwrap();
        assert!(score.mainlobe_error_deg <= 2.0 + 1e-9, "{score:?}");
    }

    #[test]
    fn snapshot_infinite_snr_is_clean() {
        let geom = paper_array(0.01);
        let k = 12.0;
        let y = synth_snapshot(&geom, k, FRAC_PI_2, f64::INFINITY, &PerturbationModel::default());
        let d = geom.steering_vector(k, FRAC_PI_2);
        assert!((y - d).norm() < 1e-15);
    }

    #[test]
    fn snapshot_zero_wavenumber_is_one_plus_noise() {
        let geom = paper_array(0.01);
        let y = synth_snapshot(&geom, 0.0, FRAC_PI_2, 200.0, &PerturbationModel::default());
        for v in y.iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn measured_csv_round_trip() {
        let geom = paper_array(0.01);
        let k = 14.0;
        let set = synth_steering_set(&geom, k, &PerturbationModel::default());
        let mut text = String::from("theta_deg,mic_index,re,im\n");
        for (&deg, v) in set.angles_deg.iter().zip(&set.vectors) {
            for (m, c) in v.iter().enumerate() {
                text.push_str(&format!("{deg},{m},{:.17e},{:.17e}\n", c.re, c.im));
            }
        }
        let loaded = load_measured_csv(text.as_bytes(), set.frequency_hz).unwrap();
        assert_eq!(loaded.angles_deg.len(), set.angles_deg.len());
        for (a, b) in loaded.vectors.iter().zip(&set.vectors) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
