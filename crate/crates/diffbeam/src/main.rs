//! Command-line front end: broadband design, offline evaluation, steering
//! sweeps, and the coefficient-to-nulls utility. User-facing units are
//! degrees and dB; conversion happens at this boundary only.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use diffbeam::designer::{
    self, build_freq_grid, design_broadband, null_directions, DesignMethod, DesignSpec,
};
use diffbeam::error::Error;
use diffbeam::harness::{
    load_measured_csv, offline_beampattern, score_offline, synth_steering_set,
    write_offline_pattern_csv, PerturbationModel,
};
use diffbeam::pattern::nulls_from_coefficients;
use diffbeam::ArrayGeometry;

#[derive(Parser)]
#[command(name = "diffbeam", version, about = "Steerable-invariant differential beamformer design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonDesignArgs {
    /// Design config JSON
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV/JSON artifacts
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    /// Override the steering angle (degrees)
    #[arg(long)]
    steer_deg: Option<f64>,
    /// Override the WNG slack v (dB)
    #[arg(long)]
    wng_slack_db: Option<f64>,
    /// Override the design method
    #[arg(long, value_parser = parse_method)]
    method: Option<DesignMethod>,
    /// Override the lower frequency bound (Hz)
    #[arg(long)]
    fmin_hz: Option<f64>,
    /// Override the upper frequency bound (Hz)
    #[arg(long)]
    fmax_hz: Option<f64>,
    /// Override the grid point count
    #[arg(long)]
    points: Option<usize>,
}

fn parse_method(s: &str) -> Result<DesignMethod, String> {
    match s.to_ascii_lowercase().as_str() {
        "nc" => Ok(DesignMethod::Nc),
        "inc" => Ok(DesignMethod::Inc),
        other => Err(format!("unknown method {other:?}, expected nc or inc")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a broadband design and write metrics/filters/beampattern files
    Design(CommonDesignArgs),
    /// Apply designed filters to a synthetic (or measured) steering set
    Evaluate {
        #[command(flatten)]
        common: CommonDesignArgs,
        /// Frequencies to evaluate (Hz); defaults to 500, 1000, 2000, 3000
        #[arg(long, value_delimiter = ',')]
        freq_hz: Vec<f64>,
        /// Measured-set CSV (theta_deg,mic_index,re,im); synthesized if absent
        #[arg(long)]
        measured: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        gain_sigma_db: f64,
        #[arg(long, default_value_t = 0.0)]
        phase_sigma_deg: f64,
        #[arg(long, default_value_t = 0.0)]
        position_sigma_m: f64,
    },
    /// Repeat a design across several steering angles
    Sweep {
        #[command(flatten)]
        common: CommonDesignArgs,
        /// Steering angles to sweep (degrees)
        #[arg(long, value_delimiter = ',', required = true)]
        steer_deg_list: Vec<f64>,
    },
    /// Print the null offsets (degrees) of a coefficient vector
    Nulls {
        /// Pattern coefficients, e.g. 0.25,0.5,0.25
        #[arg(long, value_delimiter = ',', required = true)]
        coeffs: Vec<f64>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ConfigInvalid(_)
        | Error::InvalidNulls(_)
        | Error::NotNormalized { .. }
        | Error::TooFewMicrophones { .. }
        | Error::InfeasibleSlack(_) => 2,
        Error::DesignFailed => 3,
        _ => 1,
    }
}

fn load_spec(common: &CommonDesignArgs) -> diffbeam::Result<(DesignSpec, ArrayGeometry)> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", common.config.display())))?;
    let (mut spec, geom) = designer::parse_design_config(&text)?;
    if let Some(steer) = common.steer_deg {
        spec.steer_theta_s = steer.to_radians();
    }
    if let Some(v) = common.wng_slack_db {
        spec.wng_slack_v = v;
    }
    if let Some(method) = common.method {
        spec.method = method;
    }
    if common.fmin_hz.is_some() || common.fmax_hz.is_some() || common.points.is_some() {
        let min = common.fmin_hz.unwrap_or(spec.freq_grid[0]);
        let max = common.fmax_hz.unwrap_or(*spec.freq_grid.last().unwrap());
        let points = common.points.unwrap_or(spec.freq_grid.len());
        spec.freq_grid = build_freq_grid(min, max, points, true);
    }
    spec.validate()?;
    Ok((spec, geom))
}

fn run_design(common: &CommonDesignArgs) -> diffbeam::Result<()> {
    let (spec, geom) = load_spec(common)?;
    let (filters, report) = design_broadband(&spec, &geom)?;
    fs::create_dir_all(&common.output_dir)?;
    let path = |name: &str| common.output_dir.join(name);
    designer::write_metrics_csv(&report, fs::File::create(path("metrics.csv"))?)?;
    designer::write_filters_json(&filters, &report, fs::File::create(path("filters.json"))?)?;
    designer::write_beampattern_grid_csv(
        &filters,
        &geom,
        spec.speed_of_sound,
        fs::File::create(path("beampattern.csv"))?,
    )?;
    eprintln!(
        "designed {} of {} frequencies; artifacts in {}",
        filters.len(),
        spec.freq_grid.len(),
        common.output_dir.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_evaluate(
    common: &CommonDesignArgs,
    freq_hz: &[f64],
    measured: Option<&Path>,
    perturb: PerturbationModel,
) -> diffbeam::Result<()> {
    let (mut spec, geom) = load_spec(common)?;
    let freqs: Vec<f64> = if freq_hz.is_empty() {
        vec![500.0, 1000.0, 2000.0, 3000.0]
    } else {
        freq_hz.to_vec()
    };
    fs::create_dir_all(&common.output_dir)?;

    let theta_s_deg = spec.steer_theta_s.to_degrees();
    let null_dirs_deg: Vec<f64> = null_directions(spec.steer_theta_s, &spec.null_offsets)
        .iter()
        .map(|r| r.to_degrees().rem_euclid(360.0))
        .collect();

    let mut summary = String::from("frequency_hz,mainlobe_deg,mainlobe_error_deg,worst_null_db\n");
    for &freq in &freqs {
        spec.freq_grid = vec![freq];
        let (filters, _) = design_broadband(&spec, &geom)?;
        let filter = &filters[0];
        let k = 2.0 * std::f64::consts::PI * freq / spec.speed_of_sound;
        let set = match measured {
            Some(path) => {
                let file = fs::File::open(path)
                    .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
                load_measured_csv(BufReader::new(file), freq)?
            }
            None => synth_steering_set(&geom, k, &perturb),
        };
        let pattern = offline_beampattern(&set, &filter.weights)?;
        let name = format!("offline_{}.csv", freq.round() as i64);
        write_offline_pattern_csv(
            &set,
            &pattern,
            fs::File::create(common.output_dir.join(&name))?,
        )?;
        let score = score_offline(&set, &filter.weights, theta_s_deg, &null_dirs_deg)?;
        let worst_null = score
            .null_depths_db
            .iter()
            .map(|(_, db)| *db)
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{} Hz: main lobe {} deg (error {} deg), nulls {}",
            freq,
            score.mainlobe_deg,
            score.mainlobe_error_deg,
            score
                .null_depths_db
                .iter()
                .map(|(dir, db)| format!("{dir:.0} deg -> {db:.1} dB"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        summary.push_str(&format!(
            "{},{},{},{}\n",
            freq, score.mainlobe_deg, score.mainlobe_error_deg, worst_null
        ));
    }
    fs::write(common.output_dir.join("summary.csv"), summary)?;
    Ok(())
}

fn run_sweep(common: &CommonDesignArgs, steer_deg_list: &[f64]) -> diffbeam::Result<()> {
    let (base_spec, geom) = load_spec(common)?;
    fs::create_dir_all(&common.output_dir)?;
    let mut out = String::from(
        "steer_deg,frequency_hz,df_db,wng_db,mse_db,wmax_db,mainlobe_deg,status\n",
    );
    for &steer in steer_deg_list {
        let mut spec = base_spec.clone();
        spec.steer_theta_s = steer.to_radians();
        let (_, report) = design_broadband(&spec, &geom)?;
        for row in &report.rows {
            let status = match &row.status {
                designer::RowStatus::Ok => "ok".to_string(),
                designer::RowStatus::Failed(msg) => format!("failed: {}", msg.replace(',', ";")),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                steer,
                row.frequency_hz,
                row.df_db,
                row.wng_db,
                row.mse_db,
                row.wmax_db,
                row.mainlobe_theta.to_degrees(),
                status
            ));
        }
    }
    fs::write(common.output_dir.join("sweep_metrics.csv"), out)?;
    eprintln!(
        "swept {} steering angles; sweep_metrics.csv in {}",
        steer_deg_list.len(),
        common.output_dir.display()
    );
    Ok(())
}

fn run_nulls(coeffs: &[f64]) -> diffbeam::Result<()> {
    if coeffs.is_empty() {
        return Err(Error::ConfigInvalid("--coeffs needs at least one value".into()));
    }
    let order = coeffs.len() - 1;
    let nulls = nulls_from_coefficients(coeffs, order)?;
    let line = nulls
        .iter()
        .map(|r| {
            let deg = (r.to_degrees() * 1e6).round() / 1e6;
            format!("{deg}")
        })
        .collect::<Vec<_>>()
        .join(", ");
    println!("{line}");
    Ok(())
}

fn configure_threads() {
    if let Ok(value) = std::env::var("DIFFBEAM_THREADS") {
        if let Ok(n) = value.trim().parse::<usize>() {
            if n > 0 {
                // ignore failure if a pool is already installed
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(common) => run_design(common),
        Command::Evaluate {
            common,
            freq_hz,
            measured,
            seed,
            gain_sigma_db,
            phase_sigma_deg,
            position_sigma_m,
        } => run_evaluate(
            common,
            freq_hz,
            measured.as_deref(),
            PerturbationModel {
                gain_sigma_db: *gain_sigma_db,
                phase_sigma_deg: *phase_sigma_deg,
                position_sigma_m: *position_sigma_m,
                sensor_noise_db: f64::NEG_INFINITY,
                seed: *seed,
            },
        ),
        Command::Sweep {
            common,
            steer_deg_list,
        } => run_sweep(common, steer_deg_list),
        Command::Nulls { coeffs } => run_nulls(coeffs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
