//! Command-line pipeline: phantom generation, reconstruction, sensor-log
//! stress conversion, creep steady-state extraction and map metrics.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eshrec_core::eshelby::InclusionGeometry;
use eshrec_core::forward::{synth_phantom, PhantomSpec, RemoteLoad};
use eshrec_core::image::{fit_ellipse, rmse_percent, shape_metrics, FittedEllipse};
use eshrec_core::inverse::{reconstruct, PixelStatus, ReconstructionInput, ReconstructionResult};
use eshrec_core::io::{
    self, read_config, read_creep_series, read_grid, read_mask, read_sensor_log, write_grid,
    write_mask, Dataset, DatasetPaths, GeometryMode, RunConfig, StressSource,
};
use eshrec_core::voigt::MaterialParams;

#[derive(Parser, Debug)]
#[command(
    name = "eshrec",
    about = "Young's modulus / Poisson's ratio reconstruction from strain elastograms",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic phantom dataset (strain grids, mask, truth maps).
    Forward {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// RNG seed for the noise model.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reconstruct YM and PR maps from strain grids and a mask.
    Reconstruct {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axial: PathBuf,
        #[arg(long)]
        lateral: PathBuf,
        /// Optional elevational strain grid; enables the 3-residual cost.
        #[arg(long)]
        elevational: Option<PathBuf>,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a force-sensor log to applied stress (Pa).
    Stress {
        /// Sensor log path; defaults to the config's sensor_log_path.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract steady-state plateau strains from a creep series.
    SteadyState {
        /// Creep series file of `time axial lateral` lines.
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// RMSE against an optional truth map plus mask shape metrics.
    Metrics {
        /// Estimated map grid.
        #[arg(long)]
        est: PathBuf,
        /// Ground-truth map grid.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs one subcommand and returns its report text.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Forward { config, out, seed } => cmd_forward(&config, &out, seed),
        Command::Reconstruct {
            config,
            axial,
            lateral,
            elevational,
            mask,
            out,
        } => cmd_reconstruct(&config, &axial, &lateral, elevational.as_deref(), &mask, &out),
        Command::Stress { log, config, out } => {
            cmd_stress(log.as_deref(), config.as_deref(), out.as_deref())
        }
        Command::SteadyState {
            series,
            config,
            out,
        } => cmd_steady_state(&series, config.as_deref(), out.as_deref()),
        Command::Metrics {
            est,
            truth,
            mask,
            config,
            out,
        } => cmd_metrics(&est, truth.as_deref(), &mask, config.as_deref(), out.as_deref()),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    read_config(path).with_context(|| format!("reading config {}", path.display()))
}

fn load_config_or_default(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfig::default()),
    }
}

/// Resolves the applied stress magnitude (Pa) from the configured source.
fn resolve_stress(cfg: &RunConfig, config_dir: &Path) -> Result<(f64, String)> {
    match &cfg.stress {
        StressSource::AppliedPa(pa) => Ok((*pa, "config".to_string())),
        StressSource::SensorLog(rel) => {
            let path = config_dir.join(rel);
            let log = read_sensor_log(&path)
                .with_context(|| format!("reading sensor log {}", path.display()))?;
            let (mean, _) = io::sensor_to_stress(&log)?;
            Ok((mean, format!("sensor log {rel}")))
        }
    }
}

fn cmd_forward(config: &Path, out: &Path, seed: u64) -> Result<String> {
    let cfg = load_config(config)?;
    let config_dir = config.parent().unwrap_or(Path::new("."));
    let geometry = match &cfg.geometry {
        GeometryMode::Explicit(g) => *g,
        GeometryMode::AutoEllipse => {
            bail!("forward generation needs geometry_mode=explicit")
        }
    };
    let (sigma, source) = resolve_stress(&cfg, config_dir)?;
    let spec = PhantomSpec {
        rows: cfg.rows,
        cols: cfg.cols,
        dx: cfg.dx_cm,
        dy: cfg.dy_cm,
        geometry,
        center: (cfg.center_row, cfg.center_col),
        incl: MaterialParams::new(cfg.incl_e_pa, cfg.incl_nu)?,
        bg: MaterialParams::new(cfg.bg_e_pa, cfg.bg_nu)?,
        load: RemoteLoad::uniaxial(sigma),
        noise_std: cfg.noise_std,
    };
    let phantom = synth_phantom(&spec, seed)?;
    std::fs::create_dir_all(out)?;
    write_grid(&out.join("axial.grid"), &phantom.axial)?;
    write_grid(&out.join("lateral.grid"), &phantom.lateral)?;
    write_mask(&out.join("mask.grid"), &phantom.mask, cfg.dx_cm, cfg.dy_cm)?;
    write_grid(&out.join("truth_ym.grid"), &phantom.truth_ym)?;
    write_grid(&out.join("truth_pr.grid"), &phantom.truth_pr)?;

    let mut report = String::new();
    let _ = writeln!(report, "phantom generation");
    let _ = writeln!(report, "grid: {} x {}", cfg.rows, cfg.cols);
    let _ = writeln!(report, "geometry: {}", geometry.kind_name());
    let _ = writeln!(report, "applied stress: {sigma:.6} Pa ({source})");
    let _ = writeln!(report, "inclusion pixels: {}", phantom.mask.count());
    let _ = writeln!(report, "noise std: {:.6e}", cfg.noise_std);
    let _ = writeln!(report, "seed: {seed}");
    std::fs::write(out.join("forward_report.txt"), &report)?;
    Ok(report)
}

/// Maps a fitted ellipse onto an axisymmetric ellipsoid with its semi-axes
/// along the image axes (lateral = elevational).
fn geometry_from_ellipse(fit: &FittedEllipse) -> (InclusionGeometry, bool) {
    let (major, minor) = fit.semi_axes_cm;
    let along_x = fit.orientation_rad.abs() <= std::f64::consts::FRAC_PI_4;
    let (a_lat, b_ax) = if along_x { (major, minor) } else { (minor, major) };
    let deg = fit.orientation_rad.abs().to_degrees();
    let warn = deg > 15.0 && (90.0 - deg) > 15.0;
    (
        InclusionGeometry::Ellipsoid {
            a: a_lat,
            b: b_ax,
            c: a_lat,
        },
        warn,
    )
}

fn mean_sd(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd, n)
}

#[allow(clippy::too_many_arguments)]
fn reconstruction_report(
    cfg: &RunConfig,
    dataset: &Dataset,
    geometry: &InclusionGeometry,
    geometry_mode: &str,
    orientation_warn: bool,
    fit: &FittedEllipse,
    sigma: f64,
    sigma_source: &str,
    result: &ReconstructionResult,
) -> Result<String> {
    let mask = &dataset.mask;
    let metrics = shape_metrics(mask, cfg.window_area_cm2)?;
    let valid_masked = |i: &usize| mask.bits[*i] && result.validity.bits[*i];
    let (e_mean, e_sd, n_valid) = mean_sd(
        (0..mask.bits.len())
            .filter(valid_masked)
            .map(|i| result.ym_map.values[i]),
    );
    let (nu_mean, nu_sd, _) = mean_sd(
        (0..mask.bits.len())
            .filter(valid_masked)
            .map(|i| result.pr_map.values[i]),
    );
    let bg = result.background.params;
    let invalid = (0..mask.bits.len())
        .filter(|&i| mask.bits[i] && !result.validity.bits[i])
        .count();
    let nonconverged = (0..mask.bits.len())
        .filter(|&i| mask.bits[i] && result.status[i] == PixelStatus::NonConverged)
        .count();
    let (it_mean, _, _) = mean_sd(
        (0..mask.bits.len())
            .filter(|&i| mask.bits[i])
            .map(|i| result.iterations.values[i]),
    );
    let it_max = (0..mask.bits.len())
        .filter(|&i| mask.bits[i])
        .map(|i| result.iterations.values[i])
        .fold(0.0f64, f64::max);

    let mut r = String::new();
    let _ = writeln!(r, "reconstruction report");
    let _ = writeln!(
        r,
        "grid: {} x {} (dx = {:.6} cm, dy = {:.6} cm)",
        dataset.axial.rows, dataset.axial.cols, dataset.axial.dx, dataset.axial.dy
    );
    let _ = writeln!(r, "applied stress: {sigma:.6} Pa ({sigma_source})");
    let _ = writeln!(r, "median filter: {}", cfg.median_filter_size);
    let _ = writeln!(
        r,
        "background: E = {:.6} Pa, nu = {:.6} (window {},{} {}x{}, convention {:?}{})",
        bg.youngs_modulus,
        bg.poissons_ratio,
        cfg.background_window.row,
        cfg.background_window.col,
        cfg.background_window.height,
        cfg.background_window.width,
        result.background.convention,
        if result.background.pr_clamped {
            ", PR clamped"
        } else {
            ""
        }
    );
    let _ = writeln!(
        r,
        "mask: {} pixels, surface area = {:.6} cm^2, solidity = {:.6}",
        mask.count(),
        metrics.surface_area_cm2,
        metrics.solidity
    );
    let _ = writeln!(
        r,
        "fitted ellipse: center = ({:.6}, {:.6}) cm, semi-axes = ({:.6}, {:.6}) cm, orientation = {:.3} deg{}",
        fit.center_cm.0,
        fit.center_cm.1,
        fit.semi_axes_cm.0,
        fit.semi_axes_cm.1,
        fit.orientation_rad.to_degrees(),
        if orientation_warn {
            " [warning: > 15 deg, axis mapping approximate]"
        } else {
            ""
        }
    );
    let _ = writeln!(r, "geometry used ({geometry_mode}): {}", geometry.kind_name());
    let _ = writeln!(
        r,
        "inclusion E: mean = {:.6} Pa, sd = {:.6} Pa (n = {n_valid})",
        e_mean, e_sd
    );
    let _ = writeln!(r, "inclusion nu: mean = {:.6}, sd = {:.6}", nu_mean, nu_sd);
    let _ = writeln!(
        r,
        "CTYM = {:.6}, CTPR = {:.6}",
        e_mean / bg.youngs_modulus,
        nu_mean / bg.poissons_ratio
    );
    let _ = writeln!(
        r,
        "solver: iterations mean = {:.2}, max = {:.0}, invalid pixels = {invalid}, non-converged = {nonconverged}",
        it_mean, it_max
    );
    Ok(r)
}

fn cmd_reconstruct(
    config: &Path,
    axial: &Path,
    lateral: &Path,
    elevational: Option<&Path>,
    mask: &Path,
    out: &Path,
) -> Result<String> {
    let cfg = load_config(config)?;
    let config_dir = config.parent().unwrap_or(Path::new("."));
    let paths = DatasetPaths {
        axial: axial.to_path_buf(),
        lateral: lateral.to_path_buf(),
        elevational: elevational.map(Path::to_path_buf),
        mask: Some(mask.to_path_buf()),
    };
    let dataset = io::parse_dataset(&paths, &cfg).context("loading dataset")?;
    let (sigma, sigma_source) = resolve_stress(&cfg, config_dir)?;

    let fit = fit_ellipse(&dataset.mask, dataset.axial.dx, dataset.axial.dy)
        .context("fitting mask ellipse")?;
    let (geometry, geometry_mode, orientation_warn) = match &cfg.geometry {
        GeometryMode::Explicit(g) => (*g, "explicit", false),
        GeometryMode::AutoEllipse => {
            let (g, warn) = geometry_from_ellipse(&fit);
            (g, "auto_ellipse", warn)
        }
    };
    if orientation_warn {
        eprintln!(
            "warning: fitted ellipse orientation {:.1} deg exceeds 15 deg; axis-aligned approximation may be poor",
            fit.orientation_rad.to_degrees()
        );
    }

    let input = ReconstructionInput {
        geometry,
        sigma_a: sigma,
        settings: cfg.settings,
        window: cfg.background_window,
    };
    let result = reconstruct(
        &dataset.axial,
        &dataset.lateral,
        dataset.elevational.as_ref(),
        &dataset.mask,
        &input,
    )?;

    std::fs::create_dir_all(out)?;
    write_grid(&out.join("ym_map.grid"), &result.ym_map)?;
    write_grid(&out.join("pr_map.grid"), &result.pr_map)?;
    write_mask(
        &out.join("validity.grid"),
        &result.validity,
        dataset.axial.dx,
        dataset.axial.dy,
    )?;
    let report = reconstruction_report(
        &cfg,
        &dataset,
        &geometry,
        geometry_mode,
        orientation_warn,
        &fit,
        sigma,
        &sigma_source,
        &result,
    )?;
    std::fs::write(out.join("report.txt"), &report)?;
    Ok(report)
}

fn cmd_stress(log: Option<&Path>, config: Option<&Path>, out: Option<&Path>) -> Result<String> {
    let cfg = load_config_or_default(config)?;
    let log_path = match (log, &cfg.stress) {
        (Some(p), _) => p.to_path_buf(),
        (None, StressSource::SensorLog(rel)) => {
            let dir = config.and_then(Path::parent).unwrap_or(Path::new("."));
            dir.join(rel)
        }
        (None, StressSource::AppliedPa(_)) => {
            bail!("stress needs --log or a config with sensor_log_path")
        }
    };
    let sensor_log = read_sensor_log(&log_path)
        .with_context(|| format!("reading sensor log {}", log_path.display()))?;
    let (mean, std) = io::sensor_to_stress(&sensor_log)?;
    let mut report = String::new();
    let _ = writeln!(report, "sensor stress conversion");
    let _ = writeln!(report, "samples: {}", sensor_log.readings.len());
    let _ = writeln!(report, "mean stress: {mean:.3} Pa");
    let _ = writeln!(report, "stress std: {std:.3} Pa");
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("stress.txt"), &report)?;
    }
    Ok(report)
}

fn cmd_steady_state(series: &Path, config: Option<&Path>, out: Option<&Path>) -> Result<String> {
    let cfg = load_config_or_default(config)?;
    let creep = read_creep_series(series)
        .with_context(|| format!("reading creep series {}", series.display()))?;
    let ss = eshrec_core::image::steady_state(&creep, cfg.plateau_window_fraction)?;
    let mut report = String::new();
    let _ = writeln!(report, "steady-state extraction");
    let _ = writeln!(report, "samples: {}", creep.len());
    let _ = writeln!(report, "onset: {:.6} s", ss.onset);
    let _ = writeln!(report, "axial strain: {:.9e}", ss.axial);
    let _ = writeln!(report, "lateral strain: {:.9e}", ss.lateral);
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("steady_state.txt"), &report)?;
    }
    Ok(report)
}

fn cmd_metrics(
    est: &Path,
    truth: Option<&Path>,
    mask: &Path,
    config: Option<&Path>,
    out: Option<&Path>,
) -> Result<String> {
    let cfg = load_config_or_default(config)?;
    let est_grid = read_grid(est).with_context(|| format!("reading {}", est.display()))?;
    let (mask_grid, _, _) =
        read_mask(mask).with_context(|| format!("reading {}", mask.display()))?;
    let metrics = shape_metrics(&mask_grid, cfg.window_area_cm2)?;
    let mut report = String::new();
    let _ = writeln!(report, "map metrics");
    let _ = writeln!(report, "mask pixels: {}", mask_grid.count());
    let _ = writeln!(report, "surface area: {:.6} cm^2", metrics.surface_area_cm2);
    let _ = writeln!(report, "solidity: {:.6}", metrics.solidity);
    if let Some(truth_path) = truth {
        let truth_grid =
            read_grid(truth_path).with_context(|| format!("reading {}", truth_path.display()))?;
        let rmse = rmse_percent(&est_grid, &truth_grid, &mask_grid)?;
        let _ = writeln!(report, "RMSE: {rmse:.6} %");
    }
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("metrics.txt"), &report)?;
    }
    Ok(report)
}
