//! Plain-text file formats: strain/mask grids, key=value run configuration,
//! force-sensor logs and creep series, plus the sensor-to-stress conversion.
//!
//! Grid files carry a one-line header `rows cols dx_cm dy_cm` followed by
//! `rows` lines of `cols` decimal values. Values are written with 17
//! significant digits so a write/parse cycle is bit-exact.

use crate::error::{Error, Result};
use crate::eshelby::InclusionGeometry;
use crate::image::{BitGrid, CreepSeries, ScalarField, WindowRect};
use crate::inverse::SolverSettings;
use std::fmt::Write as _;
use std::path::Path;

/// Force-sensor full-scale force in N (reading 255).
pub const SENSOR_FULL_SCALE_N: f64 = 4.4;
/// Force-sensor reading scale.
pub const SENSOR_SCALE: f64 = 255.0;
/// Sensing area of the force sensor in m^2 (9.53 mm diameter disc).
pub const SENSOR_AREA_M2: f64 = 7.1331e-5;

/// Serializes a grid with a bit-exact decimal encoding.
pub fn format_grid(field: &ScalarField) -> String {
    let mut out = String::with_capacity(field.values.len() * 24);
    let _ = writeln!(
        out,
        "{} {} {:.16e} {:.16e}",
        field.rows, field.cols, field.dx, field.dy
    );
    for r in 0..field.rows {
        for c in 0..field.cols {
            if c > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.16e}", field.get(r, c));
        }
        out.push('\n');
    }
    out
}

pub fn write_grid(path: &Path, field: &ScalarField) -> Result<()> {
    std::fs::write(path, format_grid(field))?;
    Ok(())
}

/// Parses a grid file, validating the value count against the header.
pub fn parse_grid(text: &str) -> Result<ScalarField> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedGrid("empty file".into()))?;
    let mut parts = header.split_whitespace();
    let mut next_field = |name: &str| -> Result<&str> {
        parts
            .next()
            .ok_or_else(|| Error::MalformedGrid(format!("header missing {name}")))
    };
    let rows: usize = next_field("rows")?
        .parse()
        .map_err(|_| Error::MalformedGrid("bad rows".into()))?;
    let cols: usize = next_field("cols")?
        .parse()
        .map_err(|_| Error::MalformedGrid("bad cols".into()))?;
    let dx: f64 = next_field("dx_cm")?
        .parse()
        .map_err(|_| Error::MalformedGrid("bad dx".into()))?;
    let dy: f64 = next_field("dy_cm")?
        .parse()
        .map_err(|_| Error::MalformedGrid("bad dy".into()))?;
    if rows == 0 || cols == 0 || !(dx > 0.0) || !(dy > 0.0) {
        return Err(Error::MalformedGrid("non-positive header fields".into()));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for line in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::MalformedGrid(format!("bad value '{tok}'")))?;
            values.push(v);
        }
    }
    if values.len() != rows * cols {
        return Err(Error::MalformedGrid(format!(
            "expected {} values, found {}",
            rows * cols,
            values.len()
        )));
    }
    Ok(ScalarField {
        rows,
        cols,
        dx,
        dy,
        values,
    })
}

pub fn read_grid(path: &Path) -> Result<ScalarField> {
    parse_grid(&std::fs::read_to_string(path)?)
}

/// Writes a mask as a 0/1 grid sharing the field header format.
pub fn write_mask(path: &Path, mask: &BitGrid, dx: f64, dy: f64) -> Result<()> {
    let field = ScalarField {
        rows: mask.rows,
        cols: mask.cols,
        dx,
        dy,
        values: mask.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    };
    write_grid(path, &field)
}

/// Reads a mask grid; any nonzero value marks an inclusion pixel.
pub fn read_mask(path: &Path) -> Result<(BitGrid, f64, f64)> {
    let field = read_grid(path)?;
    let bits = field.values.iter().map(|&v| v != 0.0).collect();
    Ok((
        BitGrid {
            rows: field.rows,
            cols: field.cols,
            bits,
        },
        field.dx,
        field.dy,
    ))
}

/// How the inclusion geometry is obtained for reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometryMode {
    /// Fit the moment-equivalent ellipse of the mask and treat it as an
    /// axisymmetric ellipsoid (lateral = elevational semi-axis).
    AutoEllipse,
    Explicit(InclusionGeometry),
}

/// Source of the applied stress magnitude; exactly one must be configured.
#[derive(Debug, Clone, PartialEq)]
pub enum StressSource {
    AppliedPa(f64),
    SensorLog(String),
}

/// Flat key=value run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub stress: StressSource,
    pub geometry: GeometryMode,
    pub background_window: WindowRect,
    /// 0 disables filtering; otherwise odd.
    pub median_filter_size: usize,
    pub use_elevational: bool,
    pub window_area_cm2: f64,
    pub settings: SolverSettings,
    /// Minimum plateau fraction for steady-state extraction.
    pub plateau_window_fraction: f64,
    // phantom generation keys
    pub rows: usize,
    pub cols: usize,
    pub dx_cm: f64,
    pub dy_cm: f64,
    pub center_row: f64,
    pub center_col: f64,
    pub incl_e_pa: f64,
    pub incl_nu: f64,
    pub bg_e_pa: f64,
    pub bg_nu: f64,
    pub noise_std: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            stress: StressSource::AppliedPa(1000.0),
            geometry: GeometryMode::AutoEllipse,
            background_window: WindowRect {
                row: 2,
                col: 2,
                height: 5,
                width: 5,
            },
            median_filter_size: 0,
            use_elevational: false,
            window_area_cm2: 16.0,
            settings: SolverSettings::default(),
            plateau_window_fraction: 0.1,
            rows: 128,
            cols: 128,
            dx_cm: 4.0 / 128.0,
            dy_cm: 4.0 / 128.0,
            center_row: 63.5,
            center_col: 63.5,
            incl_e_pa: 97_020.0,
            incl_nu: 0.45,
            bg_e_pa: 32_780.0,
            bg_nu: 0.2,
            noise_std: 0.0,
        }
    }
}

fn parse_geometry(kind: &str, axes: &[f64]) -> Result<InclusionGeometry> {
    let need = |n: usize| -> Result<()> {
        if axes.len() == n {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "geometry '{kind}' needs {n} semi-axes, got {}",
                axes.len()
            )))
        }
    };
    let geom = match kind {
        "sphere" => {
            need(1)?;
            InclusionGeometry::Sphere { radius: axes[0] }
        }
        "ellipsoid" => {
            need(3)?;
            InclusionGeometry::Ellipsoid {
                a: axes[0],
                b: axes[1],
                c: axes[2],
            }
        }
        "cylinder" => {
            need(2)?;
            InclusionGeometry::Cylinder {
                a: axes[0],
                c: axes[1],
            }
        }
        "flat" => {
            need(3)?;
            InclusionGeometry::FlatEllipsoid {
                a: axes[0],
                b: axes[1],
                c: axes[2],
            }
        }
        "penny" => {
            need(2)?;
            InclusionGeometry::Penny {
                radius: axes[0],
                half_thickness: axes[1],
            }
        }
        "thin-disk" | "thin_disk" => {
            need(2)?;
            InclusionGeometry::ThinDisk {
                radius: axes[0],
                half_thickness: axes[1],
            }
        }
        "plane-strain-cylinder" | "plane_strain_cylinder" => {
            need(2)?;
            InclusionGeometry::PlaneStrainCylinder {
                a: axes[0],
                b: axes[1],
            }
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown geometry kind '{other}'"
            )))
        }
    };
    geom.validate()?;
    Ok(geom)
}

/// Parses the flat key=value configuration format. Lines starting with `#`
/// and blank lines are ignored.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut stress_pa: Option<f64> = None;
    let mut sensor_log: Option<String> = None;
    let mut geometry_mode = String::from("auto_ellipse");
    let mut geometry_kind = String::new();
    let mut semi_axes: Vec<f64> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad =
            |what: &str| Error::InvalidConfig(format!("line {}: bad {what}", lineno + 1));
        let parse_f64 = |v: &str, what: &str| v.parse::<f64>().map_err(|_| bad(what));
        let parse_usize = |v: &str, what: &str| v.parse::<usize>().map_err(|_| bad(what));
        match key {
            "applied_stress_pa" => stress_pa = Some(parse_f64(value, "applied_stress_pa")?),
            "sensor_log_path" => sensor_log = Some(value.to_string()),
            "geometry_mode" => geometry_mode = value.to_string(),
            "geometry_kind" => geometry_kind = value.to_string(),
            "semi_axes_cm" => {
                semi_axes = value
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("semi_axes_cm"))?;
            }
            "background_window" => {
                let parts: Vec<usize> = value
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("background_window"))?;
                if parts.len() != 4 {
                    return Err(bad("background_window (need row,col,height,width)"));
                }
                cfg.background_window = WindowRect {
                    row: parts[0],
                    col: parts[1],
                    height: parts[2],
                    width: parts[3],
                };
            }
            "median_filter_size" => {
                let size = parse_usize(value, "median_filter_size")?;
                if size != 0 && size % 2 == 0 {
                    return Err(bad("median_filter_size (must be 0 or odd)"));
                }
                cfg.median_filter_size = size;
            }
            "use_elevational" => {
                cfg.use_elevational = value.parse::<bool>().map_err(|_| bad("use_elevational"))?
            }
            "window_area_cm2" => cfg.window_area_cm2 = parse_f64(value, "window_area_cm2")?,
            "max_iterations" => {
                cfg.settings.max_iterations =
                    value.parse::<u32>().map_err(|_| bad("max_iterations"))?
            }
            "step_tolerance" => cfg.settings.step_tolerance = parse_f64(value, "step_tolerance")?,
            "residual_tolerance" => {
                cfg.settings.residual_tolerance = parse_f64(value, "residual_tolerance")?
            }
            "ym_low_factor" => {
                cfg.settings.ym_bounds_factors.0 = parse_f64(value, "ym_low_factor")?
            }
            "ym_high_factor" => {
                cfg.settings.ym_bounds_factors.1 = parse_f64(value, "ym_high_factor")?
            }
            "pr_lower_factor" => cfg.settings.pr_lower_factor = parse_f64(value, "pr_lower_factor")?,
            "pr_upper" => cfg.settings.pr_upper = parse_f64(value, "pr_upper")?,
            "plateau_window_fraction" => {
                cfg.plateau_window_fraction = parse_f64(value, "plateau_window_fraction")?
            }
            "rows" => cfg.rows = parse_usize(value, "rows")?,
            "cols" => cfg.cols = parse_usize(value, "cols")?,
            "dx_cm" => cfg.dx_cm = parse_f64(value, "dx_cm")?,
            "dy_cm" => cfg.dy_cm = parse_f64(value, "dy_cm")?,
            "center_row" => cfg.center_row = parse_f64(value, "center_row")?,
            "center_col" => cfg.center_col = parse_f64(value, "center_col")?,
            "incl_e_pa" => cfg.incl_e_pa = parse_f64(value, "incl_e_pa")?,
            "incl_nu" => cfg.incl_nu = parse_f64(value, "incl_nu")?,
            "bg_e_pa" => cfg.bg_e_pa = parse_f64(value, "bg_e_pa")?,
            "bg_nu" => cfg.bg_nu = parse_f64(value, "bg_nu")?,
            "noise_std" => cfg.noise_std = parse_f64(value, "noise_std")?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }

    cfg.stress = match (stress_pa, sensor_log) {
        (Some(p), None) => StressSource::AppliedPa(p),
        (None, Some(path)) => StressSource::SensorLog(path),
        (None, None) => {
            return Err(Error::InvalidConfig(
                "exactly one of applied_stress_pa or sensor_log_path is required".into(),
            ))
        }
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig(
                "applied_stress_pa and sensor_log_path are mutually exclusive".into(),
            ))
        }
    };
    cfg.geometry = match geometry_mode.as_str() {
        "auto_ellipse" => GeometryMode::AutoEllipse,
        "explicit" => {
            if geometry_kind.is_empty() {
                return Err(Error::InvalidConfig(
                    "geometry_mode=explicit requires geometry_kind".into(),
                ));
            }
            GeometryMode::Explicit(parse_geometry(&geometry_kind, &semi_axes)?)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown geometry_mode '{other}'"
            )))
        }
    };
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Time-stamped force-sensor readings on the 0-255 scale.
#[derive(Debug, Clone)]
pub struct SensorLog {
    pub times: Vec<f64>,
    pub readings: Vec<u32>,
}

impl SensorLog {
    pub fn new(times: Vec<f64>, readings: Vec<u32>) -> Result<Self> {
        if times.len() != readings.len() {
            return Err(Error::InvalidConfig(
                "sensor log times and readings differ in length".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "sensor log times must be strictly increasing".into(),
            ));
        }
        for &r in &readings {
            if r > 255 {
                return Err(Error::ReadingOutOfRange(r));
            }
        }
        Ok(Self { times, readings })
    }
}

/// Parses a sensor log of `time reading` lines.
pub fn parse_sensor_log(text: &str) -> Result<SensorLog> {
    let mut times = Vec::new();
    let mut readings = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let t: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidConfig(format!("sensor log line {}", lineno + 1)))?;
        let r: u32 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidConfig(format!("sensor log line {}", lineno + 1)))?;
        times.push(t);
        readings.push(r);
    }
    SensorLog::new(times, readings)
}

pub fn read_sensor_log(path: &Path) -> Result<SensorLog> {
    parse_sensor_log(&std::fs::read_to_string(path)?)
}

/// Converts sensor readings to applied stress:
/// `sigma0 = mean(reading) * 4.4 / (255 * A_r)` with the 7.1331e-5 m^2
/// sensing area. Returns (mean, standard deviation) in Pa; the deviation is
/// the sample standard deviation of the readings under the same factor.
pub fn sensor_to_stress(log: &SensorLog) -> Result<(f64, f64)> {
    if log.readings.is_empty() {
        return Err(Error::EmptyLog);
    }
    for &r in &log.readings {
        if r > 255 {
            return Err(Error::ReadingOutOfRange(r));
        }
    }
    let n = log.readings.len() as f64;
    let mean_reading = log.readings.iter().map(|&r| r as f64).sum::<f64>() / n;
    let factor = SENSOR_FULL_SCALE_N / (SENSOR_SCALE * SENSOR_AREA_M2);
    let std_reading = if log.readings.len() < 2 {
        0.0
    } else {
        let var = log
            .readings
            .iter()
            .map(|&r| (r as f64 - mean_reading).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        var.sqrt()
    };
    Ok((mean_reading * factor, std_reading * factor))
}

/// Parses a creep series of `time axial lateral` lines.
pub fn parse_creep_series(text: &str) -> Result<CreepSeries> {
    let mut t = Vec::new();
    let mut ax = Vec::new();
    let mut lat = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidConfig(format!("creep series line {}", lineno + 1)))?;
        if vals.len() != 3 {
            return Err(Error::InvalidConfig(format!(
                "creep series line {}: need time axial lateral",
                lineno + 1
            )));
        }
        t.push(vals[0]);
        ax.push(vals[1]);
        lat.push(vals[2]);
    }
    CreepSeries::new(t, ax, lat)
}

pub fn read_creep_series(path: &Path) -> Result<CreepSeries> {
    parse_creep_series(&std::fs::read_to_string(path)?)
}

/// An in-memory reconstruction dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub axial: ScalarField,
    pub lateral: ScalarField,
    pub elevational: Option<ScalarField>,
    pub mask: BitGrid,
}

/// Paths of the dataset grids.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub axial: std::path::PathBuf,
    pub lateral: std::path::PathBuf,
    pub elevational: Option<std::path::PathBuf>,
    pub mask: Option<std::path::PathBuf>,
}

/// Loads and validates a dataset; applies the configured median filter to
/// the strain grids.
pub fn parse_dataset(paths: &DatasetPaths, cfg: &RunConfig) -> Result<Dataset> {
    let mut axial = read_grid(&paths.axial)?;
    let mut lateral = read_grid(&paths.lateral)?;
    let mut elevational = match &paths.elevational {
        Some(p) => Some(read_grid(p)?),
        None => None,
    };
    let mask_path = paths.mask.as_ref().ok_or(Error::MissingMask)?;
    let (mask, mdx, mdy) = read_mask(mask_path)?;

    if !axial.congruent(&lateral) {
        return Err(Error::HeaderMismatch(
            "axial and lateral headers differ".into(),
        ));
    }
    if let Some(elev) = &elevational {
        if !axial.congruent(elev) {
            return Err(Error::HeaderMismatch(
                "elevational header differs from axial".into(),
            ));
        }
    }
    if !mask.congruent_with(&axial) || mdx != axial.dx || mdy != axial.dy {
        return Err(Error::HeaderMismatch("mask header differs".into()));
    }

    if cfg.median_filter_size >= 3 {
        axial = crate::image::median_filter(&axial, cfg.median_filter_size);
        lateral = crate::image::median_filter(&lateral, cfg.median_filter_size);
        if let Some(elev) = elevational.take() {
            elevational = Some(crate::image::median_filter(&elev, cfg.median_filter_size));
        }
    }
    Ok(Dataset {
        axial,
        lateral,
        elevational,
        mask,
    })
}
