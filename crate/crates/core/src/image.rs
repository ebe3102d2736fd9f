//! Grid containers and image-level operations: median filtering, equivalent
//! ellipse fitting, creep-curve steady-state extraction, RMSE and shape
//! metrics.

use crate::error::{Error, Result};

/// Fraction of the per-component strain range allowed as slope (per second)
/// inside a steady-state plateau.
pub const PLATEAU_SLOPE_FRACTION_PER_S: f64 = 0.0025;

/// Row-major 2D scalar grid with physical pixel spacing in cm.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub rows: usize,
    pub cols: usize,
    /// Pixel width (cm), along columns / x.
    pub dx: f64,
    /// Pixel height (cm), along rows / y.
    pub dy: f64,
    pub values: Vec<f64>,
}

/// A strain component image; the same container also carries modulus and
/// Poisson maps.
pub type StrainField = ScalarField;

impl ScalarField {
    pub fn filled(rows: usize, cols: usize, dx: f64, dy: f64, value: f64) -> Self {
        Self {
            rows,
            cols,
            dx,
            dy,
            values: vec![value; rows * cols],
        }
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.idx(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let i = self.idx(row, col);
        self.values[i] = value;
    }

    /// Header-level congruence (same shape and spacing).
    pub fn congruent(&self, other: &ScalarField) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.dx == other.dx
            && self.dy == other.dy
    }
}

/// Boolean mask congruent with its paired [`ScalarField`].
#[derive(Debug, Clone, PartialEq)]
pub struct BitGrid {
    pub rows: usize,
    pub cols: usize,
    pub bits: Vec<bool>,
}

impl BitGrid {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[self.idx(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        let i = self.idx(row, col);
        self.bits[i] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn congruent_with(&self, field: &ScalarField) -> bool {
        self.rows == field.rows && self.cols == field.cols
    }
}

/// Rectangular pixel window (used for background estimation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowRect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl WindowRect {
    pub fn fits(&self, rows: usize, cols: usize) -> bool {
        self.height >= 1
            && self.width >= 1
            && self.row + self.height <= rows
            && self.col + self.width <= cols
    }
}

/// Time-resolved axial/lateral strain pair from a creep experiment.
#[derive(Debug, Clone)]
pub struct CreepSeries {
    pub timestamps: Vec<f64>,
    pub axial: Vec<f64>,
    pub lateral: Vec<f64>,
}

impl CreepSeries {
    /// Validates equal lengths and strictly increasing timestamps.
    pub fn new(timestamps: Vec<f64>, axial: Vec<f64>, lateral: Vec<f64>) -> Result<Self> {
        if timestamps.len() != axial.len() || timestamps.len() != lateral.len() {
            return Err(Error::InvalidConfig(
                "creep series components must have equal lengths".into(),
            ));
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "creep series timestamps must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            timestamps,
            axial,
            lateral,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Square median filter with edge replication. `size` must be odd.
pub fn median_filter(f: &ScalarField, size: usize) -> ScalarField {
    assert!(size % 2 == 1 && size >= 1, "median filter size must be odd");
    if size == 1 {
        return f.clone();
    }
    let half = (size / 2) as isize;
    let mut out = f.clone();
    let mut window = Vec::with_capacity(size * size);
    for r in 0..f.rows {
        for c in 0..f.cols {
            window.clear();
            for dr in -half..=half {
                for dc in -half..=half {
                    let rr = (r as isize + dr).clamp(0, f.rows as isize - 1) as usize;
                    let cc = (c as isize + dc).clamp(0, f.cols as isize - 1) as usize;
                    window.push(f.get(rr, cc));
                }
            }
            window.sort_unstable_by(f64::total_cmp);
            out.set(r, c, window[window.len() / 2]);
        }
    }
    out
}

/// Moment-equivalent ellipse of a mask.
#[derive(Debug, Clone, Copy)]
pub struct FittedEllipse {
    /// Center in cm, (x, y).
    pub center_cm: (f64, f64),
    /// Semi-axes in cm, (major, minor), scaled so the ellipse area equals
    /// the mask area (skipped when degenerate).
    pub semi_axes_cm: (f64, f64),
    /// Major-axis angle from the +x axis, in (-pi/2, pi/2].
    pub orientation_rad: f64,
    /// Set when the minor second moment vanishes (line-like mask).
    pub degenerate: bool,
}

/// Fits the moment-equivalent ellipse: center from first moments, axes and
/// orientation from the eigen-decomposition of the second central moments,
/// scaled to preserve the mask area.
pub fn fit_ellipse(mask: &BitGrid, dx: f64, dy: f64) -> Result<FittedEllipse> {
    let n = mask.count();
    if n < 10 {
        return Err(Error::MaskTooSmall(n));
    }
    let nf = n as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for r in 0..mask.rows {
        for c in 0..mask.cols {
            if mask.get(r, c) {
                sx += (c as f64 + 0.5) * dx;
                sy += (r as f64 + 0.5) * dy;
            }
        }
    }
    let (mx, my) = (sx / nf, sy / nf);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for r in 0..mask.rows {
        for c in 0..mask.cols {
            if mask.get(r, c) {
                let x = (c as f64 + 0.5) * dx - mx;
                let y = (r as f64 + 0.5) * dy - my;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
            }
        }
    }
    let (mxx, myy, mxy) = (sxx / nf, syy / nf, sxy / nf);
    let mean = 0.5 * (mxx + myy);
    let spread = (0.25 * (mxx - myy).powi(2) + mxy * mxy).sqrt();
    let l1 = mean + spread;
    let l2 = (mean - spread).max(0.0);
    let mut orientation = 0.5 * (2.0 * mxy).atan2(mxx - myy);
    if orientation <= -std::f64::consts::FRAC_PI_2 {
        orientation += std::f64::consts::PI;
    } else if orientation > std::f64::consts::FRAC_PI_2 {
        orientation -= std::f64::consts::PI;
    }

    if l2 <= 1e-12 * l1 {
        return Ok(FittedEllipse {
            center_cm: (mx, my),
            semi_axes_cm: (2.0 * l1.sqrt(), 2.0 * l2.sqrt()),
            orientation_rad: orientation,
            degenerate: true,
        });
    }
    let area = nf * dx * dy;
    let scale = (area / (std::f64::consts::PI * (l1 * l2).sqrt())).sqrt();
    Ok(FittedEllipse {
        center_cm: (mx, my),
        semi_axes_cm: (scale * l1.sqrt(), scale * l2.sqrt()),
        orientation_rad: orientation,
        degenerate: false,
    })
}

/// Steady-state plateau of a creep series.
#[derive(Debug, Clone, Copy)]
pub struct SteadyState {
    pub axial: f64,
    pub lateral: f64,
    /// Detected plateau start time in s.
    pub onset: f64,
}

/// Detects the earliest time after which both strain components stay flat
/// (per-interval slope at most `PLATEAU_SLOPE_FRACTION_PER_S` of that
/// component's total range, per second) for the remainder of the series, and
/// averages each component over that tail.
///
/// The tail must span at least `window_fraction` of the total duration;
/// otherwise the experiment is deemed too short and `NoPlateau` is returned.
pub fn steady_state(series: &CreepSeries, window_fraction: f64) -> Result<SteadyState> {
    let n = series.len();
    if n < 10 {
        return Err(Error::NoPlateau);
    }
    let range = |v: &[f64]| -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in v {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        hi - lo
    };
    let thr_ax = PLATEAU_SLOPE_FRACTION_PER_S * range(&series.axial);
    let thr_lat = PLATEAU_SLOPE_FRACTION_PER_S * range(&series.lateral);

    // scan backwards for the first interval that breaks the plateau
    let mut onset_idx = 0usize;
    for i in (0..n - 1).rev() {
        let dt = series.timestamps[i + 1] - series.timestamps[i];
        let ok = ((series.axial[i + 1] - series.axial[i]) / dt).abs() <= thr_ax
            && ((series.lateral[i + 1] - series.lateral[i]) / dt).abs() <= thr_lat;
        if !ok {
            onset_idx = i + 1;
            break;
        }
    }
    if onset_idx >= n - 1 {
        return Err(Error::NoPlateau);
    }
    let duration = series.timestamps[n - 1] - series.timestamps[0];
    let tail = series.timestamps[n - 1] - series.timestamps[onset_idx];
    if tail < window_fraction * duration {
        return Err(Error::NoPlateau);
    }
    let tail_n = (n - onset_idx) as f64;
    Ok(SteadyState {
        axial: series.axial[onset_idx..].iter().sum::<f64>() / tail_n,
        lateral: series.lateral[onset_idx..].iter().sum::<f64>() / tail_n,
        onset: series.timestamps[onset_idx],
    })
}

/// Percent RMSE between an estimated and a true map over a mask:
/// `sqrt(sum (e - t)^2 / N) * 100 N / sum t`.
pub fn rmse_percent(estimated: &ScalarField, truth: &ScalarField, mask: &BitGrid) -> Result<f64> {
    if !estimated.congruent(truth) || !mask.congruent_with(estimated) {
        return Err(Error::HeaderMismatch(
            "rmse inputs must share shape and spacing".into(),
        ));
    }
    let mut n = 0usize;
    let mut sum_sq = 0.0;
    let mut sum_truth = 0.0;
    for i in 0..estimated.values.len() {
        if mask.bits[i] {
            let d = estimated.values[i] - truth.values[i];
            sum_sq += d * d;
            sum_truth += truth.values[i];
            n += 1;
        }
    }
    if n == 0 || sum_truth == 0.0 {
        return Err(Error::ZeroTruthSum);
    }
    let nf = n as f64;
    Ok((sum_sq / nf).sqrt() * 100.0 * nf / sum_truth)
}

/// Surface area and solidity of a mask.
#[derive(Debug, Clone, Copy)]
pub struct ShapeMetrics {
    /// `n_p * window_area / n_t` in cm^2.
    pub surface_area_cm2: f64,
    /// Mask pixel area divided by the convex hull area of the pixel squares.
    pub solidity: f64,
}

/// Computes the imaging-window-normalized surface area and the solidity.
/// `window_area_cm2` is the physical area covered by the whole grid
/// (16 cm^2 for a 4 x 4 cm field of view).
pub fn shape_metrics(mask: &BitGrid, window_area_cm2: f64) -> Result<ShapeMetrics> {
    let n_p = mask.count();
    if n_p == 0 {
        return Err(Error::MaskTooSmall(0));
    }
    let n_t = mask.rows * mask.cols;
    let surface_area = n_p as f64 * window_area_cm2 / n_t as f64;

    // hull over the corners of every masked pixel square, in pixel units
    let mut pts = Vec::with_capacity(4 * n_p);
    for r in 0..mask.rows {
        for c in 0..mask.cols {
            if mask.get(r, c) {
                let (x, y) = (c as f64, r as f64);
                pts.push((x, y));
                pts.push((x + 1.0, y));
                pts.push((x, y + 1.0));
                pts.push((x + 1.0, y + 1.0));
            }
        }
    }
    let hull_area = convex_hull_area(&mut pts);
    Ok(ShapeMetrics {
        surface_area_cm2: surface_area,
        solidity: n_p as f64 / hull_area,
    })
}

/// Area of the convex hull of a point set (Andrew monotone chain + shoelace).
fn convex_hull_area(points: &mut Vec<(f64, f64)>) -> f64 {
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    if points.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| -> f64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len() + 1);
    for &p in points.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in points.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    let mut area2 = 0.0;
    for i in 0..hull.len() {
        let (x1, y1) = hull[i];
        let (x2, y2) = hull[(i + 1) % hull.len()];
        area2 += x1 * y2 - x2 * y1;
    }
    0.5 * area2.abs()
}

/// Morphological erosion by a square structuring element of the given
/// Chebyshev radius: a pixel survives when its whole (2r+1)^2 neighborhood
/// lies inside the mask. Radius equal to a filter's half-width selects the
/// pixels whose filter windows never straddle the mask boundary.
pub fn erode(mask: &BitGrid, radius: usize) -> BitGrid {
    let r = radius as isize;
    let mut out = BitGrid::new(mask.rows, mask.cols);
    for row in 0..mask.rows {
        for col in 0..mask.cols {
            if !mask.get(row, col) {
                continue;
            }
            let mut keep = true;
            'scan: for dr in -r..=r {
                for dc in -r..=r {
                    let rr = row as isize + dr;
                    let cc = col as isize + dc;
                    if rr < 0
                        || cc < 0
                        || rr >= mask.rows as isize
                        || cc >= mask.cols as isize
                        || !mask.get(rr as usize, cc as usize)
                    {
                        keep = false;
                        break 'scan;
                    }
                }
            }
            out.set(row, col, keep);
        }
    }
    out
}

/// Rasterizes a filled axis-aligned ellipse into a mask (pixel centers,
/// pixel units). Shared by tests and the phantom generator.
pub fn ellipse_mask(
    rows: usize,
    cols: usize,
    center_row: f64,
    center_col: f64,
    semi_row: f64,
    semi_col: f64,
) -> BitGrid {
    let mut mask = BitGrid::new(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let y = (r as f64 + 0.5 - (center_row + 0.5)) / semi_row;
            let x = (c as f64 + 0.5 - (center_col + 0.5)) / semi_col;
            if x * x + y * y <= 1.0 {
                mask.set(r, c, true);
            }
        }
    }
    mask
}
