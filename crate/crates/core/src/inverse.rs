//! Per-pixel simultaneous (E, nu) estimation from the eigenstrain-mismatch
//! cost, plus background estimation and the full map reconstruction.

use crate::error::{Error, Result};
use crate::eshelby::{eshelby_tensor, sphere_coefficients, EshelbyTensor, InclusionGeometry};
use crate::image::{BitGrid, ScalarField, StrainField, WindowRect};
use crate::lm::{self, LmOptions, Residuals};
use crate::voigt::{self, invert_uniaxial, mismatch_a, MaterialParams, Vec6, AX, ELEV, LAT};
use rayon::prelude::*;

/// Solver controls; defaults follow the published pipeline (iteration cap
/// 100, YM bounds 0.1x to 100x the apparent modulus, PR cap 0.495).
#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    pub max_iterations: u32,
    pub step_tolerance: f64,
    /// Dimensionless cutoff on the squared residual, normalized by the
    /// pixel's eigenstrain scale.
    pub residual_tolerance: f64,
    /// (low, high) multipliers of `sigma_a / eps_yy` bounding the YM search.
    pub ym_bounds_factors: (f64, f64),
    /// Multiplier of `|eps_xx / eps_yy|` giving the PR lower bound.
    pub pr_lower_factor: f64,
    pub pr_upper: f64,
    pub use_elevational: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_tolerance: 1e-10,
            residual_tolerance: 1e-12,
            ym_bounds_factors: (0.1, 100.0),
            pr_lower_factor: -0.8,
            pr_upper: 0.495,
            use_elevational: false,
        }
    }
}

/// Relative band around unit shear/bulk contrast inside which the cost
/// returns a finite penalty instead of evaluating the singular mismatch.
const CONTRAST_PENALTY_BAND: f64 = 1e-6;
/// Penalty multiplier applied to the residual scale inside the band.
const PENALTY_FACTOR: f64 = 1e6;
/// Hard floor for the PR lower bound, keeping candidates physical.
const PR_FLOOR: f64 = -0.95;

/// Inverse-form eigenstrain `eps1* = S^-1 (eps - eps0)` on the normal block.
///
/// Fails with `SingularSystem` for geometries whose normal block cannot be
/// inverted (the cylinder kinds, whose third row vanishes identically).
pub fn eigenstrain_inverse(s: &EshelbyTensor, eps: &Vec6, eps0: &Vec6) -> Result<Vec6> {
    let normal = s.normal_block();
    let sv = normal.singular_values();
    let (max, min) = (sv.max(), sv.min());
    if min <= 0.0 || max / min > 1e12 {
        return Err(Error::SingularSystem(if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }));
    }
    let rhs = voigt::Vec3::new(eps[LAT] - eps0[LAT], eps[AX] - eps0[AX], eps[ELEV] - eps0[ELEV]);
    let sol = normal
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem(f64::INFINITY))?;
    let mut eig = Vec6::zeros();
    eig[LAT] = sol[0];
    eig[AX] = sol[1];
    eig[ELEV] = sol[2];
    for k in 3..6 {
        let diff = eps[k] - eps0[k];
        if diff != 0.0 {
            eig[k] = diff / s.s[(k, k)];
        }
    }
    Ok(eig)
}

/// Spherical closed form of the inverse eigenstrain, assuming the
/// axisymmetric identity `eps_11 = eps_33` of the strain difference.
pub fn eigenstrain_inverse_sphere(nu_b: f64, eps: &Vec6, eps0: &Vec6) -> Vec6 {
    let (m1, m2, _) = sphere_coefficients(nu_b);
    let den = m1 * m1 + m1 * m2 - 2.0 * m2 * m2;
    let d_lat = eps[LAT] - eps0[LAT];
    let d_ax = eps[AX] - eps0[AX];
    let e_lat = (m1 * d_lat - m2 * d_ax) / den;
    let e_ax = ((m1 + m2) * d_ax - 2.0 * m2 * d_lat) / den;
    voigt::normal_vec(e_lat, e_ax, e_lat)
}

/// One cost evaluation: `J` and the residual components.
#[derive(Debug, Clone, Copy)]
pub struct CostBreakdown {
    pub j: f64,
    /// Residuals in component order (lateral, axial, elevational); only the
    /// first `m` entries are active.
    pub residuals: [f64; 3],
    pub m: usize,
    /// Set when the candidate fell inside the singular-contrast penalty band.
    pub penalized: bool,
}

struct CostContext<'a> {
    s: &'a EshelbyTensor,
    /// None when the normal block of S is singular; the residual is then
    /// formed as `(eps - eps0) - S eps2*` instead of `eps1* - eps2*`.
    normal_lu: Option<nalgebra::LU<f64, nalgebra::U3, nalgebra::U3>>,
    eps0: Vec6,
    bg: MaterialParams,
    mu_b: f64,
    k_b: f64,
    m: usize,
}

impl<'a> CostContext<'a> {
    fn new(s: &'a EshelbyTensor, eps0: Vec6, bg: MaterialParams, use_elevational: bool) -> Self {
        let normal_lu = if s.normal_block_singular() {
            None
        } else {
            Some(s.normal_block().lu())
        };
        Self {
            s,
            normal_lu,
            eps0,
            bg,
            mu_b: bg.shear_modulus(),
            k_b: bg.bulk_modulus(),
            m: if use_elevational { 3 } else { 2 },
        }
    }

    fn residuals(&self, candidate: &MaterialParams, eps_pixel: &Vec6) -> (Residuals, bool) {
        let diff = eps_pixel - self.eps0;
        let scale = self.eps0.amax().max(diff.amax()).max(f64::MIN_POSITIVE);
        let penalty = || {
            (
                Residuals {
                    vals: [PENALTY_FACTOR * scale; 3],
                    m: self.m,
                },
                true,
            )
        };

        let mu_i = candidate.shear_modulus();
        let k_i = candidate.bulk_modulus();
        if (mu_i / self.mu_b - 1.0).abs() < CONTRAST_PENALTY_BAND
            || (k_i / self.k_b - 1.0).abs() < CONTRAST_PENALTY_BAND
        {
            return penalty();
        }
        let a = match mismatch_a(candidate, &self.bg) {
            Ok(a) => a,
            Err(_) => return penalty(),
        };
        let eig2 = match crate::forward::eigenstrain_forward(self.s, &a, &self.eps0) {
            Ok(e) => e,
            Err(_) => return penalty(),
        };

        let mut vals = [0.0; 3];
        match &self.normal_lu {
            Some(lu) => {
                let rhs = voigt::Vec3::new(diff[LAT], diff[AX], diff[ELEV]);
                match lu.solve(&rhs) {
                    Some(eig1) => {
                        vals[0] = eig1[0] - eig2[LAT];
                        vals[1] = eig1[1] - eig2[AX];
                        vals[2] = eig1[2] - eig2[ELEV];
                    }
                    None => return penalty(),
                }
            }
            None => {
                // singular S: compare in strain space, where the identity
                // eps - eps0 = S eps2* still holds exactly at the truth
                let pushed = self.s.s * eig2;
                vals[0] = diff[LAT] - pushed[LAT];
                vals[1] = diff[AX] - pushed[AX];
                vals[2] = diff[ELEV] - pushed[ELEV];
            }
        }
        (Residuals { vals, m: self.m }, false)
    }
}

/// Eigenstrain-mismatch cost of a candidate (E, nu) at one pixel.
///
/// Residual components are `eps1*(k) - eps2*(k)` over (lateral, axial) and,
/// with `use_elevational`, the elevational component as well. Candidates in
/// the singular-contrast band receive a large finite penalty so a bounded
/// optimizer can traverse the region.
pub fn cost(
    candidate: &MaterialParams,
    s: &EshelbyTensor,
    eps_pixel: &Vec6,
    eps0: &Vec6,
    bg: &MaterialParams,
    use_elevational: bool,
) -> CostBreakdown {
    let ctx = CostContext::new(s, *eps0, *bg, use_elevational);
    let (res, penalized) = ctx.residuals(candidate, eps_pixel);
    CostBreakdown {
        j: res.cost(),
        residuals: res.vals,
        m: res.m,
        penalized,
    }
}

/// Per-pixel solver diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct PixelDiagnostics {
    pub iterations: u32,
    pub cost: f64,
    pub converged: bool,
    pub ym_bound_hit: bool,
    pub pr_bound_hit: bool,
}

/// Deterministic fallback starts (offset of ln E from the apparent modulus,
/// absolute nu) tried when the primary start stalls on a poor minimum.
const FALLBACK_STARTS: [(f64, f64); 6] = [
    (-1.6, 0.1),
    (1.6, 0.1),
    (-1.6, 0.4),
    (1.6, 0.4),
    (0.0, 0.05),
    (0.0, 0.3),
];

fn solve_with_context(
    ctx: &CostContext<'_>,
    eps_pixel: &Vec6,
    sigma_a: f64,
    settings: &SolverSettings,
) -> Result<(MaterialParams, PixelDiagnostics)> {
    let eps_yy = eps_pixel[AX];
    if eps_yy.abs() <= 1e-9 {
        return Err(Error::DegenerateStrain);
    }
    let apparent = (sigma_a / eps_yy).abs();
    let (f_lo, f_hi) = settings.ym_bounds_factors;
    let lo = [
        (f_lo * apparent).ln(),
        (settings.pr_lower_factor * (eps_pixel[LAT] / eps_yy).abs()).max(PR_FLOOR),
    ];
    let hi = [(f_hi * apparent).ln(), settings.pr_upper];

    let objective = |x: &[f64; 2]| -> Residuals {
        let candidate = MaterialParams {
            youngs_modulus: x[0].exp(),
            poissons_ratio: x[1],
        };
        ctx.residuals(&candidate, eps_pixel).0
    };
    // the residual tolerance is dimensionless: it applies to the squared
    // residual normalized by the pixel's eigenstrain scale
    let diff = eps_pixel - ctx.eps0;
    let scale = ctx.eps0.amax().max(diff.amax()).max(f64::MIN_POSITIVE);
    let opts = LmOptions {
        max_iterations: settings.max_iterations,
        step_tolerance: settings.step_tolerance,
        residual_tolerance: settings.residual_tolerance * scale * scale,
    };

    let nu0 = (eps_pixel[LAT] / eps_yy).abs().clamp(lo[1], 0.45);
    let x0 = [apparent.ln().clamp(lo[0], hi[0]), nu0];
    let mut best = lm::minimize(&objective, x0, lo, hi, &opts);

    // retry from a fixed start grid when the primary run stalls high
    let acceptable = (1e-3 * scale).powi(2);
    if best.cost > acceptable {
        for &(dlog, nu_alt) in FALLBACK_STARTS.iter() {
            let alt = [
                (apparent.ln() + dlog).clamp(lo[0], hi[0]),
                nu_alt.clamp(lo[1], hi[1]),
            ];
            let run = lm::minimize(&objective, alt, lo, hi, &opts);
            if run.cost < best.cost {
                best = run;
            }
            if best.cost <= acceptable {
                break;
            }
        }
    }

    // snap near-bound iterates onto the bound so the hit is reported exactly
    let edge = 1e-6;
    let mut x = best.x;
    for p in 0..2 {
        if (x[p] - lo[p]).abs() < edge {
            x[p] = lo[p];
        } else if (x[p] - hi[p]).abs() < edge {
            x[p] = hi[p];
        }
    }
    let params = MaterialParams {
        youngs_modulus: x[0].exp(),
        poissons_ratio: x[1],
    };
    Ok((
        params,
        PixelDiagnostics {
            iterations: best.iterations,
            cost: best.cost,
            converged: best.converged,
            ym_bound_hit: x[0] == lo[0] || x[0] == hi[0],
            pr_bound_hit: x[1] == lo[1] || x[1] == hi[1],
        },
    ))
}

/// Bounded least-squares estimate of (E_i, nu_i) at one pixel.
///
/// YM is searched in `[0.1, 100] x sigma_a / eps_yy` (log-parameterized),
/// PR in `[-0.8 |eps_xx/eps_yy|, 0.495]`. Non-convergence at the iteration
/// cap is reported in the diagnostics, not as an error.
pub fn solve_pixel(
    eps_pixel: &Vec6,
    eps0: &Vec6,
    s: &EshelbyTensor,
    bg: &MaterialParams,
    sigma_a: f64,
    settings: &SolverSettings,
) -> Result<(MaterialParams, PixelDiagnostics)> {
    let ctx = CostContext::new(s, *eps0, *bg, settings.use_elevational);
    solve_with_context(&ctx, eps_pixel, sigma_a, settings)
}

/// Background parameter estimate with its bookkeeping flags.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundEstimate {
    pub params: MaterialParams,
    pub convention: voigt::SignConvention,
    pub pr_clamped: bool,
    /// Mean axial strain of the window, kept for sign propagation.
    pub mean_axial: f64,
    pub mean_lateral: f64,
}

/// Estimates (E_b, nu_b) from the mean strains of a homogeneous window.
///
/// The PR estimate is additionally ceilinged at 0.495 so every downstream
/// lambda evaluation stays clear of the incompressibility singularity.
pub fn estimate_background(
    axial: &StrainField,
    lateral: &StrainField,
    mask: &BitGrid,
    window: &WindowRect,
    sigma_a: f64,
) -> Result<BackgroundEstimate> {
    if !window.fits(axial.rows, axial.cols) {
        return Err(Error::WindowOutOfBounds);
    }
    for r in window.row..window.row + window.height {
        for c in window.col..window.col + window.width {
            if mask.get(r, c) {
                return Err(Error::WindowOverlapsMask);
            }
        }
    }
    let n = (window.height * window.width) as f64;
    let mut sum_ax = 0.0;
    let mut sum_lat = 0.0;
    for r in window.row..window.row + window.height {
        for c in window.col..window.col + window.width {
            sum_ax += axial.get(r, c);
            sum_lat += lateral.get(r, c);
        }
    }
    let (mean_ax, mean_lat) = (sum_ax / n, sum_lat / n);
    let fit = invert_uniaxial(sigma_a, mean_ax, mean_lat)?;
    let mut params = fit.params;
    let mut clamped = fit.pr_clamped;
    if params.poissons_ratio > voigt::PR_CLAMP_HIGH {
        params.poissons_ratio = voigt::PR_CLAMP_HIGH;
        clamped = true;
    }
    Ok(BackgroundEstimate {
        params,
        convention: fit.convention,
        pr_clamped: clamped,
        mean_axial: mean_ax,
        mean_lateral: mean_lat,
    })
}

/// Why a pixel carries (or does not carry) a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum PixelStatus {
    Valid = 0,
    /// Axial strain too small to invert.
    DegenerateStrain = 1,
    /// Solver hit the iteration cap; last iterate returned.
    NonConverged = 2,
    /// Poisson estimate clamped into range.
    PrClamped = 3,
    /// Solver error; no value.
    Failed = 4,
}

/// Full per-pixel reconstruction output.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub ym_map: ScalarField,
    pub pr_map: ScalarField,
    pub validity: BitGrid,
    /// Iteration count per pixel (0 outside the mask).
    pub iterations: ScalarField,
    /// Final cost J per pixel (0 outside the mask).
    pub residual: ScalarField,
    pub status: Vec<PixelStatus>,
    pub background: BackgroundEstimate,
}

/// Inputs to [`reconstruct`] beyond the strain grids.
#[derive(Debug, Clone)]
pub struct ReconstructionInput {
    pub geometry: InclusionGeometry,
    /// Applied stress magnitude in Pa.
    pub sigma_a: f64,
    pub settings: SolverSettings,
    pub window: WindowRect,
}

/// Reconstructs YM and PR maps from axial/lateral (optionally elevational)
/// strain grids and an inclusion mask.
///
/// The background is estimated first from the window; the Eshelby tensor is
/// built once from the geometry and the estimated background PR. Masked
/// pixels are solved independently (in parallel; the result does not depend
/// on scheduling) and unmasked pixels are inverted pointwise through the
/// uniaxial Hooke relations. Per-pixel failures mark the pixel invalid and
/// never abort the map.
pub fn reconstruct(
    axial: &StrainField,
    lateral: &StrainField,
    elevational: Option<&StrainField>,
    mask: &BitGrid,
    input: &ReconstructionInput,
) -> Result<ReconstructionResult> {
    if !axial.congruent(lateral) || !mask.congruent_with(axial) {
        return Err(Error::HeaderMismatch(
            "axial, lateral and mask grids must be congruent".into(),
        ));
    }
    if let Some(elev) = elevational {
        if !axial.congruent(elev) {
            return Err(Error::HeaderMismatch(
                "elevational grid must be congruent with the others".into(),
            ));
        }
    }
    if mask.count() == 0 {
        return Err(Error::MaskTooSmall(0));
    }

    let bg = estimate_background(axial, lateral, mask, &input.window, input.sigma_a)?;
    // propagate the data's sign convention into the remote field
    let sigma_signed = input.sigma_a.abs() * bg.mean_axial.signum();
    let load = crate::forward::RemoteLoad::uniaxial(sigma_signed);
    let eps0 = crate::forward::remote_strain(&load, &bg.params)?;
    let s = eshelby_tensor(&input.geometry, bg.params.poissons_ratio)?;

    let mut settings = input.settings;
    settings.use_elevational = elevational.is_some();
    let ctx = CostContext::new(&s, eps0, bg.params, settings.use_elevational);

    struct PixelOutcome {
        ym: f64,
        pr: f64,
        iterations: f64,
        residual: f64,
        status: PixelStatus,
    }

    let n = axial.values.len();
    let outcomes: Vec<PixelOutcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ax = axial.values[i];
            let lat = lateral.values[i];
            if mask.bits[i] {
                let elev = elevational.map_or(lat, |e| e.values[i]);
                let eps_pixel = voigt::normal_vec(lat, ax, elev);
                match solve_with_context(&ctx, &eps_pixel, input.sigma_a, &settings) {
                    Ok((params, diag)) => PixelOutcome {
                        ym: params.youngs_modulus,
                        pr: params.poissons_ratio,
                        iterations: diag.iterations as f64,
                        residual: diag.cost,
                        status: if diag.converged {
                            PixelStatus::Valid
                        } else {
                            PixelStatus::NonConverged
                        },
                    },
                    Err(Error::DegenerateStrain) => PixelOutcome {
                        ym: f64::NAN,
                        pr: f64::NAN,
                        iterations: 0.0,
                        residual: f64::NAN,
                        status: PixelStatus::DegenerateStrain,
                    },
                    Err(_) => PixelOutcome {
                        ym: f64::NAN,
                        pr: f64::NAN,
                        iterations: 0.0,
                        residual: f64::NAN,
                        status: PixelStatus::Failed,
                    },
                }
            } else {
                match invert_uniaxial(sigma_signed, ax, lat) {
                    Ok(fit) => PixelOutcome {
                        ym: fit.params.youngs_modulus,
                        pr: fit.params.poissons_ratio,
                        iterations: 0.0,
                        residual: 0.0,
                        status: if fit.pr_clamped {
                            PixelStatus::PrClamped
                        } else {
                            PixelStatus::Valid
                        },
                    },
                    Err(_) => PixelOutcome {
                        ym: f64::NAN,
                        pr: f64::NAN,
                        iterations: 0.0,
                        residual: f64::NAN,
                        status: PixelStatus::DegenerateStrain,
                    },
                }
            }
        })
        .collect();

    let mut result = ReconstructionResult {
        ym_map: ScalarField::filled(axial.rows, axial.cols, axial.dx, axial.dy, f64::NAN),
        pr_map: ScalarField::filled(axial.rows, axial.cols, axial.dx, axial.dy, f64::NAN),
        validity: BitGrid::new(axial.rows, axial.cols),
        iterations: ScalarField::filled(axial.rows, axial.cols, axial.dx, axial.dy, 0.0),
        residual: ScalarField::filled(axial.rows, axial.cols, axial.dx, axial.dy, 0.0),
        status: Vec::with_capacity(n),
        background: bg,
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        result.ym_map.values[i] = o.ym;
        result.pr_map.values[i] = o.pr;
        result.iterations.values[i] = o.iterations;
        result.residual.values[i] = o.residual;
        result.validity.bits[i] = matches!(
            o.status,
            PixelStatus::Valid | PixelStatus::PrClamped | PixelStatus::NonConverged
        );
        result.status.push(o.status);
    }
    Ok(result)
}
