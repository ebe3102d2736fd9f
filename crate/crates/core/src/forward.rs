//! Forward Eshelby problem: remote strain, eigenstrain, interior strain and
//! stress, and synthetic phantom generation.

use crate::error::{Error, Result};
use crate::eshelby::{eshelby_tensor, sphere_coefficients, EshelbyTensor, InclusionGeometry};
use crate::image::{BitGrid, ScalarField, StrainField};
use crate::voigt::{
    self, compliance_matrix, mismatch_a, mismatch_a_entries, MaterialParams, Matrix6, Vec6, AX,
    ELEV, LAT,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Condition number above which an eigenstrain system is rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Remote (far-field) stress in Voigt order. The paper's experiments load
/// only the axial (22) component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemoteLoad {
    pub sigma0: Vec6,
}

impl RemoteLoad {
    /// Purely axial load of the given magnitude (Pa).
    pub fn uniaxial(sigma_axial: f64) -> Self {
        let mut sigma0 = Vec6::zeros();
        sigma0[AX] = sigma_axial;
        Self { sigma0 }
    }
}

/// Remote strain `eps0 = C0^-1 : sigma0` of the homogeneous background.
///
/// For a uniaxial load this reduces to `eps_ax = sigma_a / E_b` and
/// `eps_lat = eps_elev = -nu_b sigma_a / E_b`.
pub fn remote_strain(load: &RemoteLoad, bg: &MaterialParams) -> Result<Vec6> {
    Ok(compliance_matrix(bg)? * load.sigma0)
}

/// Solves `(S + A) eps* = -eps0` for the eigenstrain.
///
/// Exploits the shared block structure (full normal block, diagonal shear
/// block); the condition number is taken over all six singular values.
pub fn eigenstrain_forward(s: &EshelbyTensor, a: &Matrix6, eps0: &Vec6) -> Result<Vec6> {
    let mut normal = s.normal_block();
    for i in 0..3 {
        for j in 0..3 {
            normal[(i, j)] += a[(i, j)];
        }
    }
    let shear = [
        s.s[(3, 3)] + a[(3, 3)],
        s.s[(4, 4)] + a[(4, 4)],
        s.s[(5, 5)] + a[(5, 5)],
    ];
    let sv = normal.singular_values();
    let mut max = sv.max();
    let mut min = sv.min();
    for &d in &shear {
        max = max.max(d.abs());
        min = min.min(d.abs());
    }
    if min <= 0.0 || max / min > CONDITION_LIMIT {
        return Err(Error::SingularSystem(if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }));
    }
    let rhs = voigt::Vec3::new(-eps0[LAT], -eps0[AX], -eps0[ELEV]);
    let sol = normal
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem(f64::INFINITY))?;
    let mut eig = Vec6::zeros();
    eig[LAT] = sol[0];
    eig[AX] = sol[1];
    eig[ELEV] = sol[2];
    for k in 3..6 {
        if eps0[k] != 0.0 {
            eig[k] = -eps0[k] / shear[k - 3];
        }
    }
    Ok(eig)
}

/// Closed-form spherical eigenstrain for an axisymmetric remote strain
/// (`eps0_lat = eps0_elev`), written in terms of the mismatch entries
/// (a1, a2) and the sphere coefficients (m1, m2).
pub fn eigenstrain_forward_sphere(
    incl: &MaterialParams,
    bg: &MaterialParams,
    eps0: &Vec6,
) -> Result<Vec6> {
    let (a1, a2, _) = mismatch_a_entries(incl, bg)?;
    let (m1, m2, _) = sphere_coefficients(bg.poissons_ratio);
    let alpha = a1 + m1;
    let beta = a2 + m2;
    let l = (alpha - beta) * (alpha + 2.0 * beta);
    if l.abs() < 1e-300 {
        return Err(Error::SingularSystem(f64::INFINITY));
    }
    let e_lat = (-eps0[LAT] * alpha + eps0[AX] * beta) / l;
    let e_ax = (2.0 * eps0[LAT] * beta - eps0[AX] * (alpha + beta)) / l;
    Ok(voigt::normal_vec(e_lat, e_ax, e_lat))
}

/// Interior strain `eps = eps0 + S : eps*`; uniform inside the inclusion.
pub fn interior_strain(eps0: &Vec6, s: &EshelbyTensor, eig: &Vec6) -> Vec6 {
    eps0 + s.s * eig
}

/// Interior stress `sigma = sigma0 + C0 (S - I) : eps*`.
pub fn interior_stress(sigma0: &Vec6, c0: &Matrix6, s: &EshelbyTensor, eig: &Vec6) -> Vec6 {
    sigma0 + c0 * ((s.s - Matrix6::identity()) * eig)
}

/// Definition of a synthetic phantom: a single Eshelby inclusion in a
/// uniform background under a remote load, rasterized on a pixel grid.
#[derive(Debug, Clone)]
pub struct PhantomSpec {
    pub rows: usize,
    pub cols: usize,
    /// Pixel width in cm.
    pub dx: f64,
    /// Pixel height in cm.
    pub dy: f64,
    pub geometry: InclusionGeometry,
    /// Inclusion center in (row, col) pixel coordinates; fractional allowed.
    pub center: (f64, f64),
    pub incl: MaterialParams,
    pub bg: MaterialParams,
    pub load: RemoteLoad,
    /// Standard deviation of additive Gaussian strain noise; 0 disables it.
    pub noise_std: f64,
}

/// Output of [`synth_phantom`].
#[derive(Debug, Clone)]
pub struct Phantom {
    pub axial: StrainField,
    pub lateral: StrainField,
    pub mask: BitGrid,
    pub truth_ym: ScalarField,
    pub truth_pr: ScalarField,
    /// Remote strain of the background (noise-free).
    pub remote: Vec6,
    /// Uniform interior strain of the inclusion (noise-free).
    pub interior: Vec6,
}

/// Generates axial/lateral strain grids for the phantom.
///
/// Pixels outside the inclusion footprint carry the remote strain; pixels
/// inside carry the uniform interior strain. Gaussian noise of standard
/// deviation `noise_std` is added per pixel, deterministically from `seed`.
/// The exterior Eshelby disturbance field is intentionally ignored; the
/// reconstruction only reads a far-corner background window.
pub fn synth_phantom(spec: &PhantomSpec, seed: u64) -> Result<Phantom> {
    spec.geometry.validate()?;
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return Err(Error::InvalidConfig("noise_std must be >= 0".into()));
    }
    let (semi_x, semi_y) = spec.geometry.in_plane_semi_axes();
    let (cy, cx) = (
        (spec.center.0 + 0.5) * spec.dy,
        (spec.center.1 + 0.5) * spec.dx,
    );
    let (height, width) = (spec.rows as f64 * spec.dy, spec.cols as f64 * spec.dx);
    if cx - semi_x < 0.0 || cx + semi_x > width || cy - semi_y < 0.0 || cy + semi_y > height {
        return Err(Error::FootprintOverflow);
    }

    let eps0 = remote_strain(&spec.load, &spec.bg)?;
    let s = eshelby_tensor(&spec.geometry, spec.bg.poissons_ratio)?;
    // at exactly zero contrast the mismatch tensor is undefined and the
    // disturbance vanishes
    let eig = match mismatch_a(&spec.incl, &spec.bg) {
        Ok(a) => eigenstrain_forward(&s, &a, &eps0)?,
        Err(Error::ContrastSingular) => Vec6::zeros(),
        Err(e) => return Err(e),
    };
    let eps_in = interior_strain(&eps0, &s, &eig);

    let mut axial = ScalarField::filled(spec.rows, spec.cols, spec.dx, spec.dy, eps0[AX]);
    let mut lateral = ScalarField::filled(spec.rows, spec.cols, spec.dx, spec.dy, eps0[LAT]);
    let mut mask = BitGrid::new(spec.rows, spec.cols);
    let mut truth_ym =
        ScalarField::filled(spec.rows, spec.cols, spec.dx, spec.dy, spec.bg.youngs_modulus);
    let mut truth_pr =
        ScalarField::filled(spec.rows, spec.cols, spec.dx, spec.dy, spec.bg.poissons_ratio);

    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let x = ((c as f64 + 0.5) * spec.dx - cx) / semi_x;
            let y = ((r as f64 + 0.5) * spec.dy - cy) / semi_y;
            if x * x + y * y <= 1.0 {
                mask.set(r, c, true);
                axial.set(r, c, eps_in[AX]);
                lateral.set(r, c, eps_in[LAT]);
                truth_ym.set(r, c, spec.incl.youngs_modulus);
                truth_pr.set(r, c, spec.incl.poissons_ratio);
            }
        }
    }

    if spec.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, spec.noise_std)
            .map_err(|e| Error::InvalidConfig(format!("noise model: {e}")))?;
        for v in axial.values.iter_mut() {
            *v += normal.sample(&mut rng);
        }
        for v in lateral.values.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    Ok(Phantom {
        axial,
        lateral,
        mask,
        truth_ym,
        truth_pr,
        remote: eps0,
        interior: eps_in,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voigt::lame_from_engineering;

    fn mp(e: f64, nu: f64) -> MaterialParams {
        MaterialParams::new(e, nu).unwrap()
    }

    #[test]
    fn remote_strain_uniaxial() {
        let bg = mp(32_780.0, 0.49);
        let eps0 = remote_strain(&RemoteLoad::uniaxial(1000.0), &bg).unwrap();
        assert!((eps0[AX] - 0.030_506_406_345_332_52).abs() < 1e-15);
        assert!((eps0[LAT] + 0.014_948_139_109_212_935).abs() < 1e-15);
        assert_eq!(eps0[LAT], eps0[ELEV]);
        assert_eq!(eps0[3], 0.0);

        let zero = remote_strain(&RemoteLoad::uniaxial(0.0), &bg).unwrap();
        assert_eq!(zero, Vec6::zeros());

        let bg0 = mp(10_000.0, 0.0);
        let eps0 = remote_strain(&RemoteLoad::uniaxial(500.0), &bg0).unwrap();
        assert_eq!(eps0[LAT], 0.0);
        assert_eq!(eps0[ELEV], 0.0);
    }

    #[test]
    fn eigenstrain_zero_remote_strain() {
        let incl = mp(97_020.0, 0.4);
        let bg = mp(32_780.0, 0.49);
        let s = eshelby_tensor(&InclusionGeometry::Sphere { radius: 0.3 }, 0.49).unwrap();
        let a = mismatch_a(&incl, &bg).unwrap();
        let eig = eigenstrain_forward(&s, &a, &Vec6::zeros()).unwrap();
        assert_eq!(eig, Vec6::zeros());
    }

    #[test]
    fn eigenstrain_vanishes_at_near_unit_contrast() {
        let bg = mp(32_780.0, 0.35);
        let incl = mp(32_780.0 * 1.001, 0.35);
        let s = eshelby_tensor(&InclusionGeometry::Sphere { radius: 0.3 }, 0.35).unwrap();
        let a = mismatch_a(&incl, &bg).unwrap();
        let eps0 = remote_strain(&RemoteLoad::uniaxial(1000.0), &bg).unwrap();
        let eig = eigenstrain_forward(&s, &a, &eps0).unwrap();
        assert!(eig.amax() < 1e-2 * eps0.amax());
    }

    #[test]
    fn sphere_closed_form_matches_generic_solve() {
        let incl = mp(97_020.0, 0.40);
        let bg = mp(32_780.0, 0.49);
        let s = eshelby_tensor(&InclusionGeometry::Sphere { radius: 0.3 }, bg.poissons_ratio)
            .unwrap();
        let a = mismatch_a(&incl, &bg).unwrap();
        let eps0 = remote_strain(&RemoteLoad::uniaxial(1000.0), &bg).unwrap();
        let generic = eigenstrain_forward(&s, &a, &eps0).unwrap();
        let closed = eigenstrain_forward_sphere(&incl, &bg, &eps0).unwrap();
        for k in 0..6 {
            assert!((generic[k] - closed[k]).abs() <= 1e-12 * generic.amax());
        }
    }

    #[test]
    fn interior_strain_trivial_cases() {
        let s = eshelby_tensor(&InclusionGeometry::Sphere { radius: 0.3 }, 0.3).unwrap();
        let eps0 = voigt::normal_vec(-0.01, 0.03, -0.01);
        assert_eq!(interior_strain(&eps0, &s, &Vec6::zeros()), eps0);
    }

    #[test]
    fn interior_stress_without_eigenstrain_is_remote() {
        let bg = mp(32_780.0, 0.49);
        let c0 = voigt::stiffness_matrix(&lame_from_engineering(&bg).unwrap());
        let s = eshelby_tensor(&InclusionGeometry::Sphere { radius: 0.3 }, 0.49).unwrap();
        let sigma0 = RemoteLoad::uniaxial(1000.0).sigma0;
        assert_eq!(interior_stress(&sigma0, &c0, &s, &Vec6::zeros()), sigma0);
    }

    #[test]
    fn phantom_is_piecewise_uniform_and_deterministic() {
        let spec = PhantomSpec {
            rows: 64,
            cols: 64,
            dx: 0.0625,
            dy: 0.0625,
            geometry: InclusionGeometry::Sphere { radius: 0.5 },
            center: (31.5, 31.5),
            incl: mp(3.0 * 32_780.0, 0.45),
            bg: mp(32_780.0, 0.2),
            load: RemoteLoad::uniaxial(1000.0),
            noise_std: 0.0,
        };
        let p = synth_phantom(&spec, 11).unwrap();
        assert!(p.mask.count() > 100);
        for r in 0..64 {
            for c in 0..64 {
                let expected = if p.mask.get(r, c) {
                    p.interior[AX]
                } else {
                    p.remote[AX]
                };
                assert_eq!(p.axial.get(r, c), expected);
            }
        }
        // determinism with noise
        let spec_noisy = PhantomSpec {
            noise_std: 1e-4,
            ..spec.clone()
        };
        let p1 = synth_phantom(&spec_noisy, 42).unwrap();
        let p2 = synth_phantom(&spec_noisy, 42).unwrap();
        assert_eq!(p1.axial.values, p2.axial.values);
        assert_eq!(p1.lateral.values, p2.lateral.values);
        let p3 = synth_phantom(&spec_noisy, 43).unwrap();
        assert_ne!(p1.axial.values, p3.axial.values);
    }

    #[test]
    fn phantom_noise_statistics() {
        let spec = PhantomSpec {
            rows: 100,
            cols: 100,
            dx: 0.04,
            dy: 0.04,
            geometry: InclusionGeometry::Sphere { radius: 0.3 },
            center: (49.5, 49.5),
            incl: mp(97_020.0, 0.45),
            bg: mp(32_780.0, 0.2),
            load: RemoteLoad::uniaxial(1000.0),
            noise_std: 1e-4,
        };
        let p = synth_phantom(&spec, 7).unwrap();
        let clean = synth_phantom(&PhantomSpec { noise_std: 0.0, ..spec }, 7).unwrap();
        let n = p.axial.values.len() as f64;
        let var: f64 = p
            .axial
            .values
            .iter()
            .zip(&clean.axial.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        assert!((std - 1e-4).abs() / 1e-4 < 0.05, "sample std {std}");
    }

    #[test]
    fn phantom_footprint_overflow() {
        let spec = PhantomSpec {
            rows: 32,
            cols: 32,
            dx: 0.03125,
            dy: 0.03125,
            geometry: InclusionGeometry::Sphere { radius: 0.9 },
            center: (15.5, 15.5),
            incl: mp(97_020.0, 0.45),
            bg: mp(32_780.0, 0.2),
            load: RemoteLoad::uniaxial(1000.0),
            noise_std: 0.0,
        };
        assert!(matches!(
            synth_phantom(&spec, 0),
            Err(Error::FootprintOverflow)
        ));
    }
}
