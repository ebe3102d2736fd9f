//! Isotropic elasticity algebra in 6x6 Voigt notation.
//!
//! Component order is fixed across the whole crate as
//! `(11, 22, 33, 23, 31, 12)` with `11` = lateral (x), `22` = axial
//! (y, the compression axis) and `33` = elevational (z). Shear strains are
//! engineering shears, so the shear diagonal of an isotropic stiffness
//! matrix is `mu`.

use crate::error::{Error, Result};

/// Index of the lateral (11, x) component in a [`Vec6`].
pub const LAT: usize = 0;
/// Index of the axial (22, y) component in a [`Vec6`].
pub const AX: usize = 1;
/// Index of the elevational (33, z) component in a [`Vec6`].
pub const ELEV: usize = 2;

/// 6x6 matrix in Voigt order (11, 22, 33, 23, 31, 12).
pub type Matrix6 = nalgebra::SMatrix<f64, 6, 6>;
/// 3x3 matrix over the normal components (11, 22, 33).
pub type Matrix3 = nalgebra::SMatrix<f64, 3, 3>;
/// Strain or stress vector in Voigt order (11, 22, 33, 23, 31, 12).
pub type Vec6 = nalgebra::SVector<f64, 6>;
/// Normal-component vector (11, 22, 33).
pub type Vec3 = nalgebra::SVector<f64, 3>;

/// Poisson's ratio at or above this value is treated as the lambda singularity.
pub const POISSON_SINGULAR: f64 = 0.5 - 1e-9;

/// Engineering elastic constants of one isotropic phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Young's modulus in Pa. Strictly positive.
    pub youngs_modulus: f64,
    /// Poisson's ratio, in (-1, 0.5).
    pub poissons_ratio: f64,
}

impl MaterialParams {
    /// Validating constructor.
    pub fn new(youngs_modulus: f64, poissons_ratio: f64) -> Result<Self> {
        if !(youngs_modulus.is_finite() && youngs_modulus > 0.0) {
            return Err(Error::InvalidMaterial(format!(
                "Young's modulus must be positive, got {youngs_modulus}"
            )));
        }
        if !(poissons_ratio.is_finite() && poissons_ratio > -1.0) {
            return Err(Error::InvalidMaterial(format!(
                "Poisson's ratio must exceed -1, got {poissons_ratio}"
            )));
        }
        if poissons_ratio >= POISSON_SINGULAR {
            return Err(Error::PoissonSingular(poissons_ratio));
        }
        Ok(Self {
            youngs_modulus,
            poissons_ratio,
        })
    }

    /// Shear modulus `mu = E / (2 (1 + nu))`.
    pub fn shear_modulus(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poissons_ratio))
    }

    /// Bulk modulus `K = E / (3 (1 - 2 nu))`.
    pub fn bulk_modulus(&self) -> f64 {
        self.youngs_modulus / (3.0 * (1.0 - 2.0 * self.poissons_ratio))
    }
}

/// Lame constants of one isotropic phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LameParams {
    /// First Lame parameter in Pa.
    pub lambda: f64,
    /// Shear modulus in Pa. Strictly positive.
    pub mu: f64,
}

/// The three scalars that assemble the closed-form mismatch tensor A.
///
/// `psi` and `omega` fill the normal block, `phi` the shear diagonal.
/// Undefined when the two phases have equal shear or bulk modulus.
#[derive(Debug, Clone, Copy)]
pub struct MismatchScalars {
    pub psi: f64,
    pub omega: f64,
    pub phi: f64,
}

/// Converts engineering constants to Lame constants.
///
/// `lambda = E nu / ((1 + nu)(1 - 2 nu))`, `mu = E / (2 (1 + nu))`.
pub fn lame_from_engineering(p: &MaterialParams) -> Result<LameParams> {
    let nu = p.poissons_ratio;
    if nu >= POISSON_SINGULAR {
        return Err(Error::PoissonSingular(nu));
    }
    let e = p.youngs_modulus;
    Ok(LameParams {
        lambda: e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        mu: e / (2.0 * (1.0 + nu)),
    })
}

/// Builds the isotropic stiffness matrix C from Lame constants.
///
/// Normal block: `lambda + 2 mu` on the diagonal, `lambda` off it.
/// Shear diagonal: `mu`.
pub fn stiffness_matrix(l: &LameParams) -> Matrix6 {
    let mut c = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = if i == j { l.lambda + 2.0 * l.mu } else { l.lambda };
        }
    }
    for k in 3..6 {
        c[(k, k)] = l.mu;
    }
    c
}

/// Builds the isotropic compliance matrix C^-1 directly from (E, nu).
pub fn compliance_matrix(p: &MaterialParams) -> Result<Matrix6> {
    if p.poissons_ratio >= POISSON_SINGULAR {
        return Err(Error::PoissonSingular(p.poissons_ratio));
    }
    let e = p.youngs_modulus;
    let nu = p.poissons_ratio;
    let mut s = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            s[(i, j)] = if i == j { 1.0 / e } else { -nu / e };
        }
    }
    let mu = p.shear_modulus();
    for k in 3..6 {
        s[(k, k)] = 1.0 / mu;
    }
    Ok(s)
}

/// Closed-form scalars of `X = (C - C0)^-1` and of the shear diagonal of A.
///
/// The shared denominator factors as
/// `(mu_b - mu_i) * (2 (mu_b - mu_i) + 3 (lambda_b - lambda_i))`,
/// so it vanishes exactly when the shear moduli or the bulk moduli of the
/// two phases coincide.
pub fn mismatch_scalars(incl: &MaterialParams, bg: &MaterialParams) -> Result<MismatchScalars> {
    let li = lame_from_engineering(incl)?;
    let lb = lame_from_engineering(bg)?;
    let dmu = lb.mu - li.mu;
    let dlam = lb.lambda - li.lambda;
    let den = dmu * (2.0 * dmu + 3.0 * dlam);
    let threshold = 1e-12 * lb.mu * lb.mu;
    if dmu.abs() < threshold || den.abs() < threshold {
        return Err(Error::ContrastSingular);
    }
    Ok(MismatchScalars {
        psi: -(dlam + dmu) / den,
        omega: dlam / (2.0 * den),
        phi: -1.0 / dmu,
    })
}

/// Builds the mismatch tensor `A = (C - C0)^-1 C0` from its closed form.
///
/// Normal block: `a1 = Psi (lambda_b + 2 mu_b) + 2 lambda_b Omega` on the
/// diagonal, `a2 = Omega (lambda_b + 2 mu_b) + lambda_b Omega + lambda_b Psi`
/// off it. Shear diagonal: `mu_b Phi`.
pub fn mismatch_a(incl: &MaterialParams, bg: &MaterialParams) -> Result<Matrix6> {
    let (a1, a2, a3) = mismatch_a_entries(incl, bg)?;
    let mut a = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            a[(i, j)] = if i == j { a1 } else { a2 };
        }
    }
    for k in 3..6 {
        a[(k, k)] = a3;
    }
    Ok(a)
}

/// The three distinct entries (normal diagonal, normal off-diagonal, shear
/// diagonal) of the mismatch tensor A.
pub fn mismatch_a_entries(incl: &MaterialParams, bg: &MaterialParams) -> Result<(f64, f64, f64)> {
    let sc = mismatch_scalars(incl, bg)?;
    let lb = lame_from_engineering(bg)?;
    let lp2m = lb.lambda + 2.0 * lb.mu;
    let a1 = sc.psi * lp2m + 2.0 * lb.lambda * sc.omega;
    let a2 = sc.omega * lp2m + lb.lambda * sc.omega + lb.lambda * sc.psi;
    let a3 = lb.mu * sc.phi;
    Ok((a1, a2, a3))
}

/// `sigma = C : epsilon` in Voigt convention.
pub fn apply_stiffness(c: &Matrix6, strain: &Vec6) -> Vec6 {
    c * strain
}

/// Builds a normal-components-only Voigt vector (shears zero).
pub fn normal_vec(lateral: f64, axial: f64, elevational: f64) -> Vec6 {
    Vec6::new(lateral, axial, elevational, 0.0, 0.0, 0.0)
}

/// Sign relationship detected between the applied stress and the axial strain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// Stress and axial strain carry the same sign (tension-positive data,
    /// or magnitudes on both sides).
    Consistent,
    /// Stress and axial strain carry opposite signs; inputs were normalized.
    Opposed,
}

/// Result of a uniaxial Hooke inversion.
#[derive(Debug, Clone, Copy)]
pub struct UniaxialFit {
    pub params: MaterialParams,
    pub convention: SignConvention,
    /// Set when the raw Poisson estimate fell outside (-1, 0.5) and was
    /// clamped into [-0.95, 0.495].
    pub pr_clamped: bool,
}

/// Lower clamp applied to out-of-range Poisson estimates.
pub const PR_CLAMP_LOW: f64 = -0.95;
/// Upper clamp applied to Poisson estimates; the optimizer ceiling.
pub const PR_CLAMP_HIGH: f64 = 0.495;

/// Inverts the uniaxial Hooke relations for a homogeneous region.
///
/// `E = sigma / eps_axial` and `nu = -eps_lateral / eps_axial`, computed on
/// magnitude-consistent signs: E is always returned positive and nu comes
/// out positive for ordinary materials whichever sign convention the strain
/// data uses. Estimates of nu outside (-1, 0.5) are clamped and flagged
/// rather than rejected.
pub fn invert_uniaxial(sigma_applied: f64, eps_axial: f64, eps_lateral: f64) -> Result<UniaxialFit> {
    if eps_axial.abs() <= 1e-9 {
        return Err(Error::DegenerateStrain);
    }
    let convention = if sigma_applied * eps_axial >= 0.0 {
        SignConvention::Consistent
    } else {
        SignConvention::Opposed
    };
    let e = (sigma_applied / eps_axial).abs();
    let nu_raw = -eps_lateral / eps_axial;
    let out_of_range = !(nu_raw > -1.0 && nu_raw < 0.5);
    let nu = nu_raw.clamp(PR_CLAMP_LOW, PR_CLAMP_HIGH);
    Ok(UniaxialFit {
        params: MaterialParams {
            youngs_modulus: e,
            poissons_ratio: nu,
        },
        convention,
        pr_clamped: out_of_range,
    })
}

/// Condition number of a 6x6 matrix from its singular values.
pub fn condition_number(m: &Matrix6) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(e: f64, nu: f64) -> MaterialParams {
        MaterialParams::new(e, nu).unwrap()
    }

    #[test]
    fn lame_hand_values() {
        // E = 32780, nu = 0.2: lambda = 6556/0.72, mu = 32780/2.4
        let l = lame_from_engineering(&mp(32_780.0, 0.2)).unwrap();
        assert!((l.lambda - 9_105.555_555_555_556).abs() < 1e-6);
        assert!((l.mu - 13_658.333_333_333_334).abs() < 1e-6);

        // nu = 0 zeroes lambda
        let l0 = lame_from_engineering(&mp(1.0, 0.0)).unwrap();
        assert_eq!(l0.lambda, 0.0);
        assert_eq!(l0.mu, 0.5);

        // E = 97020, nu = 0.45: lambda = 97020*0.45/(1.45*0.1)
        let l45 = lame_from_engineering(&mp(97_020.0, 0.45)).unwrap();
        assert!((l45.lambda - 301_096.551_724_137_9).abs() < 1e-6);
        assert!((l45.mu - 33_455.172_413_793_1).abs() < 1e-6);
    }

    #[test]
    fn lame_rejects_near_incompressible() {
        assert!(matches!(
            MaterialParams::new(1000.0, 0.5),
            Err(Error::PoissonSingular(_))
        ));
        let p = MaterialParams {
            youngs_modulus: 1000.0,
            poissons_ratio: 0.5,
        };
        assert!(matches!(
            lame_from_engineering(&p),
            Err(Error::PoissonSingular(_))
        ));
    }

    #[test]
    fn stiffness_structure() {
        let c = stiffness_matrix(&LameParams { lambda: 0.0, mu: 0.5 });
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(c[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
        for k in 3..6 {
            assert_eq!(c[(k, k)], 0.5);
        }

        let c = stiffness_matrix(&lame_from_engineering(&mp(32_780.0, 0.2)).unwrap());
        assert!((c[(0, 0)] - 36_422.222_222_222_22).abs() < 1e-6);
        assert!((c[(0, 1)] - 9_105.555_555_555_556).abs() < 1e-6);
        assert!((c[(3, 3)] - 13_658.333_333_333_334).abs() < 1e-6);
        // symmetric by construction
        assert_eq!(c, c.transpose());
    }

    #[test]
    fn stiffness_positive_definite_in_physical_range() {
        for &nu in &[0.05, 0.2, 0.35, 0.45, 0.49] {
            let c = stiffness_matrix(&lame_from_engineering(&mp(1.0, nu)).unwrap());
            // leading principal minors of the full 6x6
            for k in 1..=6 {
                let minor = c.view((0, 0), (k, k)).determinant();
                assert!(minor > 0.0, "minor {k} not positive at nu={nu}");
            }
        }
    }

    #[test]
    fn mismatch_a_shear_entry_is_closed_form() {
        let incl = mp(97_020.0, 0.40);
        let bg = mp(32_780.0, 0.49);
        let a = mismatch_a(&incl, &bg).unwrap();
        let mu_b = bg.shear_modulus();
        let mu_i = incl.shear_modulus();
        let expected = -mu_b / (mu_b - mu_i);
        assert!((a[(3, 3)] - expected).abs() < 1e-12 * expected.abs());
        assert_eq!(a[(3, 3)], a[(4, 4)]);
        assert_eq!(a[(3, 3)], a[(5, 5)]);
    }

    #[test]
    fn mismatch_a_zero_contrast_is_singular() {
        let p = mp(32_780.0, 0.49);
        assert!(matches!(mismatch_a(&p, &p), Err(Error::ContrastSingular)));
    }

    #[test]
    fn mismatch_a_equal_bulk_modulus_is_singular() {
        // different E and nu but identical bulk modulus K = E/(3(1-2nu))
        let bg = mp(30_000.0, 0.2);
        let k = bg.bulk_modulus();
        let nu_i = 0.35;
        let e_i = k * 3.0 * (1.0 - 2.0 * nu_i);
        let incl = mp(e_i, nu_i);
        assert!(matches!(
            mismatch_a(&incl, &bg),
            Err(Error::ContrastSingular)
        ));
    }

    #[test]
    fn apply_stiffness_identity_and_zero() {
        let eps = normal_vec(-0.014948, 0.030506, -0.014948);
        assert_eq!(apply_stiffness(&Matrix6::identity(), &eps), eps);
        let c = stiffness_matrix(&lame_from_engineering(&mp(32_780.0, 0.49)).unwrap());
        assert_eq!(apply_stiffness(&c, &Vec6::zeros()), Vec6::zeros());
    }

    #[test]
    fn apply_stiffness_uniaxial_consistency() {
        // remote strain of a 1 kPa axial load in the sample-A background
        let bg = mp(32_780.0, 0.49);
        let eps_ax = 1000.0 / bg.youngs_modulus;
        let eps_lat = -bg.poissons_ratio * eps_ax;
        let c0 = stiffness_matrix(&lame_from_engineering(&bg).unwrap());
        let sigma = apply_stiffness(&c0, &normal_vec(eps_lat, eps_ax, eps_lat));
        assert!(sigma[LAT].abs() < 1e-9);
        assert!((sigma[AX] - 1000.0).abs() < 1e-9);
        assert!(sigma[ELEV].abs() < 1e-9);
    }

    #[test]
    fn invert_uniaxial_examples() {
        let fit = invert_uniaxial(1000.0, 1000.0 / 32_780.0, -0.49 * 1000.0 / 32_780.0).unwrap();
        assert!((fit.params.youngs_modulus - 32_780.0).abs() < 1e-8);
        assert!((fit.params.poissons_ratio - 0.49).abs() < 1e-12);
        assert!(!fit.pr_clamped);
        assert_eq!(fit.convention, SignConvention::Consistent);

        let fit = invert_uniaxial(500.0, 0.01, 0.0).unwrap();
        assert_eq!(fit.params.poissons_ratio, 0.0);

        // nu exactly 0.5 gets clamped and flagged
        let fit = invert_uniaxial(1000.0, 0.0305, -0.01525).unwrap();
        assert!(fit.pr_clamped);
        assert_eq!(fit.params.poissons_ratio, PR_CLAMP_HIGH);
    }

    #[test]
    fn invert_uniaxial_detects_flipped_convention() {
        // compression-negative strain with magnitude-positive stress
        let fit = invert_uniaxial(1000.0, -0.02, 0.008).unwrap();
        assert_eq!(fit.convention, SignConvention::Opposed);
        assert!((fit.params.youngs_modulus - 50_000.0).abs() < 1e-9);
        assert!((fit.params.poissons_ratio - 0.4).abs() < 1e-12);
    }

    #[test]
    fn invert_uniaxial_degenerate_strain() {
        assert!(matches!(
            invert_uniaxial(1000.0, 5e-10, 0.0),
            Err(Error::DegenerateStrain)
        ));
    }
}
