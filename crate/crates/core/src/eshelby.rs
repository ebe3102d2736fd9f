//! Eshelby tensor construction for every supported inclusion geometry.
//!
//! The interior Eshelby tensor S maps eigenstrain to constrained strain. It
//! depends only on the inclusion geometry (through semi-axis ratios) and the
//! Poisson's ratio of the background. The general ellipsoid goes through
//! incomplete elliptic integrals and the I-term identities; spheres,
//! cylinders, pennies, thin disks and the plane-strain cylinder use their
//! closed forms.

use crate::error::{Error, Result};
use crate::quad;
use crate::voigt::{Matrix3, Matrix6};
use std::f64::consts::{FRAC_PI_2, PI};

/// Relative axis separation below which the general ellipsoid formulas lose
/// precision (`I_12 = (I_2 - I_1)/(a^2 - b^2)` cancels catastrophically).
pub const DEGENERATE_AXIS_TOL: f64 = 1e-4;

/// Perturbation factor applied to exactly-equal spheroid axes so they can
/// take the general ellipsoid path.
const SPHEROID_PERTURBATION: f64 = 1.001;

/// Absolute tolerance for the elliptic integral quadrature.
const ELLIPTIC_ABS_TOL: f64 = 1e-10;

/// Tagged inclusion shape with semi-axes in cm.
///
/// Axis meaning follows the imaging frame: x = lateral, y = axial
/// (compression), z = elevational. Only axis ratios enter S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InclusionGeometry {
    /// Sphere of the given radius.
    Sphere { radius: f64 },
    /// General ellipsoid with semi-axes a, b, c along x, y, z. Any ordering
    /// is accepted; the builder sorts internally and maps the result back.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Cylinder with elliptic face of semi-axes `a` and `c`; the face plane
    /// carries the first two Voigt indices and the infinite axis the third.
    Cylinder { a: f64, c: f64 },
    /// Flat ellipsoid, a > b >> c.
    FlatEllipsoid { a: f64, b: f64, c: f64 },
    /// Penny: radius a = c much larger than the half-thickness b.
    Penny { radius: f64, half_thickness: f64 },
    /// Thin disk (plane-stress limit): in-plane radius a = b much larger
    /// than the half-thickness c along z.
    ThinDisk { radius: f64, half_thickness: f64 },
    /// Infinite cylinder along z with face semi-axes a (x) and b (y);
    /// the plane-strain limit.
    PlaneStrainCylinder { a: f64, b: f64 },
}

impl InclusionGeometry {
    /// Checks positivity and the kind-specific aspect constraints.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidGeometry(format!(
                    "semi-axis {name} must be positive, got {v}"
                )))
            }
        };
        match *self {
            Self::Sphere { radius } => positive(radius, "radius"),
            Self::Ellipsoid { a, b, c } => {
                positive(a, "a")?;
                positive(b, "b")?;
                positive(c, "c")
            }
            Self::Cylinder { a, c } => {
                positive(a, "a")?;
                positive(c, "c")
            }
            Self::FlatEllipsoid { a, b, c } => {
                positive(a, "a")?;
                positive(b, "b")?;
                positive(c, "c")?;
                if (a - b) / a < DEGENERATE_AXIS_TOL {
                    return Err(Error::InvalidGeometry(
                        "flat ellipsoid requires a > b; use ThinDisk for a = b".into(),
                    ));
                }
                if c / b >= 0.1 {
                    return Err(Error::InvalidGeometry(format!(
                        "flat ellipsoid requires c << b, got c/b = {}",
                        c / b
                    )));
                }
                Ok(())
            }
            Self::Penny {
                radius,
                half_thickness,
            } => {
                positive(radius, "radius")?;
                positive(half_thickness, "half_thickness")?;
                if half_thickness / radius >= 0.1 {
                    return Err(Error::InvalidGeometry(format!(
                        "penny requires b/a < 0.1, got {}",
                        half_thickness / radius
                    )));
                }
                Ok(())
            }
            Self::ThinDisk {
                radius,
                half_thickness,
            } => {
                positive(radius, "radius")?;
                positive(half_thickness, "half_thickness")?;
                if half_thickness / radius >= 0.1 {
                    return Err(Error::InvalidGeometry(format!(
                        "thin disk requires c/a < 0.1, got {}",
                        half_thickness / radius
                    )));
                }
                Ok(())
            }
            Self::PlaneStrainCylinder { a, b } => {
                positive(a, "a")?;
                positive(b, "b")
            }
        }
    }

    /// Semi-axes of the inclusion cross-section in the imaging (x, y) plane,
    /// used for phantom rasterization.
    pub fn in_plane_semi_axes(&self) -> (f64, f64) {
        match *self {
            Self::Sphere { radius } => (radius, radius),
            Self::Ellipsoid { a, b, .. } => (a, b),
            Self::Cylinder { a, c } => (a, c),
            Self::FlatEllipsoid { a, b, .. } => (a, b),
            Self::Penny {
                radius,
                half_thickness,
            } => (radius, half_thickness),
            Self::ThinDisk { radius, .. } => (radius, radius),
            Self::PlaneStrainCylinder { a, b } => (a, b),
        }
    }

    /// Returns a copy with every semi-axis multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            Self::Sphere { radius } => Self::Sphere {
                radius: radius * factor,
            },
            Self::Ellipsoid { a, b, c } => Self::Ellipsoid {
                a: a * factor,
                b: b * factor,
                c: c * factor,
            },
            Self::Cylinder { a, c } => Self::Cylinder {
                a: a * factor,
                c: c * factor,
            },
            Self::FlatEllipsoid { a, b, c } => Self::FlatEllipsoid {
                a: a * factor,
                b: b * factor,
                c: c * factor,
            },
            Self::Penny {
                radius,
                half_thickness,
            } => Self::Penny {
                radius: radius * factor,
                half_thickness: half_thickness * factor,
            },
            Self::ThinDisk {
                radius,
                half_thickness,
            } => Self::ThinDisk {
                radius: radius * factor,
                half_thickness: half_thickness * factor,
            },
            Self::PlaneStrainCylinder { a, b } => Self::PlaneStrainCylinder {
                a: a * factor,
                b: b * factor,
            },
        }
    }

    /// Short lowercase name for reports and CLI parsing.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Sphere { .. } => "sphere",
            Self::Ellipsoid { .. } => "ellipsoid",
            Self::Cylinder { .. } => "cylinder",
            Self::FlatEllipsoid { .. } => "flat",
            Self::Penny { .. } => "penny",
            Self::ThinDisk { .. } => "thin-disk",
            Self::PlaneStrainCylinder { .. } => "plane-strain-cylinder",
        }
    }
}

/// The I-integrals of an ellipsoid with sorted semi-axes a > b > c.
///
/// `i1 + i2 + i3 = 4 pi`, `3 i11 + i12 + i31 = 4 pi / a^2` and
/// `3 a^2 i11 + b^2 i12 + c^2 i31 = 3 i1` hold to 1e-8 by construction.
#[derive(Debug, Clone, Copy)]
pub struct ITerms {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i11: f64,
    pub i22: f64,
    pub i33: f64,
    pub i12: f64,
    pub i23: f64,
    pub i31: f64,
}

impl ITerms {
    /// Cross term I_ij for axis indices i != j (0-based).
    pub fn cross(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => self.i12,
            (1, 2) => self.i23,
            (0, 2) => self.i31,
            _ => panic!("cross requires distinct axis indices"),
        }
    }

    fn first(&self, i: usize) -> f64 {
        [self.i1, self.i2, self.i3][i]
    }

    fn diag(&self, i: usize) -> f64 {
        [self.i11, self.i22, self.i33][i]
    }
}

/// Incomplete elliptic integrals of the first and second kind.
///
/// `F(theta, k) = int_0^theta dw / sqrt(1 - k^2 sin^2 w)` and
/// `E(theta, k) = int_0^theta sqrt(1 - k^2 sin^2 w) dw`, both evaluated by
/// adaptive Gauss-Kronrod quadrature to an absolute error of 1e-10.
pub fn elliptic_integrals(theta: f64, k: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::ModulusOutOfRange(k));
    }
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    let k2 = k * k;
    let f = quad::integrate(
        &|w: f64| 1.0 / (1.0 - k2 * w.sin().powi(2)).sqrt(),
        0.0,
        theta,
        ELLIPTIC_ABS_TOL,
    );
    let e = quad::integrate(
        &|w: f64| (1.0 - k2 * w.sin().powi(2)).sqrt(),
        0.0,
        theta,
        ELLIPTIC_ABS_TOL,
    );
    Ok((f, e))
}

/// I-terms of a general ellipsoid with strictly ordered semi-axes a > b > c.
///
/// I1 and I3 come from the incomplete elliptic integrals, I2 from the 4 pi
/// sum rule, the cross terms from `I_ij = (I_j - I_i)/(a_i^2 - a_j^2)` and
/// the diagonal terms from `3 I_ii + I_ij + I_ik = 4 pi / a_i^2`.
pub fn i_terms_ellipsoid(a: f64, b: f64, c: f64) -> Result<ITerms> {
    if !(a > b && b > c && c > 0.0) {
        return Err(Error::DegenerateAxes);
    }
    if (a - b) / a < DEGENERATE_AXIS_TOL || (b - c) / b < DEGENERATE_AXIS_TOL {
        return Err(Error::DegenerateAxes);
    }
    let (a2, b2, c2) = (a * a, b * b, c * c);
    let theta = ((a2 - c2) / a2).sqrt().asin();
    let k = ((a2 - b2) / (a2 - c2)).sqrt();
    let (ef, ee) = elliptic_integrals(theta, k)?;
    let root = (a2 - c2).sqrt();
    let i1 = 4.0 * PI * a * b * c / ((a2 - b2) * root) * (ef - ee);
    let i3 = 4.0 * PI * a * b * c / ((b2 - c2) * root) * (b * root / (a * c) - ee);
    let i2 = 4.0 * PI - i1 - i3;
    let i12 = (i2 - i1) / (a2 - b2);
    let i23 = (i3 - i2) / (b2 - c2);
    let i31 = (i1 - i3) / (c2 - a2);
    let i11 = (4.0 * PI / a2 - i12 - i31) / 3.0;
    let i22 = (4.0 * PI / b2 - i12 - i23) / 3.0;
    let i33 = (4.0 * PI / c2 - i23 - i31) / 3.0;
    Ok(ITerms {
        i1,
        i2,
        i3,
        i11,
        i22,
        i33,
        i12,
        i23,
        i31,
    })
}

/// Interior Eshelby tensor in Voigt notation.
///
/// The normal and shear blocks never couple; the shear block is diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EshelbyTensor {
    pub s: Matrix6,
}

impl EshelbyTensor {
    /// The 3x3 block over the normal components.
    pub fn normal_block(&self) -> Matrix3 {
        self.s.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// The three shear diagonal entries (23, 31, 12).
    pub fn shear_diagonal(&self) -> [f64; 3] {
        [self.s[(3, 3)], self.s[(4, 4)], self.s[(5, 5)]]
    }

    /// True when the normal block cannot be inverted reliably (the cylinder
    /// kinds have an identically zero third row).
    pub fn normal_block_singular(&self) -> bool {
        let n = self.normal_block();
        let sv = n.singular_values();
        let max = sv.max();
        let min = sv.min();
        min <= 0.0 || max / min > 1e12
    }
}

/// Sphere coefficients `(m1, m2, m3)`: diagonal, off-diagonal and shear
/// entries of S. Finite at nu = 0.5 even though the stiffness is not.
pub fn sphere_coefficients(nu_b: f64) -> (f64, f64, f64) {
    let q = 15.0 * (1.0 - nu_b);
    (
        (7.0 - 5.0 * nu_b) / q,
        (5.0 * nu_b - 1.0) / q,
        (4.0 - 5.0 * nu_b) / q,
    )
}

/// Builds the Eshelby tensor for the geometry and background Poisson ratio.
pub fn eshelby_tensor(geom: &InclusionGeometry, nu_b: f64) -> Result<EshelbyTensor> {
    geom.validate()?;
    if !(0.0..0.5).contains(&nu_b) {
        return Err(Error::PoissonSingular(nu_b));
    }
    let s = match *geom {
        InclusionGeometry::Sphere { .. } => sphere_tensor(nu_b),
        InclusionGeometry::Ellipsoid { a, b, c } => general_ellipsoid_tensor([a, b, c], nu_b)?,
        InclusionGeometry::Cylinder { a, c } => cylinder_tensor(a, c, nu_b),
        InclusionGeometry::PlaneStrainCylinder { a, b } => cylinder_tensor(a, b, nu_b),
        InclusionGeometry::FlatEllipsoid { a, b, c } => flat_ellipsoid_tensor(a, b, c, nu_b)?,
        InclusionGeometry::Penny {
            radius,
            half_thickness,
        } => penny_tensor(half_thickness / radius, nu_b),
        InclusionGeometry::ThinDisk {
            radius,
            half_thickness,
        } => penny_tensor(half_thickness / radius, nu_b),
    };
    Ok(EshelbyTensor { s })
}

fn sphere_tensor(nu_b: f64) -> Matrix6 {
    let (m1, m2, m3) = sphere_coefficients(nu_b);
    let mut s = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            s[(i, j)] = if i == j { m1 } else { m2 };
        }
    }
    for k in 3..6 {
        s[(k, k)] = m3;
    }
    s
}

/// Assembles S from I-terms and axes, all in one common axis frame.
fn assemble_from_iterms(axes: [f64; 3], it: &ITerms, nu_b: f64) -> Matrix6 {
    let q = 8.0 * PI * (1.0 - nu_b);
    let one_minus_2nu = 1.0 - 2.0 * nu_b;
    let mut s = Matrix6::zeros();
    for i in 0..3 {
        s[(i, i)] = (3.0 * axes[i] * axes[i] * it.diag(i) + one_minus_2nu * it.first(i)) / q;
        for j in 0..3 {
            if i != j {
                s[(i, j)] =
                    (axes[j] * axes[j] * it.cross(i, j) - one_minus_2nu * it.first(i)) / q;
            }
        }
    }
    // Voigt shear slots 3, 4, 5 pair the axes (1,2), (2,0), (0,1)
    for (slot, (i, j)) in [(3usize, (1usize, 2usize)), (4, (2, 0)), (5, (0, 1))] {
        s[(slot, slot)] = ((axes[i] * axes[i] + axes[j] * axes[j]) * it.cross(i, j)
            + one_minus_2nu * (it.first(i) + it.first(j)))
            / (2.0 * q);
    }
    s
}

/// General ellipsoid with semi-axes in the physical (x, y, z) frame, in any
/// size order. Sorts descending, perturbs exactly-equal spheroid axes by
/// `SPHEROID_PERTURBATION`, evaluates the I-terms in the sorted frame and
/// permutes the resulting tensor back.
fn general_ellipsoid_tensor(axes_phys: [f64; 3], nu_b: f64) -> Result<Matrix6> {
    // stable descending sort of axis indices
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| axes_phys[j].partial_cmp(&axes_phys[i]).unwrap().then(i.cmp(&j)));
    let mut a = axes_phys[order[0]];
    let b = axes_phys[order[1]];
    let mut c = axes_phys[order[2]];

    let near_ab = (a - b) / a < DEGENERATE_AXIS_TOL;
    let near_bc = (b - c) / b < DEGENERATE_AXIS_TOL;
    if near_ab {
        a = b * SPHEROID_PERTURBATION;
    }
    if near_bc {
        c = b / SPHEROID_PERTURBATION;
    }

    let it = i_terms_ellipsoid(a, b, c)?;
    let sorted = assemble_from_iterms([a, b, c], &it, nu_b);

    // position of each physical axis in the sorted frame
    let mut pos = [0usize; 3];
    for (p, &phys) in order.iter().enumerate() {
        pos[phys] = p;
    }
    let mut s = Matrix6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            s[(i, j)] = sorted[(pos[i], pos[j])];
        }
    }
    let slot_of_pair = |i: usize, j: usize| -> usize {
        match (i.min(j), i.max(j)) {
            (1, 2) => 3,
            (0, 2) => 4,
            (0, 1) => 5,
            _ => unreachable!(),
        }
    };
    for (slot, (i, j)) in [(3usize, (1usize, 2usize)), (4, (2, 0)), (5, (0, 1))] {
        let sorted_slot = slot_of_pair(pos[i], pos[j]);
        s[(slot, slot)] = sorted[(sorted_slot, sorted_slot)];
    }
    Ok(s)
}

/// Cylinder with elliptic face; also serves the plane-strain cylinder, which
/// has the identical component pattern with its own face axes.
fn cylinder_tensor(a: f64, c: f64, nu_b: f64) -> Matrix6 {
    let q = 2.0 * (1.0 - nu_b);
    let one_minus_2nu = 1.0 - 2.0 * nu_b;
    let sum = a + c;
    let sum2 = sum * sum;
    let mut s = Matrix6::zeros();
    s[(0, 0)] = ((c * c + 2.0 * a * c) / sum2 + one_minus_2nu * c / sum) / q;
    s[(1, 1)] = ((a * a + 2.0 * a * c) / sum2 + one_minus_2nu * a / sum) / q;
    s[(0, 1)] = (c * c / sum2 - one_minus_2nu * c / sum) / q;
    s[(1, 0)] = (a * a / sum2 - one_minus_2nu * a / sum) / q;
    s[(0, 2)] = 2.0 * nu_b * c / sum / q;
    s[(1, 2)] = 2.0 * nu_b * a / sum / q;
    // rows 3311, 3322, 3333 vanish: no strain disturbance along the axis
    s[(3, 3)] = a / (2.0 * sum);
    s[(4, 4)] = c / (2.0 * sum);
    s[(5, 5)] = ((a * a + c * c) / sum2 + one_minus_2nu / 2.0) / q;
    s
}

/// Flat ellipsoid, a > b >> c: I-terms from the complete elliptic integrals
/// with modulus k^2 = 1 - b^2/a^2, then the common assembly.
fn flat_ellipsoid_tensor(a: f64, b: f64, c: f64, nu_b: f64) -> Result<Matrix6> {
    let (a2, b2, c2) = (a * a, b * b, c * c);
    let k = (1.0 - b2 / a2).sqrt();
    let (ef, ee) = elliptic_integrals(FRAC_PI_2, k)?;
    let fme = ef - ee;
    let ratio = b * c / (a2 - b2);
    let i1 = 4.0 * PI * fme * ratio;
    let i2 = 4.0 * PI * ((c / b) * ee - fme * ratio);
    let i3 = 4.0 * PI * (1.0 - (c / b) * ee);
    let i12 = 4.0 * PI * ((c / b) * ee - 2.0 * fme * ratio) / (a2 - b2);
    let i23 = 4.0 * PI * (1.0 - 2.0 * (c / b) * ee + fme * ratio) / b2;
    let i31 = 4.0 * PI * (1.0 - (c / b) * ee - fme * ratio) / a2;
    let i11 = (4.0 * PI / a2 - i12 - i31) / 3.0;
    let i22 = (4.0 * PI / b2 - i12 - i23) / 3.0;
    let i33 = (4.0 * PI / c2 - i23 - i31) / 3.0;
    let it = ITerms {
        i1,
        i2,
        i3,
        i11,
        i22,
        i33,
        i12,
        i23,
        i31,
    };
    Ok(assemble_from_iterms([a, b, c], &it, nu_b))
}

/// Penny-shaped inclusion to first order in the thickness ratio. The same
/// component pattern serves the thin disk, whose ratio is c/a instead of
/// b/a. The 3311 entry is evaluated in its expanded form, which stays
/// regular at nu = 0.
fn penny_tensor(ratio: f64, nu_b: f64) -> Matrix6 {
    let q = 1.0 - nu_b;
    let pr = PI * ratio;
    let mut s = Matrix6::zeros();
    s[(0, 0)] = (13.0 - 8.0 * nu_b) / (32.0 * q) * pr;
    s[(1, 1)] = s[(0, 0)];
    s[(2, 2)] = 1.0 - (1.0 - 2.0 * nu_b) / q * pr / 4.0;
    s[(0, 1)] = (8.0 * nu_b - 1.0) / (32.0 * q) * pr;
    s[(1, 0)] = s[(0, 1)];
    s[(0, 2)] = (2.0 * nu_b - 1.0) / (8.0 * q) * pr;
    s[(1, 2)] = s[(0, 2)];
    s[(2, 0)] = nu_b / q - (4.0 * nu_b + 1.0) / (8.0 * q) * pr;
    s[(2, 1)] = s[(2, 0)];
    s[(3, 3)] = 0.5 * (1.0 + (nu_b - 2.0) / q * pr / 4.0);
    s[(4, 4)] = s[(3, 3)];
    s[(5, 5)] = (7.0 - 8.0 * nu_b) / (32.0 * q) * pr;
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elliptic_trivial_cases() {
        let (f, e) = elliptic_integrals(FRAC_PI_2, 0.0).unwrap();
        assert!((f - FRAC_PI_2).abs() < 1e-12);
        assert!((e - FRAC_PI_2).abs() < 1e-12);
        let (f, e) = elliptic_integrals(0.0, 0.7).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(e, 0.0);
        assert!(matches!(
            elliptic_integrals(0.3, 1.0),
            Err(Error::ModulusOutOfRange(_))
        ));
        assert!(matches!(
            elliptic_integrals(-0.1, 0.5),
            Err(Error::ThetaOutOfRange(_))
        ));
    }

    #[test]
    fn iterm_sum_rule() {
        let it = i_terms_ellipsoid(0.5, 0.35, 0.25).unwrap();
        assert!((it.i1 + it.i2 + it.i3 - 4.0 * PI).abs() < 1e-8);
        let a2 = 0.25;
        assert!((3.0 * it.i11 + it.i12 + it.i31 - 4.0 * PI / a2).abs() < 1e-8);
        assert!(
            (3.0 * a2 * it.i11 + 0.35f64.powi(2) * it.i12 + 0.25f64.powi(2) * it.i31
                - 3.0 * it.i1)
                .abs()
                < 1e-8
        );
    }

    #[test]
    fn iterm_degenerate_axes() {
        assert!(matches!(
            i_terms_ellipsoid(0.3, 0.3, 0.3),
            Err(Error::DegenerateAxes)
        ));
        assert!(matches!(
            i_terms_ellipsoid(0.5, 0.499999, 0.3),
            Err(Error::DegenerateAxes)
        ));
    }

    #[test]
    fn sphere_hand_values() {
        let (m1, m2, m3) = sphere_coefficients(0.2);
        assert!((m1 - 0.5).abs() < 1e-15);
        assert!(m2.abs() < 1e-15);
        assert!((m3 - 0.25).abs() < 1e-15);
        // the sphere formulas stay finite at the incompressible limit
        let (m1, m2, m3) = sphere_coefficients(0.5);
        assert!((m1 - 0.6).abs() < 1e-15);
        assert!((m2 - 0.2).abs() < 1e-15);
        assert!((m3 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn cylinder_hand_value() {
        let geom = InclusionGeometry::Cylinder { a: 0.3, c: 0.3 };
        let s = eshelby_tensor(&geom, 0.2).unwrap().s;
        assert!((s[(0, 0)] - 0.65625).abs() < 1e-12);
        assert_eq!(s[(2, 2)], 0.0);
        assert_eq!(s[(2, 0)], 0.0);
        assert_eq!(s[(2, 1)], 0.0);
    }

    #[test]
    fn penny_limits() {
        for &ratio in &[0.05, 0.01, 0.001] {
            let geom = InclusionGeometry::Penny {
                radius: 1.0,
                half_thickness: ratio,
            };
            let s = eshelby_tensor(&geom, 0.3).unwrap().s;
            assert!((s[(2, 2)] - 1.0).abs() < 2.0 * ratio);
            assert!(s[(0, 0)].abs() < 2.0 * ratio);
        }
    }

    #[test]
    fn ellipsoid_close_to_sphere() {
        let geom = InclusionGeometry::Ellipsoid {
            a: 0.5,
            b: 0.499,
            c: 0.498,
        };
        let s = eshelby_tensor(&geom, 0.3).unwrap().s;
        let sph = eshelby_tensor(&InclusionGeometry::Sphere { radius: 0.5 }, 0.3)
            .unwrap()
            .s;
        let max_diff = (s - sph).abs().max();
        assert!(max_diff < 1e-3, "max entry difference {max_diff}");
    }

    #[test]
    fn spheroid_axes_accepted_in_any_order() {
        // prolate spheroid stated in image order (lateral, axial, elevational)
        let geom = InclusionGeometry::Ellipsoid {
            a: 0.2,
            b: 0.5,
            c: 0.2,
        };
        let s = eshelby_tensor(&geom, 0.3).unwrap().s;
        // x and z are the equal pair up to the tie-break perturbation
        assert!((s[(0, 0)] - s[(2, 2)]).abs() < 5e-3);
        assert!(s.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn shear_normal_coupling_is_zero_for_all_kinds() {
        let kinds = [
            InclusionGeometry::Sphere { radius: 0.3 },
            InclusionGeometry::Ellipsoid {
                a: 0.5,
                b: 0.35,
                c: 0.25,
            },
            InclusionGeometry::Cylinder { a: 0.3, c: 0.22 },
            InclusionGeometry::FlatEllipsoid {
                a: 0.5,
                b: 0.3,
                c: 0.02,
            },
            InclusionGeometry::Penny {
                radius: 0.5,
                half_thickness: 0.03,
            },
            InclusionGeometry::ThinDisk {
                radius: 0.4,
                half_thickness: 0.03,
            },
            InclusionGeometry::PlaneStrainCylinder { a: 0.3, b: 0.25 },
        ];
        for geom in &kinds {
            let s = eshelby_tensor(geom, 0.27).unwrap().s;
            for i in 0..3 {
                for j in 3..6 {
                    assert_eq!(s[(i, j)], 0.0, "{}", geom.kind_name());
                    assert_eq!(s[(j, i)], 0.0, "{}", geom.kind_name());
                }
            }
            for i in 3..6 {
                for j in 3..6 {
                    if i != j {
                        assert_eq!(s[(i, j)], 0.0, "{}", geom.kind_name());
                    }
                }
            }
        }
    }

    #[test]
    fn poisson_range_enforced() {
        let geom = InclusionGeometry::Sphere { radius: 0.3 };
        assert!(matches!(
            eshelby_tensor(&geom, 0.5),
            Err(Error::PoissonSingular(_))
        ));
        assert!(matches!(
            eshelby_tensor(&geom, -0.1),
            Err(Error::PoissonSingular(_))
        ));
    }

    #[test]
    fn geometry_validation() {
        assert!(InclusionGeometry::Sphere { radius: 0.0 }.validate().is_err());
        assert!(InclusionGeometry::Penny {
            radius: 0.5,
            half_thickness: 0.06
        }
        .validate()
        .is_err());
        assert!(InclusionGeometry::ThinDisk {
            radius: 0.5,
            half_thickness: 0.04
        }
        .validate()
        .is_ok());
    }
}
