//! Linear deformation algebra: the map `T <-> (tau0, tau1, tau3)`, polar
//! form, the example one-parameter families, validity constraints, and the
//! classification of preserved point symmetries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg2::{norm, Mat2};
use crate::potential::SymmetryOp;

const PAULI_EXPANSION_TOL: f64 = 1e-14;
const SYMMETRY_TOL: f64 = 1e-12;

/// Invertible linear deformation of the unit cell together with the Pauli
/// coefficients of `I - (T^T T)^{-1}` and their polar form.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Deformation {
    pub t: [[f64; 2]; 2],
    pub tau0: f64,
    pub tau1: f64,
    pub tau3: f64,
    pub tau_norm: f64,
    /// `Arg(tau1 + i tau3)` on `(-pi, pi]`.
    pub phi: f64,
}

/// Example one-parameter deformation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeformationKind {
    Dilation,
    Tilt,
    Uniaxial,
}

impl Deformation {
    pub fn identity() -> Self {
        Deformation {
            t: Mat2::IDENTITY.0,
            tau0: 0.0,
            tau1: 0.0,
            tau3: 0.0,
            tau_norm: 0.0,
            phi: 0.0,
        }
    }

    /// Builds from an arbitrary matrix, rejecting singular `T` and checking
    /// both the Pauli expansion identity and positive definiteness of the
    /// pushforward metric.
    pub fn from_matrix(t: Mat2) -> Result<Self> {
        let (tau0, tau1, tau3) = taus_from_t(&t)?;
        let tau_norm = tau1.hypot(tau3);
        let lambda_minus = (1.0 - tau0) - tau_norm;
        if lambda_minus <= 0.0 {
            return Err(Error::Config(format!(
                "deformation metric not positive definite: lambda- = {lambda_minus:.3e}"
            )));
        }
        // entrywise check of I - (T^T T)^{-1} = tau0 I + tau1 s1 + tau3 s3
        let metric = metric_of(&t)?;
        let recon = Mat2::IDENTITY
            .sub(&Mat2::IDENTITY.scale(tau0))
            .sub(&Mat2::SIGMA1.scale(tau1))
            .sub(&Mat2::SIGMA3.scale(tau3));
        let dev = metric.sub(&recon).max_abs();
        let scale = metric.max_abs().max(1.0);
        if dev > PAULI_EXPANSION_TOL * scale * 10.0 {
            return Err(Error::Config(format!(
                "Pauli expansion inconsistent: deviation {dev:.3e}"
            )));
        }
        let phi = if tau_norm == 0.0 { 0.0 } else { tau3.atan2(tau1) };
        // atan2 returns (-pi, pi]; the branch endpoint maps -pi to +pi
        let phi = if phi <= -std::f64::consts::PI {
            std::f64::consts::PI
        } else {
            phi
        };
        Ok(Deformation {
            t: t.0,
            tau0,
            tau1,
            tau3,
            tau_norm,
            phi,
        })
    }

    /// Isotropic dilation `T = zeta I`, `zeta > 0`.
    pub fn dilation(zeta: f64) -> Result<Self> {
        if !(zeta > 0.0) {
            return Err(Error::Config(format!("dilation requires zeta > 0, got {zeta}")));
        }
        Deformation::from_matrix(Mat2([[zeta, 0.0], [0.0, zeta]]))
    }

    /// Tilt `T = [[cos xi, sin xi], [sin xi, cos xi]]`, `xi in (-pi/4, pi/4)`.
    pub fn tilt(xi: f64) -> Result<Self> {
        if !(xi.abs() < std::f64::consts::FRAC_PI_4) {
            return Err(Error::Config(format!(
                "tilt requires |xi| < pi/4, got {xi}"
            )));
        }
        let (s, c) = xi.sin_cos();
        Deformation::from_matrix(Mat2([[c, s], [s, c]]))
    }

    /// Uniaxial contraction `T = diag(1, eta)`, `eta in (0, 1)`.
    pub fn uniaxial(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Config(format!(
                "uniaxial requires eta in (0, 1), got {eta}"
            )));
        }
        Deformation::from_matrix(Mat2([[1.0, 0.0], [0.0, eta]]))
    }

    pub fn family(kind: DeformationKind, parameter: f64) -> Result<Self> {
        match kind {
            DeformationKind::Dilation => Deformation::dilation(parameter),
            DeformationKind::Tilt => Deformation::tilt(parameter),
            DeformationKind::Uniaxial => Deformation::uniaxial(parameter),
        }
    }

    /// Tilt deformation with a prescribed `tau1 = |tau|` value.
    pub fn tilt_with_tau1(tau1: f64) -> Result<Self> {
        if !(tau1.abs() < 1.0) {
            return Err(Error::Config(format!("tilt tau1 out of range: {tau1}")));
        }
        // tau1(xi) = tan(2 xi) / cos(2 xi); invert by bisection
        let target = tau1;
        let f = |xi: f64| (2.0 * xi).tan() / (2.0 * xi).cos() - target;
        let (mut lo, mut hi) = (-0.39, 0.39);
        let (flo, _fhi) = (f(lo), f(hi));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Deformation::tilt(0.5 * (lo + hi))
    }

    /// Uniaxial deformation with a prescribed `tau3 > 0` value.
    pub fn uniaxial_with_tau3(tau3: f64) -> Result<Self> {
        if !(tau3 > 0.0) {
            return Err(Error::Config(format!("uniaxial tau3 must be > 0, got {tau3}")));
        }
        // tau3(eta) = 1/(2 eta^2) - 1/2
        let eta = (1.0 / (2.0 * tau3 + 1.0)).sqrt();
        Deformation::uniaxial(eta)
    }

    /// The pushforward metric `A = (T^T T)^{-1}`.
    pub fn metric(&self) -> Mat2 {
        metric_of(&Mat2(self.t)).expect("validated at construction")
    }

    /// Point symmetries of the deformed operator per the
    /// `(tau0, tau)`-classification: P and C always survive; R needs
    /// `tau1 = tau3 = 0`; Sigma1 needs `tau3 = 0`; Sigma3 needs `tau1 = 0`.
    pub fn preserved_symmetries(&self) -> Vec<SymmetryOp> {
        let mut out = vec![SymmetryOp::P, SymmetryOp::C];
        if self.tau1.abs() < SYMMETRY_TOL && self.tau3.abs() < SYMMETRY_TOL {
            out.push(SymmetryOp::R);
        }
        if self.tau3.abs() < SYMMETRY_TOL {
            out.push(SymmetryOp::Sigma1);
        }
        if self.tau1.abs() < SYMMETRY_TOL {
            out.push(SymmetryOp::Sigma3);
        }
        out
    }
}

/// `(tau0, tau1, tau3)` from the action of `T` on the lattice vectors.
pub fn taus_from_t(t: &Mat2) -> Result<(f64, f64, f64)> {
    let det = t.det();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Config("singular deformation matrix".into()));
    }
    let tv1 = t.apply([1.0, 0.0]);
    let tv2 = t.apply([0.0, 1.0]);
    let d2 = det * det;
    let n1 = norm(tv1).powi(2);
    let n2 = norm(tv2).powi(2);
    let tau0 = 1.0 - 0.5 * (n1 + n2) / d2;
    let tau1 = (tv1[0] * tv2[0] + tv1[1] * tv2[1]) / d2;
    let tau3 = 0.5 * (n1 - n2) / d2;
    Ok((tau0, tau1, tau3))
}

fn metric_of(t: &Mat2) -> Result<Mat2> {
    let tt = t.transpose().mul(t);
    tt.inverse()
        .ok_or_else(|| Error::Config("singular deformation matrix".into()))
}
