//! Symmetry-breaking perturbations and their first-order parameters: the
//! odd potential (parity breaking), the magneto-optic term (conjugation
//! breaking), and even rotation-breaking potentials, at both the quadratic
//! degeneracy and the split Dirac pair.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
#[cfg(test)]
use crate::potential::CoefficientField;
use serde::{Deserialize, Serialize};

use crate::basis::PlaneWaveBasis;
use crate::bloch::{assemble, DeflatedResolvent, Perturbations};
use crate::deformation::Deformation;
use crate::degeneracy::QuadraticDegeneracy;
use crate::dirac::{conjugation_adapted_pair, AdaptedPair};
use crate::error::{Error, Result};
use crate::lattice::m_point;
use crate::linalg2::{Mat2, Vec2};
use crate::potential::{
    validate_symmetry, EvenScalarField, OddPotential, SquareLatticePotential, SymmetryOp,
};

/// Parity-breaking parameters at a quadratic degeneracy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParityBreakingM {
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: Vec2,
    pub max_imag: f64,
}

/// Multiplication operator of the odd potential in the plane-wave basis.
pub fn odd_matrix(basis: &PlaneWaveBasis, w: &OddPotential) -> Array2<Complex64> {
    let dim = basis.dim();
    let mut out = Array2::<Complex64>::zeros((dim, dim));
    for (s, v) in w.coeffs() {
        if v.norm() == 0.0 {
            continue;
        }
        for (i, &m) in basis.indices().iter().enumerate() {
            if let Some(j) = basis.position(m.sub(s)) {
                out[(i, j)] += v;
            }
        }
    }
    out
}

/// The magneto-optic operator `div(a sigma2 grad)` at quasimomentum `k`:
/// entries `-a_{m-m'} K_m . sigma2 K_{m'} = i a_{m-m'} (K_m x K_{m'})`.
pub fn magneto_matrix(basis: &PlaneWaveBasis, k: Vec2, a: &EvenScalarField) -> Array2<Complex64> {
    let dim = basis.dim();
    let ks = basis.k_vectors(k);
    let mut out = Array2::<Complex64>::zeros((dim, dim));
    for (s, v) in a.coeffs() {
        if v == 0.0 {
            continue;
        }
        for (i, &m) in basis.indices().iter().enumerate() {
            if let Some(j) = basis.position(m.sub(s)) {
                let cross = ks[i][0] * ks[j][1] - ks[i][1] * ks[j][0];
                out[(i, j)] += Complex64::new(0.0, v * cross);
            }
        }
    }
    out
}

fn inner(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Resolvent-mediated bilinear forms of the odd perturbation at the
/// quadratic degeneracy:
/// `t0 = <W p1, R W p1>`, `t1 = Re <W p1, R W p2>`, `t2 = -Im <W p1, R W p2>`,
/// `t3 = 2 Re <W p1, R (2i grad) p1>`.
pub fn p_breaking_params_quadratic(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deg: &QuadraticDegeneracy,
    w: &OddPotential,
) -> Result<ParityBreakingM> {
    let check = crate::potential::validate_symmetry_odd(w);
    if !check.holds {
        return Err(Error::Symmetry {
            symmetry: "P-odd real",
            worst: check.worst,
            m1: check.worst_index.m1,
            m2: check.worst_index.m2,
        });
    }
    let m = m_point();
    let h = assemble(basis, m, potential, Mat2::IDENTITY, Perturbations::default())?;
    let solver = DeflatedResolvent::new(
        &h.matrix,
        deg.e_s,
        vec![deg.phi1.view(), deg.phi2.view()],
    )?;
    let wm = odd_matrix(basis, w);
    let wp1 = wm.dot(&deg.phi1);
    let wp2 = wm.dot(&deg.phi2);
    let r_wp1 = solver.apply(&wp1.view())?;
    let r_wp2 = solver.apply(&wp2.view())?;
    let t0c = inner(&wp1, &r_wp1);
    let t12 = inner(&wp1, &r_wp2);
    // (2i grad)_j -> multiplier -2 (K_m)_j
    let ks = basis.k_vectors(m);
    let mut theta3 = [0.0f64; 2];
    let mut theta3_imag = 0.0f64;
    for j in 0..2 {
        let mut rhs = deg.phi1.clone();
        for (i, z) in rhs.iter_mut().enumerate() {
            *z *= Complex64::new(-2.0 * ks[i][j], 0.0);
        }
        let r = solver.apply(&rhs.view())?;
        let br = inner(&wp1, &r);
        theta3[j] = 2.0 * br.re;
        theta3_imag = theta3_imag.max(0.0);
    }
    let scale = t0c.norm().max(1.0);
    if t0c.im.abs() > 1e-9 * scale {
        return Err(Error::Hypothesis(format!(
            "parity-breaking theta0 not real: imaginary part {:.3e}",
            t0c.im
        )));
    }
    Ok(ParityBreakingM {
        theta0: t0c.re,
        theta1: t12.re,
        theta2: -t12.im,
        theta3,
        max_imag: t0c.im.abs().max(theta3_imag),
    })
}

/// First-order parity-breaking coefficients at the two Dirac points,
/// with the partner basis obtained from the `+` basis by the parity index
/// map (verified as an eigenstate rather than assumed).
pub fn p_breaking_params_dirac(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deformation: &Deformation,
    deg: &QuadraticDegeneracy,
    e_d: f64,
    d_plus: Vec2,
    w: &OddPotential,
) -> Result<(f64, f64)> {
    let wm = odd_matrix(basis, w);
    let plus = conjugation_adapted_pair(basis, potential, deformation, deg, e_d, d_plus)?;
    let tp = inner(&plus.phi1, &wm.dot(&plus.phi1));
    if tp.im.abs() > 1e-9 * tp.norm().max(1.0) {
        return Err(Error::Hypothesis(format!(
            "theta at the + point not real: {:.3e}",
            tp.im
        )));
    }
    let minus_phi1 = parity_partner(basis, potential, deformation, e_d, d_plus, &plus)?;
    let tm = inner(&minus_phi1, &wm.dot(&minus_phi1));
    Ok((tp.re, tm.re))
}

/// Conjugation-breaking coefficient at the quadratic degeneracy:
/// `<phi1, div(a sigma2 grad) phi1>`.
pub fn c_breaking_param_quadratic(
    basis: &PlaneWaveBasis,
    deg: &QuadraticDegeneracy,
    a: &EvenScalarField,
) -> Result<f64> {
    let b = magneto_matrix(basis, m_point(), a);
    let t = inner(&deg.phi1, &b.dot(&deg.phi1));
    if t.im.abs() > 1e-9 * t.norm().max(1.0) {
        return Err(Error::Hypothesis(format!(
            "conjugation-breaking coefficient not real: {:.3e}",
            t.im
        )));
    }
    Ok(t.re)
}

/// Conjugation-breaking coefficients at the two Dirac points.
pub fn c_breaking_params_dirac(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deformation: &Deformation,
    deg: &QuadraticDegeneracy,
    e_d: f64,
    d_plus: Vec2,
    a: &EvenScalarField,
) -> Result<(f64, f64)> {
    let plus = conjugation_adapted_pair(basis, potential, deformation, deg, e_d, d_plus)?;
    let bp = magneto_matrix(basis, d_plus, a);
    let tp = inner(&plus.phi1, &bp.dot(&plus.phi1));
    let m = m_point();
    let d_minus = [2.0 * m[0] - d_plus[0], 2.0 * m[1] - d_plus[1]];
    let minus_phi1 = parity_partner(basis, potential, deformation, e_d, d_plus, &plus)?;
    let bm = magneto_matrix(basis, d_minus, a);
    let tm = inner(&minus_phi1, &bm.dot(&minus_phi1));
    if tp.im.abs() > 1e-9 * tp.norm().max(1.0) {
        return Err(Error::Hypothesis(format!(
            "conjugation-breaking coefficient not real: {:.3e}",
            tp.im
        )));
    }
    Ok((tp.re, tm.re))
}

/// Rotation-breaking coefficients of an even potential at the quadratic
/// degeneracy: `t0' = <p1, W p1>`, `t1' = Re <p1, W p2>`, `t2' = -Im <p1, W p2>`.
/// Rotation-invariant perturbations are rejected as trivial.
pub fn r_breaking_params(
    basis: &PlaneWaveBasis,
    deg: &QuadraticDegeneracy,
    w_even: &EvenScalarField,
) -> Result<[f64; 3]> {
    let r_check = validate_symmetry(w_even, SymmetryOp::R);
    if r_check.holds {
        return Err(Error::Config(
            "rotation-breaking parameters of a rotation-invariant potential are trivial".into(),
        ));
    }
    let dim = basis.dim();
    let mut wm = Array2::<Complex64>::zeros((dim, dim));
    for (s, v) in w_even.coeffs() {
        if v == 0.0 {
            continue;
        }
        for (i, &m) in basis.indices().iter().enumerate() {
            if let Some(j) = basis.position(m.sub(s)) {
                wm[(i, j)] += Complex64::new(v, 0.0);
            }
        }
    }
    let t0 = inner(&deg.phi1, &wm.dot(&deg.phi1));
    let t12 = inner(&deg.phi1, &wm.dot(&deg.phi2));
    if t0.im.abs() > 1e-10 * t0.norm().max(1.0) {
        return Err(Error::Hypothesis(format!(
            "rotation-breaking t0' not real: {:.3e}",
            t0.im
        )));
    }
    Ok([t0.re, t12.re, -t12.im])
}

/// Partner-state construction: applies the parity index map
/// `c_n -> c_{-n - (1,1)}` to the `+` point basis state and verifies it is
/// an eigenstate at the inverted quasimomentum.
fn parity_partner(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deformation: &Deformation,
    e_d: f64,
    d_plus: Vec2,
    plus: &AdaptedPair,
) -> Result<Array1<Complex64>> {
    let dim = basis.dim();
    let mut out = Array1::<Complex64>::zeros(dim);
    for (i, &m) in basis.indices().iter().enumerate() {
        if let Some(j) = basis.position(m.parity_m()) {
            out[j] = plus.phi1[i];
        }
    }
    let n: f64 = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n < 0.999 {
        return Err(Error::Hypothesis(format!(
            "parity partner lost {:.3e} of its norm to the box boundary",
            1.0 - n
        )));
    }
    out.mapv_inplace(|z| z / n);
    let m = m_point();
    let d_minus = [2.0 * m[0] - d_plus[0], 2.0 * m[1] - d_plus[1]];
    let h = assemble(
        basis,
        d_minus,
        potential,
        deformation.metric(),
        Perturbations::default(),
    )?;
    let hv = h.matrix.dot(&out);
    let res: f64 = (0..dim)
        .map(|i| (hv[i] - Complex64::new(e_d, 0.0) * out[i]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if res > 1e-6 * e_d.abs().max(1.0) {
        return Err(Error::Hypothesis(format!(
            "parity partner fails the eigen-residual check at the inverted point: {res:.3e}"
        )));
    }
    Ok(out)
}

/// Minimal gap between the band pair nearest `e_ref` at `k`, under optional
/// perturbations; used for gap-opening ladders.
pub fn gap_at(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    metric: Mat2,
    perturbations: Perturbations,
    k: Vec2,
    e_ref: f64,
) -> Result<f64> {
    let h = assemble(basis, k, potential, metric, perturbations)?;
    let energies = crate::bloch::eigenvalues(&h, basis.dim().min(24))?;
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| {
        (energies[a] - e_ref)
            .abs()
            .partial_cmp(&(energies[b] - e_ref).abs())
            .unwrap()
    });
    Ok((energies[order[0]] - energies[order[1]]).abs())
}
