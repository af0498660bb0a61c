//! The reduced 2x2 matrix of the exact corner-point reduction, Newton
//! location of split degeneracies, cone-parameter extraction at located
//! Dirac points, and deformation-family trajectory scans.
//!
//! The reduction realizes the eigenvalue condition near `(E_S, M)` exactly
//! in the truncated basis: `E_S + eps` is an eigenvalue of the deformed
//! operator at `M + kappa` precisely where `det M(eps; kappa, tau) = 0`,
//! with `M = M0 + M1`, `M0` a kernel-space quadratic form and `M1` obtained
//! from one bordered (deflated) linear solve per evaluation. A Neumann
//! series never appears; the solve is exact up to solver tolerance.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::PlaneWaveBasis;
use crate::bloch::{assemble, eigensolve, DeflatedResolvent, Perturbations};
use crate::deformation::Deformation;
use crate::degeneracy::{predicted_dirac, PredictedSplit, QuadraticDegeneracy};
use crate::error::{Error, Result};
use crate::lattice::m_point;
use crate::linalg2::{add, norm, scale, sub, Mat2, Vec2};
use crate::potential::SquareLatticePotential;

/// Newton acceptance on `|(h0, h1, h2)|`, relative to the energy scale.
pub const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;
const NEWTON_FD_STEP: f64 = 1e-6;
/// Direct-eigensolve gap acceptance at a located degeneracy.
pub const GAP_TOL: f64 = 1e-8;

/// Pauli components of the reduced matrix.
#[derive(Debug, Clone, Copy)]
pub struct ReducedMatrix {
    pub m: [[Complex64; 2]; 2],
    /// `(h0, h1, h2, h3)` with `h0 = (M11+M22)/2`, `h1 = Re M12`,
    /// `h2 = -Im M12`, `h3 = (M11-M22)/2`
    pub h: [f64; 4],
}

/// Evaluator bound to one quadratic degeneracy of one potential.
pub struct ReducedMatrixEvaluator<'a> {
    basis: &'a PlaneWaveBasis,
    potential: &'a SquareLatticePotential,
    pub e_s: f64,
    phi1: Array1<Complex64>,
    phi2: Array1<Complex64>,
    guard_gap: f64,
    abs_k2: Vec<f64>,
    k_at_m: Vec<Vec2>,
}

impl<'a> ReducedMatrixEvaluator<'a> {
    pub fn new(
        basis: &'a PlaneWaveBasis,
        potential: &'a SquareLatticePotential,
        deg: &QuadraticDegeneracy,
    ) -> Self {
        let k_at_m = basis.k_vectors(m_point());
        let abs_k2 = k_at_m.iter().map(|k| k[0] * k[0] + k[1] * k[1]).collect();
        ReducedMatrixEvaluator {
            basis,
            potential,
            e_s: deg.e_s,
            phi1: deg.phi1.clone(),
            phi2: deg.phi2.clone(),
            guard_gap: deg.guard_gap,
            abs_k2,
            k_at_m,
        }
    }

    /// Evaluates the reduced matrix at energy displacement `eps`,
    /// quasimomentum displacement `kappa`, and deformation `(tau0, tau)`.
    pub fn eval(&self, eps: f64, kappa: Vec2, tau0: f64, tau: Vec2) -> Result<ReducedMatrix> {
        // validity guard: stay well inside the spectral gap of the deflated
        // operator (generous reduction-radius estimate; the bordered solve
        // residual below catches actual near-singularity)
        if eps.abs() > 0.9 * self.guard_gap {
            return Err(Error::ValidityRadius(format!(
                "|eps| = {:.3e} exceeds 0.9 x guard gap {:.3e}",
                eps.abs(),
                self.guard_gap
            )));
        }
        let tt = norm(tau);
        let sigma_phi = if tt > 0.0 {
            Mat2::SIGMA1
                .scale(tau[0] / tt)
                .add(&Mat2::SIGMA3.scale(tau[1] / tt))
        } else {
            Mat2([[0.0; 2]; 2])
        };
        let k2 = kappa[0] * kappa[0] + kappa[1] * kappa[1];
        let ksk = sigma_phi.quad(kappa, kappa);

        let dim = self.basis.dim();
        let mut f0 = vec![0.0f64; dim];
        let mut f1 = vec![0.0f64; dim];
        for i in 0..dim {
            let km = self.k_at_m[i];
            let kq = sigma_phi.quad(km, km);
            let kk = km[0] * kappa[0] + km[1] * kappa[1];
            let kssk = sigma_phi.quad(km, kappa);
            // F0 = eps - |kap|^2 - tau0 (Lap - |kap|^2) - |tau| (D.sphi.D - kap.sphi.kap)
            f0[i] = eps - k2 + tau0 * (self.abs_k2[i] + k2) + tt * (kq + ksk);
            // F1 = 2i kap.D - tau0 (Lap + 2i kap.D) - |tau| (D.sphi.D + 2i kap.sphi.D)
            f1[i] = -2.0 * kk + tau0 * (self.abs_k2[i] + 2.0 * kk) + tt * (kq + 2.0 * kssk);
        }

        let m0 = [
            [
                weighted_inner(&self.phi1, &f0, &self.phi1),
                weighted_inner(&self.phi1, &f0, &self.phi2),
            ],
            [
                weighted_inner(&self.phi2, &f0, &self.phi1),
                weighted_inner(&self.phi2, &f0, &self.phi2),
            ],
        ];

        // deformed operator at M + kappa with the metric of (tau0, tau)
        let metric = Mat2::IDENTITY
            .sub(&Mat2::IDENTITY.scale(tau0))
            .sub(&Mat2::SIGMA1.scale(tau[0]))
            .sub(&Mat2::SIGMA3.scale(tau[1]));
        let m = m_point();
        let h = assemble(
            self.basis,
            add(m, kappa),
            self.potential,
            metric,
            Perturbations::default(),
        )?;
        let solver = DeflatedResolvent::new(
            &h.matrix,
            self.e_s + eps,
            vec![self.phi1.view(), self.phi2.view()],
        )?;
        let rhs1 = elementwise(&self.phi1, &f1);
        let rhs2 = elementwise(&self.phi2, &f1);
        let u1 = solver.apply(&rhs1.view())?;
        let u2 = solver.apply(&rhs2.view())?;
        let m1 = [
            [inner(&rhs1, &u1), inner(&rhs1, &u2)],
            [inner(&rhs2, &u1), inner(&rhs2, &u2)],
        ];

        let mm = [
            [m0[0][0] + m1[0][0], m0[0][1] + m1[0][1]],
            [m0[1][0] + m1[1][0], m0[1][1] + m1[1][1]],
        ];
        let herm = (mm[0][1] - mm[1][0].conj()).norm().max(mm[0][0].im.abs()).max(mm[1][1].im.abs());
        if herm > 1e-9 * self.e_s.abs().max(1.0) {
            return Err(Error::LinearSolve(format!(
                "reduced matrix lost self-adjointness: deviation {herm:.3e}"
            )));
        }
        let h0 = 0.5 * (mm[0][0].re + mm[1][1].re);
        let h1c = mm[0][1].re;
        let h2c = -mm[0][1].im;
        let h3 = 0.5 * (mm[0][0].re - mm[1][1].re);
        Ok(ReducedMatrix {
            m: mm,
            h: [h0, h1c, h2c, h3],
        })
    }
}

fn weighted_inner(a: &Array1<Complex64>, w: &[f64], b: &Array1<Complex64>) -> Complex64 {
    a.iter()
        .zip(w.iter())
        .zip(b.iter())
        .map(|((x, &ww), y)| x.conj() * ww * y)
        .sum()
}

fn elementwise(a: &Array1<Complex64>, w: &[f64]) -> Array1<Complex64> {
    let mut out = a.clone();
    for (z, &ww) in out.iter_mut().zip(w.iter()) {
        *z *= ww;
    }
    out
}

fn inner(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Dirac-point nondegeneracy flags.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiracFlags {
    /// twofold level at the located quasimomentum
    pub d1: bool,
    /// conjugation-adapted basis state in the `+1` sector is a simple eigenstate
    pub d2: bool,
    /// likewise in the `-1` sector
    pub d3: bool,
    /// both cone vectors nonzero
    pub d4: bool,
}

/// A located conical degeneracy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiracPoint {
    pub e_d: f64,
    pub d: Vec2,
    /// `(gamma0, gamma1, gamma2)`, each a 2-vector
    pub gammas: [Vec2; 3],
    pub flags: DiracFlags,
    pub gap_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiracPair {
    pub plus: DiracPoint,
    pub minus: DiracPoint,
    /// closed-form seed used to start the refinement
    pub predicted: crate::degeneracy::PredictedDirac,
}

/// Locates the split pair of twofold degeneracies of the deformed operator
/// by Newton iteration on `(eps, kappa) -> (h0, h1, h2)` with a
/// finite-difference Jacobian, seeded from the closed-form prediction.
/// Falls back to derivative-free gap minimization if Newton diverges. The
/// partner point is obtained by inversion through the corner and verified
/// independently.
pub fn locate_dirac(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deg: &QuadraticDegeneracy,
    deformation: &Deformation,
) -> Result<DiracPair> {
    locate_dirac_with_tol(basis, potential, deg, deformation, NEWTON_TOL, GAP_TOL)
}

/// Same with explicit Newton-acceptance and gap tolerances (both relative
/// to the energy scale).
pub fn locate_dirac_with_tol(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deg: &QuadraticDegeneracy,
    deformation: &Deformation,
    newton_tol: f64,
    gap_tol: f64,
) -> Result<DiracPair> {
    let tau = [deformation.tau1, deformation.tau3];
    let tau0 = deformation.tau0;
    let predicted = match predicted_dirac(deg, tau0, deformation.tau_norm, deformation.phi)? {
        PredictedSplit::Pair(p) => p,
        PredictedSplit::PersistentQuadratic { .. } => {
            return Err(Error::Hypothesis(
                "pure dilation does not split the degeneracy; no Dirac pair to locate".into(),
            ))
        }
    };
    let m = m_point();
    let ev = ReducedMatrixEvaluator::new(basis, potential, deg);
    let seed_kappa = sub(predicted.d_plus, m);
    let seed_eps = predicted.e_d - deg.e_s;
    let scale_e = deg.e_s.abs().max(1.0);

    let newton = newton_refine_tol(&ev, seed_eps, seed_kappa, tau0, tau, scale_e, newton_tol);
    let (eps, kappa) = match newton {
        Ok(x) => x,
        Err(_) => gap_minimize(basis, potential, deformation, deg.e_s, seed_eps, seed_kappa)?,
    };

    let d_plus = add(m, kappa);
    let gap_plus = direct_gap(basis, potential, deformation, d_plus, deg.e_s + eps)?;
    if gap_plus > gap_tol * scale_e {
        return Err(Error::NewtonDiverged {
            iterations: NEWTON_MAX_ITER,
            residual: gap_plus,
        });
    }
    // partner by inversion, verified rather than assumed
    let d_minus = sub(scale(2.0, m), d_plus);
    let gap_minus = direct_gap(basis, potential, deformation, d_minus, deg.e_s + eps)?;
    if gap_minus > gap_tol * scale_e {
        return Err(Error::Hypothesis(format!(
            "inversion partner fails the degeneracy check: gap {gap_minus:.3e}"
        )));
    }

    let e_d = deg.e_s + eps;
    let plus = gamma_params(basis, potential, deformation, deg, e_d, d_plus)?;
    let minus = gamma_params(basis, potential, deformation, deg, e_d, d_minus)?;
    Ok(DiracPair {
        plus,
        minus,
        predicted,
    })
}

fn newton_refine(
    ev: &ReducedMatrixEvaluator,
    eps: f64,
    kappa: Vec2,
    tau0: f64,
    tau: Vec2,
    scale_e: f64,
) -> Result<(f64, Vec2)> {
    newton_refine_tol(ev, eps, kappa, tau0, tau, scale_e, NEWTON_TOL)
}

fn newton_refine_tol(
    ev: &ReducedMatrixEvaluator,
    mut eps: f64,
    mut kappa: Vec2,
    tau0: f64,
    tau: Vec2,
    scale_e: f64,
    newton_tol: f64,
) -> Result<(f64, Vec2)> {
    let f = |x: &[f64; 3]| -> Result<[f64; 3]> {
        let r = ev.eval(x[0], [x[1], x[2]], tau0, tau)?;
        Ok([r.h[0], r.h[1], r.h[2]])
    };
    let mut x = [eps, kappa[0], kappa[1]];
    let mut fv = f(&x)?;
    for _iter in 0..NEWTON_MAX_ITER {
        let res = (fv[0] * fv[0] + fv[1] * fv[1] + fv[2] * fv[2]).sqrt();
        if res < newton_tol * scale_e {
            eps = x[0];
            kappa = [x[1], x[2]];
            return Ok((eps, kappa));
        }
        // finite-difference Jacobian
        let mut jac = [[0.0f64; 3]; 3];
        for j in 0..3 {
            let hstep = NEWTON_FD_STEP * x[j].abs().max(1.0);
            let mut xp = x;
            xp[j] += hstep;
            let fp = f(&xp)?;
            for i in 0..3 {
                jac[i][j] = (fp[i] - fv[i]) / hstep;
            }
        }
        let dx = solve3(&jac, &fv).ok_or(Error::NewtonDiverged {
            iterations: _iter,
            residual: res,
        })?;
        for j in 0..3 {
            x[j] -= dx[j];
        }
        fv = f(&x)?;
    }
    let res = (fv[0] * fv[0] + fv[1] * fv[1] + fv[2] * fv[2]).sqrt();
    Err(Error::NewtonDiverged {
        iterations: NEWTON_MAX_ITER,
        residual: res,
    })
}

fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    // Gaussian elimination with partial pivoting
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i][j];
        }
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r == col {
                continue;
            }
            let fac = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] -= fac * m[col][c];
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Gap between the two bands nearest `e_ref` at quasimomentum `k`.
pub fn direct_gap(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deformation: &Deformation,
    k: Vec2,
    e_ref: f64,
) -> Result<f64> {
    let h = assemble(
        basis,
        k,
        potential,
        deformation.metric(),
        Perturbations::default(),
    )?;
    let energies = crate::bloch::eigenvalues(&h, basis.dim().min(24))?;
    let mut best = (f64::INFINITY, 0usize);
    for (i, e) in energies.iter().enumerate() {
        let d = (e - e_ref).abs();
        if d < best.0 {
            best = (d, i);
        }
    }
    let i = best.1;
    let lower = if i > 0 {
        (energies[i] - energies[i - 1]).abs()
    } else {
        f64::INFINITY
    };
    let upper = if i + 1 < energies.len() {
        (energies[i + 1] - energies[i]).abs()
    } else {
        f64::INFINITY
    };
    Ok(lower.min(upper))
}

/// Derivative-free refinement: Nelder-Mead on the band gap over kappa.
fn gap_minimize(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deformation: &Deformation,
    e_s: f64,
    seed_eps: f64,
    seed_kappa: Vec2,
) -> Result<(f64, Vec2)> {
    let m = m_point();
    let gap_of = |kap: Vec2| -> f64 {
        direct_gap(basis, potential, deformation, add(m, kap), e_s + seed_eps)
            .unwrap_or(f64::INFINITY)
    };
    let h = 0.02 * norm(seed_kappa).max(0.01);
    let mut simplex = vec![
        seed_kappa,
        add(seed_kappa, [h, 0.0]),
        add(seed_kappa, [0.0, h]),
    ];
    let mut values: Vec<f64> = simplex.iter().map(|&k| gap_of(k)).collect();
    for _ in 0..200 {
        // order ascending
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let (best, mid, worst) = (idx[0], idx[1], idx[2]);
        if values[best] < 1e-10 * e_s.abs().max(1.0)
            || norm(sub(simplex[best], simplex[worst])) < 1e-13
        {
            break;
        }
        let centroid = scale(0.5, add(simplex[best], simplex[mid]));
        let reflected = add(centroid, sub(centroid, simplex[worst]));
        let fr = gap_of(reflected);
        if fr < values[best] {
            let expanded = add(centroid, scale(2.0, sub(centroid, simplex[worst])));
            let fe = gap_of(expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[mid] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = add(centroid, scale(0.5, sub(simplex[worst], centroid)));
            let fc = gap_of(contracted);
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for j in 0..3 {
                    if j != best {
                        simplex[j] = scale(0.5, add(simplex[j], simplex[best]));
                        values[j] = gap_of(simplex[j]);
                    }
                }
            }
        }
    }
    let mut best = 0;
    for j in 1..3 {
        if values[j] < values[best] {
            best = j;
        }
    }
    if !values[best].is_finite() {
        return Err(Error::NewtonDiverged {
            iterations: 200,
            residual: values[best],
        });
    }
    // midpoint energy at the refined point
    let kap = simplex[best];
    let h = assemble(
        basis,
        add(m, kap),
        potential,
        deformation.metric(),
        Perturbations::default(),
    )?;
    let energies = crate::bloch::eigenvalues(&h, basis.dim().min(24))?;
    let mut bi = 0usize;
    let mut bd = f64::INFINITY;
    for (i, e) in energies.iter().enumerate() {
        let d = (e - (e_s + seed_eps)).abs();
        if d < bd {
            bd = d;
            bi = i;
        }
    }
    let partner = if bi + 1 < energies.len()
        && (bi == 0 || energies[bi + 1] - energies[bi] < energies[bi] - energies[bi - 1])
    {
        bi + 1
    } else {
        bi - 1
    };
    let eps = 0.5 * (energies[bi] + energies[partner]) - e_s;
    Ok((eps, kap))
}

/// Conjugation-adapted eigenbasis and cone vectors at a located degeneracy.
///
/// The gauge is pinned by continuation from the corner states: the seed
/// `phi1 + R(E_S) (2i kappa_D . grad) phi1` is projected into the located
/// eigenspace, the basis is made exactly conjugation-adapted, and the
/// remaining discrete sign freedom is fixed by maximizing the overlap with
/// the seed.
pub fn gamma_params(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deformation: &Deformation,
    deg: &QuadraticDegeneracy,
    e_d: f64,
    d: Vec2,
) -> Result<DiracPoint> {
    let adapted = conjugation_adapted_pair(basis, potential, deformation, deg, e_d, d)?;
    cone_vectors(basis, deformation, deg, e_d, d, &adapted)
}

/// Conjugation-adapted orthonormal eigenbasis at a located twofold point,
/// gauge-pinned by continuation from the corner states.
pub struct AdaptedPair {
    pub phi1: Array1<Complex64>,
    pub phi2: Array1<Complex64>,
    pub gap_residual: f64,
    pub d1: bool,
    pub d2: bool,
    pub d3: bool,
}

pub fn conjugation_adapted_pair(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deformation: &Deformation,
    deg: &QuadraticDegeneracy,
    e_d: f64,
    d: Vec2,
) -> Result<AdaptedPair> {
    let metric = deformation.metric();
    let h = assemble(basis, d, potential, metric, Perturbations::default())?;
    let count = basis.dim().min(24);
    let sol = eigensolve(&h, count)?;
    // two states nearest e_d
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| {
        (sol.energies[a] - e_d)
            .abs()
            .partial_cmp(&(sol.energies[b] - e_d).abs())
            .unwrap()
    });
    let (i1, i2) = (order[0], order[1]);
    let gap_residual = (sol.energies[i1] - sol.energies[i2]).abs();
    let scale_e = deg.e_s.abs().max(1.0);
    let d1 = gap_residual < GAP_TOL * scale_e;
    let u = sol.vectors.column(i1).to_owned();
    let v = sol.vectors.column(i2).to_owned();

    // continuation seed from the corner states
    let m = m_point();
    let kappa = sub(d, m);
    let h_m = assemble(
        basis,
        m,
        potential,
        Mat2::IDENTITY,
        Perturbations::default(),
    )?;
    let solver = DeflatedResolvent::new(
        &h_m.matrix,
        deg.e_s,
        vec![deg.phi1.view(), deg.phi2.view()],
    )?;
    // (2i kappa . grad) -> multiplier -2 kappa . K_m
    let ks = basis.k_vectors(m);
    let mut rhs = deg.phi1.clone();
    for (i, z) in rhs.iter_mut().enumerate() {
        *z *= Complex64::new(-2.0 * (kappa[0] * ks[i][0] + kappa[1] * ks[i][1]), 0.0);
    }
    let corr = solver.apply(&rhs.view())?;
    let mut seed = deg.phi1.clone() + corr;
    normalize(&mut seed);

    // project the seed into span{u, v}
    let cu = inner(&u, &seed);
    let cv = inner(&v, &seed);
    let mut p1 = &u * cu + &v * cv;
    if norm_of(&p1) < 1e-6 {
        // continuation failed; fall back to the raw first state
        p1 = u.clone();
    }
    normalize(&mut p1);

    // conjugation-adapted pair: t1, t2 fixed under coefficient conjugation.
    // Within the invariant 2-space, any vector orthogonal to the fixed unit
    // vector t1 is a complex multiple of the second fixed direction, so the
    // better of the real/imaginary symmetrizations is always
    // well-conditioned; likewise at least one of the two solver residuals
    // against t1 has norm >= 1/sqrt(2).
    let i_unit = Complex64::new(0.0, 1.0);
    let sym_fixed = |w: &Array1<Complex64>| -> Array1<Complex64> {
        let cand_re = w + &w.mapv(|z| z.conj());
        let iw = w.mapv(|z| z * i_unit);
        let cand_im = &iw + &iw.mapv(|z| z.conj());
        if norm_of(&cand_re) >= norm_of(&cand_im) {
            cand_re
        } else {
            cand_im
        }
    };
    let mut t1 = sym_fixed(&p1);
    if norm_of(&t1) < 1e-8 {
        return Err(Error::Hypothesis(
            "conjugation adaptation failed: degenerate pair misidentified".into(),
        ));
    }
    normalize(&mut t1);
    let q_u = &u - &(&t1 * inner(&t1, &u));
    let q_v = &v - &(&t1 * inner(&t1, &v));
    let q = if norm_of(&q_u) >= norm_of(&q_v) { q_u } else { q_v };
    let mut t2 = sym_fixed(&q);
    if norm_of(&t2) < 1e-8 {
        return Err(Error::Hypothesis(
            "conjugation adaptation failed on the partner direction".into(),
        ));
    }
    normalize(&mut t2);
    // re-orthogonalize within the fixed real span
    let ov = inner(&t1, &t2);
    t2 = &t2 - &(&t1 * ov);
    normalize(&mut t2);

    let d2 = eigen_residual(&h.matrix, &t1, e_d) < 1e-6 * scale_e;
    let d3 = eigen_residual(&h.matrix, &t2, e_d) < 1e-6 * scale_e;

    // discrete gauge: phi1_D = (s1 t1 + i s2 t2)/sqrt(2), signs from the seed
    let sq = 1.0 / 2.0f64.sqrt();
    let mut best_phi: Option<Array1<Complex64>> = None;
    let mut best_ov = f64::NEG_INFINITY;
    for s1 in [1.0f64, -1.0] {
        for s2 in [1.0f64, -1.0] {
            let cand = (&t1 * Complex64::new(s1 * sq, 0.0))
                + (&t2 * Complex64::new(0.0, s2 * sq));
            let ov = inner(&seed, &cand).re;
            if ov > best_ov {
                best_ov = ov;
                best_phi = Some(cand);
            }
        }
    }
    let phi1d = best_phi.unwrap();
    Ok(AdaptedPair {
        phi2: phi1d.mapv(|z| z.conj()),
        phi1: phi1d,
        gap_residual,
        d1,
        d2,
        d3,
    })
}

fn cone_vectors(
    basis: &PlaneWaveBasis,
    deformation: &Deformation,
    deg: &QuadraticDegeneracy,
    e_d: f64,
    d: Vec2,
    adapted: &AdaptedPair,
) -> Result<DiracPoint> {
    let metric = deformation.metric();
    let scale_e = deg.e_s.abs().max(1.0);
    let _ = scale_e;
    let phi1d = &adapted.phi1;
    let phi2d = &adapted.phi2;

    // cone vectors: gamma_j = brackets of 2 (A K)_j between the adapted pair
    let ks_d = basis.k_vectors(d);
    let ak: Vec<Vec2> = ks_d.iter().map(|&k| metric.apply(k)).collect();
    let scale_e = deg.e_s.abs().max(1.0);
    let mut g0 = [0.0f64; 2];
    let mut z = [Complex64::new(0.0, 0.0); 2];
    for j in 0..2 {
        let w: Vec<f64> = ak.iter().map(|a| 2.0 * a[j]).collect();
        let diag = weighted_inner(phi1d, &w, phi1d);
        if diag.im.abs() > 1e-9 * scale_e {
            return Err(Error::Hypothesis(format!(
                "gamma0 component {j} has spurious imaginary part {:.3e}",
                diag.im
            )));
        }
        g0[j] = diag.re;
        z[j] = weighted_inner(phi1d, &w, phi2d);
    }
    let g1 = [z[0].re, z[1].re];
    let g2 = [-z[0].im, -z[1].im];
    let gscale = (norm(g1).powi(2) + norm(g2).powi(2)).sqrt().max(1e-12);
    let d4 = norm(g1) > 1e-6 * gscale.max(1.0) && norm(g2) > 1e-6 * gscale.max(1.0);

    Ok(DiracPoint {
        e_d,
        d,
        gammas: [g0, g1, g2],
        flags: DiracFlags {
            d1: adapted.d1,
            d2: adapted.d2,
            d3: adapted.d3,
            d4,
        },
        gap_residual: adapted.gap_residual,
    })
}

fn eigen_residual(h: &Array2<Complex64>, v: &Array1<Complex64>, e: f64) -> f64 {
    let hv = h.dot(v);
    (0..v.len())
        .map(|i| (hv[i] - Complex64::new(e, 0.0) * v[i]).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn norm_of(v: &Array1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut Array1<Complex64>) {
    let n = norm_of(v);
    if n > 0.0 {
        v.mapv_inplace(|z| z / n);
    }
}

/// Independent least-squares fit of sampled gaps and tilts around a located
/// degeneracy to the conical model: the half-gap squared is fitted as a
/// quadratic form `q^T G q` with `G = g1 g1^T + g2 g2^T`, and the band
/// midline as `gamma0 . q`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeFit {
    pub g: [[f64; 2]; 2],
    pub gamma0: Vec2,
    pub trace: f64,
    pub det: f64,
}

pub fn cone_fit(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deformation: &Deformation,
    e_d: f64,
    d: Vec2,
    radii: &[f64],
    n_directions: usize,
) -> Result<ConeFit> {
    let metric = deformation.metric();
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut gaps2: Vec<f64> = Vec::new();
    let mut tilt_rows: Vec<Vec2> = Vec::new();
    let mut tilts: Vec<f64> = Vec::new();
    for i in 0..n_directions {
        let th = std::f64::consts::PI * i as f64 / n_directions as f64;
        for &r in radii {
            let q = [r * th.cos(), r * th.sin()];
            let h = assemble(basis, add(d, q), potential, metric, Perturbations::default())?;
            let energies = crate::bloch::eigenvalues(&h, basis.dim().min(24))?;
            let mut order: Vec<usize> = (0..energies.len()).collect();
            order.sort_by(|&a, &b| {
                (energies[a] - e_d)
                    .abs()
                    .partial_cmp(&(energies[b] - e_d).abs())
                    .unwrap()
            });
            let (lo, hi) = (
                energies[order[0]].min(energies[order[1]]),
                energies[order[0]].max(energies[order[1]]),
            );
            rows.push([q[0] * q[0], 2.0 * q[0] * q[1], q[1] * q[1]]);
            gaps2.push((0.5 * (hi - lo)).powi(2));
            tilt_rows.push(q);
            tilts.push(0.5 * (hi + lo) - e_d);
        }
    }
    // normal equations for the 3-parameter quadratic form
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (row, &y) in rows.iter().zip(gaps2.iter()) {
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    let sol = solve3(&ata, &atb)
        .ok_or_else(|| Error::LinearSolve("cone fit normal equations singular".into()))?;
    let g = [[sol[0], sol[1]], [sol[1], sol[2]]];
    // 2-parameter fit for the tilt
    let mut m2 = [[0.0f64; 2]; 2];
    let mut b2 = [0.0f64; 2];
    for (q, &t) in tilt_rows.iter().zip(tilts.iter()) {
        for i in 0..2 {
            for j in 0..2 {
                m2[i][j] += q[i] * q[j];
            }
            b2[i] += q[i] * t;
        }
    }
    let det2 = m2[0][0] * m2[1][1] - m2[0][1] * m2[1][0];
    let gamma0 = [
        (b2[0] * m2[1][1] - b2[1] * m2[0][1]) / det2,
        (b2[1] * m2[0][0] - b2[0] * m2[1][0]) / det2,
    ];
    Ok(ConeFit {
        g,
        gamma0,
        trace: g[0][0] + g[1][1],
        det: g[0][0] * g[1][1] - g[0][1] * g[1][0],
    })
}

/// One step of a deformation-family trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub s: f64,
    pub tau_norm: f64,
    pub phi: f64,
    pub d_plus: Vec2,
    pub d_minus: Vec2,
    pub e_d: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryScan {
    pub points: Vec<TrajectoryPoint>,
    pub stop_reason: Option<String>,
}

/// Continuation along a one-parameter deformation family `s -> T(s)`
/// starting at the identity; Newton refinement is warm-started from the
/// previous step. Continuation failures stop the scan with a recorded
/// reason rather than an error.
pub fn trajectory_scan(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deg: &QuadraticDegeneracy,
    family: impl Fn(f64) -> Result<Deformation>,
    s_values: &[f64],
) -> Result<TrajectoryScan> {
    let m = m_point();
    let mut points = Vec::new();
    let mut stop_reason = None;
    let ev = ReducedMatrixEvaluator::new(basis, potential, deg);
    let mut warm: Option<(f64, Vec2)> = None;
    for &s in s_values {
        let def = family(s)?;
        if def.tau_norm == 0.0 {
            points.push(TrajectoryPoint {
                s,
                tau_norm: 0.0,
                phi: def.phi,
                d_plus: m,
                d_minus: m,
                e_d: deg.e_s + deg.betas[0] * def.tau0,
                gap: 0.0,
            });
            continue;
        }
        let seed = match (warm, predicted_dirac(deg, def.tau0, def.tau_norm, def.phi)) {
            (Some((eps, kap)), _) => (eps, kap),
            (None, Ok(PredictedSplit::Pair(p))) => (p.e_d - deg.e_s, sub(p.d_plus, m)),
            (None, _) => {
                stop_reason = Some(format!("no seed available at s = {s}"));
                break;
            }
        };
        let scale_e = deg.e_s.abs().max(1.0);
        let tau = [def.tau1, def.tau3];
        match newton_refine(&ev, seed.0, seed.1, def.tau0, tau, scale_e) {
            Ok((eps, kappa)) => {
                let d_plus = add(m, kappa);
                let d_minus = sub(scale(2.0, m), d_plus);
                let gap =
                    direct_gap(basis, potential, &def, d_plus, deg.e_s + eps).unwrap_or(f64::NAN);
                if !gap.is_finite() || gap > 1e-6 * scale_e {
                    stop_reason = Some(format!("gap loss at s = {s}: gap = {gap:.3e}"));
                    break;
                }
                warm = Some((eps, kappa));
                points.push(TrajectoryPoint {
                    s,
                    tau_norm: def.tau_norm,
                    phi: def.phi,
                    d_plus,
                    d_minus,
                    e_d: deg.e_s + eps,
                    gap,
                });
            }
            Err(e) => {
                stop_reason = Some(format!("continuation failed at s = {s}: {e}"));
                break;
            }
        }
    }
    Ok(TrajectoryScan {
        points,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degeneracy::find_quadratic_degeneracy;

    fn setup() -> (PlaneWaveBasis, SquareLatticePotential, QuadraticDegeneracy) {
        let basis = PlaneWaveBasis::new(6);
        let p = SquareLatticePotential::example(1.0, 0.5, 2);
        let deg = find_quadratic_degeneracy(&basis, &p, (10.0, 25.0)).unwrap();
        (basis, p, deg)
    }

    #[test]
    fn reduced_matrix_symmetries_and_root_property() {
        let (basis, p, deg) = setup();
        let ev = ReducedMatrixEvaluator::new(&basis, &p, &deg);
        let def = Deformation::tilt_with_tau1(0.005).unwrap();
        let tau = [def.tau1, def.tau3];
        let kappa = [0.02, 0.031];

        // h3 vanishes; kappa -> -kappa leaves the matrix unchanged
        let r = ev.eval(0.001, kappa, def.tau0, tau).unwrap();
        assert!(r.h[3].abs() < 1e-10);
        let rm = ev.eval(0.001, [-kappa[0], -kappa[1]], def.tau0, tau).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.m[i][j] - rm.m[i][j]).norm() < 1e-10);
            }
        }

        // det M = 0 exactly at eigenvalue branches
        let h = assemble(
            &basis,
            add(m_point(), kappa),
            &p,
            def.metric(),
            Perturbations::default(),
        )
        .unwrap();
        let energies = crate::bloch::eigenvalues(&h, 24).unwrap();
        let mut order: Vec<usize> = (0..24).collect();
        order.sort_by(|&a, &b| {
            (energies[a] - deg.e_s)
                .abs()
                .partial_cmp(&(energies[b] - deg.e_s).abs())
                .unwrap()
        });
        for &i in &order[..2] {
            let eps = energies[i] - deg.e_s;
            let r = ev.eval(eps, kappa, def.tau0, tau).unwrap();
            let det = r.m[0][0] * r.m[1][1] - r.m[0][1] * r.m[1][0];
            assert!(det.norm() < 1e-9, "det = {det:e}");
        }
        // away from eigenvalues the determinant is visibly nonzero
        let r = ev.eval(0.05, kappa, def.tau0, tau).unwrap();
        let det = r.m[0][0] * r.m[1][1] - r.m[0][1] * r.m[1][0];
        assert!(det.norm() > 1e-6);
    }

    #[test]
    fn reduced_matrix_vanishes_at_pure_dilation_degeneracy() {
        let (basis, p, deg) = setup();
        let ev = ReducedMatrixEvaluator::new(&basis, &p, &deg);
        // pure dilation: the twofold point persists at kappa = 0 with the
        // shifted energy; all entries of the reduced matrix vanish there
        let tau0 = 0.002;
        let h = assemble(
            &basis,
            m_point(),
            &p,
            Mat2::IDENTITY.scale(1.0 - tau0),
            Perturbations::default(),
        )
        .unwrap();
        let energies = crate::bloch::eigenvalues(&h, 24).unwrap();
        let mut order: Vec<usize> = (0..24).collect();
        order.sort_by(|&a, &b| {
            (energies[a] - deg.e_s)
                .abs()
                .partial_cmp(&(energies[b] - deg.e_s).abs())
                .unwrap()
        });
        let e_m = 0.5 * (energies[order[0]] + energies[order[1]]);
        assert!((energies[order[0]] - energies[order[1]]).abs() < 1e-10);
        let r = ev.eval(e_m - deg.e_s, [0.0, 0.0], tau0, [0.0, 0.0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(r.m[i][j].norm() < 1e-9, "entry ({i},{j}) = {:e}", r.m[i][j]);
            }
        }
        // and E_M tracks E_S + beta0 tau0 at first order
        assert!((e_m - deg.e_s - deg.betas[0] * tau0).abs() < 30.0 * tau0 * tau0);
    }

    #[test]
    fn locate_dirac_tilt_on_diagonal() {
        let (basis, p, deg) = setup();
        let def = Deformation::tilt_with_tau1(0.01).unwrap();
        let pair = locate_dirac(&basis, &p, &deg, &def).unwrap();
        // located on the diagonal selected by the signs, to solver tolerance
        assert!((pair.plus.d[0] - pair.plus.d[1]).abs() < 1e-9);
        // partner is the inversion through the corner
        let m = m_point();
        assert!((pair.minus.d[0] - (2.0 * m[0] - pair.plus.d[0])).abs() < 1e-9);
        assert!((pair.minus.d[1] - (2.0 * m[1] - pair.plus.d[1])).abs() < 1e-9);
        assert!(pair.plus.gap_residual < 1e-8 * deg.e_s);
        assert!(pair.plus.flags.d1 && pair.plus.flags.d2 && pair.plus.flags.d3);
        assert!(pair.plus.flags.d4);
        // cone vectors of the partner are the negatives
        for c in 1..3 {
            for j in 0..2 {
                assert!(
                    (pair.plus.gammas[c][j] + pair.minus.gammas[c][j]).abs()
                        < 1e-6 * pair.plus.gammas[c][j].abs().max(1e-3),
                    "gamma{c}[{j}]: {} vs {}",
                    pair.plus.gammas[c][j],
                    pair.minus.gammas[c][j]
                );
            }
        }
    }

    #[test]
    fn gamma_cross_checked_by_cone_fit() {
        let (basis, p, deg) = setup();
        let def = Deformation::tilt_with_tau1(0.01).unwrap();
        let pair = locate_dirac(&basis, &p, &deg, &def).unwrap();
        let fit = cone_fit(
            &basis,
            &p,
            &def,
            pair.plus.e_d,
            pair.plus.d,
            &[2e-4, 4e-4],
            8,
        )
        .unwrap();
        let g1 = pair.plus.gammas[1];
        let g2 = pair.plus.gammas[2];
        let trace_pred = norm(g1).powi(2) + norm(g2).powi(2);
        let det_pred = (g1[0] * g2[1] - g1[1] * g2[0]).powi(2);
        assert!(
            (fit.trace - trace_pred).abs() < 0.05 * trace_pred,
            "trace {} vs {}",
            fit.trace,
            trace_pred
        );
        assert!(
            (fit.det - det_pred).abs() < 0.05 * det_pred,
            "det {} vs {}",
            fit.det,
            det_pred
        );
        // fitted tilt matches the bracket gamma0
        for j in 0..2 {
            assert!(
                (fit.gamma0[j] - pair.plus.gammas[0][j]).abs()
                    < 5e-3 * pair.plus.gammas[0][j].abs().max(0.1)
            );
        }
    }

    #[test]
    fn generic_family_traces_curved_mirrored_trajectories() {
        // a family with both shear components active: the split direction
        // rotates with s, so the trajectory curves away from any straight
        // line; the partner stays the exact mirror through the corner
        let (basis, p, deg) = setup();
        let family = |s: f64| {
            let xi = 0.004 * s;
            let eta = 1.0 - 0.004 * s;
            let (sn, cs) = (xi.sin(), xi.cos());
            let tilt = crate::linalg2::Mat2([[cs, sn], [sn, cs]]);
            let ax = crate::linalg2::Mat2([[1.0, 0.0], [0.0, eta]]);
            Deformation::from_matrix(tilt.mul(&ax))
        };
        let scan = trajectory_scan(
            &basis,
            &p,
            &deg,
            family,
            &[0.5, 1.0, 1.5, 2.0, 2.5],
        )
        .unwrap();
        assert!(scan.stop_reason.is_none(), "{:?}", scan.stop_reason);
        let m = m_point();
        for pt in &scan.points {
            let mirror = sub(scale(2.0, m), pt.d_plus);
            assert!(norm(sub(pt.d_minus, mirror)) < 1e-12);
        }
        // curvature: the displacement direction rotates along the scan
        let angles: Vec<f64> = scan
            .points
            .iter()
            .map(|pt| {
                let d = sub(pt.d_plus, m);
                d[1].atan2(d[0])
            })
            .collect();
        let total_turn = (angles.last().unwrap() - angles.first().unwrap()).abs();
        assert!(total_turn > 1e-3, "trajectory unexpectedly straight: {angles:?}");
    }

    #[test]
    fn trajectory_starts_at_corner_and_stays_on_diagonal() {
        let (basis, p, deg) = setup();
        let scan = trajectory_scan(
            &basis,
            &p,
            &deg,
            |s| Deformation::tilt(0.004 * s),
            &[0.0, 0.5, 1.0, 1.5, 2.0],
        )
        .unwrap();
        assert!(scan.stop_reason.is_none(), "{:?}", scan.stop_reason);
        assert_eq!(scan.points.len(), 5);
        let m = m_point();
        assert!((scan.points[0].d_plus[0] - m[0]).abs() < 1e-15);
        for pt in &scan.points[1..] {
            assert!((pt.d_plus[0] - pt.d_plus[1]).abs() < 1e-9);
            assert!(pt.gap < 1e-7);
        }
        // displacement grows with s
        let disp: Vec<f64> = scan
            .points
            .iter()
            .map(|pt| norm(sub(pt.d_plus, m)))
            .collect();
        for w in disp.windows(2) {
            assert!(w[1] > w[0] - 1e-12);
        }
    }
}
