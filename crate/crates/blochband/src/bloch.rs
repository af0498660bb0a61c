//! Assembly and solution of truncated Floquet-Bloch eigenproblems for the
//! pushforward operator `-div A grad + V` and its symmetry-broken variants,
//! rotation-eigenspace classification at the corner quasimomentum, and
//! deflated resolvent solves.

use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{Factorize, Solve};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::PlaneWaveBasis;
use crate::deformation::Deformation;
use crate::error::{Error, Result};
use crate::linalg2::{Mat2, Vec2};
use crate::potential::{EvenScalarField, OddPotential, SquareLatticePotential};

pub const HERMITICITY_TOL: f64 = 1e-13;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const ORTHONORMALITY_TOL: f64 = 1e-12;
/// Two levels count as degenerate when closer than this times max(1, |E|).
pub const DEGENERACY_TOL: f64 = 1e-8;
pub const LABEL_PURITY_TOL: f64 = 1e-8;

/// Optional perturbations entering the assembled operator.
#[derive(Clone, Copy, Default)]
pub struct Perturbations<'a> {
    /// Parity-breaking multiplication operator `delta_w * W`.
    pub odd: Option<(f64, &'a OddPotential)>,
    /// Conjugation-breaking magneto-optic term `delta_a * div(a sigma2 grad)`.
    pub magneto: Option<(f64, &'a EvenScalarField)>,
}

/// Assembled Bloch Hamiltonian at one quasimomentum.
pub struct BlochHamiltonian {
    pub k: Vec2,
    pub metric: Mat2,
    pub matrix: Array2<Complex64>,
}

/// Eigenpairs at one quasimomentum, ascending; `vectors` stores eigenvector
/// coefficients as columns.
pub struct EigenSolution {
    pub k: Vec2,
    pub energies: Vec<f64>,
    pub vectors: Array2<Complex64>,
}

/// Rotation eigenvalue of a state at the corner quasimomentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationLabel {
    /// eigenvalue +1
    One,
    /// eigenvalue +i
    PlusI,
    /// eigenvalue -1
    MinusOne,
    /// eigenvalue -i
    MinusI,
}

impl RotationLabel {
    pub fn eigenvalue(self) -> Complex64 {
        match self {
            RotationLabel::One => Complex64::new(1.0, 0.0),
            RotationLabel::PlusI => Complex64::new(0.0, 1.0),
            RotationLabel::MinusOne => Complex64::new(-1.0, 0.0),
            RotationLabel::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    pub const ALL: [RotationLabel; 4] = [
        RotationLabel::One,
        RotationLabel::PlusI,
        RotationLabel::MinusOne,
        RotationLabel::MinusI,
    ];
}

/// Builds the matrix of `-div A grad + V (+ dw W + da div a sigma2 grad)` at
/// quasimomentum `k` in the plane-wave basis:
/// kinetic part `K_m . A K_m` on the diagonal with `K_m = k + m1 k1 + m2 k2`,
/// potential part `V_{m-m'}`, magneto-optic part `-a_{m-m'} K_m . sigma2 K_{m'}`.
pub fn assemble(
    basis: &PlaneWaveBasis,
    k: Vec2,
    potential: &SquareLatticePotential,
    metric: Mat2,
    perturbations: Perturbations,
) -> Result<BlochHamiltonian> {
    let (lo, _hi) = metric.sym_eigenvalues();
    if lo <= 0.0 {
        return Err(Error::Config(format!(
            "metric not positive definite: lambda- = {lo:.3e}"
        )));
    }
    let dim = basis.dim();
    let ks = basis.k_vectors(k);
    let mut h = Array2::<Complex64>::zeros((dim, dim));
    for i in 0..dim {
        h[(i, i)] = Complex64::new(metric.quad(ks[i], ks[i]), 0.0);
    }
    for (s, v) in potential.coeffs() {
        add_convolution(basis, &mut h, s, Complex64::new(v, 0.0));
    }
    if let Some((dw, w)) = perturbations.odd {
        for (s, v) in w.coeffs() {
            add_convolution(basis, &mut h, s, dw * v);
        }
    }
    if let Some((da, a)) = perturbations.magneto {
        // div(a sigma2 grad) couples m' -> m with entry -a_{m-m'} K_m . sigma2 K_{m'}
        // = i a_{m-m'} (K_m x K_{m'}).
        for (s, v) in a.coeffs() {
            if v == 0.0 {
                continue;
            }
            for (i, &m) in basis.indices().iter().enumerate() {
                if let Some(j) = basis.position(m.sub(s)) {
                    let cross = ks[i][0] * ks[j][1] - ks[i][1] * ks[j][0];
                    h[(i, j)] += Complex64::new(0.0, da * v * cross);
                }
            }
        }
    }
    let ham = BlochHamiltonian { k, metric, matrix: h };
    let dev = ham.hermiticity_deviation();
    let scale = ham.matrix.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if dev > HERMITICITY_TOL * scale.max(1.0) {
        return Err(Error::LinearSolve(format!(
            "assembled matrix not Hermitian: deviation {dev:.3e}"
        )));
    }
    Ok(ham)
}

fn add_convolution(
    basis: &PlaneWaveBasis,
    h: &mut Array2<Complex64>,
    s: crate::lattice::FourierIndex,
    v: Complex64,
) {
    if v.norm() == 0.0 {
        return;
    }
    for (i, &m) in basis.indices().iter().enumerate() {
        if let Some(j) = basis.position(m.sub(s)) {
            h[(i, j)] += v;
        }
    }
}

impl BlochHamiltonian {
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

/// Lowest `count` eigenpairs with residual and orthonormality checks.
pub fn eigensolve(h: &BlochHamiltonian, count: usize) -> Result<EigenSolution> {
    let dim = h.matrix.nrows();
    assert!(count <= dim, "count exceeds basis dimension");
    let (w, mut v) = crate::eigh::eigh(&h.matrix)
        .map_err(|e| match e {
            Error::Eigensolver(_, _, info) => Error::Eigensolver(h.k[0], h.k[1], info),
            other => other,
        })?;
    fix_gauge(&mut v);
    let energies: Vec<f64> = w.iter().take(count).cloned().collect();
    let vectors = v.slice(ndarray::s![.., ..count]).to_owned();
    // residual / orthonormality invariants
    let hnorm = h.matrix.iter().fold(0.0f64, |a, z| a.max(z.norm())) * dim as f64;
    let hv = h.matrix.dot(&vectors);
    for i in 0..count {
        let mut res = 0.0f64;
        for r in 0..dim {
            res += (hv[(r, i)] - vectors[(r, i)] * energies[i]).norm_sqr();
        }
        if res.sqrt() > RESIDUAL_TOL * hnorm.max(1.0) {
            return Err(Error::Eigensolver(h.k[0], h.k[1], -1));
        }
        for j in 0..=i {
            let mut ov = Complex64::new(0.0, 0.0);
            for r in 0..dim {
                ov += vectors[(r, i)].conj() * vectors[(r, j)];
            }
            let expected = if i == j { 1.0 } else { 0.0 };
            if (ov - expected).norm() > ORTHONORMALITY_TOL {
                return Err(Error::Eigensolver(h.k[0], h.k[1], -2));
            }
        }
    }
    Ok(EigenSolution {
        k: h.k,
        energies,
        vectors,
    })
}

/// Eigenvalues only.
pub fn eigenvalues(h: &BlochHamiltonian, count: usize) -> Result<Vec<f64>> {
    let w = crate::eigh::eigvalsh(&h.matrix)?;
    Ok(w.iter().take(count).cloned().collect())
}

/// Phase convention: the largest-magnitude coefficient is made real positive.
pub fn fix_gauge(v: &mut Array2<Complex64>) {
    let (n, cols) = v.dim();
    for c in 0..cols {
        let mut best = 0usize;
        let mut mag = -1.0f64;
        for r in 0..n {
            let m = v[(r, c)].norm();
            if m > mag {
                mag = m;
                best = r;
            }
        }
        if mag > 0.0 {
            let phase = v[(best, c)] / mag;
            for r in 0..n {
                v[(r, c)] = v[(r, c)] / phase;
            }
        }
    }
}

/// Conjugation of coefficients: the combined parity-conjugation operator on
/// pseudoperiodic coefficient vectors (it leaves the basis indices fixed).
pub fn pc_conjugate(v: &ArrayView1<Complex64>) -> Array1<Complex64> {
    v.mapv(|z| z.conj())
}

/// Fourfold rotation operator on the basis at the corner quasimomentum:
/// the exact permutation `m -> (m2, -m1-1)` on the invariant sub-box,
/// zero-extended outside.
pub struct RotationOperatorM {
    map: Vec<Option<usize>>,
}

impl RotationOperatorM {
    pub fn new(basis: &PlaneWaveBasis) -> Self {
        let n = basis.cutoff() as i32;
        let map = basis
            .indices()
            .iter()
            .map(|&m| {
                let inside = m.m1 >= -n && m.m1 < n && m.m2 >= -n && m.m2 < n;
                if inside {
                    basis.position(m.rot_m())
                } else {
                    None
                }
            })
            .collect();
        RotationOperatorM { map }
    }

    pub fn apply(&self, v: &ArrayView1<Complex64>) -> Array1<Complex64> {
        let mut out = Array1::<Complex64>::zeros(v.len());
        for (i, target) in self.map.iter().enumerate() {
            if let Some(j) = *target {
                out[j] = v[i];
            }
        }
        out
    }

    /// Fraction of the norm lost to the boundary ring (zero on the sub-box).
    pub fn norm_defect(&self, v: &ArrayView1<Complex64>) -> f64 {
        let nin: f64 = self
            .map
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_some())
            .map(|(i, _)| v[i].norm_sqr())
            .sum();
        let tot: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if tot == 0.0 {
            0.0
        } else {
            1.0 - nin / tot
        }
    }
}

/// Rotation labels of a set of states at the corner quasimomentum.
///
/// Refuses classification when the metric breaks the fourfold symmetry.
/// A label is assigned only when the projected state keeps at least
/// `1 - LABEL_PURITY_TOL` of its norm in the claimed eigenspace.
pub fn classify_rotation_eigenspace(
    basis: &PlaneWaveBasis,
    states: &Array2<Complex64>,
    deformation: &Deformation,
) -> Result<Vec<RotationLabel>> {
    if deformation.tau1.abs() > 1e-12 || deformation.tau3.abs() > 1e-12 {
        return Err(Error::RotationBroken {
            tau1: deformation.tau1,
            tau3: deformation.tau3,
        });
    }
    let rot = RotationOperatorM::new(basis);
    let mut labels = Vec::with_capacity(states.ncols());
    for c in 0..states.ncols() {
        let v = states.column(c);
        let rv = rot.apply(&v);
        // projections onto the four eigenspaces: P_s = (1/4) sum_j s^{-j} R^j
        let mut best = RotationLabel::One;
        let mut best_weight = -1.0f64;
        let mut r_pows: Vec<Array1<Complex64>> = vec![v.to_owned(), rv];
        r_pows.push(rot.apply(&r_pows[1].view()));
        r_pows.push(rot.apply(&r_pows[2].view()));
        for label in RotationLabel::ALL {
            let s = label.eigenvalue();
            let mut proj = Array1::<Complex64>::zeros(v.len());
            let mut coef = Complex64::new(1.0, 0.0);
            for rp in &r_pows {
                proj = proj + rp.mapv(|z| z * coef);
                coef = coef / s;
            }
            let weight = proj.iter().map(|z| z.norm_sqr()).sum::<f64>() / 16.0;
            if weight > best_weight {
                best_weight = weight;
                best = label;
            }
        }
        if best_weight < 1.0 - LABEL_PURITY_TOL {
            return Err(Error::Hypothesis(format!(
                "state {c} not in a single rotation eigenspace (best weight {best_weight:.12})"
            )));
        }
        labels.push(best);
    }
    Ok(labels)
}

/// Parity-conjugation character of states at an invariant quasimomentum:
/// `+1` when the state is fixed by coefficient conjugation, `-1` when it is
/// negated, `None` when neither holds at the purity tolerance (the label is
/// then a gauge question, not a symmetry one: rephasing mixes the sectors).
pub fn pc_parity_labels(states: &Array2<Complex64>) -> Vec<Option<i8>> {
    let mut out = Vec::with_capacity(states.ncols());
    for c in 0..states.ncols() {
        let v = states.column(c);
        let mut plus = 0.0f64;
        let mut minus = 0.0f64;
        let mut nrm = 0.0f64;
        for z in v.iter() {
            // v = fixed part + i * fixed part: split by real/imaginary
            // content relative to conjugation
            let fixed = 0.5 * (z + z.conj());
            let anti = 0.5 * (z - z.conj());
            plus += fixed.norm_sqr();
            minus += anti.norm_sqr();
            nrm += z.norm_sqr();
        }
        if nrm == 0.0 {
            out.push(None);
        } else if plus / nrm > 1.0 - LABEL_PURITY_TOL {
            out.push(Some(1));
        } else if minus / nrm > 1.0 - LABEL_PURITY_TOL {
            out.push(Some(-1));
        } else {
            out.push(None);
        }
    }
    out
}

/// Deflated resolvent solve: returns `u` orthogonal to the kernel with
/// `(H - E_S) u = P_perp rhs`, through a bordered system
/// `[[H - E_S, B], [B^H, 0]]` where `B` stacks the kernel basis.
pub struct DeflatedResolvent<'a> {
    factorized: ndarray_linalg::LUFactorized<ndarray::OwnedRepr<Complex64>>,
    kernel: Vec<ArrayView1<'a, Complex64>>,
    dim: usize,
}

impl<'a> DeflatedResolvent<'a> {
    /// Factorizes the bordered operator `H - shift` deflated by `kernel`.
    pub fn new(
        matrix: &Array2<Complex64>,
        shift: f64,
        kernel: Vec<ArrayView1<'a, Complex64>>,
    ) -> Result<Self> {
        let dim = matrix.nrows();
        let nk = kernel.len();
        let mut big = Array2::<Complex64>::zeros((dim + nk, dim + nk));
        for i in 0..dim {
            for j in 0..dim {
                big[(i, j)] = matrix[(i, j)];
            }
            big[(i, i)] -= Complex64::new(shift, 0.0);
        }
        for (c, v) in kernel.iter().enumerate() {
            for i in 0..dim {
                big[(i, dim + c)] = v[i];
                big[(dim + c, i)] = v[i].conj();
            }
        }
        crate::eigh::init_single_threaded_blas();
        let factorized = big
            .factorize()
            .map_err(|e| Error::LinearSolve(format!("bordered factorization failed: {e}")))?;
        Ok(DeflatedResolvent {
            factorized,
            kernel,
            dim,
        })
    }

    pub fn apply(&self, rhs: &ArrayView1<Complex64>) -> Result<Array1<Complex64>> {
        // project out the kernel components of the right-hand side
        let mut r = rhs.to_owned();
        for v in &self.kernel {
            let ov: Complex64 = v.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum();
            for i in 0..self.dim {
                r[i] -= v[i] * ov;
            }
        }
        let mut b = Array1::<Complex64>::zeros(self.dim + self.kernel.len());
        for i in 0..self.dim {
            b[i] = r[i];
        }
        let sol = self
            .factorized
            .solve(&b)
            .map_err(|e| Error::LinearSolve(format!("bordered solve failed: {e}")))?;
        let u = sol.slice(ndarray::s![..self.dim]).to_owned();
        Ok(u)
    }
}

/// Convenience wrapper matching the operation contract: one deflated solve.
pub fn resolvent_apply(
    matrix: &Array2<Complex64>,
    e_s: f64,
    kernel: &[ArrayView1<Complex64>],
    rhs: &ArrayView1<Complex64>,
) -> Result<Array1<Complex64>> {
    let solver = DeflatedResolvent::new(matrix, e_s, kernel.to_vec())?;
    let u = solver.apply(rhs)?;
    // residual check: (H - E_S) u = P_perp rhs
    let mut target = rhs.to_owned();
    for v in kernel {
        let ov: Complex64 = v.iter().zip(target.iter()).map(|(a, b)| a.conj() * b).sum();
        for i in 0..target.len() {
            target[i] -= v[i] * ov;
        }
    }
    let mut res = 0.0f64;
    let hu = matrix.dot(&u);
    for i in 0..u.len() {
        res += (hu[i] - Complex64::new(e_s, 0.0) * u[i] - target[i]).norm_sqr();
    }
    let rhs_norm: f64 = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if res.sqrt() > RESIDUAL_TOL * rhs_norm.max(1e-300) {
        return Err(Error::DeflationSingular(res.sqrt()));
    }
    Ok(u)
}

/// Band energies along a path or grid of quasimomenta, in input order.
pub fn band_structure(
    basis: &PlaneWaveBasis,
    potential: &SquareLatticePotential,
    deformation: &Deformation,
    kpoints: &[Vec2],
    count: usize,
) -> Result<Vec<(Vec2, Vec<f64>)>> {
    let metric = deformation.metric();
    kpoints
        .par_iter()
        .map(|&k| {
            let h = assemble(basis, k, potential, metric, Perturbations::default())?;
            let e = eigenvalues(&h, count)?;
            Ok((k, e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::m_point;
    use std::f64::consts::PI;

    fn free_at_m(n: u32) -> (PlaneWaveBasis, BlochHamiltonian) {
        let basis = PlaneWaveBasis::new(n);
        let v = SquareLatticePotential::example(0.0, 0.0, 1);
        let h = assemble(
            &basis,
            m_point(),
            &v,
            Mat2::IDENTITY,
            Perturbations::default(),
        )
        .unwrap();
        (basis, h)
    }

    #[test]
    fn free_operator_fourfold_ground_cluster() {
        let (basis, h) = free_at_m(4);
        // diagonal matrix with |M + m k|^2; lowest value 2 pi^2, multiplicity 4
        let sol = eigensolve(&h, 6).unwrap();
        for i in 0..4 {
            assert!((sol.energies[i] - 2.0 * PI * PI).abs() < 1e-12);
        }
        assert!(sol.energies[4] > 2.0 * PI * PI + 1.0);
        // the four lowest modes
        let expected = [
            crate::lattice::FourierIndex::new(0, 0),
            crate::lattice::FourierIndex::new(-1, 0),
            crate::lattice::FourierIndex::new(0, -1),
            crate::lattice::FourierIndex::new(-1, -1),
        ];
        for m in expected {
            let i = basis.position(m).unwrap();
            assert!((h.matrix[(i, i)].re - 2.0 * PI * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn deformed_kinetic_diagonal() {
        let basis = PlaneWaveBasis::new(3);
        let v = SquareLatticePotential::example(0.0, 0.0, 1);
        let d = Deformation::uniaxial(0.8).unwrap();
        let a = d.metric();
        let h = assemble(&basis, [0.3, -0.4], &v, a, Perturbations::default()).unwrap();
        let ks = basis.k_vectors([0.3, -0.4]);
        for i in 0..basis.dim() {
            assert!((h.matrix[(i, i)].re - a.quad(ks[i], ks[i])).abs() < 1e-12);
            assert!(h.matrix[(i, i)].im.abs() < 1e-15);
        }
    }

    #[test]
    fn magneto_optic_diagonal_vanishes_and_hermitian() {
        let basis = PlaneWaveBasis::new(3);
        let v = SquareLatticePotential::example(1.0, 0.5, 2);
        let a = EvenScalarField::cosine(0.4, 1.0, 2);
        let h = assemble(
            &basis,
            m_point(),
            &v,
            Mat2::IDENTITY,
            Perturbations {
                magneto: Some((0.01, &a)),
                ..Default::default()
            },
        )
        .unwrap();
        // K x K = 0: the a0-part contributes nothing anywhere, and the
        // diagonal receives no magneto-optic contribution at all.
        for i in 0..basis.dim() {
            let ks = basis.k_vectors(m_point());
            let kin = Mat2::IDENTITY.quad(ks[i], ks[i]);
            assert!((h.matrix[(i, i)].re - kin).abs() < 1e-12);
            assert!(h.matrix[(i, i)].im.abs() < 1e-15);
        }
        assert!(h.hermiticity_deviation() < 1e-14);
    }

    #[test]
    fn rotation_operator_unitary_order_four() {
        let basis = PlaneWaveBasis::new(4);
        let rot = RotationOperatorM::new(&basis);
        // on the invariant sub-box the permutation is exactly unitary and of
        // order four
        let n = basis.cutoff() as i32;
        let mut v = Array1::<Complex64>::zeros(basis.dim());
        for (i, m) in basis.indices().iter().enumerate() {
            if m.m1 >= -n && m.m1 < n && m.m2 >= -n && m.m2 < n {
                v[i] = Complex64::new((i % 7) as f64 + 0.5, (i % 3) as f64 - 1.0);
            }
        }
        let norm0: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let mut w = v.clone();
        for _ in 0..4 {
            w = rot.apply(&w.view());
            let n1: f64 = w.iter().map(|z| z.norm_sqr()).sum();
            assert!((n1 - norm0).abs() < 1e-12 * norm0);
        }
        let diff: f64 = w
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-12);
    }

    #[test]
    fn free_cluster_classifies_into_all_four_labels() {
        let (basis, h) = free_at_m(4);
        let sol = eigensolve(&h, 4).unwrap();
        // The solver returns an arbitrary orthonormal basis of the fourfold
        // space; project onto rotation eigenspaces through the 4x4 action.
        let rot = RotationOperatorM::new(&basis);
        let mut action = Array2::<Complex64>::zeros((4, 4));
        for j in 0..4 {
            let rv = rot.apply(&sol.vectors.column(j));
            for i in 0..4 {
                let vi = sol.vectors.column(i);
                let ov: Complex64 = vi.iter().zip(rv.iter()).map(|(a, b)| a.conj() * b).sum();
                action[(i, j)] = ov;
            }
        }
        // eigenvalues of the 4x4 unitary action must be i^0..i^3, one each
        let (_, _) = (0, 0);
        let mut found = [false; 4];
        // power iteration is overkill: evaluate the characteristic values by
        // checking the projectors' traces instead
        for (li, label) in RotationLabel::ALL.iter().enumerate() {
            let s = label.eigenvalue();
            // trace of P_s = (1/4) sum_j s^{-j} A^j
            let mut p = Array2::<Complex64>::eye(4);
            let mut tr = Complex64::new(0.0, 0.0);
            let mut coef = Complex64::new(1.0, 0.0);
            for _ in 0..4 {
                for d in 0..4 {
                    tr += p[(d, d)] * coef;
                }
                p = action.dot(&p);
                coef = coef / s;
            }
            let weight = (tr / 4.0).re;
            assert!((weight - 1.0).abs() < 1e-9, "label {li} weight {weight}");
            found[li] = true;
        }
        assert!(found.iter().all(|&f| f));
    }

    #[test]
    fn resolvent_on_free_operator_is_diagonal() {
        let (basis, h) = free_at_m(3);
        let sol = eigensolve(&h, 4).unwrap();
        let e_s = 2.0 * PI * PI;
        let kernel: Vec<_> = (0..4).map(|i| sol.vectors.column(i)).collect();
        // rhs: a single non-degenerate plane wave e_m
        let m = crate::lattice::FourierIndex::new(1, 1);
        let i = basis.position(m).unwrap();
        let mut rhs = Array1::<Complex64>::zeros(basis.dim());
        rhs[i] = Complex64::new(1.0, 0.0);
        let u = resolvent_apply(&h.matrix, e_s, &kernel, &rhs.view()).unwrap();
        let expected = 1.0 / (h.matrix[(i, i)].re - e_s);
        assert!((u[i].re - expected).abs() < 1e-12);
        for j in 0..basis.dim() {
            if j != i {
                assert!(u[j].norm() < 1e-12);
            }
        }
        // rhs in the kernel maps to zero
        let u0 = resolvent_apply(&h.matrix, e_s, &kernel, &kernel[0]).unwrap();
        assert!(u0.iter().map(|z| z.norm()).fold(0.0f64, f64::max) < 1e-12);
    }

    #[test]
    fn resolvent_defining_property_random_rhs() {
        let basis = PlaneWaveBasis::new(3);
        let v = SquareLatticePotential::example(1.0, 0.5, 2);
        let h = assemble(
            &basis,
            m_point(),
            &v,
            Mat2::IDENTITY,
            Perturbations::default(),
        )
        .unwrap();
        let sol = eigensolve(&h, 4).unwrap();
        // the twofold level is the middle pair
        let e_s = 0.5 * (sol.energies[1] + sol.energies[2]);
        let kernel: Vec<_> = vec![sol.vectors.column(1), sol.vectors.column(2)];
        let mut state = 99u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let rhs = Array1::from_shape_fn(basis.dim(), |_| Complex64::new(rnd(), rnd()));
        let u = resolvent_apply(&h.matrix, e_s, &kernel, &rhs.view()).unwrap();
        // (H - E_S) u = P_perp rhs  (checked internally; recheck the pieces)
        let mut target = rhs.clone();
        for v in &kernel {
            let ov: Complex64 = v.iter().zip(target.iter()).map(|(a, b)| a.conj() * b).sum();
            for i in 0..target.len() {
                target[i] -= v[i] * ov;
            }
        }
        let hu = h.matrix.dot(&u);
        let res: f64 = (0..u.len())
            .map(|i| (hu[i] - Complex64::new(e_s, 0.0) * u[i] - target[i]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let nrm: f64 = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(res < 1e-10 * nrm);
        // u is orthogonal to the kernel
        for v in &kernel {
            let ov: Complex64 = v.iter().zip(u.iter()).map(|(a, b)| a.conj() * b).sum();
            assert!(ov.norm() < 1e-10);
        }
    }

    #[test]
    fn free_bands_along_path_are_exact_plane_waves() {
        let basis = PlaneWaveBasis::new(4);
        let v = SquareLatticePotential::example(0.0, 0.0, 1);
        let d = Deformation::identity();
        let kpts: Vec<Vec2> = (0..20)
            .map(|i| {
                let t = i as f64 / 19.0;
                [t * PI, t * PI]
            })
            .collect();
        let bands = band_structure(&basis, &v, &d, &kpts, 4).unwrap();
        for (k, energies) in bands {
            let mut exact: Vec<f64> = basis
                .k_vectors(k)
                .iter()
                .map(|kk| kk[0] * kk[0] + kk[1] * kk[1])
                .collect();
            exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (i, e) in energies.iter().enumerate() {
                assert!((e - exact[i]).abs() < 1e-10, "band {i} at {k:?}");
            }
        }
    }

    #[test]
    fn classification_refused_for_symmetry_breaking_deformation() {
        let basis = PlaneWaveBasis::new(3);
        let states = Array2::<Complex64>::eye(basis.dim());
        let d = Deformation::tilt(0.05).unwrap();
        assert!(matches!(
            classify_rotation_eigenspace(&basis, &states, &d),
            Err(Error::RotationBroken { .. })
        ));
    }

    #[test]
    fn pc_parity_classification() {
        let mut states = Array2::<Complex64>::zeros((4, 3));
        // conjugation-fixed
        states[(0, 0)] = Complex64::new(0.6, 0.0);
        states[(1, 0)] = Complex64::new(0.8, 0.0);
        // negated by conjugation
        states[(2, 1)] = Complex64::new(0.0, 1.0);
        // mixed
        states[(0, 2)] = Complex64::new(0.6, 0.0);
        states[(3, 2)] = Complex64::new(0.0, 0.8);
        let labels = pc_parity_labels(&states);
        assert_eq!(labels, vec![Some(1), Some(-1), None]);
    }

    #[test]
    fn gauge_covariance_under_dual_lattice_shift() {
        let basis = PlaneWaveBasis::new(8);
        let v = SquareLatticePotential::example(1.0, 0.5, 2);
        let d = Deformation::identity();
        let k = [0.3, -0.7];
        let k_shift = [0.3 + 2.0 * PI, -0.7];
        let b1 = band_structure(&basis, &v, &d, &[k], 6).unwrap();
        let b2 = band_structure(&basis, &v, &d, &[k_shift], 6).unwrap();
        for i in 0..6 {
            assert!(
                (b1[0].1[i] - b2[0].1[i]).abs() < 1e-10,
                "band {i}: {} vs {}",
                b1[0].1[i],
                b2[0].1[i]
            );
        }
    }
}
