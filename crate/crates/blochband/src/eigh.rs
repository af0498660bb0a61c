//! Dense Hermitian eigensolver backed by LAPACK `zheevd` (divide and conquer).
//!
//! `ndarray-linalg`'s `eigh` routes through `zheev`, which is several times
//! slower at the matrix sizes used here; Brillouin-zone sweeps make that cost
//! dominant, so we call `zheevd_` directly.

use std::sync::Once;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

extern "C" {
    fn openblas_set_num_threads(n: i32);
}

static BLAS_INIT: Once = Once::new();

/// Forces single-threaded BLAS/LAPACK. Parallelism lives at the k-point
/// level (rayon); OpenBLAS's own threading oversubscribes and its threaded
/// drivers need more stack than test threads provide.
pub fn init_single_threaded_blas() {
    BLAS_INIT.call_once(|| unsafe {
        openblas_set_num_threads(1);
    });
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and the matrix whose column `i`
/// is the `i`-th eigenvector.
pub fn eigh(h: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    init_single_threaded_blas();
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "matrix must be square");
    // We hand LAPACK the row-major buffer and declare UPLO = 'L'. LAPACK then
    // reads the column-major lower triangle, i.e. our conjugated matrix H^T;
    // its eigenvalues agree with H's and its eigenvectors are the complex
    // conjugates of H's, which we undo below.
    let mut a: Vec<Complex64> = h.iter().cloned().collect();
    let w = zheevd_inplace(n, &mut a, true)?;
    let mut vectors = Array2::<Complex64>::zeros((n, n));
    for (i, row) in a.chunks_exact(n).enumerate() {
        // LAPACK column i lives in our row i.
        for (j, z) in row.iter().enumerate() {
            vectors[(j, i)] = z.conj();
        }
    }
    Ok((Array1::from_vec(w), vectors))
}

/// Eigenvalues only (ascending), skipping the eigenvector back-transform.
pub fn eigvalsh(h: &Array2<Complex64>) -> Result<Array1<f64>> {
    init_single_threaded_blas();
    let n = h.nrows();
    let mut a: Vec<Complex64> = h.iter().cloned().collect();
    let w = zheevd_inplace(n, &mut a, false)?;
    Ok(Array1::from_vec(w))
}

fn zheevd_inplace(n: usize, a: &mut [Complex64], vectors: bool) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let nn = n as i32;
    let jobz = if vectors { b'V' } else { b'N' } as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    unsafe {
        let query = -1i32;
        let mut wkopt = Complex64::new(0.0, 0.0);
        let mut rwkopt = 0.0f64;
        let mut iwkopt = 0i32;
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &nn,
            a.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            &mut wkopt as *mut _ as *mut _,
            &query,
            &mut rwkopt,
            &query,
            &mut iwkopt,
            &query,
            &mut info,
        );
        if info != 0 {
            return Err(Error::Eigensolver(f64::NAN, f64::NAN, info));
        }
        let lwork = wkopt.re as i32;
        let lrwork = rwkopt as i32;
        let liwork = iwkopt;
        let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
        let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
        let mut iwork = vec![0i32; liwork.max(1) as usize];
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &nn,
            a.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver(f64::NAN, f64::NAN, info));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_by_two_pauli() {
        // sigma2 has eigenvalues -1, +1
        let h = array![
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0)],
            [Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)]
        ];
        let (w, v) = eigh(&h).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14);
        assert!((w[1] - 1.0).abs() < 1e-14);
        for i in 0..2 {
            let col = v.column(i);
            let hv: Vec<Complex64> = (0..2)
                .map(|r| h[(r, 0)] * col[0] + h[(r, 1)] * col[1])
                .collect();
            for r in 0..2 {
                assert!((hv[r] - col[r] * w[i]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn residual_and_orthonormality_random_hermitian() {
        let n = 40;
        let mut h = Array2::<Complex64>::zeros((n, n));
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in 0..=i {
                let z = Complex64::new(rnd(), if i == j { 0.0 } else { rnd() });
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let (w, v) = eigh(&h).unwrap();
        let hv = h.dot(&v);
        for i in 0..n {
            let mut res = 0.0f64;
            let mut nrm = 0.0f64;
            for r in 0..n {
                res += (hv[(r, i)] - v[(r, i)] * w[i]).norm_sqr();
                nrm += v[(r, i)].norm_sqr();
            }
            assert!(res.sqrt() < 1e-12, "residual {}", res.sqrt());
            assert!((nrm - 1.0).abs() < 1e-12);
        }
        let wv = eigvalsh(&h).unwrap();
        for i in 0..n {
            assert!((w[i] - wv[i]).abs() < 1e-13);
        }
    }
}
