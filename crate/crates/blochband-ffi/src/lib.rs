//! C ABI for the blochband library: opaque handles, plain structs, and
//! status codes, so other languages can drive band computations, degeneracy
//! analysis, Dirac-point location, and Chern numbers.
//!
//! Conventions:
//!   - every fallible call returns a [`BbStatus`]; on anything but
//!     `BB_STATUS_OK` the thread-local message from
//!     [`bb_last_error_message`] describes the failure;
//!   - handles are created and released by the paired `_new`/`_free`
//!     functions; passing null where a handle is expected yields
//!     `BB_STATUS_INVALID_ARGUMENT`;
//!   - all arrays are caller-allocated, lengths given explicitly.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use blochband::basis::PlaneWaveBasis;
use blochband::bloch::{band_structure, Perturbations};
use blochband::chern::chern_number;
use blochband::deformation::{Deformation, DeformationKind};
use blochband::degeneracy::find_quadratic_degeneracy;
use blochband::dirac::locate_dirac;
use blochband::error::Error;
use blochband::lattice::FourierIndex;
use blochband::linalg2::Mat2;
use blochband::potential::{EvenScalarField, OddPotential, SquareLatticePotential};

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbStatus {
    Ok = 0,
    InvalidArgument = 1,
    SymmetryError = 2,
    HypothesisError = 3,
    SolverError = 4,
    IoError = 5,
}

fn status_of(e: &Error) -> BbStatus {
    match e {
        Error::Config(_) => BbStatus::InvalidArgument,
        Error::Symmetry { .. } => BbStatus::SymmetryError,
        Error::Hypothesis(_) | Error::RotationBroken { .. } | Error::BandNotIsolated { .. } => {
            BbStatus::HypothesisError
        }
        Error::Io(_) | Error::Json(_) => BbStatus::IoError,
        _ => BbStatus::SolverError,
    }
}

fn fail(e: &Error) -> BbStatus {
    set_error(&e.to_string());
    status_of(e)
}

fn invalid(msg: &str) -> BbStatus {
    set_error(msg);
    BbStatus::InvalidArgument
}

/// Opaque potential handle.
pub struct BbPotential(SquareLatticePotential);
/// Opaque deformation handle.
pub struct BbDeformation(Deformation);

/// Example deformation families.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub enum BbDeformationKind {
    Dilation = 0,
    Tilt = 1,
    Uniaxial = 2,
}

/// Builtin symmetry-breaking perturbations.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbPerturbationKind {
    /// odd potential `2 w (sin(k1.x) + sin(k2.x))` scaled by `delta`
    /// (parity breaking)
    OddSine = 0,
    /// odd potential `2 w sin(k1.x)` scaled by `delta` (parity and
    /// diagonal-reflection breaking)
    OddSineAxis = 1,
    /// magneto-optic term with `a = 2 w (cos(k1.x) + cos(k2.x))` scaled by
    /// `delta` (conjugation breaking)
    EvenCosine = 2,
}

/// The two-orbit cosine potential.
#[no_mangle]
pub unsafe extern "C" fn bb_potential_example(
    v01: f64,
    v11: f64,
    out: *mut *mut BbPotential,
) -> BbStatus {
    if out.is_null() {
        return invalid("out pointer is null");
    }
    let p = SquareLatticePotential::example(v01, v11, 2);
    *out = Box::into_raw(Box::new(BbPotential(p)));
    BbStatus::Ok
}

/// Potential from representative coefficients (arrays of length `count`),
/// expanded over their symmetry orbits.
#[no_mangle]
pub unsafe extern "C" fn bb_potential_from_representatives(
    v0: f64,
    m1: *const i32,
    m2: *const i32,
    values: *const f64,
    count: usize,
    cutoff: u32,
    out: *mut *mut BbPotential,
) -> BbStatus {
    if out.is_null() || (count > 0 && (m1.is_null() || m2.is_null() || values.is_null())) {
        return invalid("null array or out pointer");
    }
    let mut reps = Vec::with_capacity(count);
    for i in 0..count {
        reps.push((
            FourierIndex::new(*m1.add(i), *m2.add(i)),
            *values.add(i),
        ));
    }
    match SquareLatticePotential::from_representatives(v0, &reps, cutoff) {
        Ok(p) => {
            *out = Box::into_raw(Box::new(BbPotential(p)));
            BbStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn bb_potential_free(p: *mut BbPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

#[no_mangle]
pub unsafe extern "C" fn bb_deformation_identity(out: *mut *mut BbDeformation) -> BbStatus {
    if out.is_null() {
        return invalid("out pointer is null");
    }
    *out = Box::into_raw(Box::new(BbDeformation(Deformation::identity())));
    BbStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn bb_deformation_family(
    kind: BbDeformationKind,
    parameter: f64,
    out: *mut *mut BbDeformation,
) -> BbStatus {
    if out.is_null() {
        return invalid("out pointer is null");
    }
    let kind = match kind {
        BbDeformationKind::Dilation => DeformationKind::Dilation,
        BbDeformationKind::Tilt => DeformationKind::Tilt,
        BbDeformationKind::Uniaxial => DeformationKind::Uniaxial,
    };
    match Deformation::family(kind, parameter) {
        Ok(d) => {
            *out = Box::into_raw(Box::new(BbDeformation(d)));
            BbStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Deformation from a row-major 2x2 matrix `t = [t11, t12, t21, t22]`.
#[no_mangle]
pub unsafe extern "C" fn bb_deformation_matrix(
    t: *const f64,
    out: *mut *mut BbDeformation,
) -> BbStatus {
    if t.is_null() || out.is_null() {
        return invalid("null pointer");
    }
    let m = Mat2([[*t, *t.add(1)], [*t.add(2), *t.add(3)]]);
    match Deformation::from_matrix(m) {
        Ok(d) => {
            *out = Box::into_raw(Box::new(BbDeformation(d)));
            BbStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Pauli coefficients of the deformation: `(tau0, tau1, tau3)`.
#[no_mangle]
pub unsafe extern "C" fn bb_deformation_taus(
    d: *const BbDeformation,
    tau0: *mut f64,
    tau1: *mut f64,
    tau3: *mut f64,
) -> BbStatus {
    if d.is_null() || tau0.is_null() || tau1.is_null() || tau3.is_null() {
        return invalid("null pointer");
    }
    let d = &(*d).0;
    *tau0 = d.tau0;
    *tau1 = d.tau1;
    *tau3 = d.tau3;
    BbStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn bb_deformation_free(d: *mut BbDeformation) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Band energies at `nk` quasimomenta (`ks` holds `2*nk` doubles, pairs
/// `(k1, k2)`); writes `nk * band_count` ascending energies row-major into
/// `out_energies`.
#[no_mangle]
pub unsafe extern "C" fn bb_band_structure(
    potential: *const BbPotential,
    deformation: *const BbDeformation,
    cutoff: u32,
    ks: *const f64,
    nk: usize,
    band_count: usize,
    out_energies: *mut f64,
) -> BbStatus {
    if potential.is_null() || deformation.is_null() || ks.is_null() || out_energies.is_null() {
        return invalid("null pointer");
    }
    if cutoff < 1 || cutoff > 24 {
        return invalid("cutoff outside 1..=24");
    }
    let basis = PlaneWaveBasis::new(cutoff);
    if band_count > basis.dim() {
        return invalid("band_count exceeds the basis dimension");
    }
    let kpts: Vec<[f64; 2]> = (0..nk).map(|i| [*ks.add(2 * i), *ks.add(2 * i + 1)]).collect();
    match band_structure(&basis, &(*potential).0, &(*deformation).0, &kpts, band_count) {
        Ok(bands) => {
            for (row, (_, energies)) in bands.iter().enumerate() {
                for (col, e) in energies.iter().enumerate() {
                    *out_energies.add(row * band_count + col) = *e;
                }
            }
            BbStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Quadratic degeneracy analysis output.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BbDegeneracyReport {
    pub e_s: f64,
    pub alphas: [f64; 3],
    pub betas: [f64; 3],
    /// bit i set = hypothesis flag Q(i+1) holds, bits 0..6
    pub flags: u32,
    pub generic_coefficients: bool,
    pub guard_gap: f64,
}

#[no_mangle]
pub unsafe extern "C" fn bb_find_degeneracy(
    potential: *const BbPotential,
    cutoff: u32,
    window_lo: f64,
    window_hi: f64,
    out: *mut BbDegeneracyReport,
) -> BbStatus {
    if potential.is_null() || out.is_null() {
        return invalid("null pointer");
    }
    let basis = PlaneWaveBasis::new(cutoff);
    match find_quadratic_degeneracy(&basis, &(*potential).0, (window_lo, window_hi)) {
        Ok(deg) => {
            let f = &deg.flags;
            let bits = [f.q1, f.q2, f.q3, f.q4, f.q5, f.q6]
                .iter()
                .enumerate()
                .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
            *out = BbDegeneracyReport {
                e_s: deg.e_s,
                alphas: deg.alphas,
                betas: deg.betas,
                flags: bits,
                generic_coefficients: deg.generic_coefficients,
                guard_gap: deg.guard_gap,
            };
            BbStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Located Dirac pair output.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BbDiracReport {
    pub e_d: f64,
    pub d_plus: [f64; 2],
    pub d_minus: [f64; 2],
    pub gamma0: [f64; 2],
    pub gamma1: [f64; 2],
    pub gamma2: [f64; 2],
    pub gap_residual: f64,
    /// bit i set = hypothesis flag D(i+1) holds, bits 0..4
    pub flags: u32,
}

#[no_mangle]
pub unsafe extern "C" fn bb_locate_dirac(
    potential: *const BbPotential,
    deformation: *const BbDeformation,
    cutoff: u32,
    window_lo: f64,
    window_hi: f64,
    out: *mut BbDiracReport,
) -> BbStatus {
    if potential.is_null() || deformation.is_null() || out.is_null() {
        return invalid("null pointer");
    }
    let basis = PlaneWaveBasis::new(cutoff);
    let deg = match find_quadratic_degeneracy(&basis, &(*potential).0, (window_lo, window_hi)) {
        Ok(d) => d,
        Err(e) => return fail(&e),
    };
    match locate_dirac(&basis, &(*potential).0, &deg, &(*deformation).0) {
        Ok(pair) => {
            let f = &pair.plus.flags;
            let bits = [f.d1, f.d2, f.d3, f.d4]
                .iter()
                .enumerate()
                .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i));
            *out = BbDiracReport {
                e_d: pair.plus.e_d,
                d_plus: pair.plus.d,
                d_minus: pair.minus.d,
                gamma0: pair.plus.gammas[0],
                gamma1: pair.plus.gammas[1],
                gamma2: pair.plus.gammas[2],
                gap_residual: pair.plus.gap_residual,
                flags: bits,
            };
            BbStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Chern number of `band` (0-based) under a builtin perturbation of
/// amplitude `w` and coupling `delta`, on a `grid x grid` Brillouin-zone
/// mesh.
#[no_mangle]
pub unsafe extern "C" fn bb_chern_number(
    potential: *const BbPotential,
    deformation: *const BbDeformation,
    cutoff: u32,
    kind: BbPerturbationKind,
    w: f64,
    delta: f64,
    band: usize,
    grid: usize,
    out_chern: *mut i32,
    out_residual: *mut f64,
    out_min_gap: *mut f64,
) -> BbStatus {
    if potential.is_null() || deformation.is_null() || out_chern.is_null() {
        return invalid("null pointer");
    }
    if grid < 4 {
        return invalid("grid must be at least 4");
    }
    let basis = PlaneWaveBasis::new(cutoff);
    let odd_hold: OddPotential;
    let even_hold: EvenScalarField;
    let perturbations = match kind {
        BbPerturbationKind::OddSine => {
            odd_hold = OddPotential::sine(w, 1);
            Perturbations {
                odd: Some((delta, &odd_hold)),
                ..Default::default()
            }
        }
        BbPerturbationKind::OddSineAxis => {
            odd_hold = OddPotential::sine2(w, 0.0, 1);
            Perturbations {
                odd: Some((delta, &odd_hold)),
                ..Default::default()
            }
        }
        BbPerturbationKind::EvenCosine => {
            even_hold = EvenScalarField::cosine(0.0, w, 1);
            Perturbations {
                magneto: Some((delta, &even_hold)),
                ..Default::default()
            }
        }
    };
    match chern_number(
        &basis,
        &(*potential).0,
        (*deformation).0.metric(),
        perturbations,
        band,
        grid,
    ) {
        Ok(r) => {
            *out_chern = r.chern;
            if !out_residual.is_null() {
                *out_residual = r.rounding_residual;
            }
            if !out_min_gap.is_null() {
                *out_min_gap = r.min_gap;
            }
            BbStatus::Ok
        }
        Err(e) => fail(&e),
    }
}
