//! Square lattice potentials and the symmetry-breaking perturbations built
//! from Fourier coefficient data.
//!
//! Coefficients are stored sparsely; typical potentials have a handful of
//! nonzero orbits. All symmetry constraints are enforced at construction and
//! re-checkable through [`validate_symmetry`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{full_orbit, FourierIndex};
use crate::linalg2::Vec2;

/// Real, even, fourfold- and reflection-symmetric Fourier coefficient map.
#[derive(Debug, Clone)]
pub struct SquareLatticePotential {
    coeffs: BTreeMap<FourierIndex, f64>,
    cutoff: u32,
}

/// Odd real-valued perturbation; coefficients are purely imaginary and flip
/// sign under index negation. Breaks parity, preserves conjugation.
#[derive(Debug, Clone)]
pub struct OddPotential {
    coeffs: BTreeMap<FourierIndex, Complex64>,
    cutoff: u32,
}

/// Even real-valued scalar field entering the magneto-optic term. Breaks
/// conjugation (time reversal) through that term, preserves parity.
#[derive(Debug, Clone)]
pub struct EvenScalarField {
    coeffs: BTreeMap<FourierIndex, f64>,
    cutoff: u32,
}

/// Symmetries checkable on a coefficient map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryOp {
    P,
    C,
    R,
    Sigma1,
    Sigma3,
}

/// Anything exposing a complex coefficient lookup.
pub trait CoefficientField {
    fn coeff_c(&self, m: FourierIndex) -> Complex64;
    fn support(&self) -> Vec<FourierIndex>;
    fn cutoff(&self) -> u32;

    /// Finite Fourier sum at a point.
    fn evaluate_c(&self, x: Vec2) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in self.support() {
            let kv = m.dual_vector();
            let phase = kv[0] * x[0] + kv[1] * x[1];
            acc += self.coeff_c(m) * Complex64::new(phase.cos(), phase.sin());
        }
        acc
    }
}

impl SquareLatticePotential {
    /// Expands representatives over their full rotation/reflection orbits
    /// with equal coefficients. Keys must lie in the representative half
    /// quadrant `m1 >= 1, m2 >= 0` within `cutoff`; keys related by the
    /// diagonal reflection may not be given twice.
    pub fn from_representatives(
        v0: f64,
        rep_coeffs: &[(FourierIndex, f64)],
        cutoff: u32,
    ) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        if v0 != 0.0 {
            coeffs.insert(FourierIndex::ZERO, v0);
        }
        let mut seen_canonical: Vec<FourierIndex> = Vec::new();
        for &(m, value) in rep_coeffs {
            if !(m.m1 >= 1 && m.m2 >= 0 && m.norm_inf() <= cutoff as i32) {
                return Err(Error::Config(format!(
                    "representative ({}, {}) outside the representative set for cutoff {}",
                    m.m1, m.m2, cutoff
                )));
            }
            // canonicalize across the diagonal so (1,2) and (2,1) collide
            let canon = if m.m2 > m.m1 { m.sigma1() } else { m };
            if seen_canonical.contains(&canon) {
                return Err(Error::Config(format!(
                    "representative ({}, {}) duplicates an orbit already supplied",
                    m.m1, m.m2
                )));
            }
            seen_canonical.push(canon);
            if value == 0.0 {
                continue;
            }
            for o in full_orbit(canon) {
                coeffs.insert(o, value);
            }
        }
        let p = SquareLatticePotential { coeffs, cutoff };
        p.check_all()?;
        Ok(p)
    }

    /// The two-orbit cosine potential
    /// `2 v01 (cos(k1.x) + cos(k2.x)) + 2 v11 (cos((k1+k2).x) + cos((k1-k2).x))`.
    pub fn example(v01: f64, v11: f64, cutoff: u32) -> Self {
        assert!(cutoff >= 1);
        SquareLatticePotential::from_representatives(
            0.0,
            &[
                (FourierIndex::new(1, 0), v01),
                (FourierIndex::new(1, 1), v11),
            ],
            cutoff,
        )
        .expect("example representatives are always valid")
    }

    /// Same potential with every coefficient multiplied by `delta`.
    pub fn scaled(&self, delta: f64) -> Self {
        SquareLatticePotential {
            coeffs: self.coeffs.iter().map(|(&m, &v)| (m, delta * v)).collect(),
            cutoff: self.cutoff,
        }
    }

    pub fn coeff(&self, m: FourierIndex) -> f64 {
        self.coeffs.get(&m).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (FourierIndex, f64)> + '_ {
        self.coeffs.iter().map(|(&m, &v)| (m, v))
    }

    pub fn evaluate(&self, x: Vec2) -> f64 {
        self.evaluate_c(x).re
    }

    fn check_all(&self) -> Result<()> {
        for op in [
            SymmetryOp::P,
            SymmetryOp::C,
            SymmetryOp::R,
            SymmetryOp::Sigma1,
            SymmetryOp::Sigma3,
        ] {
            let v = validate_symmetry(self, op);
            if !v.holds {
                return Err(Error::Symmetry {
                    symmetry: op.name(),
                    worst: v.worst,
                    m1: v.worst_index.m1,
                    m2: v.worst_index.m2,
                });
            }
        }
        Ok(())
    }
}

impl CoefficientField for SquareLatticePotential {
    fn coeff_c(&self, m: FourierIndex) -> Complex64 {
        Complex64::new(self.coeff(m), 0.0)
    }
    fn support(&self) -> Vec<FourierIndex> {
        self.coeffs.keys().cloned().collect()
    }
    fn cutoff(&self) -> u32 {
        self.cutoff
    }
}

impl OddPotential {
    /// Validates oddness under parity and realness of the function:
    /// `W_m = -W_{-m}` and `W_m = conj(W_{-m})`, hence purely imaginary.
    pub fn from_coeffs(map: BTreeMap<FourierIndex, Complex64>, cutoff: u32) -> Result<Self> {
        let w = OddPotential { coeffs: map, cutoff };
        let p = validate_symmetry_odd(&w);
        if !p.holds {
            return Err(Error::Symmetry {
                symmetry: "P-odd real",
                worst: p.worst,
                m1: p.worst_index.m1,
                m2: p.worst_index.m2,
            });
        }
        Ok(w)
    }

    /// `W(x) = 2 w (sin(k1.x) + sin(k2.x))`.
    pub fn sine(w: f64, cutoff: u32) -> Self {
        OddPotential::sine2(w, w, cutoff)
    }

    /// `W(x) = 2 w1 sin(k1.x) + 2 w2 sin(k2.x)`. Unequal amplitudes break
    /// the diagonal reflection, which matters at degeneracies pinned to the
    /// diagonal where the symmetric combination decouples from the crossing
    /// pair.
    pub fn sine2(w1: f64, w2: f64, cutoff: u32) -> Self {
        let i = Complex64::new(0.0, 1.0);
        let mut map = BTreeMap::new();
        map.insert(FourierIndex::new(1, 0), -i * w1);
        map.insert(FourierIndex::new(-1, 0), i * w1);
        map.insert(FourierIndex::new(0, 1), -i * w2);
        map.insert(FourierIndex::new(0, -1), i * w2);
        OddPotential::from_coeffs(map, cutoff).expect("sine coefficients are valid")
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (FourierIndex, Complex64)> + '_ {
        self.coeffs.iter().map(|(&m, &v)| (m, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|v| v.norm() == 0.0)
    }
}

impl CoefficientField for OddPotential {
    fn coeff_c(&self, m: FourierIndex) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }
    fn support(&self) -> Vec<FourierIndex> {
        self.coeffs.keys().cloned().collect()
    }
    fn cutoff(&self) -> u32 {
        self.cutoff
    }
}

impl EvenScalarField {
    pub fn from_coeffs(map: BTreeMap<FourierIndex, f64>, cutoff: u32) -> Result<Self> {
        let a = EvenScalarField { coeffs: map, cutoff };
        let p = validate_symmetry(&a, SymmetryOp::P);
        if !p.holds {
            return Err(Error::Symmetry {
                symmetry: "P-even real",
                worst: p.worst,
                m1: p.worst_index.m1,
                m2: p.worst_index.m2,
            });
        }
        Ok(a)
    }

    /// `a(x) = 2 a1 (cos(k1.x) + cos(k2.x))`, plus an optional mean `a0`.
    pub fn cosine(a0: f64, a1: f64, cutoff: u32) -> Self {
        let mut map = BTreeMap::new();
        if a0 != 0.0 {
            map.insert(FourierIndex::ZERO, a0);
        }
        for m in [
            FourierIndex::new(1, 0),
            FourierIndex::new(-1, 0),
            FourierIndex::new(0, 1),
            FourierIndex::new(0, -1),
        ] {
            map.insert(m, a1);
        }
        EvenScalarField::from_coeffs(map, cutoff).expect("cosine coefficients are valid")
    }

    pub fn coeff(&self, m: FourierIndex) -> f64 {
        self.coeffs.get(&m).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (FourierIndex, f64)> + '_ {
        self.coeffs.iter().map(|(&m, &v)| (m, v))
    }
}

impl CoefficientField for EvenScalarField {
    fn coeff_c(&self, m: FourierIndex) -> Complex64 {
        Complex64::new(self.coeff(m), 0.0)
    }
    fn support(&self) -> Vec<FourierIndex> {
        self.coeffs.keys().cloned().collect()
    }
    fn cutoff(&self) -> u32 {
        self.cutoff
    }
}

impl SymmetryOp {
    pub fn name(self) -> &'static str {
        match self {
            SymmetryOp::P => "P",
            SymmetryOp::C => "C",
            SymmetryOp::R => "R",
            SymmetryOp::Sigma1 => "Sigma1",
            SymmetryOp::Sigma3 => "Sigma3",
        }
    }

    fn mapped(self, m: FourierIndex) -> FourierIndex {
        match self {
            SymmetryOp::P | SymmetryOp::C => m.neg(),
            SymmetryOp::R => m.rot(),
            SymmetryOp::Sigma1 => m.sigma1(),
            SymmetryOp::Sigma3 => m.sigma3(),
        }
    }
}

/// Outcome of a coefficient-identity check.
#[derive(Debug, Clone, Copy)]
pub struct SymmetryCheck {
    pub holds: bool,
    pub worst: f64,
    pub worst_index: FourierIndex,
}

/// Checks the coefficient identity of `op` over all stored indices and their
/// images: `f_m = f_{op(m)}` for P/R/Sigma1/Sigma3, `f_m = conj(f_{-m})` for C.
pub fn validate_symmetry<F: CoefficientField>(f: &F, op: SymmetryOp) -> SymmetryCheck {
    let mut worst = 0.0f64;
    let mut worst_index = FourierIndex::ZERO;
    let mut scale = 0.0f64;
    for m in f.support() {
        let lhs = f.coeff_c(m);
        scale = scale.max(lhs.norm());
        let rhs = match op {
            SymmetryOp::C => f.coeff_c(op.mapped(m)).conj(),
            _ => f.coeff_c(op.mapped(m)),
        };
        let dev = (lhs - rhs).norm();
        if dev > worst {
            worst = dev;
            worst_index = m;
        }
    }
    SymmetryCheck {
        holds: worst <= 1e-12 * scale.max(1e-300),
        worst,
        worst_index,
    }
}

/// P-oddness together with realness of the function:
/// `W_m = -W_{-m}` and `W_m = conj(W_{-m})`.
pub fn validate_symmetry_odd(w: &OddPotential) -> SymmetryCheck {
    let mut worst = 0.0f64;
    let mut worst_index = FourierIndex::ZERO;
    let mut scale = 0.0f64;
    for m in w.support() {
        let lhs = w.coeff_c(m);
        scale = scale.max(lhs.norm());
        let d1 = (lhs + w.coeff_c(m.neg())).norm();
        let d2 = (lhs - w.coeff_c(m.neg()).conj()).norm();
        let dev = d1.max(d2);
        if dev > worst {
            worst = dev;
            worst_index = m;
        }
    }
    SymmetryCheck {
        holds: worst <= 1e-12 * scale.max(1e-300),
        worst,
        worst_index,
    }
}
