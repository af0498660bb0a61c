//! Square lattice and dual-lattice geometry, symmetry actions on Fourier
//! indices, orbit decompositions, and representative sets.
//!
//! Two distinct rotation index maps appear. For Z^2-periodic functions the
//! fourfold rotation acts on Fourier indices as `(m1, m2) -> (m2, -m1)`.
//! For M-pseudoperiodic states (quasimomentum at the Brillouin-zone corner)
//! the same rotation acts as the affine map `(m1, m2) -> (m2, -m1 - 1)`,
//! whose orbits all have length exactly four. Callers must pick the map
//! matching the function space they work in.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg2::Vec2;

/// Integer index of a dual-lattice vector `m1 k1 + m2 k2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FourierIndex {
    pub m1: i32,
    pub m2: i32,
}

impl FourierIndex {
    pub const ZERO: FourierIndex = FourierIndex { m1: 0, m2: 0 };

    pub fn new(m1: i32, m2: i32) -> Self {
        FourierIndex { m1, m2 }
    }

    /// Fourfold rotation on indices of Z^2-periodic functions: `(m2, -m1)`.
    pub fn rot(self) -> Self {
        FourierIndex::new(self.m2, -self.m1)
    }

    /// Fourfold rotation on indices of M-pseudoperiodic states: `(m2, -m1 - 1)`.
    pub fn rot_m(self) -> Self {
        FourierIndex::new(self.m2, -self.m1 - 1)
    }

    /// Reflection about the diagonal: `(m2, m1)`.
    pub fn sigma1(self) -> Self {
        FourierIndex::new(self.m2, self.m1)
    }

    /// Reflection about the first coordinate axis (rot composed with
    /// sigma1): `(m1, -m2)`.
    pub fn sigma3(self) -> Self {
        FourierIndex::new(self.m1, -self.m2)
    }

    pub fn neg(self) -> Self {
        FourierIndex::new(-self.m1, -self.m2)
    }

    /// Index action of parity (or of conjugation) alone on M-pseudoperiodic
    /// coefficients: `-m - (1,1)`. An involution.
    pub fn parity_m(self) -> Self {
        FourierIndex::new(-self.m1 - 1, -self.m2 - 1)
    }

    pub fn sub(self, rhs: Self) -> Self {
        FourierIndex::new(self.m1 - rhs.m1, self.m2 - rhs.m2)
    }

    pub fn norm_inf(self) -> i32 {
        self.m1.abs().max(self.m2.abs())
    }

    /// Dual-lattice vector `m1 k1 + m2 k2`.
    pub fn dual_vector(self) -> Vec2 {
        [2.0 * PI * self.m1 as f64, 2.0 * PI * self.m2 as f64]
    }
}

/// Square lattice basis vectors, their duals, and the high-symmetry
/// quasimomenta Gamma and M.
#[derive(Debug, Clone, Copy)]
pub struct LatticeGeometry {
    pub v1: Vec2,
    pub v2: Vec2,
    pub k1: Vec2,
    pub k2: Vec2,
    pub gamma: Vec2,
    pub m: Vec2,
}

impl LatticeGeometry {
    pub fn square() -> Self {
        LatticeGeometry {
            v1: [1.0, 0.0],
            v2: [0.0, 1.0],
            k1: [2.0 * PI, 0.0],
            k2: [0.0, 2.0 * PI],
            gamma: [0.0, 0.0],
            m: [PI, PI],
        }
    }
}

/// Quasimomentum of the Brillouin-zone corner, `[pi, pi]`.
pub fn m_point() -> Vec2 {
    [PI, PI]
}

/// Orbit of `m` under the periodic rotation map, deduplicated.
/// Length 1 for the origin, 4 otherwise.
pub fn rot_orbit(m: FourierIndex) -> Vec<FourierIndex> {
    let mut out = vec![m];
    let mut cur = m.rot();
    while cur != m {
        out.push(cur);
        cur = cur.rot();
    }
    out
}

/// Orbit of `m` under the full symmetry group generated by the periodic
/// rotation and the diagonal reflection (lengths 1, 4, or 8).
pub fn full_orbit(m: FourierIndex) -> Vec<FourierIndex> {
    let mut out: Vec<FourierIndex> = Vec::with_capacity(8);
    for &base in &[m, m.sigma1()] {
        let mut cur = base;
        for _ in 0..4 {
            if !out.contains(&cur) {
                out.push(cur);
            }
            cur = cur.rot();
        }
    }
    out
}

/// Representative sets for orbits of Fourier indices inside the box
/// `max(|m1|, |m2|) <= cutoff`.
///
/// `s_all` holds one representative per rotation orbit; `s1`, `s2`, `s3` are
/// its pairwise disjoint refinements adapted to the additional diagonal
/// reflection. Together with the reflections of `s3`, they tile `s_all`.
#[derive(Debug, Clone)]
pub struct RepresentativeSets {
    pub s_all: Vec<FourierIndex>,
    pub s1: Vec<FourierIndex>,
    pub s2: Vec<FourierIndex>,
    pub s3: Vec<FourierIndex>,
}

pub fn representative_sets(cutoff: u32) -> Result<RepresentativeSets> {
    if cutoff < 1 {
        return Err(Error::Config("representative_sets: cutoff must be >= 1".into()));
    }
    let n = cutoff as i32;
    let mut s_all = Vec::new();
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    let mut s3 = Vec::new();
    for m1 in 1..=n {
        for m2 in 0..=n {
            let m = FourierIndex::new(m1, m2);
            s_all.push(m);
            if m2 == 0 {
                s1.push(m);
            } else if m2 == m1 {
                s2.push(m);
            } else if m2 < m1 {
                s3.push(m);
            }
        }
    }
    Ok(RepresentativeSets { s_all, s1, s2, s3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn rotation_examples() {
        assert_eq!(FourierIndex::ZERO.rot(), FourierIndex::ZERO);
        assert_eq!(FourierIndex::new(1, 0).rot(), FourierIndex::new(0, -1));
        assert_eq!(FourierIndex::new(2, 1).rot(), FourierIndex::new(1, -2));
    }

    #[test]
    fn rotation_m_examples_and_orbit() {
        assert_eq!(FourierIndex::ZERO.rot_m(), FourierIndex::new(0, -1));
        assert_eq!(FourierIndex::new(0, -1).rot_m(), FourierIndex::new(-1, -1));
        let mut orbit = vec![FourierIndex::ZERO];
        let mut cur = FourierIndex::ZERO.rot_m();
        while cur != FourierIndex::ZERO {
            orbit.push(cur);
            cur = cur.rot_m();
        }
        assert_eq!(
            orbit,
            vec![
                FourierIndex::new(0, 0),
                FourierIndex::new(0, -1),
                FourierIndex::new(-1, -1),
                FourierIndex::new(-1, 0),
            ]
        );
    }

    #[test]
    fn sigma1_examples() {
        assert_eq!(FourierIndex::new(1, 0).sigma1(), FourierIndex::new(0, 1));
        assert_eq!(FourierIndex::new(2, 2).sigma1(), FourierIndex::new(2, 2));
        assert_eq!(FourierIndex::new(3, 1).sigma1(), FourierIndex::new(1, 3));
    }

    #[test]
    fn sigma1_involution_everywhere() {
        for m1 in -6..=6 {
            for m2 in -6..=6 {
                let m = FourierIndex::new(m1, m2);
                assert_eq!(m.sigma1().sigma1(), m);
            }
        }
    }

    #[test]
    fn rot_m_fourth_iterate_identity_on_random_sample() {
        // a 10^4-point sample of indices
        let mut state = 0x2545f4914f6cdd1du64;
        for _ in 0..10_000 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let m1 = (state % 2001) as i32 - 1000;
            let m2 = ((state >> 32) % 2001) as i32 - 1000;
            let m = FourierIndex::new(m1, m2);
            assert_eq!(m.rot_m().rot_m().rot_m().rot_m(), m);
            // orbits have length exactly 4: no fixed points at lower iterates
            assert_ne!(m.rot_m(), m);
            assert_ne!(m.rot_m().rot_m(), m);
        }
    }

    #[test]
    fn rot_orbits_partition_box_minus_origin() {
        let n = 5;
        let mut seen: HashSet<FourierIndex> = HashSet::new();
        for m1 in -n..=n {
            for m2 in -n..=n {
                let m = FourierIndex::new(m1, m2);
                if m == FourierIndex::ZERO || seen.contains(&m) {
                    continue;
                }
                let orbit = rot_orbit(m);
                assert_eq!(orbit.len(), 4, "orbit of {:?}", m);
                for o in &orbit {
                    assert!(o.norm_inf() <= n, "box not closed at {:?}", o);
                    assert!(seen.insert(*o), "orbits overlap at {:?}", o);
                }
            }
        }
        assert_eq!(seen.len(), ((2 * n + 1) * (2 * n + 1) - 1) as usize);
    }

    #[test]
    fn representative_sets_cutoff_one_and_two() {
        let r = representative_sets(1).unwrap();
        assert_eq!(r.s_all, vec![FourierIndex::new(1, 0), FourierIndex::new(1, 1)]);
        assert_eq!(r.s1, vec![FourierIndex::new(1, 0)]);
        assert_eq!(r.s2, vec![FourierIndex::new(1, 1)]);
        assert!(r.s3.is_empty());

        let r2 = representative_sets(2).unwrap();
        assert_eq!(r2.s3, vec![FourierIndex::new(2, 1)]);
        assert!(representative_sets(0).is_err());
    }

    #[test]
    fn representative_sets_tile_s_all() {
        // s1, s2, s3 are pairwise disjoint and s1 u s2 u s3 u sigma1(s3) = s_all.
        for cutoff in 1..=6u32 {
            let r = representative_sets(cutoff).unwrap();
            let s1: HashSet<_> = r.s1.iter().cloned().collect();
            let s2: HashSet<_> = r.s2.iter().cloned().collect();
            let s3: HashSet<_> = r.s3.iter().cloned().collect();
            assert!(s1.is_disjoint(&s2));
            assert!(s1.is_disjoint(&s3));
            assert!(s2.is_disjoint(&s3));
            let mut union: HashSet<_> = s1.union(&s2).cloned().collect();
            union.extend(s3.iter().cloned());
            union.extend(r.s3.iter().map(|m| m.sigma1()));
            let all: HashSet<_> = r.s_all.iter().cloned().collect();
            assert_eq!(union, all);
        }
    }

    #[test]
    fn full_orbit_lengths() {
        assert_eq!(full_orbit(FourierIndex::new(1, 0)).len(), 4);
        assert_eq!(full_orbit(FourierIndex::new(1, 1)).len(), 4);
        assert_eq!(full_orbit(FourierIndex::new(2, 1)).len(), 8);
        assert_eq!(full_orbit(FourierIndex::ZERO).len(), 1);
    }
}
