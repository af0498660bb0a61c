//! Truncated plane-wave basis on the square-box cutoff
//! `max(|m1|, |m2|) <= N`, ordered lexicographically in `(m1, m2)`.
//!
//! The box is exactly closed under the periodic rotation map, the diagonal
//! reflection, and negation. The affine rotation map of M-pseudoperiodic
//! states maps the sub-box `-N <= m1, m2 <= N - 1` into itself; the fourfold
//! rotation operator at M is realized as an exact permutation there and by
//! zero-extension outside (state mass on the boundary ring is at the
//! truncation-error level).

use std::collections::HashMap;

use crate::lattice::FourierIndex;
use crate::linalg2::Vec2;

#[derive(Debug, Clone)]
pub struct PlaneWaveBasis {
    cutoff: u32,
    indices: Vec<FourierIndex>,
    position: HashMap<FourierIndex, usize>,
}

impl PlaneWaveBasis {
    pub fn new(cutoff: u32) -> Self {
        let n = cutoff as i32;
        let mut indices = Vec::with_capacity(((2 * n + 1) * (2 * n + 1)) as usize);
        for m1 in -n..=n {
            for m2 in -n..=n {
                indices.push(FourierIndex::new(m1, m2));
            }
        }
        let position = indices.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        PlaneWaveBasis {
            cutoff,
            indices,
            position,
        }
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[FourierIndex] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> FourierIndex {
        self.indices[i]
    }

    pub fn position(&self, m: FourierIndex) -> Option<usize> {
        self.position.get(&m).copied()
    }

    /// `K_m = k + m1 k1 + m2 k2` for every basis index.
    pub fn k_vectors(&self, k: Vec2) -> Vec<Vec2> {
        self.indices
            .iter()
            .map(|m| {
                let d = m.dual_vector();
                [k[0] + d[0], k[1] + d[1]]
            })
            .collect()
    }

    /// Position-space permutation `i -> position(map(m_i))`, `None` where the
    /// image leaves the box.
    pub fn permutation(&self, map: impl Fn(FourierIndex) -> FourierIndex) -> Vec<Option<usize>> {
        self.indices
            .iter()
            .map(|&m| self.position(map(m)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_and_order() {
        let b = PlaneWaveBasis::new(2);
        assert_eq!(b.dim(), 25);
        assert_eq!(b.index(0), FourierIndex::new(-2, -2));
        assert_eq!(b.index(24), FourierIndex::new(2, 2));
        assert_eq!(b.position(FourierIndex::ZERO), Some(12));
    }

    #[test]
    fn closure_under_point_group() {
        let b = PlaneWaveBasis::new(3);
        for &m in b.indices() {
            assert!(b.position(m.rot()).is_some());
            assert!(b.position(m.sigma1()).is_some());
            assert!(b.position(m.neg()).is_some());
        }
    }

    #[test]
    fn rot_m_closed_on_shifted_subbox() {
        let b = PlaneWaveBasis::new(4);
        let n = 4i32;
        for &m in b.indices() {
            let inside = m.m1 >= -n && m.m1 < n && m.m2 >= -n && m.m2 < n;
            if inside {
                let r = m.rot_m();
                assert!(r.m1 >= -n && r.m1 < n && r.m2 >= -n && r.m2 < n);
                assert!(b.position(r).is_some());
            }
        }
    }
}
