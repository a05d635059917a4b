use std::cmp::Ordering;

use super::WarpError;
use crate::geom::Vec3;
use crate::num::Real;

/// Regular grid of candidate displacements centred on the origin.
///
/// Candidate `k = ix + nx·(iy + ny·iz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementLattice<T> {
    n: [usize; 3],
    step: [T; 3],
    vectors: Vec<Vec3<T>>,
    norms2: Vec<T>,
}

impl<T: Real> DisplacementLattice<T> {
    /// `extent` is the half-width per axis; `2·extent/step` must be a whole
    /// number. A zero extent collapses that axis to the single value 0.
    pub fn new(extent_xy: T, extent_z: T, step_xy: T, step_z: T) -> Result<Self, WarpError> {
        let axis = |extent: T, step: T, name: &str| -> Result<usize, WarpError> {
            if !(extent >= T::zero()) || !extent.is_finite() {
                return Err(WarpError::Lattice(format!("{name} extent must be >= 0")));
            }
            if extent == T::zero() {
                return Ok(1);
            }
            if !(step > T::zero()) {
                return Err(WarpError::Lattice(format!("{name} step must be > 0")));
            }
            let r = (extent * T::of(2.0) / step).to_f64_lossy();
            if (r - r.round()).abs() > 1e-9 || r.round() > 1e6 {
                return Err(WarpError::Lattice(format!(
                    "{name}: 2·extent/step = {r} is not a whole number"
                )));
            }
            Ok(r.round() as usize + 1)
        };
        let nxy = axis(extent_xy, step_xy, "horizontal")?;
        let nz = axis(extent_z, step_z, "vertical")?;
        Ok(Self::from_counts([nxy, nxy, nz], [step_xy, step_xy, step_z]))
    }

    /// Lattice with `n[a]` points per axis spaced `step[a]` apart.
    pub fn from_counts(n: [usize; 3], step: [T; 3]) -> Self {
        assert!(n.iter().all(|&c| c >= 1), "every axis needs a point");
        let coord = |a: usize, i: usize| T::of(i as f64 - (n[a] - 1) as f64 / 2.0) * step[a];
        let total = n[0] * n[1] * n[2];
        let mut vectors = Vec::with_capacity(total);
        for iz in 0..n[2] {
            for iy in 0..n[1] {
                for ix in 0..n[0] {
                    vectors.push(Vec3::new(coord(0, ix), coord(1, iy), coord(2, iz)));
                }
            }
        }
        let norms2 = vectors.iter().map(|v| v.norm_squared()).collect();
        Self { n, step, vectors, norms2 }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn counts(&self) -> [usize; 3] {
        self.n
    }

    pub fn steps(&self) -> [T; 3] {
        self.step
    }

    pub fn vectors(&self) -> &[Vec3<T>] {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> Vec3<T> {
        self.vectors[k]
    }

    pub fn norm_squared(&self, k: usize) -> T {
        self.norms2[k]
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n[0] * (iy + self.n[1] * iz)
    }

    pub fn coords(&self, k: usize) -> [usize; 3] {
        [k % self.n[0], (k / self.n[0]) % self.n[1], k / (self.n[0] * self.n[1])]
    }

    /// Index of the zero vector, when every axis has an odd count.
    pub fn zero_index(&self) -> Option<usize> {
        self.n
            .iter()
            .all(|c| c % 2 == 1)
            .then(|| self.index(self.n[0] / 2, self.n[1] / 2, self.n[2] / 2))
    }

    /// The tie-breaking total order: higher value wins, then smaller ‖d‖,
    /// then smaller k. Returns `Greater` when `a` is the better candidate.
    pub fn rank(&self, a: (T, usize), b: (T, usize)) -> Ordering {
        a.0.cmp_partial(&b.0)
            .then_with(|| self.norms2[b.1].cmp_partial(&self.norms2[a.1]))
            .then_with(|| b.1.cmp(&a.1))
    }
}
