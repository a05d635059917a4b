//! Per-sample displacement likelihood L_{m,k} = Σ_g L(y(c_m) | g)·R(x_m + d_k, g, δ_m).

use super::{DisplacementLattice, SearchStrategy, WarpError};
use crate::chemistry::{AssaySample, ClassId, LikelihoodTable};
use crate::geom::Vec3;
use crate::geoprior::{Column, GeozoneModel};
use crate::num::Real;
use crate::zone::ZoneId;

/// L(y | g) for one destination class, keyed by zone.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLikelihood<T> {
    pairs: Vec<(ZoneId, T)>,
    exterior: T,
}

impl<T: Real> ClassLikelihood<T> {
    pub fn new(table: &LikelihoodTable<T>, class: ClassId) -> Result<Self, WarpError> {
        let pairs = table
            .zones()
            .iter()
            .map(|&g| Ok((g, table.lookup(class, g)?)))
            .collect::<Result<Vec<_>, WarpError>>()?;
        Ok(Self {
            pairs,
            exterior: table.lookup(class, ZoneId::EXTERIOR)?,
        })
    }

    /// Zero for zones absent from the table.
    pub fn get(&self, g: ZoneId) -> T {
        if g.is_exterior() {
            return self.exterior;
        }
        self.pairs
            .iter()
            .find(|(z, _)| *z == g)
            .map(|&(_, v)| v)
            .unwrap_or_else(T::zero)
    }

    /// Σ_g L(y | g)·R over the runs of one column.
    pub fn score(&self, column: &Column<T>, top: T, h: T) -> T {
        let mut s = T::zero();
        column.for_each_overlap(top, h, |g, r| s += self.get(g) * r);
        s
    }
}

/// Evaluates one sample's unnormalized likelihood at lattice candidates.
#[derive(Debug, Clone)]
pub struct SampleScorer<'a, T> {
    prior: &'a GeozoneModel<T>,
    lattice: &'a DisplacementLattice<T>,
    collar: Vec3<T>,
    h: T,
    likelihood: ClassLikelihood<T>,
}

impl<'a, T: Real> SampleScorer<'a, T> {
    pub fn new(
        sample: &AssaySample<T>,
        likelihood: ClassLikelihood<T>,
        prior: &'a GeozoneModel<T>,
        lattice: &'a DisplacementLattice<T>,
    ) -> Self {
        Self {
            prior,
            lattice,
            collar: sample.collar,
            h: sample.interval_length,
            likelihood,
        }
    }

    pub fn raw(&self, k: usize) -> T {
        let d = self.lattice.vector(k);
        let col = self.prior.column(self.collar.x + d.x, self.collar.y + d.y);
        self.likelihood.score(&col, self.collar.z + d.z, self.h)
    }

    /// All candidates, locating each (dx, dy) column once.
    pub fn raw_row(&self) -> Vec<T> {
        let [nx, ny, nz] = self.lattice.counts();
        let mut out = vec![T::zero(); self.lattice.len()];
        for iy in 0..ny {
            for ix in 0..nx {
                let d = self.lattice.vector(self.lattice.index(ix, iy, 0));
                let col = self.prior.column(self.collar.x + d.x, self.collar.y + d.y);
                for iz in 0..nz {
                    let k = self.lattice.index(ix, iy, iz);
                    let dz = self.lattice.vector(k).z;
                    out[k] = self.likelihood.score(&col, self.collar.z + dz, self.h);
                }
            }
        }
        out
    }

    /// Row maximum by the given strategy; exact for brute.
    pub fn max(&self, strategy: SearchStrategy) -> Result<T, WarpError> {
        match strategy {
            SearchStrategy::Brute => Ok(self
                .raw_row()
                .into_iter()
                .fold(T::zero(), |m, v| if v > m { v } else { m })),
            SearchStrategy::Hierarchical => {
                Ok(super::search::hierarchical(self.lattice, |k| self.raw(k))?.value)
            }
        }
    }
}

/// One sample's max-normalized row.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodRow<T> {
    pub values: Vec<T>,
    /// The maximum the raw row was divided by.
    pub scale: T,
    /// False when the raw row is identically zero.
    pub informative: bool,
}

impl<T: Real> LikelihoodRow<T> {
    pub fn from_raw(mut values: Vec<T>) -> Self {
        let scale = values.iter().fold(T::zero(), |m, &v| if v > m { v } else { m });
        let informative = scale > T::zero();
        if informative {
            for v in &mut values {
                *v /= scale;
            }
        }
        Self {
            values,
            scale,
            informative,
        }
    }

    pub fn argmax(&self, lattice: &DisplacementLattice<T>) -> usize {
        super::search::brute(lattice, |k| self.values[k]).best
    }
}

pub fn sample_likelihood_row<T: Real>(
    sample: &AssaySample<T>,
    class: ClassId,
    table: &LikelihoodTable<T>,
    prior: &GeozoneModel<T>,
    lattice: &DisplacementLattice<T>,
) -> Result<LikelihoodRow<T>, WarpError> {
    let lik = ClassLikelihood::new(table, class)?;
    Ok(LikelihoodRow::from_raw(
        SampleScorer::new(sample, lik, prior, lattice).raw_row(),
    ))
}
