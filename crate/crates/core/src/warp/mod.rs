//! Bayesian MAP surface warping: per-sample displacement likelihoods,
//! per-vertex aggregation, smoothing and the full correction pass.

mod lattice;
mod score;
pub mod search;
mod smooth;
mod vertex;

pub use lattice::DisplacementLattice;
pub use score::{sample_likelihood_row, ClassLikelihood, LikelihoodRow, SampleScorer};
pub use search::{SearchResult, SearchStrategy};
pub use smooth::smooth_field;
pub use vertex::{
    aggregate, direction_factor, nearest_samples, vertex_map, Proximity, VertexEstimate, VertexParams,
    DEFAULT_IDW_FLOOR,
};

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::chemistry::{AssaySample, ChemistryError, ClassId, DestinationScheme, LikelihoodTable};
use crate::geom::Vec3;
use crate::geoprior::{GeoError, GeozoneModel};
use crate::mesh::{ConflictBounds, MeshError, TriMesh};
use crate::num::Real;
use crate::spatial::KdTree;
use crate::zone::ZoneId;

#[derive(Debug, Error)]
pub enum WarpError {
    #[error("lattice: {0}")]
    Lattice(String),
    #[error("likelihood table classes {table:?} do not match destination scheme {scheme:?}")]
    ClassMismatch { scheme: Vec<String>, table: Vec<String> },
    #[error("geozone {0} of the prior is missing from the likelihood table")]
    ZoneNotInTable(ZoneId),
    #[error("{unsupported} of {total} vertices unsupported (limit {limit})")]
    Unsupported {
        unsupported: usize,
        total: usize,
        limit: f64,
    },
    #[error("no assay samples")]
    NoSamples,
    #[error(transparent)]
    Chemistry(#[from] ChemistryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpConfig<T> {
    pub extent_xy: T,
    pub extent_z: T,
    pub step_xy: T,
    pub step_z: T,
    pub vertex: VertexParams<T>,
    pub strategy: SearchStrategy,
    /// Abort when more than this fraction of vertices lacks support.
    pub abort_unsupported_fraction: T,
}

impl<T: Real> Default for WarpConfig<T> {
    fn default() -> Self {
        Self {
            extent_xy: T::of(4.0),
            extent_z: T::of(8.0),
            step_xy: T::one(),
            step_z: T::of(0.5),
            vertex: VertexParams::default(),
            strategy: SearchStrategy::Brute,
            abort_unsupported_fraction: T::of(0.5),
        }
    }
}

impl<T: Real> WarpConfig<T> {
    pub fn lattice(&self) -> Result<DisplacementLattice<T>, WarpError> {
        DisplacementLattice::new(self.extent_xy, self.extent_z, self.step_xy, self.step_z)
    }

    fn smoothing(&self) -> (T, T) {
        match self.vertex.proximity {
            Proximity::Idw { power, floor } => (power, floor),
            Proximity::Softmax { .. } => (T::of(2.0), T::of(DEFAULT_IDW_FLOOR)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpDiagnostics<T> {
    pub vertices: usize,
    pub unsupported: usize,
    pub clamped: usize,
    /// Samples scored because they neighbour some vertex.
    pub scored_samples: usize,
    pub uninformative_samples: usize,
    /// Candidate evaluations spent on vertex aggregates.
    pub evaluations: usize,
    pub mean_displacement: T,
    pub max_displacement: T,
}

impl<T: Real> WarpDiagnostics<T> {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices = {}", self.vertices);
        let _ = writeln!(s, "unsupported = {}", self.unsupported);
        let _ = writeln!(s, "clamped = {}", self.clamped);
        let _ = writeln!(s, "scored_samples = {}", self.scored_samples);
        let _ = writeln!(s, "uninformative_samples = {}", self.uninformative_samples);
        let _ = writeln!(s, "evaluations = {}", self.evaluations);
        let _ = writeln!(s, "mean_displacement = {}", self.mean_displacement.to_f64_lossy());
        let _ = writeln!(s, "max_displacement = {}", self.max_displacement.to_f64_lossy());
        s
    }
}

#[derive(Debug, Clone)]
pub struct WarpOutput<T> {
    pub mesh: TriMesh<T>,
    /// Displacement actually applied (smoothed, then conflict-repaired).
    pub field: Vec<Vec3<T>>,
    /// Smoothed field before repair.
    pub smoothed: Vec<Vec3<T>>,
    /// Per-vertex MAP estimates (curves dropped).
    pub estimates: Vec<VertexEstimate<T>>,
    pub diagnostics: WarpDiagnostics<T>,
}

/// Likelihood inputs shared by every stage of a pass.
struct Scoring<'a, T> {
    samples: &'a [AssaySample<T>],
    classes: Vec<ClassId>,
    likelihoods: Vec<ClassLikelihood<T>>,
    prior: &'a GeozoneModel<T>,
    lattice: &'a DisplacementLattice<T>,
}

impl<'a, T: Real> Scoring<'a, T> {
    fn scorer(&self, m: usize) -> SampleScorer<'a, T> {
        SampleScorer::new(
            &self.samples[m],
            self.likelihoods[self.classes[m].0 as usize].clone(),
            self.prior,
            self.lattice,
        )
    }
}

enum Rows<T> {
    Full(Vec<LikelihoodRow<T>>),
    Scales(Vec<T>),
}

/// Checks the table against the scheme and the prior, then classifies.
pub fn classify_samples<T: Real>(
    samples: &[AssaySample<T>],
    scheme: &DestinationScheme,
    table: &LikelihoodTable<T>,
    prior: &GeozoneModel<T>,
) -> Result<Vec<ClassId>, WarpError> {
    if table.classes() != scheme.names() {
        return Err(WarpError::ClassMismatch {
            scheme: scheme.names().to_vec(),
            table: table.classes().to_vec(),
        });
    }
    for g in prior.zone_ids() {
        if !table.contains_zone(g) {
            return Err(WarpError::ZoneNotInTable(g));
        }
    }
    samples
        .iter()
        .map(|s| scheme.classify(&s.chemistry).map_err(WarpError::from))
        .collect()
}

/// One full correction pass (classification through conflict repair);
/// the prior stays frozen for the pass.
pub fn warp_surface<T: Real>(
    mesh: &TriMesh<T>,
    samples: &[AssaySample<T>],
    scheme: &DestinationScheme,
    table: &LikelihoodTable<T>,
    prior: &GeozoneModel<T>,
    config: &WarpConfig<T>,
    bounds: ConflictBounds<'_, T>,
) -> Result<WarpOutput<T>, WarpError> {
    if samples.is_empty() {
        return Err(WarpError::NoSamples);
    }
    let lattice = config.lattice()?;
    if config.strategy == SearchStrategy::Hierarchical {
        search::check_hierarchical(&lattice)?;
    }
    let classes = classify_samples(samples, scheme, table, prior)?;
    let likelihoods = scheme
        .classes()
        .map(|c| ClassLikelihood::new(table, c))
        .collect::<Result<Vec<_>, _>>()?;
    let scoring = Scoring {
        samples,
        classes,
        likelihoods,
        prior,
        lattice: &lattice,
    };

    let index = KdTree::new(samples.iter().map(|s| s.midpoint()).collect());
    let params = &config.vertex;
    let neighbor_lists: Vec<Vec<(usize, T)>> = mesh
        .vertices()
        .par_iter()
        .map(|&v| nearest_samples(&index, v, params.neighbors, params.radius))
        .collect();

    let mut needed: Vec<usize> = neighbor_lists.iter().flatten().map(|&(m, _)| m).collect();
    needed.sort_unstable();
    needed.dedup();
    let mut slot_of = vec![usize::MAX; samples.len()];
    for (i, &m) in needed.iter().enumerate() {
        slot_of[m] = i;
    }
    let rows = match config.strategy {
        SearchStrategy::Brute => Rows::Full(
            needed
                .par_iter()
                .map(|&m| LikelihoodRow::from_raw(scoring.scorer(m).raw_row()))
                .collect(),
        ),
        SearchStrategy::Hierarchical => Rows::Scales(
            needed
                .par_iter()
                .map(|&m| scoring.scorer(m).max(SearchStrategy::Hierarchical))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    let informative = |m: usize| match &rows {
        Rows::Full(r) => r[slot_of[m]].informative,
        Rows::Scales(s) => s[slot_of[m]] > T::zero(),
    };
    let uninformative_samples = needed.iter().filter(|&&m| !informative(m)).count();

    let normals = mesh.vertex_normals();
    let estimates: Vec<(VertexEstimate<T>, usize)> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|q| {
            let neighbors: Vec<(usize, T)> = neighbor_lists[q]
                .iter()
                .copied()
                .filter(|&(m, _)| informative(m))
                .collect();
            let normal = if mesh.is_isolated(q) { Vec3::zero() } else { normals[q] };
            let mut e = match &rows {
                Rows::Full(r) => aggregate(q, normal, &neighbors, params, &lattice, SearchStrategy::Brute, |slot, k| {
                    r[slot_of[neighbors[slot].0]].values[k]
                })?,
                Rows::Scales(s) => {
                    let scorers: Vec<(SampleScorer<'_, T>, T)> = neighbors
                        .iter()
                        .map(|&(m, _)| (scoring.scorer(m), s[slot_of[m]]))
                        .collect();
                    aggregate(q, normal, &neighbors, params, &lattice, SearchStrategy::Hierarchical, |slot, k| {
                        let (sc, scale) = &scorers[slot];
                        sc.raw(k) / *scale
                    })?
                }
            };
            // Full curves are large; keep only how many points were evaluated.
            let n = if e.supported() { e.curve.len() } else { 0 };
            e.curve = Vec::new();
            Ok((e, n))
        })
        .collect::<Result<Vec<_>, WarpError>>()?;
    let evaluations: usize = estimates.iter().map(|(_, n)| n).sum();
    let estimates: Vec<VertexEstimate<T>> = estimates.into_iter().map(|(e, _)| e).collect();

    let unsupported = estimates.iter().filter(|e| !e.supported()).count();
    let limit = config.abort_unsupported_fraction;
    if T::of_usize(unsupported) > limit * T::of_usize(mesh.vertex_count()) {
        return Err(WarpError::Unsupported {
            unsupported,
            total: mesh.vertex_count(),
            limit: limit.to_f64_lossy(),
        });
    }

    let raw: Vec<Vec3<T>> = estimates.iter().map(|e| e.displacement).collect();
    let supported: Vec<bool> = estimates.iter().map(|e| e.supported()).collect();
    let (power, floor) = config.smoothing();
    let smoothed = smooth_field(mesh, &raw, &supported, power, floor);
    let repaired = mesh.repair_conflicts(&smoothed, bounds)?;
    let warped = mesh.apply_displacements(&repaired.field)?;

    let norms: Vec<T> = repaired.field.iter().map(|d| d.norm()).collect();
    let diagnostics = WarpDiagnostics {
        vertices: mesh.vertex_count(),
        unsupported,
        clamped: repaired.clamped,
        scored_samples: needed.len(),
        uninformative_samples,
        evaluations,
        mean_displacement: norms.iter().copied().sum::<T>() / T::of_usize(norms.len().max(1)),
        max_displacement: norms.iter().copied().fold(T::zero(), T::max),
    };
    Ok(WarpOutput {
        mesh: warped,
        field: repaired.field,
        smoothed,
        estimates,
        diagnostics,
    })
}

/// `vertex_id,x,y,z,dx,dy,dz,support_count,aggregate_likelihood`, with the
/// original vertex position and the applied displacement.
pub fn displacement_csv<T: Real>(mesh: &TriMesh<T>, output: &WarpOutput<T>) -> String {
    let mut s = String::from("vertex_id,x,y,z,dx,dy,dz,support_count,aggregate_likelihood\n");
    for (i, (v, d)) in mesh.vertices().iter().zip(&output.field).enumerate() {
        let e = &output.estimates[i];
        let f = |x: T| x.to_f64_lossy();
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{},{},{}",
            f(v.x),
            f(v.y),
            f(v.z),
            f(d.x),
            f(d.y),
            f(d.z),
            e.support_count(),
            f(e.aggregate)
        );
    }
    s
}

pub fn write_displacement_csv<T: Real>(
    path: impl AsRef<Path>,
    mesh: &TriMesh<T>,
    output: &WarpOutput<T>,
) -> std::io::Result<()> {
    std::fs::write(path, displacement_csv(mesh, output))
}
