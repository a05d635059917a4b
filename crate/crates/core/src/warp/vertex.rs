//! Per-vertex MAP aggregation over nearby samples.

use super::search::{search, SearchStrategy};
use super::{DisplacementLattice, LikelihoodRow, WarpError};
use crate::geom::Vec3;
use crate::mesh::TriMesh;
use crate::num::Real;
use crate::spatial::KdTree;

pub const DEFAULT_IDW_FLOOR: f64 = 0.1;

/// How sample proximity turns into weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proximity<T> {
    /// 1 / max(r, floor)^power.
    Idw { power: T, floor: T },
    /// exp(−β·r), normalized.
    Softmax { beta: T },
}

impl<T: Real> Proximity<T> {
    /// Normalized weights for the given distances (sum 1, or empty).
    pub fn weights(&self, distances: &[T]) -> Vec<T> {
        let raw: Vec<T> = match *self {
            Self::Idw { power, floor } => distances.iter().map(|&r| T::one() / r.max(floor).powf(power)).collect(),
            Self::Softmax { beta } => {
                let r0 = distances.iter().copied().fold(T::infinity(), T::min);
                distances.iter().map(|&r| (-beta * (r - r0)).exp()).collect()
            }
        };
        let sum: T = raw.iter().copied().sum();
        raw.into_iter().map(|w| w / sum).collect()
    }
}

/// 1 − (1 − cos²θ)² with cosθ = ⟨n, d̂⟩; 1 for d = 0 or a missing normal.
pub fn direction_factor<T: Real>(normal: Vec3<T>, d: Vec3<T>) -> T {
    match (normal.normalized(), d.normalized()) {
        (Some(n), Some(u)) => {
            let c = n.dot(u);
            let s = T::one() - c * c;
            T::one() - s * s
        }
        _ => T::one(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexParams<T> {
    pub neighbors: usize,
    pub radius: T,
    pub proximity: Proximity<T>,
}

impl<T: Real> Default for VertexParams<T> {
    fn default() -> Self {
        Self {
            neighbors: 8,
            radius: T::of(50.0),
            proximity: Proximity::Idw {
                power: T::of(2.0),
                floor: T::of(DEFAULT_IDW_FLOOR),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexEstimate<T> {
    pub vertex: usize,
    pub displacement: Vec3<T>,
    /// Winning candidate; `None` for an unsupported vertex.
    pub k: Option<usize>,
    pub aggregate: T,
    /// Informative samples used, with their proximity weights.
    pub contributors: Vec<(usize, T)>,
    /// L̄ at every candidate that was evaluated, ascending k.
    pub curve: Vec<(usize, T)>,
}

impl<T: Real> VertexEstimate<T> {
    pub fn unsupported(vertex: usize) -> Self {
        Self {
            vertex,
            displacement: Vec3::zero(),
            k: None,
            aggregate: T::zero(),
            contributors: Vec::new(),
            curve: Vec::new(),
        }
    }

    pub fn supported(&self) -> bool {
        self.k.is_some()
    }

    pub fn support_count(&self) -> usize {
        self.contributors.len()
    }
}

/// Sample indices within `radius` of `at` (up to `m`), ordered by distance
/// then index, with their distances.
pub fn nearest_samples<T: Real>(index: &KdTree<T>, at: Vec3<T>, m: usize, radius: T) -> Vec<(usize, T)> {
    index
        .nearest(at, m, radius)
        .into_iter()
        .map(|n| (n.index, n.distance_squared.sqrt()))
        .collect()
}

/// Weighted aggregate and argmax for one vertex.
///
/// `neighbors` are `(sample, distance)` pairs for informative samples;
/// `value(slot, k)` returns `L_{m,k}` for `neighbors[slot]`. Weights
/// normalize over samples for each k, so the direction factor only
/// matters where it vanishes, and a vanishing factor zeroes L̄.
pub fn aggregate<T: Real, L: Fn(usize, usize) -> T>(
    vertex: usize,
    normal: Vec3<T>,
    neighbors: &[(usize, T)],
    params: &VertexParams<T>,
    lattice: &DisplacementLattice<T>,
    strategy: SearchStrategy,
    value: L,
) -> Result<VertexEstimate<T>, WarpError> {
    if neighbors.is_empty() {
        return Ok(VertexEstimate::unsupported(vertex));
    }
    let dist: Vec<T> = neighbors.iter().map(|&(_, r)| r).collect();
    let w = params.proximity.weights(&dist);
    let lbar = |k: usize| {
        if direction_factor(normal, lattice.vector(k)) == T::zero() {
            return T::zero();
        }
        w.iter()
            .enumerate()
            .map(|(slot, &wm)| wm * value(slot, k))
            .sum::<T>()
    };
    let r = search(lattice, strategy, lbar)?;
    Ok(VertexEstimate {
        vertex,
        displacement: lattice.vector(r.best),
        k: Some(r.best),
        aggregate: r.value,
        contributors: neighbors.iter().map(|&(m, _)| m).zip(w).collect(),
        curve: r.evaluated,
    })
}

/// Brute-force MAP estimate for one vertex from precomputed rows.
/// `index` holds the sample points (interval midpoints) in row order.
pub fn vertex_map<T: Real>(
    vertex: usize,
    mesh: &TriMesh<T>,
    index: &KdTree<T>,
    rows: &[LikelihoodRow<T>],
    params: &VertexParams<T>,
    lattice: &DisplacementLattice<T>,
) -> Result<VertexEstimate<T>, WarpError> {
    let at = mesh.vertices()[vertex];
    let normal = if mesh.is_isolated(vertex) {
        Vec3::zero()
    } else {
        mesh.vertex_normals()[vertex]
    };
    let neighbors: Vec<(usize, T)> = nearest_samples(index, at, params.neighbors, params.radius)
        .into_iter()
        .filter(|&(m, _)| rows[m].informative)
        .collect();
    aggregate(vertex, normal, &neighbors, params, lattice, SearchStrategy::Brute, |slot, k| {
        rows[neighbors[slot].0].values[k]
    })
}
