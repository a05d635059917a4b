//! The a-priori geological structure: point-to-geozone lookup and the
//! vertical-interval overlap prior R(x + d, g, δ).

mod grid;
mod stack;

pub use grid::{LabelGrid, GRID_MAGIC};
pub use stack::ColumnStack;

use std::path::Path;

use thiserror::Error;

use crate::geom::Vec3;
use crate::mesh::{read_mesh, MeshError};
use crate::num::Real;
use crate::zone::ZoneId;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("surface {upper} crosses surface {lower} at vertex {vertex} of surface {at}")]
    Crossing {
        upper: usize,
        lower: usize,
        at: usize,
        vertex: usize,
    },
    #[error("expected {expected} zone ids for {surfaces} surfaces, got {got}")]
    ZoneCount {
        surfaces: usize,
        expected: usize,
        got: usize,
    },
    #[error("column stack needs at least one surface")]
    NoSurfaces,
    #[error("label grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Geozone runs along one vertical line, top to bottom.
///
/// `zones[i]` occupies `(bounds[i], bounds[i-1]]`, with `bounds[-1] = +∞`
/// and `bounds[len] = −∞`. Bounds are non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Column<T> {
    bounds: Vec<T>,
    zones: Vec<ZoneId>,
}

impl<T: Real> Column<T> {
    fn exterior() -> Self {
        Self {
            bounds: Vec::new(),
            zones: vec![ZoneId::EXTERIOR],
        }
    }

    pub fn bounds(&self) -> &[T] {
        &self.bounds
    }

    pub fn zones(&self) -> &[ZoneId] {
        &self.zones
    }

    /// Zone containing elevation `z`; a point on a boundary belongs to the
    /// zone above it.
    pub fn zone_at(&self, z: T) -> ZoneId {
        let i = self.bounds.iter().take_while(|&&b| b > z).count();
        self.zones[i]
    }

    /// Calls `f(zone, fraction)` for every run the segment `[top − h, top]`
    /// meets with positive length. A zone may be reported more than once if
    /// it occurs in separate runs.
    pub fn for_each_overlap<F: FnMut(ZoneId, T)>(&self, top: T, h: T, mut f: F) {
        let bottom = top - h;
        let n = self.zones.len();
        for i in 0..n {
            let hi = if i == 0 { top } else { self.bounds[i - 1].min(top) };
            let lo = if i + 1 == n { bottom } else { self.bounds[i].max(bottom) };
            if hi > lo {
                f(self.zones[i], (hi - lo) / h);
            }
            if i + 1 < n && self.bounds[i] <= bottom {
                break;
            }
        }
    }

    pub fn overlap(&self, top: T, h: T, g: ZoneId) -> T {
        let mut r = T::zero();
        self.for_each_overlap(top, h, |z, frac| {
            if z == g {
                r += frac;
            }
        });
        r
    }
}

#[derive(Debug, Clone)]
pub enum GeozoneModel<T> {
    Stack(ColumnStack<T>),
    Grid(LabelGrid<T>),
}

impl<T: Real> GeozoneModel<T> {
    /// Column stack from mesh files ordered top to bottom, zones numbered
    /// 0..=S from the top.
    pub fn load_stack<P: AsRef<Path>>(paths: &[P]) -> Result<Self, GeoError> {
        let meshes = paths
            .iter()
            .map(|p| read_mesh(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::Stack(ColumnStack::new(&meshes, None)?))
    }

    pub fn load_grid(path: impl AsRef<Path>) -> Result<Self, GeoError> {
        Ok(Self::Grid(LabelGrid::read(path)?))
    }

    /// Loads a `.gzg` label grid, or otherwise a comma-separated list of
    /// mesh paths forming a column stack.
    pub fn load(spec: &str) -> Result<Self, GeoError> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if parts.len() == 1 && is_grid_file(parts[0])? {
            return Self::load_grid(parts[0]);
        }
        Self::load_stack(&parts)
    }

    pub fn column(&self, x: T, y: T) -> Column<T> {
        match self {
            Self::Stack(s) => s.column(x, y),
            Self::Grid(g) => g.column(x, y),
        }
    }

    pub fn zone_at(&self, p: Vec3<T>) -> ZoneId {
        match self {
            Self::Stack(s) => s.zone_at(p),
            Self::Grid(g) => g.zone_at(p),
        }
    }

    /// Fraction of the segment from `p` down to `p − (0, 0, h)` inside `g`.
    pub fn overlap(&self, p: Vec3<T>, g: ZoneId, h: T) -> T {
        self.column(p.x, p.y).overlap(p.z, h, g)
    }

    /// Every zone id the model can return, excluding the exterior.
    pub fn zone_ids(&self) -> Vec<ZoneId> {
        match self {
            Self::Stack(s) => {
                let mut z = s.zone_ids().to_vec();
                z.sort_unstable();
                z.dedup();
                z
            }
            Self::Grid(g) => g.zone_ids(),
        }
    }

    pub fn translated(&self, t: Vec3<T>) -> Self {
        match self {
            Self::Stack(s) => Self::Stack(s.translated(t)),
            Self::Grid(g) => Self::Grid(g.translated(t)),
        }
    }
}

fn is_grid_file(path: &str) -> Result<bool, GeoError> {
    use std::io::Read;
    let mut f = std::fs::File::open(path)?;
    let mut head = [0u8; 7];
    Ok(f.read_exact(&mut head).is_ok() && &head == GRID_MAGIC)
}
