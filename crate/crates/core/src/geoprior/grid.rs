use std::path::Path;

use super::{Column, ColumnStack, GeoError};
use crate::geom::Vec3;
use crate::num::Real;
use crate::zone::ZoneId;

pub const GRID_MAGIC: &[u8; 7] = b"GZGRID1";
const HEADER_LEN: usize = 7 + 6 * 8 + 3 * 4;

/// Regular 3-D grid of geozone ids, x-fastest. Id `0xFFFF` marks exterior
/// cells.
#[derive(Debug, Clone)]
pub struct LabelGrid<T> {
    origin: Vec3<T>,
    cell: Vec3<T>,
    dims: [usize; 3],
    ids: Vec<u16>,
    /// Run-length columns, one per (x, y) cell.
    columns: Vec<Column<T>>,
}

impl<T: Real> LabelGrid<T> {
    pub fn new(origin: Vec3<T>, cell: Vec3<T>, dims: [usize; 3], ids: Vec<u16>) -> Result<Self, GeoError> {
        if !(cell.x > T::zero() && cell.y > T::zero() && cell.z > T::zero()) {
            return Err(GeoError::Grid("cell size must be positive".to_string()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(GeoError::Grid("dims must be positive".to_string()));
        }
        let n = dims[0] * dims[1] * dims[2];
        if ids.len() != n {
            return Err(GeoError::Grid(format!("expected {n} ids, got {}", ids.len())));
        }
        let mut grid = Self {
            origin,
            cell,
            dims,
            ids,
            columns: Vec::new(),
        };
        grid.columns = (0..dims[0] * dims[1])
            .map(|c| grid.build_column(c % dims[0], c / dims[0]))
            .collect();
        Ok(grid)
    }

    /// Labels every cell with the stack's zone at the cell center.
    pub fn voxelize(stack: &ColumnStack<T>, origin: Vec3<T>, cell: Vec3<T>, dims: [usize; 3]) -> Result<Self, GeoError> {
        let half = T::of(0.5);
        let mut ids = vec![0u16; dims[0] * dims[1] * dims[2]];
        for iy in 0..dims[1] {
            for ix in 0..dims[0] {
                let x = origin.x + cell.x * (T::of_usize(ix) + half);
                let y = origin.y + cell.y * (T::of_usize(iy) + half);
                let col = stack.column(x, y);
                for iz in 0..dims[2] {
                    let z = origin.z + cell.z * (T::of_usize(iz) + half);
                    ids[ix + dims[0] * (iy + dims[1] * iz)] = col.zone_at(z).0;
                }
            }
        }
        Self::new(origin, cell, dims, ids)
    }

    fn build_column(&self, ix: usize, iy: usize) -> Column<T> {
        let [nx, ny, nz] = self.dims;
        let mut bounds = vec![self.z_at(nz)];
        let mut zones = vec![ZoneId::EXTERIOR];
        for iz in (0..nz).rev() {
            let id = ZoneId(self.ids[ix + nx * (iy + ny * iz)]);
            if *zones.last().unwrap() == id {
                *bounds.last_mut().unwrap() = self.z_at(iz);
            } else {
                zones.push(id);
                bounds.push(self.z_at(iz));
            }
        }
        if *zones.last().unwrap() != ZoneId::EXTERIOR {
            zones.push(ZoneId::EXTERIOR);
        } else {
            bounds.pop();
        }
        Column { bounds, zones }
    }

    fn z_at(&self, iz: usize) -> T {
        self.origin.z + self.cell.z * T::of_usize(iz)
    }

    pub fn origin(&self) -> Vec3<T> {
        self.origin
    }

    pub fn cell(&self) -> Vec3<T> {
        self.cell
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn ids(&self) -> &[u16] {
        &self.ids
    }

    fn xy_cell(&self, x: T, y: T) -> Option<usize> {
        let fx = ((x - self.origin.x) / self.cell.x).floor();
        let fy = ((y - self.origin.y) / self.cell.y).floor();
        if fx < T::zero() || fy < T::zero() {
            return None;
        }
        let (ix, iy) = (fx.to_usize()?, fy.to_usize()?);
        (ix < self.dims[0] && iy < self.dims[1]).then(|| ix + self.dims[0] * iy)
    }

    pub fn column(&self, x: T, y: T) -> Column<T> {
        match self.xy_cell(x, y) {
            Some(c) => self.columns[c].clone(),
            None => Column::exterior(),
        }
    }

    pub fn zone_at(&self, p: Vec3<T>) -> ZoneId {
        match self.xy_cell(p.x, p.y) {
            Some(c) => self.columns[c].zone_at(p.z),
            None => ZoneId::EXTERIOR,
        }
    }

    pub fn zone_ids(&self) -> Vec<ZoneId> {
        let mut z: Vec<ZoneId> = self
            .ids
            .iter()
            .filter(|&&i| i != u16::MAX)
            .map(|&i| ZoneId(i))
            .collect();
        z.sort_unstable();
        z.dedup();
        z
    }

    pub fn translated(&self, t: Vec3<T>) -> Self {
        Self::new(self.origin + t, self.cell, self.dims, self.ids.clone()).expect("translation keeps grid valid")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 2 * self.ids.len());
        out.extend_from_slice(GRID_MAGIC);
        for v in [self.origin, self.cell] {
            for a in 0..3 {
                out.extend_from_slice(&v.axis(a).to_f64_lossy().to_le_bytes());
            }
        }
        for d in self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for id in &self.ids {
            out.extend_from_slice(&id.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GeoError> {
        if bytes.len() < HEADER_LEN || &bytes[..7] != GRID_MAGIC {
            return Err(GeoError::Grid("missing GZGRID1 header".to_string()));
        }
        let f = |i: usize| {
            let o = 7 + 8 * i;
            T::of(f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()))
        };
        let u = |i: usize| {
            let o = 7 + 48 + 4 * i;
            u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize
        };
        let origin = Vec3::new(f(0), f(1), f(2));
        let cell = Vec3::new(f(3), f(4), f(5));
        let dims = [u(0), u(1), u(2)];
        let n = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| GeoError::Grid("dims overflow".to_string()))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != 2 * n {
            return Err(GeoError::Grid(format!(
                "expected {} bytes of ids, found {}",
                2 * n,
                body.len()
            )));
        }
        let ids = body
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        Self::new(origin, cell, dims, ids)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), GeoError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, GeoError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
