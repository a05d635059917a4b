//! Planar (x, y) point location over a triangulated footprint.

use super::{MeshError, TriMesh};
use crate::num::Real;

/// Barycentric slack accepted when testing containment; keeps points that
/// sit exactly on shared edges or the footprint rim inside.
const BARY_EPS: f64 = 1e-10;

/// Uniform-bin index over the xy projection of a mesh's faces.
#[derive(Debug, Clone)]
pub struct TriangleLocator<T> {
    xy: Vec<[T; 2]>,
    faces: Vec<[usize; 3]>,
    origin: [T; 2],
    bin_size: [T; 2],
    bins: [usize; 2],
    cells: Vec<Vec<u32>>,
}

impl<T: Real> TriangleLocator<T> {
    /// Fails if any face has a vanishing xy projection, or if projected
    /// faces disagree in orientation (the surface folds over itself).
    pub fn new(mesh: &TriMesh<T>) -> Result<Self, MeshError> {
        let xy: Vec<[T; 2]> = mesh.vertices().iter().map(|v| [v.x, v.y]).collect();
        let faces = mesh.faces().to_vec();
        let mut orientation = 0i8;
        for (fi, f) in faces.iter().enumerate() {
            let s = signed_area2(&xy, f);
            let sign = if s > T::zero() {
                1
            } else if s < T::zero() {
                -1
            } else {
                0
            };
            if sign == 0 || (orientation != 0 && sign != orientation) {
                return Err(MeshError::NotHeightField { face: fi });
            }
            orientation = sign;
        }
        let mut lo = xy[faces[0][0]];
        let mut hi = lo;
        for f in &faces {
            for &i in f {
                lo = [lo[0].min(xy[i][0]), lo[1].min(xy[i][1])];
                hi = [hi[0].max(xy[i][0]), hi[1].max(xy[i][1])];
            }
        }
        let per_axis = ((faces.len() as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let bins = [per_axis, per_axis];
        let span = [hi[0] - lo[0], hi[1] - lo[1]];
        let bin_size = [
            (span[0] / T::of_usize(per_axis)).max(T::of(1e-9)),
            (span[1] / T::of_usize(per_axis)).max(T::of(1e-9)),
        ];
        let mut loc = Self {
            xy,
            faces,
            origin: lo,
            bin_size,
            bins,
            cells: vec![Vec::new(); per_axis * per_axis],
        };
        for fi in 0..loc.faces.len() {
            let f = loc.faces[fi];
            let mut flo = loc.xy[f[0]];
            let mut fhi = flo;
            for &i in &f[1..] {
                flo = [flo[0].min(loc.xy[i][0]), flo[1].min(loc.xy[i][1])];
                fhi = [fhi[0].max(loc.xy[i][0]), fhi[1].max(loc.xy[i][1])];
            }
            let (i0, j0) = loc.bin_of(flo[0], flo[1]);
            let (i1, j1) = loc.bin_of(fhi[0], fhi[1]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.cells[j * bins[0] + i].push(fi as u32);
                }
            }
        }
        Ok(loc)
    }

    fn bin_of(&self, x: T, y: T) -> (usize, usize) {
        let clamp = |v: T, o: T, s: T, n: usize| -> usize {
            let t = ((v - o) / s).floor();
            if t <= T::zero() {
                0
            } else {
                t.to_usize().unwrap_or(n - 1).min(n - 1)
            }
        };
        (
            clamp(x, self.origin[0], self.bin_size[0], self.bins[0]),
            clamp(y, self.origin[1], self.bin_size[1], self.bins[1]),
        )
    }

    /// Lowest-index face containing `(x, y)` and the barycentric weights of
    /// its three vertices, or `None` outside the footprint.
    pub fn locate(&self, x: T, y: T) -> Option<(usize, [T; 3])> {
        let eps = T::of(BARY_EPS);
        let slack = self.bin_size[0].max(self.bin_size[1]) * eps;
        if x < self.origin[0] - slack
            || y < self.origin[1] - slack
            || x > self.origin[0] + self.bin_size[0] * T::of_usize(self.bins[0]) + slack
            || y > self.origin[1] + self.bin_size[1] * T::of_usize(self.bins[1]) + slack
        {
            return None;
        }
        let (i, j) = self.bin_of(x, y);
        for &fi in &self.cells[j * self.bins[0] + i] {
            let f = self.faces[fi as usize];
            if let Some(w) = barycentric(&self.xy, &f, x, y) {
                if w.iter().all(|&wi| wi >= -eps) {
                    return Some((fi as usize, w));
                }
            }
        }
        None
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    pub fn vertex_count(&self) -> usize {
        self.xy.len()
    }

    pub fn vertex_xy(&self, v: usize) -> [T; 2] {
        self.xy[v]
    }
}

fn signed_area2<T: Real>(xy: &[[T; 2]], f: &[usize; 3]) -> T {
    let a = xy[f[0]];
    let b = xy[f[1]];
    let c = xy[f[2]];
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn barycentric<T: Real>(xy: &[[T; 2]], f: &[usize; 3], x: T, y: T) -> Option<[T; 3]> {
    let a = xy[f[0]];
    let b = xy[f[1]];
    let c = xy[f[2]];
    let det = (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
    if det == T::zero() {
        return None;
    }
    let w0 = ((b[1] - c[1]) * (x - c[0]) + (c[0] - b[0]) * (y - c[1])) / det;
    let w1 = ((c[1] - a[1]) * (x - c[0]) + (a[0] - c[0]) * (y - c[1])) / det;
    Some([w0, w1, T::one() - w0 - w1])
}

/// Single-valued surface z(x, y) interpolated linearly on its triangles.
#[derive(Debug, Clone)]
pub struct HeightField<T> {
    locator: TriangleLocator<T>,
    z: Vec<T>,
}

impl<T: Real> HeightField<T> {
    pub fn new(mesh: &TriMesh<T>) -> Result<Self, MeshError> {
        Ok(Self {
            locator: TriangleLocator::new(mesh)?,
            z: mesh.vertices().iter().map(|v| v.z).collect(),
        })
    }

    pub fn elevation(&self, x: T, y: T) -> Option<T> {
        self.locator.locate(x, y).map(|(f, w)| {
            let tri = self.locator.face(f);
            w[0] * self.z[tri[0]] + w[1] * self.z[tri[1]] + w[2] * self.z[tri[2]]
        })
    }

    pub fn locator(&self) -> &TriangleLocator<T> {
        &self.locator
    }
}
