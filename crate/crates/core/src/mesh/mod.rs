//! Indexed triangle surfaces and the geometric queries surface warping needs.

mod io;
mod locate;
mod repair;

pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use locate::{HeightField, TriangleLocator};
pub use repair::{ConflictBounds, RepairReport};

use std::collections::HashMap;

use thiserror::Error;

use crate::geom::Vec3;
use crate::num::Real;

/// Faces with less area than this (m²) are rejected as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no faces")]
    NoFaces,
    #[error("face {face} references vertex {index} but mesh has {count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },
    #[error("degenerate faces: {faces:?}")]
    Degenerate { faces: Vec<usize> },
    #[error("displacement field has {got} entries, mesh has {expected} vertices")]
    FieldLength { expected: usize, got: usize },
    #[error("surface is not a height field: face {face} is vertical or folded over")]
    NotHeightField { face: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Triangle surface with derived per-vertex normals and 1-ring adjacency.
///
/// Immutable after construction; operations that move vertices return a new
/// mesh with the derived data recomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh<T> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
    normals: Vec<Vec3<T>>,
    /// Vertices whose incident-face area sum is zero; their normal is zero.
    isolated: Vec<bool>,
    rings: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

impl<T: Real> TriMesh<T> {
    /// Validates indices and face areas, then derives normals and adjacency.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::NoFaces);
        }
        let count = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &index in f {
                if index >= count {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        index,
                        count,
                    });
                }
            }
        }
        let tol = T::of(DEGENERATE_AREA);
        let degenerate: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                f[0] == f[1] || f[1] == f[2] || f[0] == f[2] || face_area(&vertices, f) <= tol
            })
            .map(|(i, _)| i)
            .collect();
        if !degenerate.is_empty() {
            return Err(MeshError::Degenerate { faces: degenerate });
        }
        Ok(Self::from_parts(vertices, faces))
    }

    /// Builds derived data without validation. Used when only vertex
    /// positions of an already valid mesh change.
    fn from_parts(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Self {
        let (normals, isolated) = area_weighted_normals(&vertices, &faces);
        let n = vertices.len();
        let mut rings: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut vertex_faces: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (fi, f) in faces.iter().enumerate() {
            for e in 0..3 {
                let a = f[e];
                let b = f[(e + 1) % 3];
                rings[a].push(b);
                rings[b].push(a);
                vertex_faces[a].push(fi);
            }
        }
        for r in &mut rings {
            r.sort_unstable();
            r.dedup();
        }
        Self {
            vertices,
            faces,
            normals,
            isolated,
            rings,
            vertex_faces,
        }
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Area-weighted unit normals; zero for isolated vertices.
    pub fn vertex_normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn is_isolated(&self, v: usize) -> bool {
        self.isolated[v]
    }

    /// Sorted 1-ring neighbours of `v`.
    pub fn ring(&self, v: usize) -> &[usize] {
        &self.rings[v]
    }

    pub fn incident_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn face_area(&self, f: usize) -> T {
        face_area(&self.vertices, &self.faces[f])
    }

    pub fn total_area(&self) -> T {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Unit normal of face `f` following its winding.
    pub fn face_normal(&self, f: usize) -> Vec3<T> {
        let [a, b, c] = self.faces[f];
        let v = &self.vertices;
        (v[b] - v[a]).cross(v[c] - v[a]).normalized().unwrap_or_else(Vec3::zero)
    }

    /// Undirected edges that belong to exactly one face, as sorted pairs.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for e in 0..3 {
                let key = edge_key(f[e], f[(e + 1) % 3]);
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        let mut out: Vec<(usize, usize)> = counts
            .into_iter()
            .filter(|(_, c)| *c == 1)
            .map(|(k, _)| k)
            .collect();
        out.sort_unstable();
        out
    }

    /// Splits every face 1→4 at edge midpoints, `rounds` times.
    ///
    /// Original vertices keep their indices; midpoints are appended in the
    /// order their edges are first met while scanning faces.
    pub fn subdivide_midpoint(&self, rounds: usize) -> Self {
        let mut vertices = self.vertices.clone();
        let mut faces = self.faces.clone();
        let half = T::of(0.5);
        for _ in 0..rounds {
            let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
            let mut next_faces = Vec::with_capacity(faces.len() * 4);
            for f in &faces {
                let mut m = [0usize; 3];
                for e in 0..3 {
                    let a = f[e];
                    let b = f[(e + 1) % 3];
                    m[e] = *midpoint.entry(edge_key(a, b)).or_insert_with(|| {
                        vertices.push((vertices[a] + vertices[b]) * half);
                        vertices.len() - 1
                    });
                }
                // m[0] on edge (f0,f1), m[1] on (f1,f2), m[2] on (f2,f0)
                next_faces.push([f[0], m[0], m[2]]);
                next_faces.push([m[0], f[1], m[1]]);
                next_faces.push([m[2], m[1], f[2]]);
                next_faces.push([m[0], m[1], m[2]]);
            }
            faces = next_faces;
        }
        Self::from_parts(vertices, faces)
    }

    /// Moves every vertex by `x' = x − d`. The minus sign is intentional:
    /// displacements are estimated for samples relative to the surface, so
    /// the surface moves the opposite way.
    pub fn apply_displacements(&self, field: &[Vec3<T>]) -> Result<Self, MeshError> {
        self.check_field(field)?;
        let vertices = self
            .vertices
            .iter()
            .zip(field)
            .map(|(&x, &d)| x - d)
            .collect();
        Ok(Self::from_parts(vertices, self.faces.clone()))
    }

    /// Returns a copy with vertex positions replaced (same topology).
    pub fn with_vertices(&self, vertices: Vec<Vec3<T>>) -> Result<Self, MeshError> {
        if vertices.len() != self.vertices.len() {
            return Err(MeshError::FieldLength {
                expected: self.vertices.len(),
                got: vertices.len(),
            });
        }
        Ok(Self::from_parts(vertices, self.faces.clone()))
    }

    /// Translates all vertices by `t`.
    pub fn translated(&self, t: Vec3<T>) -> Self {
        Self::from_parts(
            self.vertices.iter().map(|&v| v + t).collect(),
            self.faces.clone(),
        )
    }

    pub(crate) fn check_field(&self, field: &[Vec3<T>]) -> Result<(), MeshError> {
        if field.len() != self.vertices.len() {
            return Err(MeshError::FieldLength {
                expected: self.vertices.len(),
                got: field.len(),
            });
        }
        Ok(())
    }

    /// Regular grid surface over `[x0, x0 + nx·dx] × [y0, y0 + ny·dy]` with
    /// elevations from `height`, wound counter-clockwise seen from +z.
    pub fn grid<F>(x0: T, y0: T, dx: T, dy: T, nx: usize, ny: usize, height: F) -> Self
    where
        F: Fn(T, T) -> T,
    {
        assert!(nx >= 1 && ny >= 1, "grid needs at least one cell per axis");
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = x0 + dx * T::of_usize(i);
                let y = y0 + dy * T::of_usize(j);
                vertices.push(Vec3::new(x, y, height(x, y)));
            }
        }
        let idx = |i: usize, j: usize| j * (nx + 1) + i;
        let mut faces = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        Self::from_parts(vertices, faces)
    }
}

#[inline]
fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn face_area<T: Real>(v: &[Vec3<T>], f: &[usize; 3]) -> T {
    (v[f[1]] - v[f[0]]).cross(v[f[2]] - v[f[0]]).norm() * T::of(0.5)
}

/// The cross product of two edges has magnitude twice the face area, so
/// summing raw cross products yields the area-weighted normal directly.
fn area_weighted_normals<T: Real>(
    vertices: &[Vec3<T>],
    faces: &[[usize; 3]],
) -> (Vec<Vec3<T>>, Vec<bool>) {
    let mut acc = vec![Vec3::zero(); vertices.len()];
    for f in faces {
        let c = (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
        for &i in f {
            acc[i] += c;
        }
    }
    let mut isolated = vec![false; vertices.len()];
    let normals = acc
        .into_iter()
        .enumerate()
        .map(|(i, n)| match n.normalized() {
            Some(u) => u,
            None => {
                isolated[i] = true;
                Vec3::zero()
            }
        })
        .collect();
    (normals, isolated)
}
