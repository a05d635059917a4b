//! ASCII indexed-triangle format: `v x y z` and `f i j k` lines (1-based
//! indices), `#` comments. Writers emit 9 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use super::{MeshError, TriMesh};
use crate::geom::Vec3;
use crate::num::{format_sig, Real};

pub fn read_mesh<T: Real>(path: impl AsRef<Path>) -> Result<TriMesh<T>, MeshError> {
    let text = std::fs::read_to_string(path)?;
    read_mesh_str(&text)
}

pub fn read_mesh_str<T: Real>(text: &str) -> Result<TriMesh<T>, MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let tag = parts.next().unwrap_or("");
        let fields: Vec<&str> = parts.collect();
        let parse_err = |message: String| MeshError::Parse { line, message };
        match tag {
            "v" => {
                if fields.len() != 3 {
                    return Err(parse_err(format!(
                        "vertex needs 3 coordinates, found {}",
                        fields.len()
                    )));
                }
                let mut xyz = [T::zero(); 3];
                for (slot, s) in xyz.iter_mut().zip(&fields) {
                    let v: f64 = s
                        .parse()
                        .map_err(|_| parse_err(format!("invalid coordinate '{s}'")))?;
                    if !v.is_finite() {
                        return Err(parse_err(format!("non-finite coordinate '{s}'")));
                    }
                    *slot = T::of(v);
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            "f" => {
                if fields.len() != 3 {
                    return Err(parse_err(format!(
                        "face needs 3 indices, found {}",
                        fields.len()
                    )));
                }
                let mut idx = [0usize; 3];
                for (slot, s) in idx.iter_mut().zip(&fields) {
                    // Tolerate OBJ-style "i/t/n" references by keeping the vertex part.
                    let head = s.split('/').next().unwrap_or("");
                    let i: usize = head
                        .parse()
                        .map_err(|_| parse_err(format!("invalid index '{s}'")))?;
                    if i == 0 {
                        return Err(parse_err("indices are 1-based".to_string()));
                    }
                    *slot = i - 1;
                }
                faces.push(idx);
            }
            other => return Err(parse_err(format!("unknown record '{other}'"))),
        }
    }
    TriMesh::new(vertices, faces)
}

pub fn write_mesh_string<T: Real>(mesh: &TriMesh<T>) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(
            out,
            "v {} {} {}",
            format_sig(v.x.to_f64_lossy(), 9),
            format_sig(v.y.to_f64_lossy(), 9),
            format_sig(v.z.to_f64_lossy(), 9)
        );
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn write_mesh<T: Real>(mesh: &TriMesh<T>, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_triangle_with_comments() {
        let text = "# a triangle\nv 0 0 0\nv 1 0 0 # trailing\n\nv 0 1 0\nf 1 2 3\n";
        let m: TriMesh<f64> = read_mesh_str(text).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn parse_error_carries_line() {
        let err = read_mesh_str::<f64>("v 0 0 0\nv 1 x 0\n").unwrap_err();
        match err {
            MeshError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        let err = read_mesh_str::<f64>("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 4, .. }));
    }

    #[test]
    fn no_faces() {
        let err = read_mesh_str::<f64>("v 0 0 0\n").unwrap_err();
        assert_eq!(err.to_string(), "no faces");
    }

    #[test]
    fn writer_round_trip_to_nine_digits() {
        let m = TriMesh::<f64>::grid(1000.123456789, -3.0, 2.5, 2.5, 2, 2, |x, y| 0.01 * x * y);
        let back: TriMesh<f64> = read_mesh_str(&write_mesh_string(&m)).unwrap();
        assert_eq!(back.faces(), m.faces());
        for (a, b) in back.vertices().iter().zip(m.vertices()) {
            assert!((*a - *b).norm() <= 1e-9 * b.norm().max(1.0) * 10.0);
        }
    }
}
