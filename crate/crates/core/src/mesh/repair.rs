//! Post-warp conflict repair by scaling displacements back along their
//! estimated direction.

use super::{HeightField, MeshError, TriMesh};
use crate::geom::Vec3;
use crate::num::Real;

const BISECTION_STEPS: usize = 20;
const MAX_SWEEPS: usize = 64;

/// Optional adjacent-stratigraphy surfaces the warped surface must stay
/// between.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConflictBounds<'a, T> {
    pub upper: Option<&'a HeightField<T>>,
    pub lower: Option<&'a HeightField<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairReport<T> {
    pub field: Vec<Vec3<T>>,
    /// Vertices whose displacement was scaled below its estimate.
    pub clamped: usize,
}

struct Repair<'m, 'b, T> {
    mesh: &'m TriMesh<T>,
    field: &'m [Vec3<T>],
    bounds: ConflictBounds<'b, T>,
    /// Signed doubled xy area of every face before displacement.
    reference: Vec<T>,
    scale: Vec<T>,
    pos: Vec<Vec3<T>>,
}

impl<'m, 'b, T: Real> Repair<'m, 'b, T> {
    fn position(&self, v: usize, alpha: T) -> Vec3<T> {
        self.mesh.vertices()[v] - self.field[v] * alpha
    }

    fn violates(&self, v: usize, alpha: T) -> bool {
        let p = self.position(v, alpha);
        if let Some(upper) = self.bounds.upper {
            if let Some(z) = upper.elevation(p.x, p.y) {
                if p.z > z {
                    return true;
                }
            }
        }
        if let Some(lower) = self.bounds.lower {
            if let Some(z) = lower.elevation(p.x, p.y) {
                if p.z < z {
                    return true;
                }
            }
        }
        for &f in self.mesh.incident_faces(v) {
            let s0 = self.reference[f];
            if s0 == T::zero() {
                continue;
            }
            let tri = self.mesh.faces()[f];
            let corner = |i: usize| if i == v { p } else { self.pos[i] };
            let s = signed_xy_area2(corner(tri[0]), corner(tri[1]), corner(tri[2]));
            if (s0 > T::zero() && s <= T::zero()) || (s0 < T::zero() && s >= T::zero()) {
                return true;
            }
        }
        false
    }

    fn set(&mut self, v: usize, alpha: T) {
        self.scale[v] = alpha;
        self.pos[v] = self.position(v, alpha);
    }
}

fn signed_xy_area2<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> T {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

impl<T: Real> TriMesh<T> {
    /// Scales back displacements that would push a vertex across a bounding
    /// surface or flip the z-sign of an incident face normal.
    ///
    /// Each offending vertex gets the largest scale that removes its
    /// violation (bisection, 20 steps) with its neighbours held at their
    /// current positions. Sweeps repeat until no vertex changes; anything
    /// still in conflict after that is reset to zero displacement.
    pub fn repair_conflicts(
        &self,
        field: &[Vec3<T>],
        bounds: ConflictBounds<'_, T>,
    ) -> Result<RepairReport<T>, MeshError> {
        self.check_field(field)?;
        let reference = self
            .faces()
            .iter()
            .map(|f| {
                let v = self.vertices();
                signed_xy_area2(v[f[0]], v[f[1]], v[f[2]])
            })
            .collect();
        let mut r = Repair {
            mesh: self,
            field,
            bounds,
            reference,
            scale: vec![T::one(); field.len()],
            pos: Vec::new(),
        };
        r.pos = (0..field.len()).map(|v| r.position(v, T::one())).collect();

        let half = T::of(0.5);
        for _ in 0..MAX_SWEEPS {
            let mut changed = false;
            for v in 0..field.len() {
                let current = r.scale[v];
                if field[v].is_zero() || current == T::zero() || !r.violates(v, current) {
                    continue;
                }
                let (mut lo, mut hi) = (T::zero(), current);
                for _ in 0..BISECTION_STEPS {
                    let mid = (lo + hi) * half;
                    if r.violates(v, mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                r.set(v, lo);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        loop {
            let offenders: Vec<usize> = (0..field.len())
                .filter(|&v| r.scale[v] != T::zero() && !field[v].is_zero())
                .filter(|&v| r.violates(v, r.scale[v]))
                .collect();
            if offenders.is_empty() {
                break;
            }
            for v in offenders {
                r.set(v, T::zero());
            }
        }
        let clamped = r.scale.iter().filter(|&&s| s < T::one()).count();
        let field = field
            .iter()
            .zip(&r.scale)
            .map(|(&d, &s)| if s == T::one() { d } else { d * s })
            .collect();
        Ok(RepairReport { field, clamped })
    }
}
