use crate::geom::Vec3;
use crate::mesh::TriMesh;
use crate::num::Real;

/// d′(q) = Σ_{p ∈ ring(q) ∪ {q}} w_pq·d(p) with IDW weights over supported
/// vertices only; the self distance is floored at `floor`. Reads the whole
/// input before writing, so the result does not depend on vertex order.
pub fn smooth_field<T: Real>(
    mesh: &TriMesh<T>,
    field: &[Vec3<T>],
    supported: &[bool],
    power: T,
    floor: T,
) -> Vec<Vec3<T>> {
    let v = mesh.vertices();
    (0..mesh.vertex_count())
        .map(|q| {
            let mut acc = Vec3::zero();
            let mut wsum = T::zero();
            let ring = mesh.ring(q);
            for &p in std::iter::once(&q).chain(ring) {
                if !supported[p] {
                    continue;
                }
                let w = T::one() / v[p].distance(v[q]).max(floor).powf(power);
                acc += field[p] * w;
                wsum += w;
            }
            if wsum > T::zero() {
                acc / wsum
            } else {
                Vec3::zero()
            }
        })
        .collect()
}
