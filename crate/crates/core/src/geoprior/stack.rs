use super::{Column, GeoError};
use crate::geom::Vec3;
use crate::mesh::{HeightField, TriMesh};
use crate::num::Real;
use crate::zone::ZoneId;

/// Ordered boundary surfaces z₁(x, y) ≥ z₂(x, y) ≥ … over a common
/// footprint, with one geozone per gap. Each surface keeps its own
/// triangulation, so a warped surface can be dropped back into the stack.
#[derive(Debug, Clone)]
pub struct ColumnStack<T> {
    surfaces: Vec<HeightField<T>>,
    meshes: Vec<TriMesh<T>>,
    zones: Vec<ZoneId>,
}

impl<T: Real> ColumnStack<T> {
    /// `surfaces` run top to bottom. `zones` names the S + 1 gaps from the
    /// top; `None` numbers them 0..=S.
    ///
    /// Ordering is checked at every surface vertex against the surfaces
    /// directly above and below it wherever those are defined.
    pub fn new(surfaces: &[TriMesh<T>], zones: Option<Vec<ZoneId>>) -> Result<Self, GeoError> {
        if surfaces.is_empty() {
            return Err(GeoError::NoSurfaces);
        }
        let zones = zones.unwrap_or_else(|| (0..=surfaces.len()).map(|i| ZoneId(i as u16)).collect());
        if zones.len() != surfaces.len() + 1 {
            return Err(GeoError::ZoneCount {
                surfaces: surfaces.len(),
                expected: surfaces.len() + 1,
                got: zones.len(),
            });
        }
        let fields = surfaces
            .iter()
            .map(HeightField::new)
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..surfaces.len().saturating_sub(1) {
            let (upper, lower) = (&fields[i], &fields[i + 1]);
            for (v, p) in surfaces[i].vertices().iter().enumerate() {
                if let Some(zl) = lower.elevation(p.x, p.y) {
                    if zl > p.z {
                        return Err(GeoError::Crossing {
                            upper: i,
                            lower: i + 1,
                            at: i,
                            vertex: v,
                        });
                    }
                }
            }
            for (v, p) in surfaces[i + 1].vertices().iter().enumerate() {
                if let Some(zu) = upper.elevation(p.x, p.y) {
                    if zu < p.z {
                        return Err(GeoError::Crossing {
                            upper: i,
                            lower: i + 1,
                            at: i + 1,
                            vertex: v,
                        });
                    }
                }
            }
        }
        Ok(Self {
            surfaces: fields,
            meshes: surfaces.to_vec(),
            zones,
        })
    }

    pub fn surface_count(&self) -> usize {
        self.surfaces.len()
    }

    pub fn surfaces(&self) -> &[TriMesh<T>] {
        &self.meshes
    }

    pub fn zone_ids(&self) -> &[ZoneId] {
        &self.zones
    }

    /// Boundary elevations at `(x, y)`, or `None` outside any surface.
    /// Interpolation between vertices of differently triangulated surfaces
    /// can produce tiny inversions; those are clamped to keep the column
    /// ordered.
    pub fn elevations(&self, x: T, y: T) -> Option<Vec<T>> {
        let mut out = Vec::with_capacity(self.surfaces.len());
        for s in &self.surfaces {
            let z = s.elevation(x, y)?;
            let z = match out.last() {
                Some(&prev) if z > prev => prev,
                _ => z,
            };
            out.push(z);
        }
        Some(out)
    }

    pub fn column(&self, x: T, y: T) -> Column<T> {
        match self.elevations(x, y) {
            Some(bounds) => Column {
                bounds,
                zones: self.zones.clone(),
            },
            None => Column::exterior(),
        }
    }

    pub fn zone_at(&self, p: Vec3<T>) -> ZoneId {
        match self.elevations(p.x, p.y) {
            Some(b) => self.zones[b.iter().take_while(|&&z| z > p.z).count()],
            None => ZoneId::EXTERIOR,
        }
    }

    pub fn translated(&self, t: Vec3<T>) -> Self {
        let meshes: Vec<TriMesh<T>> = self.meshes.iter().map(|m| m.translated(t)).collect();
        Self::new(&meshes, Some(self.zones.clone())).expect("translation keeps stack valid")
    }
}
