//! L(y | g): destination-class probability mass per geozone, built from
//! labelled training samples by frequency counts.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::{AssaySample, ChemistryError, ClassId, DestinationScheme};
use crate::num::Real;
use crate::zone::ZoneId;

/// Additive (Laplace) smoothing applied to every cell before normalizing.
pub const DEFAULT_SMOOTHING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodTable<T> {
    classes: Vec<String>,
    zones: Vec<ZoneId>,
    zone_index: HashMap<ZoneId, usize>,
    /// Row-major `[class][zone]`.
    values: Vec<T>,
}

impl<T: Real> LikelihoodTable<T> {
    /// Counts classes per zone with `alpha` added to every cell.
    ///
    /// Zones come from `declared` when given (each must have samples),
    /// otherwise from the labels present in `training`.
    pub fn build(
        scheme: &DestinationScheme,
        training: &[AssaySample<T>],
        declared: Option<&[ZoneId]>,
        alpha: T,
    ) -> Result<Self, ChemistryError> {
        let mut labelled = Vec::with_capacity(training.len());
        for s in training {
            let zone = s.geozone.ok_or_else(|| ChemistryError::Unlabelled {
                hole: s.hole_id.clone(),
            })?;
            labelled.push((zone, scheme.classify(&s.chemistry)?));
        }
        let zones: Vec<ZoneId> = match declared {
            Some(d) => d.iter().copied().collect::<BTreeSet<_>>().into_iter().collect(),
            None => labelled.iter().map(|(z, _)| *z).collect::<BTreeSet<_>>().into_iter().collect(),
        };
        let zone_index: HashMap<ZoneId, usize> =
            zones.iter().enumerate().map(|(i, z)| (*z, i)).collect();
        let nz = zones.len();
        let nc = scheme.len();
        let mut counts = vec![0usize; nc * nz];
        let mut totals = vec![0usize; nz];
        for (zone, class) in &labelled {
            if let Some(&zi) = zone_index.get(zone) {
                counts[class.0 as usize * nz + zi] += 1;
                totals[zi] += 1;
            }
        }
        let empty: Vec<ZoneId> = zones
            .iter()
            .zip(&totals)
            .filter(|(_, &t)| t == 0)
            .map(|(z, _)| *z)
            .collect();
        if !empty.is_empty() {
            return Err(ChemistryError::EmptyZones(empty));
        }
        let mut values = vec![T::zero(); nc * nz];
        for zi in 0..nz {
            let denom = T::of_usize(totals[zi]) + alpha * T::of_usize(nc);
            for c in 0..nc {
                values[c * nz + zi] = (T::of_usize(counts[c * nz + zi]) + alpha) / denom;
            }
        }
        Ok(Self {
            classes: scheme.names().to_vec(),
            zones,
            zone_index,
            values,
        })
    }

    /// Builds a table from explicit columns, normalizing each to sum to 1.
    pub fn from_columns(
        classes: Vec<String>,
        zones: Vec<ZoneId>,
        columns: Vec<Vec<T>>,
    ) -> Result<Self, ChemistryError> {
        let nc = classes.len();
        let nz = zones.len();
        if columns.len() != nz || columns.iter().any(|c| c.len() != nc) {
            return Err(ChemistryError::Scheme("table shape mismatch".to_string()));
        }
        let mut values = vec![T::zero(); nc * nz];
        for (zi, col) in columns.iter().enumerate() {
            let sum: T = col.iter().copied().sum();
            if !(sum > T::zero()) || col.iter().any(|&v| v < T::zero()) {
                return Err(ChemistryError::Scheme(format!(
                    "column for zone {} is not a probability mass",
                    zones[zi]
                )));
            }
            for c in 0..nc {
                values[c * nz + zi] = col[c] / sum;
            }
        }
        let zone_index = zones.iter().enumerate().map(|(i, z)| (*z, i)).collect();
        Ok(Self {
            classes,
            zones,
            zone_index,
            values,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn zones(&self) -> &[ZoneId] {
        &self.zones
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn contains_zone(&self, g: ZoneId) -> bool {
        g.is_exterior() || self.zone_index.contains_key(&g)
    }

    /// P(y | g). The exterior zone is uniform over classes.
    pub fn lookup(&self, y: ClassId, g: ZoneId) -> Result<T, ChemistryError> {
        let c = y.0 as usize;
        if c >= self.classes.len() {
            return Err(ChemistryError::UnknownClass(format!("#{c}")));
        }
        if g.is_exterior() {
            return Ok(T::one() / T::of_usize(self.classes.len()));
        }
        let zi = *self
            .zone_index
            .get(&g)
            .ok_or(ChemistryError::UnknownZone(g))?;
        Ok(self.values[c * self.zones.len() + zi])
    }

    /// Writes `class,<zone>,<zone>...` with full round-trip precision.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("class");
        for z in &self.zones {
            let _ = write!(out, ",{z}");
        }
        out.push('\n');
        let nz = self.zones.len();
        for (c, name) in self.classes.iter().enumerate() {
            out.push_str(name);
            for zi in 0..nz {
                let _ = write!(out, ",{}", self.values[c * nz + zi].to_f64_lossy());
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), ChemistryError> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, ChemistryError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    /// Parses the table CSV. Values are taken as written (no renormalizing)
    /// after checking each column sums to 1 within 1e-9.
    pub fn from_csv_str(text: &str) -> Result<Self, ChemistryError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or(ChemistryError::Csv {
            line: 1,
            message: "empty table".to_string(),
        })?;
        let head: Vec<&str> = header.split(',').map(str::trim).collect();
        if head.len() < 2 {
            return Err(ChemistryError::Csv {
                line: hline + 1,
                message: "table needs at least one geozone column".to_string(),
            });
        }
        let zones = head[1..]
            .iter()
            .map(|s| s.parse::<ZoneId>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|message| ChemistryError::Csv {
                line: hline + 1,
                message,
            })?;
        let nz = zones.len();
        let mut classes = Vec::new();
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (i, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != nz + 1 {
                return Err(ChemistryError::Csv {
                    line: i + 1,
                    message: format!("expected {} cells, found {}", nz + 1, cells.len()),
                });
            }
            classes.push(cells[0].to_string());
            let row = cells[1..]
                .iter()
                .map(|s| {
                    s.parse::<f64>().map(T::of).map_err(|_| ChemistryError::Csv {
                        line: i + 1,
                        message: format!("invalid probability '{s}'"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        let nc = classes.len();
        let mut values = vec![T::zero(); nc * nz];
        for (c, row) in rows.iter().enumerate() {
            for (zi, &v) in row.iter().enumerate() {
                values[c * nz + zi] = v;
            }
        }
        for zi in 0..nz {
            let sum: f64 = (0..nc).map(|c| values[c * nz + zi].to_f64_lossy()).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(ChemistryError::Csv {
                    line: hline + 1,
                    message: format!("column for zone {} sums to {sum}", zones[zi]),
                });
            }
        }
        let zone_index = zones.iter().enumerate().map(|(i, z)| (*z, i)).collect();
        Ok(Self {
            classes,
            zones,
            zone_index,
            values,
        })
    }
}
