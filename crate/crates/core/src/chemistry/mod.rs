//! Assay samples, destination classes and the class-given-geozone
//! likelihood table.

mod io;
mod scheme;
mod table;

pub use io::{read_assays, read_assays_str, write_assays, write_assays_string};
pub use scheme::{
    ClassGroup, ClassId, Comparison, Condition, DestinationScheme, Rule, DEFAULT_CLASS_ORDER,
    DEFAULT_CLASS_RULES,
};
pub use table::{LikelihoodTable, DEFAULT_SMOOTHING};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geom::Vec3;
use crate::num::Real;
use crate::zone::ZoneId;

/// Elements every assay must report.
pub const REQUIRED_ELEMENTS: [&str; 3] = ["Fe", "SiO2", "Al2O3"];

#[derive(Debug, Error)]
pub enum ChemistryError {
    #[error("missing element {element} ({context})")]
    MissingElement { element: String, context: String },
    #[error("{element} = {value} outside [0, 100] (hole {hole})")]
    OutOfRange {
        element: String,
        value: f64,
        hole: String,
    },
    #[error("interval length must be positive (hole {hole}, got {value})")]
    NonPositiveInterval { hole: String, value: f64 },
    #[error("training sample from hole {hole} has no geozone label")]
    Unlabelled { hole: String },
    #[error("geozones without training samples: {0:?}")]
    EmptyZones(Vec<ZoneId>),
    #[error("unknown destination class {0}")]
    UnknownClass(String),
    #[error("geozone {0} not in likelihood table")]
    UnknownZone(ZoneId),
    #[error("destination scheme: {0}")]
    Scheme(String),
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One assayed vertical interval. The interval runs from `collar` down to
/// `collar − (0, 0, interval_length)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssaySample<T> {
    pub hole_id: String,
    pub collar: Vec3<T>,
    pub interval_length: T,
    pub chemistry: BTreeMap<String, T>,
    pub geozone: Option<ZoneId>,
    pub tonnage: Option<T>,
}

impl<T: Real> AssaySample<T> {
    pub fn midpoint(&self) -> Vec3<T> {
        self.collar - Vec3::new(T::zero(), T::zero(), self.interval_length * T::of(0.5))
    }

    pub fn bottom(&self) -> Vec3<T> {
        self.collar - Vec3::new(T::zero(), T::zero(), self.interval_length)
    }

    pub fn grade(&self, element: &str) -> Option<T> {
        self.chemistry.get(element).copied()
    }

    /// Weight used when averaging samples: tonnage if present, else 1.
    pub fn weight(&self) -> T {
        self.tonnage.unwrap_or_else(T::one)
    }

    pub fn validate(&self) -> Result<(), ChemistryError> {
        if !(self.interval_length > T::zero()) {
            return Err(ChemistryError::NonPositiveInterval {
                hole: self.hole_id.clone(),
                value: self.interval_length.to_f64_lossy(),
            });
        }
        for e in REQUIRED_ELEMENTS {
            if !self.chemistry.contains_key(e) {
                return Err(ChemistryError::MissingElement {
                    element: e.to_string(),
                    context: format!("hole {}", self.hole_id),
                });
            }
        }
        let hundred = T::of(100.0);
        for (e, &v) in &self.chemistry {
            if !(v >= T::zero() && v <= hundred) {
                return Err(ChemistryError::OutOfRange {
                    element: e.clone(),
                    value: v.to_f64_lossy(),
                    hole: self.hole_id.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn translated(&self, t: Vec3<T>) -> Self {
        Self {
            collar: self.collar + t,
            ..self.clone()
        }
    }
}
