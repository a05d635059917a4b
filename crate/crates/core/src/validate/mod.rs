//! Validation: stratification counts, bench masks, r₂ reconciliation and
//! the CDF error score.

mod blocks;
mod reconcile;
mod score;
mod stratify;

pub use blocks::{assign_members, read_blocks, read_blocks_str, write_blocks, write_blocks_string, GradeBlock};
pub use reconcile::{assign_zones, reconcile, ReconcileConfig, ReconcileReport, ScoreCell};
pub use score::{cdf_points, geometric_mean, r2_error_score, r2_records, step_cdf_area, Excluded, R2Record};
pub use stratify::{apply_bench_mask, stratify, BenchMask, MaskMode, StratRatios, Stratification};

use thiserror::Error;

use crate::chemistry::ChemistryError;
use crate::gp::GpError;

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("no r2 records")]
    EmptyRecords,
    #[error("total tonnage {0} is not positive")]
    Tonnage(f64),
    #[error("samples lack element '{0}'")]
    MissingElement(String),
    #[error("grade-block CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Chemistry(#[from] ChemistryError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
