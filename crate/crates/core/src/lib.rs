//! Bayesian MAP correction of geological boundary meshes from interval
//! assay samples, with GP grade inference and r₂ reconciliation.
//!
//! Core types are generic over [`num::Real`]; the aliases below fix the
//! scalar for the common cases.

pub mod chemistry;
pub mod config;
pub mod geom;
pub mod geoprior;
pub mod gp;
pub mod mesh;
pub mod num;
pub mod spatial;
pub mod synth;
pub mod validate;
pub mod warp;
pub mod zone;

pub use num::Real;
pub use zone::ZoneId;

pub type Vec3 = geom::Vec3<f64>;
pub type Mesh = mesh::TriMesh<f64>;
pub type Sample = chemistry::AssaySample<f64>;
pub type Table = chemistry::LikelihoodTable<f64>;
pub type Geozones = geoprior::GeozoneModel<f64>;
pub type GpModel = gp::GpModel<f64>;
pub type Block = validate::GradeBlock<f64>;

pub type Vec3f = geom::Vec3<f32>;
pub type Meshf = mesh::TriMesh<f32>;
pub type Samplef = chemistry::AssaySample<f32>;
pub type Tablef = chemistry::LikelihoodTable<f32>;
pub type Geozonesf = geoprior::GeozoneModel<f32>;
pub type GpModelf = gp::GpModel<f32>;
pub type Blockf = validate::GradeBlock<f32>;
