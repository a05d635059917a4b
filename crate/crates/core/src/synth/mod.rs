//! Synthetic two-zone deposits with known boundaries, for end-to-end checks.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::chemistry::{write_assays_string, AssaySample, ChemistryError, ClassGroup, DestinationScheme};
use crate::geom::Vec3;
use crate::geoprior::{ColumnStack, GeoError, GeozoneModel};
use crate::mesh::{write_mesh_string, MeshError, TriMesh};
use crate::num::Real;
use crate::validate::{write_blocks_string, GradeBlock};
use crate::zone::ZoneId;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Chemistry(#[from] ChemistryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-element (mean, σ) for one zone; draws are truncated to [0, 100].
pub type ZoneChemistry = BTreeMap<String, (f64, f64)>;

pub fn ore_chemistry() -> ZoneChemistry {
    BTreeMap::from([("Fe".into(), (63.0, 2.0)), ("Al2O3".into(), (2.0, 0.7)), ("SiO2".into(), (3.0, 1.0))])
}

pub fn waste_chemistry() -> ZoneChemistry {
    BTreeMap::from([("Fe".into(), (40.0, 5.0)), ("Al2O3".into(), (4.0, 2.0)), ("SiO2".into(), (25.0, 5.0))])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub origin: [f64; 2],
    pub size: [f64; 2],
    pub mesh_spacing: f64,
    /// Truth z = base + amp_x·sin(x/λx) + amp_y·sin(y/λy) + dip_x·x + dip_y·y.
    pub base: f64,
    pub amp_x: f64,
    pub wavelength_x: f64,
    pub amp_y: f64,
    pub wavelength_y: f64,
    pub dip_x: f64,
    pub dip_y: f64,
    pub perturb_amplitude: f64,
    pub perturb_correlation: f64,
    pub perturb_bumps: usize,
    pub hole_spacing: f64,
    pub explore_spacing: f64,
    pub interval: f64,
    pub collar_z: f64,
    pub hole_depth: f64,
    /// Zone 0 lies above the boundary, zone 1 below.
    pub zones: [ZoneChemistry; 2],
    pub tile: f64,
    pub bench_height: f64,
    pub pit: String,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            origin: [0.0, 0.0],
            size: [100.0, 100.0],
            mesh_spacing: 5.0,
            base: 10.0,
            amp_x: 2.0,
            wavelength_x: 20.0,
            amp_y: 0.0,
            wavelength_y: 20.0,
            dip_x: 0.0,
            dip_y: 0.0,
            perturb_amplitude: 3.0,
            perturb_correlation: 30.0,
            perturb_bumps: 40,
            hole_spacing: 5.0,
            explore_spacing: 25.0,
            interval: 2.0,
            collar_z: 40.0,
            hole_depth: 40.0,
            zones: [ore_chemistry(), waste_chemistry()],
            tile: 25.0,
            bench_height: 10.0,
            pit: "S".into(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn truth(&self, x: f64, y: f64) -> f64 {
        self.base
            + self.amp_x * (x / self.wavelength_x).sin()
            + self.amp_y * (y / self.wavelength_y).sin()
            + self.dip_x * x
            + self.dip_y * y
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Invalid(m.to_string()));
        let count = |len: f64, step: f64| (len / step).round();
        if !(self.size[0] > 0.0 && self.size[1] > 0.0) {
            return bad("footprint size must be positive");
        }
        for (name, v) in [
            ("mesh spacing", self.mesh_spacing),
            ("hole spacing", self.hole_spacing),
            ("exploration spacing", self.explore_spacing),
            ("interval", self.interval),
            ("hole depth", self.hole_depth),
            ("wavelength_x", self.wavelength_x),
            ("wavelength_y", self.wavelength_y),
            ("tile", self.tile),
            ("bench height", self.bench_height),
            ("perturbation correlation", self.perturb_correlation),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SynthError::Invalid(format!("{name} must be positive")));
            }
        }
        for axis in 0..2 {
            let n = count(self.size[axis], self.mesh_spacing);
            if (n * self.mesh_spacing - self.size[axis]).abs() > 1e-9 {
                return bad("footprint must be a whole number of mesh cells");
            }
        }
        if self.perturb_amplitude < 0.0 {
            return bad("perturbation amplitude must be non-negative");
        }
        if self.perturb_amplitude > 0.0 && self.perturb_bumps == 0 {
            return bad("perturbation needs at least one bump");
        }
        for z in &self.zones {
            for e in crate::chemistry::REQUIRED_ELEMENTS {
                if !z.contains_key(e) {
                    return Err(SynthError::Invalid(format!("zone chemistry lacks {e}")));
                }
            }
            if z.values().any(|&(_, s)| !(s >= 0.0)) {
                return bad("chemistry sigma must be non-negative");
            }
        }
        Ok(())
    }

    fn cells(&self) -> [usize; 2] {
        [
            (self.size[0] / self.mesh_spacing).round() as usize,
            (self.size[1] / self.mesh_spacing).round() as usize,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct SynthScene<T> {
    pub spec: SynthSpec,
    pub truth: TriMesh<T>,
    pub initial: TriMesh<T>,
    pub prior: GeozoneModel<T>,
    /// Blast-hole samples, unlabelled.
    pub samples: Vec<AssaySample<T>>,
    /// Sparse exploration samples labelled by their true zone.
    pub training: Vec<AssaySample<T>>,
    pub blocks: Vec<GradeBlock<T>>,
}

/// Sum of Gaussian bumps with random signs, centred over the footprint
/// grown by 2L, then shifted to zero mean and scaled to RMS A/√2 on `at`.
pub fn perturbation_field(spec: &SynthSpec, at: &[[f64; 2]], rng: &mut ChaCha8Rng) -> Vec<f64> {
    if spec.perturb_amplitude == 0.0 {
        return vec![0.0; at.len()];
    }
    let l = spec.perturb_correlation;
    let lo = [spec.origin[0] - 2.0 * l, spec.origin[1] - 2.0 * l];
    let hi = [spec.origin[0] + spec.size[0] + 2.0 * l, spec.origin[1] + spec.size[1] + 2.0 * l];
    let bumps: Vec<([f64; 2], f64)> = (0..spec.perturb_bumps)
        .map(|_| {
            let c = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
            let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (c, s * rng.random_range(0.5..1.0))
        })
        .collect();
    let mut f: Vec<f64> = at
        .iter()
        .map(|p| {
            bumps
                .iter()
                .map(|(c, a)| a * (-((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)) / (2.0 * l * l)).exp())
                .sum()
        })
        .collect();
    let n = f.len().max(1) as f64;
    let mean = f.iter().sum::<f64>() / n;
    f.iter_mut().for_each(|v| *v -= mean);
    let rms = (f.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let target = spec.perturb_amplitude / std::f64::consts::SQRT_2;
    if rms > 0.0 {
        f.iter_mut().for_each(|v| *v *= target / rms);
    }
    f
}

fn draw_chemistry(zone: &ZoneChemistry, rng: &mut ChaCha8Rng) -> BTreeMap<String, f64> {
    zone.iter()
        .map(|(e, &(mu, sd))| {
            let v = if sd == 0.0 {
                mu.clamp(0.0, 100.0)
            } else {
                let n = Normal::new(mu, sd).expect("finite sigma");
                let mut v = n.sample(rng);
                let mut tries = 0;
                while !(0.0..=100.0).contains(&v) && tries < 1000 {
                    v = n.sample(rng);
                    tries += 1;
                }
                v.clamp(0.0, 100.0)
            };
            (e.clone(), v)
        })
        .collect()
}

fn holes(spec: &SynthSpec, spacing: f64) -> Vec<[f64; 2]> {
    let nx = (spec.size[0] / spacing).floor() as usize;
    let ny = (spec.size[1] / spacing).floor() as usize;
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push([
                spec.origin[0] + spacing * (i as f64 + 0.5),
                spec.origin[1] + spacing * (j as f64 + 0.5),
            ]);
        }
    }
    out
}

fn drill<T: Real>(spec: &SynthSpec, prefix: &str, spacing: f64, label: bool, rng: &mut ChaCha8Rng) -> Vec<AssaySample<T>> {
    let per_hole = (spec.hole_depth / spec.interval).floor() as usize;
    let mut out = Vec::new();
    for (h, [x, y]) in holes(spec, spacing).into_iter().enumerate() {
        let boundary = spec.truth(x, y);
        for k in 0..per_hole {
            let top = spec.collar_z - spec.interval * k as f64;
            let mid = top - 0.5 * spec.interval;
            // Closed above: a midpoint exactly on the boundary is below it.
            let zone = if mid > boundary { 0 } else { 1 };
            let chem = draw_chemistry(&spec.zones[zone], rng);
            out.push(AssaySample {
                hole_id: format!("{prefix}{h:04}"),
                collar: Vec3::new(T::of(x), T::of(y), T::of(top)),
                interval_length: T::of(spec.interval),
                chemistry: chem.into_iter().map(|(e, v)| (e, T::of(v))).collect(),
                geozone: label.then_some(ZoneId(zone as u16)),
                tonnage: None,
            });
        }
    }
    out
}

fn group_tag(g: ClassGroup) -> &'static str {
    match g {
        ClassGroup::HighGrade => "HG",
        ClassGroup::Blended => "BL",
        ClassGroup::LowGrade => "LG",
        ClassGroup::Waste => "W",
        ClassGroup::Other => "X",
    }
}

/// Blocks tile each bench; members of a tile are split by the class group
/// of their own assay. Tonnage ∝ member count, normalized per bench.
pub fn grade_blocks<T: Real>(spec: &SynthSpec, samples: &[AssaySample<T>], scheme: &DestinationScheme) -> Result<Vec<GradeBlock<T>>, SynthError> {
    let tiles_x = (spec.size[0] / spec.tile).ceil() as i64;
    let mut groups: BTreeMap<(i64, i64, &'static str), Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let m = s.midpoint();
        let (x, y, z) = (m.x.to_f64_lossy(), m.y.to_f64_lossy(), m.z.to_f64_lossy());
        let tx = ((x - spec.origin[0]) / spec.tile).floor() as i64;
        let ty = ((y - spec.origin[1]) / spec.tile).floor() as i64;
        let bench = (z / spec.bench_height).floor() as i64;
        let tag = group_tag(scheme.group(scheme.classify(&s.chemistry)?));
        groups.entry((bench, ty * tiles_x + tx, tag)).or_default().push(i);
    }
    let mut per_bench: BTreeMap<i64, usize> = BTreeMap::new();
    for ((b, _, _), m) in &groups {
        *per_bench.entry(*b).or_default() += m.len();
    }
    let mut blocks = Vec::with_capacity(groups.len());
    for ((b, tile, tag), members) in groups {
        let bench = b as f64 * spec.bench_height;
        let (tx, ty) = (tile % tiles_x, tile / tiles_x);
        let x0 = spec.origin[0] + tx as f64 * spec.tile;
        let y0 = spec.origin[1] + ty as f64 * spec.tile;
        let mut sums: BTreeMap<String, T> = BTreeMap::new();
        for &i in &members {
            for (e, &v) in &samples[i].chemistry {
                *sums.entry(e.clone()).or_insert(T::zero()) += v;
            }
        }
        let n = T::of_usize(members.len());
        blocks.push(GradeBlock {
            id: format!("{}/{}/{}/{}", spec.pit, bench, tile, tag),
            pit: spec.pit.clone(),
            bench: T::of(bench),
            dest_tag: tag.to_string(),
            tonnage_pct: T::of(100.0 * members.len() as f64 / per_bench[&b] as f64),
            averages: sums.into_iter().map(|(e, s)| (e, s / n)).collect(),
            footprint: [T::of(x0), T::of(x0 + spec.tile), T::of(y0), T::of(y0 + spec.tile)],
            z: (T::of(bench), T::of(bench + spec.bench_height)),
            members,
        });
    }
    Ok(blocks)
}

/// Builds the scene; the same settings always yield the same scene.
pub fn generate<T: Real>(spec: &SynthSpec, scheme: &DestinationScheme) -> Result<SynthScene<T>, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let [nx, ny] = spec.cells();
    let d = spec.mesh_spacing;
    let truth = TriMesh::grid(T::of(spec.origin[0]), T::of(spec.origin[1]), T::of(d), T::of(d), nx, ny, |x, y| {
        T::of(spec.truth(x.to_f64_lossy(), y.to_f64_lossy()))
    });
    let xy: Vec<[f64; 2]> = truth.vertices().iter().map(|v| [v.x.to_f64_lossy(), v.y.to_f64_lossy()]).collect();
    let p = perturbation_field(spec, &xy, &mut rng);
    let initial = truth.with_vertices(
        truth
            .vertices()
            .iter()
            .zip(&p)
            .map(|(v, &dz)| Vec3::new(v.x, v.y, v.z + T::of(dz)))
            .collect(),
    )?;
    let prior = GeozoneModel::Stack(ColumnStack::new(std::slice::from_ref(&initial), None)?);
    let samples = drill(spec, "BH", spec.hole_spacing, false, &mut rng);
    let training = drill(spec, "EX", spec.explore_spacing, true, &mut rng);
    let blocks = grade_blocks(spec, &samples, scheme)?;
    Ok(SynthScene {
        spec: spec.clone(),
        truth,
        initial,
        prior,
        samples,
        training,
        blocks,
    })
}

/// RMS of vertical differences between two meshes on the same vertices.
pub fn rms_vertical<T: Real>(a: &TriMesh<T>, b: &TriMesh<T>) -> f64 {
    let n = a.vertex_count().max(1) as f64;
    let s: f64 = a
        .vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| (p.z - q.z).to_f64_lossy().powi(2))
        .sum();
    (s / n).sqrt()
}

/// RMS of `z − truth(x, y)` over the mesh vertices, each at its own position.
pub fn rms_vs_truth<T: Real>(spec: &SynthSpec, mesh: &TriMesh<T>) -> f64 {
    let n = mesh.vertex_count().max(1) as f64;
    let s: f64 = mesh
        .vertices()
        .iter()
        .map(|v| (v.z.to_f64_lossy() - spec.truth(v.x.to_f64_lossy(), v.y.to_f64_lossy())).powi(2))
        .sum();
    (s / n).sqrt()
}

/// File names written by [`write_scene`].
pub const TRUTH_FILE: &str = "truth.obj";
pub const INITIAL_FILE: &str = "initial.obj";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const TRAINING_FILE: &str = "train.csv";
pub const BLOCKS_FILE: &str = "blocks.csv";

pub fn write_scene<T: Real>(scene: &SynthScene<T>, dir: &Path) -> Result<(), SynthError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(TRUTH_FILE), write_mesh_string(&scene.truth))?;
    fs::write(dir.join(INITIAL_FILE), write_mesh_string(&scene.initial))?;
    fs::write(dir.join(SAMPLES_FILE), write_assays_string(&scene.samples))?;
    fs::write(dir.join(TRAINING_FILE), write_assays_string(&scene.training))?;
    fs::write(dir.join(BLOCKS_FILE), write_blocks_string(&scene.blocks))?;
    Ok(())
}
