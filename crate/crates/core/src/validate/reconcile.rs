//! Twin-pipeline reconciliation: zone assignment, per-zone GP training under
//! a bench mask, block predictions, r₂ scores and their geometric means.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::blocks::GradeBlock;
use super::score::{cdf_points, geometric_mean, r2_error_score, r2_records, Excluded};
use super::stratify::{BenchMask, MaskMode};
use super::ValidateError;
use crate::chemistry::AssaySample;
use crate::geoprior::GeozoneModel;
use crate::gp::{sample_input, train, GpModel, Support, TrainConfig, MIN_TRAINING_SAMPLES};
use crate::num::Real;
use crate::zone::ZoneId;

#[derive(Debug, Clone, PartialEq)]
pub struct ReconcileConfig {
    pub elements: Vec<String>,
    /// Bench floor RLs; empty means every bench that has blocks.
    pub benches: Vec<f64>,
    pub bench_height: f64,
    pub support: Support,
    pub train: TrainConfig,
}

impl Default for ReconcileConfig {
    fn default() -> Self {
        Self {
            elements: vec!["Fe".into(), "SiO2".into()],
            benches: Vec::new(),
            bench_height: 10.0,
            support: Support::Interval,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCell<T> {
    pub bench: T,
    pub mode: MaskMode,
    pub element: String,
    pub pipeline: String,
    pub score: Option<T>,
    pub records: usize,
    pub excluded: Vec<Excluded<T>>,
    pub cdf: Vec<(T, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconcileReport<T> {
    pub pipelines: Vec<String>,
    pub elements: Vec<String>,
    pub benches: Vec<T>,
    pub cells: Vec<ScoreCell<T>>,
}

impl<T: Real> ReconcileReport<T> {
    pub fn cell(&self, bench: T, mode: MaskMode, element: &str, pipeline: &str) -> Option<&ScoreCell<T>> {
        self.cells
            .iter()
            .find(|c| c.bench == bench && c.mode == mode && c.element == element && c.pipeline == pipeline)
    }

    /// Geometric mean of scores across benches.
    pub fn mu_g(&self, mode: MaskMode, element: &str, pipeline: &str) -> Option<T> {
        let v: Vec<T> = self
            .cells
            .iter()
            .filter(|c| c.mode == mode && c.element == element && c.pipeline == pipeline)
            .map(|c| c.score)
            .collect::<Option<_>>()?;
        geometric_mean(&v)
    }

    /// Rows (bench, mask), columns `element:pipeline`, then μ_g rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bench,mask");
        for e in &self.elements {
            for p in &self.pipelines {
                let _ = write!(s, ",{e}:{p}");
            }
        }
        s.push('\n');
        let fmt = |v: Option<T>| v.map_or_else(|| "NA".to_string(), |v| format!("{:.6}", v.to_f64_lossy()));
        for &b in &self.benches {
            for mode in MaskMode::ALL {
                let _ = write!(s, "{},{mode}", b.to_f64_lossy());
                for e in &self.elements {
                    for p in &self.pipelines {
                        let _ = write!(s, ",{}", fmt(self.cell(b, mode, e, p).and_then(|c| c.score)));
                    }
                }
                s.push('\n');
            }
        }
        for mode in MaskMode::ALL {
            let _ = write!(s, "mu_g,{mode}");
            for e in &self.elements {
                for p in &self.pipelines {
                    let _ = write!(s, ",{}", fmt(self.mu_g(mode, e, p)));
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn cdf_csv(&self) -> String {
        let mut s = String::from("element,pipeline,r2,cum_tonnage_pct,bench,mask\n");
        for c in &self.cells {
            for (r, w) in &c.cdf {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    c.element,
                    c.pipeline,
                    r.to_f64_lossy(),
                    w.to_f64_lossy(),
                    c.bench.to_f64_lossy(),
                    c.mode
                );
            }
        }
        s
    }
}

/// Zone of every sample (interval midpoint) under a geozone model.
pub fn assign_zones<T: Real>(samples: &[AssaySample<T>], model: &GeozoneModel<T>) -> Vec<ZoneId> {
    samples.par_iter().map(|s| model.zone_at(s.midpoint())).collect()
}

type ModelKey = (usize, u64, ZoneId, usize);

/// Leaves out the pipeline so that identical inputs train identically.
fn seed_for(base: u64, key: &ModelKey) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for v in [key.1, key.2 .0 as u64, key.3 as u64] {
        h = (h ^ v).wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Runs every (pipeline, bench, mode, element) cell. A zone with fewer
/// than the minimum masked samples falls back to a model pooled over all
/// masked samples; a block with no usable prediction is excluded.
pub fn reconcile<T: Real>(
    samples: &[AssaySample<T>],
    blocks: &[GradeBlock<T>],
    pipelines: &[(String, &GeozoneModel<T>)],
    cfg: &ReconcileConfig,
) -> Result<ReconcileReport<T>, ValidateError> {
    let height = T::of(cfg.bench_height);
    let mut benches: Vec<T> = if cfg.benches.is_empty() {
        blocks.iter().map(|b| b.bench).collect()
    } else {
        cfg.benches.iter().map(|&b| T::of(b)).collect()
    };
    benches.sort_by(|a, b| a.cmp_partial(b));
    benches.dedup();
    for e in &cfg.elements {
        if samples.iter().any(|s| s.grade(e).is_none()) {
            return Err(ValidateError::MissingElement(e.clone()));
        }
    }
    let zones: Vec<Vec<ZoneId>> = pipelines.iter().map(|(_, m)| assign_zones(samples, m)).collect();

    // Every mask RL needed, shared between intra-bench and bench-below.
    let mut rls: Vec<T> = benches
        .iter()
        .flat_map(|&b| MaskMode::ALL.map(|m| BenchMask::for_bench(m, b, height).rl))
        .collect();
    rls.sort_by(|a, b| a.cmp_partial(b));
    rls.dedup();
    let rl_bits = |rl: T| rl.to_f64_lossy().to_bits();

    let mut keys: Vec<(ModelKey, Vec<usize>)> = Vec::new();
    for (p, z) in zones.iter().enumerate() {
        for &rl in &rls {
            let mask = BenchMask { mode: MaskMode::IntraBench, rl };
            let kept: Vec<usize> = (0..samples.len()).filter(|&i| mask.keeps(&samples[i])).collect();
            let mut by_zone: BTreeMap<ZoneId, Vec<usize>> = BTreeMap::new();
            for &i in &kept {
                by_zone.entry(z[i]).or_default().push(i);
            }
            for e in 0..cfg.elements.len() {
                for (&g, idx) in &by_zone {
                    if idx.len() >= MIN_TRAINING_SAMPLES && !g.is_exterior() {
                        keys.push(((p, rl_bits(rl), g, e), idx.clone()));
                    }
                }
                if kept.len() >= MIN_TRAINING_SAMPLES {
                    keys.push(((p, rl_bits(rl), ZoneId::EXTERIOR, e), kept.clone()));
                }
            }
        }
    }
    let trained: Vec<(ModelKey, GpModel<T>)> = keys
        .par_iter()
        .map(|(key, idx)| {
            let element = &cfg.elements[key.3];
            let inputs: Vec<_> = idx.iter().map(|&i| sample_input(&samples[i], cfg.support)).collect();
            let targets: Vec<T> = idx.iter().map(|&i| samples[i].grade(element).expect("checked")).collect();
            let tc = TrainConfig { seed: seed_for(cfg.train.seed, key), ..cfg.train.clone() };
            train(element, key.2, cfg.support, &inputs, &targets, None, &tc).map(|m| (*key, m))
        })
        .collect::<Result<_, _>>()?;
    let models: BTreeMap<ModelKey, GpModel<T>> = trained.into_iter().collect();

    let mut jobs = Vec::new();
    for p in 0..pipelines.len() {
        for &b in &benches {
            for mode in MaskMode::ALL {
                for e in 0..cfg.elements.len() {
                    jobs.push((p, b, mode, e));
                }
            }
        }
    }
    let cells: Vec<ScoreCell<T>> = jobs
        .par_iter()
        .map(|&(p, b, mode, e)| {
            let element = &cfg.elements[e];
            let rl = rl_bits(BenchMask::for_bench(mode, b, height).rl);
            let pooled = models.get(&(p, rl, ZoneId::EXTERIOR, e));
            let inputs: Vec<(String, T, T, Option<T>)> = blocks
                .iter()
                .filter(|blk| blk.bench == b)
                .filter_map(|blk| {
                    let avg = *blk.averages.get(element)?;
                    let mut num = T::zero();
                    let mut den = T::zero();
                    let mut ok = !blk.members.is_empty();
                    for &i in &blk.members {
                        let m = models.get(&(p, rl, zones[p][i], e)).or(pooled);
                        let Some(m) = m else {
                            ok = false;
                            break;
                        };
                        let w = samples[i].weight();
                        num += w * m.predict_one(&sample_input(&samples[i], cfg.support)).0;
                        den += w;
                    }
                    let pred = (ok && den > T::zero()).then(|| num / den);
                    Some((blk.id.clone(), blk.tonnage_pct, avg, pred))
                })
                .collect();
            let (records, excluded) = r2_records(element, &inputs);
            let score = r2_error_score(&records).ok();
            ScoreCell {
                bench: b,
                mode,
                element: element.clone(),
                pipeline: pipelines[p].0.clone(),
                score,
                records: records.len(),
                excluded,
                cdf: cdf_points(&records).unwrap_or_default(),
            }
        })
        .collect();
    Ok(ReconcileReport {
        pipelines: pipelines.iter().map(|(n, _)| n.clone()).collect(),
        elements: cfg.elements.clone(),
        benches,
        cells,
    })
}
