//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::chemistry::{DestinationScheme, DEFAULT_CLASS_ORDER, DEFAULT_CLASS_RULES, DEFAULT_SMOOTHING};
use crate::gp::{Support, TrainConfig};
use crate::synth::{SynthSpec, ZoneChemistry};
use crate::validate::ReconcileConfig;
use crate::warp::{Proximity, SearchStrategy, VertexParams, WarpConfig, DEFAULT_IDW_FLOOR};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config key '{key}': {message}")]
    Value { key: String, message: String },
}

fn chem_text(z: &ZoneChemistry) -> String {
    z.iter().map(|(e, (m, s))| format!("{e}:{m}:{s}")).collect::<Vec<_>>().join(",")
}

fn defaults() -> Vec<(&'static str, String)> {
    let s = SynthSpec::default();
    let t = TrainConfig::default();
    let r = ReconcileConfig::default();
    vec![
        ("lattice.extent_xy", "4".into()),
        ("lattice.extent_z", "8".into()),
        ("lattice.step_xy", "1".into()),
        ("lattice.step_z", "0.5".into()),
        ("neighbors.M", "8".into()),
        ("neighbors.radius_m", "50".into()),
        ("weights.idw_power", "2".into()),
        ("weights.idw_floor", DEFAULT_IDW_FLOOR.to_string()),
        ("weights.softmax_beta", String::new()),
        ("search.strategy", SearchStrategy::default().to_string()),
        ("abort.unsupported_fraction", "0.5".into()),
        ("table.smoothing_alpha", DEFAULT_SMOOTHING.to_string()),
        ("classes.order", DEFAULT_CLASS_ORDER.into()),
        ("classes.rules", DEFAULT_CLASS_RULES.into()),
        ("gp.starts", t.starts.to_string()),
        ("gp.anneal", t.anneal.to_string()),
        ("gp.anneal_proposals", t.anneal_proposals.to_string()),
        ("gp.anneal_cooling", t.anneal_cooling.to_string()),
        ("gp.max_iterations", t.max_iterations.to_string()),
        ("gp.gradient_tolerance", t.gradient_tolerance.to_string()),
        ("gp.max_train", t.max_train.to_string()),
        ("gp.start_spread", t.start_spread.to_string()),
        ("gp.support", Support::default().to_string()),
        ("validate.elements", r.elements.join(",")),
        ("validate.benches", String::new()),
        ("validate.bench_height", r.bench_height.to_string()),
        ("synth.origin_x", s.origin[0].to_string()),
        ("synth.origin_y", s.origin[1].to_string()),
        ("synth.size_x", s.size[0].to_string()),
        ("synth.size_y", s.size[1].to_string()),
        ("synth.mesh_spacing", s.mesh_spacing.to_string()),
        ("synth.base", s.base.to_string()),
        ("synth.amp_x", s.amp_x.to_string()),
        ("synth.wavelength_x", s.wavelength_x.to_string()),
        ("synth.amp_y", s.amp_y.to_string()),
        ("synth.wavelength_y", s.wavelength_y.to_string()),
        ("synth.dip_x", s.dip_x.to_string()),
        ("synth.dip_y", s.dip_y.to_string()),
        ("synth.perturb_amplitude", s.perturb_amplitude.to_string()),
        ("synth.perturb_correlation", s.perturb_correlation.to_string()),
        ("synth.perturb_bumps", s.perturb_bumps.to_string()),
        ("synth.hole_spacing", s.hole_spacing.to_string()),
        ("synth.explore_spacing", s.explore_spacing.to_string()),
        ("synth.interval", s.interval.to_string()),
        ("synth.collar_z", s.collar_z.to_string()),
        ("synth.hole_depth", s.hole_depth.to_string()),
        ("synth.zone0", chem_text(&s.zones[0])),
        ("synth.zone1", chem_text(&s.zones[1])),
        ("synth.tile", s.tile.to_string()),
        ("synth.bench_height", s.bench_height.to_string()),
        ("synth.pit", s.pit.clone()),
    ]
}

/// Resolved configuration: every known key with its default or override.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: defaults().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.to_string();
                Ok(())
            }
            None => Err(ConfigError::UnknownKey(key.to_string())),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn typed<V: FromStr>(&self, key: &str) -> Result<V, ConfigError>
    where
        V::Err: std::fmt::Display,
    {
        self.get(key).parse::<V>().map_err(|e| ConfigError::Value {
            key: key.to_string(),
            message: e.to_string(),
        })
    }

    fn list_f64(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        self.get(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|e| ConfigError::Value {
                    key: key.to_string(),
                    message: e.to_string(),
                })
            })
            .collect()
    }

    /// Every key and value, sorted, plus the seed.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "# seed = {}", self.seed);
        s
    }

    pub fn scheme(&self) -> Result<DestinationScheme, ConfigError> {
        DestinationScheme::parse(self.get("classes.order"), self.get("classes.rules")).map_err(|e| ConfigError::Value {
            key: "classes.rules".into(),
            message: e.to_string(),
        })
    }

    pub fn smoothing_alpha(&self) -> Result<f64, ConfigError> {
        self.typed("table.smoothing_alpha")
    }

    pub fn warp(&self) -> Result<WarpConfig<f64>, ConfigError> {
        let proximity = if self.get("weights.softmax_beta").is_empty() {
            Proximity::Idw {
                power: self.typed("weights.idw_power")?,
                floor: self.typed("weights.idw_floor")?,
            }
        } else {
            Proximity::Softmax {
                beta: self.typed("weights.softmax_beta")?,
            }
        };
        Ok(WarpConfig {
            extent_xy: self.typed("lattice.extent_xy")?,
            extent_z: self.typed("lattice.extent_z")?,
            step_xy: self.typed("lattice.step_xy")?,
            step_z: self.typed("lattice.step_z")?,
            vertex: VertexParams {
                neighbors: self.typed("neighbors.M")?,
                radius: self.typed("neighbors.radius_m")?,
                proximity,
            },
            strategy: self.typed("search.strategy")?,
            abort_unsupported_fraction: self.typed("abort.unsupported_fraction")?,
        })
    }

    pub fn train(&self) -> Result<TrainConfig, ConfigError> {
        Ok(TrainConfig {
            starts: self.typed("gp.starts")?,
            anneal: self.typed("gp.anneal")?,
            anneal_proposals: self.typed("gp.anneal_proposals")?,
            anneal_cooling: self.typed("gp.anneal_cooling")?,
            max_iterations: self.typed("gp.max_iterations")?,
            gradient_tolerance: self.typed("gp.gradient_tolerance")?,
            max_train: self.typed("gp.max_train")?,
            start_spread: self.typed("gp.start_spread")?,
            seed: self.seed,
        })
    }

    pub fn support(&self) -> Result<Support, ConfigError> {
        self.typed("gp.support")
    }

    pub fn reconcile(&self) -> Result<ReconcileConfig, ConfigError> {
        Ok(ReconcileConfig {
            elements: self
                .get("validate.elements")
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
            benches: self.list_f64("validate.benches")?,
            bench_height: self.typed("validate.bench_height")?,
            support: self.support()?,
            train: self.train()?,
        })
    }

    fn chemistry(&self, key: &str) -> Result<ZoneChemistry, ConfigError> {
        let err = |m: String| ConfigError::Value { key: key.to_string(), message: m };
        let mut out = ZoneChemistry::new();
        for item in self.get(key).split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(err(format!("'{item}' is not element:mean:sigma")));
            }
            let m = parts[1].parse::<f64>().map_err(|e| err(e.to_string()))?;
            let s = parts[2].parse::<f64>().map_err(|e| err(e.to_string()))?;
            out.insert(parts[0].to_string(), (m, s));
        }
        Ok(out)
    }

    pub fn synth(&self) -> Result<SynthSpec, ConfigError> {
        Ok(SynthSpec {
            origin: [self.typed("synth.origin_x")?, self.typed("synth.origin_y")?],
            size: [self.typed("synth.size_x")?, self.typed("synth.size_y")?],
            mesh_spacing: self.typed("synth.mesh_spacing")?,
            base: self.typed("synth.base")?,
            amp_x: self.typed("synth.amp_x")?,
            wavelength_x: self.typed("synth.wavelength_x")?,
            amp_y: self.typed("synth.amp_y")?,
            wavelength_y: self.typed("synth.wavelength_y")?,
            dip_x: self.typed("synth.dip_x")?,
            dip_y: self.typed("synth.dip_y")?,
            perturb_amplitude: self.typed("synth.perturb_amplitude")?,
            perturb_correlation: self.typed("synth.perturb_correlation")?,
            perturb_bumps: self.typed("synth.perturb_bumps")?,
            hole_spacing: self.typed("synth.hole_spacing")?,
            explore_spacing: self.typed("synth.explore_spacing")?,
            interval: self.typed("synth.interval")?,
            collar_z: self.typed("synth.collar_z")?,
            hole_depth: self.typed("synth.hole_depth")?,
            zones: [self.chemistry("synth.zone0")?, self.chemistry("synth.zone1")?],
            tile: self.typed("synth.tile")?,
            bench_height: self.typed("synth.bench_height")?,
            pit: self.get("synth.pit").to_string(),
            seed: self.seed,
        })
    }
}
