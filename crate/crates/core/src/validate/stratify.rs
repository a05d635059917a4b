//! Sample counts above/below a surface, and bench data masks.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use super::ValidateError;
use crate::chemistry::{AssaySample, ClassGroup, DestinationScheme};
use crate::mesh::HeightField;
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MaskMode {
    IntraBench,
    BenchBelow,
}

impl MaskMode {
    pub const ALL: [MaskMode; 2] = [MaskMode::IntraBench, MaskMode::BenchBelow];
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IntraBench => "intra-bench",
            Self::BenchBelow => "bench-below",
        })
    }
}

impl FromStr for MaskMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "intra-bench" => Ok(Self::IntraBench),
            "bench-below" => Ok(Self::BenchBelow),
            o => Err(format!("unknown mask mode '{o}' (intra-bench | bench-below)")),
        }
    }
}

/// Data allowed down to elevation `rl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchMask<T> {
    pub mode: MaskMode,
    pub rl: T,
}

impl<T: Real> BenchMask<T> {
    /// Intra-bench uses the bench floor; bench-below stops at the bench top,
    /// so the bench itself is unseen.
    pub fn for_bench(mode: MaskMode, bench: T, bench_height: T) -> Self {
        let rl = match mode {
            MaskMode::IntraBench => bench,
            MaskMode::BenchBelow => bench + bench_height,
        };
        Self { mode, rl }
    }

    pub fn keeps(&self, s: &AssaySample<T>) -> bool {
        s.collar.z >= self.rl
    }
}

/// Indices of the samples the mask keeps, in order.
pub fn apply_bench_mask<T: Real>(samples: &[AssaySample<T>], mask: &BenchMask<T>) -> Vec<usize> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| mask.keeps(s))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stratification {
    pub classes: Vec<String>,
    pub above: Vec<usize>,
    pub below: Vec<usize>,
    pub outside: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StratRatios {
    /// (HG+BL)/(HG+BL+LG+W) above.
    pub above_all: f64,
    /// (HG+BL)/(HG+BL+W) above.
    pub above_no_lg: f64,
    /// (LG+W)/(all) below.
    pub below_all: f64,
    /// W/(HG+W) below.
    pub below_w_hg: f64,
}

impl Stratification {
    fn group_counts(&self, counts: &[usize]) -> [usize; 4] {
        let mut g = [0usize; 4];
        for (name, &n) in self.classes.iter().zip(counts) {
            match ClassGroup::from_name(name) {
                ClassGroup::HighGrade => g[0] += n,
                ClassGroup::Blended => g[1] += n,
                ClassGroup::LowGrade => g[2] += n,
                ClassGroup::Waste => g[3] += n,
                ClassGroup::Other => {}
            }
        }
        g
    }

    /// Group counts [HG, BL, LG, W] above the surface.
    pub fn above_groups(&self) -> [usize; 4] {
        self.group_counts(&self.above)
    }

    pub fn below_groups(&self) -> [usize; 4] {
        self.group_counts(&self.below)
    }

    pub fn ratios(&self) -> StratRatios {
        let r = |a: usize, b: usize| if b == 0 { f64::NAN } else { a as f64 / b as f64 };
        let [hg, bl, lg, w] = self.above_groups();
        let [bhg, bbl, blg, bw] = self.below_groups();
        StratRatios {
            above_all: r(hg + bl, hg + bl + lg + w),
            above_no_lg: r(hg + bl, hg + bl + w),
            below_all: r(blg + bw, bhg + bbl + blg + bw),
            below_w_hg: r(bw, bhg + bw),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,above,below\n");
        for (i, c) in self.classes.iter().enumerate() {
            let _ = writeln!(s, "{c},{},{}", self.above[i], self.below[i]);
        }
        let _ = writeln!(s, "outside,{},", self.outside);
        let r = self.ratios();
        let _ = writeln!(s, "ratio:(HG+BL)/(HG+BL+LG+W),{:.6},", r.above_all);
        let _ = writeln!(s, "ratio:(HG+BL)/(HG+BL+W),{:.6},", r.above_no_lg);
        let _ = writeln!(s, "ratio:(LG+W)/(all),,{:.6}", r.below_all);
        let _ = writeln!(s, "ratio:W/(HG+W),,{:.6}", r.below_w_hg);
        s
    }
}

/// A sample is above when its interval midpoint lies strictly above the
/// surface; samples off the footprint are counted as outside.
pub fn stratify<T: Real>(
    samples: &[AssaySample<T>],
    scheme: &DestinationScheme,
    surface: &HeightField<T>,
) -> Result<Stratification, ValidateError> {
    let n = scheme.len();
    let mut out = Stratification {
        classes: scheme.names().to_vec(),
        above: vec![0; n],
        below: vec![0; n],
        outside: 0,
    };
    for s in samples {
        let c = scheme.classify(&s.chemistry)?.0 as usize;
        let m = s.midpoint();
        match surface.elevation(m.x, m.y) {
            None => out.outside += 1,
            Some(z) if m.z > z => out.above[c] += 1,
            Some(_) => out.below[c] += 1,
        }
    }
    Ok(out)
}
