//! Argmax over the displacement lattice: exhaustive or coarse-to-fine.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::{DisplacementLattice, WarpError};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    #[default]
    Brute,
    Hierarchical,
}

impl FromStr for SearchStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "brute" => Ok(Self::Brute),
            "hierarchical" => Ok(Self::Hierarchical),
            other => Err(format!("unknown search strategy '{other}' (brute | hierarchical)")),
        }
    }
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Brute => "brute",
            Self::Hierarchical => "hierarchical",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<T> {
    pub best: usize,
    pub value: T,
    /// Every candidate evaluated, in ascending k.
    pub evaluated: Vec<(usize, T)>,
}

impl<T> SearchResult<T> {
    pub fn evaluations(&self) -> usize {
        self.evaluated.len()
    }
}

/// Fails unless every axis has 1 or 2^p + 1 points.
pub fn check_hierarchical<T: Real>(lattice: &DisplacementLattice<T>) -> Result<(), WarpError> {
    for (a, &n) in lattice.counts().iter().enumerate() {
        if n != 1 && !(n - 1).is_power_of_two() {
            return Err(WarpError::Lattice(format!(
                "hierarchical search needs 2^p + 1 points per axis; axis {a} has {n}"
            )));
        }
    }
    Ok(())
}

pub fn search<T: Real, F: FnMut(usize) -> T>(
    lattice: &DisplacementLattice<T>,
    strategy: SearchStrategy,
    eval: F,
) -> Result<SearchResult<T>, WarpError> {
    match strategy {
        SearchStrategy::Brute => Ok(brute(lattice, eval)),
        SearchStrategy::Hierarchical => hierarchical(lattice, eval),
    }
}

pub fn brute<T: Real, F: FnMut(usize) -> T>(lattice: &DisplacementLattice<T>, mut eval: F) -> SearchResult<T> {
    let evaluated: Vec<(usize, T)> = (0..lattice.len()).map(|k| (k, eval(k))).collect();
    let (best, value) = best_of(lattice, evaluated.iter().copied());
    SearchResult { best, value, evaluated }
}

fn best_of<T: Real>(lattice: &DisplacementLattice<T>, it: impl Iterator<Item = (usize, T)>) -> (usize, T) {
    let mut best: Option<(T, usize)> = None;
    for (k, v) in it {
        match best {
            Some(b) if lattice.rank((v, k), b) != Ordering::Greater => {}
            _ => best = Some((v, k)),
        }
    }
    let (v, k) = best.expect("lattice is never empty");
    (k, v)
}

/// Coarse-to-fine octant search.
///
/// Each level probes the centre of the current cell and its eight diagonal
/// neighbours `c + (±1, ±1, ±1)`. The best diagonal picks, per axis, the
/// half-cell on its side of the centre. Once every axis is down to two
/// points the remaining 2×2×2 block is evaluated and the best candidate
/// seen anywhere seeds a 26-neighbour ascent. Exact on rows with a single
/// local maximum under the tie order.
pub fn hierarchical<T: Real, F: FnMut(usize) -> T>(
    lattice: &DisplacementLattice<T>,
    mut eval: F,
) -> Result<SearchResult<T>, WarpError> {
    check_hierarchical(lattice)?;
    let n = lattice.counts();
    let mut cache: HashMap<usize, T> = HashMap::new();
    let mut probe = |c: [usize; 3], cache: &mut HashMap<usize, T>| -> (T, usize) {
        let k = lattice.index(c[0], c[1], c[2]);
        let v = *cache.entry(k).or_insert_with(|| eval(k));
        (v, k)
    };
    let mut lo = [0usize; 3];
    let mut hi = [n[0] - 1, n[1] - 1, n[2] - 1];
    while (0..3).any(|a| hi[a] - lo[a] >= 2) {
        let mut centre = [0usize; 3];
        for a in 0..3 {
            centre[a] = if hi[a] - lo[a] >= 2 { (lo[a] + hi[a]) / 2 } else { lo[a] };
        }
        probe(centre, &mut cache);
        let mut best: Option<((T, usize), [usize; 3])> = None;
        for signs in 0..8u8 {
            let mut c = [0usize; 3];
            for a in 0..3 {
                let up = signs & (1 << a) != 0;
                c[a] = match hi[a] - lo[a] {
                    0 => lo[a],
                    1 => if up { hi[a] } else { lo[a] },
                    _ => if up { centre[a] + 1 } else { centre[a] - 1 },
                };
            }
            let s = probe(c, &mut cache);
            match best {
                Some((b, _)) if lattice.rank(s, b) != Ordering::Greater => {}
                _ => best = Some((s, c)),
            }
        }
        let (_, winner) = best.expect("eight probes");
        for a in 0..3 {
            if hi[a] - lo[a] >= 2 {
                if winner[a] > centre[a] {
                    lo[a] = centre[a];
                } else {
                    hi[a] = centre[a];
                }
            }
        }
    }
    for signs in 0..8u8 {
        let mut c = [0usize; 3];
        for a in 0..3 {
            c[a] = if signs & (1 << a) != 0 { hi[a] } else { lo[a] };
        }
        probe(c, &mut cache);
    }
    // Local ascent under the tie order: ends at the argmax whenever that is
    // the only point without a better 26-neighbour.
    let mut here = best_of(lattice, cache.iter().map(|(&k, &v)| (k, v)));
    loop {
        let c = lattice.coords(here.0);
        let mut step: Option<(usize, T)> = None;
        for d in 0..27usize {
            let off = [d % 3, d / 3 % 3, d / 9];
            if off == [1, 1, 1] {
                continue;
            }
            let mut q = [0usize; 3];
            let mut inside = true;
            for a in 0..3 {
                let v = c[a] + off[a];
                inside &= v >= 1 && v <= n[a];
                q[a] = v.wrapping_sub(1);
            }
            if !inside {
                continue;
            }
            let (v, k) = probe(q, &mut cache);
            match step {
                Some((bk, bv)) if lattice.rank((v, k), (bv, bk)) != Ordering::Greater => {}
                _ => step = Some((k, v)),
            }
        }
        match step {
            Some((k, v)) if lattice.rank((v, k), (here.1, here.0)) == Ordering::Greater => here = (k, v),
            _ => break,
        }
    }
    let mut evaluated: Vec<(usize, T)> = cache.into_iter().collect();
    evaluated.sort_unstable_by_key(|&(k, _)| k);
    let (best, value) = best_of(lattice, evaluated.iter().copied());
    Ok(SearchResult { best, value, evaluated })
}
