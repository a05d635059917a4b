//! Hyperparameter fitting: multi-start, optional annealing, then
//! box-constrained quasi-Newton ascent on the log marginal likelihood.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::kernel::{GpInput, Hyper, Prepared, Support, N_PARAMS};
use super::model::{log_marginal_likelihood, GpModel};
use super::GpError;
use crate::num::{format_sig, Real};
use crate::zone::ZoneId;

pub const MIN_TRAINING_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub starts: usize,
    pub anneal: bool,
    pub anneal_proposals: usize,
    pub anneal_cooling: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Training sets larger than this are subsampled (deterministically).
    pub max_train: usize,
    /// Half-width of the uniform log-space perturbation for starts > 0.
    pub start_spread: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            starts: 8,
            anneal: false,
            anneal_proposals: 200,
            anneal_cooling: 0.95,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            max_train: 400,
            start_spread: 2.0,
            seed: 0,
        }
    }
}

/// Log-space box: ℓ ∈ [0.1, 1e4] m, σf² ∈ [1e-8, 1e8], σn² ∈ [1e-12, 1e8].
pub fn log_bounds() -> [(f64, f64); N_PARAMS] {
    let l = (0.1f64.ln(), 1e4f64.ln());
    [l, l, l, (1e-8f64.ln(), 1e8f64.ln()), (1e-12f64.ln(), 1e8f64.ln())]
}

fn clamp(x: [f64; N_PARAMS]) -> [f64; N_PARAMS] {
    let b = log_bounds();
    let mut out = x;
    for i in 0..N_PARAMS {
        out[i] = x[i].clamp(b[i].0, b[i].1);
    }
    out
}

/// Data-driven starting point: quarter extents for length scales, target
/// variance for the signal, a tenth of it for noise.
pub fn initial_guess<T: Real>(inputs: &[GpInput<T>], targets: &[T]) -> Hyper<T> {
    let ext = |f: &dyn Fn(&GpInput<T>) -> f64| {
        let lo = inputs.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = inputs.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        ((hi - lo) * 0.25).max(1.0)
    };
    let lx = ext(&|i| i.top.x.to_f64_lossy());
    let ly = ext(&|i| i.top.y.to_f64_lossy());
    let lz = ext(&|i| (i.top.z - i.h * T::of(0.5)).to_f64_lossy());
    let y: Vec<f64> = targets.iter().map(|t| t.to_f64_lossy()).collect();
    let m = y.iter().sum::<f64>() / y.len().max(1) as f64;
    let var = (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / y.len().max(1) as f64).max(1e-6);
    let log = clamp([lx.ln(), ly.ln(), lz.ln(), var.ln(), (0.1 * var).ln()]);
    Hyper::from_log(log.map(T::of))
}

/// Deterministic subsample of at most `max` indices, kept in input order.
pub fn subsample(n: usize, max: usize, seed: u64) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5a3b);
    let mut idx = sample_indices(&mut rng, n, max).into_vec();
    idx.sort_unstable();
    idx
}

struct Objective<'a, T> {
    x: &'a Prepared<T>,
    y: &'a [T],
}

impl<T: Real> Objective<'_, T> {
    fn value(&self, log: [f64; N_PARAMS]) -> Option<f64> {
        let h = Hyper::from_log(log.map(T::of));
        log_marginal_likelihood(&h, self.x, self.y, false)
            .ok()
            .map(|l| l.value.to_f64_lossy())
            .filter(|v| v.is_finite())
    }

    fn value_grad(&self, log: [f64; N_PARAMS]) -> Option<(f64, [f64; N_PARAMS])> {
        let h = Hyper::from_log(log.map(T::of));
        let l = log_marginal_likelihood(&h, self.x, self.y, true).ok()?;
        let v = l.value.to_f64_lossy();
        let g = l.gradient.map(|g| g.to_f64_lossy());
        (v.is_finite() && g.iter().all(|g| g.is_finite())).then_some((v, g))
    }
}

/// Gradient with components that push against an active bound zeroed.
fn projected(x: &[f64; N_PARAMS], g: &[f64; N_PARAMS]) -> [f64; N_PARAMS] {
    let b = log_bounds();
    let mut p = *g;
    for i in 0..N_PARAMS {
        if (x[i] <= b[i].0 && g[i] < 0.0) || (x[i] >= b[i].1 && g[i] > 0.0) {
            p[i] = 0.0;
        }
    }
    p
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// BFGS ascent with Armijo backtracking on the projected step.
fn ascend<T: Real>(obj: &Objective<'_, T>, start: [f64; N_PARAMS], cfg: &TrainConfig) -> Option<([f64; N_PARAMS], f64)> {
    let mut x = clamp(start);
    let (mut f, mut g) = obj.value_grad(x)?;
    let identity = || {
        let mut h = [[0.0; N_PARAMS]; N_PARAMS];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        h
    };
    let mut hinv = identity();
    for _ in 0..cfg.max_iterations {
        let pg = projected(&x, &g);
        if norm(&pg) < cfg.gradient_tolerance {
            break;
        }
        let mut d = [0.0; N_PARAMS];
        for i in 0..N_PARAMS {
            d[i] = (0..N_PARAMS).map(|j| hinv[i][j] * pg[j]).sum();
        }
        if d.iter().zip(&pg).map(|(a, b)| a * b).sum::<f64>() <= 0.0 {
            hinv = identity();
            d = pg;
        }
        // Keep the first trial move within one log unit per component.
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut t = if dmax > 1.0 { 1.0 / dmax } else { 1.0 };
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn = [0.0; N_PARAMS];
            for i in 0..N_PARAMS {
                xn[i] = x[i] + t * d[i];
            }
            let xn = clamp(xn);
            let step: f64 = (0..N_PARAMS).map(|i| g[i] * (xn[i] - x[i])).sum();
            if let Some((fx, gx)) = obj.value_grad(xn) {
                if fx >= f + 1e-4 * step && fx.is_finite() {
                    accepted = Some((xn, fx, gx));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else { break };
        let s: [f64; N_PARAMS] = std::array::from_fn(|i| xn[i] - x[i]);
        // Curvature pair for the minimisation of −f.
        let yv: [f64; N_PARAMS] = std::array::from_fn(|i| g[i] - gnew[i]);
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let improved = fnew - f;
        x = xn;
        f = fnew;
        g = gnew;
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let hy: [f64; N_PARAMS] = std::array::from_fn(|i| (0..N_PARAMS).map(|j| hinv[i][j] * yv[j]).sum());
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..N_PARAMS {
                for j in 0..N_PARAMS {
                    hinv[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        if improved.abs() < 1e-12 * (1.0 + f.abs()) && norm(&s) < 1e-10 {
            break;
        }
    }
    Some((x, f))
}

/// Metropolis pre-pass: geometric cooling, Gaussian log-space proposals.
fn anneal<T: Real>(obj: &Objective<'_, T>, start: [f64; N_PARAMS], cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> [f64; N_PARAMS] {
    let Some(mut fx) = obj.value(start) else { return start };
    let mut x = start;
    let mut best = (x, fx);
    let mut temp = 1.0f64.max(fx.abs() * 0.01);
    let step = Normal::new(0.0, 0.5).expect("valid normal");
    for _ in 0..cfg.anneal_proposals {
        let prop = clamp(std::array::from_fn(|i| x[i] + step.sample(rng)));
        let u: f64 = rng.random();
        if let Some(fp) = obj.value(prop) {
            if fp >= fx || u < ((fp - fx) / temp).exp() {
                x = prop;
                fx = fp;
                if fx > best.1 {
                    best = (x, fx);
                }
            }
        }
        temp *= cfg.anneal_cooling;
    }
    best.0
}

/// Rounds each hyperparameter to 9 significant digits so stored and
/// in-memory models factorize identically.
pub fn round_hyper<T: Real>(h: &Hyper<T>) -> Hyper<T> {
    Hyper::from_log(h.log.map(|l| {
        let v: f64 = format_sig(l.exp().to_f64_lossy(), 9).parse().expect("formatted float parses");
        T::of(v.ln())
    }))
}

/// Trains one model. Deterministic for a fixed `cfg.seed`.
pub fn train<T: Real>(
    element: &str,
    geozone: ZoneId,
    support: Support,
    inputs: &[GpInput<T>],
    targets: &[T],
    init: Option<Hyper<T>>,
    cfg: &TrainConfig,
) -> Result<GpModel<T>, GpError> {
    if inputs.len() != targets.len() {
        return Err(GpError::Shape(format!("{} inputs, {} targets", inputs.len(), targets.len())));
    }
    if inputs.len() < MIN_TRAINING_SAMPLES {
        return Err(GpError::TooFewSamples {
            found: inputs.len(),
            needed: MIN_TRAINING_SAMPLES,
        });
    }
    let keep = subsample(inputs.len(), cfg.max_train.max(MIN_TRAINING_SAMPLES), cfg.seed);
    let xs: Vec<GpInput<T>> = keep.iter().map(|&i| inputs[i]).collect();
    let ys: Vec<T> = keep.iter().map(|&i| targets[i]).collect();
    let offset = ys.iter().copied().sum::<T>() / T::of_usize(ys.len());
    let centred: Vec<T> = ys.iter().map(|&v| v - offset).collect();
    let prepared = Prepared::new(&xs);
    let obj = Objective { x: &prepared, y: &centred };

    let init = init.unwrap_or_else(|| initial_guess(&xs, &ys));
    let base: [f64; N_PARAMS] = init.log.map(|v| v.to_f64_lossy());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<([f64; N_PARAMS], f64)> = None;
    for s in 0..cfg.starts.max(1) {
        let mut start = base;
        if s > 0 {
            for v in start.iter_mut() {
                *v += rng.random_range(-cfg.start_spread..=cfg.start_spread);
            }
        }
        let start = clamp(start);
        let start = if cfg.anneal { anneal(&obj, start, cfg, &mut rng) } else { start };
        if let Some((x, f)) = ascend(&obj, start, cfg) {
            if best.is_none_or(|(_, bf)| f > bf) {
                best = Some((x, f));
            }
        }
    }
    let (x, _) = best.ok_or(GpError::NotPositiveDefinite)?;
    let hyper = round_hyper(&Hyper::from_log(x.map(T::of)));
    GpModel::fit(element, geozone, support, xs, ys, hyper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::gp::kernel::kernel;
    use crate::gp::linalg::Cholesky;
    use rand_distr::StandardNormal;

    fn draw(truth: &Hyper<f64>, seed: u64) -> (Vec<GpInput<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inputs = Vec::new();
        for _ in 0..25 {
            let (x, y) = (rng.random_range(0.0..40.0), rng.random_range(0.0..40.0));
            for j in 0..8 {
                inputs.push(GpInput::point(Vec3::new(x, y, 30.0 - 2.5 * j as f64)));
            }
        }
        let n = inputs.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = kernel(truth, &inputs[i], &inputs[j]);
            }
            k[i * n + i] += 1e-8 + truth.noise_variance();
        }
        let c = Cholesky::new(&k, n).unwrap();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let l = c.factor();
        let y = (0..n).map(|i| (0..=i).map(|j| l[i * n + j] * z[j]).sum::<f64>() + 50.0).collect();
        (inputs, y)
    }

    #[test]
    fn recovers_generating_hyperparameters() {
        let truth = Hyper::new(10.0, 10.0, 10.0, 4.0, 0.01);
        let (inputs, y) = draw(&truth, 21);
        assert_eq!(inputs.len(), 200);
        let cfg = TrainConfig { starts: 4, ..TrainConfig::default() };
        let m = train("Fe", ZoneId(0), Support::Point, &inputs, &y, None, &cfg).unwrap();
        for i in 0..N_PARAMS {
            let err = (m.hyper().log[i] - truth.log[i]).abs();
            assert!(err < 0.3, "param {i}: {} vs {}", m.hyper().log[i], truth.log[i]);
        }
    }

    #[test]
    fn too_few_samples() {
        let x = vec![GpInput::point(Vec3::new(0.0, 0.0, 0.0)); 4];
        let e = train("Fe", ZoneId(0), Support::Point, &x, &[1.0; 4], None, &TrainConfig::default());
        assert!(matches!(e, Err(GpError::TooFewSamples { found: 4, .. })));
    }

    #[test]
    fn deterministic_under_seed() {
        let truth = Hyper::new(8.0, 8.0, 5.0, 2.0, 0.05);
        let (inputs, y) = draw(&truth, 2);
        let cfg = TrainConfig { starts: 2, anneal: true, max_train: 60, max_iterations: 30, seed: 9, ..TrainConfig::default() };
        let a = train("Fe", ZoneId(1), Support::Point, &inputs, &y, None, &cfg).unwrap();
        let b = train("Fe", ZoneId(1), Support::Point, &inputs, &y, None, &cfg).unwrap();
        assert_eq!(a.hyper().log, b.hyper().log);
        assert_eq!(a.len(), 60);
    }

    #[test]
    fn subsample_is_sorted_and_stable() {
        let a = subsample(100, 10, 3);
        assert_eq!(a, subsample(100, 10, 3));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample(5, 10, 3), vec![0, 1, 2, 3, 4]);
    }
}
