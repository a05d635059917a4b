//! Fitted GP regressor: factorization, marginal likelihood, prediction.

use rayon::prelude::*;

use super::kernel::{covariance_with_grads, cross_covariance, GpInput, Hyper, Prepared, Support, N_PARAMS};
use super::linalg::{cholesky_with_jitter, Cholesky};
use super::GpError;
use crate::num::Real;
use crate::zone::ZoneId;

#[derive(Debug, Clone)]
pub struct GpModel<T> {
    pub element: String,
    pub geozone: ZoneId,
    pub support: Support,
    hyper: Hyper<T>,
    inputs: Vec<GpInput<T>>,
    targets: Vec<T>,
    offset: T,
    prepared: Prepared<T>,
    chol: Cholesky<T>,
    alpha: Vec<T>,
    jitter: T,
}

/// Value and gradient (w.r.t. each log-hyperparameter) of the log marginal
/// likelihood for centred targets `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lml<T> {
    pub value: T,
    pub gradient: [T; N_PARAMS],
}

fn mean<T: Real>(y: &[T]) -> T {
    if y.is_empty() {
        return T::zero();
    }
    y.iter().copied().sum::<T>() / T::of_usize(y.len())
}

/// K(X,X) + σn²I, factorized; returns (signal K, factor, jitter).
fn factorize<T: Real>(hyper: &Hyper<T>, x: &Prepared<T>, grads: bool) -> Result<(Vec<T>, Cholesky<T>, T, Option<[Vec<T>; 3]>), GpError> {
    let n = x.len();
    let (k, d) = covariance_with_grads(hyper, x, grads);
    let mut a = k.clone();
    let noise = hyper.noise_variance();
    for i in 0..n {
        a[i * n + i] += noise;
    }
    let (chol, jitter) = cholesky_with_jitter(&a, n).ok_or(GpError::NotPositiveDefinite)?;
    Ok((k, chol, jitter, d))
}

/// log p(y | X, θ) and its gradient, for already-centred `y`.
pub fn log_marginal_likelihood<T: Real>(hyper: &Hyper<T>, x: &Prepared<T>, y: &[T], gradient: bool) -> Result<Lml<T>, GpError> {
    let n = x.len();
    let (k, chol, _, d) = factorize(hyper, x, gradient)?;
    let alpha = chol.solve(y);
    let fit: T = y.iter().zip(&alpha).map(|(&a, &b)| a * b).sum();
    let half = T::of(0.5);
    let value = -half * fit - half * chol.log_det() - T::of_usize(n) * half * (T::of(2.0) * T::PI()).ln();
    let mut g = [T::zero(); N_PARAMS];
    if let Some(d) = d {
        let inv = chol.inverse();
        // W = ααᵀ − K⁻¹; each component is ½ tr(W ∂K).
        let mut w = inv;
        for i in 0..n {
            for j in 0..n {
                w[i * n + j] = alpha[i] * alpha[j] - w[i * n + j];
            }
        }
        let dot = |m: &[T]| w.iter().zip(m).map(|(&a, &b)| a * b).sum::<T>() * half;
        for (a, dk) in d.iter().enumerate() {
            g[a] = dot(dk);
        }
        g[3] = dot(&k);
        let trace: T = (0..n).map(|i| w[i * n + i]).sum();
        g[4] = half * hyper.noise_variance() * trace;
    }
    Ok(Lml { value, gradient: g })
}

impl<T: Real> GpModel<T> {
    /// Factorizes the training covariance for fixed θ. Targets are
    /// mean-centred; the offset is added back at prediction.
    pub fn fit(
        element: &str,
        geozone: ZoneId,
        support: Support,
        inputs: Vec<GpInput<T>>,
        targets: Vec<T>,
        hyper: Hyper<T>,
    ) -> Result<Self, GpError> {
        if inputs.len() != targets.len() {
            return Err(GpError::Shape(format!("{} inputs, {} targets", inputs.len(), targets.len())));
        }
        if inputs.is_empty() {
            return Err(GpError::TooFewSamples { found: 0, needed: 1 });
        }
        if hyper.log.iter().any(|v| !v.is_finite()) {
            return Err(GpError::Hyper("non-finite hyperparameters".into()));
        }
        let offset = mean(&targets);
        let y: Vec<T> = targets.iter().map(|&t| t - offset).collect();
        let prepared = Prepared::new(&inputs);
        let (_, chol, jitter, _) = factorize(&hyper, &prepared, false)?;
        let alpha = chol.solve(&y);
        Ok(Self {
            element: element.to_string(),
            geozone,
            support,
            hyper,
            inputs,
            targets,
            offset,
            prepared,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn hyper(&self) -> &Hyper<T> {
        &self.hyper
    }

    pub fn inputs(&self) -> &[GpInput<T>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[T] {
        &self.targets
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn factor(&self) -> &Cholesky<T> {
        &self.chol
    }

    pub fn log_marginal_likelihood(&self) -> Result<Lml<T>, GpError> {
        let y: Vec<T> = self.targets.iter().map(|&t| t - self.offset).collect();
        log_marginal_likelihood(&self.hyper, &self.prepared, &y, true)
    }

    /// Predictive mean and latent variance at each query.
    pub fn predict(&self, queries: &[GpInput<T>]) -> Vec<(T, T)> {
        queries.par_iter().map(|q| self.predict_one(q)).collect()
    }

    /// Predictive means and the full latent covariance (row-major q×q).
    pub fn predict_joint(&self, queries: &[GpInput<T>]) -> (Vec<T>, Vec<T>) {
        let q = queries.len();
        let n = self.len();
        let qp = Prepared::new(queries);
        let ks = cross_covariance(&self.hyper, &qp, &self.prepared);
        let mut cov = cross_covariance(&self.hyper, &qp, &qp);
        let mut means = Vec::with_capacity(q);
        let mut v = Vec::with_capacity(q);
        for i in 0..q {
            let row = &ks[i * n..(i + 1) * n];
            means.push(row.iter().zip(&self.alpha).map(|(&a, &b)| a * b).sum::<T>() + self.offset);
            let mut r = row.to_vec();
            self.chol.forward(&mut r);
            v.push(r);
        }
        for i in 0..q {
            for j in 0..q {
                cov[i * q + j] -= v[i].iter().zip(&v[j]).map(|(&a, &b)| a * b).sum::<T>();
            }
        }
        (means, cov)
    }

    pub fn predict_one(&self, q: &GpInput<T>) -> (T, T) {
        let qp = Prepared::new(std::slice::from_ref(q));
        let mut ks = cross_covariance(&self.hyper, &qp, &self.prepared);
        let kss = cross_covariance(&self.hyper, &qp, &qp)[0];
        let mu = ks.iter().zip(&self.alpha).map(|(&a, &b)| a * b).sum::<T>() + self.offset;
        self.chol.forward(&mut ks);
        let v: T = ks.iter().map(|&a| a * a).sum();
        (mu, (kss - v).max(T::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(rng: &mut ChaCha8Rng, n: usize) -> (Vec<GpInput<f64>>, Vec<f64>) {
        let inputs: Vec<GpInput<f64>> = (0..n)
            .map(|_| {
                let p = Vec3::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0), rng.random_range(0.0..10.0));
                if rng.random_bool(0.5) {
                    GpInput::interval(p, rng.random_range(0.5..3.0))
                } else {
                    GpInput::point(p)
                }
            })
            .collect();
        let y = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        (inputs, y)
    }

    #[test]
    fn single_point_closed_form() {
        let h = Hyper::new(5.0, 5.0, 5.0, 2.0, 0.5);
        let x = Prepared::new(&[GpInput::point(Vec3::new(0.0, 0.0, 0.0))]);
        let l = log_marginal_likelihood(&h, &x, &[0.0], false).unwrap();
        let expect = -0.5 * f64::ln(2.5) - 0.5 * f64::ln(2.0 * std::f64::consts::PI);
        assert!((l.value - expect).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let (inputs, y) = random_set(&mut rng, 20);
            let x = Prepared::new(&inputs);
            let h = Hyper::from_log([
                rng.random_range(1.0..2.5),
                rng.random_range(1.0..2.5),
                rng.random_range(0.0..2.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-4.0..-1.0),
            ]);
            let g = log_marginal_likelihood(&h, &x, &y, true).unwrap().gradient;
            for j in 0..N_PARAMS {
                let mut a = h;
                let mut b = h;
                a.log[j] += 1e-5;
                b.log[j] -= 1e-5;
                let fd = (log_marginal_likelihood(&a, &x, &y, false).unwrap().value
                    - log_marginal_likelihood(&b, &x, &y, false).unwrap().value)
                    / 2e-5;
                let rel = (fd - g[j]).abs() / g[j].abs().max(1e-3);
                assert!(rel < 1e-5, "param {j}: analytic {} fd {fd}", g[j]);
            }
        }
    }

    #[test]
    fn interpolates_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (inputs, y) = random_set(&mut rng, 15);
        let m = GpModel::fit("Fe", ZoneId(0), Support::Interval, inputs.clone(), y.clone(), Hyper::new(6.0, 6.0, 3.0, 1.0, 1e-12)).unwrap();
        for (q, (mu, var)) in inputs.iter().zip(m.predict(&inputs)) {
            let t = y[inputs.iter().position(|i| i == q).unwrap()];
            assert!((mu - t).abs() < 1e-6, "{mu} vs {t}");
            assert!(var <= 1e-6);
        }
    }

    #[test]
    fn far_query_reverts_to_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (inputs, y) = random_set(&mut rng, 10);
        let m = GpModel::fit("Fe", ZoneId(0), Support::Point, inputs, y, Hyper::new(2.0, 2.0, 2.0, 3.0, 0.01)).unwrap();
        let (mu, var) = m.predict_one(&GpInput::point(Vec3::new(1e4, 1e4, 0.0)));
        assert!((mu - m.offset()).abs() < 1e-12);
        assert!((var - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mean_is_linear_in_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (inputs, y) = random_set(&mut rng, 12);
        let h = Hyper::new(4.0, 4.0, 2.0, 1.0, 0.05);
        let a = GpModel::fit("Fe", ZoneId(0), Support::Interval, inputs.clone(), y.clone(), h).unwrap();
        let y3: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
        let b = GpModel::fit("Fe", ZoneId(0), Support::Interval, inputs, y3, h).unwrap();
        let q = [GpInput::point(Vec3::new(5.0, 5.0, 5.0)), GpInput::interval(Vec3::new(9.0, 1.0, 4.0), 2.0)];
        for (pa, pb) in a.predict(&q).into_iter().zip(b.predict(&q)) {
            assert!((3.0 * pa.0 - pb.0).abs() < 1e-10);
            assert!((pa.1 - pb.1).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicated_points_stay_factorizable() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (mut inputs, mut y) = random_set(&mut rng, 10);
        inputs.extend(inputs.clone());
        y.extend(y.clone());
        let h = Hyper::new(4.0, 4.0, 2.0, 1.0, 1e-14);
        let x = Prepared::new(&inputs);
        let y0: Vec<f64> = y.iter().map(|v| v - mean(&y)).collect();
        let l = log_marginal_likelihood(&h, &x, &y0, true).unwrap();
        assert!(l.value.is_finite());
    }
}
