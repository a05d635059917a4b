//! Dense symmetric positive-definite helpers, row-major.

use crate::num::Real;

/// Lower-triangular Cholesky factor of an n×n SPD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// `None` if a pivot is not strictly positive.
    pub fn new(a: &[T], n: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> &[T] {
        &self.l
    }

    /// log |A| = 2 Σ log L_ii.
    pub fn log_det(&self) -> T {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<T>() * T::of(2.0)
    }

    /// Solves L x = b in place.
    pub fn forward(&self, b: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves Lᵀ x = b in place.
    pub fn backward(&self, b: &mut [T]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// A⁻¹ b.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// Full A⁻¹ via L⁻¹ (row-major, symmetric).
    pub fn inverse(&self) -> Vec<T> {
        let n = self.n;
        // Columns of L⁻¹, stored as rows of its transpose.
        let mut linv_t = vec![T::zero(); n * n];
        for j in 0..n {
            let col = &mut linv_t[j * n..(j + 1) * n];
            col[j] = T::one();
            for i in j..n {
                let mut s = col[i];
                for k in j..i {
                    s -= self.l[i * n + k] * col[k];
                }
                col[i] = s / self.l[i * n + i];
            }
        }
        let mut inv = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let lo = i.max(j);
                let mut s = T::zero();
                for k in lo..n {
                    s += linv_t[i * n + k] * linv_t[j * n + k];
                }
                inv[i * n + j] = s;
                inv[j * n + i] = s;
            }
        }
        inv
    }
}

/// Relative jitter levels tried, scaled by the mean diagonal.
pub const JITTER_LEVELS: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Cholesky of `a`, escalating diagonal jitter when a factorization fails.
/// Returns the factor and the jitter actually added.
pub fn cholesky_with_jitter<T: Real>(a: &[T], n: usize) -> Option<(Cholesky<T>, T)> {
    if let Some(c) = Cholesky::new(a, n) {
        return Some((c, T::zero()));
    }
    let mean_diag = (0..n).map(|i| a[i * n + i]).sum::<T>() / T::of_usize(n.max(1));
    let scale = if mean_diag > T::zero() { mean_diag } else { T::one() };
    let mut work = a.to_vec();
    for rel in JITTER_LEVELS {
        let j = scale * T::of(rel);
        for i in 0..n {
            work[i * n + i] = a[i * n + i] + j;
        }
        if let Some(c) = Cholesky::new(&work, n) {
            return Some((c, j));
        }
    }
    None
}
