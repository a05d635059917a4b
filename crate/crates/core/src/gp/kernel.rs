//! Anisotropic squared-exponential kernel with vertical interval support.

use std::fmt;
use std::str::FromStr;

use crate::geom::Vec3;
use crate::num::Real;

/// 8-point Gauss–Legendre nodes and weights on [−1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Number of log-hyperparameters: ℓx, ℓy, ℓz, σf², σn².
pub const N_PARAMS: usize = 5;

/// θ in natural-log space: `[ln ℓx, ln ℓy, ln ℓz, ln σf², ln σn²]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper<T> {
    pub log: [T; N_PARAMS],
}

impl<T: Real> Hyper<T> {
    pub fn new(lx: T, ly: T, lz: T, signal: T, noise: T) -> Self {
        Self {
            log: [lx.ln(), ly.ln(), lz.ln(), signal.ln(), noise.ln()],
        }
    }

    pub fn from_log(log: [T; N_PARAMS]) -> Self {
        Self { log }
    }

    pub fn lengths(&self) -> [T; 3] {
        [self.log[0].exp(), self.log[1].exp(), self.log[2].exp()]
    }

    pub fn signal_variance(&self) -> T {
        self.log[3].exp()
    }

    pub fn noise_variance(&self) -> T {
        self.log[4].exp()
    }
}

/// A point or a vertical interval from `top` down to `top − h`. The
/// observation at an interval is the average over its length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpInput<T> {
    pub top: Vec3<T>,
    pub h: T,
}

impl<T: Real> GpInput<T> {
    pub fn point(p: Vec3<T>) -> Self {
        Self { top: p, h: T::zero() }
    }

    pub fn interval(top: Vec3<T>, h: T) -> Self {
        Self { top, h }
    }

    pub fn is_point(&self) -> bool {
        self.h == T::zero()
    }

    /// Quadrature elevations and weights (summing to 1).
    pub fn nodes(&self) -> Vec<(T, T)> {
        if self.is_point() {
            return vec![(self.top.z, T::one())];
        }
        let half = self.h * T::of(0.5);
        let mid = self.top.z - half;
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(&x, w)| (mid + half * T::of(x), T::of(w * 0.5)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Support {
    Point,
    #[default]
    Interval,
}

impl FromStr for Support {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "point" => Ok(Self::Point),
            "interval" => Ok(Self::Interval),
            o => Err(format!("unknown support '{o}' (point | interval)")),
        }
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Point => "point",
            Self::Interval => "interval",
        })
    }
}

/// Precomputed quadrature for a set of inputs.
#[derive(Debug, Clone)]
pub struct Prepared<T> {
    xy: Vec<[T; 2]>,
    nodes: Vec<Vec<(T, T)>>,
}

impl<T: Real> Prepared<T> {
    pub fn new(inputs: &[GpInput<T>]) -> Self {
        Self {
            xy: inputs.iter().map(|i| [i.top.x, i.top.y]).collect(),
            nodes: inputs.iter().map(|i| i.nodes()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.xy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xy.is_empty()
    }
}

/// Covariance pieces for one pair: the kernel value and its derivative
/// with respect to each log length scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerms<T> {
    pub k: T,
    pub dlog_l: [T; 3],
}

fn node_order<T: Real>(a: &[(T, T)], b: &[(T, T)]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(p, q)| p.0.cmp_partial(&q.0).then_with(|| p.1.cmp_partial(&q.1)))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// k(a, b) = σf²·exp(−½ Σ (Δ/ℓ)²), averaged over interval support in z.
pub fn pair<T: Real>(hyper: &Hyper<T>, a_xy: [T; 2], a_nodes: &[(T, T)], b_xy: [T; 2], b_nodes: &[(T, T)]) -> PairTerms<T> {
    let [lx, ly, lz] = hyper.lengths();
    let half = T::of(0.5);
    let ux = (a_xy[0] - b_xy[0]) / lx;
    let uy = (a_xy[1] - b_xy[1]) / ly;
    let qx = ux * ux;
    let qy = uy * uy;
    let exy = (-(qx + qy) * half).exp();
    // Fixed loop order keeps k(a, b) and k(b, a) bit-identical.
    let (a_nodes, b_nodes) = if node_order(a_nodes, b_nodes) == std::cmp::Ordering::Greater {
        (b_nodes, a_nodes)
    } else {
        (a_nodes, b_nodes)
    };
    let mut z = T::zero();
    let mut zq = T::zero();
    for &(za, wa) in a_nodes {
        for &(zb, wb) in b_nodes {
            let u = (za - zb) / lz;
            let q = u * u;
            let e = wa * wb * (-q * half).exp();
            z += e;
            zq += e * q;
        }
    }
    let s = hyper.signal_variance();
    let k = s * exy * z;
    PairTerms {
        k,
        dlog_l: [k * qx, k * qy, s * exy * zq],
    }
}

pub fn kernel<T: Real>(hyper: &Hyper<T>, a: &GpInput<T>, b: &GpInput<T>) -> T {
    pair(hyper, [a.top.x, a.top.y], &a.nodes(), [b.top.x, b.top.y], &b.nodes()).k
}

/// Signal covariance K(A, B), row-major |A|×|B|.
pub fn cross_covariance<T: Real>(hyper: &Hyper<T>, a: &Prepared<T>, b: &Prepared<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out.push(pair(hyper, a.xy[i], &a.nodes[i], b.xy[j], &b.nodes[j]).k);
        }
    }
    out
}

/// Signal covariance K(X, X) and, when `grads` is set, dK/d ln ℓ per axis.
pub fn covariance_with_grads<T: Real>(hyper: &Hyper<T>, x: &Prepared<T>, grads: bool) -> (Vec<T>, Option<[Vec<T>; 3]>) {
    let n = x.len();
    let mut k = vec![T::zero(); n * n];
    let mut d: Option<[Vec<T>; 3]> = grads.then(|| [vec![T::zero(); n * n], vec![T::zero(); n * n], vec![T::zero(); n * n]]);
    for i in 0..n {
        for j in 0..=i {
            let p = pair(hyper, x.xy[i], &x.nodes[i], x.xy[j], &x.nodes[j]);
            k[i * n + j] = p.k;
            k[j * n + i] = p.k;
            if let Some(d) = d.as_mut() {
                for a in 0..3 {
                    d[a][i * n + j] = p.dlog_l[a];
                    d[a][j * n + i] = p.dlog_l[a];
                }
            }
        }
    }
    (k, d)
}
