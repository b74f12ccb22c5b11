//! Reference urns: G-urns and a two-colour weighted Polya urn with
//! Bernoulli replacement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ants::Checkpoints;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UrnError {
    #[error("G returned {value} at x = {x} (step {step}); it must map into [0, 1]")]
    OutOfRange { step: u64, x: f64, value: f64 },
    #[error("normalization constant must be >= 0, got {0}")]
    Normalization(f64),
    #[error("urn parameters invalid: {0}")]
    Params(String),
}

/// Normalized value `X / (n + c)`, clipped to `[0, 1]`; `1` when `n + c`
/// is zero.
pub fn normalized(x: u64, n: u64, c: f64) -> f64 {
    let den = n as f64 + c;
    if den <= 0.0 {
        1.0
    } else {
        (x as f64 / den).clamp(0.0, 1.0)
    }
}

/// Simulates `X_{n+1} = X_n + Bernoulli(G(X_n / (n + c)))` from `X_0 = 1`
/// and returns the normalized trajectory `Xhat_0, ..., Xhat_{n_steps}`.
pub fn g_urn_run(g: impl Fn(f64) -> f64, n_steps: u64, seed: u64, c: f64) -> Result<Vec<f64>, UrnError> {
    if !(c >= 0.0) {
        return Err(UrnError::Normalization(c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = 1u64;
    let mut out = Vec::with_capacity(n_steps as usize + 1);
    out.push(normalized(x, 0, c));
    for n in 0..n_steps {
        let xhat = out[n as usize];
        let prob = g(xhat);
        if !(0.0..=1.0).contains(&prob) {
            return Err(UrnError::OutOfRange { step: n, x: xhat, value: prob });
        }
        if rng.gen::<f64>() < prob {
            x += 1;
        }
        out.push(normalized(x, n + 1, c));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FixedPoints {
    /// Isolated fixed points with `G'(p) <= 1 + tol`.
    pub stable: Vec<f64>,
    pub unstable: Vec<f64>,
    /// Intervals on which `G(x) = x` throughout.
    pub degenerate: Vec<(f64, f64)>,
}

const GRID: usize = 1000;
const ZERO_EPS: f64 = 1e-12;
pub const DERIVATIVE_STEP: f64 = 1e-6;

fn derivative(g: &impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = DERIVATIVE_STEP;
    let lo = (x - h).max(0.0);
    let hi = (x + h).min(1.0);
    (g(hi) - g(lo)) / (hi - lo)
}

/// Fixed points of `G` on `[0, 1]` via a grid scan refined by bisection.
pub fn stable_fixed_points(g: impl Fn(f64) -> f64, tol: f64) -> FixedPoints {
    let h = |x: f64| g(x) - x;
    let xs: Vec<f64> = (0..=GRID).map(|k| k as f64 / GRID as f64).collect();
    let hs: Vec<f64> = xs.iter().map(|&x| h(x)).collect();
    let zero = |v: f64| v.abs() < ZERO_EPS;

    let mut roots = Vec::new();
    let mut degenerate = Vec::new();
    let mut k = 0;
    while k <= GRID {
        if zero(hs[k]) {
            let begin = k;
            while k < GRID && zero(hs[k + 1]) {
                k += 1;
            }
            if k > begin {
                degenerate.push((xs[begin], xs[k]));
            } else {
                roots.push(xs[k]);
            }
        } else if k < GRID && !zero(hs[k + 1]) && (hs[k] < 0.0) != (hs[k + 1] < 0.0) {
            let (mut a, mut b) = (xs[k], xs[k + 1]);
            let neg_at_a = hs[k] < 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if (h(mid) < 0.0) == neg_at_a {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a < 1e-15 {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        k += 1;
    }

    let mut out = FixedPoints { degenerate, ..Default::default() };
    for p in roots {
        if derivative(&g, p) <= 1.0 + tol {
            out.stable.push(p);
        } else {
            out.unstable.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyaParams {
    pub l1: f64,
    /// Combined length `l2' + l3'` of the colour-2 route.
    pub l23: f64,
    pub alpha: f64,
}

impl PolyaParams {
    pub fn new(l1: f64, l2: f64, l3: f64, alpha: f64) -> Result<Self, UrnError> {
        if !(l1 >= 1.0 && l2 >= 1.0 && l3 >= 1.0) {
            return Err(UrnError::Params(format!("lengths must be >= 1: {l1}, {l2}, {l3}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(UrnError::Params(format!("alpha must lie in (0, 1): {alpha}")));
        }
        Ok(PolyaParams { l1, l23: l2 + l3, alpha })
    }

    pub fn mu1(&self) -> f64 {
        1.0 / self.l1
    }

    pub fn mu23(&self) -> f64 {
        self.alpha / self.l23
    }

    /// Growth exponent of colour 2 when colour 1 dominates.
    pub fn minority_exponent(&self) -> f64 {
        (self.mu23() / self.mu1()).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyaPoint {
    pub n: u64,
    pub n1: u64,
    pub n2: u64,
}

/// Runs the urn from `(1, 1)`. Each step picks colour 2 with probability
/// `(N2/l23) / (N1/l1 + N2/l23)`, in which case a colour-2 ball is added
/// with probability `alpha` (and nothing otherwise); when colour 1 is
/// picked a colour-1 ball is added. Two uniforms are drawn every step, so
/// runs with the same seed are coupled.
pub fn polya_coupled_run(params: &PolyaParams, n_steps: u64, seed: u64, checkpoints: &Checkpoints) -> Vec<PolyaPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut n1, mut n2) = (1u64, 1u64);
    let marks = checkpoints.resolve(n_steps);
    let mut next = 0;
    let mut out = Vec::with_capacity(marks.len());
    for n in 1..=n_steps {
        let u_pick: f64 = rng.gen();
        let u_keep: f64 = rng.gen();
        let a = n1 as f64 / params.l1;
        let b = n2 as f64 / params.l23;
        if u_pick < b / (a + b) {
            if u_keep < params.alpha {
                n2 += 1;
            }
        } else {
            n1 += 1;
        }
        if next < marks.len() && marks[next] == n {
            out.push(PolyaPoint { n, n1, n2 });
            next += 1;
        }
    }
    out
}
