//! Closed-form limit theory for the multi-nest process.
//!
//! Coordinates are `(w1, w3)` with `w2 = 1 - w1` implied. All functions
//! work in whatever labelling the caller passes in; only
//! [`classify_case`] normalizes to `l1 <= l2` internally, and it reports
//! its results back in the caller's labelling.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum TheoryError {
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("lengths must be >= 1, got {0:?}")]
    Length([f64; 3]),
    #[error("denominator vanishes at this point")]
    Singular,
    #[error("gamma line is undefined when l1 = l2")]
    EqualLengths,
    #[error("point ({0}, {1}) is outside the admissible region")]
    OutOfDomain(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub alpha: f64,
    pub lengths: [f64; 3],
}

impl TheoryParams {
    pub fn new(alpha: f64, lengths: [f64; 3]) -> Result<Self, TheoryError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(TheoryError::Alpha(alpha));
        }
        if lengths.iter().any(|&l| !(l >= 1.0) || !l.is_finite()) {
            return Err(TheoryError::Length(lengths));
        }
        Ok(TheoryParams { alpha, lengths })
    }

    pub fn from_lengths(alpha: f64, lengths: [usize; 3]) -> Result<Self, TheoryError> {
        Self::new(alpha, lengths.map(|l| l as f64))
    }

    /// Exchanges the roles of the two nests.
    pub fn swapped(&self) -> TheoryParams {
        let [l1, l2, l3] = self.lengths;
        TheoryParams { alpha: 1.0 - self.alpha, lengths: [l2, l1, l3] }
    }

    /// Labelling with `l1 <= l2`, and whether a swap was needed.
    pub fn canonical(&self) -> (TheoryParams, bool) {
        if self.lengths[0] > self.lengths[1] {
            (self.swapped(), true)
        } else {
            (*self, false)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub w1: f64,
    pub w3: f64,
}

impl Point2 {
    pub fn new(w1: f64, w3: f64) -> Self {
        Point2 { w1, w3 }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.w1 - other.w1).hypot(self.w3 - other.w3)
    }

    /// Image under the nest swap.
    pub fn swapped(self) -> Point2 {
        Point2 { w1: 1.0 - self.w1, w3: self.w3 }
    }

    pub fn in_unit_square(self) -> bool {
        (0.0..=1.0).contains(&self.w1) && (0.0..=1.0).contains(&self.w3)
    }

    /// The region `w1 + w3 >= alpha/2`, `(1 - w1) + w3 >= (1 - alpha)/2`
    /// that the process eventually stays in.
    pub fn in_eventual_region(self, alpha: f64) -> bool {
        self.in_unit_square() && self.w1 + self.w3 >= alpha / 2.0 && (1.0 - self.w1) + self.w3 >= (1.0 - alpha) / 2.0
    }
}

/// Probabilities that the next path touches `G1`, `G2`, `G3` given
/// component conductances `c`.
pub fn big_p(c: [f64; 3], alpha: f64) -> Result<[f64; 3], TheoryError> {
    let [c1, c2, c3] = c;
    let den = c1 * c2 + c1 * c3 + c2 * c3;
    if den <= 0.0 || !den.is_finite() {
        return Err(TheoryError::Singular);
    }
    let p1 = (alpha * c1 * c2 + c1 * c3) / den;
    let p3 = (alpha * c2 * c3 + (1.0 - alpha) * c1 * c3) / den;
    Ok([p1, 1.0 - p1, p3])
}

/// `P` evaluated at `(w1/l1, w2/l2, w3/l3)`.
pub fn small_p(w: [f64; 3], params: &TheoryParams) -> Result<[f64; 3], TheoryError> {
    let [l1, l2, l3] = params.lengths;
    big_p([w[0] / l1, w[1] / l2, w[2] / l3], params.alpha)
}

/// Shared denominator of both field components.
pub fn field_denominator(pt: Point2, params: &TheoryParams) -> f64 {
    let [l1, l2, l3] = params.lengths;
    let Point2 { w1, w3 } = pt;
    w3 * (l1 + w1 * (l2 - l1)) + l3 * w1 * (1.0 - w1)
}

/// The drift `(F1, F3)` in factored form.
pub fn field(pt: Point2, params: &TheoryParams) -> Result<[f64; 2], TheoryError> {
    let [l1, l2, l3] = params.lengths;
    let a = params.alpha;
    let Point2 { w1, w3 } = pt;
    let d = field_denominator(pt, params);
    if d <= 0.0 {
        return Err(TheoryError::Singular);
    }
    let f1 = w1 * (1.0 - w1) * (l3 * (a - w1) + (l2 - l1) * w3) / d;
    let f3 = w3 * (l2 * (1.0 - a) * w1 + l1 * a * (1.0 - w1) - l3 * w1 * (1.0 - w1) - w3 * (l1 + w1 * (l2 - l1))) / d;
    Ok([f1, f3])
}

/// The `F1 = 0` line `w3 = l3 (w1 - alpha) / (l2 - l1)`.
pub fn gamma_line(w1: f64, params: &TheoryParams) -> Result<f64, TheoryError> {
    let [l1, l2, l3] = params.lengths;
    if l1 == l2 {
        return Err(TheoryError::EqualLengths);
    }
    Ok(l3 * (w1 - params.alpha) / (l2 - l1))
}

/// The nontrivial `F3 = 0` curve.
pub fn g_curve(w1: f64, params: &TheoryParams) -> Result<f64, TheoryError> {
    let [l1, l2, l3] = params.lengths;
    let a = params.alpha;
    let den = l1 + w1 * (l2 - l1);
    if den == 0.0 {
        return Err(TheoryError::Singular);
    }
    Ok((l2 * (1.0 - a) * w1 + l1 * a * (1.0 - w1) - l3 * w1 * (1.0 - w1)) / den)
}

/// Interior zero `(beta1, beta3)` where the gamma line meets the g curve.
pub fn beta(params: &TheoryParams) -> Result<(f64, f64), TheoryError> {
    let [l1, l2, l3] = params.lengths;
    let a = params.alpha;
    let d1 = l1 * l3 + (l2 - l1) * ((1.0 - a) * (l3 - l2) + a * l1);
    let d3 = a * (l2 - l1) * (l1 + l2 - l3) + l2 * (l1 - l2 + l3);
    if d1 == 0.0 || d3 == 0.0 {
        return Err(TheoryError::Singular);
    }
    let b1 = a * l1 * (l3 + l2 - l1) / d1;
    let b3 = a * (1.0 - a) * l3 * (l1 + l2 - l3) / d3;
    Ok((b1, b3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroKind {
    Origin,
    NestTwoOnly,
    NoBridge,
    Interior,
    BridgeFromTwo,
    NestOneOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub kind: ZeroKind,
    pub point: Point2,
}

/// The six zeros of the field: `(0,0)`, `(0,a)`, `(a,0)`, `(b1,b3)`,
/// `(1,1-a)`, `(1,0)`. The interior one is dropped when its formula is
/// singular.
pub fn zeros(params: &TheoryParams) -> Vec<Zero> {
    let a = params.alpha;
    let mut out = vec![
        Zero { kind: ZeroKind::Origin, point: Point2::new(0.0, 0.0) },
        Zero { kind: ZeroKind::NestTwoOnly, point: Point2::new(0.0, a) },
        Zero { kind: ZeroKind::NoBridge, point: Point2::new(a, 0.0) },
    ];
    if let Ok((b1, b3)) = beta(params) {
        out.push(Zero { kind: ZeroKind::Interior, point: Point2::new(b1, b3) });
    }
    out.push(Zero { kind: ZeroKind::BridgeFromTwo, point: Point2::new(1.0, 1.0 - a) });
    out.push(Zero { kind: ZeroKind::NestOneOnly, point: Point2::new(1.0, 0.0) });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `G2` dies out.
    I,
    /// All three components survive.
    II,
    /// `G3` dies out.
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryLimits {
    pub case: Case,
    /// Limits of `(N1, N2, N3) / n`.
    pub limits: [f64; 3],
    /// Interior zero, present in case II.
    pub beta: Option<(f64, f64)>,
    /// Components whose edges can keep a positive share of the weight.
    pub active: [bool; 3],
    /// Whether nest labels were exchanged to get `l1 <= l2`.
    pub swapped: bool,
}

impl TheoryLimits {
    pub fn limit_point(&self) -> Point2 {
        Point2::new(self.limits[0], self.limits[2])
    }
}

pub fn classify_case(params: &TheoryParams) -> TheoryLimits {
    let (canon, swapped) = params.canonical();
    let [l1, l2, l3] = canon.lengths;
    let a = canon.alpha;
    let (case, mut limits, mut active) = if l2 >= l1 + l3 {
        (Case::I, [1.0, 0.0, 1.0 - a], [true, false, true])
    } else if l3 >= l1 + l2 {
        (Case::III, [a, 1.0 - a, 0.0], [true, true, false])
    } else {
        let (b1, b3) = beta(&canon).expect("beta is finite strictly inside case II");
        (Case::II, [b1, 1.0 - b1, b3], [true, true, true])
    };
    if swapped {
        limits.swap(0, 1);
        active.swap(0, 1);
    }
    let beta = (case == Case::II).then(|| (limits[0], limits[2]));
    TheoryLimits { case, limits, beta, active, swapped }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub dt: f64,
    pub t_max: f64,
    pub tol: f64,
    /// Keep every k-th point of the trajectory (the last point is always
    /// kept).
    pub record_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { dt: 1e-3, t_max: 1e3, tol: 1e-9, record_every: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FlowOutcome {
    Converged { zero: Zero, time: f64 },
    NoConvergence { last: Point2 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    /// `(t, point)` samples.
    pub trajectory: Vec<(f64, Point2)>,
    pub outcome: FlowOutcome,
    /// Number of RK4 steps whose result had to be clamped into the square.
    pub clamps: usize,
}

impl FlowResult {
    pub fn limit(&self) -> Option<Point2> {
        match &self.outcome {
            FlowOutcome::Converged { zero, .. } => Some(zero.point),
            FlowOutcome::NoConvergence { .. } => None,
        }
    }

    pub fn last(&self) -> Point2 {
        self.trajectory.last().expect("trajectory holds the start").1
    }
}

fn add_scaled(p: Point2, k: [f64; 2], h: f64) -> Point2 {
    Point2::new(p.w1 + h * k[0], p.w3 + h * k[1])
}

/// One RK4 step from `y` given `k1 = F(y)`, clamped into the unit square.
/// The flag tells whether clamping was needed.
fn rk4_step(y: Point2, k1: [f64; 2], h: f64, params: &TheoryParams) -> Result<(Point2, bool), TheoryError> {
    let k2 = field(add_scaled(y, k1, h / 2.0), params)?;
    let k3 = field(add_scaled(y, k2, h / 2.0), params)?;
    let k4 = field(add_scaled(y, k3, h), params)?;
    let next = Point2::new(
        y.w1 + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y.w3 + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    );
    if next.in_unit_square() {
        Ok((next, false))
    } else {
        Ok((Point2::new(next.w1.clamp(0.0, 1.0), next.w3.clamp(0.0, 1.0)), true))
    }
}

/// Flow positions at the given non-decreasing times, using RK4 steps of at
/// most `dt` (the last step before each time is shortened to land on it).
pub fn flow_at_times(start: Point2, params: &TheoryParams, times: &[f64], dt: f64) -> Result<Vec<Point2>, TheoryError> {
    if !start.in_unit_square() || field_denominator(start, params) <= 0.0 {
        return Err(TheoryError::OutOfDomain(start.w1, start.w3));
    }
    let mut y = start;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            let h = dt.min(target - t);
            let k1 = field(y, params)?;
            y = rk4_step(y, k1, h, params)?.0;
            t = if h < dt { target } else { t + h };
        }
        out.push(y);
    }
    Ok(out)
}

/// Integrates `y' = F(y)` with fixed-step RK4 until the field is below
/// `tol` within `10 tol` of an analytic zero, or `t_max` is reached.
pub fn integrate_flow(start: Point2, params: &TheoryParams, opts: &FlowOptions) -> Result<FlowResult, TheoryError> {
    if !start.in_unit_square() || field_denominator(start, params) <= 0.0 {
        return Err(TheoryError::OutOfDomain(start.w1, start.w3));
    }
    let zs = zeros(params);
    let mut y = start;
    let mut t = 0.0;
    let mut clamps = 0;
    let mut trajectory = vec![(0.0, y)];
    let steps = (opts.t_max / opts.dt).ceil() as u64;
    let h = opts.dt;
    for step in 0..=steps {
        let k1 = field(y, params)?;
        if k1[0].hypot(k1[1]) < opts.tol {
            if let Some(z) = zs.iter().find(|z| z.point.dist(y) <= 10.0 * opts.tol) {
                if trajectory.last().map(|&(s, _)| s) != Some(t) {
                    trajectory.push((t, y));
                }
                return Ok(FlowResult { trajectory, outcome: FlowOutcome::Converged { zero: *z, time: t }, clamps });
            }
        }
        if step == steps {
            break;
        }
        let (next, clamped) = rk4_step(y, k1, h, params)?;
        clamps += clamped as usize;
        y = next;
        t = (step + 1) as f64 * h;
        if (step + 1) % opts.record_every.max(1) as u64 == 0 {
            trajectory.push((t, y));
        }
    }
    if trajectory.last().map(|&(s, _)| s) != Some(t) {
        trajectory.push((t, y));
    }
    Ok(FlowResult { trajectory, outcome: FlowOutcome::NoConvergence { last: y }, clamps })
}

/// Closed-form divergence of the field rescaled by
/// `-D / (w1 (1 - w1) w3)`.
pub fn dulac_divergence(pt: Point2, params: &TheoryParams) -> Result<f64, TheoryError> {
    let Point2 { w1, w3 } = pt;
    if !(w1 > 0.0 && w1 < 1.0 && w3 > 0.0 && w3 <= 1.0) {
        return Err(TheoryError::OutOfDomain(w1, w3));
    }
    let [l1, l2, l3] = params.lengths;
    Ok(l3 / w3 + (l2 - l1) / (1.0 - w1) + l1 / (w1 * (1.0 - w1)))
}

/// The rescaled field, computed from [`field`].
pub fn rescaled_field(pt: Point2, params: &TheoryParams) -> Result<[f64; 2], TheoryError> {
    let Point2 { w1, w3 } = pt;
    if !(w1 > 0.0 && w1 < 1.0 && w3 > 0.0) {
        return Err(TheoryError::OutOfDomain(w1, w3));
    }
    let [f1, f3] = field(pt, params)?;
    let scale = -field_denominator(pt, params) / (w1 * (1.0 - w1) * w3);
    Ok([scale * f1, scale * f3])
}

/// Central-difference divergence of [`rescaled_field`] with step `h`.
pub fn fd_divergence(pt: Point2, params: &TheoryParams, h: f64) -> Result<f64, TheoryError> {
    let Point2 { w1, w3 } = pt;
    let d1 = (rescaled_field(Point2::new(w1 + h, w3), params)?[0]
        - rescaled_field(Point2::new(w1 - h, w3), params)?[0])
        / (2.0 * h);
    let d3 = (rescaled_field(Point2::new(w1, w3 + h), params)?[1]
        - rescaled_field(Point2::new(w1, w3 - h), params)?[1])
        / (2.0 * h);
    Ok(d1 + d3)
}

/// `(w1, w3, F1, F3)` on the `n x n` grid of cell midpoints.
pub fn phase_grid(params: &TheoryParams, n: usize) -> Vec<[f64; 4]> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let pt = Point2::new((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
            if let Ok([f1, f3]) = field(pt, params) {
                out.push([pt.w1, pt.w3, f1, f3]);
            }
        }
    }
    out
}
