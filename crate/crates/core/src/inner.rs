//! Globally optimal solver for the inner dual subproblem
//! `max_{p >= 0} sum_k mu_k r_k(p) - lambda_k p_k`
//! by monotonic branch-and-bound over power boxes.
//!
//! The objective is written as `f(p) = F(p, p)` with
//! `F(x, y) = sum_k mu_k log2(1 + g_kk x_k / (n_k + g_kj y_j)) - lambda_k y_k`,
//! nondecreasing in `x` and nonincreasing in `y`. On a box `[a, b]` this gives
//! the bound pair `F(b, a) >= max f >= f(a)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{ChannelRealization, PowerBudget, Powers};

/// Power prices below this are treated as zero when bounding the search box.
pub const PRICE_FLOOR: f64 = 1e-9;

/// Lagrange multipliers of the rate (`mu`) and power (`lambda`) constraints.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualPoint {
    pub mu: [f64; 2],
    pub lambda: [f64; 2],
}

impl DualPoint {
    pub fn new(mu: [f64; 2], lambda: [f64; 2]) -> Result<Self> {
        if mu.iter().chain(&lambda).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(format!("dual variables must be nonnegative: mu={mu:?}, lambda={lambda:?}")));
        }
        Ok(Self { mu, lambda })
    }
}

/// Axis-aligned box `[a, b]` in power space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBox {
    pub a: Powers,
    pub b: Powers,
}

impl PowerBox {
    pub fn new(a: Powers, b: Powers) -> Result<Self> {
        let ok = (0..2).all(|k| a[k].is_finite() && b[k].is_finite() && 0.0 <= a[k] && a[k] <= b[k]);
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid box [{a:?}, {b:?}]")));
        }
        Ok(Self { a, b })
    }

    pub fn width(&self, k: usize) -> f64 {
        self.b[k] - self.a[k]
    }

    pub fn center(&self) -> Powers {
        [0.5 * (self.a[0] + self.b[0]), 0.5 * (self.a[1] + self.b[1])]
    }

    pub fn contains(&self, p: &Powers) -> bool {
        (0..2).all(|k| self.a[k] <= p[k] && p[k] <= self.b[k])
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }
}

/// Which upper bound the branch-and-bound uses per box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Only the monotonic bound `F(b, a)`.
    Monotonic,
    /// The minimum of `F(b, a)` and a concave-chord bound that is tight to
    /// second order in the box width.
    Tightened,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbConfig {
    /// Absolute optimality gap at termination.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Box edge used when a user has a positive rate weight but no power price.
    pub power_cap: f64,
    pub bound: BoundKind,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self { epsilon: 1e-6, max_iterations: 2_000_000, power_cap: 1e4, bound: BoundKind::Tightened }
    }
}

impl BnbConfig {
    /// Default settings with the power cap tied to the budget (`1000 * max P_k`).
    pub fn for_budget(budget: &PowerBudget) -> Self {
        let cap = 1e3 * budget.max();
        Self { power_cap: if cap > 0.0 { cap } else { 1e3 }, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || self.max_iterations == 0 || !(self.power_cap > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid branch-and-bound settings {self:?}")));
        }
        Ok(())
    }
}

/// Inner dual objective `sum_k mu_k r_k(p) - lambda_k p_k`.
pub fn inner_objective(ch: &ChannelRealization, dual: &DualPoint, p: &Powers) -> f64 {
    extended_objective(ch, dual, p, p)
}

/// `F(x, y)`: nondecreasing in `x`, nonincreasing in `y`.
pub fn extended_objective(ch: &ChannelRealization, dual: &DualPoint, x: &Powers, y: &Powers) -> f64 {
    let mut value = 0.0;
    for k in 0..2 {
        let j = 1 - k;
        if dual.mu[k] != 0.0 {
            let sinr = ch.gain(k, k) * x[k] / (ch.noise(k) + ch.gain(k, j) * y[j]);
            value += dual.mu[k] * sinr.ln_1p() / LN_2;
        }
        value -= dual.lambda[k] * y[k];
    }
    value
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBounds {
    /// Upper bound on `f` over the box.
    pub upper: f64,
    /// Value attained at the lower corner.
    pub lower: f64,
}

/// Monotonic bounds `U = F(b, a)` and `A = f(a)`.
pub fn box_bounds(ch: &ChannelRealization, dual: &DualPoint, bx: &PowerBox) -> BoxBounds {
    BoxBounds {
        upper: extended_objective(ch, dual, &bx.b, &bx.a),
        lower: inner_objective(ch, dual, &bx.a),
    }
}

/// Upper bound from the split `f = G + V`, where
/// `G(p) = sum_k mu_k log2(n_k + g_kk p_k + g_kj p_j) - lambda^T p` is concave and
/// `V(p) = -sum_k mu_k log2(n_k + g_kj p_j)` is convex and separable. `V` lies
/// below its chord on the box, and the concave remainder lies below its
/// tangent plane at the box center.
pub fn chord_upper_bound(ch: &ChannelRealization, dual: &DualPoint, bx: &PowerBox) -> f64 {
    let c = bx.center();
    // v[m]: convex term depending on p_m only, i.e. -mu_j log2(n_j + g_jm p_m) with j = 1 - m.
    let v = |m: usize, pm: f64| {
        let j = 1 - m;
        -dual.mu[j] * (ch.noise(j) + ch.gain(j, m) * pm).ln() / LN_2
    };
    let mut h_center = 0.0;
    let mut grad = [-dual.lambda[0], -dual.lambda[1]];
    for k in 0..2 {
        let j = 1 - k;
        if dual.mu[k] != 0.0 {
            let total = ch.noise(k) + ch.gain(k, k) * c[k] + ch.gain(k, j) * c[j];
            h_center += dual.mu[k] * total.ln() / LN_2;
            grad[k] += dual.mu[k] * ch.gain(k, k) / (total * LN_2);
            grad[j] += dual.mu[k] * ch.gain(k, j) / (total * LN_2);
        }
        h_center -= dual.lambda[k] * c[k];
    }
    for m in 0..2 {
        let width = bx.width(m);
        let va = v(m, bx.a[m]);
        if width > 0.0 {
            let slope = (v(m, bx.b[m]) - va) / width;
            h_center += va + slope * (c[m] - bx.a[m]);
            grad[m] += slope;
        } else {
            h_center += va;
        }
    }
    h_center + 0.5 * (grad[0].abs() * bx.width(0) + grad[1].abs() * bx.width(1))
}

/// Splits a box at the midpoint of its longest edge (lowest index on ties).
pub fn branch(bx: &PowerBox) -> Result<(PowerBox, PowerBox)> {
    if bx.is_degenerate() {
        return Err(Error::CannotBranch);
    }
    let k = if bx.width(1) > bx.width(0) { 1 } else { 0 };
    let mid = bx.a[k] + 0.5 * bx.width(k);
    if !(mid > bx.a[k] && mid < bx.b[k]) {
        // Edge below floating-point resolution.
        return Err(Error::CannotBranch);
    }
    let mut upper_corner = bx.b;
    upper_corner[k] = mid;
    let mut lower_corner = bx.a;
    lower_corner[k] = mid;
    Ok((PowerBox { a: bx.a, b: upper_corner }, PowerBox { a: lower_corner, b: bx.b }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialBox {
    pub region: PowerBox,
    /// True when a user has a rate weight but (essentially) no power price and
    /// the box falls back to the power cap.
    pub capped: bool,
}

/// Interference-free single-user term `mu log2(1 + g p / n) - lambda p`.
fn interference_free(mu: f64, lambda: f64, gain: f64, noise: f64, p: f64) -> f64 {
    mu * (gain * p / noise).ln_1p() / LN_2 - lambda * p
}

/// Builds a box `[0, p0]` containing a global maximizer of `f`.
///
/// With the interference-free bound `f_hat(p) = sum_k f_hat_k(p_k) >= f(p)`,
/// `p0_k` is chosen so that `f_hat_k(p_k) + max f_hat_j <= 0` for all `p_k >= p0_k`;
/// then `f(p) <= 0 = f(0)` whenever any coordinate leaves the box.
pub fn init_box(ch: &ChannelRealization, dual: &DualPoint, cfg: &BnbConfig) -> InitialBox {
    let active = |k: usize| dual.mu[k] > 0.0 && ch.gain(k, k) > 0.0;
    if (0..2).any(|k| active(k) && dual.lambda[k] <= PRICE_FLOOR) {
        let cap = cfg.power_cap;
        return InitialBox { region: PowerBox { a: [0.0; 2], b: [cap, cap] }, capped: true };
    }
    let mut peak = [0.0; 2];
    let mut best = [0.0; 2];
    for k in 0..2 {
        if active(k) {
            let (mu, lambda, g, n) = (dual.mu[k], dual.lambda[k], ch.gain(k, k), ch.noise(k));
            peak[k] = (mu / (lambda * LN_2) - n / g).max(0.0);
            best[k] = interference_free(mu, lambda, g, n, peak[k]).max(0.0);
        }
    }
    let mut p0 = [0.0; 2];
    for k in 0..2 {
        // Inactive users only hurt the objective: f is nonincreasing in p_k.
        if !active(k) {
            continue;
        }
        let j = 1 - k;
        let (mu, lambda, g, n) = (dual.mu[k], dual.lambda[k], ch.gain(k, k), ch.noise(k));
        let h = |p: f64| interference_free(mu, lambda, g, n, p) + best[j];
        let mut lo = peak[k];
        let mut hi = 2.0 * peak[k] + 1.0;
        while h(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        p0[k] = hi;
    }
    InitialBox { region: PowerBox { a: [0.0; 2], b: p0 }, capped: false }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbSolution {
    pub p: Powers,
    pub value: f64,
    /// Certified bound on `max f - value`.
    pub gap: f64,
    pub iterations: usize,
    pub budget_exhausted: bool,
    pub capped: bool,
}

/// Snapshot after each branching step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbProgress {
    pub iteration: usize,
    pub max_upper: f64,
    pub best_lower: f64,
    pub live_boxes: usize,
}

struct Node {
    upper: f64,
    seq: u64,
    bx: PowerBox,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Highest bound first; earlier insertion wins ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Maximizes the inner objective to within `cfg.epsilon`.
pub fn bnb_solve(ch: &ChannelRealization, dual: &DualPoint, cfg: &BnbConfig) -> Result<BnbSolution> {
    bnb_solve_observed(ch, dual, cfg, |_| {})
}

/// As [`bnb_solve`], reporting progress after every iteration.
pub fn bnb_solve_observed(
    ch: &ChannelRealization,
    dual: &DualPoint,
    cfg: &BnbConfig,
    mut observe: impl FnMut(BnbProgress),
) -> Result<BnbSolution> {
    cfg.validate()?;
    let init = init_box(ch, dual, cfg);
    let f = |p: &Powers| inner_objective(ch, dual, p);

    let mut best_p = init.region.a;
    let mut best = f(&best_p);
    let consider = |p: Powers, best_p: &mut Powers, best: &mut f64| {
        let v = f(&p);
        if v > *best {
            *best = v;
            *best_p = p;
        }
    };
    let bound = |bx: &PowerBox, parent: f64| {
        let mut u = box_bounds(ch, dual, bx).upper;
        if cfg.bound == BoundKind::Tightened {
            u = u.min(chord_upper_bound(ch, dual, bx));
        }
        u.min(parent)
    };

    consider(init.region.center(), &mut best_p, &mut best);
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let root_upper = bound(&init.region, f64::INFINITY);
    // Boxes dropped because their bound is within epsilon of the incumbent.
    let mut dropped_upper = f64::NEG_INFINITY;
    heap.push(Node { upper: root_upper, seq, bx: init.region });

    let mut iterations = 0;
    let mut exhausted = false;
    loop {
        let Some(top) = heap.peek() else { break };
        if top.upper - best <= cfg.epsilon {
            break;
        }
        if iterations >= cfg.max_iterations {
            exhausted = true;
            break;
        }
        let node = heap.pop().expect("peeked");
        iterations += 1;
        match branch(&node.bx) {
            Ok((left, right)) => {
                for child in [left, right] {
                    consider(child.a, &mut best_p, &mut best);
                    consider(child.center(), &mut best_p, &mut best);
                    let upper = bound(&child, node.upper).max(f(&child.a));
                    if upper - best <= cfg.epsilon {
                        dropped_upper = dropped_upper.max(upper);
                    } else {
                        seq += 1;
                        heap.push(Node { upper, seq, bx: child });
                    }
                }
            }
            // Resolution limit: the box is a point for all practical purposes.
            Err(_) => dropped_upper = dropped_upper.max(node.upper),
        }
        observe(BnbProgress {
            iteration: iterations,
            max_upper: heap.peek().map_or(best, |n| n.upper).max(dropped_upper),
            best_lower: best,
            live_boxes: heap.len(),
        });
    }
    let max_upper = heap.peek().map_or(best, |n| n.upper).max(dropped_upper).max(best);
    Ok(BnbSolution {
        p: best_p,
        value: best,
        gap: max_upper - best,
        iterations,
        budget_exhausted: exhausted,
        capped: init.capped,
    })
}
