//! Pure-strategy searches: rate balancing with proper signals and
//! grid/random sampling of improper strategies.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{rate_pair_improper, ChannelRealization, PowerBudget, Powers, RatePair, RateProfile, TransmitStrategy};

/// Grid and random-sample sizes for the improper search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub seed: u64,
    /// Points per power axis, `linspace(0, P_k)`.
    pub power_grid: usize,
    /// Points of `kappa_k / c_k` in `linspace(0, 1)`.
    pub kappa_grid: usize,
    /// Points of `psi = phi_1 - phi_2` in `[0, 2pi)`.
    pub phase_grid: usize,
    /// Additional uniformly drawn strategies.
    pub random_samples: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { seed: 0, power_grid: 21, kappa_grid: 11, phase_grid: 36, random_samples: 100_000 }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.power_grid < 2 || self.kappa_grid < 2 || self.phase_grid < 2 {
            return Err(Error::InvalidConfig(format!("sampling grids need at least two points: {self:?}")));
        }
        Ok(())
    }
}

/// Settings of the two-stage proper rate-balancing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProperSearchConfig {
    /// Grid points per axis in the first stage.
    pub grid: usize,
    /// Power resolution of the golden-section refinement.
    pub resolution: f64,
}

impl Default for ProperSearchConfig {
    fn default() -> Self {
        Self { grid: 201, resolution: 1e-6 }
    }
}

/// A balanced pure strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProperPoint {
    pub value: f64,
    pub p: Powers,
    pub rates: RatePair,
}

fn linspace(hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| if i + 1 == n { hi } else { hi * i as f64 / (n - 1) as f64 })
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal `g` on `[lo, hi]`; returns the best of the final
/// bracket and the two endpoints.
fn golden_max(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > tol {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    let mut best = if gc >= gd { (c, gc) } else { (d, gd) };
    for x in [lo, hi] {
        let v = g(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Rate balancing with proper signals:
/// `max_{0 <= p <= P} min_k r_k(p) / rho_k`.
///
/// A dense grid locates the best cell; coordinate-wise golden-section search
/// then refines it. Along either coordinate the balanced objective is the
/// minimum of an increasing and a decreasing function, hence unimodal.
pub fn pure_proper_point(
    ch: &ChannelRealization,
    budget: &PowerBudget,
    profile: &RateProfile,
    cfg: &ProperSearchConfig,
) -> Result<ProperPoint> {
    if cfg.grid < 2 || !(cfg.resolution > 0.0) {
        return Err(Error::InvalidConfig(format!("invalid proper search settings {cfg:?}")));
    }
    let objective = |p: &Powers| profile.balanced(ch.proper_rates(p));
    let cap = budget.as_array();

    // Best cell overall and best cell on each full-power edge; the balanced
    // optimum has at least one user at full power, and coordinate moves
    // cannot leave a kink where both rate constraints are active.
    let mut starts = [([0.0, 0.0], objective(&[0.0, 0.0])); 3];
    for (i, p1) in linspace(cap[0], cfg.grid).enumerate() {
        for (j, p2) in linspace(cap[1], cfg.grid).enumerate() {
            let v = objective(&[p1, p2]);
            let slots = [true, i + 1 == cfg.grid, j + 1 == cfg.grid];
            for (slot, on) in starts.iter_mut().zip(slots) {
                if on && v > slot.1 {
                    *slot = ([p1, p2], v);
                }
            }
        }
    }

    let mut best_p = starts[0].0;
    let mut best = starts[0].1;
    for (start, start_value) in starts {
        let (p, v) = coordinate_refine(&objective, start, start_value, cap, cfg.resolution);
        if v > best {
            best = v;
            best_p = p;
        }
    }
    Ok(ProperPoint { value: best, p: best_p, rates: ch.proper_rates(&best_p).into() })
}

fn coordinate_refine(
    objective: &impl Fn(&Powers) -> f64,
    start: Powers,
    start_value: f64,
    cap: Powers,
    resolution: f64,
) -> (Powers, f64) {
    let (mut best_p, mut best) = (start, start_value);
    for _ in 0..100 {
        let before = best_p;
        for k in 0..2 {
            let line = |x: f64| {
                let mut p = best_p;
                p[k] = x;
                objective(&p)
            };
            let (x, v) = golden_max(line, 0.0, cap[k], resolution);
            if v > best {
                best = v;
                best_p[k] = x;
            }
        }
        if (0..2).all(|k| (best_p[k] - before[k]).abs() <= resolution) {
            break;
        }
    }
    (best_p, best)
}

/// Proper rate pairs on a `grid x grid` power grid.
pub fn proper_grid_samples(ch: &ChannelRealization, budget: &PowerBudget, grid: usize) -> Vec<RatePair> {
    let cap = budget.as_array();
    linspace(cap[0], grid)
        .flat_map(|p1| linspace(cap[1], grid).map(move |p2| ch.proper_rates(&[p1, p2]).into()))
        .collect()
}

fn improper_strategy(p: Powers, frac: [f64; 2], psi: f64) -> TransmitStrategy {
    TransmitStrategy { c: p, kappa: [frac[0] * p[0], frac[1] * p[1]], phi: [psi, 0.0] }
}

/// Rate pairs of pure improper strategies on the grid
/// `(p1, p2, kappa1/p1, kappa2/p2, psi)` followed by `random_samples` uniform
/// draws. Only the phase difference is sampled because a common phase
/// rotation leaves both rates unchanged.
pub fn pure_improper_samples(
    ch: &ChannelRealization,
    budget: &PowerBudget,
    cfg: &SamplingConfig,
) -> Result<Vec<RatePair>> {
    cfg.validate()?;
    let cap = budget.as_array();
    let powers: Vec<f64> = linspace(1.0, cfg.power_grid).collect();
    let fracs: Vec<f64> = linspace(1.0, cfg.kappa_grid).collect();
    let phases: Vec<f64> = (0..cfg.phase_grid).map(|i| TAU * i as f64 / cfg.phase_grid as f64).collect();

    let rows: Vec<Vec<RatePair>> = powers
        .par_iter()
        .map(|&s1| {
            let mut out = Vec::with_capacity(powers.len() * fracs.len() * fracs.len() * phases.len());
            for &s2 in &powers {
                let p = [s1 * cap[0], s2 * cap[1]];
                for &f1 in &fracs {
                    for &f2 in &fracs {
                        for &psi in &phases {
                            let x = improper_strategy(p, [f1, f2], psi);
                            out.push(rate_pair_improper(ch, &x)?);
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut samples: Vec<RatePair> = rows.into_iter().flatten().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    samples.reserve(cfg.random_samples);
    for _ in 0..cfg.random_samples {
        let p = [rng.gen_range(0.0..=cap[0]), rng.gen_range(0.0..=cap[1])];
        let frac = [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)];
        let psi = rng.gen_range(0.0..TAU);
        samples.push(rate_pair_improper(ch, &improper_strategy(p, frac, psi))?);
    }
    Ok(samples)
}

/// Sample with the largest balanced value in direction `profile`.
pub fn best_balanced(samples: &[RatePair], profile: &RateProfile) -> Option<(f64, RatePair)> {
    samples
        .iter()
        .map(|s| (profile.balanced(s.as_array()), *s))
        .fold(None, |acc: Option<(f64, RatePair)>, x| match acc {
            Some(a) if a.0 >= x.0 => Some(a),
            _ => Some(x),
        })
}
