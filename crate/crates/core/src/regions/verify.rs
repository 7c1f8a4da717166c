//! Numerical checks of the structural results: the phase-free rate bound and
//! its attainability on the enhanced channel, containment of improper
//! time-sharing in the proper time-sharing region, strong duality of the
//! cutting-plane solutions, and nesting of the region constructions.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LinearProgram, LpStatus, Relation, Sense};
use crate::model::{
    alignment_phases, enhance, rate_pair_improper, rate_upper_bound, ChannelRealization, PowerBudget, RatePair,
    RateProfile, TransmitStrategy,
};
use crate::outer::{MAX_ACTIVE_STRATEGIES, TAU_PRUNE};

use super::hull::ray_value;
use super::{Method, PointStatus, RegionBoundary};

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_strategy(rng: &mut ChaCha8Rng, max_power: [f64; 2], improper: bool) -> TransmitStrategy {
    let c = [rng.gen_range(0.0..=max_power[0]), rng.gen_range(0.0..=max_power[1])];
    let (f, phi) = if improper {
        ([rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)], [rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)])
    } else {
        ([0.0; 2], [0.0; 2])
    };
    TransmitStrategy { c, kappa: [f[0] * c[0], f[1] * c[1]], phi }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Config {
    pub trials: usize,
    pub seed: u64,
    /// Variances are drawn from `[0, max_power]`.
    pub max_power: f64,
}

impl Default for Lemma1Config {
    fn default() -> Self {
        Self { trials: 100_000, seed: 0, max_power: 10.0 }
    }
}

/// Tolerances of the rate-bound checks.
pub const BOUND_TOLERANCE: f64 = 1e-12;
pub const ALIGNED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Report {
    pub trials: usize,
    /// Largest `r_k - rbar_k` on the original channel.
    pub max_bound_excess: f64,
    /// Trials with `r_k > rbar_k + BOUND_TOLERANCE` for some user.
    pub bound_violations: usize,
    /// Whether both antiphase conditions can hold at once on the enhanced channel.
    pub simultaneous_alignment: bool,
    /// Largest `|r_k - rbar_k|` on the enhanced channel with aligned phases.
    pub max_aligned_error: f64,
    /// Largest `|rbar_k(ch) - rbar_k(enhance(ch))|`.
    pub max_bound_channel_difference: f64,
    /// Largest difference of proper rates between the two channels.
    pub max_proper_channel_difference: f64,
}

impl Lemma1Report {
    pub fn passed(&self) -> bool {
        self.bound_violations == 0
            && self.simultaneous_alignment
            && self.max_aligned_error <= ALIGNED_TOLERANCE
            && self.max_bound_channel_difference <= BOUND_TOLERANCE
            && self.max_proper_channel_difference <= BOUND_TOLERANCE
    }
}

#[derive(Default, Clone, Copy)]
struct Lemma1Acc {
    excess: f64,
    violations: usize,
    aligned: f64,
    bound_diff: f64,
    proper_diff: f64,
}

fn max_diff(a: RatePair, b: RatePair) -> f64 {
    (a.r1 - b.r1).abs().max((a.r2 - b.r2).abs())
}

/// Checks, on random strategies, that (i) the improper rates never exceed the
/// phase-free bound, (ii) on the enhanced channel with aligned pseudovariance
/// phases the bound is attained by both users at once, and (iii) the bound
/// (and the proper rates) coincide on the original and enhanced channels.
pub fn lemma1_check(ch: &ChannelRealization, cfg: &Lemma1Config) -> Result<Lemma1Report> {
    if cfg.trials == 0 || !(cfg.max_power >= 0.0) {
        return Err(Error::InvalidConfig(format!("invalid lemma check settings {cfg:?}")));
    }
    let enhanced = enhance(ch);
    let alignment = alignment_phases(&enhanced)?;
    let cap = [cfg.max_power; 2];

    let acc = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<Lemma1Acc> {
            let mut rng = trial_rng(cfg.seed, i as u64);
            let x = random_strategy(&mut rng, cap, true);
            let r = rate_pair_improper(ch, &x)?;
            let bound = rate_upper_bound(ch, &x)?;
            let excess = (r.r1 - bound.r1).max(r.r2 - bound.r2);

            let mut aligned = x;
            aligned.phi[0] = aligned.phi[1] + alignment.psi[0];
            let ra = rate_pair_improper(&enhanced, &aligned)?;
            let ba = rate_upper_bound(&enhanced, &aligned)?;

            let proper = TransmitStrategy::proper(x.c);
            Ok(Lemma1Acc {
                excess,
                violations: usize::from(excess > BOUND_TOLERANCE),
                aligned: max_diff(ra, ba),
                bound_diff: max_diff(bound, rate_upper_bound(&enhanced, &x)?),
                proper_diff: max_diff(rate_pair_improper(ch, &proper)?, rate_pair_improper(&enhanced, &proper)?),
            })
        })
        .try_reduce(
            || Lemma1Acc { excess: f64::NEG_INFINITY, ..Lemma1Acc::default() },
            |a, b| {
                Ok(Lemma1Acc {
                    excess: a.excess.max(b.excess),
                    violations: a.violations + b.violations,
                    aligned: a.aligned.max(b.aligned),
                    bound_diff: a.bound_diff.max(b.bound_diff),
                    proper_diff: a.proper_diff.max(b.proper_diff),
                })
            },
        )?;

    Ok(Lemma1Report {
        trials: cfg.trials,
        max_bound_excess: acc.excess,
        bound_violations: acc.violations,
        simultaneous_alignment: alignment.simultaneous,
        max_aligned_error: acc.aligned,
        max_bound_channel_difference: acc.bound_diff,
        max_proper_channel_difference: acc.proper_diff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Config {
    pub trials: usize,
    pub seed: u64,
    /// Upper limit on the number of time-shared strategies per trial.
    pub max_strategies: usize,
    /// Variances are drawn from `[0, power_spread * P_k]`.
    pub power_spread: f64,
    /// Draw improper strategies (otherwise proper ones).
    pub improper: bool,
    pub tolerance: f64,
}

impl Default for Theorem1Config {
    fn default() -> Self {
        Self { trials: 1000, seed: 0, max_strategies: 4, power_spread: 2.0, improper: true, tolerance: 5e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Report {
    pub trials: usize,
    /// Random draws discarded because no weighting met the power budget.
    pub redraws: usize,
    /// Largest excess (bits) of an improper time-sharing rate pair over the
    /// proper time-sharing boundary along its own direction.
    pub max_violation: f64,
    pub violations: usize,
    /// Largest ratio of a candidate's length to the boundary's length along
    /// the same ray (values below 1 are inside).
    pub max_boundary_ratio: f64,
    pub tolerance: f64,
}

impl Theorem1Report {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Time-sharing weights maximizing the balanced rate of given strategies under
/// the average power budget. Returns `None` if the budget cannot be met.
pub fn balance_strategies(
    ch: &ChannelRealization,
    strategies: &[TransmitStrategy],
    budget: &PowerBudget,
    profile: &RateProfile,
) -> Result<Option<(Vec<f64>, RatePair)>> {
    if strategies.is_empty() {
        return Err(Error::EmptyInput("no strategies to time-share"));
    }
    let rates: Vec<RatePair> = strategies.iter().map(|x| rate_pair_improper(ch, x)).collect::<Result<_>>()?;
    let n = strategies.len();
    let rho = profile.rho();
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, objective).free(n);
    for k in 0..2 {
        let mut row: Vec<f64> = rates.iter().map(|r| r.get(k)).collect();
        row.push(-rho[k]);
        lp.add_row(row, Relation::Ge, 0.0);
        let mut row: Vec<f64> = strategies.iter().map(|x| x.c[k]).collect();
        row.push(0.0);
        lp.add_row(row, Relation::Le, budget.user(k));
    }
    let mut row = vec![1.0; n];
    row.push(0.0);
    lp.add_row(row, Relation::Eq, 1.0);

    let sol = lp_solve(&lp)?;
    match sol.status {
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Internal("time-sharing LP is unbounded".into())),
        LpStatus::Optimal => {
            let tau: Vec<f64> = sol.primal[..n].iter().map(|t| t.max(0.0)).collect();
            let mut avg = [0.0; 2];
            for (t, r) in tau.iter().zip(&rates) {
                avg[0] += t * r.r1;
                avg[1] += t * r.r2;
            }
            Ok(Some((tau, avg.into())))
        }
    }
}

/// Ratio of `|point|` to the boundary's extent along the ray through `point`.
pub fn boundary_ratio(polyline: &[RatePair], point: RatePair) -> Result<f64> {
    let s = point.r1 + point.r2;
    if s <= 0.0 {
        return Ok(0.0);
    }
    let profile = RateProfile::new((point.r1 / s).clamp(0.0, 1.0))?;
    let t = ray_value(polyline, &profile).ok_or_else(|| Error::Internal("ray misses the boundary".into()))?;
    Ok(if t > 0.0 { s / t } else { f64::INFINITY })
}

/// Excess of `point` over the boundary polyline along the ray through `point`
/// (zero when inside).
pub fn excess_over(polyline: &[RatePair], point: RatePair) -> Result<f64> {
    let ratio = boundary_ratio(polyline, point)?;
    if ratio <= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - 1.0 / ratio) * point.r1.max(point.r2))
}

/// Falsification attempt for "proper time-sharing achieves the whole
/// time-sharing region": random sets of at most `max_strategies` improper
/// strategies are time-shared optimally for a random profile, and the average
/// rate pair is compared with the (interpolated) proper time-sharing boundary.
pub fn theorem1_check(
    ch: &ChannelRealization,
    budget: &PowerBudget,
    ts_boundary: &RegionBoundary,
    cfg: &Theorem1Config,
) -> Result<Theorem1Report> {
    if ts_boundary.method != Method::TsProper || !ts_boundary.all_converged() || ts_boundary.entries.is_empty() {
        return Err(Error::InvalidConfig("containment needs a converged ts-proper boundary".into()));
    }
    if cfg.max_strategies == 0 || !(cfg.power_spread > 0.0) || !(cfg.tolerance >= 0.0) {
        return Err(Error::InvalidConfig(format!("invalid containment check settings {cfg:?}")));
    }
    let polyline = ts_boundary.polyline();
    let cap = [cfg.power_spread * budget.user(0), cfg.power_spread * budget.user(1)];

    let results = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, usize)> {
            let mut rng = trial_rng(cfg.seed, i as u64);
            let mut redraws = 0;
            loop {
                let count = rng.gen_range(1..=cfg.max_strategies);
                let strategies: Vec<TransmitStrategy> =
                    (0..count).map(|_| random_strategy(&mut rng, cap, cfg.improper)).collect();
                let profile = RateProfile::new(rng.gen_range(0.0..=1.0))?;
                if let Some((_, avg)) = balance_strategies(ch, &strategies, budget, &profile)? {
                    return Ok((excess_over(&polyline, avg)?, boundary_ratio(&polyline, avg)?, redraws));
                }
                redraws += 1;
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let max_violation = results.iter().map(|r| r.0).fold(0.0, f64::max);
    Ok(Theorem1Report {
        trials: cfg.trials,
        redraws: results.iter().map(|r| r.2).sum(),
        max_violation,
        violations: results.iter().filter(|r| r.0 > cfg.tolerance).count(),
        max_boundary_ratio: results.iter().map(|r| r.1).fold(0.0, f64::max),
        tolerance: cfg.tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport {
    pub points: usize,
    /// Largest `|R - dual bound|` over the converged points.
    pub max_gap: f64,
    pub max_active: usize,
    pub unconverged: usize,
    pub gap_tolerance: f64,
}

impl DualityReport {
    pub fn passed(&self) -> bool {
        self.unconverged == 0 && self.max_gap <= self.gap_tolerance && self.max_active <= MAX_ACTIVE_STRATEGIES
    }
}

/// Strong duality and strategy counts along a time-sharing sweep.
pub fn duality_check(ts_boundary: &RegionBoundary, gap_tolerance: f64) -> Result<DualityReport> {
    if ts_boundary.method != Method::TsProper {
        return Err(Error::InvalidConfig("duality check needs a ts-proper boundary".into()));
    }
    let mut report =
        DualityReport { points: ts_boundary.entries.len(), max_gap: 0.0, max_active: 0, unconverged: 0, gap_tolerance };
    for e in &ts_boundary.entries {
        match (&e.ts, e.status) {
            (Some(pt), PointStatus::Ok) => {
                report.max_gap = report.max_gap.max((pt.upper - pt.solution.rate).abs());
                let active = pt.solution.strategies.iter().filter(|s| s.tau > TAU_PRUNE).count();
                report.max_active = report.max_active.max(active);
            }
            _ => report.unconverged += 1,
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestingReport {
    pub points: usize,
    /// Smallest `hull - pure` over the betas.
    pub min_hull_margin: f64,
    /// Smallest `ts - hull` over the betas.
    pub min_ts_margin: f64,
    pub slack: f64,
}

impl NestingReport {
    pub fn passed(&self) -> bool {
        self.min_hull_margin >= -self.slack && self.min_ts_margin >= -self.slack
    }
}

/// Checks `pure <= hull <= ts` pointwise for boundaries swept on the same betas.
pub fn nesting_check(
    pure: &RegionBoundary,
    hull: &RegionBoundary,
    ts: &RegionBoundary,
    slack: f64,
) -> Result<NestingReport> {
    let n = pure.entries.len();
    if hull.entries.len() != n || ts.entries.len() != n {
        return Err(Error::InvalidConfig("boundaries have different lengths".into()));
    }
    let mut report = NestingReport { points: n, min_hull_margin: f64::INFINITY, min_ts_margin: f64::INFINITY, slack };
    for ((p, h), t) in pure.entries.iter().zip(&hull.entries).zip(&ts.entries) {
        if p.beta != h.beta || p.beta != t.beta {
            return Err(Error::InvalidConfig("boundaries were swept on different betas".into()));
        }
        report.min_hull_margin = report.min_hull_margin.min(h.value - p.value);
        // NaN (unconverged) values propagate as failures.
        let ts_margin = t.value - h.value;
        report.min_ts_margin = if ts_margin.is_nan() { f64::NEG_INFINITY } else { report.min_ts_margin.min(ts_margin) };
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::scenario::{reference_budget, reference_channel};
    use crate::regions::{beta_grid, sweep_boundary, RegionConfig};

    #[test]
    fn lemma1_on_reference_channel() {
        let ch = reference_channel();
        let report = lemma1_check(&ch, &Lemma1Config { trials: 2000, seed: 1, max_power: 10.0 }).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.max_bound_excess <= BOUND_TOLERANCE);
    }

    #[test]
    fn lemma1_is_reproducible() {
        let ch = reference_channel();
        let cfg = Lemma1Config { trials: 500, seed: 4, max_power: 5.0 };
        assert_eq!(lemma1_check(&ch, &cfg).unwrap(), lemma1_check(&ch, &cfg).unwrap());
    }

    #[test]
    fn excess_inside_and_outside() {
        let poly = vec![RatePair::new(2.0, 0.0), RatePair::new(0.0, 2.0)];
        assert_eq!(excess_over(&poly, RatePair::new(0.5, 0.5)).unwrap(), 0.0);
        let e = excess_over(&poly, RatePair::new(1.5, 1.5)).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
        assert_eq!(excess_over(&poly, RatePair::new(0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn balancing_single_strategy() {
        let ch = reference_channel();
        let budget = reference_budget();
        let x = TransmitStrategy::proper([4.0, 4.0]);
        let (tau, avg) = balance_strategies(&ch, &[x], &budget, &RateProfile::new(0.5).unwrap()).unwrap().unwrap();
        assert_eq!(tau.len(), 1);
        assert!((tau[0] - 1.0).abs() < 1e-12);
        assert_eq!(avg, rate_pair_improper(&ch, &x).unwrap());
        let over = TransmitStrategy::proper([20.0, 1.0]);
        assert!(balance_strategies(&ch, &[over], &budget, &RateProfile::new(0.5).unwrap()).unwrap().is_none());
    }

    #[test]
    fn proper_candidates_are_contained() {
        let ch = reference_channel();
        let budget = reference_budget();
        let cfg = RegionConfig::for_budget(&budget);
        let ts = sweep_boundary(Method::TsProper, &ch, &budget, &beta_grid(41), &cfg).unwrap();
        let t = Theorem1Config { trials: 200, seed: 2, improper: false, ..Theorem1Config::default() };
        let report = theorem1_check(&ch, &budget, &ts, &t).unwrap();
        assert!(report.passed(), "{report:?}");
        let d = duality_check(&ts, 2e-4).unwrap();
        assert!(d.passed(), "{d:?}");
    }

    #[test]
    fn shrunk_boundary_is_detected() {
        let ch = reference_channel();
        let budget = reference_budget();
        let cfg = RegionConfig::for_budget(&budget);
        let mut ts = sweep_boundary(Method::TsProper, &ch, &budget, &beta_grid(21), &cfg).unwrap();
        for e in &mut ts.entries {
            e.rates = RatePair::new(0.5 * e.rates.r1, 0.5 * e.rates.r2);
        }
        let t = Theorem1Config { trials: 200, seed: 5, ..Theorem1Config::default() };
        let report = theorem1_check(&ch, &budget, &ts, &t).unwrap();
        assert!(!report.passed());
        assert!(report.max_boundary_ratio > 1.0);
    }

    #[test]
    fn rejects_wrong_boundary() {
        let ch = reference_channel();
        let budget = reference_budget();
        let cfg = RegionConfig::for_budget(&budget);
        let pure = sweep_boundary(Method::PureProper, &ch, &budget, &beta_grid(3), &cfg).unwrap();
        assert!(theorem1_check(&ch, &budget, &pure, &Theorem1Config::default()).is_err());
        assert!(duality_check(&pure, 1e-4).is_err());
    }
}
