//! Cutting-plane solution of the Lagrangian dual of the coded time-sharing
//! rate-balancing problem, and recovery of the time-sharing strategies.
//!
//! The dual is `min_{mu, lambda >= 0, rho^T mu = 1} lambda^T P + max_p f_{mu,lambda}(p)`.
//! Every power vector `p` visited so far contributes a linear cut
//! `z >= lambda^T P + mu^T r(p) - lambda^T p`; the relaxed LP over the cut set
//! gives a lower bound, and evaluating the dual function at the LP optimizer
//! gives an upper bound and the next cut. The LP dual of the relaxation is a
//! time-sharing problem over the cut points, which yields the primal solution.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::inner::{bnb_solve, inner_objective, BnbConfig, DualPoint};
use crate::lp::{lp_solve, LinearProgram, LpStatus, Relation, Sense};
use crate::model::{ChannelRealization, PowerBudget, Powers, RatePair, RateProfile};

/// Time-sharing weights at or below this are treated as inactive.
pub const TAU_PRUNE: f64 = 1e-9;
/// At most this many strategies need nonzero weight at a boundary point.
pub const MAX_ACTIVE_STRATEGIES: usize = 4;
const DUPLICATE_CUT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutOrigin {
    Initial,
    Bnb,
    /// Generated from a capped search box (power price numerically zero).
    Capped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub p: Powers,
    pub rates: RatePair,
    pub origin: CutOrigin,
}

impl Cut {
    pub fn new(ch: &ChannelRealization, p: Powers, origin: CutOrigin) -> Self {
        Self { p, rates: ch.proper_rates(&p).into(), origin }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterConfig {
    /// Stopping gap between the dual upper and lower bounds (bits).
    pub epsilon_cp: f64,
    pub max_cuts: usize,
    pub inner: BnbConfig,
}

impl OuterConfig {
    pub fn for_budget(budget: &PowerBudget) -> Self {
        Self { epsilon_cp: 1e-4, max_cuts: 2000, inner: BnbConfig::for_budget(budget) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_cp > 0.0) || self.max_cuts == 0 {
            return Err(Error::InvalidConfig(format!("invalid cutting-plane settings {self:?}")));
        }
        self.inner.validate()
    }
}

/// One strategy of a time-sharing solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedStrategy {
    pub tau: f64,
    pub p: Powers,
    pub rates: RatePair,
}

/// Proper-signaling strategies with time-sharing weights and the balanced
/// rate `R` they achieve (`sum_l tau_l r_k(p_l) >= rho_k R`).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSharingSolution {
    pub beta: f64,
    pub strategies: Vec<WeightedStrategy>,
    pub rate: f64,
}

impl TimeSharingSolution {
    /// Time-averaged rate pair.
    pub fn average_rates(&self) -> RatePair {
        let mut r = [0.0; 2];
        for s in &self.strategies {
            r[0] += s.tau * s.rates.r1;
            r[1] += s.tau * s.rates.r2;
        }
        r.into()
    }

    pub fn average_powers(&self) -> Powers {
        let mut p = [0.0; 2];
        for s in &self.strategies {
            p[0] += s.tau * s.p[0];
            p[1] += s.tau * s.p[1];
        }
        p
    }

    /// Checks the time-sharing constraints at the library tolerances.
    pub fn check(&self, budget: &PowerBudget, profile: &RateProfile) -> Result<()> {
        let total: f64 = self.strategies.iter().map(|s| s.tau).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Internal(format!("weights sum to {total}")));
        }
        if self.strategies.iter().any(|s| s.tau < 0.0) {
            return Err(Error::Internal("negative time-sharing weight".into()));
        }
        let power = self.average_powers();
        let rates = self.average_rates().as_array();
        let rho = profile.rho();
        for k in 0..2 {
            if power[k] > budget.user(k) + 1e-7 {
                return Err(Error::Internal(format!("average power {} exceeds {}", power[k], budget.user(k))));
            }
            if rates[k] < rho[k] * self.rate - 1e-7 {
                return Err(Error::Internal(format!("rate {} below target {}", rates[k], rho[k] * self.rate)));
            }
        }
        let active = self.strategies.iter().filter(|s| s.tau > TAU_PRUNE).count();
        if active > MAX_ACTIVE_STRATEGIES {
            return Err(Error::Internal(format!("{active} active strategies")));
        }
        Ok(())
    }
}

/// The cut LP in variables `(mu1, mu2, lambda1, lambda2, z)`:
/// minimize `z` subject to `rho^T mu = 1`, `mu, lambda >= 0` and one row
/// `z >= lambda^T P + mu^T r(p_l) - lambda^T p_l` per cut.
pub fn relaxed_dual_lp(cuts: &[Cut], budget: &PowerBudget, profile: &RateProfile) -> LinearProgram {
    let rho = profile.rho();
    let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0, 0.0, 0.0, 0.0, 1.0]).free(4);
    lp.add_row(vec![rho[0], rho[1], 0.0, 0.0, 0.0], Relation::Eq, 1.0);
    for cut in cuts {
        lp.add_row(
            vec![
                -cut.rates.r1,
                -cut.rates.r2,
                cut.p[0] - budget.user(0),
                cut.p[1] - budget.user(1),
                1.0,
            ],
            Relation::Ge,
            0.0,
        );
    }
    lp
}

/// Dual function value certified by a cut generated at `dual`:
/// `lambda^T P + f_{mu,lambda}(p)`.
pub fn achieved_dual_value(ch: &ChannelRealization, dual: &DualPoint, budget: &PowerBudget, cut: &Cut) -> f64 {
    dual.lambda[0] * budget.user(0) + dual.lambda[1] * budget.user(1) + inner_objective(ch, dual, &cut.p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuttingPlaneResult {
    /// Multipliers attaining the upper bound.
    pub dual: DualPoint,
    pub cuts: Vec<Cut>,
    /// Relaxed-LP value (nondecreasing over iterations).
    pub lower: f64,
    /// Best achieved dual value `min_l Psi_l`.
    pub upper: f64,
    pub converged: bool,
    /// A new cut repeated an existing one before the gap closed.
    pub stalled: bool,
    pub lower_trace: Vec<f64>,
    pub upper_trace: Vec<f64>,
}

fn dual_from_lp(x: &[f64]) -> DualPoint {
    let c = |v: f64| v.max(0.0);
    DualPoint { mu: [c(x[0]), c(x[1])], lambda: [c(x[2]), c(x[3])] }
}

/// Kelley's cutting-plane method on the dual, started from `p = P / 2`.
pub fn cutting_plane(
    ch: &ChannelRealization,
    budget: &PowerBudget,
    profile: &RateProfile,
    cfg: &OuterConfig,
) -> Result<CuttingPlaneResult> {
    cfg.validate()?;
    let start = [0.5 * budget.user(0), 0.5 * budget.user(1)];
    let mut cuts = vec![Cut::new(ch, start, CutOrigin::Initial)];
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut best_dual = DualPoint::default();
    let mut lower_trace = Vec::new();
    let mut upper_trace = Vec::new();
    let mut converged = false;
    let mut stalled = false;

    while cuts.len() < cfg.max_cuts + 1 {
        let lp = relaxed_dual_lp(&cuts, budget, profile);
        let sol = lp_solve(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Internal(format!("relaxed dual LP is {:?}", sol.status)));
        }
        let dual = dual_from_lp(&sol.primal);
        lower = lower.max(sol.primal[4]);

        let inner = bnb_solve(ch, &dual, &cfg.inner)?;
        if inner.budget_exhausted {
            return Err(Error::NotConverged(format!(
                "inner branch-and-bound stopped with gap {} at {dual:?}",
                inner.gap
            )));
        }
        let origin = if inner.capped { CutOrigin::Capped } else { CutOrigin::Bnb };
        let cut = Cut::new(ch, inner.p, origin);
        let psi = achieved_dual_value(ch, &dual, budget, &cut);
        if psi < upper {
            upper = psi;
            best_dual = dual;
        }
        lower_trace.push(lower);
        upper_trace.push(upper);

        let duplicate = cuts
            .iter()
            .any(|c| (c.p[0] - cut.p[0]).abs() <= DUPLICATE_CUT_TOL && (c.p[1] - cut.p[1]).abs() <= DUPLICATE_CUT_TOL);
        if !duplicate {
            cuts.push(cut);
        }
        if upper - lower <= cfg.epsilon_cp {
            converged = true;
            break;
        }
        if duplicate {
            stalled = true;
            break;
        }
    }
    Ok(CuttingPlaneResult { dual: best_dual, cuts, lower, upper, converged, stalled, lower_trace, upper_trace })
}

/// Time-sharing over the cut points: maximize `R` subject to
/// `sum tau r_k(p_l) >= rho_k R`, `sum tau p_l <= P`, `sum tau = 1`, `tau >= 0`.
pub fn primal_recover(
    ch: &ChannelRealization,
    cuts: &[Cut],
    budget: &PowerBudget,
    profile: &RateProfile,
) -> Result<TimeSharingSolution> {
    if cuts.is_empty() {
        return Err(Error::EmptyInput("no cuts for primal recovery"));
    }
    let n = cuts.len();
    let rho = profile.rho();
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, objective).free(n);
    for k in 0..2 {
        let mut row: Vec<f64> = cuts.iter().map(|c| c.rates.get(k)).collect();
        row.push(-rho[k]);
        lp.add_row(row, Relation::Ge, 0.0);
    }
    for k in 0..2 {
        let mut row: Vec<f64> = cuts.iter().map(|c| c.p[k]).collect();
        row.push(0.0);
        lp.add_row(row, Relation::Le, budget.user(k));
    }
    let mut row = vec![1.0; n];
    row.push(0.0);
    lp.add_row(row, Relation::Eq, 1.0);

    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!("primal recovery LP is {:?}", sol.status)));
    }
    let mut strategies: Vec<WeightedStrategy> = cuts
        .iter()
        .zip(&sol.primal)
        .filter(|(_, tau)| **tau > TAU_PRUNE)
        .map(|(c, tau)| WeightedStrategy { tau: *tau, p: c.p, rates: ch.proper_rates(&c.p).into() })
        .collect();
    let total: f64 = strategies.iter().map(|s| s.tau).sum();
    for s in &mut strategies {
        s.tau /= total;
    }
    if strategies.len() > MAX_ACTIVE_STRATEGIES {
        return Err(Error::Internal(format!("{} active strategies after recovery", strategies.len())));
    }
    let mut solution = TimeSharingSolution { beta: profile.beta(), strategies, rate: 0.0 };
    solution.rate = profile.balanced(solution.average_rates().as_array());
    Ok(solution)
}

/// A converged time-sharing boundary point with its dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct TsPoint {
    pub solution: TimeSharingSolution,
    pub dual: DualPoint,
    pub cuts: usize,
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
}

/// Single-user capacity `log2(1 + |h_kk|^2 P_k / n_k)` with the supporting prices.
fn single_user_point(ch: &ChannelRealization, budget: &PowerBudget, profile: &RateProfile, k: usize) -> TsPoint {
    let mut p = [0.0; 2];
    p[k] = budget.user(k);
    let rates: RatePair = ch.proper_rates(&p).into();
    let r = rates.get(k);
    let mut mu = [0.0; 2];
    mu[k] = 1.0;
    let mut lambda = [0.0; 2];
    lambda[k] = ch.gain(k, k) / ((ch.noise(k) + ch.gain(k, k) * p[k]) * LN_2);
    TsPoint {
        solution: TimeSharingSolution {
            beta: profile.beta(),
            strategies: vec![WeightedStrategy { tau: 1.0, p, rates }],
            rate: r,
        },
        dual: DualPoint { mu, lambda },
        cuts: 0,
        lower: r,
        upper: r,
        converged: true,
    }
}

/// Boundary point of the proper time-sharing region in direction `rho`.
pub fn ts_point(
    ch: &ChannelRealization,
    budget: &PowerBudget,
    profile: &RateProfile,
    cfg: &OuterConfig,
) -> Result<TsPoint> {
    if profile.beta() == 1.0 {
        return Ok(single_user_point(ch, budget, profile, 0));
    }
    if profile.beta() == 0.0 {
        return Ok(single_user_point(ch, budget, profile, 1));
    }
    let cp = cutting_plane(ch, budget, profile, cfg)?;
    let solution = primal_recover(ch, &cp.cuts, budget, profile)?;
    if cp.converged && (cp.upper - solution.rate).abs() > 2.0 * cfg.epsilon_cp {
        return Err(Error::Internal(format!(
            "duality gap {} exceeds tolerance",
            (cp.upper - solution.rate).abs()
        )));
    }
    Ok(TsPoint {
        solution,
        dual: cp.dual,
        cuts: cp.cuts.len(),
        lower: cp.lower,
        upper: cp.upper,
        converged: cp.converged,
    })
}
