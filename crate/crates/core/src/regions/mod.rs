//! Rate-region boundaries traced by rate balancing over `rho = (beta, 1 - beta)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ChannelRealization, PowerBudget, RatePair, RateProfile};
use crate::outer::{ts_point, OuterConfig, TsPoint};

pub mod hull;
pub mod sampling;
pub mod verify;

pub use hull::{ray_value, upper_right_hull};
pub use sampling::{pure_improper_samples, pure_proper_point, ProperPoint, ProperSearchConfig, SamplingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Pure proper strategies (rate balancing over one power vector).
    PureProper,
    /// Convex hull of pure proper rate pairs.
    HullProper,
    /// Coded time-sharing over proper strategies.
    TsProper,
    /// Best sampled pure improper strategy per direction.
    PureImproperSamples,
    /// Convex hull of sampled pure improper rate pairs.
    HullImproper,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::PureProper, Method::HullProper, Method::TsProper, Method::PureImproperSamples, Method::HullImproper];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::PureProper => "pure-proper",
            Method::HullProper => "hull-proper",
            Method::TsProper => "ts-proper",
            Method::PureImproperSamples => "pure-improper-samples",
            Method::HullImproper => "hull-improper",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegionConfig {
    pub outer: Option<OuterConfig>,
    pub proper: ProperSearchConfig,
    pub sampling: SamplingConfig,
    /// Grid size of extra proper samples added to the proper hull.
    pub hull_grid: usize,
}

impl RegionConfig {
    pub fn for_budget(budget: &PowerBudget) -> Self {
        Self { outer: Some(OuterConfig::for_budget(budget)), hull_grid: 51, ..Self::default() }
    }

    fn outer_or_default(&self, budget: &PowerBudget) -> OuterConfig {
        self.outer.unwrap_or_else(|| OuterConfig::for_budget(budget))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    /// The solver stopped before reaching its tolerance; the entry holds the
    /// best point found (or NaN if none).
    NotConverged,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::NotConverged => "not-converged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEntry {
    pub beta: f64,
    /// Achieved rate pair (componentwise at least `rho * value`).
    pub rates: RatePair,
    /// Balanced value `R`.
    pub value: f64,
    pub method: Method,
    pub status: PointStatus,
    /// Dual certificate and strategies of time-sharing points.
    pub ts: Option<TsPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionBoundary {
    pub method: Method,
    pub entries: Vec<BoundaryEntry>,
}

impl RegionBoundary {
    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(|e| e.status == PointStatus::Ok)
    }

    /// Rate pairs ordered by descending beta, closed with the axis projections
    /// of the end points.
    pub fn polyline(&self) -> Vec<RatePair> {
        let mut pts: Vec<(f64, RatePair)> = self
            .entries
            .iter()
            .filter(|e| e.status == PointStatus::Ok)
            .map(|e| (e.beta, e.rates))
            .collect();
        pts.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut out: Vec<RatePair> = pts.into_iter().map(|(_, r)| r).collect();
        if let (Some(first), Some(last)) = (out.first().copied(), out.last().copied()) {
            out.insert(0, RatePair::new(first.r1, 0.0));
            out.push(RatePair::new(0.0, last.r2));
        }
        out
    }

    /// `r1` nonincreasing and `r2` nondecreasing as beta decreases, up to `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        let mut pts: Vec<&BoundaryEntry> = self.entries.iter().filter(|e| e.status == PointStatus::Ok).collect();
        pts.sort_by(|a, b| b.beta.total_cmp(&a.beta));
        pts.windows(2).all(|w| w[1].rates.r1 <= w[0].rates.r1 + tol && w[1].rates.r2 >= w[0].rates.r2 - tol)
    }
}

/// `n` evenly spaced values from 1 down to 0 (`[1.0]` if `n == 1`).
pub fn beta_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..n).map(|i| if i + 1 == n { 0.0 } else { 1.0 - i as f64 / (n - 1) as f64 }).collect(),
    }
}

fn profiles(betas: &[f64]) -> Result<Vec<RateProfile>> {
    if betas.is_empty() {
        return Err(Error::EmptyInput("no beta values"));
    }
    betas.iter().map(|&b| RateProfile::new(b)).collect()
}

fn hull_entries(hull: &[RatePair], profiles: &[RateProfile], method: Method) -> Result<Vec<BoundaryEntry>> {
    profiles
        .iter()
        .map(|pr| {
            let value = ray_value(hull, pr)
                .ok_or_else(|| Error::Internal(format!("ray at beta {} misses the hull", pr.beta())))?;
            let rho = pr.rho();
            Ok(BoundaryEntry {
                beta: pr.beta(),
                rates: RatePair::new(rho[0] * value, rho[1] * value),
                value,
                method,
                status: PointStatus::Ok,
                ts: None,
            })
        })
        .collect()
}

fn ts_entry(ch: &ChannelRealization, budget: &PowerBudget, pr: &RateProfile, cfg: &OuterConfig) -> Result<BoundaryEntry> {
    let mut entry = BoundaryEntry {
        beta: pr.beta(),
        rates: RatePair::new(f64::NAN, f64::NAN),
        value: f64::NAN,
        method: Method::TsProper,
        status: PointStatus::NotConverged,
        ts: None,
    };
    match ts_point(ch, budget, pr, cfg) {
        Ok(pt) => {
            entry.rates = pt.solution.average_rates();
            entry.value = pt.solution.rate;
            if pt.converged {
                entry.status = PointStatus::Ok;
            }
            entry.ts = Some(pt);
            Ok(entry)
        }
        Err(Error::NotConverged(_)) => Ok(entry),
        Err(e) => Err(e),
    }
}

/// Evaluates `method` at every beta. Points are computed in parallel and
/// returned in the order of `betas`.
pub fn sweep_boundary(
    method: Method,
    ch: &ChannelRealization,
    budget: &PowerBudget,
    betas: &[f64],
    cfg: &RegionConfig,
) -> Result<RegionBoundary> {
    let profiles = profiles(betas)?;
    let pure_points = |prs: &[RateProfile]| -> Result<Vec<ProperPoint>> {
        prs.par_iter().map(|pr| pure_proper_point(ch, budget, pr, &cfg.proper)).collect()
    };

    let entries = match method {
        Method::PureProper => pure_points(&profiles)?
            .into_iter()
            .zip(&profiles)
            .map(|(pt, pr)| BoundaryEntry {
                beta: pr.beta(),
                rates: pt.rates,
                value: pt.value,
                method,
                status: PointStatus::Ok,
                ts: None,
            })
            .collect(),
        Method::HullProper => {
            let mut points: Vec<RatePair> = pure_points(&profiles)?.into_iter().map(|p| p.rates).collect();
            let ends = [RateProfile::new(0.0)?, RateProfile::new(1.0)?];
            points.extend(pure_points(&ends)?.into_iter().map(|p| p.rates));
            if cfg.hull_grid >= 2 {
                points.extend(sampling::proper_grid_samples(ch, budget, cfg.hull_grid));
            }
            hull_entries(&upper_right_hull(&points)?, &profiles, method)?
        }
        Method::TsProper => {
            let outer = cfg.outer_or_default(budget);
            profiles.par_iter().map(|pr| ts_entry(ch, budget, pr, &outer)).collect::<Result<Vec<_>>>()?
        }
        Method::HullImproper => {
            let mut points = pure_improper_samples(ch, budget, &cfg.sampling)?;
            points.extend(pure_points(&profiles)?.into_iter().map(|p| p.rates));
            hull_entries(&upper_right_hull(&points)?, &profiles, method)?
        }
        Method::PureImproperSamples => {
            let samples = pure_improper_samples(ch, budget, &cfg.sampling)?;
            profiles
                .par_iter()
                .map(|pr| {
                    let (value, rates) = sampling::best_balanced(&samples, pr)
                        .ok_or(Error::EmptyInput("no improper samples"))?;
                    Ok(BoundaryEntry { beta: pr.beta(), rates, value, method, status: PointStatus::Ok, ts: None })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(RegionBoundary { method, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::scenario::{reference_budget, reference_channel};

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("proper".parse::<Method>().is_err());
    }

    #[test]
    fn beta_grid_endpoints() {
        assert_eq!(beta_grid(3), vec![1.0, 0.5, 0.0]);
        assert_eq!(beta_grid(1), vec![1.0]);
        assert!(beta_grid(0).is_empty());
        let g = beta_grid(101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[100], 0.0);
        assert!((g[50] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_betas_rejected() {
        let cfg = RegionConfig::for_budget(&reference_budget());
        let r = sweep_boundary(Method::PureProper, &reference_channel(), &reference_budget(), &[], &cfg);
        assert!(matches!(r, Err(Error::EmptyInput(_))));
        let r = sweep_boundary(Method::PureProper, &reference_channel(), &reference_budget(), &[1.5], &cfg);
        assert!(r.is_err());
    }

    #[test]
    fn proper_hull_is_the_intercept_chord() {
        let ch = reference_channel();
        let budget = reference_budget();
        let cfg = RegionConfig::for_budget(&budget);
        let b = sweep_boundary(Method::HullProper, &ch, &budget, &beta_grid(11), &cfg).unwrap();
        let c1 = (1.0 + ch.gain(0, 0) * 10.0).log2();
        let c2 = (1.0 + ch.gain(1, 1) * 10.0).log2();
        for e in &b.entries {
            // On the chord r1 / c1 + r2 / c2 = 1.
            let s = e.rates.r1 / c1 + e.rates.r2 / c2;
            assert!((s - 1.0).abs() < 1e-9, "beta {}: {s}", e.beta);
        }
        let mid = &b.entries[5];
        assert!((mid.rates.r1 - 2.1024).abs() < 1e-3, "{:?}", mid.rates);
        assert!(b.is_monotone(1e-12));
    }

    #[test]
    fn small_ts_sweep() {
        let ch = reference_channel();
        let budget = reference_budget();
        let cfg = RegionConfig::for_budget(&budget);
        let b = sweep_boundary(Method::TsProper, &ch, &budget, &beta_grid(3), &cfg).unwrap();
        assert!(b.all_converged());
        let r: Vec<[f64; 2]> = b.entries.iter().map(|e| e.rates.as_array()).collect();
        assert!((r[0][0] - 5.40086).abs() < 1e-3 && r[0][1].abs() < 1e-12);
        assert!((r[1][0] - 2.54495).abs() < 5e-3 && (r[1][1] - 2.54495).abs() < 5e-3);
        assert!((r[2][1] - 3.44236).abs() < 1e-3 && r[2][0].abs() < 1e-12);
        let poly = b.polyline();
        assert_eq!(poly.len(), 5);
        assert_eq!(poly[0].r2, 0.0);
    }

    #[test]
    fn sweeps_are_deterministic() {
        let ch = reference_channel();
        let budget = reference_budget();
        let mut cfg = RegionConfig::for_budget(&budget);
        cfg.sampling = SamplingConfig { power_grid: 5, kappa_grid: 3, phase_grid: 4, random_samples: 1000, seed: 3 };
        for m in Method::ALL {
            let a = sweep_boundary(m, &ch, &budget, &beta_grid(7), &cfg).unwrap();
            let b = sweep_boundary(m, &ch, &budget, &beta_grid(7), &cfg).unwrap();
            assert_eq!(a, b, "{m}");
        }
    }
}
