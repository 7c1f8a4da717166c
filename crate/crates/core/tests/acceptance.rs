//! Acceptance checks on the two-user benchmark channel (unit noise, P = 10).
//!
//! Runs without the libtest harness so that every criterion prints exactly one
//! `PASS`/`FAIL` line in order. Exits nonzero if any criterion fails.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::Instant;

use gic_tin::inner::{bnb_solve, init_box, inner_objective, BnbConfig, DualPoint};
use gic_tin::model::scenario::{reference_budget, reference_channel, MAGNITUDES, POWER};
use gic_tin::model::{ChannelRealization, RateProfile};
use gic_tin::outer::{ts_point, OuterConfig, TAU_PRUNE};
use gic_tin::regions::sampling::pure_improper_samples;
use gic_tin::regions::verify::{
    duality_check, lemma1_check, nesting_check, theorem1_check, Lemma1Config, Theorem1Config,
};
use gic_tin::regions::{beta_grid, sweep_boundary, Method, RegionBoundary, RegionConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const EPS_CP: f64 = 1e-4;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Sweeps {
    pure: RegionBoundary,
    hull: RegionBoundary,
    ts: RegionBoundary,
    improper_hull: RegionBoundary,
}

fn diagonal(b: &RegionBoundary) -> f64 {
    let e = b.entries.iter().find(|e| e.beta == 0.5).expect("beta grid contains 0.5");
    0.5 * e.value
}

fn capacity(k: usize) -> f64 {
    (1.0 + MAGNITUDES[3 * k] * MAGNITUDES[3 * k] * POWER).log2()
}

fn intercepts(ch: &ChannelRealization) -> Outcome {
    let budget = reference_budget();
    let cfg = OuterConfig::for_budget(&budget);
    let r1 = ts_point(ch, &budget, &RateProfile::new(1.0).unwrap(), &cfg).unwrap().solution.rate;
    let r0 = ts_point(ch, &budget, &RateProfile::new(0.0).unwrap(), &cfg).unwrap().solution.rate;
    let ok = (r1 - 5.40086).abs() <= 1e-3
        && (r0 - 3.44236).abs() <= 1e-3
        && (r1 - capacity(0)).abs() <= 1e-9
        && (r0 - capacity(1)).abs() <= 1e-9;
    outcome(ok, format!("R(1) = {r1:.6}, R(0) = {r0:.6} (expected 5.40086, 3.44236 +- 1e-3)"))
}

fn symmetric(ch: &ChannelRealization) -> Outcome {
    let budget = reference_budget();
    let pt = ts_point(ch, &budget, &RateProfile::new(0.5).unwrap(), &OuterConfig::for_budget(&budget)).unwrap();
    let r = pt.solution.average_rates();
    let ok = pt.converged && (r.r1 - 2.54495).abs() <= 5e-3 && (r.r2 - 2.54495).abs() <= 5e-3;
    outcome(ok, format!("r = ({:.6}, {:.6}) (expected 2.54495 +- 5e-3)", r.r1, r.r2))
}

fn superiority(s: &Sweeps) -> Outcome {
    let ts = diagonal(&s.ts);
    let proper = diagonal(&s.hull);
    let improper = diagonal(&s.improper_hull);
    let ok = ts >= 2.51
        && (proper - 2.1024).abs() <= 1e-2
        && (improper - 2.460).abs() <= 1e-2
        && ts > proper
        && ts > improper;
    outcome(
        ok,
        format!("ts {ts:.5} > proper hull {proper:.5} (2.1024), improper hull {improper:.5} (2.460); margin {:.4}", ts - improper),
    )
}

fn nesting(s: &Sweeps) -> Outcome {
    let report = nesting_check(&s.pure, &s.hull, &s.ts, 1e-6).unwrap();
    outcome(
        report.passed(),
        format!(
            "{} betas, min(hull - pure) = {:.3e}, min(ts - hull) = {:.3e} (slack 1e-6)",
            report.points, report.min_hull_margin, report.min_ts_margin
        ),
    )
}

fn theorem1(ch: &ChannelRealization, s: &Sweeps) -> Outcome {
    let cfg = Theorem1Config { trials: 1000, seed: 2024, ..Theorem1Config::default() };
    let report = theorem1_check(ch, &reference_budget(), &s.ts, &cfg).unwrap();
    outcome(
        report.passed() && report.max_violation <= 5e-3,
        format!(
            "{} candidates, max violation {:.3e} bits, closest approach {:.4} of the boundary",
            report.trials, report.max_violation, report.max_boundary_ratio
        ),
    )
}

fn lemma1(ch: &ChannelRealization) -> Outcome {
    let report = lemma1_check(ch, &Lemma1Config { trials: 100_000, seed: 7, max_power: POWER }).unwrap();
    outcome(
        report.passed() && report.max_bound_excess <= 1e-12 && report.max_aligned_error <= 1e-9,
        format!(
            "{} strategies, max r - rbar = {:.2e}, aligned |r - rbar| = {:.2e}, simultaneous = {}",
            report.trials, report.max_bound_excess, report.max_aligned_error, report.simultaneous_alignment
        ),
    )
}

// First-order error bound of a grid with step h: |df/dp_k| <= L_k on p >= 0.
fn grid_error(ch: &ChannelRealization, d: &DualPoint, h: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..2 {
        let j = 1 - k;
        let own = d.mu[k] * ch.gain(k, k) / (ch.noise(k) * LN_2);
        let cross = d.mu[j] * ch.gain(j, k) / (ch.noise(j) * LN_2);
        total += own + cross + d.lambda[k];
    }
    0.5 * h * total
}

fn grid_max(ch: &ChannelRealization, d: &DualPoint, b: [f64; 2], h: f64) -> f64 {
    let n1 = (b[0] / h).ceil() as usize;
    let n2 = (b[1] / h).ceil() as usize;
    (0..=n1)
        .into_par_iter()
        .map(|i| {
            let p1 = (i as f64 * h).min(b[0]);
            (0..=n2).map(|j| inner_objective(ch, d, &[p1, (j as f64 * h).min(b[1])])).fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

fn inner_oracle(ch: &ChannelRealization) -> Outcome {
    let cfg = BnbConfig::for_budget(&reference_budget());
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let h = 0.01;
    let mut ok = true;
    let mut worst_gap: f64 = 0.0;
    let mut worst_below: f64 = 0.0;
    let mut worst_above_ratio: f64 = 0.0;
    for _ in 0..50 {
        let mu = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let lambda = [rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0)];
        let d = DualPoint::new(mu, lambda).unwrap();
        let sol = bnb_solve(ch, &d, &cfg).unwrap();
        let region = init_box(ch, &d, &cfg).region;
        let grid = grid_max(ch, &d, region.b, h);
        let err = grid_error(ch, &d, h);
        worst_gap = worst_gap.max(sol.gap);
        worst_below = worst_below.max(grid - sol.value);
        worst_above_ratio = worst_above_ratio.max((sol.value - grid) / (cfg.epsilon + err));
        ok &= !sol.budget_exhausted
            && sol.gap <= 1e-6
            && sol.value >= grid - cfg.epsilon
            && sol.value <= grid + cfg.epsilon + err;
    }
    outcome(
        ok,
        format!(
            "50 duals, max certified gap {worst_gap:.2e}, max(grid - bnb) = {worst_below:.2e}, (bnb - grid) / (eps + grid error) <= {worst_above_ratio:.3}"
        ),
    )
}

fn duality(s: &Sweeps) -> Outcome {
    let report = duality_check(&s.ts, 2.0 * EPS_CP).unwrap();
    outcome(
        report.unconverged == 0 && report.max_gap <= 2.0 * EPS_CP,
        format!("{} betas, max |R - dual bound| = {:.3e} (<= 2e-4)", report.points, report.max_gap),
    )
}

fn caratheodory(s: &Sweeps) -> Outcome {
    let counts: Vec<usize> = s
        .ts
        .entries
        .iter()
        .filter_map(|e| e.ts.as_ref())
        .map(|pt| pt.solution.strategies.iter().filter(|x| x.tau > TAU_PRUNE).count())
        .collect();
    let max = counts.iter().copied().max().unwrap_or(0);
    outcome(counts.len() == s.ts.entries.len() && max <= 4, format!("max active strategies {max} over {} betas", counts.len()))
}

fn improper_regression(ch: &ChannelRealization) -> Outcome {
    let samples = pure_improper_samples(ch, &reference_budget(), &Default::default()).unwrap();
    let target = [3.191, 2.112];
    let best = samples
        .iter()
        .map(|p| (p.r1 - target[0]).abs().max((p.r2 - target[1]).abs()))
        .fold(f64::INFINITY, f64::min);
    outcome(best <= 0.05, format!("{} samples, closest L-inf distance {best:.4} (<= 0.05)", samples.len()))
}

fn main() -> ExitCode {
    let ch = reference_channel();
    let budget = reference_budget();
    let cfg = RegionConfig::for_budget(&budget);
    let betas = beta_grid(101);
    let started = Instant::now();
    let sweep = |m| sweep_boundary(m, &ch, &budget, &betas, &cfg).unwrap();
    let sweeps = Sweeps {
        pure: sweep(Method::PureProper),
        hull: sweep(Method::HullProper),
        ts: sweep(Method::TsProper),
        improper_hull: sweep(Method::HullImproper),
    };
    println!("sweeps over {} betas computed in {:.1?}", betas.len(), started.elapsed());

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("intercepts", Box::new(|| intercepts(&ch))),
        ("symmetric time-sharing point", Box::new(|| symmetric(&ch))),
        ("strict superiority on the diagonal", Box::new(|| superiority(&sweeps))),
        ("nesting sweep", Box::new(|| nesting(&sweeps))),
        ("improper time-sharing containment", Box::new(|| theorem1(&ch, &sweeps))),
        ("rate bound property suite", Box::new(|| lemma1(&ch))),
        ("inner solver grid oracle", Box::new(|| inner_oracle(&ch))),
        ("strong duality", Box::new(|| duality(&sweeps))),
        ("active strategy count", Box::new(|| caratheodory(&sweeps))),
        ("improper pure region regression", Box::new(|| improper_regression(&ch))),
    ];

    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        failures += usize::from(!o.passed);
        println!("{tag} {:>2} {name}: {} [{:.1?}]", i + 1, o.detail, t.elapsed());
    }
    if failures == 0 {
        println!("all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("{failures} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
