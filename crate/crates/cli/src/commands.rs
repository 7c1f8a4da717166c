use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use gic_tin::model::{enhance, ChannelRealization, PowerBudget, RateProfile};
use gic_tin::outer::{ts_point, OuterConfig, TAU_PRUNE};
use gic_tin::regions::verify::{
    duality_check, lemma1_check, nesting_check, theorem1_check, Lemma1Config, Theorem1Config,
};
use gic_tin::regions::{beta_grid, sweep_boundary, Method, RegionBoundary, RegionConfig, SamplingConfig};
use gic_tin::Error;
use serde::Serialize;

use crate::channel_file::ChannelFile;
use crate::{Common, MethodArg, RegionArgs, SolveArgs, Suite, VerifyArgs};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn io(e: io::Error) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotConverged(_) => EXIT_NOT_CONVERGED,
            Error::InvalidConfig(_) | Error::InvalidChannel(_) | Error::EmptyInput(_) => EXIT_USAGE,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<ExitCode, Failure>;

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::PureProper => Method::PureProper,
            MethodArg::HullProper => Method::HullProper,
            MethodArg::TsProper => Method::TsProper,
            MethodArg::PureImproperSamples => Method::PureImproperSamples,
            MethodArg::HullImproper => Method::HullImproper,
        }
    }
}

struct Setup {
    channel: ChannelRealization,
    budget: PowerBudget,
    config: RegionConfig,
}

fn setup(common: &Common, seed: u64) -> Result<Setup, Failure> {
    let channel = ChannelFile::load(&common.channel).map_err(Failure::usage)?;
    let budget = PowerBudget::new(common.p1, common.p2)?;
    let mut outer = OuterConfig::for_budget(&budget);
    outer.epsilon_cp = common.eps_cp;
    outer.inner.epsilon = common.eps_bnb;
    outer.validate()?;
    let config = RegionConfig {
        outer: Some(outer),
        sampling: SamplingConfig { seed, ..SamplingConfig::default() },
        ..RegionConfig::for_budget(&budget)
    };
    Ok(Setup { channel, budget, config })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn number(x: f64) -> String {
    format!("{x:.15e}")
}

pub fn write_region<W: Write>(out: W, boundary: &RegionBoundary) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "beta", "r1", "r2", "R", "status"])?;
    for e in &boundary.entries {
        w.write_record([
            e.method.as_str().to_string(),
            number(e.beta),
            number(e.rates.r1),
            number(e.rates.r2),
            number(e.value),
            e.status.as_str().to_string(),
        ])?;
    }
    w.flush()
}

pub fn region(args: &RegionArgs) -> CmdResult {
    let s = setup(&args.common, args.seed)?;
    let betas = match args.beta {
        Some(b) => vec![b],
        None if args.betas == 0 => return Err(Failure::usage("--betas must be positive")),
        None => beta_grid(args.betas),
    };
    let boundary = sweep_boundary(args.method.into(), &s.channel, &s.budget, &betas, &s.config)?;
    write_region(output(args.out.as_deref())?, &boundary).map_err(Failure::io)?;
    if boundary.all_converged() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("gic-tin: some points did not converge (status column)");
        Ok(ExitCode::from(EXIT_NOT_CONVERGED))
    }
}

#[derive(Debug, Serialize)]
pub struct StrategyDoc {
    pub tau: f64,
    pub p1: f64,
    pub p2: f64,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Serialize)]
pub struct SolutionDoc {
    #[serde(rename = "R")]
    pub rate: f64,
    pub beta: f64,
    pub mu: [f64; 2],
    pub lambda: [f64; 2],
    pub cuts: usize,
    pub converged: bool,
    pub dual_bound: f64,
    pub strategies: Vec<StrategyDoc>,
}

pub fn solve(args: &SolveArgs) -> CmdResult {
    let s = setup(&args.common, 0)?;
    let profile = RateProfile::new(args.beta)?;
    let outer = s.config.outer.expect("set up above");
    let pt = ts_point(&s.channel, &s.budget, &profile, &outer)?;
    let doc = SolutionDoc {
        rate: pt.solution.rate,
        beta: pt.solution.beta,
        mu: pt.dual.mu,
        lambda: pt.dual.lambda,
        cuts: pt.cuts,
        converged: pt.converged,
        dual_bound: pt.upper,
        strategies: pt
            .solution
            .strategies
            .iter()
            .filter(|x| x.tau > TAU_PRUNE)
            .map(|x| StrategyDoc { tau: x.tau, p1: x.p[0], p2: x.p[1], r1: x.rates.r1, r2: x.rates.r2 })
            .collect(),
    };
    let mut out = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Failure::io(e.into()))?;
    writeln!(out).map_err(Failure::io)?;
    Ok(if pt.converged { ExitCode::SUCCESS } else { ExitCode::from(EXIT_NOT_CONVERGED) })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn verify(args: &VerifyArgs) -> CmdResult {
    let mut s = setup(&args.common, args.seed)?;
    if args.enhance {
        s.channel = enhance(&s.channel);
    }
    let wants = |suite: Suite| args.suite == suite || args.suite == Suite::All;
    let betas = beta_grid(args.betas.max(2));
    let mut all_ok = true;
    let mut ts: Option<RegionBoundary> = None;
    let mut ts_boundary = |s: &Setup| -> Result<RegionBoundary, Failure> {
        if let Some(b) = &ts {
            return Ok(b.clone());
        }
        let b = sweep_boundary(Method::TsProper, &s.channel, &s.budget, &betas, &s.config)?;
        ts = Some(b.clone());
        Ok(b)
    };

    if wants(Suite::Lemma1) {
        let t = Instant::now();
        let cfg = Lemma1Config { trials: args.trials.unwrap_or(100_000), seed: args.seed, max_power: s.budget.max() };
        let r = lemma1_check(&s.channel, &cfg)?;
        all_ok &= r.passed();
        println!(
            "lemma1: {} trials={} bound_violations={} max_bound_excess={:.3e} simultaneous_alignment={} \
             max_aligned_error={:.3e} max_bound_channel_difference={:.3e} max_proper_channel_difference={:.3e} time={:.2?}",
            verdict(r.passed()),
            r.trials,
            r.bound_violations,
            r.max_bound_excess,
            r.simultaneous_alignment,
            r.max_aligned_error,
            r.max_bound_channel_difference,
            r.max_proper_channel_difference,
            t.elapsed()
        );
    }
    if wants(Suite::Theorem1) {
        let t = Instant::now();
        let boundary = ts_boundary(&s)?;
        if !boundary.all_converged() {
            return Err(Failure { code: EXIT_NOT_CONVERGED, message: "time-sharing sweep did not converge".into() });
        }
        let cfg = Theorem1Config { trials: args.trials.unwrap_or(1000), seed: args.seed, ..Theorem1Config::default() };
        let r = theorem1_check(&s.channel, &s.budget, &boundary, &cfg)?;
        all_ok &= r.passed();
        println!(
            "theorem1: {} trials={} violations={} max_violation={:.3e} tolerance={:.1e} max_boundary_ratio={:.4} redraws={} time={:.2?}",
            verdict(r.passed()),
            r.trials,
            r.violations,
            r.max_violation,
            r.tolerance,
            r.max_boundary_ratio,
            r.redraws,
            t.elapsed()
        );
    }
    if wants(Suite::Duality) {
        let t = Instant::now();
        let boundary = ts_boundary(&s)?;
        let tol = 2.0 * s.config.outer.expect("set up above").epsilon_cp;
        let r = duality_check(&boundary, tol)?;
        all_ok &= r.passed();
        println!(
            "duality: {} points={} unconverged={} max_gap={:.3e} tolerance={:.1e} max_active={} time={:.2?}",
            verdict(r.passed()),
            r.points,
            r.unconverged,
            r.max_gap,
            r.gap_tolerance,
            r.max_active,
            t.elapsed()
        );
    }
    if wants(Suite::Nesting) {
        let t = Instant::now();
        let ts_b = ts_boundary(&s)?;
        let pure = sweep_boundary(Method::PureProper, &s.channel, &s.budget, &betas, &s.config)?;
        let hull = sweep_boundary(Method::HullProper, &s.channel, &s.budget, &betas, &s.config)?;
        let r = nesting_check(&pure, &hull, &ts_b, 1e-6)?;
        all_ok &= r.passed();
        println!(
            "nesting: {} points={} min_hull_margin={:.3e} min_ts_margin={:.3e} slack={:.1e} time={:.2?}",
            verdict(r.passed()),
            r.points,
            r.min_hull_margin,
            r.min_ts_margin,
            r.slack,
            t.elapsed()
        );
    }
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
