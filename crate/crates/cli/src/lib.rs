//! Command implementations behind the `bpskrx` binary.

pub mod args;
pub mod config;
pub mod figure;
pub mod receiver;
pub mod sweep;

use std::io::Write;

use anyhow::{anyhow, bail, Result};
use bpskrx_core::baselines::{helstrom_bound, sql_error};
use bpskrx_core::validation::{self, Suite, SuiteSettings, CRITERIA};
use serde::Serialize;

use args::{Command, MonteCarloArgs, OptimizeArgs, ValidateArgs};
use config::FileLayer;
use receiver::{PointSpec, ReceiverKind};
use sweep::{fmt_num, SweepJob};

const POINT_KEYS: &[&str] = &[
    "receiver", "alpha2", "n-copies", "pnr", "eta", "nu", "xi", "mc-trials", "seed", "json",
];

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Sweep(a) => sweep::execute(&SweepJob::from_args(a)?),
        Command::Figure(a) => {
            for path in figure::write_figure(&a.id, &a.out, a.points, a.json)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Optimize(a) => optimize(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Validate(a) => validate(a),
    }
}

struct Point {
    spec: PointSpec,
    alpha2: f64,
    json: bool,
}

fn resolve_point(
    config: Option<&std::path::Path>,
    receiver: Option<String>,
    alpha2: Option<f64>,
    model: &args::ModelArgs,
    json: bool,
) -> Result<(Point, FileLayer)> {
    let file = FileLayer::load(config, POINT_KEYS)?;
    let receiver = sweep::resolve_receiver(receiver, &file)?;
    let alpha2 = file
        .pick(alpha2, "alpha2")?
        .ok_or_else(|| anyhow!("--alpha2 is required"))?;
    if !(alpha2 >= 0.0 && alpha2.is_finite()) {
        bail!("--alpha2 must be finite and non-negative, got {alpha2}");
    }
    let (copies, model) = sweep::resolve_model(model, &file)?;
    let json = file.switch(json, "json")?;
    let spec = PointSpec {
        receiver,
        copies,
        model,
    };
    Ok((Point { spec, alpha2, json }, file))
}

#[derive(Debug, Serialize)]
struct OptimizeReport {
    receiver: ReceiverKind,
    alpha2: f64,
    n_copies: usize,
    pnr: u32,
    eta: f64,
    nu: f64,
    xi: f64,
    p_err: f64,
    p_helstrom: f64,
    p_sql: f64,
    ratio: f64,
    gain: f64,
    tau_opt: Option<f64>,
    z_opt: Option<f64>,
    n_th_opt: Option<u32>,
    betas: Option<Vec<f64>>,
    trace: Option<Vec<f64>>,
}

fn list(v: &Option<Vec<f64>>) -> String {
    v.as_ref()
        .map(|v| v.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(" "))
        .unwrap_or_else(|| "-".into())
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "-".into())
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    let (p, _) = resolve_point(a.config.as_deref(), a.receiver, a.alpha2, &a.model, a.json)?;
    p.spec.check(false)?;
    let eval = p.spec.evaluate(p.alpha2)?;
    let alpha = p.alpha2.sqrt();
    let d = eval.detail.as_ref();
    let report = OptimizeReport {
        receiver: p.spec.receiver,
        alpha2: p.alpha2,
        n_copies: p.spec.copies,
        pnr: p.spec.model.m.get(),
        eta: p.spec.model.eta,
        nu: p.spec.model.nu,
        xi: p.spec.model.xi,
        p_err: eval.p_err,
        p_helstrom: helstrom_bound(alpha),
        p_sql: sql_error(alpha)?,
        ratio: eval.ratio(),
        gain: eval.gain(),
        tau_opt: d.map(|d| d.params.tau),
        z_opt: d.map(|d| d.params.z),
        n_th_opt: d.map(|d| d.params.n_th),
        betas: d.map(|d| d.params.betas.clone()),
        trace: d.map(|d| d.per_step_correct.clone()),
    };
    let mut out = std::io::stdout().lock();
    if p.json {
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
        return Ok(());
    }
    writeln!(out, "receiver   {}", report.receiver)?;
    writeln!(out, "alpha2     {}", fmt_num(report.alpha2))?;
    writeln!(
        out,
        "detector   N={} M={} eta={} nu={} xi={}",
        report.n_copies,
        report.pnr,
        fmt_num(report.eta),
        fmt_num(report.nu),
        fmt_num(report.xi)
    )?;
    writeln!(out, "p_err      {}", fmt_num(report.p_err))?;
    writeln!(out, "helstrom   {}", fmt_num(report.p_helstrom))?;
    writeln!(out, "sql        {}", fmt_num(report.p_sql))?;
    writeln!(out, "ratio      {}", fmt_num(report.ratio))?;
    writeln!(out, "gain       {}", fmt_num(report.gain))?;
    writeln!(out, "tau*       {}", opt(report.tau_opt))?;
    writeln!(out, "z*         {}", opt(report.z_opt))?;
    writeln!(
        out,
        "n_th*      {}",
        report.n_th_opt.map(|n| n.to_string()).unwrap_or_else(|| "-".into())
    )?;
    writeln!(out, "betas      {}", list(&report.betas))?;
    writeln!(out, "trace      {}", list(&report.trace))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct MonteCarloReport {
    receiver: ReceiverKind,
    alpha2: f64,
    n_copies: usize,
    pnr: u32,
    eta: f64,
    nu: f64,
    xi: f64,
    p_err: f64,
    mc_trials: u64,
    seed: u64,
    mc_p_hat: f64,
    mc_std_err: f64,
    /// `(p_hat - p_err) / std_err`
    deviation: f64,
}

fn montecarlo(a: MonteCarloArgs) -> Result<()> {
    let (p, file) = resolve_point(a.config.as_deref(), a.receiver, a.alpha2, &a.model, a.json)?;
    let (trials, seed) = sweep::resolve_mc(&a.mc, &file)?;
    let (trials, seed) = (trials.unwrap_or(1_000_000), seed.unwrap_or(0));
    p.spec.check(true)?;
    let eval = p.spec.evaluate(p.alpha2)?;
    let (p_hat, se) = p
        .spec
        .simulate(&eval, trials, seed, 0)?
        .ok_or_else(|| anyhow!("receiver {} has no Monte Carlo model", p.spec.receiver))?;
    let report = MonteCarloReport {
        receiver: p.spec.receiver,
        alpha2: p.alpha2,
        n_copies: p.spec.copies,
        pnr: p.spec.model.m.get(),
        eta: p.spec.model.eta,
        nu: p.spec.model.nu,
        xi: p.spec.model.xi,
        p_err: eval.p_err,
        mc_trials: trials,
        seed,
        mc_p_hat: p_hat,
        mc_std_err: se,
        deviation: if se > 0.0 { (p_hat - eval.p_err) / se } else { 0.0 },
    };
    let mut out = std::io::stdout().lock();
    if p.json {
        serde_json::to_writer_pretty(&mut out, &report)?;
        writeln!(out)?;
    } else {
        writeln!(out, "receiver    {}", report.receiver)?;
        writeln!(out, "alpha2      {}", fmt_num(report.alpha2))?;
        writeln!(out, "p_err       {}", fmt_num(report.p_err))?;
        writeln!(out, "trials      {} (seed {})", report.mc_trials, report.seed)?;
        writeln!(out, "mc_p_hat    {}", fmt_num(report.mc_p_hat))?;
        writeln!(out, "mc_std_err  {}", fmt_num(report.mc_std_err))?;
        writeln!(out, "deviation   {:+.3} std_err", report.deviation)?;
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<()> {
    let suite: Suite = a.suite.parse()?;
    let mut settings = SuiteSettings::new(suite, a.seed);
    for t in &a.tolerances {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| anyhow!("--tolerance expects name=value, got `{t}`"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| anyhow!("--tolerance {name}: {e}"))?;
        settings.tolerances.set(name.trim(), value)?;
    }
    let ids: Vec<u8> = if a.criteria.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        a.criteria.clone()
    };
    let mut reports = Vec::new();
    let mut out = std::io::stdout().lock();
    for id in ids {
        let report = validation::run_criterion(id, &settings)?;
        if !a.json {
            for check in &report.checks {
                writeln!(out, "    {check}")?;
            }
            writeln!(out, "{}", report.summary())?;
        }
        reports.push(report);
    }
    if a.json {
        #[derive(Serialize)]
        struct Doc<'a> {
            settings: &'a SuiteSettings,
            passed: bool,
            criteria: &'a [validation::CriterionReport],
        }
        let passed = reports.iter().all(|r| r.passed());
        serde_json::to_writer_pretty(
            &mut out,
            &Doc {
                settings: &settings,
                passed,
                criteria: &reports,
            },
        )?;
        writeln!(out)?;
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.id.to_string())
        .collect();
    if !failed.is_empty() {
        bail!("validation failed: criteria {}", failed.join(", "));
    }
    Ok(())
}
