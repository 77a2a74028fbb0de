//! Acceptance checks with their pinned tolerances.
//!
//! Each criterion returns a [`CriterionReport`] listing individual checks with
//! the measured value, the bound it is held to and the signed margin
//! (non-negative on success). Reference values come from oracles written here
//! independently of the production code paths.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{helstrom_bound, hynore_error, kennedy_error, sql_error};
use crate::error::{Error, Result};
use crate::feedforward::{
    self, appendix_recursion, correct_trace, dffre_error, hffre_correct_at, hffre_error,
    saturation_dark, saturation_visibility, step_correct_prob, EvalResult, FeedForwardConfig,
};
use crate::photostatistics::{
    branch_means, hl_difference_pmf, pnr_pmf, q_thresh, DetectorModel, PnrResolution,
};
use crate::trajectory::{estimate_error, RngSpec};

/// Numeric tolerances of the acceptance suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Closed forms against series oracles (absolute).
    pub closed_form: f64,
    /// Skellam limit of the truncated HL difference (absolute, sup norm).
    pub skellam: f64,
    /// PMF normalization and mirror symmetry (absolute).
    pub pmf: f64,
    /// Slack in receiver orderings.
    pub ordering: f64,
    /// DFFRE against Kennedy at high energy (relative).
    pub asymptotic_rel: f64,
    /// Plateau flatness under dark counts (absolute).
    pub plateau_abs: f64,
    /// DFFRE against the dark-count floor (relative).
    pub dark_floor_rel: f64,
    /// DFFRE against the visibility floor (relative).
    pub visibility_floor_rel: f64,
    /// Monte Carlo agreement, in binomial standard errors.
    pub mc_sigmas: f64,
    /// Reduction identities and appendix consistency (absolute).
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            closed_form: 1e-12,
            skellam: 1e-8,
            pmf: 1e-12,
            ordering: 1e-9,
            asymptotic_rel: 0.10,
            plateau_abs: 1e-6,
            dark_floor_rel: 0.10,
            visibility_floor_rel: 0.15,
            mc_sigmas: 4.0,
            identity: 1e-12,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 10] = [
        "closed_form",
        "skellam",
        "pmf",
        "ordering",
        "asymptotic_rel",
        "plateau_abs",
        "dark_floor_rel",
        "visibility_floor_rel",
        "mc_sigmas",
        "identity",
    ];

    /// Overrides one tolerance by field name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::Config(format!(
                "tolerance {name} must be a finite non-negative number, got {value}"
            )));
        }
        let slot = match name {
            "closed_form" => &mut self.closed_form,
            "skellam" => &mut self.skellam,
            "pmf" => &mut self.pmf,
            "ordering" => &mut self.ordering,
            "asymptotic_rel" => &mut self.asymptotic_rel,
            "plateau_abs" => &mut self.plateau_abs,
            "dark_floor_rel" => &mut self.dark_floor_rel,
            "visibility_floor_rel" => &mut self.visibility_floor_rel,
            "mc_sigmas" => &mut self.mc_sigmas,
            "identity" => &mut self.identity,
            _ => {
                return Err(Error::Config(format!(
                    "unknown tolerance {name}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Reduced grids and Monte Carlo budgets.
    Fast,
    /// Full-scale grids and `10^6` Monte Carlo trials per point.
    Full,
}

impl Suite {
    fn mc_trials(self) -> u64 {
        match self {
            Suite::Fast => 100_000,
            Suite::Full => 1_000_000,
        }
    }

    fn ordering_points(self) -> usize {
        match self {
            Suite::Fast => 8,
            Suite::Full => 20,
        }
    }

    fn sign_scan_points(self) -> usize {
        match self {
            Suite::Fast => 12,
            Suite::Full => 30,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            _ => Err(Error::Config(format!("unknown suite {s}; expected fast or full"))),
        }
    }
}

/// Settings shared by every criterion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuiteSettings {
    pub suite: Suite,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl SuiteSettings {
    pub fn new(suite: Suite, seed: u64) -> Self {
        Self {
            suite,
            seed,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// Distance to the bound; negative when the check fails.
    pub margin: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let margin = bound - value;
        Self {
            name: name.into(),
            value,
            bound,
            margin,
            passed: value <= bound,
        }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let margin = value - bound;
        Self {
            name: name.into(),
            value,
            bound,
            margin,
            passed: value >= bound,
        }
    }

    /// Passes when `value < bound`.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let margin = bound - value;
        Self {
            name: name.into(),
            value,
            bound,
            margin,
            passed: value < bound,
        }
    }

    /// Passes when `value > bound`.
    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let margin = value - bound;
        Self {
            name: name.into(),
            value,
            bound,
            margin,
            passed: value > bound,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: value {:.6e}, bound {:.6e}, margin {:+.3e}",
            if self.passed { "ok  " } else { "FAIL" },
            self.name,
            self.value,
            self.bound,
            self.margin
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    #[serde(serialize_with = "ser_secs")]
    pub elapsed: Duration,
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Smallest margin over all checks.
    pub fn worst_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }

    /// One-line pass/fail summary.
    pub fn summary(&self) -> String {
        format!(
            "criterion {:>2} {:<32} {} ({}/{} checks, worst margin {:+.3e}, {:.1} s)",
            self.id,
            self.title,
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len(),
            self.worst_margin(),
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub settings: SuiteSettings,
    pub criteria: Vec<CriterionReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(CriterionReport::passed)
    }
}

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "closed-form baselines"),
    (2, "distribution kernel"),
    (3, "ideal ordering"),
    (4, "asymptotic convergence"),
    (5, "copy/resolution monotonicity"),
    (6, "efficiency regime"),
    (7, "dark-count saturation"),
    (8, "visibility regime"),
    (9, "Monte Carlo equivalence"),
    (10, "appendix consistency"),
    (11, "reduction identities"),
];

/// Runs one criterion by number.
pub fn run_criterion(id: u8, settings: &SuiteSettings) -> Result<CriterionReport> {
    let title = CRITERIA
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("unknown criterion {id}; expected 1..=11")))?;
    let tol = &settings.tolerances;
    let start = Instant::now();
    let checks = match id {
        1 => closed_form_baselines(tol),
        2 => distribution_kernel(tol)?,
        3 => ideal_ordering(tol, settings.suite)?,
        4 => asymptotic_convergence(tol)?,
        5 => copy_resolution_monotonicity()?,
        6 => efficiency_regime()?,
        7 => dark_count_saturation(tol, settings.suite)?,
        8 => visibility_regime(tol, settings.suite)?,
        9 => monte_carlo_equivalence(tol, settings.suite, settings.seed)?,
        10 => appendix_consistency(tol, settings.seed),
        _ => reduction_identities(tol)?,
    };
    Ok(CriterionReport {
        id,
        title,
        checks,
        elapsed: start.elapsed(),
    })
}

/// Runs every criterion in order.
pub fn run_suite(settings: &SuiteSettings) -> Result<SuiteReport> {
    let criteria = CRITERIA
        .iter()
        .map(|(id, _)| run_criterion(*id, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        settings: *settings,
        criteria,
    })
}

fn m(k: u32) -> PnrResolution {
    PnrResolution::new(k).expect("positive resolution")
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// `erf` from its all-positive series
/// `2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (1*3*...*(2n+1))`.
pub fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = term;
    let mut n = 0.0f64;
    loop {
        term *= 2.0 * x2 / (2.0 * n + 3.0);
        sum += term;
        n += 1.0;
        if term <= sum * 1e-18 {
            break;
        }
    }
    std::f64::consts::FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// Skellam probability from the modified Bessel series
/// `e^{-(a+b)} (a/b)^{k/2} I_|k|(2 sqrt(ab))`.
fn skellam_bessel(k: i64, a: f64, b: f64) -> f64 {
    let order = k.unsigned_abs() as f64;
    let half = (a * b).sqrt();
    let ln_pref = -(a + b) + 0.5 * k as f64 * (a / b).ln();
    // sum_j half^{2j + order} / (j! (j + order)!)
    let mut ln_term = order * half.ln() - ln_factorial(order);
    let mut sum = 0.0;
    let mut j = 0.0f64;
    loop {
        let t = (ln_pref + ln_term).exp();
        sum += t;
        j += 1.0;
        ln_term += 2.0 * half.ln() - j.ln() - (j + order).ln();
        if j > 2.0 * half && t < 1e-30 {
            break;
        }
    }
    sum
}

fn ln_factorial(n: f64) -> f64 {
    (1..=n as u64).map(|i| (i as f64).ln()).sum()
}

fn closed_form_baselines(tol: &Tolerances) -> Vec<Check> {
    let mut checks = Vec::new();
    for &a2 in &[0.25, 1.0, 4.0] {
        let alpha = f64::sqrt(a2);
        let sql_ref = 0.5 * (1.0 - erf_series(std::f64::consts::SQRT_2 * alpha));
        let sql = sql_error(alpha).unwrap_or(f64::NAN);
        checks.push(Check::at_most(
            format!("sql a2={a2}"),
            (sql - sql_ref).abs(),
            tol.closed_form,
        ));
        let overlap = (-a2).exp().powi(4);
        let hel_ref = 0.5 * (1.0 - (1.0 - overlap).sqrt());
        checks.push(Check::at_most(
            format!("helstrom a2={a2}"),
            (helstrom_bound(alpha) - hel_ref).abs(),
            tol.closed_form,
        ));
        checks.push(Check::at_most(
            format!("kennedy a2={a2}"),
            (kennedy_error(alpha) - 0.5 * overlap).abs(),
            tol.closed_form,
        ));
    }
    checks
}

fn distribution_kernel(tol: &Tolerances) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let models = [
        DetectorModel::ideal(m(2)),
        DetectorModel::new(m(1), 0.7, 0.0, 1.0)?,
        DetectorModel::new(m(3), 1.0, 1e-3, 1.0)?,
        DetectorModel::new(m(4), 0.8, 1e-2, 0.998)?,
        DetectorModel::new(m(8), 0.5, 0.1, 0.9)?,
    ];

    let mut worst_pnr = 0.0f64;
    for &mu in &[0.0, 0.01, 0.3, 1.0, 2.5, 7.0, 15.0, 40.0] {
        for &k in &[1, 2, 3, 8, 32] {
            let d = pnr_pmf(mu, m(k))?;
            worst_pnr = worst_pnr.max((d.probs.iter().sum::<f64>() - 1.0).abs());
            if d.probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                worst_pnr = f64::INFINITY;
            }
        }
    }
    checks.push(Check::at_most("pnr_pmf normalization", worst_pnr, tol.pmf));

    let (mut worst_norm, mut worst_mirror) = (0.0f64, 0.0f64);
    for model in &models {
        for &zeta in &[-1.5, -0.4, 0.0, 0.6, 1.3] {
            for &z in &[0.0, 0.5, 1.2, 2.0] {
                let d = hl_difference_pmf(zeta, z, model)?;
                let mirror = hl_difference_pmf(-zeta, z, model)?;
                worst_norm = worst_norm.max((d.probs.iter().sum::<f64>() - 1.0).abs());
                for (delta, p) in d.deltas() {
                    worst_mirror = worst_mirror.max((p - mirror.get(-delta)).abs());
                }
            }
        }
    }
    checks.push(Check::at_most("hl pmf normalization", worst_norm, tol.pmf));
    checks.push(Check::at_most("hl pmf mirror symmetry", worst_mirror, tol.pmf));

    let big = DetectorModel::ideal(m(64));
    let mut worst_skellam = 0.0f64;
    for &zeta in &[-1.5, -0.5, 0.3, 0.7, 1.2] {
        for &z in &[0.1, 0.8, 1.3] {
            let means = branch_means(zeta, z, 1.0)?;
            let (mp, mm) = (means.mu_plus, means.mu_minus);
            debug_assert!(mp <= 4.0 && mm <= 4.0);
            let d = hl_difference_pmf(zeta, z, &big)?;
            for (delta, p) in d.deltas() {
                worst_skellam = worst_skellam.max((p - skellam_bessel(delta, mp, mm)).abs());
            }
        }
    }
    checks.push(Check::at_most(
        "skellam limit M=64",
        worst_skellam,
        tol.skellam,
    ));
    Ok(checks)
}

fn ideal_ordering(tol: &Tolerances, suite: Suite) -> Result<Vec<Check>> {
    let model = DetectorModel::ideal(m(2));
    let rows = log_grid(0.05, 4.0, suite.ordering_points())
        .into_par_iter()
        .map(|a2| -> Result<_> {
            let alpha = f64::sqrt(a2);
            let hffre = hffre_error(alpha, &FeedForwardConfig::hffre(1, model))?.p_err;
            let dffre = dffre_error(alpha, &FeedForwardConfig::dffre(1, model))?.p_err;
            let hynore = hynore_error(alpha, m(2))?.p_err;
            Ok((a2, helstrom_bound(alpha), hffre, dffre, sql_error(alpha)?, hynore))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for (a2, hel, hffre, dffre, sql, hynore) in rows {
        checks.push(Check::at_least(format!("hffre>=helstrom a2={a2:.4}"), hffre, hel));
        checks.push(Check::at_most(
            format!("hffre<=dffre a2={a2:.4}"),
            hffre,
            dffre + tol.ordering,
        ));
        checks.push(Check::at_most(format!("dffre<=sql a2={a2:.4}"), dffre, sql));
        checks.push(Check::at_most(
            format!("hffre<=hynore a2={a2:.4}"),
            hffre,
            hynore + tol.ordering,
        ));
    }
    Ok(checks)
}

fn asymptotic_convergence(tol: &Tolerances) -> Result<Vec<Check>> {
    let alpha = 2.0;
    let model = DetectorModel::ideal(m(2));
    let dffre = dffre_error(alpha, &FeedForwardConfig::dffre(1, model))?.p_err;
    let hffre = hffre_error(alpha, &FeedForwardConfig::hffre(1, model))?.p_err;
    let hynore = hynore_error(alpha, m(2))?.p_err;
    let kennedy = kennedy_error(alpha);
    Ok(vec![
        Check::at_most(
            "|dffre-kennedy|/kennedy a2=4",
            (dffre - kennedy).abs() / kennedy,
            tol.asymptotic_rel,
        ),
        Check::at_most("hffre<=hynore a2=4", hffre, hynore + tol.ordering),
    ])
}

fn copy_resolution_monotonicity() -> Result<Vec<Check>> {
    let alpha = f64::sqrt(0.1);
    let model = DetectorModel::ideal(m(2));
    let mut checks = Vec::new();
    for (label, hybrid) in [("dffre", false), ("hffre", true)] {
        let ratios = (1..=5)
            .into_par_iter()
            .map(|n| -> Result<f64> {
                let cfg = if hybrid {
                    FeedForwardConfig::hffre(n, model)
                } else {
                    FeedForwardConfig::dffre(n, model)
                };
                Ok(feedforward::evaluate(alpha, &cfg)?.ratio)
            })
            .collect::<Result<Vec<_>>>()?;
        for (n, w) in ratios.windows(2).enumerate() {
            checks.push(Check::below(
                format!("{label} R(N={})<R(N={}) a2=0.1", n + 2, n + 1),
                w[1],
                w[0],
            ));
        }
    }
    let alpha = f64::sqrt(2.0);
    let errs = [1, 2, 4]
        .into_par_iter()
        .map(|k| -> Result<f64> {
            Ok(hffre_error(alpha, &FeedForwardConfig::hffre(1, DetectorModel::ideal(m(k))))?.p_err)
        })
        .collect::<Result<Vec<_>>>()?;
    for (w, ks) in errs.windows(2).zip([(1, 2), (2, 4)]) {
        checks.push(Check::at_most(
            format!("hffre(M={})<=hffre(M={}) a2=2", ks.1, ks.0),
            w[1],
            w[0],
        ));
    }
    Ok(checks)
}

fn eval_both(alpha: f64, copies: usize, model: DetectorModel) -> Result<(EvalResult, EvalResult)> {
    let (d, h) = rayon::join(
        || dffre_error(alpha, &FeedForwardConfig::dffre(copies, model)),
        || hffre_error(alpha, &FeedForwardConfig::hffre(copies, model)),
    );
    Ok((d?, h?))
}

fn efficiency_regime() -> Result<Vec<Check>> {
    let model = DetectorModel::new(m(2), 0.7, 0.0, 1.0)?;
    let mut checks = Vec::new();
    let (d, h) = eval_both(f64::sqrt(0.1), 1, model)?;
    checks.push(Check::below("dffre gain<0 a2=0.1 N=1", d.gain, 0.0));
    checks.push(Check::below("hffre gain<0 a2=0.1 N=1", h.gain, 0.0));
    let (d, h) = eval_both(f64::sqrt(3.0), 1, model)?;
    checks.push(Check::above("dffre gain>0 a2=3 N=1", d.gain, 0.0));
    checks.push(Check::above("hffre gain>0 a2=3 N=1", h.gain, 0.0));
    let (d1, h1) = eval_both(1.0, 1, model)?;
    let (d10, h10) = eval_both(1.0, 10, model)?;
    checks.push(Check::above("dffre G(N=10)>G(N=1) a2=1", d10.gain, d1.gain));
    checks.push(Check::above("hffre G(N=10)>G(N=1) a2=1", h10.gain, h1.gain));
    Ok(checks)
}

/// Adds checks that `gains` takes both signs along the scan.
fn sign_change(checks: &mut Vec<Check>, label: &str, gains: &[f64]) {
    let hi = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push(Check::above(format!("{label} max gain>0"), hi, 0.0));
    checks.push(Check::below(format!("{label} min gain<0"), lo, 0.0));
}

fn gain_scan(alphas2: &[f64], cfg: FeedForwardConfig) -> Result<Vec<f64>> {
    alphas2
        .par_iter()
        .map(|&a2| Ok(feedforward::evaluate(f64::sqrt(a2), &cfg)?.gain))
        .collect()
}

fn dark_count_saturation(tol: &Tolerances, suite: Suite) -> Result<Vec<Check>> {
    let nu = 1e-3;
    let model = DetectorModel::new(m(2), 1.0, nu, 1.0)?;
    let cfg = FeedForwardConfig::dffre(1, model);
    let floor = saturation_dark(nu, 1, m(2))?;
    let p4 = dffre_error(2.0, &cfg)?.p_err;
    let p6 = dffre_error(f64::sqrt(6.0), &cfg)?.p_err;
    let mut checks = vec![
        Check::at_most("|dffre(4)-dffre(6)|", (p4 - p6).abs(), tol.plateau_abs),
        Check::at_most(
            "|dffre(4)-floor|/floor",
            (p4 - floor).abs() / floor,
            tol.dark_floor_rel,
        ),
        Check::at_most(
            "|dffre(6)-floor|/floor",
            (p6 - floor).abs() / floor,
            tol.dark_floor_rel,
        ),
    ];
    let grid = log_grid(0.06, 49.0, suite.sign_scan_points());
    sign_change(&mut checks, "dffre nu=1e-3", &gain_scan(&grid, cfg)?);
    Ok(checks)
}

fn visibility_regime(tol: &Tolerances, suite: Suite) -> Result<Vec<Check>> {
    let xi = 0.998;
    let model = DetectorModel::new(m(2), 1.0, 0.0, xi)?;
    let alpha = f64::sqrt(10.0);
    let (d, h) = eval_both(alpha, 1, model)?;
    let floor = saturation_visibility(xi, alpha, 1, m(2))?;
    let mut checks = vec![
        Check::below("hffre<dffre a2=10 N=1", h.p_err, d.p_err),
        Check::at_most(
            "|dffre-floor|/floor a2=10",
            (d.p_err - floor).abs() / floor,
            tol.visibility_floor_rel,
        ),
    ];
    let grid = log_grid(0.06, 49.0, suite.sign_scan_points());
    sign_change(
        &mut checks,
        "dffre xi=0.998 N=1",
        &gain_scan(&grid, FeedForwardConfig::dffre(1, model))?,
    );
    sign_change(
        &mut checks,
        "hffre xi=0.998 N=1",
        &gain_scan(&grid, FeedForwardConfig::hffre(1, model))?,
    );
    Ok(checks)
}

/// The twelve Monte Carlo points: every model at every energy, with receiver
/// and copy number cycling so each (receiver, N) pair meets every model.
pub fn monte_carlo_points() -> Result<Vec<(f64, FeedForwardConfig)>> {
    let models = [
        ("ideal", DetectorModel::ideal(m(2))),
        ("eta=0.7", DetectorModel::new(m(2), 0.7, 0.0, 1.0)?),
        ("nu=1e-3", DetectorModel::new(m(2), 1.0, 1e-3, 1.0)?),
        ("xi=0.998", DetectorModel::new(m(2), 1.0, 0.0, 0.998)?),
    ];
    let mut points = Vec::new();
    for (k, (_, model)) in models.iter().enumerate() {
        for (e, &a2) in [0.2, 1.0, 3.0].iter().enumerate() {
            let idx = 3 * k + e;
            let copies = if (idx / 2) % 2 == 0 { 1 } else { 3 };
            let cfg = if idx % 2 == 0 {
                FeedForwardConfig::dffre(copies, *model)
            } else {
                FeedForwardConfig::hffre(copies, *model)
            };
            points.push((a2, cfg));
        }
    }
    Ok(points)
}

fn monte_carlo_equivalence(tol: &Tolerances, suite: Suite, seed: u64) -> Result<Vec<Check>> {
    let trials = suite.mc_trials();
    let mut checks = Vec::new();
    for (i, (a2, cfg)) in monte_carlo_points()?.into_iter().enumerate() {
        let alpha = f64::sqrt(a2);
        let r = feedforward::evaluate(alpha, &cfg)?;
        let (p_hat, _) = estimate_error(alpha, &r.params, &cfg, trials, RngSpec::new(seed, i as u64))?;
        // binomial standard error of the hypothesized (analytic) probability;
        // the empirical one vanishes when no error is observed
        let se = (r.p_err * (1.0 - r.p_err) / trials as f64).sqrt();
        let mdl = &cfg.model;
        checks.push(Check::at_most(
            format!(
                "{:?} N={} a2={a2} eta={} nu={} xi={} |p_hat-p|/se",
                cfg.receiver, cfg.copies, mdl.eta, mdl.nu, mdl.xi
            ),
            (p_hat - r.p_err).abs() / se,
            tol.mc_sigmas,
        ));
    }
    Ok(checks)
}

fn appendix_consistency(tol: &Tolerances, seed: u64) -> Vec<Check> {
    let mut rng = RngSpec::new(seed, 0xA99E).rng();
    let model = DetectorModel::ideal(m(2));
    (0..5)
        .map(|i| {
            let alpha = rng.gen_range(0.1..2.0);
            let copies = rng.gen_range(1..=6usize);
            let betas: Vec<f64> = (0..copies).map(|_| rng.gen_range(0.0..2.0)).collect();
            let (p00, p11) = appendix_recursion(alpha, &betas);
            let trace = correct_trace(0.5, &betas, alpha, &model, 1);
            let worst = trace
                .iter()
                .enumerate()
                .map(|(j, t)| (0.5 * (p00[j] + p11[j]) - t).abs())
                .fold(0.0, f64::max);
            Check::at_most(
                format!("point {i}: alpha={alpha:.4} N={copies}"),
                worst,
                tol.identity,
            )
        })
        .collect()
}

fn reduction_identities(tol: &Tolerances) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let ideal = DetectorModel::ideal(m(2));

    // full transmission removes the HL stage
    let mut worst = 0.0f64;
    for &(alpha, copies) in &[(0.4, 1), (1.0, 2), (1.7, 5)] {
        let d = dffre_error(alpha, &FeedForwardConfig::dffre(copies, ideal))?;
        for &z in &[0.0, 1.0, 4.0] {
            let (betas, trace) =
                hffre_correct_at(alpha, 1.0, z, &FeedForwardConfig::hffre(copies, ideal), 1)?;
            for (a, b) in betas.iter().zip(&d.params.betas) {
                worst = worst.max((a - b).abs());
            }
            for (a, b) in trace.iter().zip(&d.per_step_correct) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    checks.push(Check::at_most("tau=1: hffre == dffre", worst, tol.identity));

    // a one-photon threshold is the on/off detector
    let mut worst = 0.0f64;
    for &x in &[0.0, 1e-6, 0.2, 1.0, 3.5, 12.0] {
        let (q0, q1) = q_thresh(x, 1)?;
        worst = worst.max((q0 - (-x).exp()).abs()).max((q1 - (1.0 - (-x).exp())).abs());
    }
    for &(p, beta, alpha, copies) in &[(0.5, 0.6, 0.4, 1), (0.8, 0.3, 1.1, 3), (0.93, 1.2, 2.0, 4)] {
        let a = alpha / f64::sqrt(copies as f64);
        let on_off = p * (-(beta - a) * (beta - a)).exp()
            + (1.0 - p) * (1.0 - (-(beta + a) * (beta + a)).exp());
        let step = step_correct_prob(p, beta, alpha, copies, &ideal, 1)?;
        worst = worst.max((step - on_off).abs());
    }
    checks.push(Check::at_most("n_th=1: thresholded == on/off", worst, tol.identity));

    // perfect imperfections reproduce the ideal paths
    let nominal = DetectorModel::new(m(2), 1.0, 0.0, 1.0)?;
    let mut worst = 0.0f64;
    for &(alpha, copies) in &[(0.5, 1), (1.2, 3)] {
        let pairs = [
            (
                dffre_error(alpha, &FeedForwardConfig::dffre(copies, ideal))?,
                dffre_error(alpha, &FeedForwardConfig::dffre(copies, nominal))?,
            ),
            (
                hffre_error(alpha, &FeedForwardConfig::hffre(copies, ideal))?,
                hffre_error(alpha, &FeedForwardConfig::hffre(copies, nominal))?,
            ),
        ];
        for (a, b) in &pairs {
            worst = worst.max((a.p_err - b.p_err).abs());
            for (x, y) in a.per_step_correct.iter().zip(&b.per_step_correct) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    checks.push(Check::at_most("eta=1 nu=0 xi=1: imperfect == ideal", worst, tol.identity));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_series_values() {
        assert_eq!(erf_series(0.0), 0.0);
        assert!((erf_series(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erf_series(2.0) - 0.995_322_265_018_952_7).abs() < 1e-15);
    }

    #[test]
    fn bessel_skellam_normalizes() {
        let s: f64 = (-60..=60).map(|k| skellam_bessel(k, 1.3, 0.4)).sum();
        assert!((s - 1.0).abs() < 1e-13);
        // b -> 0 approaches a Poisson law
        let p = skellam_bessel(2, 1.5, 1e-12);
        assert!((p - 1.5f64.powi(2) / 2.0 * (-1.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn quick_criteria_pass() {
        let s = SuiteSettings::new(Suite::Fast, 1);
        for id in [1, 2, 10, 11] {
            let r = run_criterion(id, &s).unwrap();
            assert!(r.passed(), "{}", r.summary());
        }
    }

    #[test]
    fn zero_tolerance_is_reported() {
        let mut s = SuiteSettings::new(Suite::Fast, 1);
        s.tolerances.set("asymptotic_rel", 0.0).unwrap();
        let r = run_criterion(4, &s).unwrap();
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
        assert!(r.summary().contains("FAIL"));
    }

    #[test]
    fn tolerance_names_round_trip() {
        let mut t = Tolerances::default();
        for name in Tolerances::NAMES {
            t.set(name, 0.5).unwrap();
        }
        assert!(t.set("bogus", 1.0).is_err());
        assert!(t.set("pmf", -1.0).is_err());
        assert!(t.set("pmf", f64::NAN).is_err());
        assert!(run_criterion(12, &SuiteSettings::new(Suite::Fast, 0)).is_err());
    }

    #[test]
    fn monte_carlo_grid_covers_every_combination() {
        let pts = monte_carlo_points().unwrap();
        assert_eq!(pts.len(), 12);
        let mut combos = std::collections::HashSet::new();
        for (_, cfg) in &pts {
            combos.insert((cfg.receiver, cfg.copies));
        }
        assert_eq!(combos.len(), 4);
    }
}
