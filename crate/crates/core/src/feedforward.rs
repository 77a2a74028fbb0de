//! Displacement feed-forward (DFFRE) and hybrid feed-forward (HFFRE)
//! receivers.
//!
//! The signal is split into `N` equal copies. Each copy is displaced by
//! `±beta_j` and counted; the sign is flipped whenever the previous count
//! reaches the click threshold. The probability of a correct decision after
//! `j` copies obeys the scalar recursion
//!
//! ```text
//! P(j) = max_beta { P(j-1) Q0(rate_minus) + (1 - P(j-1)) Q1(rate_plus) }
//! ```
//!
//! where `Q0`/`Q1` are the below/above-threshold probabilities and the rates
//! belong to the nulled and the doubled copy. The DFFRE starts from
//! `P(0) = 1/2`. The HFFRE first spends a fraction `1 - tau` of the signal on
//! a homodyne-like (HL) measurement that fixes the first sign, so its
//! recursion starts from the HL correct-sign probability and runs on the
//! transmitted amplitude `sqrt(tau) alpha`.
//!
//! Displacements are optimized greedily, one copy at a time. `(tau, z)` and
//! the shared threshold `n_th` are optimized in outer loops.

use serde::{Deserialize, Serialize};

use crate::baselines::{self, helstrom_bound, hl_wrong_sign, HynoreParams};
use crate::error::{check_domain, Error, Result};
use crate::optimizer::{maximize_grid, maximize_scalar, scan_discrete, ScalarSearchSpec};
use crate::photostatistics::{mixed_intensity, q_thresh_unchecked, DetectorModel, PnrResolution};

/// Coarse points per axis of the `(tau, z)` grid.
pub const GRID_POINTS: usize = 41;
/// Target resolution of the `(tau, z)` refinement.
pub const GRID_TOL: f64 = 1e-5;
/// Coarse points of the per-copy displacement scan.
pub const BETA_POINTS: usize = 64;
/// Golden-section tolerance on each displacement amplitude.
pub const BETA_TOL: f64 = 1e-7;
/// Extra room above the nulling displacement in the `beta` search.
pub const BETA_MARGIN: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Receiver {
    Dffre,
    Hffre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardConfig {
    /// Number of copies `N`.
    pub copies: usize,
    pub model: DetectorModel,
    pub receiver: Receiver,
}

impl FeedForwardConfig {
    pub fn dffre(copies: usize, model: DetectorModel) -> Self {
        Self {
            copies,
            model,
            receiver: Receiver::Dffre,
        }
    }

    pub fn hffre(copies: usize, model: DetectorModel) -> Self {
        Self {
            copies,
            model,
            receiver: Receiver::Hffre,
        }
    }

    pub fn resolution(&self) -> PnrResolution {
        self.model.m
    }

    fn validate(&self, expected: Receiver) -> Result<()> {
        if self.copies == 0 {
            return Err(Error::Domain {
                name: "N",
                value: 0.0,
                expected: "N >= 1",
            });
        }
        if self.receiver != expected {
            return Err(Error::Config(format!(
                "expected a {expected:?} configuration, got {:?}",
                self.receiver
            )));
        }
        Ok(())
    }

    /// Thresholds worth scanning: on/off suffices unless dark counts or
    /// imperfect visibility are present.
    fn thresholds(&self) -> std::ops::RangeInclusive<u32> {
        if self.model.needs_threshold() {
            1..=self.model.m.get()
        } else {
            1..=1
        }
    }
}

/// Free parameters of one receiver evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverParams {
    pub tau: f64,
    pub z: f64,
    pub betas: Vec<f64>,
    pub n_th: u32,
}

impl ReceiverParams {
    /// DFFRE parameters: full transmission, no HL stage, on/off clicks.
    pub fn displacement(betas: Vec<f64>) -> Self {
        Self {
            tau: 1.0,
            z: 0.0,
            betas,
            n_th: 1,
        }
    }
}

/// Incident mean photon numbers of the nulled (`minus`) and doubled (`plus`)
/// copy for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRates {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl StepRates {
    /// `a^2/N + beta^2 ± 2 xi beta a / sqrt(N)`; `|beta ± a/sqrt(N)|^2` at `xi = 1`.
    pub fn new(beta: f64, amplitude: f64, copies: usize, xi: f64) -> Self {
        let per_copy = amplitude / (copies as f64).sqrt();
        Self {
            lambda_plus: mixed_intensity(beta, per_copy, xi),
            lambda_minus: mixed_intensity(beta, -per_copy, xi),
        }
    }

    /// Rates seen by the detector, `eta * lambda + nu`.
    pub fn detected(&self, model: &DetectorModel) -> Self {
        Self {
            lambda_plus: model.detected_rate(self.lambda_plus),
            lambda_minus: model.detected_rate(self.lambda_minus),
        }
    }
}

/// Outcome of one receiver evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub p_err: f64,
    pub params: ReceiverParams,
    /// Correct-decision probability after `0..=N` copies.
    pub per_step_correct: Vec<f64>,
    /// `p_err / P_Helstrom`
    pub ratio: f64,
    /// `1 - p_err / P_SQL`
    pub gain: f64,
}

impl EvalResult {
    pub(crate) fn new(
        alpha: f64,
        p_err: f64,
        params: ReceiverParams,
        per_step_correct: Vec<f64>,
    ) -> Self {
        Self {
            p_err,
            ratio: ratio(p_err, alpha),
            gain: gain(p_err, alpha),
            params,
            per_step_correct,
        }
    }

    /// `alpha = 0`: nothing to discriminate.
    pub(crate) fn degenerate(copies: usize) -> Self {
        Self::new(
            0.0,
            0.5,
            ReceiverParams::displacement(vec![0.0; copies]),
            vec![0.5; copies + 1],
        )
    }
}

#[inline]
fn step_unchecked(
    p_prev: f64,
    beta: f64,
    amplitude: f64,
    copies: usize,
    model: &DetectorModel,
    n_th: u32,
) -> f64 {
    let rates = StepRates::new(beta, amplitude, copies, model.xi).detected(model);
    let (stay, _) = q_thresh_unchecked(rates.lambda_minus, n_th);
    let (_, flip) = q_thresh_unchecked(rates.lambda_plus, n_th);
    p_prev * stay + (1.0 - p_prev) * flip
}

/// Error probability after one more copy, from the previous error
/// probability: a spurious click on the nulled copy or a missed click on the
/// doubled one. Every term is non-negative, so tiny errors keep full relative
/// precision.
#[inline]
fn step_error(
    e_prev: f64,
    beta: f64,
    amplitude: f64,
    copies: usize,
    model: &DetectorModel,
    n_th: u32,
) -> f64 {
    let rates = StepRates::new(beta, amplitude, copies, model.xi).detected(model);
    let (_, spurious) = q_thresh_unchecked(rates.lambda_minus, n_th);
    let (missed, _) = q_thresh_unchecked(rates.lambda_plus, n_th);
    (1.0 - e_prev) * spurious + e_prev * missed
}

/// Correct-decision probability after one more copy, given the previous one.
///
/// `amplitude` is the signal amplitude feeding the copies: `alpha` for the
/// DFFRE, `sqrt(tau) alpha` for the HFFRE.
pub fn step_correct_prob(
    p_prev: f64,
    beta: f64,
    amplitude: f64,
    copies: usize,
    model: &DetectorModel,
    n_th: u32,
) -> Result<f64> {
    check_domain("p_prev", p_prev, (0.0..=1.0).contains(&p_prev), "0 <= p <= 1")?;
    check_domain("beta", beta, beta >= 0.0, "beta >= 0")?;
    check_domain("amplitude", amplitude, amplitude >= 0.0, "amplitude >= 0")?;
    if copies == 0 {
        return Err(Error::Domain {
            name: "N",
            value: 0.0,
            expected: "N >= 1",
        });
    }
    if n_th == 0 || n_th > model.m.get() {
        return Err(Error::Domain {
            name: "n_th",
            value: n_th as f64,
            expected: "1 <= n_th <= M",
        });
    }
    Ok(step_unchecked(p_prev, beta, amplitude, copies, model, n_th))
}

/// Runs the recursion from `p0` with fixed displacements, one per copy.
/// Returns the trace `P(0..=N)`.
pub fn correct_trace(
    p0: f64,
    betas: &[f64],
    amplitude: f64,
    model: &DetectorModel,
    n_th: u32,
) -> Vec<f64> {
    let copies = betas.len();
    let mut trace = Vec::with_capacity(copies + 1);
    trace.push(p0);
    let mut e = 1.0 - p0;
    for &beta in betas {
        e = step_error(e, beta, amplitude, copies, model, n_th);
        trace.push(1.0 - e);
    }
    trace
}

struct Chain {
    betas: Vec<f64>,
    /// Error probability after `0..=N` copies.
    errors: Vec<f64>,
}

impl Chain {
    fn p_err(&self) -> f64 {
        *self.errors.last().unwrap()
    }

    fn trace(&self) -> Vec<f64> {
        self.errors.iter().map(|e| 1.0 - e).collect()
    }
}

/// Greedy per-copy displacement optimization starting from error `e0`.
fn optimize_chain(
    e0: f64,
    amplitude: f64,
    copies: usize,
    model: &DetectorModel,
    n_th: u32,
) -> Result<Chain> {
    let hi = amplitude / (copies as f64).sqrt() + BETA_MARGIN;
    let spec = ScalarSearchSpec::new(0.0, hi, BETA_POINTS, BETA_TOL)?;
    let mut betas = Vec::with_capacity(copies);
    let mut errors = Vec::with_capacity(copies + 1);
    errors.push(e0);
    let mut e = e0;
    let nulling = amplitude / (copies as f64).sqrt();
    for _ in 0..copies {
        let (mut beta, neg) = maximize_scalar(
            |b| -step_error(e, b, amplitude, copies, model, n_th),
            &spec,
        )?;
        let mut next = -neg;
        // the exact nulling point is always a candidate; at high energy the
        // optimum sits closer to it than any search tolerance
        let nulled = step_error(e, nulling, amplitude, copies, model, n_th);
        if nulled < next || (nulled == next && nulling < beta) {
            beta = nulling;
            next = nulled;
        }
        betas.push(beta);
        errors.push(next);
        e = next;
    }
    Ok(Chain { betas, errors })
}

/// Probability that the HL pre-measurement picks the wrong first sign.
fn hl_initial_error(alpha: f64, tau: f64, z: f64, model: &DetectorModel) -> f64 {
    hl_wrong_sign(alpha, &HynoreParams { tau, z }, model)
}

/// DFFRE error probability with per-copy displacements (and, under dark
/// counts or reduced visibility, the click threshold) optimized.
pub fn dffre_error(alpha: f64, cfg: &FeedForwardConfig) -> Result<EvalResult> {
    cfg.validate(Receiver::Dffre)?;
    check_domain("alpha", alpha, alpha >= 0.0, "alpha >= 0")?;
    if alpha == 0.0 {
        return Ok(EvalResult::degenerate(cfg.copies));
    }
    let mut chains = Vec::new();
    let (n_th, _) = scan_discrete(
        |n_th| -> Result<f64> {
            let chain = optimize_chain(0.5, alpha, cfg.copies, &cfg.model, n_th)?;
            let score = -chain.p_err();
            chains.push(chain);
            Ok(score)
        },
        cfg.thresholds(),
    )?;
    let chain = chains.swap_remove((n_th - 1) as usize);
    Ok(EvalResult::new(
        alpha,
        chain.p_err(),
        ReceiverParams {
            tau: 1.0,
            z: 0.0,
            betas: chain.betas.clone(),
            n_th,
        },
        chain.trace(),
    ))
}

fn hffre_chain(alpha: f64, tau: f64, z: f64, cfg: &FeedForwardConfig, n_th: u32) -> Result<Chain> {
    let e0 = hl_initial_error(alpha, tau, z, &cfg.model);
    optimize_chain(e0, tau.sqrt() * alpha, cfg.copies, &cfg.model, n_th)
}

/// HFFRE at fixed `(tau, z, n_th)` after greedy displacement optimization.
/// Returns the displacements and the correct-decision trace.
pub fn hffre_correct_at(
    alpha: f64,
    tau: f64,
    z: f64,
    cfg: &FeedForwardConfig,
    n_th: u32,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let chain = hffre_chain(alpha, tau, z, cfg, n_th)?;
    let trace = chain.trace();
    Ok((chain.betas, trace))
}

/// HFFRE error probability, minimized over `(tau, z)`, the displacements and
/// (when relevant) the click threshold. `tau = 1` is always evaluated, so the
/// result never exceeds the DFFRE value.
pub fn hffre_error(alpha: f64, cfg: &FeedForwardConfig) -> Result<EvalResult> {
    cfg.validate(Receiver::Hffre)?;
    check_domain("alpha", alpha, alpha >= 0.0, "alpha >= 0")?;
    if alpha == 0.0 {
        return Ok(EvalResult::degenerate(cfg.copies));
    }
    let spec = baselines::tau_z_search(alpha, GRID_POINTS, GRID_TOL);
    let mut optima = Vec::new();
    let (n_th, _) = scan_discrete(
        |n_th| -> Result<f64> {
            let opt = maximize_grid(
                |x| {
                    hffre_chain(alpha, x[0], x[1], cfg, n_th)
                        .map(|c| -c.p_err())
                        .unwrap_or(f64::NAN)
                },
                &spec,
            )?;
            let v = opt.value;
            optima.push(opt);
            Ok(v)
        },
        cfg.thresholds(),
    )?;
    let opt = optima.swap_remove((n_th - 1) as usize);
    let (tau, z) = (opt.x[0], opt.x[1]);
    let chain = hffre_chain(alpha, tau, z, cfg, n_th)?;
    Ok(EvalResult::new(
        alpha,
        chain.p_err(),
        ReceiverParams {
            tau,
            z,
            betas: chain.betas.clone(),
            n_th,
        },
        chain.trace(),
    ))
}

/// Dispatches on `cfg.receiver`.
pub fn evaluate(alpha: f64, cfg: &FeedForwardConfig) -> Result<EvalResult> {
    match cfg.receiver {
        Receiver::Dffre => dffre_error(alpha, cfg),
        Receiver::Hffre => hffre_error(alpha, cfg),
    }
}

/// Error floor of `N` copies when every copy is nulled and only spurious
/// clicks of the vacuum copy (probability `q1`) cause mistakes:
/// `E(j) = (1 - E(j-1)) q1`, `E(0) = 1/2`, in closed form
/// `1 - { c^N / 2 + (1 - c^N) / (1 - c) }` with `c = q0 - 1 = -q1`.
fn saturation_floor(q1: f64, copies: usize) -> f64 {
    let c = -q1;
    // 1 - c^N/2 - sum_{i<N} c^i, with the i = 0 term cancelling the leading 1
    let mut sum = 0.0;
    let mut power = 1.0;
    for _ in 1..copies {
        power *= c;
        sum += power;
    }
    power *= c;
    -0.5 * power - sum
}

/// High-energy saturation of the DFFRE error under dark counts `nu`, with the
/// threshold at `M`.
pub fn saturation_dark(nu: f64, copies: usize, m: PnrResolution) -> Result<f64> {
    check_domain("nu", nu, nu >= 0.0, "nu >= 0")?;
    if copies == 0 {
        return Err(Error::Domain {
            name: "N",
            value: 0.0,
            expected: "N >= 1",
        });
    }
    let (_, q1) = q_thresh_unchecked(nu, m.get());
    Ok(saturation_floor(q1, copies))
}

/// High-energy DFFRE error under visibility `xi`: the residual rate of an
/// imperfectly nulled copy is `g = 2 alpha^2 (1 - xi) / N`.
pub fn saturation_visibility(xi: f64, alpha: f64, copies: usize, m: PnrResolution) -> Result<f64> {
    check_domain("xi", xi, xi > 0.0 && xi <= 1.0, "0 < xi <= 1")?;
    check_domain("alpha", alpha, alpha >= 0.0, "alpha >= 0")?;
    if copies == 0 {
        return Err(Error::Domain {
            name: "N",
            value: 0.0,
            expected: "N >= 1",
        });
    }
    let g = 2.0 * alpha * alpha * (1.0 - xi) / copies as f64;
    let (_, q1) = q_thresh_unchecked(g, m.get());
    Ok(saturation_floor(q1, copies))
}

/// Conditional recursion of the switch model with ideal on/off detection:
/// `p00[j]` is the probability of reading "0" after `j` copies when "0" was
/// sent, `p11[j]` likewise for "1". The switch starts at "0", so
/// `p00[0] = 1`, `p11[0] = 0`.
pub fn appendix_recursion(alpha: f64, betas: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let copies = betas.len();
    let per_copy = alpha / (copies.max(1) as f64).sqrt();
    let mut p00 = vec![1.0];
    let mut p11 = vec![0.0];
    for (j, &beta) in betas.iter().enumerate() {
        // "0" sent (-alpha): switch at 0 applies +beta -> |beta - a|^2;
        // switch at 1 applies -beta -> |beta + a|^2 and a click corrects it.
        let nulled = (beta - per_copy) * (beta - per_copy);
        let doubled = (beta + per_copy) * (beta + per_copy);
        let off_nulled = (-nulled).exp();
        let on_doubled = 1.0 - (-doubled).exp();
        p00.push(p00[j] * off_nulled + (1.0 - p00[j]) * on_doubled);
        // "1" sent (+alpha): switch at 1 nulls, switch at 0 doubles.
        p11.push(p11[j] * off_nulled + (1.0 - p11[j]) * on_doubled);
    }
    (p00, p11)
}

/// `p_err / P_Helstrom`.
pub fn ratio(p_err: f64, alpha: f64) -> f64 {
    p_err / helstrom_bound(alpha)
}

/// `1 - p_err / P_SQL`; positive exactly when the standard quantum limit is
/// beaten.
pub fn gain(p_err: f64, alpha: f64) -> f64 {
    let sql = baselines::sql_error(alpha.abs()).unwrap_or(f64::NAN);
    1.0 - p_err / sql
}
