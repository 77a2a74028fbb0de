//! Event-level Monte Carlo of the physical receivers.
//!
//! Each trial draws a hypothesis, samples actual detector counts and runs the
//! switch logic shot by shot, so it shares no code with the analytic
//! recursion beyond the Poisson rate model. Imperfections enter at the rate
//! level exactly as in the analytic model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};
use crate::feedforward::{FeedForwardConfig, Receiver, ReceiverParams};
use crate::photostatistics::PnrResolution;

/// Minimum number of trials accepted by [`estimate_error`].
pub const MIN_TRIALS: u64 = 10_000;
const BATCH: u64 = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Generator for this `(seed, stream_id)` pair.
    pub fn rng(&self) -> ChaCha8Rng {
        self.derived(0)
    }

    /// Independent generator for sub-stream `index` (one per trial batch).
    pub fn derived(&self, index: u64) -> ChaCha8Rng {
        let mix = self
            .stream_id
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .rotate_left(29);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ mix);
        rng.set_stream(index);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// Sent state: 0 for `|-alpha>`, 1 for `|+alpha>`.
    pub hypothesis: u8,
    /// HL difference outcome (HFFRE only).
    pub hl_delta: Option<i32>,
    pub counts: Vec<u32>,
    /// Switch position after each copy.
    pub switch_states: Vec<u8>,
    pub decision: u8,
    pub correct: bool,
}

/// Samples a PNR(M) outcome: a Poisson count with mean `mu`, capped at `M`.
pub fn sample_pnr<R: Rng + ?Sized>(rng: &mut R, mu: f64, m: PnrResolution) -> u32 {
    let cap = m.get();
    if mu <= 0.0 {
        return 0;
    }
    if mu < 10.0 {
        // sequential inversion; stopping at the cap lumps the tail into M
        let u: f64 = rng.gen();
        let mut p = (-mu).exp();
        let mut cdf = p;
        let mut n = 0;
        while u >= cdf && n < cap {
            n += 1;
            p *= mu / n as f64;
            cdf += p;
        }
        n
    } else {
        let draw: f64 = Poisson::new(mu).expect("positive finite mean").sample(rng);
        (draw as u64).min(cap as u64) as u32
    }
}

fn validate(alpha: f64, params: &ReceiverParams, cfg: &FeedForwardConfig) -> Result<()> {
    check_domain("alpha", alpha, alpha >= 0.0, "alpha >= 0")?;
    check_domain("tau", params.tau, (0.0..=1.0).contains(&params.tau), "0 <= tau <= 1")?;
    check_domain("z", params.z, params.z >= 0.0, "z >= 0")?;
    if params.betas.len() != cfg.copies || cfg.copies == 0 {
        return Err(Error::Config(format!(
            "{} displacements for {} copies",
            params.betas.len(),
            cfg.copies
        )));
    }
    if params.n_th == 0 || params.n_th > cfg.model.m.get() {
        return Err(Error::Domain {
            name: "n_th",
            value: params.n_th as f64,
            expected: "1 <= n_th <= M",
        });
    }
    Ok(())
}

/// Mean photon number after mixing amplitude `x` with `y` at visibility `xi`.
fn intensity(x: f64, y: f64, xi: f64) -> f64 {
    (x * x + y * y + 2.0 * xi * x * y).max(0.0)
}

fn run_trial<R: Rng + ?Sized>(
    alpha: f64,
    params: &ReceiverParams,
    cfg: &FeedForwardConfig,
    rng: &mut R,
) -> TrajectoryRecord {
    let model = &cfg.model;
    let m = model.m;
    let hypothesis: u8 = rng.gen_range(0..=1);
    let signed_alpha = if hypothesis == 0 { -alpha } else { alpha };

    let (mut switch, hl_delta, transmitted) = match cfg.receiver {
        Receiver::Dffre => (0u8, None, signed_alpha),
        Receiver::Hffre => {
            let reflected = -(1.0 - params.tau).sqrt() * signed_alpha;
            // balanced splitter: each output carries (reflected ± z)/sqrt(2)
            let xi = cfg.model.xi;
            let n = sample_pnr(rng, model.detected_rate(0.5 * intensity(reflected, params.z, xi)), m);
            let k = sample_pnr(rng, model.detected_rate(0.5 * intensity(reflected, -params.z, xi)), m);
            let delta = n as i32 - k as i32;
            // Δ >= 0 favours "0" and selects +beta first
            let s0 = if delta >= 0 { 0 } else { 1 };
            (s0, Some(delta), params.tau.sqrt() * signed_alpha)
        }
    };
    let per_copy = transmitted / (cfg.copies as f64).sqrt();

    let mut counts = Vec::with_capacity(cfg.copies);
    let mut switch_states = Vec::with_capacity(cfg.copies);
    for &beta in &params.betas {
        let displacement = if switch == 0 { beta } else { -beta };
        let rate = model.detected_rate(intensity(per_copy, displacement, model.xi));
        let count = sample_pnr(rng, rate, m);
        if count >= params.n_th {
            switch ^= 1;
        }
        counts.push(count);
        switch_states.push(switch);
    }
    TrajectoryRecord {
        hypothesis,
        hl_delta,
        counts,
        switch_states,
        decision: switch,
        correct: switch == hypothesis,
    }
}

/// Simulates one shot of the receiver described by `cfg` with concrete
/// parameters.
pub fn simulate_trial<R: Rng + ?Sized>(
    alpha: f64,
    params: &ReceiverParams,
    cfg: &FeedForwardConfig,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    validate(alpha, params, cfg)?;
    Ok(run_trial(alpha, params, cfg, rng))
}

/// Monte Carlo error estimate and its binomial standard error.
///
/// Trials run in fixed-size batches, each with its own derived stream, and
/// the counts are reduced in batch order; the estimate depends only on
/// `rng_spec`, never on the thread count.
pub fn estimate_error(
    alpha: f64,
    params: &ReceiverParams,
    cfg: &FeedForwardConfig,
    trials: u64,
    rng_spec: RngSpec,
) -> Result<(f64, f64)> {
    if trials < MIN_TRIALS {
        return Err(Error::TooFewTrials {
            min: MIN_TRIALS,
            got: trials,
        });
    }
    validate(alpha, params, cfg)?;
    let batches = trials.div_ceil(BATCH);
    let errors: Vec<u64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_spec.derived(b);
            let n = BATCH.min(trials - b * BATCH);
            (0..n)
                .filter(|_| !run_trial(alpha, params, cfg, &mut rng).correct)
                .count() as u64
        })
        .collect();
    let total: u64 = errors.iter().sum();
    let p_hat = total as f64 / trials as f64;
    let std_err = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
    Ok((p_hat, std_err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedforward::{dffre_error, hffre_error};
    use crate::photostatistics::{pnr_pmf, DetectorModel};

    fn m(k: u32) -> PnrResolution {
        PnrResolution::new(k).unwrap()
    }

    #[test]
    fn vacuum_never_clicks() {
        let mut rng = RngSpec::new(1, 0).rng();
        assert!((0..1000).all(|_| sample_pnr(&mut rng, 0.0, m(3)) == 0));
    }

    #[test]
    fn bright_input_saturates() {
        let mut rng = RngSpec::new(2, 0).rng();
        assert!((0..100_000).all(|_| sample_pnr(&mut rng, 50.0, m(2)) == 2));
    }

    #[test]
    fn sampled_counts_follow_truncated_poisson() {
        let mut rng = RngSpec::new(3, 0).rng();
        let trials = 1_000_000;
        let mut hist = [0u64; 3];
        for _ in 0..trials {
            hist[sample_pnr(&mut rng, 1.0, m(2)) as usize] += 1;
        }
        let pmf = pnr_pmf(1.0, m(2)).unwrap();
        for (h, p) in hist.iter().zip(&pmf.probs) {
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((*h as f64 / trials as f64 - p).abs() <= 4.0 * sigma);
        }
    }

    #[test]
    fn large_alpha_nulling_is_always_right() {
        let alpha = 4.0;
        let cfg = FeedForwardConfig::dffre(2, DetectorModel::ideal(m(2)));
        let params = ReceiverParams::displacement(vec![alpha / 2f64.sqrt(); 2]);
        let mut rng = RngSpec::new(4, 0).rng();
        for _ in 0..10_000 {
            let rec = simulate_trial(alpha, &params, &cfg, &mut rng).unwrap();
            assert!(rec.correct);
            assert_eq!(rec.counts.len(), 2);
            assert_eq!(rec.decision, *rec.switch_states.last().unwrap());
            assert!(rec.hl_delta.is_none());
        }
    }

    #[test]
    fn no_signal_is_a_coin_flip() {
        let cfg = FeedForwardConfig::dffre(1, DetectorModel::ideal(m(2)));
        let params = ReceiverParams::displacement(vec![0.0]);
        let (p, se) = estimate_error(0.0, &params, &cfg, 200_000, RngSpec::new(5, 0)).unwrap();
        assert!((p - 0.5).abs() <= 4.0 * se);
    }

    #[test]
    fn dffre_two_copies_matches_recursion() {
        let alpha = 0.5f64.sqrt();
        let cfg = FeedForwardConfig::dffre(2, DetectorModel::ideal(m(2)));
        let r = dffre_error(alpha, &cfg).unwrap();
        let (p, se) = estimate_error(alpha, &r.params, &cfg, 1_000_000, RngSpec::new(6, 0)).unwrap();
        assert!((p - r.p_err).abs() <= 4.0 * se, "{p} vs {}", r.p_err);
    }

    #[test]
    fn hffre_matches_recursion() {
        let cfg = FeedForwardConfig::hffre(1, DetectorModel::ideal(m(2)));
        let r = hffre_error(1.0, &cfg).unwrap();
        let (p, se) = estimate_error(1.0, &r.params, &cfg, 1_000_000, RngSpec::new(7, 0)).unwrap();
        assert!((p - r.p_err).abs() <= 4.0 * se, "{p} vs {}", r.p_err);
    }

    #[test]
    fn estimates_are_reproducible_and_scale() {
        let cfg = FeedForwardConfig::dffre(1, DetectorModel::ideal(m(2)));
        let params = ReceiverParams::displacement(vec![0.3]);
        let spec = RngSpec::new(8, 1);
        let a = estimate_error(0.4, &params, &cfg, 100_000, spec).unwrap();
        let b = estimate_error(0.4, &params, &cfg, 100_000, spec).unwrap();
        assert_eq!(a, b);
        let c = estimate_error(0.4, &params, &cfg, 400_000, spec).unwrap();
        let ratio = a.1 / c.1;
        assert!((ratio - 2.0).abs() / 2.0 < 0.05, "ratio {ratio}");
    }

    #[test]
    fn thread_count_does_not_matter() {
        let cfg = FeedForwardConfig::hffre(2, DetectorModel::ideal(m(2)));
        let params = ReceiverParams {
            tau: 0.7,
            z: 1.1,
            betas: vec![0.5, 0.6],
            n_th: 1,
        };
        let spec = RngSpec::new(9, 3);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = single.install(|| estimate_error(0.8, &params, &cfg, 100_000, spec).unwrap());
        let b = estimate_error(0.8, &params, &cfg, 100_000, spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_requests() {
        let cfg = FeedForwardConfig::dffre(2, DetectorModel::ideal(m(2)));
        let params = ReceiverParams::displacement(vec![0.1]);
        assert!(matches!(
            estimate_error(1.0, &params, &cfg, 100, RngSpec::new(0, 0)),
            Err(Error::TooFewTrials { .. })
        ));
        assert!(estimate_error(1.0, &params, &cfg, 20_000, RngSpec::new(0, 0)).is_err());
        let mut rng = RngSpec::new(0, 0).rng();
        let bad = ReceiverParams { n_th: 3, ..ReceiverParams::displacement(vec![0.1, 0.1]) };
        assert!(simulate_trial(1.0, &bad, &cfg, &mut rng).is_err());
    }
}
