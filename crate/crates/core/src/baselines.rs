//! Benchmark receivers: standard quantum limit, Helstrom bound, Kennedy
//! receiver, optimized-displacement receiver and the hybrid near-optimum
//! receiver (HYNORE).
//!
//! Hypotheses are `|-alpha>` ("0") and `|+alpha>` ("1") with equal priors.

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Result};
use crate::feedforward::{self, EvalResult, FeedForwardConfig, ReceiverParams};
use crate::optimizer::{maximize_grid, Axis, GridSearchSpec};
use crate::photostatistics::{hl_difference_pmf, DetectorModel, PnrResolution};

/// Beam-splitter transmissivity and HL local-oscillator amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HynoreParams {
    pub tau: f64,
    pub z: f64,
}

impl HynoreParams {
    /// Amplitude reflected toward the HL stage under hypothesis `k`:
    /// `-sqrt(1 - tau) * alpha_k` with `alpha_0 = -alpha`, `alpha_1 = alpha`.
    pub fn reflected_amplitude(&self, alpha: f64, k: u8) -> f64 {
        let alpha_k = if k == 0 { -alpha } else { alpha };
        -(1.0 - self.tau).sqrt() * alpha_k
    }

    pub fn transmitted_amplitude(&self, alpha: f64) -> f64 {
        self.tau.sqrt() * alpha
    }
}

/// Homodyne error probability, `erfc(sqrt(2) alpha) / 2`.
pub fn sql_error(alpha: f64) -> Result<f64> {
    check_domain("alpha", alpha, alpha >= 0.0, "alpha >= 0")?;
    Ok(0.5 * libm::erfc(std::f64::consts::SQRT_2 * alpha))
}

/// Minimum error probability allowed by quantum mechanics,
/// `(1 - sqrt(1 - e^{-4 alpha^2})) / 2`.
pub fn helstrom_bound(alpha: f64) -> f64 {
    let overlap = (-4.0 * alpha * alpha).exp();
    // rationalized to avoid cancellation at high energy
    0.5 * overlap / (1.0 + (1.0 - overlap).sqrt())
}

/// Nulling displacement followed by on/off detection.
pub fn kennedy_error(alpha: f64) -> f64 {
    0.5 * (-4.0 * alpha * alpha).exp()
}

/// Single-shot displacement receiver with the displacement amplitude
/// optimized. Identical to the one-copy DFFRE.
pub fn optimized_displacement_error(alpha: f64, model: &DetectorModel) -> Result<EvalResult> {
    feedforward::dffre_error(alpha, &FeedForwardConfig::dffre(1, *model))
}

/// Probability that the HL sign rule (`Δ >= 0` infers "0") picks the wrong
/// hypothesis, `[P(Δ < 0 | "0") + P(Δ >= 0 | "1")] / 2`.
///
/// By mirror symmetry `P(Δ >= 0 | "1") = P(Δ <= 0 | "0")`, so one distribution
/// covers both hypotheses. With no reflected light the outcome carries no
/// information and the result is exactly one half.
pub(crate) fn hl_wrong_sign(alpha: f64, params: &HynoreParams, model: &DetectorModel) -> f64 {
    let zeta = params.reflected_amplitude(alpha, 0);
    if zeta == 0.0 {
        return 0.5;
    }
    let dist = match hl_difference_pmf(zeta, params.z, model) {
        Ok(d) => d,
        Err(_) => return f64::NAN,
    };
    dist.prob_negative() + 0.5 * dist.get(0)
}

/// HYNORE error probability at fixed `(tau, z)`:
/// `e^{-4 tau alpha^2}/2 * [P(Δ<0 | "0") + P(Δ>=0 | "1")]`.
pub fn hynore_error_at(alpha: f64, params: &HynoreParams, m: PnrResolution) -> f64 {
    let bracket = 2.0 * hl_wrong_sign(alpha, params, &DetectorModel::ideal(m));
    0.5 * (-4.0 * params.tau * alpha * alpha).exp() * bracket
}

pub(crate) fn tau_z_search(alpha: f64, points: usize, tol: f64) -> GridSearchSpec {
    let z_max = 5.0 + 4.0 * alpha;
    // z axis is always the coarser one (z_max >= 5)
    let coarse = z_max / (points - 1) as f64;
    let shrink = 8.0f64;
    let rounds = (coarse / tol).log(shrink).ceil().max(0.0) as usize;
    GridSearchSpec {
        axes: vec![
            Axis { lo: 0.0, hi: 1.0, points },
            Axis { lo: 0.0, hi: z_max, points },
        ],
        refinement_rounds: rounds,
        shrink_factor: shrink,
        mandatory: vec![vec![1.0, 0.0]],
    }
}

/// HYNORE with ideal detectors, minimized over `(tau, z)`.
pub fn hynore_error(alpha: f64, m: PnrResolution) -> Result<EvalResult> {
    check_domain("alpha", alpha, alpha >= 0.0, "alpha >= 0")?;
    let model = DetectorModel::ideal(m);
    if alpha == 0.0 {
        return Ok(EvalResult::degenerate(1));
    }
    let spec = tau_z_search(alpha, feedforward::GRID_POINTS, feedforward::GRID_TOL);
    let opt = maximize_grid(
        |x| -hynore_error_at(alpha, &HynoreParams { tau: x[0], z: x[1] }, m),
        &spec,
    )?;
    let params = HynoreParams {
        tau: opt.x[0],
        z: opt.x[1],
    };
    let p_err = -opt.value;
    let p0 = 1.0 - hl_wrong_sign(alpha, &params, &model);
    Ok(EvalResult::new(
        alpha,
        p_err,
        ReceiverParams {
            tau: params.tau,
            z: params.z,
            betas: vec![params.transmitted_amplitude(alpha)],
            n_th: 1,
        },
        vec![p0, 1.0 - p_err],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m2() -> PnrResolution {
        PnrResolution::new(2).unwrap()
    }

    #[test]
    fn sql_values() {
        assert_eq!(sql_error(0.0).unwrap(), 0.5);
        // erf(sqrt 2) = 2 Phi(2) - 1, Phi(2) = 0.977249868051821
        assert_abs_diff_eq!(sql_error(1.0).unwrap(), 1.0 - 0.977_249_868_051_821, epsilon = 1e-13);
        assert_abs_diff_eq!(sql_error(1.0).unwrap(), 0.0227501, epsilon = 1e-7);
        assert!(sql_error(30.0).unwrap() < 1e-300);
        assert!(sql_error(-0.1).is_err());
    }

    #[test]
    fn helstrom_and_kennedy_values() {
        assert_eq!(helstrom_bound(0.0), 0.5);
        assert_eq!(kennedy_error(0.0), 0.5);
        let e4 = (-4.0f64).exp();
        assert_abs_diff_eq!(helstrom_bound(1.0), 0.5 * (1.0 - (1.0 - e4).sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(helstrom_bound(1.0), 0.004_600_07, epsilon = 1e-8);
        assert_abs_diff_eq!(kennedy_error(1.0), 0.0091578, epsilon = 1e-7);
        assert_abs_diff_eq!(kennedy_error(2.0), 5.63e-8, epsilon = 1e-10);
    }

    #[test]
    fn kennedy_is_twice_helstrom_at_high_energy() {
        let a = 3.0f64.sqrt();
        let r = kennedy_error(a) / helstrom_bound(a);
        assert!((1.99..=2.01).contains(&r), "ratio {r}");
    }

    #[test]
    fn baselines_strictly_decrease() {
        let mut prev = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for i in 0..200 {
            let a = 0.02 * i as f64;
            let cur = (sql_error(a).unwrap(), helstrom_bound(a), kennedy_error(a));
            assert!(cur.0 < prev.0 && cur.1 < prev.1 && cur.2 < prev.2);
            prev = cur;
        }
    }

    #[test]
    fn hynore_at_full_transmission_is_kennedy() {
        for &a in &[0.3, 1.0, 2.0] {
            for &z in &[0.0, 0.7, 3.0] {
                let p = hynore_error_at(a, &HynoreParams { tau: 1.0, z }, m2());
                assert_eq!(p, kennedy_error(a));
            }
        }
    }

    #[test]
    fn hynore_degenerate_and_ordering() {
        assert_eq!(hynore_error(0.0, m2()).unwrap().p_err, 0.5);
        for &a2 in &[1.0, 2.0, 4.0] {
            let a = f64::sqrt(a2);
            let hy = hynore_error(a, m2()).unwrap();
            assert!(hy.p_err <= kennedy_error(a) + 1e-12);
            assert!(hy.p_err >= helstrom_bound(a));
        }
    }

    #[test]
    fn optimized_displacement_beats_kennedy() {
        let model = DetectorModel::ideal(m2());
        assert_eq!(optimized_displacement_error(0.0, &model).unwrap().params.betas, vec![0.0]);
        for i in 0..12 {
            let a = (0.05 * 1.4f64.powi(i)).sqrt();
            let r = optimized_displacement_error(a, &model).unwrap();
            assert!(r.p_err <= kennedy_error(a) + 1e-12, "alpha^2 {}", a * a);
            assert!(r.p_err >= helstrom_bound(a) && r.p_err <= 0.5);
        }
    }
}
