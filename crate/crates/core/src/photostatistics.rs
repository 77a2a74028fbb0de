//! Detection statistics: truncated Poisson counts of PNR(M) detectors,
//! homodyne-like difference distributions and on/off / thresholded outcome
//! probabilities.
//!
//! All imperfections act on Poisson rates. A detector with efficiency `eta`
//! and dark-count rate `nu` illuminated by mean photon number `x` counts with
//! rate `eta * x + nu`. Visibility `xi` only touches interference cross terms.

use serde::{Deserialize, Serialize};

use crate::error::{check_domain, Error, Result};

/// Largest photon number a PNR(M) detector resolves; outcome `M` lumps every
/// count `>= M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct PnrResolution(u32);

impl PnrResolution {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain {
                name: "M",
                value: 0.0,
                expected: "M >= 1",
            });
        }
        Ok(Self(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u32> for PnrResolution {
    type Error = Error;
    fn try_from(m: u32) -> Result<Self> {
        Self::new(m)
    }
}

impl From<PnrResolution> for u32 {
    fn from(m: PnrResolution) -> u32 {
        m.0
    }
}

/// PNR resolution plus the imperfection triple (efficiency, dark counts,
/// visibility). The ideal detector is `(1, 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub m: PnrResolution,
    pub eta: f64,
    pub nu: f64,
    pub xi: f64,
}

impl DetectorModel {
    pub fn new(m: PnrResolution, eta: f64, nu: f64, xi: f64) -> Result<Self> {
        check_domain("eta", eta, eta > 0.0 && eta <= 1.0, "0 < eta <= 1")?;
        check_domain("nu", nu, nu >= 0.0, "nu >= 0")?;
        check_domain("xi", xi, xi > 0.0 && xi <= 1.0, "0 < xi <= 1")?;
        Ok(Self { m, eta, nu, xi })
    }

    pub fn ideal(m: PnrResolution) -> Self {
        Self {
            m,
            eta: 1.0,
            nu: 0.0,
            xi: 1.0,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.eta == 1.0 && self.nu == 0.0 && self.xi == 1.0
    }

    /// Dark counts or imperfect visibility break the equivalence between the
    /// MAP rule and on/off detection, so the click threshold becomes a free
    /// parameter.
    pub fn needs_threshold(&self) -> bool {
        self.nu > 0.0 || self.xi < 1.0
    }

    /// Rate actually seen by the detector for an incident mean photon number.
    #[inline]
    pub fn detected_rate(&self, mean_photons: f64) -> f64 {
        self.eta * mean_photons + self.nu
    }
}

/// PMF of a PNR(M) outcome, indexed by `n = 0..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountDistribution {
    pub probs: Vec<f64>,
}

impl CountDistribution {
    pub fn resolution(&self) -> usize {
        self.probs.len() - 1
    }
}

/// PMF of the HL difference photocurrent `Δ = n - m`, stored over `Δ = -M..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceDistribution {
    pub m: u32,
    pub probs: Vec<f64>,
}

impl DifferenceDistribution {
    /// Probability of `Δ = delta`; zero outside `[-M, M]`.
    pub fn get(&self, delta: i64) -> f64 {
        let m = self.m as i64;
        if delta < -m || delta > m {
            0.0
        } else {
            self.probs[(delta + m) as usize]
        }
    }

    pub fn deltas(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let m = self.m as i64;
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i as i64 - m, p))
    }

    /// `P(Δ < 0)`, the mass that steers toward the "1" hypothesis.
    pub fn prob_negative(&self) -> f64 {
        self.probs[..self.m as usize].iter().sum()
    }
}

/// Mean photon numbers on the two output branches of the HL beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchMeans {
    pub mu_plus: f64,
    pub mu_minus: f64,
}

/// Mean photon number of `zeta` mixed with `sign * beta` through an interface
/// with visibility `xi`: `zeta^2 + beta^2 + 2 xi zeta beta`.
///
/// Written as `(zeta + xi beta)^2 + (1 - xi^2) beta^2`, which is never negative
/// and reduces bit-for-bit to `(zeta + beta)^2` at `xi = 1`.
#[inline]
pub(crate) fn mixed_intensity(zeta: f64, beta: f64, xi: f64) -> f64 {
    let coherent = zeta + xi * beta;
    coherent * coherent + (1.0 - xi * xi) * beta * beta
}

/// Truncated Poisson PMF of a PNR(M) detector with rate `mu`.
pub fn pnr_pmf(mu: f64, m: PnrResolution) -> Result<CountDistribution> {
    check_domain("mu", mu, mu >= 0.0, "mu >= 0")?;
    let m = m.as_usize();
    let mut probs = Vec::with_capacity(m + 1);
    let mut term = (-mu).exp();
    let mut partial = 0.0;
    for n in 0..m {
        probs.push(term);
        partial += term;
        term *= mu / (n + 1) as f64;
    }
    probs.push((1.0 - partial).clamp(0.0, 1.0));
    Ok(CountDistribution { probs })
}

/// Branch means for signal `zeta` against local oscillator `z` with
/// visibility `xi`: `(zeta^2 + z^2 ± 2 xi z zeta) / 2`.
pub fn branch_means(zeta: f64, z: f64, xi: f64) -> Result<BranchMeans> {
    check_domain("zeta", zeta, true, "finite")?;
    check_domain("z", z, z >= 0.0, "z >= 0")?;
    check_domain("xi", xi, xi > 0.0 && xi <= 1.0, "0 < xi <= 1")?;
    Ok(BranchMeans {
        mu_plus: 0.5 * mixed_intensity(zeta, z, xi),
        mu_minus: 0.5 * mixed_intensity(zeta, -z, xi),
    })
}

/// Distribution of `Δ = n - m` for HL detection of the coherent amplitude
/// `zeta` with local oscillator `z`, both branches read by the detector
/// described by `model`.
pub fn hl_difference_pmf(
    zeta: f64,
    z: f64,
    model: &DetectorModel,
) -> Result<DifferenceDistribution> {
    let means = branch_means(zeta, z, model.xi)?;
    let plus = pnr_pmf(model.detected_rate(means.mu_plus), model.m)?;
    let minus = pnr_pmf(model.detected_rate(means.mu_minus), model.m)?;
    let m = model.m.as_usize();
    let mut probs = vec![0.0; 2 * m + 1];
    for (n, &pn) in plus.probs.iter().enumerate() {
        for (k, &pk) in minus.probs.iter().enumerate() {
            probs[n + m - k] += pn * pk;
        }
    }
    Ok(DifferenceDistribution {
        m: model.m.get(),
        probs,
    })
}

/// Skellam probability of `delta` for untruncated Poisson counts with rates
/// `mu_plus` and `mu_minus`, by direct series summation.
pub fn skellam_pmf(delta: i64, mu_plus: f64, mu_minus: f64) -> Result<f64> {
    check_domain("mu_plus", mu_plus, mu_plus >= 0.0, "mu_plus >= 0")?;
    check_domain("mu_minus", mu_minus, mu_minus >= 0.0, "mu_minus >= 0")?;
    // P(n - m = d) with d >= 0 after swapping roles for negative deltas.
    let (lead, other, d) = if delta >= 0 {
        (mu_plus, mu_minus, delta as u64)
    } else {
        (mu_minus, mu_plus, delta.unsigned_abs())
    };
    if lead == 0.0 {
        return Ok(if d == 0 { (-other).exp() } else { 0.0 });
    }
    let log_fact: f64 = (1..=d).map(|k| (k as f64).ln()).sum();
    let mut term = (-(lead + other) + d as f64 * lead.ln() - log_fact).exp();
    let mut sum = term;
    let product = lead * other;
    let mut k = 0u64;
    loop {
        let ratio = product / ((k + 1) as f64 * (k + d + 1) as f64);
        term *= ratio;
        sum += term;
        k += 1;
        if ratio < 1.0 && term <= 1e-16 * sum {
            break;
        }
        if term == 0.0 && ratio < 1.0 {
            break;
        }
    }
    Ok(sum)
}

/// Probability of an "off" result for rate `x`.
#[inline]
pub fn q_off(x: f64) -> f64 {
    (-x).exp()
}

/// Probability of an "on" result for rate `x`.
#[inline]
pub fn q_on(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Probabilities of a count below (`q0`) and at or above (`q1`) the click
/// threshold `n_th` for Poisson rate `x`. `n_th = 1` is on/off detection.
pub fn q_thresh(x: f64, n_th: u32) -> Result<(f64, f64)> {
    check_domain("x", x, x >= 0.0, "x >= 0")?;
    if n_th == 0 {
        return Err(Error::Domain {
            name: "n_th",
            value: 0.0,
            expected: "n_th >= 1",
        });
    }
    Ok(q_thresh_unchecked(x, n_th))
}

/// `q_thresh` without argument validation, for inner optimizer loops.
#[inline]
pub(crate) fn q_thresh_unchecked(x: f64, n_th: u32) -> (f64, f64) {
    if n_th == 1 {
        return (q_off(x), q_on(x));
    }
    if x < n_th as f64 {
        // Tail series: the click probability is tiny here and 1 - q0 would
        // cancel.
        let mut term = (-x).exp();
        for s in 1..=n_th {
            term *= x / s as f64;
        }
        let mut tail = 0.0;
        let mut s = n_th;
        while term > 0.0 {
            tail += term;
            s += 1;
            term *= x / s as f64;
            if term <= 1e-17 * tail {
                tail += term;
                break;
            }
        }
        (1.0 - tail, tail)
    } else {
        let mut term = (-x).exp();
        let mut head = 0.0;
        for s in 0..n_th {
            head += term;
            term *= x / (s + 1) as f64;
        }
        (head, 1.0 - head)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn res(m: u32) -> PnrResolution {
        PnrResolution::new(m).unwrap()
    }

    fn factorial(n: u64) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn pnr_pmf_vacuum() {
        assert_eq!(pnr_pmf(0.0, res(2)).unwrap().probs, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn pnr_pmf_unit_rate() {
        let e = (-1.0f64).exp();
        let expected = [e, e, 1.0 - 2.0 * e];
        let got = pnr_pmf(1.0, res(2)).unwrap();
        for (g, x) in got.probs.iter().zip(expected) {
            assert_abs_diff_eq!(*g, x, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(got.probs[2], 0.2642411, epsilon = 1e-7);
    }

    #[test]
    fn pnr_pmf_saturates() {
        let got = pnr_pmf(1e6, res(2)).unwrap();
        assert!((got.probs[2] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pnr_pmf_rejects_bad_rates() {
        assert!(pnr_pmf(-0.1, res(2)).is_err());
        assert!(pnr_pmf(f64::NAN, res(2)).is_err());
        assert!(pnr_pmf(f64::INFINITY, res(2)).is_err());
        assert!(PnrResolution::new(0).is_err());
    }

    #[test]
    fn branch_means_examples() {
        let b = branch_means(0.0, 2.0, 1.0).unwrap();
        assert_eq!((b.mu_plus, b.mu_minus), (2.0, 2.0));
        let b = branch_means(1.0, 1.0, 1.0).unwrap();
        assert_eq!((b.mu_plus, b.mu_minus), (2.0, 0.0));
        let b = branch_means(1.0, 1.0, 0.998).unwrap();
        assert_abs_diff_eq!(b.mu_plus, 1.998, epsilon = 1e-12);
        assert_abs_diff_eq!(b.mu_minus, 0.002, epsilon = 1e-12);
    }

    #[test]
    fn branch_means_ideal_is_squared_modulus() {
        for &(zeta, z) in &[(0.3, 1.7), (-2.0, 0.4), (1.25, 1.25)] {
            let b = branch_means(zeta, z, 1.0).unwrap();
            assert_eq!(b.mu_plus, (zeta + z) * (zeta + z) / 2.0);
            assert_eq!(b.mu_minus, (zeta - z) * (zeta - z) / 2.0);
        }
    }

    #[test]
    fn hl_vacuum_is_a_point_mass() {
        let d = hl_difference_pmf(0.0, 0.0, &DetectorModel::ideal(res(2))).unwrap();
        assert_eq!(d.probs, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn hl_matches_nested_loop_oracle() {
        // Independent oracle: explicit Poisson terms, explicit pair loop.
        let (zeta, z) = (0.5f64, 1.0f64);
        let mu_p = (zeta + z).powi(2) / 2.0;
        let mu_m = (zeta - z).powi(2) / 2.0;
        let pmf = |mu: f64, n: u64| {
            if n < 2 {
                (-mu).exp() * mu.powi(n as i32) / factorial(n)
            } else {
                1.0 - (-mu).exp() * (1.0 + mu)
            }
        };
        let mut oracle = [0.0; 5];
        for n in 0..=2u64 {
            for m in 0..=2u64 {
                oracle[(n as i64 - m as i64 + 2) as usize] += pmf(mu_p, n) * pmf(mu_m, m);
            }
        }
        let d = hl_difference_pmf(zeta, z, &DetectorModel::ideal(res(2))).unwrap();
        for (g, o) in d.probs.iter().zip(oracle) {
            assert_abs_diff_eq!(*g, o, epsilon = 1e-12);
        }
    }

    #[test]
    fn skellam_examples() {
        assert_eq!(skellam_pmf(0, 0.0, 0.0).unwrap(), 1.0);
        for d in -4..=4 {
            assert_abs_diff_eq!(
                skellam_pmf(d, 1.3, 1.3).unwrap(),
                skellam_pmf(-d, 1.3, 1.3).unwrap(),
                epsilon = 1e-16
            );
        }
        // Oracle: sum_m Poisson(m+1; 2) Poisson(m; 0.5) up to m = 200, with
        // terms built in log space.
        let ln_pois = |k: u64, mu: f64| -> f64 {
            let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
            -mu + k as f64 * mu.ln() - ln_fact
        };
        let oracle: f64 = (0..=200u64)
            .map(|m| (ln_pois(m + 1, 2.0) + ln_pois(m, 0.5)).exp())
            .sum();
        assert_abs_diff_eq!(skellam_pmf(1, 2.0, 0.5).unwrap(), oracle, epsilon = 1e-15);
        assert!(skellam_pmf(0, -1.0, 0.0).is_err());
    }

    #[test]
    fn on_off_probabilities() {
        assert_eq!(q_off(0.0), 1.0);
        assert_eq!(q_on(0.0), 0.0);
        assert_abs_diff_eq!(q_off(4.0), 0.0183156, epsilon = 1e-7);
        for &x in &[1e-12, 1e-3, 0.7, 5.0, 40.0] {
            assert!((q_off(x) + q_on(x) - 1.0).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn threshold_probabilities() {
        assert_eq!(q_thresh(0.0, 3).unwrap(), (1.0, 0.0));
        for &x in &[0.0, 0.2, 3.0] {
            assert_eq!(q_thresh(x, 1).unwrap(), (q_off(x), q_on(x)));
        }
        let (q0, q1) = q_thresh(1.0, 2).unwrap();
        assert_abs_diff_eq!(q0, 2.0 * (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(q0, 0.7357589, epsilon = 1e-7);
        assert_abs_diff_eq!(q0 + q1, 1.0, epsilon = 1e-15);
        assert!(q_thresh(1.0, 0).is_err());
        assert!(q_thresh(-1.0, 1).is_err());
    }

    #[test]
    fn threshold_tail_keeps_relative_precision() {
        // 1 - e^{-x}(1 + x) ≈ x^2/2 - x^3/3 for small x
        let x = 1e-3;
        let (_, q1) = q_thresh(x, 2).unwrap();
        let series = x * x / 2.0 - x * x * x / 3.0 + x.powi(4) / 8.0;
        assert!((q1 - series).abs() / series < 1e-10);
    }

    #[test]
    fn skellam_is_the_large_m_limit() {
        let model = DetectorModel::ideal(res(64));
        for &(zeta, z) in &[(0.5, 1.0), (1.8, 1.0), (-1.2, 1.5), (0.0, 2.8)] {
            let d = hl_difference_pmf(zeta, z, &model).unwrap();
            let b = branch_means(zeta, z, 1.0).unwrap();
            assert!(b.mu_plus <= 4.0 && b.mu_minus <= 4.0);
            for delta in -10..=10 {
                let s = skellam_pmf(delta, b.mu_plus, b.mu_minus).unwrap();
                assert!((d.get(delta) - s).abs() <= 1e-8, "delta {delta}");
            }
        }
    }

    proptest! {
        #[test]
        fn count_pmf_normalized(mu in 0.0f64..100.0, m in 1u32..=16) {
            let p = pnr_pmf(mu, res(m)).unwrap();
            prop_assert_eq!(p.probs.len(), m as usize + 1);
            prop_assert!(p.probs.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn difference_pmf_normalized_and_mirrored(
            zeta in -10.0f64..10.0,
            z in 0.0f64..10.0,
            m in 1u32..=16,
            eta in 0.05f64..=1.0,
            nu in 0.0f64..0.1,
            xi in 0.5f64..=1.0,
        ) {
            let model = DetectorModel::new(res(m), eta, nu, xi).unwrap();
            let d = hl_difference_pmf(zeta, z, &model).unwrap();
            let mirror = hl_difference_pmf(-zeta, z, &model).unwrap();
            prop_assert_eq!(d.probs.len(), 2 * m as usize + 1);
            prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for delta in -(m as i64)..=(m as i64) {
                prop_assert!((mirror.get(delta) - d.get(-delta)).abs() <= 1e-15);
            }
        }

        #[test]
        fn dark_counts_push_mass_to_the_top_bin(mu in 0.0f64..20.0, nu1 in 0.0f64..1.0, dnu in 0.0f64..1.0, m in 1u32..=8) {
            let lo = pnr_pmf(mu + nu1, res(m)).unwrap().probs[m as usize];
            let hi = pnr_pmf(mu + nu1 + dnu, res(m)).unwrap().probs[m as usize];
            prop_assert!(hi >= lo - 1e-15);
        }

        #[test]
        fn threshold_monotonicity(x in 0.0f64..30.0, dx in 0.0f64..5.0, n in 1u32..8) {
            let (q0, _) = q_thresh(x, n).unwrap();
            let (q0_far, _) = q_thresh(x + dx, n).unwrap();
            let (q0_up, _) = q_thresh(x, n + 1).unwrap();
            prop_assert!(q0_far <= q0 + 1e-15);
            prop_assert!(q0_up >= q0 - 1e-15);
        }
    }
}
