use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use bpskrx_core::baselines::{
    helstrom_bound, hynore_error, kennedy_error, optimized_displacement_error, sql_error,
};
use bpskrx_core::feedforward::{self, gain, ratio};
use bpskrx_core::trajectory::estimate_error;
use bpskrx_core::{DetectorModel, EvalResult, FeedForwardConfig, ReceiverParams, RngSpec};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReceiverKind {
    Sql,
    Helstrom,
    Kennedy,
    DispOpt,
    Hynore,
    Dffre,
    Hffre,
}

impl ReceiverKind {
    /// Closed-form benchmarks have no free parameters and assume ideal
    /// detection.
    pub fn is_closed_form(self) -> bool {
        matches!(self, Self::Sql | Self::Helstrom | Self::Kennedy)
    }

    pub fn supports_copies(self) -> bool {
        matches!(self, Self::Dffre | Self::Hffre)
    }

    pub fn supports_imperfections(self) -> bool {
        matches!(self, Self::DispOpt | Self::Dffre | Self::Hffre)
    }

    pub fn slug(self) -> &'static str {
        match self {
            Self::Sql => "sql",
            Self::Helstrom => "helstrom",
            Self::Kennedy => "kennedy",
            Self::DispOpt => "disp-opt",
            Self::Hynore => "hynore",
            Self::Dffre => "dffre",
            Self::Hffre => "hffre",
        }
    }
}

impl FromStr for ReceiverKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "SQL" => Self::Sql,
            "HELSTROM" => Self::Helstrom,
            "KENNEDY" => Self::Kennedy,
            "DISP_OPT" | "DISPOPT" => Self::DispOpt,
            "HYNORE" => Self::Hynore,
            "DFFRE" => Self::Dffre,
            "HFFRE" => Self::Hffre,
            _ => bail!(
                "unknown receiver `{s}` (expected sql, helstrom, kennedy, disp-opt, hynore, dffre or hffre)"
            ),
        })
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sql => "SQL",
            Self::Helstrom => "HELSTROM",
            Self::Kennedy => "KENNEDY",
            Self::DispOpt => "DISP_OPT",
            Self::Hynore => "HYNORE",
            Self::Dffre => "DFFRE",
            Self::Hffre => "HFFRE",
        })
    }
}

/// Receiver, copy number and detector: everything but the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSpec {
    pub receiver: ReceiverKind,
    pub copies: usize,
    pub model: DetectorModel,
}

/// Analytic result at one energy.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub alpha2: f64,
    pub p_err: f64,
    /// Optimized parameters; absent for closed forms.
    pub detail: Option<EvalResult>,
}

impl Evaluation {
    /// `p_err / P_Helstrom`; 1 at zero energy where both are one half.
    pub fn ratio(&self) -> f64 {
        ratio(self.p_err, self.alpha2.sqrt())
    }

    /// `1 - p_err / P_SQL`; 0 at zero energy.
    pub fn gain(&self) -> f64 {
        gain(self.p_err, self.alpha2.sqrt())
    }
}

impl PointSpec {
    /// Rejects combinations the receiver cannot honor.
    pub fn check(&self, with_mc: bool) -> Result<()> {
        let r = self.receiver;
        if self.copies == 0 {
            bail!("--n-copies must be at least 1");
        }
        if self.copies != 1 && !r.supports_copies() {
            bail!("receiver {r} is single-copy; --n-copies must be 1");
        }
        if !self.model.is_ideal() && !r.supports_imperfections() {
            bail!("receiver {r} is defined for ideal detection only; drop --eta/--nu/--xi");
        }
        if with_mc && r.is_closed_form() {
            bail!("receiver {r} has no Monte Carlo model; drop --mc-trials");
        }
        Ok(())
    }

    pub fn evaluate(&self, alpha2: f64) -> Result<Evaluation> {
        if !(alpha2 >= 0.0 && alpha2.is_finite()) {
            bail!("alpha2 must be finite and non-negative, got {alpha2}");
        }
        let alpha = alpha2.sqrt();
        let closed = |p_err| Evaluation {
            alpha2,
            p_err,
            detail: None,
        };
        let detail = match self.receiver {
            ReceiverKind::Sql => return Ok(closed(sql_error(alpha)?)),
            ReceiverKind::Helstrom => return Ok(closed(helstrom_bound(alpha))),
            ReceiverKind::Kennedy => return Ok(closed(kennedy_error(alpha))),
            ReceiverKind::DispOpt => optimized_displacement_error(alpha, &self.model)?,
            ReceiverKind::Hynore => hynore_error(alpha, self.model.m)?,
            ReceiverKind::Dffre => {
                feedforward::dffre_error(alpha, &FeedForwardConfig::dffre(self.copies, self.model))?
            }
            ReceiverKind::Hffre => {
                feedforward::hffre_error(alpha, &FeedForwardConfig::hffre(self.copies, self.model))?
            }
        };
        Ok(Evaluation {
            alpha2,
            p_err: detail.p_err,
            detail: Some(detail),
        })
    }

    /// Simulator configuration reproducing this receiver with the optimized
    /// parameters. The HYNORE is a one-copy HFFRE that nulls the transmitted
    /// signal with an on/off click.
    pub fn simulation(&self, eval: &Evaluation) -> Option<(FeedForwardConfig, ReceiverParams)> {
        let detail = eval.detail.as_ref()?;
        let cfg = match self.receiver {
            ReceiverKind::DispOpt => FeedForwardConfig::dffre(1, self.model),
            ReceiverKind::Hynore => FeedForwardConfig::hffre(1, self.model),
            ReceiverKind::Dffre => FeedForwardConfig::dffre(self.copies, self.model),
            ReceiverKind::Hffre => FeedForwardConfig::hffre(self.copies, self.model),
            _ => return None,
        };
        Some((cfg, detail.params.clone()))
    }

    /// Monte Carlo `(p_hat, std_err)` with the stream selected by `stream`.
    pub fn simulate(
        &self,
        eval: &Evaluation,
        trials: u64,
        seed: u64,
        stream: u64,
    ) -> Result<Option<(f64, f64)>> {
        let Some((cfg, params)) = self.simulation(eval) else {
            return Ok(None);
        };
        let alpha = eval.alpha2.sqrt();
        Ok(Some(estimate_error(
            alpha,
            &params,
            &cfg,
            trials,
            RngSpec::new(seed, stream),
        )?))
    }
}
