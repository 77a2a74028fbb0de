//! Error-probability engine for binary phase-shift-keyed (BPSK) coherent-state
//! receivers.
//!
//! The crate covers the closed-form benchmarks (standard quantum limit,
//! Helstrom bound, Kennedy receiver), the hybrid near-optimum receiver built on
//! homodyne-like (HL) detection with photon-number-resolving detectors, and the
//! two feed-forward receivers: the displacement feed-forward receiver (DFFRE)
//! and its hybrid extension (HFFRE) whose first displacement sign is steered by
//! an HL pre-measurement. Detector imperfections (quantum efficiency, dark
//! counts, visibility) are modeled at the level of Poisson rates.
//!
//! Every analytic error probability can be cross-checked against the
//! event-level simulator in [`trajectory`].
//!
//! ```
//! use bpskrx_core::{baselines, feedforward, DetectorModel, FeedForwardConfig, PnrResolution};
//!
//! let alpha = 1.0_f64;
//! let m = PnrResolution::new(2).unwrap();
//! let cfg = FeedForwardConfig::hffre(1, DetectorModel::ideal(m));
//! let hyb = feedforward::hffre_error(alpha, &cfg).unwrap();
//! assert!(hyb.p_err >= baselines::helstrom_bound(alpha));
//! assert!(hyb.p_err <= baselines::sql_error(alpha).unwrap());
//! ```

pub mod baselines;
pub mod error;
pub mod feedforward;
pub mod optimizer;
pub mod photostatistics;
pub mod trajectory;
pub mod validation;

pub use error::{Error, Result};
pub use feedforward::{EvalResult, FeedForwardConfig, Receiver, ReceiverParams, StepRates};
pub use photostatistics::{
    BranchMeans, CountDistribution, DetectorModel, DifferenceDistribution, PnrResolution,
};
pub use trajectory::{RngSpec, TrajectoryRecord};
