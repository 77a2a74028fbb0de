//! Shared fixtures for the criterion benchmarks.

use bpskrx_core::{DetectorModel, PnrResolution};

pub fn ideal_m2() -> DetectorModel {
    DetectorModel::ideal(PnrResolution::new(2).expect("M = 2 is valid"))
}

pub fn dark_m2() -> DetectorModel {
    DetectorModel::new(PnrResolution::new(2).expect("M = 2 is valid"), 1.0, 1e-3, 1.0)
        .expect("valid detector")
}
