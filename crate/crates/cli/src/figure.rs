//! Curve sets of the published figures, written one dataset per curve.

use std::path::Path;

use anyhow::{bail, Context, Result};
use bpskrx_core::{DetectorModel, PnrResolution};

use crate::receiver::{PointSpec, ReceiverKind};
use crate::sweep::{self, EnergyGrid, SweepConfig};

pub const FIGURE_IDS: [&str; 10] = ["4", "5a", "5b", "6", "7a", "7b", "8a", "8b", "9a", "9b"];

/// Energy axis shared by every figure.
pub const ALPHA2_MIN: f64 = 0.01;
pub const ALPHA2_MAX: f64 = 10.0;

const COPIES: [usize; 4] = [1, 2, 5, 10];
const RESOLUTIONS: [u32; 4] = [1, 2, 4, 8];
const EFFICIENCIES: [f64; 4] = [1.0, 0.9, 0.8, 0.7];

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub point: PointSpec,
}

fn model(m: u32, eta: f64, nu: f64, xi: f64) -> DetectorModel {
    DetectorModel::new(PnrResolution::new(m).expect("m >= 1"), eta, nu, xi)
        .expect("figure parameters are in range")
}

fn curve(name: String, receiver: ReceiverKind, copies: usize, model: DetectorModel) -> Curve {
    Curve {
        name,
        point: PointSpec {
            receiver,
            copies,
            model,
        },
    }
}

/// Both feed-forward receivers for every copy number in `COPIES`.
fn per_copies(tag: &str, model: DetectorModel) -> Vec<Curve> {
    COPIES
        .iter()
        .flat_map(|&n| {
            [ReceiverKind::Dffre, ReceiverKind::Hffre]
                .map(|r| curve(format!("{}_{tag}N{n}", r.slug()), r, n, model))
        })
        .collect()
}

pub fn curves(id: &str) -> Result<Vec<Curve>> {
    let ideal = model(2, 1.0, 0.0, 1.0);
    Ok(match id.to_ascii_lowercase().as_str() {
        "4" => [
            ReceiverKind::Sql,
            ReceiverKind::Helstrom,
            ReceiverKind::Kennedy,
            ReceiverKind::Hynore,
            ReceiverKind::Dffre,
            ReceiverKind::Hffre,
        ]
        .into_iter()
        .map(|r| curve(r.slug().to_string(), r, 1, ideal))
        .collect(),
        "5a" => per_copies("", ideal),
        "5b" => {
            let mut c: Vec<Curve> = RESOLUTIONS
                .iter()
                .map(|&m| {
                    curve(
                        format!("hffre_M{m}"),
                        ReceiverKind::Hffre,
                        1,
                        model(m, 1.0, 0.0, 1.0),
                    )
                })
                .collect();
            c.push(curve("dffre_M2".into(), ReceiverKind::Dffre, 1, ideal));
            c
        }
        "6" | "7a" => EFFICIENCIES
            .iter()
            .flat_map(|&eta| {
                [ReceiverKind::Dffre, ReceiverKind::Hffre].map(|r| {
                    curve(
                        format!("{}_eta{eta}", r.slug()),
                        r,
                        1,
                        model(2, eta, 0.0, 1.0),
                    )
                })
            })
            .collect(),
        "7b" => per_copies("eta0.7_", model(2, 0.7, 0.0, 1.0)),
        "8a" | "8b" => per_copies("nu0.001_", model(2, 1.0, 1e-3, 1.0)),
        "9a" | "9b" => per_copies("xi0.998_", model(2, 1.0, 0.0, 0.998)),
        _ => bail!(
            "unknown figure id `{id}` (expected one of {})",
            FIGURE_IDS.join(", ")
        ),
    })
}

/// Writes every curve of figure `id` into `dir`; returns the file paths.
pub fn write_figure(id: &str, dir: &Path, points: usize, json: bool) -> Result<Vec<std::path::PathBuf>> {
    let curves = curves(id)?;
    let grid = EnergyGrid {
        min: ALPHA2_MIN,
        max: ALPHA2_MAX,
        points,
        log: true,
    };
    grid.check()?;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let ext = if json { "json" } else { "csv" };
    let mut written = Vec::new();
    for c in curves {
        let cfg = SweepConfig {
            point: c.point,
            grid,
            mc_trials: None,
            seed: None,
        };
        let rows = sweep::run_sweep(&cfg)?;
        let mut meta = vec![
            ("figure".to_string(), id.to_ascii_lowercase()),
            ("curve".to_string(), c.name.clone()),
            (
                "alpha2_range".to_string(),
                "chosen to cover the plotted energies; not read from the figure".to_string(),
            ),
        ];
        meta.extend(sweep::metadata(&cfg));
        let bytes = if json {
            sweep::render_json(&meta, &rows)?
        } else {
            sweep::render_csv(&meta, &rows)?
        };
        let path = dir.join(format!("fig{}_{}.{ext}", id.to_ascii_lowercase(), c.name));
        sweep::write_atomic(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_id_has_curves() {
        for id in FIGURE_IDS {
            let c = curves(id).unwrap();
            assert!(!c.is_empty(), "{id}");
            let mut names: Vec<_> = c.iter().map(|c| c.name.clone()).collect();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), c.len(), "duplicate curve names in {id}");
            for curve in &c {
                curve.point.check(false).unwrap();
            }
        }
        assert!(curves("3").is_err());
        assert_eq!(curves("4").unwrap().len(), 6);
    }

    #[test]
    fn captions_fix_the_parameters() {
        assert!(curves("8a").unwrap().iter().all(|c| c.point.model.nu == 1e-3));
        assert!(curves("9b").unwrap().iter().all(|c| c.point.model.xi == 0.998));
        assert!(curves("7b").unwrap().iter().all(|c| c.point.model.eta == 0.7));
        assert!(curves("5a")
            .unwrap()
            .iter()
            .all(|c| c.point.model.m.get() == 2));
    }
}
