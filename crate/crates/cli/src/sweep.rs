//! Energy sweeps and their CSV / JSON datasets.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bpskrx_core::trajectory::MIN_TRIALS;
use bpskrx_core::{DetectorModel, PnrResolution};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{GridArgs, McArgs, ModelArgs, SweepArgs};
use crate::config::FileLayer;
use crate::receiver::{PointSpec, ReceiverKind};

pub const HEADER: [&str; 12] = [
    "alpha2",
    "p_err",
    "p_helstrom",
    "p_sql",
    "ratio",
    "gain",
    "tau_opt",
    "z_opt",
    "n_th_opt",
    "betas",
    "mc_p_hat",
    "mc_std_err",
];

pub const SWEEP_KEYS: &[&str] = &[
    "receiver",
    "alpha2-min",
    "alpha2-max",
    "points",
    "log",
    "n-copies",
    "pnr",
    "eta",
    "nu",
    "xi",
    "mc-trials",
    "seed",
    "out",
    "json",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl EnergyGrid {
    pub fn check(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min < 0.0 {
            bail!("alpha2 range must be finite and non-negative");
        }
        if self.min > self.max {
            bail!("--alpha2-min ({}) exceeds --alpha2-max ({})", self.min, self.max);
        }
        if self.points == 0 {
            bail!("--points must be at least 1");
        }
        if self.points > 1 && self.min == self.max {
            bail!("a multi-point grid needs --alpha2-min < --alpha2-max");
        }
        if self.log && self.min <= 0.0 {
            bail!("a log grid needs --alpha2-min > 0");
        }
        Ok(())
    }

    /// Ascending grid including both ends.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    self.min
                } else if i + 1 == self.points {
                    self.max
                } else if self.log {
                    let (a, b) = (self.min.ln(), self.max.ln());
                    (a + (b - a) * i as f64 / last).exp()
                } else {
                    self.min + (self.max - self.min) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub point: PointSpec,
    pub grid: EnergyGrid,
    pub mc_trials: Option<u64>,
    pub seed: Option<u64>,
}

/// Detector model from flags / file, defaulting to ideal PNR(2).
pub fn resolve_model(model: &ModelArgs, file: &FileLayer) -> Result<(usize, DetectorModel)> {
    let copies = file.pick(model.n_copies, "n-copies")?.unwrap_or(1);
    let pnr = file.pick(model.pnr, "pnr")?.unwrap_or(2);
    let m = PnrResolution::new(pnr).context("invalid --pnr")?;
    let eta = file.pick(model.eta, "eta")?.unwrap_or(1.0);
    let nu = file.pick(model.nu, "nu")?.unwrap_or(0.0);
    let xi = file.pick(model.xi, "xi")?.unwrap_or(1.0);
    let model = DetectorModel::new(m, eta, nu, xi)?;
    Ok((copies, model))
}

pub fn resolve_receiver(flag: Option<String>, file: &FileLayer) -> Result<ReceiverKind> {
    match file.pick(flag, "receiver")? {
        Some(s) => s.parse(),
        None => bail!("--receiver is required"),
    }
}

pub fn resolve_mc(mc: &McArgs, file: &FileLayer) -> Result<(Option<u64>, Option<u64>)> {
    let trials = file.pick(mc.mc_trials, "mc-trials")?;
    if let Some(t) = trials {
        if t < MIN_TRIALS {
            bail!("--mc-trials must be at least {MIN_TRIALS}, got {t}");
        }
    }
    Ok((trials, file.pick(mc.seed, "seed")?))
}

fn resolve_grid(grid: &GridArgs, file: &FileLayer) -> Result<EnergyGrid> {
    let g = EnergyGrid {
        min: file.pick(grid.alpha2_min, "alpha2-min")?.unwrap_or(0.01),
        max: file.pick(grid.alpha2_max, "alpha2-max")?.unwrap_or(10.0),
        points: file.pick(grid.points, "points")?.unwrap_or(60),
        log: file.pick(grid.log, "log")?.unwrap_or(false),
    };
    g.check()?;
    Ok(g)
}

/// Fully resolved sweep plus output destination and format.
pub struct SweepJob {
    pub config: SweepConfig,
    pub out: Option<std::path::PathBuf>,
    pub json: bool,
}

impl SweepJob {
    pub fn from_args(args: SweepArgs) -> Result<Self> {
        let file = FileLayer::load(args.config.as_deref(), SWEEP_KEYS)?;
        let receiver = resolve_receiver(args.receiver, &file)?;
        let grid = resolve_grid(&args.grid, &file)?;
        let (copies, model) = resolve_model(&args.model, &file)?;
        let (mc_trials, seed) = resolve_mc(&args.mc, &file)?;
        let point = PointSpec {
            receiver,
            copies,
            model,
        };
        point.check(mc_trials.is_some())?;
        Ok(Self {
            config: SweepConfig {
                point,
                grid,
                mc_trials,
                seed,
            },
            out: file.pick(args.out, "out")?,
            json: file.switch(args.json, "json")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha2: f64,
    pub p_err: f64,
    pub p_helstrom: f64,
    pub p_sql: f64,
    pub ratio: f64,
    pub gain: f64,
    pub tau_opt: Option<f64>,
    pub z_opt: Option<f64>,
    pub n_th_opt: Option<u32>,
    pub betas: Option<Vec<f64>>,
    pub mc_p_hat: Option<f64>,
    pub mc_std_err: Option<f64>,
}

impl SweepRow {
    pub fn csv_fields(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        vec![
            fmt_num(self.alpha2),
            fmt_num(self.p_err),
            fmt_num(self.p_helstrom),
            fmt_num(self.p_sql),
            fmt_num(self.ratio),
            fmt_num(self.gain),
            opt(self.tau_opt),
            opt(self.z_opt),
            self.n_th_opt.map(|n| n.to_string()).unwrap_or_default(),
            self.betas
                .as_ref()
                .map(|b| b.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(";"))
                .unwrap_or_default(),
            opt(self.mc_p_hat),
            opt(self.mc_std_err),
        ]
    }
}

/// Shortest representation that parses back to the same `f64`; exponent
/// form outside `[1e-4, 1e15)`.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn one_row(cfg: &SweepConfig, index: usize, alpha2: f64) -> Result<SweepRow> {
    let alpha = alpha2.sqrt();
    let eval = cfg.point.evaluate(alpha2)?;
    let mc = match cfg.mc_trials {
        Some(trials) => cfg
            .point
            .simulate(&eval, trials, cfg.seed.unwrap_or(0), index as u64)?,
        None => None,
    };
    let detail = eval.detail.as_ref();
    Ok(SweepRow {
        alpha2,
        p_err: eval.p_err,
        p_helstrom: bpskrx_core::baselines::helstrom_bound(alpha),
        p_sql: bpskrx_core::baselines::sql_error(alpha)?,
        ratio: eval.ratio(),
        gain: eval.gain(),
        tau_opt: detail.map(|d| d.params.tau),
        z_opt: detail.map(|d| d.params.z),
        n_th_opt: detail.map(|d| d.params.n_th),
        betas: detail.map(|d| d.params.betas.clone()),
        mc_p_hat: mc.map(|m| m.0),
        mc_std_err: mc.map(|m| m.1),
    })
}

/// Evaluates every grid point concurrently; rows come back in grid order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.grid
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(i, a2)| one_row(cfg, i, a2).with_context(|| format!("at alpha2 = {a2}")))
        .collect()
}

/// Ordered metadata pairs written ahead of the data.
pub fn metadata(cfg: &SweepConfig) -> Vec<(String, String)> {
    let p = &cfg.point;
    let none = || "none".to_string();
    vec![
        ("generator".into(), format!("bpskrx {}", env!("CARGO_PKG_VERSION"))),
        ("receiver".into(), p.receiver.to_string()),
        ("alpha2_min".into(), fmt_num(cfg.grid.min)),
        ("alpha2_max".into(), fmt_num(cfg.grid.max)),
        ("points".into(), cfg.grid.points.to_string()),
        (
            "spacing".into(),
            if cfg.grid.log { "log" } else { "linear" }.into(),
        ),
        ("n_copies".into(), p.copies.to_string()),
        ("pnr".into(), p.model.m.get().to_string()),
        ("eta".into(), fmt_num(p.model.eta)),
        ("nu".into(), fmt_num(p.model.nu)),
        ("xi".into(), fmt_num(p.model.xi)),
        (
            "mc_trials".into(),
            cfg.mc_trials.map(|t| t.to_string()).unwrap_or_else(none),
        ),
        (
            "seed".into(),
            match (cfg.mc_trials, cfg.seed) {
                (_, Some(s)) => s.to_string(),
                (Some(_), None) => "0".into(),
                (None, None) => none(),
            },
        ),
    ]
}

pub fn render_csv(meta: &[(String, String)], rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for (k, v) in meta {
        writeln!(buf, "# {k} = {v}")?;
    }
    let mut w = csv::WriterBuilder::new().from_writer(buf);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.csv_fields())?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn render_json(meta: &[(String, String)], rows: &[SweepRow]) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Doc<'a> {
        metadata: serde_json::Map<String, serde_json::Value>,
        rows: &'a [SweepRow],
    }
    let metadata = meta
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let mut out = serde_json::to_vec_pretty(&Doc { metadata, rows })?;
    out.push(b'\n');
    Ok(out)
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so
/// readers never see a partial dataset.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn execute(job: &SweepJob) -> Result<()> {
    let rows = run_sweep(&job.config)?;
    let meta = metadata(&job.config);
    let bytes = if job.json {
        render_json(&meta, &rows)?
    } else {
        render_csv(&meta, &rows)?
    };
    match &job.out {
        Some(path) => write_atomic(path, &bytes),
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 0.1, 1.0 / 3.0, 5.63e-8, 2.5e-300, 123456.789, 1e20, -0.25] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(5.63e-8), "5.63e-8");
    }

    #[test]
    fn grids_hit_both_ends() {
        let g = EnergyGrid {
            min: 0.25,
            max: 4.0,
            points: 5,
            log: true,
        };
        let v = g.values();
        assert_eq!(v.first(), Some(&0.25));
        assert_eq!(v.last(), Some(&4.0));
        assert!((v[2] - 1.0).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        let lin = EnergyGrid { log: false, ..g }.values();
        assert!((lin[1] - 1.1875).abs() < 1e-12);
        assert!(EnergyGrid { min: 0.0, ..g }.check().is_err());
        assert!(EnergyGrid { min: 5.0, ..g }.check().is_err());
        assert!(EnergyGrid { points: 0, ..g }.check().is_err());
    }

    #[test]
    fn empty_fields_for_absent_values() {
        let row = SweepRow {
            alpha2: 1.0,
            p_err: 0.5,
            p_helstrom: 0.25,
            p_sql: 0.3,
            ratio: 2.0,
            gain: -0.5,
            tau_opt: Some(1.0),
            z_opt: None,
            n_th_opt: Some(2),
            betas: Some(vec![0.5, 1.25]),
            mc_p_hat: None,
            mc_std_err: None,
        };
        let f = row.csv_fields();
        assert_eq!(f.len(), HEADER.len());
        assert_eq!(f[4], "2");
        assert_eq!(f[7], "");
        assert_eq!(f[8], "2");
        assert_eq!(f[9], "0.5;1.25");
    }
}
