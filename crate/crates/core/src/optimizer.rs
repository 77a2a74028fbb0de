//! Deterministic derivative-free maximizers.
//!
//! The receiver objectives are piecewise smooth with flat regions and kinks
//! where the optimal click threshold switches, so every search starts from a
//! coarse grid and only then refines locally. Ties are broken toward the
//! lexicographically smallest argument so repeated runs are bit-identical.

use std::cmp::Ordering;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// `1 / phi`
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSearchSpec {
    pub lo: f64,
    pub hi: f64,
    pub coarse_points: usize,
    /// Absolute tolerance on the argument.
    pub tol: f64,
}

impl ScalarSearchSpec {
    pub fn new(lo: f64, hi: f64, coarse_points: usize, tol: f64) -> Result<Self> {
        let spec = Self {
            lo,
            hi,
            coarse_points,
            tol,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::SearchSpec(format!(
                "bounds [{}, {}] are not well ordered",
                self.lo, self.hi
            )));
        }
        if self.coarse_points < 3 {
            return Err(Error::SearchSpec("need at least 3 coarse points".into()));
        }
        if !(self.tol > 0.0 && self.tol < self.hi - self.lo) {
            return Err(Error::SearchSpec(format!(
                "tolerance {} must lie in (0, {})",
                self.tol,
                self.hi - self.lo
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchSpec {
    pub axes: Vec<Axis>,
    pub refinement_rounds: usize,
    pub shrink_factor: f64,
    /// Points evaluated in addition to every grid, e.g. a boundary that must
    /// be able to win.
    pub mandatory: Vec<Vec<f64>>,
}

impl GridSearchSpec {
    fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::SearchSpec("grid needs at least one axis".into()));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if !(a.lo.is_finite() && a.hi.is_finite() && a.lo <= a.hi) {
                return Err(Error::SearchSpec(format!(
                    "axis {i} bounds [{}, {}] are not well ordered",
                    a.lo, a.hi
                )));
            }
            if a.points < 3 {
                return Err(Error::SearchSpec(format!("axis {i} needs at least 3 points")));
            }
        }
        if !(self.shrink_factor > 1.0) {
            return Err(Error::SearchSpec("shrink factor must exceed 1".into()));
        }
        for p in &self.mandatory {
            if p.len() != self.axes.len() {
                return Err(Error::SearchSpec("mandatory point has wrong dimension".into()));
            }
            let inside = p
                .iter()
                .zip(&self.axes)
                .all(|(&x, a)| x >= a.lo && x <= a.hi);
            if !inside {
                return Err(Error::SearchSpec(format!("mandatory point {p:?} is outside the box")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Incumbent value after the coarse pass and after every refinement round.
    pub history: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

fn finite(x: &[f64], v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            arg: x.to_vec(),
            value: v,
        })
    }
}

/// `true` when `(x, v)` should replace the incumbent `(bx, bv)`.
fn better(x: &[f64], v: f64, bx: &[f64], bv: f64) -> bool {
    match v.partial_cmp(&bv) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Equal) => x.partial_cmp(bx) == Some(Ordering::Less),
        _ => false,
    }
}

/// Maximizes `f` on `[lo, hi]`: coarse grid, then golden-section search inside
/// the bracket around the best grid point. Returns `(x*, f(x*))`; `f(x*)` is
/// never below the best coarse-grid value.
pub fn maximize_scalar<F>(mut f: F, spec: &ScalarSearchSpec) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    spec.validate()?;
    let n = spec.coarse_points;
    let grid: Vec<f64> = linspace(spec.lo, spec.hi, n).collect();
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = finite(&[x], f(x))?;
        if v > best_v {
            best_i = i;
            best_v = v;
        }
    }
    let mut best_x = grid[best_i];

    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(n - 1)];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = finite(&[c], f(c))?;
    let mut fd = finite(&[d], f(d))?;
    while b - a > spec.tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = finite(&[c], f(c))?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = finite(&[d], f(d))?;
        }
    }
    let (gx, gv) = if fc >= fd { (c, fc) } else { (d, fd) };
    if better(&[gx], gv, &[best_x], best_v) {
        best_x = gx;
        best_v = gv;
    }
    Ok((best_x, best_v))
}

/// Grid search over a box with successive shrinking refinements centered on
/// the incumbent. Refined grids are clipped to the original box and the
/// mandatory points take part in the coarse pass. A mandatory incumbent is
/// only displaced by a strictly better grid point; other ties go to the
/// lexicographically smallest point.
pub fn maximize_grid<F>(mut f: F, spec: &GridSearchSpec) -> Result<GridOptimum>
where
    F: FnMut(&[f64]) -> f64,
{
    spec.validate()?;
    let dim = spec.axes.len();
    let mut best_x: Vec<f64> = Vec::new();
    let mut best_v = f64::NEG_INFINITY;
    let mut pinned = false;

    let mut consider = |x: &[f64], mandatory: bool, best_x: &mut Vec<f64>, best_v: &mut f64| -> Result<()> {
        let v = finite(x, f(x))?;
        let replace = if best_x.is_empty() || v > *best_v {
            true
        } else if v == *best_v && pinned != mandatory {
            mandatory
        } else {
            better(x, v, best_x, *best_v)
        };
        if replace {
            *best_x = x.to_vec();
            *best_v = v;
            pinned = mandatory;
        }
        Ok(())
    };

    for p in &spec.mandatory {
        consider(p, true, &mut best_x, &mut best_v)?;
    }

    let mut bounds: Vec<(f64, f64)> = spec.axes.iter().map(|a| (a.lo, a.hi)).collect();
    let mut history = Vec::with_capacity(spec.refinement_rounds + 1);
    for round in 0..=spec.refinement_rounds {
        if round > 0 {
            for (k, axis) in spec.axes.iter().enumerate() {
                let half = (bounds[k].1 - bounds[k].0) / (2.0 * spec.shrink_factor);
                let lo = (best_x[k] - half).max(axis.lo);
                let hi = (best_x[k] + half).min(axis.hi);
                bounds[k] = (lo, hi);
            }
        }
        let axes: Vec<Vec<f64>> = spec
            .axes
            .iter()
            .zip(&bounds)
            .map(|(a, &(lo, hi))| {
                if hi > lo {
                    linspace(lo, hi, a.points).collect()
                } else {
                    vec![lo]
                }
            })
            .collect();
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        'grid: loop {
            for k in 0..dim {
                x[k] = axes[k][idx[k]];
            }
            consider(&x, false, &mut best_x, &mut best_v)?;
            // odometer, last axis fastest
            let mut k = dim;
            loop {
                if k == 0 {
                    break 'grid;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        history.push(best_v);
    }
    Ok(GridOptimum {
        x: best_x,
        value: best_v,
        history,
    })
}

/// Exhaustive maximization over an integer range; ties go to the smaller
/// argument.
pub fn scan_discrete<F, E>(mut f: F, domain: RangeInclusive<u32>) -> std::result::Result<(u32, f64), E>
where
    F: FnMut(u32) -> std::result::Result<f64, E>,
    E: From<Error>,
{
    let mut best: Option<(u32, f64)> = None;
    for k in domain.clone() {
        let v = f(k)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                arg: vec![k as f64],
                value: v,
            }
            .into());
        }
        if best.map_or(true, |(_, bv)| v > bv) {
            best = Some((k, v));
        }
    }
    best.ok_or_else(|| {
        Error::SearchSpec(format!(
            "empty discrete domain {}..={}",
            domain.start(),
            domain.end()
        ))
        .into()
    })
}
