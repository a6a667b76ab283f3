//! The nominal density pair and region arithmetic on its likelihood ratio.
//!
//! A [`NominalModel`] holds the log densities of `f0` and `f1` on a finite
//! support interval. Every region used by the solvers is a level set of
//! `x(y) = ln l(y) = ln f1(y) - ln f0(y)`, described by a [`Region`] in
//! x-space and resolved to an [`IntervalSet`] in y-space. Resolution works for
//! non-monotone likelihood ratios: the support is split into pieces on which
//! `x` is monotone, and crossings are found by bisection on each piece.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::roots::{bisect, golden_max};

/// Log density of one nominal distribution.
pub type LogPdf = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of scan intervals used to locate the monotone pieces of `ln l`.
pub const SCAN_NODES: usize = 4096;

/// Half-width of the Gaussian support in standard deviations. Each tail
/// beyond 7 sd holds about 1.3e-12 of mass.
const GAUSSIAN_SD_SPAN: f64 = 7.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Closed-form descriptor of a nominal density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// Normal distribution with the given mean and standard deviation.
    Gaussian { mean: f64, sd: f64 },
    /// A user-supplied log density.
    Custom { name: String },
}

impl Family {
    pub fn gaussian(mean: f64, sd: f64) -> Self {
        Family::Gaussian { mean, sd }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Family::Gaussian { mean, sd } => {
                if !mean.is_finite() || !(sd.is_finite() && *sd > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian needs a finite mean and positive sd, got mean {mean}, sd {sd}"
                    )));
                }
                Ok(())
            }
            Family::Custom { .. } => Ok(()),
        }
    }

    fn log_pdf(&self) -> Option<LogPdf> {
        match *self {
            Family::Gaussian { mean, sd } => {
                let ln_sd = sd.ln();
                Some(Arc::new(move |y: f64| {
                    let z = (y - mean) / sd;
                    -0.5 * z * z - ln_sd - LN_SQRT_2PI
                }))
            }
            Family::Custom { .. } => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Gaussian { mean, sd } => write!(f, "N({mean}, sd {sd})"),
            Family::Custom { name } => write!(f, "{name}"),
        }
    }
}

/// A finite union of disjoint closed intervals, sorted by left endpoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        let mut s = Self::empty();
        s.push(lo, hi);
        s
    }

    /// Builds a set from arbitrary intervals, merging overlaps and touching
    /// neighbours and dropping empty ones.
    pub fn from_intervals(mut raw: Vec<(f64, f64)>) -> Self {
        raw.retain(|(a, b)| b > a);
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut s = Self::empty();
        for (a, b) in raw {
            s.push(a, b);
        }
        s
    }

    fn push(&mut self, lo: f64, hi: f64) {
        if !(hi > lo) {
            return;
        }
        if let Some(last) = self.intervals.last_mut() {
            if lo <= last.1 {
                last.1 = last.1.max(hi);
                return;
            }
        }
        self.intervals.push((lo, hi));
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= y && y <= b)
    }

    /// All interval endpoints in increasing order.
    pub fn endpoints(&self) -> Vec<f64> {
        self.intervals.iter().flat_map(|&(a, b)| [a, b]).collect()
    }
}

/// A set of values of `x = ln l`, an interval with open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Region {
    pub fn all() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY, lo_closed: true, hi_closed: true }
    }

    /// `x < c`
    pub fn below(c: f64) -> Self {
        Self { lo: f64::NEG_INFINITY, hi: c, lo_closed: true, hi_closed: false }
    }

    /// `x <= c`
    pub fn at_most(c: f64) -> Self {
        Self { lo: f64::NEG_INFINITY, hi: c, lo_closed: true, hi_closed: true }
    }

    /// `x > c`
    pub fn above(c: f64) -> Self {
        Self { lo: c, hi: f64::INFINITY, lo_closed: false, hi_closed: true }
    }

    /// `x >= c`
    pub fn at_least(c: f64) -> Self {
        Self { lo: c, hi: f64::INFINITY, lo_closed: true, hi_closed: true }
    }

    /// `a <= x <= b`
    pub fn between(a: f64, b: f64) -> Self {
        Self { lo: a, hi: b, lo_closed: true, hi_closed: true }
    }

    /// `a < x < b`
    pub fn open(a: f64, b: f64) -> Self {
        Self { lo: a, hi: b, lo_closed: false, hi_closed: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above_lo = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below_hi = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above_lo && below_hi
    }
}

/// A maximal sub-interval of the support on which `ln l` is monotone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonePiece {
    pub y_lo: f64,
    pub y_hi: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl MonotonePiece {
    pub fn increasing(&self) -> bool {
        self.x_hi > self.x_lo
    }

    pub fn is_constant(&self) -> bool {
        self.x_hi == self.x_lo
    }

    pub fn x_min(&self) -> f64 {
        self.x_lo.min(self.x_hi)
    }

    pub fn x_max(&self) -> f64 {
        self.x_lo.max(self.x_hi)
    }
}

struct Inner {
    f0: LogPdf,
    f1: LogPdf,
    families: [Family; 2],
    support: (f64, f64),
    pieces: Vec<MonotonePiece>,
}

/// The nominal pair `(f0, f1)` on a truncated support.
///
/// Cloning is cheap; clones share the densities and the monotone-piece
/// table.
#[derive(Clone)]
pub struct NominalModel {
    inner: Arc<Inner>,
}

impl fmt::Debug for NominalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NominalModel")
            .field("f0", &self.inner.families[0])
            .field("f1", &self.inner.families[1])
            .field("support", &self.inner.support)
            .field("pieces", &self.inner.pieces.len())
            .finish()
    }
}

impl NominalModel {
    /// Two Gaussian nominals `N(mean0, sd0)` and `N(mean1, sd1)`.
    ///
    /// The support is the union of `mean_j +- 7 sd_j`, and both densities
    /// are renormalized to unit mass on it.
    pub fn gaussian(mean0: f64, sd0: f64, mean1: f64, sd1: f64) -> Result<Self> {
        Self::from_families(Family::gaussian(mean0, sd0), Family::gaussian(mean1, sd1))
    }

    /// Builds a model from two closed-form families.
    pub fn from_families(fam0: Family, fam1: Family) -> Result<Self> {
        fam0.validate()?;
        fam1.validate()?;
        let support = match (&fam0, &fam1) {
            (Family::Gaussian { mean: m0, sd: s0 }, Family::Gaussian { mean: m1, sd: s1 }) => (
                (m0 - GAUSSIAN_SD_SPAN * s0).min(m1 - GAUSSIAN_SD_SPAN * s1),
                (m0 + GAUSSIAN_SD_SPAN * s0).max(m1 + GAUSSIAN_SD_SPAN * s1),
            ),
            _ => {
                return Err(Error::InvalidParameter(
                    "custom families need an explicit support; use NominalModel::new".into(),
                ))
            }
        };
        let q = Quadrature::default();
        let mut lp = Vec::with_capacity(2);
        for fam in [&fam0, &fam1] {
            let raw = fam.log_pdf().expect("closed-form family");
            // renormalize on the truncated support so every mass sums to one
            let mass = q.integrate(&|y| raw(y).exp(), support.0, support.1)?;
            let shift = mass.ln();
            lp.push(Arc::new(move |y: f64| raw(y) - shift) as LogPdf);
        }
        let f1 = lp.pop().unwrap();
        let f0 = lp.pop().unwrap();
        Self::build(f0, f1, [fam0, fam1], support)
    }

    /// Builds a model from arbitrary log densities on `support`.
    ///
    /// Both densities must integrate to one over the support within 1e-8.
    pub fn new(f0: LogPdf, f1: LogPdf, support: (f64, f64)) -> Result<Self> {
        let families = [
            Family::Custom { name: "f0".into() },
            Family::Custom { name: "f1".into() },
        ];
        let model = Self::build(f0, f1, families, support)?;
        let q = Quadrature::default();
        for j in 0..2 {
            let mass = model.integrate(&|y| model.f(j, y), &Region::all(), &q)?;
            if (mass - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidParameter(format!(
                    "density f{j} has mass {mass} on the support"
                )));
            }
        }
        Ok(model)
    }

    fn build(f0: LogPdf, f1: LogPdf, families: [Family; 2], support: (f64, f64)) -> Result<Self> {
        let (lo, hi) = support;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidParameter(format!("invalid support [{lo}, {hi}]")));
        }
        let ln_l = |y: f64| f1(y) - f0(y);
        let pieces = monotone_pieces(&ln_l, lo, hi, SCAN_NODES)?;
        Ok(Self { inner: Arc::new(Inner { f0, f1, families, support, pieces }) })
    }

    /// The same pair with the roles of `f0` and `f1` exchanged.
    pub fn swapped(&self) -> Self {
        let i = &self.inner;
        let pieces = i
            .pieces
            .iter()
            .map(|p| MonotonePiece { y_lo: p.y_lo, y_hi: p.y_hi, x_lo: -p.x_lo, x_hi: -p.x_hi })
            .collect();
        Self {
            inner: Arc::new(Inner {
                f0: i.f1.clone(),
                f1: i.f0.clone(),
                families: [i.families[1].clone(), i.families[0].clone()],
                support: i.support,
                pieces,
            }),
        }
    }

    pub fn family(&self, j: usize) -> &Family {
        &self.inner.families[j]
    }

    pub fn support(&self) -> (f64, f64) {
        self.inner.support
    }

    pub fn width(&self) -> f64 {
        self.inner.support.1 - self.inner.support.0
    }

    pub fn ln_f(&self, j: usize, y: f64) -> f64 {
        if j == 0 {
            (self.inner.f0)(y)
        } else {
            (self.inner.f1)(y)
        }
    }

    pub fn f(&self, j: usize, y: f64) -> f64 {
        self.ln_f(j, y).exp()
    }

    pub fn log_pdf(&self, j: usize) -> LogPdf {
        if j == 0 {
            self.inner.f0.clone()
        } else {
            self.inner.f1.clone()
        }
    }

    /// `ln l(y) = ln f1(y) - ln f0(y)`.
    pub fn ln_l(&self, y: f64) -> f64 {
        (self.inner.f1)(y) - (self.inner.f0)(y)
    }

    pub fn l(&self, y: f64) -> f64 {
        self.ln_l(y).exp()
    }

    pub fn pieces(&self) -> &[MonotonePiece] {
        &self.inner.pieces
    }

    /// True when `ln l` is monotone over the whole support.
    pub fn is_monotone(&self) -> bool {
        self.inner.pieces.len() == 1
    }

    /// Essential infimum of `ln l` over the support.
    pub fn ln_l_min(&self) -> f64 {
        self.inner.pieces.iter().map(|p| p.x_min()).fold(f64::INFINITY, f64::min)
    }

    /// Essential supremum of `ln l` over the support.
    pub fn ln_l_max(&self) -> f64 {
        self.inner.pieces.iter().map(|p| p.x_max()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Points in y where the monotone pieces meet, excluding the support ends.
    pub fn turning_points(&self) -> Vec<f64> {
        let p = &self.inner.pieces;
        p.iter().skip(1).map(|p| p.y_lo).collect()
    }

    /// Resolves `{y in support : ln l(y) in region}` to intervals.
    pub fn level_set(&self, region: &Region) -> IntervalSet {
        let ln_l = |y: f64| self.ln_l(y);
        let mut raw = Vec::with_capacity(self.inner.pieces.len());
        for p in &self.inner.pieces {
            if p.is_constant() {
                if region.contains(p.x_lo) {
                    raw.push((p.y_lo, p.y_hi));
                }
                continue;
            }
            // position in y where x crosses c, clamped to the piece
            let cross = |c: f64| -> f64 {
                if c <= p.x_min() {
                    return if p.increasing() { p.y_lo } else { p.y_hi };
                }
                if c >= p.x_max() {
                    return if p.increasing() { p.y_hi } else { p.y_lo };
                }
                bisect(|y| ln_l(y) - c, p.y_lo, p.y_hi, 1e-14 * (1.0 + p.y_hi.abs().max(p.y_lo.abs())))
                    .unwrap_or(0.5 * (p.y_lo + p.y_hi))
            };
            let (ya, yb) = if p.increasing() {
                (cross(region.lo), cross(region.hi))
            } else {
                (cross(region.hi), cross(region.lo))
            };
            if yb > ya {
                raw.push((ya, yb));
            }
        }
        IntervalSet::from_intervals(raw)
    }

    /// `integral of g over {ln l in region}` with the model support as the
    /// reference length for the panel budget.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: &G, region: &Region, q: &Quadrature) -> Result<f64> {
        let set = self.level_set(region);
        self.integrate_set(g, &set, q)
    }

    /// Integral of `g` over an interval set.
    pub fn integrate_set<G: Fn(f64) -> f64>(&self, g: &G, set: &IntervalSet, q: &Quadrature) -> Result<f64> {
        let width = self.width();
        let mut total = 0.0;
        for &(a, b) in set.intervals() {
            total += q.integrate_with_reference(g, a, b, width)?;
        }
        Ok(total)
    }

    /// Integral of `g` over the whole support, split at `cuts` (points where
    /// `g` may have kinks).
    pub fn integrate_support<G: Fn(f64) -> f64>(&self, g: &G, cuts: &[f64], q: &Quadrature) -> Result<f64> {
        let (lo, hi) = self.support();
        let mut pts: Vec<f64> = cuts.iter().copied().filter(|c| *c > lo && *c < hi).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let width = self.width();
        let mut total = 0.0;
        let mut a = lo;
        for b in pts.into_iter().chain(std::iter::once(hi)) {
            total += q.integrate_with_reference(g, a, b, width)?;
            a = b;
        }
        Ok(total)
    }

    /// Nominal mass `F_j` of a region.
    pub fn mass(&self, j: usize, region: &Region, q: &Quadrature) -> Result<f64> {
        self.integrate(&|y| self.f(j, y), region, q)
    }

    /// A uniform grid of `n` points over the support, endpoints included.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.support();
        let n = n.max(2);
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Largest deviation `|f0(y) - f1(-y)|` over a grid of the support.
    pub fn symmetry_deviation(&self) -> f64 {
        let (lo, hi) = self.support();
        let span = hi.min(-lo);
        if span <= 0.0 {
            return f64::INFINITY;
        }
        if (hi + lo).abs() > 1e-9 * (hi - lo) {
            return f64::INFINITY;
        }
        (0..=SCAN_NODES)
            .map(|i| -span + 2.0 * span * i as f64 / SCAN_NODES as f64)
            .map(|y| (self.f(0, y) - self.f(1, -y)).abs())
            .fold(0.0, f64::max)
    }
}

fn monotone_pieces<F: Fn(f64) -> f64>(ln_l: &F, lo: f64, hi: f64, n: usize) -> Result<Vec<MonotonePiece>> {
    let h = (hi - lo) / n as f64;
    let ys: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + i as f64 * h }).collect();
    let xs: Vec<f64> = ys.iter().map(|&y| ln_l(y)).collect();
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "likelihood ratio is not finite at y = {}",
            ys[i]
        )));
    }
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let flat = 1e-13 * scale;
    let mut breaks = vec![lo];
    let mut dir = 0i8;
    for i in 1..=n {
        let d = xs[i] - xs[i - 1];
        let s = if d > flat {
            1
        } else if d < -flat {
            -1
        } else {
            0
        };
        if s == 0 {
            continue;
        }
        if dir != 0 && s != dir {
            // extremum lies within [y_{i-2}, y_i]
            let a = ys[i.saturating_sub(2)];
            let b = ys[i];
            let sign = dir as f64;
            let (y_ext, _) = golden_max(|y| sign * ln_l(y), a, b, 1e-12 * (1.0 + b.abs()));
            let prev = *breaks.last().unwrap();
            if y_ext > prev {
                breaks.push(y_ext);
            }
        }
        dir = s;
    }
    breaks.push(hi);
    let pieces = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (x_lo, x_hi) = (ln_l(w[0]), ln_l(w[1]));
            let constant = (x_hi - x_lo).abs() <= flat;
            MonotonePiece {
                y_lo: w[0],
                y_hi: w[1],
                x_lo,
                x_hi: if constant { x_lo } else { x_hi },
            }
        })
        .collect();
    Ok(pieces)
}
