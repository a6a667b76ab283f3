use serde::{Deserialize, Serialize};

use crate::model::{IntervalSet, NominalModel, Region};

/// Closed form of `l_hat` on one segment, as a function of the nominal
/// ratio `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Formula {
    /// `l_hat = exp(ln_value)`
    Constant { ln_value: f64 },
    /// `l_hat = exp(ln_scale) * l`
    ScaledNominal { ln_scale: f64 },
    /// `l_hat = exp(ln_scale) * l^exponent`
    Power { ln_scale: f64, exponent: f64 },
}

impl Formula {
    pub fn slope(&self) -> f64 {
        match *self {
            Formula::Constant { .. } => 0.0,
            Formula::ScaledNominal { .. } => 1.0,
            Formula::Power { exponent, .. } => exponent,
        }
    }

    pub fn offset(&self) -> f64 {
        match *self {
            Formula::Constant { ln_value } => ln_value,
            Formula::ScaledNominal { ln_scale } | Formula::Power { ln_scale, .. } => ln_scale,
        }
    }

    /// `ln l_hat` at `x = ln l`.
    pub fn ln_value(&self, x: f64) -> f64 {
        match *self {
            Formula::Constant { ln_value } => ln_value,
            _ => self.offset() + self.slope() * x,
        }
    }

    fn from_line(slope: f64, offset: f64) -> Self {
        if slope == 0.0 {
            Formula::Constant { ln_value: offset }
        } else if slope == 1.0 {
            Formula::ScaledNominal { ln_scale: offset }
        } else {
            Formula::Power { ln_scale: offset, exponent: slope }
        }
    }
}

/// How a segment on which `l_hat = 1` randomizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Tie {
    /// `delta = (x - lo) / (hi - lo)` for `x = ln l`.
    LogInterp { lo: f64, hi: f64 },
    /// A fixed rejection probability.
    Fraction { value: f64 },
}

/// One branch of a piecewise likelihood ratio: an interval of `x = ln l`,
/// the formula that applies there and the y-intervals it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub x_lo: f64,
    pub x_hi: f64,
    pub formula: Formula,
    pub tie: Tie,
    pub regions: IntervalSet,
}

impl Segment {
    pub fn is_flat(&self) -> bool {
        self.formula.slope() == 0.0
    }
}

/// A robust likelihood ratio `l_hat(y) = phi(ln l(y))` with `phi` piecewise
/// linear in `x = ln l`, together with its randomized decision rule
/// `delta_hat`.
#[derive(Debug, Clone)]
pub struct PiecewiseLLR {
    model: NominalModel,
    segments: Vec<Segment>,
}

/// Rejection probability on flat segments at the threshold that carry no
/// other rule.
pub const DEFAULT_TIE_FRACTION: f64 = 0.5;

impl PiecewiseLLR {
    /// Builds the ratio from `(x_hi, formula, tie)` triples covering the
    /// range of `ln l` from left to right. The last segment extends to the
    /// supremum of `ln l`; segments outside the range are dropped.
    pub fn from_parts(model: &NominalModel, parts: &[(f64, Formula, Tie)]) -> Self {
        let (xmin, xmax) = (model.ln_l_min(), model.ln_l_max());
        let mut segments: Vec<Segment> = Vec::new();
        let mut lo = xmin;
        for (i, &(hi, formula, tie)) in parts.iter().enumerate() {
            let hi = if i + 1 == parts.len() { xmax } else { hi.min(xmax) };
            if hi > lo || (segments.is_empty() && i + 1 == parts.len()) {
                segments.push(Segment { x_lo: lo, x_hi: hi.max(lo), formula, tie, regions: IntervalSet::empty() });
                lo = hi.max(lo);
            }
        }
        let mut llr = Self { model: model.clone(), segments };
        llr.merge_constants();
        llr.resolve_regions();
        llr
    }

    /// `l_hat = l`.
    pub fn nominal(model: &NominalModel) -> Self {
        Self::from_parts(
            model,
            &[(f64::INFINITY, Formula::ScaledNominal { ln_scale: 0.0 }, Tie::Fraction { value: DEFAULT_TIE_FRACTION })],
        )
    }

    /// The KL-ball robust ratio: `l / l_l` below `ln l_l = a`, one between
    /// `a` and `b = ln l_u`, and `l / l_u` above `b`.
    pub fn m_test(model: &NominalModel, a: f64, b: f64) -> Self {
        let tie = if b > a { Tie::LogInterp { lo: a, hi: b } } else { Tie::Fraction { value: DEFAULT_TIE_FRACTION } };
        Self::from_parts(
            model,
            &[
                (a, Formula::ScaledNominal { ln_scale: -a }, tie),
                (b, Formula::Constant { ln_value: 0.0 }, tie),
                (f64::INFINITY, Formula::ScaledNominal { ln_scale: -b }, tie),
            ],
        )
    }

    /// `l_hat = exp(ln_scale) l^exponent` everywhere.
    pub fn power(model: &NominalModel, ln_scale: f64, exponent: f64) -> Self {
        Self::from_parts(
            model,
            &[(f64::INFINITY, Formula::from_line(exponent, ln_scale), Tie::Fraction { value: DEFAULT_TIE_FRACTION })],
        )
    }

    fn merge_constants(&mut self) {
        let mut out: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for s in self.segments.drain(..) {
            if let Some(last) = out.last_mut() {
                if last.is_flat() && s.is_flat() && last.formula.offset() == s.formula.offset() {
                    last.x_hi = s.x_hi;
                    continue;
                }
            }
            out.push(s);
        }
        self.segments = out;
    }

    fn resolve_regions(&mut self) {
        let n = self.segments.len();
        for (i, s) in self.segments.iter_mut().enumerate() {
            let r = if n == 1 {
                Region::all()
            } else if i == 0 {
                Region::below(s.x_hi)
            } else if i + 1 == n {
                Region::at_least(s.x_lo)
            } else {
                Region { lo: s.x_lo, hi: s.x_hi, lo_closed: true, hi_closed: false }
            };
            s.regions = self.model.level_set(&r);
        }
    }

    pub fn model(&self) -> &NominalModel {
        &self.model
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn segment_index(&self, x: f64) -> usize {
        let i = self.segments.partition_point(|s| s.x_hi <= x);
        i.min(self.segments.len() - 1)
    }

    pub fn segment_at(&self, x: f64) -> &Segment {
        &self.segments[self.segment_index(x)]
    }

    /// `phi(x) = ln l_hat` for `x = ln l`.
    pub fn ln_l_hat_x(&self, x: f64) -> f64 {
        self.segment_at(x).formula.ln_value(x)
    }

    pub fn ln_l_hat(&self, y: f64) -> f64 {
        self.ln_l_hat_x(self.model.ln_l(y))
    }

    pub fn l_hat(&self, y: f64) -> f64 {
        self.ln_l_hat(y).exp()
    }

    /// Rejection probability of the single-sample test at `x = ln l`.
    pub fn delta_x(&self, x: f64) -> f64 {
        let s = self.segment_at(x);
        let v = s.formula.ln_value(x);
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            0.0
        } else {
            tie_value(&s.tie, x)
        }
    }

    pub fn delta(&self, y: f64) -> f64 {
        self.delta_x(self.model.ln_l(y))
    }

    /// Smallest and largest value of `ln l_hat` on the support.
    pub fn range(&self) -> (f64, f64) {
        let first = &self.segments[0];
        let last = &self.segments[self.segments.len() - 1];
        (first.formula.ln_value(first.x_lo), last.formula.ln_value(last.x_hi))
    }

    /// True if `ln l_hat` never decreases as `ln l` grows.
    pub fn is_non_decreasing(&self) -> bool {
        let tol = 1e-12;
        self.segments.iter().all(|s| s.formula.slope() >= 0.0)
            && self.segments.windows(2).all(|w| {
                w[1].formula.ln_value(w[1].x_lo) >= w[0].formula.ln_value(w[0].x_hi) - tol
            })
    }

    /// `sup { x : phi(x) <= t }`, or `-inf` if `phi > t` everywhere.
    pub fn x_upper(&self, t: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for s in &self.segments {
            let (v_lo, v_hi) = (s.formula.ln_value(s.x_lo), s.formula.ln_value(s.x_hi));
            if v_lo > t {
                break;
            }
            best = if v_hi <= t {
                s.x_hi
            } else {
                ((t - s.formula.offset()) / s.formula.slope()).clamp(s.x_lo, s.x_hi)
            };
        }
        best
    }

    /// `inf { x : phi(x) >= t }`, or `+inf` if `phi < t` everywhere.
    pub fn x_lower(&self, t: f64) -> f64 {
        for s in &self.segments {
            let (v_lo, v_hi) = (s.formula.ln_value(s.x_lo), s.formula.ln_value(s.x_hi));
            if v_hi < t {
                continue;
            }
            return if v_lo >= t {
                s.x_lo
            } else {
                ((t - s.formula.offset()) / s.formula.slope()).clamp(s.x_lo, s.x_hi)
            };
        }
        f64::INFINITY
    }

    /// The ratio `shift + clamp(phi, lo, hi)`.
    pub fn clipped(&self, lo: f64, hi: f64, shift: f64) -> Self {
        let fraction = Tie::Fraction { value: DEFAULT_TIE_FRACTION };
        let mut parts: Vec<(f64, Formula, Tie)> = Vec::new();
        for s in &self.segments {
            let slope = s.formula.slope();
            let off = s.formula.offset();
            if slope == 0.0 {
                let v = off.clamp(lo, hi);
                let tie = if v == off { s.tie } else { fraction };
                parts.push((s.x_hi, Formula::Constant { ln_value: shift + v }, tie));
                continue;
            }
            // x where the line crosses lo and hi
            let x_at_lo = ((lo - off) / slope).clamp(s.x_lo, s.x_hi);
            let x_at_hi = ((hi - off) / slope).clamp(s.x_lo, s.x_hi);
            if x_at_lo > s.x_lo {
                parts.push((x_at_lo, Formula::Constant { ln_value: shift + lo }, fraction));
            }
            if x_at_hi > x_at_lo {
                parts.push((x_at_hi, Formula::from_line(slope, off + shift), s.tie));
            }
            if s.x_hi > x_at_hi {
                parts.push((s.x_hi, Formula::Constant { ln_value: shift + hi }, fraction));
            }
        }
        Self::from_parts(&self.model, &parts)
    }

    /// All y-points where the branch changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segments.iter().flat_map(|s| s.regions.endpoints()).collect();
        let (lo, hi) = self.model.support();
        v.retain(|y| *y > lo && *y < hi);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

fn tie_value(tie: &Tie, x: f64) -> f64 {
    match *tie {
        Tie::LogInterp { lo, hi } => {
            if hi > lo {
                ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                DEFAULT_TIE_FRACTION
            }
        }
        Tie::Fraction { value } => value,
    }
}
