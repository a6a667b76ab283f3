//! Distribution of the robust log-likelihood ratio `ln l_hat(Y)`, single
//! sample error probabilities and Cramér rate functions.
//!
//! A [`MixedDensity`] stores the law of `ln l_hat(Y)` as cell masses on a
//! uniform grid plus point masses. Point masses come from flat branches of
//! `l_hat`: the clip levels of the contamination tests and the unit branch
//! of the KL-ball test.

use serde::{Deserialize, Serialize};

use crate::density::{Density, LevelCdf, NominalDensity};
use crate::error::{Error, Result};
use crate::lfd::{HTestSolution, MTestSolution, PiecewiseLLR, Tie};
use crate::model::{NominalModel, Region};
use crate::quadrature::Quadrature;
use crate::roots::{bisect, golden_max};

/// Default number of cells of a [`MixedDensity`].
pub const DEFAULT_CELLS: usize = 4096;

/// Tail mass trimmed from each end of the continuous part before gridding.
const TAIL_TRIM: f64 = 1e-14;

/// Two atoms closer than this are the same point.
const ATOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
    /// Probability of deciding for `H1` when the statistic sits on this atom
    /// at a threshold tie.
    pub reject_fraction: f64,
}

/// Grid placement for [`MixedDensity`] construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    /// This many cells spanning the continuous part.
    Cells(usize),
    /// Cells of this width centred on the lattice `k * step`.
    Step(f64),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Cells(DEFAULT_CELLS)
    }
}

/// Law of a real random variable: cell masses on a uniform grid (cell `i`
/// centred at `x0 + i dx`) plus atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedDensity {
    pub x0: f64,
    pub dx: f64,
    /// Continuous density values at the cell centres.
    pub pdf: Vec<f64>,
    pub atoms: Vec<Atom>,
}

impl MixedDensity {
    /// A single atom.
    pub fn point(location: f64, reject_fraction: f64) -> Self {
        Self { x0: location, dx: 1.0, pdf: Vec::new(), atoms: vec![Atom { location, mass: 1.0, reject_fraction }] }
    }

    /// Cell centres.
    pub fn grid(&self) -> Vec<f64> {
        (0..self.pdf.len()).map(|i| self.x0 + i as f64 * self.dx).collect()
    }

    pub fn cell_masses(&self) -> Vec<f64> {
        self.pdf.iter().map(|p| p * self.dx).collect()
    }

    pub fn continuous_mass(&self) -> f64 {
        self.pdf.iter().sum::<f64>() * self.dx
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.atom_mass()
    }

    pub fn mean(&self) -> f64 {
        let c: f64 = self.pdf.iter().enumerate().map(|(i, p)| p * (self.x0 + i as f64 * self.dx)).sum::<f64>() * self.dx;
        c + self.atoms.iter().map(|a| a.mass * a.location).sum::<f64>()
    }

    /// Mass of the continuous part at or below `t`, uniform within cells.
    pub fn continuous_cdf(&self, t: f64) -> f64 {
        if self.pdf.is_empty() {
            return 0.0;
        }
        let start = self.x0 - 0.5 * self.dx;
        let pos = (t - start) / self.dx;
        if pos <= 0.0 {
            return 0.0;
        }
        let n = self.pdf.len();
        if pos >= n as f64 {
            return self.continuous_mass();
        }
        let i = pos.floor() as usize;
        let full: f64 = self.pdf[..i].iter().sum::<f64>();
        (full + self.pdf[i] * (pos - i as f64)) * self.dx
    }

    /// `P[X > t]` with atoms exactly at `t` counted by their rejection
    /// fraction.
    pub fn upper_tail(&self, t: f64) -> f64 {
        let mut p = self.continuous_mass() - self.continuous_cdf(t);
        for a in &self.atoms {
            if is_at(a.location, t) {
                p += a.mass * a.reject_fraction;
            } else if a.location > t {
                p += a.mass;
            }
        }
        p.max(0.0)
    }

    /// `P[X < t]` with atoms exactly at `t` counted by their acceptance
    /// fraction.
    pub fn lower_tail(&self, t: f64) -> f64 {
        let mut p = self.continuous_cdf(t);
        for a in &self.atoms {
            if is_at(a.location, t) {
                p += a.mass * (1.0 - a.reject_fraction);
            } else if a.location < t {
                p += a.mass;
            }
        }
        p.max(0.0)
    }
}

fn is_at(location: f64, t: f64) -> bool {
    (location - t).abs() <= ATOM_TOL * (1.0 + t.abs())
}

/// `(alpha, beta)` of the test that decides for `H1` when the statistic
/// exceeds `t`: `alpha = P0[X > t]`, `beta = P1[X < t]`, ties randomized by
/// the atoms' fractions.
pub fn error_probabilities(d0: &MixedDensity, d1: &MixedDensity, t: f64) -> (f64, f64) {
    (d0.upper_tail(t), d1.lower_tail(t))
}

/// An increasing map `t = slope * x + offset` applied to `ln l` restricted to
/// `(x_lo, x_hi)`, weighted by `weight` under a level distribution.
struct Piece<'a> {
    weight: f64,
    levels: &'a LevelCdf,
    x_lo: f64,
    x_hi: f64,
    slope: f64,
    offset: f64,
}

impl Piece<'_> {
    fn t_range(&self) -> (f64, f64) {
        (self.slope * self.x_lo + self.offset, self.slope * self.x_hi + self.offset)
    }

    /// Mass of this piece with `t <= s`.
    fn cdf(&self, s: f64) -> f64 {
        let x = ((s - self.offset) / self.slope).clamp(self.x_lo, self.x_hi);
        if x <= self.x_lo {
            return 0.0;
        }
        self.weight * self.levels.mass(&Region::open(self.x_lo, x))
    }
}

struct Builder<'a> {
    pieces: Vec<Piece<'a>>,
    atoms: Vec<Atom>,
}

impl Builder<'_> {
    fn cdf(&self, s: f64) -> f64 {
        self.pieces.iter().map(|p| p.cdf(s)).sum()
    }

    fn build(mut self, spec: GridSpec) -> Result<MixedDensity> {
        self.atoms.retain(|a| a.mass > 0.0);
        self.atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut atoms: Vec<Atom> = Vec::new();
        for a in self.atoms.drain(..) {
            match atoms.last_mut() {
                Some(last) if is_at(last.location, a.location) => {
                    let m = last.mass + a.mass;
                    last.reject_fraction = (last.reject_fraction * last.mass + a.reject_fraction * a.mass) / m;
                    last.mass = m;
                }
                _ => atoms.push(a),
            }
        }
        self.pieces.retain(|p| p.x_hi > p.x_lo && p.weight > 0.0);
        if self.pieces.is_empty() {
            return Ok(MixedDensity { x0: 0.0, dx: 1.0, pdf: Vec::new(), atoms });
        }
        let lo = self.pieces.iter().map(|p| p.t_range().0).fold(f64::INFINITY, f64::min);
        let hi = self.pieces.iter().map(|p| p.t_range().1).fold(f64::NEG_INFINITY, f64::max);
        let total = self.cdf(hi);
        if !(total > 0.0) {
            return Ok(MixedDensity { x0: 0.0, dx: 1.0, pdf: Vec::new(), atoms });
        }
        let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        let t_lo = if self.cdf(lo) >= TAIL_TRIM { lo } else { bisect(|s| self.cdf(s) - TAIL_TRIM, lo, hi, tol)? };
        let t_hi = if total - self.cdf(lo) <= TAIL_TRIM {
            hi
        } else {
            bisect(|s| total - self.cdf(s) - TAIL_TRIM, t_lo, hi, tol)?
        };
        let (x0, dx, n) = match spec {
            GridSpec::Cells(n) => {
                let n = n.max(1);
                let dx = ((t_hi - t_lo) / n as f64).max(1e-12);
                // zero, the usual threshold, lands on a cell edge
                let k_lo = (t_lo / dx).floor();
                let k_hi = (t_hi / dx).ceil();
                (k_lo * dx + 0.5 * dx, dx, ((k_hi - k_lo) as usize).max(1))
            }
            GridSpec::Step(step) => {
                if !(step > 0.0) {
                    return Err(Error::InvalidParameter(format!("grid step must be positive, got {step}")));
                }
                let k_lo = (t_lo / step).round() as i64;
                let k_hi = (t_hi / step).round() as i64;
                (k_lo as f64 * step, step, (k_hi - k_lo + 1).max(1) as usize)
            }
        };
        let mut edges = Vec::with_capacity(n + 1);
        for i in 0..=n {
            edges.push(x0 + (i as f64 - 0.5) * dx);
        }
        let cdf: Vec<f64> = edges.iter().map(|&e| self.cdf(e)).collect();
        let mut pdf: Vec<f64> = cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0) / dx).collect();
        // fold the trimmed tails into the end cells
        pdf[0] += cdf[0] / dx;
        pdf[n - 1] += (total - cdf[n]).max(0.0) / dx;
        Ok(MixedDensity { x0, dx, pdf, atoms })
    }
}

/// Law of `ln l_hat(Y)` when `Y` has the distribution behind `levels`.
///
/// Flat branches of `l_hat` become atoms; a branch with a log-interpolated
/// tie rule gets rejection fraction `E[delta_hat | branch]`.
pub fn pushforward(llr: &PiecewiseLLR, levels: &LevelCdf, spec: GridSpec, q: &Quadrature) -> Result<MixedDensity> {
    let model = llr.model();
    let density = levels.table().density().clone();
    let mut pieces = Vec::new();
    let mut atoms = Vec::new();
    for s in llr.segments() {
        let slope = s.formula.slope();
        if slope == 0.0 {
            let mass: f64 = s.regions.intervals().iter().map(|&(a, b)| levels.table().mass_between(a, b)).sum();
            let reject_fraction = match s.tie {
                Tie::Fraction { value } => value,
                Tie::LogInterp { .. } if mass > 0.0 => {
                    let w = model.integrate_set(&|y| llr.delta(y) * density.pdf(y), &s.regions, q)?;
                    (w / mass).clamp(0.0, 1.0)
                }
                Tie::LogInterp { .. } => 0.5,
            };
            atoms.push(Atom { location: s.formula.offset(), mass, reject_fraction });
        } else {
            pieces.push(Piece { weight: 1.0, levels, x_lo: s.x_lo, x_hi: s.x_hi, slope, offset: s.formula.offset() });
        }
    }
    Builder { pieces, atoms }.build(spec)
}

/// [`pushforward`] for an observation density given directly.
pub fn llr_density(
    llr: &PiecewiseLLR,
    observation: std::sync::Arc<dyn Density>,
    spec: GridSpec,
    q: &Quadrature,
) -> Result<MixedDensity> {
    let levels = LevelCdf::new(llr.model(), observation);
    pushforward(llr, &levels, spec, q)
}

/// Law of `ln l_hat` for the clipped test under its own least favorable
/// distribution `q_hat_j`, from the nominal level distributions: a copy of
/// the nominal law shifted by `ln b` and scaled by `1 - eps_j`, plus atoms at
/// `ln(b c_l)` and `ln(b c_u)`.
pub fn llr_density_h(model: &NominalModel, sol: &HTestSolution, hypothesis: usize, spec: GridSpec) -> Result<MixedDensity> {
    let g = [LevelCdf::nominal(model, 0), LevelCdf::nominal(model, 1)];
    let (ln_cl, ln_cu, ln_b) = (sol.c_l.ln(), sol.c_u.ln(), sol.b.ln());
    let f0_low = g[0].mass(&Region::at_most(ln_cl));
    let f1_high = g[1].mass(&Region::at_least(ln_cu));
    let (keep, lower, upper) = if hypothesis == 0 {
        let k = 1.0 - sol.eps0_c;
        (k, k * f0_low, k * f1_high / sol.c_u)
    } else {
        let k = 1.0 - sol.eps1_c;
        (k, sol.c_l * k * f0_low, k * f1_high)
    };
    let tie = 0.5;
    let builder = Builder {
        pieces: vec![Piece { weight: keep, levels: &g[hypothesis], x_lo: ln_cl, x_hi: ln_cu, slope: 1.0, offset: ln_b }],
        atoms: vec![
            Atom { location: ln_b + ln_cl, mass: lower, reject_fraction: tie },
            Atom { location: ln_b + ln_cu, mass: upper, reject_fraction: tie },
        ],
    };
    builder.build(spec)
}

/// Law of `ln l_hat` for the KL-ball test under `g_hat_j`, from the nominal
/// level distributions: two shifted, weighted copies of the nominal law and
/// an atom of mass `r / z` at zero for the band `l_l <= l <= l_u`.
pub fn llr_density_m(
    model: &NominalModel,
    sol: &MTestSolution,
    hypothesis: usize,
    spec: GridSpec,
    q: &Quadrature,
) -> Result<MixedDensity> {
    let g = [LevelCdf::nominal(model, 0), LevelCdf::nominal(model, 1)];
    let (a, b) = (sol.ln_l_l(), sol.ln_l_u());
    let (xmin, xmax) = (model.ln_l_min(), model.ln_l_max());
    let (w1, w3) = if hypothesis == 0 {
        (sol.l_l / sol.z, sol.l_u * sol.k / sol.z)
    } else {
        (1.0 / sol.z, sol.k / sol.z)
    };
    let j = hypothesis;
    let llr = sol.robust_llr();
    let band = model.level_set(&Region::between(a, b));
    let lfd = sol.density(0);
    let atom_mass = sol.middle_mass;
    let reject_fraction = if atom_mass > 0.0 {
        let w = model.integrate_set(&|y| llr.delta(y) * lfd.pdf(y), &band, q)?;
        (w / atom_mass).clamp(0.0, 1.0)
    } else {
        0.5
    };
    let builder = Builder {
        pieces: vec![
            Piece { weight: w1, levels: &g[j], x_lo: xmin, x_hi: a.max(xmin), slope: 1.0, offset: -a },
            Piece { weight: w3, levels: &g[j], x_lo: b.min(xmax), x_hi: xmax, slope: 1.0, offset: -b },
        ],
        atoms: vec![Atom { location: 0.0, mass: atom_mass, reject_fraction }],
    };
    builder.build(spec)
}

/// Nominal law of `ln l` under `f_j`.
pub fn nominal_llr_density(model: &NominalModel, j: usize, spec: GridSpec, q: &Quadrature) -> Result<MixedDensity> {
    let levels = LevelCdf::new(model, std::sync::Arc::new(NominalDensity::new(model, j)));
    pushforward(&PiecewiseLLR::nominal(model), &levels, spec, q)
}

/// One value of a rate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateValue {
    pub t: f64,
    pub rate: f64,
    pub argmax_u: f64,
}

/// Rate functions under both hypotheses at one `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub t: f64,
    pub i0: f64,
    pub i1: f64,
    pub argmax_u0: f64,
    pub argmax_u1: f64,
}

/// `ln M(u) = ln E[exp(u ln l_hat(Y))]` and `E_u[ln l_hat]` under the
/// exponentially tilted law.
pub fn log_mgf<D: Density + ?Sized>(llr: &PiecewiseLLR, observation: &D, u: f64, q: &Quadrature) -> Result<(f64, f64)> {
    let model = llr.model();
    let mut cuts = llr.breakpoints();
    cuts.extend(observation.breakpoints());
    cuts.extend(model.turning_points());
    let exponent = |y: f64| u * llr.ln_l_hat(y) + observation.ln_pdf(y);
    let shift = model.grid(1025).into_iter().map(exponent).fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::MgfInfinite { u });
    }
    let m = model.integrate_support(&|y| (exponent(y) - shift).exp(), &cuts, q)?;
    let d = model.integrate_support(&|y| llr.ln_l_hat(y) * (exponent(y) - shift).exp(), &cuts, q)?;
    let ln_m = m.ln() + shift;
    if !ln_m.is_finite() || !(m > 0.0) {
        return Err(Error::MgfInfinite { u });
    }
    Ok((ln_m, d / m))
}

/// Mean of `ln l_hat(Y)`.
pub fn mean_llr<D: Density + ?Sized>(llr: &PiecewiseLLR, observation: &D, q: &Quadrature) -> Result<f64> {
    Ok(log_mgf(llr, observation, 0.0, q)?.1)
}

/// Cramér rate `I(t) = sup_u (t u - ln M(u))` for the log ratio `ln l_hat`
/// under one observation density.
pub fn rate_function<D: Density + ?Sized>(llr: &PiecewiseLLR, observation: &D, t: f64, q: &Quadrature) -> Result<RateValue> {
    let (lo, hi) = llr.range();
    if !(t > lo && t < hi) {
        return Err(Error::OutOfRange { value: t, lo, hi });
    }
    let mut err = None;
    let mut slope = |u: f64| match log_mgf(llr, observation, u, q) {
        Ok((_, d)) => t - d,
        Err(e) => {
            err = Some(e);
            0.0
        }
    };
    // bracket the maximizer by the sign of the derivative t - E_u[ln l_hat]
    let dir = if slope(0.0) >= 0.0 { 1.0 } else { -1.0 };
    let mut far = dir;
    let mut near = 0.0;
    while dir * slope(far) > 0.0 {
        near = far;
        far *= 2.0;
        if far.abs() > 1e6 {
            break;
        }
    }
    if let Some(e) = err.take() {
        return Err(e);
    }
    let (a, b) = if dir > 0.0 { (near, far) } else { (far, near) };
    let (u, v) = golden_max(
        |u| match log_mgf(llr, observation, u, q) {
            Ok((ln_m, _)) => t * u - ln_m,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        a,
        b,
        1e-11 * (1.0 + b.abs().max(a.abs())),
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(RateValue { t, rate: v.max(0.0), argmax_u: u })
}

/// Both rate functions at `t`.
pub fn rate_point<A: Density + ?Sized, B: Density + ?Sized>(
    llr: &PiecewiseLLR,
    q0: &A,
    q1: &B,
    t: f64,
    q: &Quadrature,
) -> Result<RatePoint> {
    let r0 = rate_function(llr, q0, t, q)?;
    let r1 = rate_function(llr, q1, t, q)?;
    Ok(RatePoint { t, i0: r0.rate, i1: r1.rate, argmax_u0: r0.argmax_u, argmax_u1: r1.argmax_u })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails_of_a_point_mass() {
        let d = MixedDensity::point(0.0, 0.25);
        assert_eq!(d.upper_tail(-1.0), 1.0);
        assert_eq!(d.upper_tail(0.0), 0.25);
        assert_eq!(d.lower_tail(0.0), 0.75);
        assert_eq!(d.upper_tail(1.0), 0.0);
    }

    #[test]
    fn nominal_law_is_gaussian() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let q = Quadrature::default();
        let m = NominalModel::gaussian(-1.0, 1.0, 1.0, 1.0).unwrap();
        // ln l = 2y, so ln l ~ N(-2, 2) under f0
        let d = nominal_llr_density(&m, 0, GridSpec::default(), &q).unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        assert!(d.atoms.is_empty());
        let n = Normal::new(-2.0, 2.0).unwrap();
        for t in [-5.0, -2.0, 0.0, 1.5] {
            assert!((d.upper_tail(t) - (1.0 - n.cdf(t))).abs() < 1e-5, "{t}");
        }
        assert!((d.mean() + 2.0).abs() < 1e-6);
    }

    #[test]
    fn lattice_grid() {
        let q = Quadrature::default();
        let m = NominalModel::gaussian(-1.0, 1.0, 1.0, 1.0).unwrap();
        let d = nominal_llr_density(&m, 1, GridSpec::Step(0.005), &q).unwrap();
        assert_eq!(d.dx, 0.005);
        assert!(((d.x0 / 0.005).round() * 0.005 - d.x0).abs() < 1e-12);
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mgf_at_zero_and_one() {
        let q = Quadrature::default();
        let m = NominalModel::gaussian(-1.0, 1.0, 1.0, 2.0).unwrap();
        let llr = PiecewiseLLR::nominal(&m);
        let f0 = NominalDensity::new(&m, 0);
        assert!(log_mgf(&llr, &f0, 0.0, &q).unwrap().0.abs() < 1e-12);
        assert!(log_mgf(&llr, &f0, 1.0, &q).unwrap().0.abs() < 1e-10);
    }

    #[test]
    fn rate_vanishes_at_the_mean() {
        let q = Quadrature::default();
        let m = NominalModel::gaussian(-1.0, 1.0, 1.0, 1.0).unwrap();
        let llr = PiecewiseLLR::nominal(&m);
        let f0 = NominalDensity::new(&m, 0);
        let r = rate_function(&llr, &f0, -2.0, &q).unwrap();
        assert!(r.rate < 1e-12 && r.argmax_u.abs() < 1e-5);
        // Gaussian ln l ~ N(-2, 4): I(t) = (t + 2)^2 / 8
        let r = rate_function(&llr, &f0, 1.0, &q).unwrap();
        assert!((r.rate - 9.0 / 8.0).abs() < 1e-9, "{}", r.rate);
        assert!(rate_function(&llr, &f0, 1e3, &q).is_err());
    }
}
