//! Largest robustness parameters for which the robust tests exist.
//!
//! For the KL-ball tests the boundary is traced by the tilted family
//! `w(y; u) = f1(y)^u f0(y)^(1-u)` with normalizer `k(u)`. Along it
//!
//! ```text
//! eps0(u) = -ln k(u) + u       E_w[ln l]
//! eps1(u) = -ln k(u) + (u - 1) E_w[ln l]
//! ```
//!
//! with `eps0` increasing and `eps1` decreasing in `u`. The equal-radius
//! limit is the Chernoff distance; for mirror-image nominals it coincides
//! with the Bhattacharyya distance `-ln k(1/2)`.

use serde::{Deserialize, Serialize};

use crate::density::LevelCdf;
use crate::error::{Error, Result};
use crate::model::{NominalModel, Region};
use crate::quadrature::Quadrature;
use crate::roots::{bisect, golden_max_closed};

/// Tolerance on `u` for all bisections along the limit curve.
pub const U_TOL: f64 = 1e-12;

/// Default number of points of a limit curve.
pub const DEFAULT_GRID: usize = 201;

/// `ln k(u)` and the tilted mean `E_w[ln l]` at one value of `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tilt {
    pub u: f64,
    pub ln_k: f64,
    pub mean: f64,
}

impl Tilt {
    pub fn eps0(&self) -> f64 {
        -self.ln_k + self.u * self.mean
    }

    pub fn eps1(&self) -> f64 {
        -self.ln_k + (self.u - 1.0) * self.mean
    }
}

/// Evaluates the tilted family at `u`.
pub fn tilt(model: &NominalModel, u: f64, q: &Quadrature) -> Result<Tilt> {
    let cuts = model.turning_points();
    let w = |y: f64| (u * model.ln_l(y) + model.ln_f(0, y)).exp();
    let k = model.integrate_support(&w, &cuts, q)?;
    let m = model.integrate_support(&|y| w(y) * model.ln_l(y), &cuts, q)?;
    Ok(Tilt { u, ln_k: k.ln(), mean: m / k })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub u: f64,
    pub eps0: f64,
    pub eps1: f64,
}

/// The m-test limit curve sampled on a uniform grid of `u` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCurve {
    pub samples: Vec<LimitSample>,
}

impl LimitCurve {
    /// Number of strict monotonicity violations: steps where `eps0` fails
    /// to increase or `eps1` fails to decrease.
    pub fn monotonicity_violations(&self) -> usize {
        self.samples
            .windows(2)
            .filter(|w| !(w[1].eps0 > w[0].eps0) || !(w[1].eps1 < w[0].eps1))
            .count()
    }
}

pub fn m_limit_curve(model: &NominalModel, grid_size: usize, q: &Quadrature) -> Result<LimitCurve> {
    if grid_size < 16 {
        return Err(Error::InvalidParameter(format!("limit curve needs at least 16 points, got {grid_size}")));
    }
    let samples = (0..grid_size)
        .map(|i| {
            let u = i as f64 / (grid_size - 1) as f64;
            tilt(model, u, q).map(|t| LimitSample { u, eps0: t.eps0(), eps1: t.eps1() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitCurve { samples })
}

/// Finds `u` with `eps_which(u) = eps_known`.
pub fn limit_point(model: &NominalModel, eps_known: f64, which: usize, q: &Quadrature) -> Result<Tilt> {
    let eps = |t: &Tilt| if which == 0 { t.eps0() } else { t.eps1() };
    let t0 = tilt(model, 0.0, q)?;
    let t1 = tilt(model, 1.0, q)?;
    let (lo, hi) = if which == 0 { (eps(&t0).max(0.0), eps(&t1)) } else { (eps(&t1).max(0.0), eps(&t0)) };
    if !(eps_known >= 0.0) || eps_known > hi {
        return Err(Error::OutOfRange { value: eps_known, lo: 0.0, hi });
    }
    if eps_known <= lo {
        return Ok(if which == 0 { t0 } else { t1 });
    }
    let mut err = None;
    let u = bisect(
        |u| match tilt(model, u, q) {
            Ok(t) => eps(&t) - eps_known,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        0.0,
        1.0,
        U_TOL,
    );
    if let Some(e) = err {
        return Err(e);
    }
    tilt(model, u?, q)
}

/// The largest partner radius: solves `eps_which(u*) = eps_known` and returns
/// `eps_{1-which}(u*)`.
pub fn m_max_partner(model: &NominalModel, eps_known: f64, which: usize, q: &Quadrature) -> Result<f64> {
    let t = limit_point(model, eps_known, which, q)?;
    Ok(if which == 0 { t.eps1() } else { t.eps0() })
}

/// Chernoff distance `max_u -ln k(u)` and its maximizer.
pub fn chernoff_point(model: &NominalModel, q: &Quadrature) -> Result<(f64, f64)> {
    let mut err = None;
    let (u, v) = golden_max_closed(
        |u| match tilt(model, u, q) {
            Ok(t) => -t.ln_k,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        0.0,
        1.0,
        1e-10,
    );
    match err {
        Some(e) => Err(e),
        None => Ok((u, v.max(0.0))),
    }
}

pub fn chernoff_distance(model: &NominalModel, q: &Quadrature) -> Result<f64> {
    chernoff_point(model, q).map(|(_, v)| v)
}

pub fn bhattacharyya_distance(model: &NominalModel, q: &Quadrature) -> Result<f64> {
    Ok((-tilt(model, 0.5, q)?.ln_k).max(0.0))
}

/// The point where `eps0(u) = eps1(u)`, i.e. where the tilted mean of
/// `ln l` vanishes. Returns that `u` and the common radius.
pub fn equal_eps_limit(model: &NominalModel, q: &Quadrature) -> Result<(f64, f64)> {
    let mut err = None;
    let u = bisect(
        |u| match tilt(model, u, q) {
            Ok(t) => t.mean,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        0.0,
        1.0,
        U_TOL,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let t = tilt(model, u?, q)?;
    Ok((t.u, t.eps0()))
}

/// Largest contamination ratio for one hypothesis given the other.
///
/// With `which = 0`, `eps_known` is the contamination of `H0` and the
/// result is the largest admissible contamination of `H1`; `which = 1`
/// swaps the roles.
pub fn h_limit(model: &NominalModel, eps_known: f64, which: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&eps_known) {
        return Err(Error::OutOfRange { value: eps_known, lo: 0.0, hi: 1.0 });
    }
    let model = if which == 0 { model.clone() } else { model.swapped() };
    let g0 = LevelCdf::nominal(&model, 0);
    let g1 = LevelCdf::nominal(&model, 1);
    let k = 1.0 - eps_known;
    if k == 1.0 {
        return Err(Error::NoRoot(
            "with no contamination on one side the limit equation vanishes beyond ess sup l".into(),
        ));
    }
    let f = |u: f64| h_limit_function(&g0, &g1, k, u);
    let mut hi = 2.0;
    while f(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NoRoot("limit equation has no sign change".into()));
        }
    }
    if f(1.0) <= 0.0 {
        return Ok(0.0);
    }
    let u = bisect(f, 1.0, hi, 1e-13 * hi)?;
    Ok(1.0 - 1.0 / u)
}

/// `f(u) = k u P0[l <= ku] - P1[l <= ku] - u + 1`.
pub fn h_limit_function(g0: &LevelCdf, g1: &LevelCdf, k: f64, u: f64) -> f64 {
    let c = k * u;
    if c <= 0.0 {
        return 1.0 - u;
    }
    let r = Region::at_most(c.ln());
    k * u * g0.mass(&r) - g1.mass(&r) - u + 1.0
}
