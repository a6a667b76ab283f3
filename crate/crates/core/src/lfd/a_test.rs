use std::sync::Arc;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::lfd::llr::PiecewiseLLR;
use crate::lfd::pair::DensityPair;
use crate::limits::limit_point;
use crate::model::NominalModel;
use crate::quadrature::Quadrature;

/// Tilted least favorable densities `g0 = w(u) / k(u)` and
/// `g1 = w(1 - v) / k(1 - v)`, with `w(u) = f1^u f0^(1-u)`.
#[derive(Debug, Clone)]
pub struct ATestSolution {
    pub u: f64,
    pub v: f64,
    /// `k(u)`
    pub ku: f64,
    /// `k(1 - v)`
    pub k1v: f64,
    /// Threshold on the sample mean of `ln l`: `ln(k(1-v) / k(u)) / (1 - u - v)`.
    pub threshold: f64,
    pub eps0: f64,
    pub eps1: f64,
    model: NominalModel,
}

impl ATestSolution {
    pub fn model(&self) -> &NominalModel {
        &self.model
    }

    pub fn density(&self, j: usize) -> TiltedDensity {
        if j == 0 {
            TiltedDensity::new(&self.model, self.u, self.ku.ln())
        } else {
            TiltedDensity::new(&self.model, 1.0 - self.v, self.k1v.ln())
        }
    }

    /// `ln(g1 / g0) = ln(k(u) / k(1-v)) + (1 - u - v) ln l`.
    pub fn robust_llr(&self) -> PiecewiseLLR {
        PiecewiseLLR::power(&self.model, self.ku.ln() - self.k1v.ln(), 1.0 - self.u - self.v)
    }

    pub fn pair(&self) -> DensityPair {
        DensityPair::new(&self.model, Arc::new(self.density(0)), Arc::new(self.density(1)), self.robust_llr())
    }
}

/// `w(y; theta) / k(theta)`.
#[derive(Debug, Clone)]
pub struct TiltedDensity {
    model: NominalModel,
    theta: f64,
    ln_k: f64,
}

impl TiltedDensity {
    pub fn new(model: &NominalModel, theta: f64, ln_k: f64) -> Self {
        Self { model: model.clone(), theta, ln_k }
    }
}

impl Density for TiltedDensity {
    fn ln_pdf(&self, y: f64) -> f64 {
        self.theta * self.model.ln_l(y) + self.model.ln_f(0, y) - self.ln_k
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.model.turning_points()
    }
}

/// Finds `u` and `v` with `D(g0, f0) = eps0` and `D(g1, f1) = eps1`, each a
/// monotone one-dimensional problem along the tilted family.
pub fn solve_a_test(model: &NominalModel, eps0: f64, eps1: f64, q: &Quadrature) -> Result<ATestSolution> {
    for eps in [eps0, eps1] {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("KL radius must be finite and non-negative, got {eps}")));
        }
    }
    let out_of_range = |e: Error| match e {
        Error::OutOfRange { value, hi, .. } => {
            Error::Infeasible(format!("radius {value} exceeds the largest admissible value {hi}"))
        }
        other => other,
    };
    let t0 = limit_point(model, eps0, 0, q).map_err(out_of_range)?;
    let t1 = limit_point(model, eps1, 1, q).map_err(out_of_range)?;
    let (u, v) = (t0.u, 1.0 - t1.u);
    if u + v >= 1.0 {
        return Err(Error::Infeasible(format!(
            "tilts meet (u + v = {} >= 1) for eps0 = {eps0}, eps1 = {eps1}",
            u + v
        )));
    }
    Ok(ATestSolution {
        u,
        v,
        ku: t0.ln_k.exp(),
        k1v: t1.ln_k.exp(),
        threshold: (t1.ln_k - t0.ln_k) / (1.0 - u - v),
        eps0,
        eps1,
        model: model.clone(),
    })
}
