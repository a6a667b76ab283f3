//! Relative entropy and related distances between densities on the model
//! support.

use serde::{Deserialize, Serialize};

use crate::density::{Density, NominalDensity};
use crate::error::{Error, Result};
use crate::model::NominalModel;
use crate::quadrature::Quadrature;

/// Below this log density a reference density counts as vanishing.
const LN_VANISH: f64 = -690.0;

/// Relative entropy `D(g, f) = integral of g ln(g / f)` over the model
/// support.
///
/// Fails with [`Error::SupportMismatch`] if `g` has visible mass where `f`
/// vanishes.
pub fn kl_divergence<G: Density + ?Sized, F: Density + ?Sized>(
    g: &G,
    f: &F,
    model: &NominalModel,
    q: &Quadrature,
) -> Result<f64> {
    for y in model.grid(crate::model::SCAN_NODES + 1) {
        if f.ln_pdf(y) < LN_VANISH && g.pdf(y) > 1e-12 {
            return Err(Error::SupportMismatch { at: y });
        }
    }
    let mut cuts = g.breakpoints();
    cuts.extend(f.breakpoints());
    let integrand = |y: f64| {
        let lg = g.ln_pdf(y);
        if lg == f64::NEG_INFINITY {
            return 0.0;
        }
        let lf = f.ln_pdf(y);
        if lf < LN_VANISH {
            return 0.0;
        }
        lg.exp() * (lg - lf)
    };
    let v = model.integrate_support(&integrand, &cuts, q)?;
    Ok(v.max(0.0))
}

/// Four distances between the nominals of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSuite {
    /// `D(f0, f1)`
    pub kl_01: f64,
    /// `D(f1, f0)`
    pub kl_10: f64,
    /// `chi2(f0, f1) + chi2(f1, f0)` on the truncated support.
    pub chi2_sym: f64,
    /// `1 - integral of sqrt(f0 f1)`, in `[0, 1]`, with both densities
    /// renormalized on the truncated support.
    pub hellinger2: f64,
}

pub fn divergence_suite(model: &NominalModel, q: &Quadrature) -> Result<DivergenceSuite> {
    let f0 = NominalDensity::new(model, 0);
    let f1 = NominalDensity::new(model, 1);
    let kl_01 = kl_divergence(&f0, &f1, model, q)?;
    let kl_10 = kl_divergence(&f1, &f0, model, q)?;
    let cuts = model.turning_points();
    let chi2_sym = model.integrate_support(
        &|y| {
            let (a, b) = (model.ln_f(0, y), model.ln_f(1, y));
            // (f0 - f1)^2 / f1 + (f1 - f0)^2 / f0, written to stay finite
            let d = (a.exp() - b.exp()).powi(2);
            if d == 0.0 {
                0.0
            } else {
                (d.ln() - b).exp() + (d.ln() - a).exp()
            }
        },
        &cuts,
        q,
    )?;
    let affinity = model.integrate_support(&|y| (0.5 * (model.ln_f(0, y) + model.ln_f(1, y))).exp(), &cuts, q)?;
    let m0 = model.integrate_support(&|y| model.f(0, y), &cuts, q)?;
    let m1 = model.integrate_support(&|y| model.f(1, y), &cuts, q)?;
    let affinity = affinity / (m0 * m1).sqrt();
    Ok(DivergenceSuite {
        kl_01,
        kl_10,
        chi2_sym,
        hellinger2: (1.0 - affinity).clamp(0.0, 1.0),
    })
}
