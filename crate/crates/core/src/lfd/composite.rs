use crate::error::Result;
use crate::lfd::h_test::{solve_h_test_pair, ClippedDensity, HTestSolution};
use crate::lfd::llr::PiecewiseLLR;
use crate::lfd::m_test::{solve_m_test, MTestSolution};
use crate::model::NominalModel;
use crate::quadrature::Quadrature;

/// KL balls around the nominals, each further contaminated: the clipped
/// pair built on the m-test densities.
#[derive(Debug, Clone)]
pub struct CompositeSolution {
    pub inner: MTestSolution,
    pub outer: HTestSolution,
    pub c_l: f64,
    pub c_u: f64,
    pub b: f64,
}

impl CompositeSolution {
    pub fn model(&self) -> &NominalModel {
        self.inner.model()
    }

    pub fn density(&self, j: usize) -> ClippedDensity {
        self.outer.density(j)
    }

    /// Five branches: `b c_l`, `b l / l_l`, `b`, `b l / l_u`, `b c_u` from the
    /// lowest to the highest nominal ratio (some may be empty).
    pub fn robust_llr(&self) -> PiecewiseLLR {
        self.outer.robust_llr()
    }
}

pub fn solve_c_test(
    model: &NominalModel,
    eps0: f64,
    eps1: f64,
    eps0_c: f64,
    eps1_c: f64,
    q: &Quadrature,
) -> Result<CompositeSolution> {
    let inner = solve_m_test(model, eps0, eps1, q)?;
    let outer = solve_h_test_pair(&inner.pair(), eps0_c, eps1_c)?;
    Ok(CompositeSolution { c_l: outer.c_l, c_u: outer.c_u, b: outer.b, inner, outer })
}
