//! Least favorable densities and robust likelihood ratios.
//!
//! * [`solve_m_test`] and [`solve_m_test_symmetric`]: KL balls around both
//!   nominals.
//! * [`solve_a_test`]: the asymptotically robust test built from the tilted
//!   family `f1^u f0^(1-u)`.
//! * [`solve_h_test`]: Huber's clipped test for epsilon-contamination.
//! * [`solve_c_test`]: the composite model, the h-test applied to the m-test
//!   densities.

use std::sync::Arc;

use crate::density::Density;
use crate::model::NominalModel;

mod a_test;
mod composite;
mod llr;
mod pair;

pub use a_test::{solve_a_test, ATestSolution, TiltedDensity};
pub use composite::{solve_c_test, CompositeSolution};
pub use h_test::{solve_h_test, solve_h_test_pair, ClippedDensity, HTestSolution};
pub use llr::{Formula, PiecewiseLLR, Segment, Tie, DEFAULT_TIE_FRACTION};
pub use m_test::{solve_m_test, solve_m_test_symmetric, MTestDensity, MTestSolution, RESIDUAL_TOL};
pub use pair::DensityPair;

/// Common view of a solved robust test.
pub trait LeastFavorable {
    fn model(&self) -> &NominalModel;

    /// Least favorable density under hypothesis `j`.
    fn lfd_density(&self, j: usize) -> Arc<dyn Density>;

    fn robust_llr(&self) -> PiecewiseLLR;

    /// The pair of least favorable densities and their ratio.
    fn lfd_pair(&self) -> DensityPair {
        DensityPair::new(self.model(), self.lfd_density(0), self.lfd_density(1), self.robust_llr())
    }
}

macro_rules! least_favorable {
    ($($t:ty),*) => {$(
        impl LeastFavorable for $t {
            fn model(&self) -> &NominalModel {
                <$t>::model(self)
            }

            fn lfd_density(&self, j: usize) -> Arc<dyn Density> {
                Arc::new(self.density(j))
            }

            fn robust_llr(&self) -> PiecewiseLLR {
                <$t>::robust_llr(self)
            }
        }
    )*};
}

least_favorable!(MTestSolution, ATestSolution, HTestSolution, CompositeSolution);

pub fn lfd_density<S: LeastFavorable + ?Sized>(solution: &S, j: usize) -> Arc<dyn Density> {
    solution.lfd_density(j)
}

pub fn robust_llr<S: LeastFavorable + ?Sized>(solution: &S) -> PiecewiseLLR {
    solution.robust_llr()
}
