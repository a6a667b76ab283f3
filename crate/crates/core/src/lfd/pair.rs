use std::sync::Arc;

use crate::density::{Density, LevelCdf, NominalDensity};
use crate::lfd::llr::PiecewiseLLR;
use crate::model::{NominalModel, Region};

/// Two densities `p0`, `p1` on the model support whose log ratio is a
/// non-decreasing function of `ln l`, with the distribution functions of
/// `ln l` under each.
#[derive(Clone)]
pub struct DensityPair {
    model: NominalModel,
    densities: [Arc<dyn Density>; 2],
    llr: PiecewiseLLR,
    levels: [LevelCdf; 2],
}

impl std::fmt::Debug for DensityPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityPair").field("llr", &self.llr).finish_non_exhaustive()
    }
}

impl DensityPair {
    /// `llr` must give `ln(p1 / p0)` as a function of `ln l`.
    pub fn new(model: &NominalModel, p0: Arc<dyn Density>, p1: Arc<dyn Density>, llr: PiecewiseLLR) -> Self {
        let levels = [LevelCdf::new(model, p0.clone()), LevelCdf::new(model, p1.clone())];
        Self { model: model.clone(), densities: [p0, p1], llr, levels }
    }

    /// The nominal pair itself.
    pub fn nominal(model: &NominalModel) -> Self {
        Self::new(
            model,
            Arc::new(NominalDensity::new(model, 0)),
            Arc::new(NominalDensity::new(model, 1)),
            PiecewiseLLR::nominal(model),
        )
    }

    pub fn model(&self) -> &NominalModel {
        &self.model
    }

    pub fn density(&self, j: usize) -> &Arc<dyn Density> {
        &self.densities[j]
    }

    pub fn llr(&self) -> &PiecewiseLLR {
        &self.llr
    }

    pub fn levels(&self, j: usize) -> &LevelCdf {
        &self.levels[j]
    }

    pub fn total(&self, j: usize) -> f64 {
        self.levels[j].total()
    }

    /// `P_j[ln(p1/p0) <= t]`.
    pub fn prob_at_most(&self, j: usize, t: f64) -> f64 {
        let x = self.llr.x_upper(t);
        if x == f64::NEG_INFINITY {
            0.0
        } else {
            self.levels[j].mass(&Region::at_most(x))
        }
    }

    /// `P_j[ln(p1/p0) < t]`.
    pub fn prob_below(&self, j: usize, t: f64) -> f64 {
        let x = self.llr.x_lower(t);
        if x == f64::INFINITY {
            self.total(j)
        } else {
            self.levels[j].mass(&Region::below(x))
        }
    }
}
