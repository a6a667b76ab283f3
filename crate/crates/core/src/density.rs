//! Densities on the model support, cumulative mass tables and samplers.

use std::sync::Arc;

use rand::Rng;

use crate::model::{NominalModel, Region};
use crate::quadrature::gauss_legendre_nodes;

/// A probability density on the support of a [`NominalModel`].
pub trait Density: Send + Sync {
    fn ln_pdf(&self, y: f64) -> f64;

    fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }

    /// Points where the density may fail to be smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<D: Density + ?Sized> Density for Arc<D> {
    fn ln_pdf(&self, y: f64) -> f64 {
        (**self).ln_pdf(y)
    }

    fn pdf(&self, y: f64) -> f64 {
        (**self).pdf(y)
    }

    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

impl<D: Density + ?Sized> Density for &D {
    fn ln_pdf(&self, y: f64) -> f64 {
        (**self).ln_pdf(y)
    }

    fn pdf(&self, y: f64) -> f64 {
        (**self).pdf(y)
    }

    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}

/// One of the two nominal densities of a model.
#[derive(Clone, Debug)]
pub struct NominalDensity {
    model: NominalModel,
    j: usize,
}

impl NominalDensity {
    pub fn new(model: &NominalModel, j: usize) -> Self {
        assert!(j < 2, "hypothesis index must be 0 or 1");
        Self { model: model.clone(), j }
    }
}

impl Density for NominalDensity {
    fn ln_pdf(&self, y: f64) -> f64 {
        self.model.ln_f(self.j, y)
    }
}

/// A density given by a closure, with optional breakpoints.
pub struct FnDensity<F> {
    f: F,
    breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FnDensity<F> {
    /// `ln_pdf` is the log density.
    pub fn new(ln_pdf: F, breaks: Vec<f64>) -> Self {
        Self { f: ln_pdf, breaks }
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Density for FnDensity<F> {
    fn ln_pdf(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Cell edges over `[lo, hi]`: `cells` uniform cells with `breaks` inserted.
pub(crate) fn cell_edges(lo: f64, hi: f64, cells: usize, breaks: &[f64]) -> Vec<f64> {
    let h = (hi - lo) / cells as f64;
    let mut edges: Vec<f64> = (0..=cells).map(|i| if i == cells { hi } else { lo + i as f64 * h }).collect();
    edges.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
    edges
}

/// Cumulative mass `C(y) = Q[Y <= y]` of a density, tabulated at cell edges
/// and refined within cells by an 8-point Gauss-Legendre rule.
#[derive(Clone)]
pub struct MassTable {
    density: Arc<dyn Density>,
    edges: Vec<f64>,
    cum: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl MassTable {
    pub fn new(density: Arc<dyn Density>, support: (f64, f64), cells: usize) -> Self {
        let (nodes, weights) = gauss_legendre_nodes(8);
        let edges = cell_edges(support.0, support.1, cells, &density.breakpoints());
        let mut table = Self { density, edges, cum: Vec::new(), nodes, weights };
        let mut cum = Vec::with_capacity(table.edges.len());
        let mut acc = 0.0;
        let mut comp = 0.0;
        cum.push(0.0);
        for w in table.edges.windows(2) {
            // compensated summation keeps the tail masses exact to ~1e-16
            let m = table.cell_integral(w[0], w[1]) - comp;
            let t = acc + m;
            comp = (t - acc) - m;
            acc = t;
            cum.push(acc);
        }
        table.cum = cum;
        table
    }

    pub fn for_model(density: Arc<dyn Density>, model: &NominalModel) -> Self {
        Self::new(density, model.support(), crate::model::SCAN_NODES)
    }

    fn cell_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * self.density.pdf(mid + half * x))
            .sum();
        s * half
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Cumulative masses at the cell edges.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn density(&self) -> &Arc<dyn Density> {
        &self.density
    }

    /// `Q[Y <= y]`.
    pub fn cdf(&self, y: f64) -> f64 {
        let e = &self.edges;
        if y <= e[0] {
            return 0.0;
        }
        if y >= e[e.len() - 1] {
            return self.total();
        }
        let i = e.partition_point(|&x| x <= y) - 1;
        self.cum[i] + self.cell_integral(e[i], y)
    }

    /// `Q[a <= Y <= b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            0.0
        } else {
            self.cdf(b) - self.cdf(a)
        }
    }
}

/// Distribution function of `ln l(Y)` when `Y` has a given density:
/// `G(x) = Q[ln l(Y) <= x]`.
#[derive(Clone)]
pub struct LevelCdf {
    model: NominalModel,
    table: MassTable,
}

impl LevelCdf {
    pub fn new(model: &NominalModel, density: Arc<dyn Density>) -> Self {
        let mut breaks = density.breakpoints();
        breaks.extend(model.turning_points());
        let d: Arc<dyn Density> = Arc::new(WithBreaks { inner: density, breaks });
        Self { model: model.clone(), table: MassTable::for_model(d, model) }
    }

    pub fn nominal(model: &NominalModel, j: usize) -> Self {
        Self::new(model, Arc::new(NominalDensity::new(model, j)))
    }

    pub fn model(&self) -> &NominalModel {
        &self.model
    }

    pub fn table(&self) -> &MassTable {
        &self.table
    }

    /// Mass of the y-set where `ln l` falls in `region`.
    pub fn mass(&self, region: &Region) -> f64 {
        self.model
            .level_set(region)
            .intervals()
            .iter()
            .map(|&(a, b)| self.table.mass_between(a, b))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.mass(&Region::at_most(x))
    }

    pub fn total(&self) -> f64 {
        self.table.total()
    }
}

struct WithBreaks {
    inner: Arc<dyn Density>,
    breaks: Vec<f64>,
}

impl Density for WithBreaks {
    fn ln_pdf(&self, y: f64) -> f64 {
        self.inner.ln_pdf(y)
    }

    fn pdf(&self, y: f64) -> f64 {
        self.inner.pdf(y)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Inverse-CDF sampler over a fine cell table; draws are uniform within the
/// selected cell.
#[derive(Clone)]
pub struct GridSampler {
    edges: Vec<f64>,
    cum: Vec<f64>,
}

/// Default cell count for [`GridSampler`].
pub const SAMPLER_CELLS: usize = 32768;

impl GridSampler {
    pub fn new(density: Arc<dyn Density>, support: (f64, f64), cells: usize) -> Self {
        let table = MassTable::new(density, support, cells);
        let total = table.total();
        let cum = table.cumulative().iter().map(|c| c / total).collect();
        Self { edges: table.edges().to_vec(), cum }
    }

    pub fn for_model(density: Arc<dyn Density>, model: &NominalModel) -> Self {
        Self::new(density, model.support(), SAMPLER_CELLS)
    }

    /// Maps a uniform variate in `[0, 1)` to a draw.
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self.cum.partition_point(|&c| c <= u).clamp(1, self.cum.len() - 1) - 1;
        let (c0, c1) = (self.cum[i], self.cum[i + 1]);
        let (a, b) = (self.edges[i], self.edges[i + 1]);
        if c1 > c0 {
            a + (b - a) * ((u - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            a
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}
