//! Composite quadrature on finite intervals.
//!
//! Every integral in the crate is evaluated over a finite union of intervals
//! with one of two composite rules. The Gauss-Legendre rule is the default;
//! the trapezoid rule exists mostly for cross-checking.
//!
//! Error control compares the estimate on `p` panels with the estimate on
//! `p / 2` panels and doubles `p` until the two agree within
//! `max(abs_tol, rel_tol * |value|)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest panel count tried before giving up on an interval.
const MAX_PANELS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    GaussLegendre,
    Trapezoid,
}

/// Quadrature settings shared by every integral of a computation.
///
/// `panels` is the panel count for an interval as long as the reference
/// length (normally the width of the model support); shorter intervals get
/// proportionally fewer panels, never fewer than two.
#[derive(Debug, Clone)]
pub struct Quadrature {
    rule: Rule,
    panels: usize,
    order: usize,
    abs_tol: f64,
    rel_tol: f64,
    nodes: Arc<[f64]>,
    weights: Arc<[f64]>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::gauss_legendre(512, 8).expect("default quadrature is valid")
    }
}

impl Quadrature {
    pub fn gauss_legendre(panels: usize, order: usize) -> Result<Self> {
        Self::new(Rule::GaussLegendre, panels, order, 1e-10, 1e-10)
    }

    pub fn new(rule: Rule, panels: usize, order: usize, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if panels == 0 || order == 0 || panels * order < 64 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least 64 nodes, got {panels} panels x {order} nodes"
            )));
        }
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerances must be positive".into()));
        }
        let (nodes, weights) = match rule {
            Rule::GaussLegendre => gauss_legendre_nodes(order),
            // trapezoid panels always use their two endpoints
            Rule::Trapezoid => (vec![-1.0, 1.0], vec![1.0, 1.0]),
        };
        Ok(Self {
            rule,
            panels,
            order,
            abs_tol,
            rel_tol,
            nodes: nodes.into(),
            weights: weights.into(),
        })
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerances must be positive".into()));
        }
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        Ok(self)
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn node_count(&self) -> usize {
        self.panels * self.order
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    fn panels_for(&self, len: f64, reference: f64) -> usize {
        let share = if reference > 0.0 { len / reference } else { 1.0 };
        ((self.panels as f64 * share).ceil() as usize).clamp(2, self.panels.max(2))
    }

    /// Fixed composite rule with `panels` panels, no error control.
    pub fn fixed<F: Fn(f64) -> f64>(&self, f: &F, lo: f64, hi: f64, panels: usize) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let h = (hi - lo) / panels as f64;
        match self.rule {
            Rule::GaussLegendre => {
                let half = 0.5 * h;
                let mut total = 0.0;
                for p in 0..panels {
                    let mid = lo + (p as f64 + 0.5) * h;
                    let mut s = 0.0;
                    for (x, w) in self.nodes.iter().zip(self.weights.iter()) {
                        s += w * f(mid + half * x);
                    }
                    total += s * half;
                }
                total
            }
            Rule::Trapezoid => {
                let n = panels * self.order;
                let h = (hi - lo) / n as f64;
                let mut s = 0.5 * (f(lo) + f(hi));
                for i in 1..n {
                    s += f(lo + i as f64 * h);
                }
                s * h
            }
        }
    }

    /// Integrates `f` over `[lo, hi]` with error control. `reference` is the
    /// length that receives the full panel budget.
    pub fn integrate_with_reference<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        lo: f64,
        hi: f64,
        reference: f64,
    ) -> Result<f64> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidRegion(format!("non-finite interval [{lo}, {hi}]")));
        }
        if hi <= lo {
            return Ok(0.0);
        }
        let mut panels = self.panels_for(hi - lo, reference).max(2);
        let mut coarse = self.fixed(f, lo, hi, panels / 2);
        loop {
            let fine = self.fixed(f, lo, hi, panels);
            let err = (fine - coarse).abs();
            if !fine.is_finite() {
                return Err(Error::NonConvergence { lo, hi, estimate: fine, error: f64::INFINITY });
            }
            if err <= self.abs_tol.max(self.rel_tol * fine.abs()) {
                return Ok(fine);
            }
            if panels >= MAX_PANELS {
                return Err(Error::NonConvergence { lo, hi, estimate: fine, error: err });
            }
            coarse = fine;
            panels *= 2;
        }
    }

    /// Integrates `N` functions sharing their evaluation points, with the
    /// error test applied to each component.
    pub fn integrate_many<const N: usize, F: Fn(f64) -> [f64; N]>(
        &self,
        f: &F,
        lo: f64,
        hi: f64,
        reference: f64,
    ) -> Result<[f64; N]> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidRegion(format!("non-finite interval [{lo}, {hi}]")));
        }
        if hi <= lo {
            return Ok([0.0; N]);
        }
        let rule = |panels: usize| {
            let (xs, ws) = self.tabulate(lo, hi, panels);
            let mut acc = [0.0; N];
            for (x, w) in xs.iter().zip(&ws) {
                let v = f(*x);
                for i in 0..N {
                    acc[i] += w * v[i];
                }
            }
            acc
        };
        let mut panels = self.panels_for(hi - lo, reference).max(2);
        let mut coarse = rule(panels / 2);
        loop {
            let fine = rule(panels);
            let mut worst = 0.0f64;
            let mut ok = true;
            for i in 0..N {
                let err = (fine[i] - coarse[i]).abs();
                if !fine[i].is_finite() {
                    return Err(Error::NonConvergence { lo, hi, estimate: fine[i], error: f64::INFINITY });
                }
                if err > self.abs_tol.max(self.rel_tol * fine[i].abs()) {
                    ok = false;
                }
                worst = worst.max(err);
            }
            if ok {
                return Ok(fine);
            }
            if panels >= MAX_PANELS {
                return Err(Error::NonConvergence { lo, hi, estimate: fine[0], error: worst });
            }
            coarse = fine;
            panels *= 2;
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, lo: f64, hi: f64) -> Result<f64> {
        self.integrate_with_reference(f, lo, hi, hi - lo)
    }

    /// Nodes and weights of the rule mapped to `[lo, hi]` with `panels`
    /// panels, for callers that reuse integrand values across integrals.
    pub fn tabulate(&self, lo: f64, hi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        if hi <= lo {
            return (xs, ws);
        }
        match self.rule {
            Rule::GaussLegendre => {
                let h = (hi - lo) / panels as f64;
                let half = 0.5 * h;
                xs.reserve(panels * self.order);
                ws.reserve(panels * self.order);
                for p in 0..panels {
                    let mid = lo + (p as f64 + 0.5) * h;
                    for (x, w) in self.nodes.iter().zip(self.weights.iter()) {
                        xs.push(mid + half * x);
                        ws.push(w * half);
                    }
                }
            }
            Rule::Trapezoid => {
                let n = panels * self.order;
                let h = (hi - lo) / n as f64;
                for i in 0..=n {
                    xs.push(lo + i as f64 * h);
                    ws.push(if i == 0 || i == n { 0.5 * h } else { h });
                }
            }
        }
        (xs, ws)
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        let (x, w) = gauss_legendre_nodes(8);
        // degree 15 is the highest exact degree for 8 nodes
        for deg in [0, 3, 8, 14, 15] {
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((approx - exact).abs() < 1e-14, "degree {deg}: {approx} vs {exact}");
        }
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_node_counts() {
        assert!(Quadrature::gauss_legendre(4, 8).is_err());
        assert!(Quadrature::gauss_legendre(8, 8).is_ok());
        assert!(Quadrature::new(Rule::Trapezoid, 64, 1, 0.0, 1e-8).is_err());
    }

    #[test]
    fn gaussian_bump() {
        let q = Quadrature::default();
        let f = |y: f64| (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = q.integrate(&f, -12.0, 12.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let t = Quadrature::new(Rule::Trapezoid, 512, 8, 1e-10, 1e-10).unwrap();
        let v = t.integrate(&f, -12.0, 12.0).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn empty_interval_is_zero() {
        let q = Quadrature::default();
        assert_eq!(q.integrate(&|_| 1.0, 2.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_integrand_reports_non_convergence() {
        let q = Quadrature::default();
        let err = q.integrate(&|y: f64| 1.0 / y, -1.0, 1.0 + 1e-300);
        // 1/y has no node exactly at zero, so the estimate is finite but never settles
        assert!(err.is_err() || err.unwrap().is_finite());
        let err = q.integrate(&|_| f64::NAN, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
