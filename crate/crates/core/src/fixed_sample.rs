//! Tests on `n` independent observations.
//!
//! Every robust form decides for `H1` when `sum ln l_hat(y_i) > ln gamma`.
//! [`FixedSampleTest::statistic`] gives the same comparison written on the
//! nominal log ratio with a data-dependent right-hand side, which is how the
//! thresholds of the KL-ball and clipped tests move with the sample.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::GridSampler;
use crate::error::{Error, Result};
use crate::lfd::{ATestSolution, CompositeSolution, HTestSolution, MTestSolution, PiecewiseLLR};
use crate::model::NominalModel;
use crate::rng::{chunks, stream, StreamRng};

/// Relative tolerance for treating a statistic as equal to its threshold.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum TestForm {
    Nominal,
    M { ln_l_l: f64, ln_l_u: f64 },
    H { ln_c_l: f64, ln_c_u: f64, ln_b: f64 },
    C { ln_l_l: f64, ln_l_u: f64, ln_c_l: f64, ln_c_u: f64, ln_b: f64 },
    A { exponent: f64, threshold: f64 },
    /// `sum delta_hat(y_i)` against `n / 2`.
    SoftSign,
    /// Number of observations with `l > 1` against `n / 2`.
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    AcceptH0,
    RejectH0,
}

impl Decision {
    pub fn rejects(self) -> bool {
        self == Decision::RejectH0
    }
}

/// Left and right side of a test in its displayed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub lhs: f64,
    pub rhs: f64,
    /// Observations whose ratio was clipped at the upper level.
    pub n_high: usize,
    /// Observations whose ratio was clipped at the lower level.
    pub n_low: usize,
}

#[derive(Debug, Clone)]
pub struct FixedSampleTest {
    pub llr: PiecewiseLLR,
    pub n: usize,
    pub form: TestForm,
    pub ln_gamma: f64,
}

impl FixedSampleTest {
    fn build(llr: PiecewiseLLR, n: usize, form: TestForm) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        Ok(Self { llr, n, form, ln_gamma: 0.0 })
    }

    pub fn nominal(model: &NominalModel, n: usize) -> Result<Self> {
        Self::build(PiecewiseLLR::nominal(model), n, TestForm::Nominal)
    }

    pub fn m_test(sol: &MTestSolution, n: usize) -> Result<Self> {
        Self::build(sol.robust_llr(), n, TestForm::M { ln_l_l: sol.ln_l_l(), ln_l_u: sol.ln_l_u() })
    }

    pub fn h_test(sol: &HTestSolution, n: usize) -> Result<Self> {
        Self::build(sol.robust_llr(), n, TestForm::H { ln_c_l: sol.c_l.ln(), ln_c_u: sol.c_u.ln(), ln_b: sol.b.ln() })
    }

    pub fn c_test(sol: &CompositeSolution, n: usize) -> Result<Self> {
        let form = TestForm::C {
            ln_l_l: sol.inner.ln_l_l(),
            ln_l_u: sol.inner.ln_l_u(),
            ln_c_l: sol.c_l.ln(),
            ln_c_u: sol.c_u.ln(),
            ln_b: sol.b.ln(),
        };
        Self::build(sol.robust_llr(), n, form)
    }

    pub fn a_test(sol: &ATestSolution, n: usize) -> Result<Self> {
        let form = TestForm::A { exponent: 1.0 - sol.u - sol.v, threshold: sol.threshold };
        Self::build(sol.robust_llr(), n, form)
    }

    /// Limiting form of the KL-ball test: `sum delta_hat(y_i)` against `n / 2`.
    pub fn soft_sign(sol: &MTestSolution, n: usize) -> Result<Self> {
        Self::build(sol.robust_llr(), n, TestForm::SoftSign)
    }

    pub fn sign(model: &NominalModel, n: usize) -> Result<Self> {
        Self::build(PiecewiseLLR::nominal(model), n, TestForm::Sign)
    }

    pub fn with_ln_gamma(mut self, ln_gamma: f64) -> Self {
        self.ln_gamma = ln_gamma;
        self
    }

    /// The comparison in displayed form. The test rejects when `lhs > rhs`.
    pub fn statistic(&self, obs: &[f64]) -> Statistic {
        let model = self.llr.model();
        let n = obs.len() as f64;
        let mut st = Statistic { lhs: 0.0, rhs: 0.0, n_high: 0, n_low: 0 };
        match self.form {
            TestForm::Nominal => {
                st.lhs = obs.iter().map(|&y| model.ln_l(y)).sum();
                st.rhs = self.ln_gamma;
            }
            TestForm::M { ln_l_l, ln_l_u } => {
                let d: f64 = obs.iter().map(|&y| self.llr.delta(y)).sum();
                st.lhs = obs.iter().map(|&y| model.ln_l(y)).sum();
                st.rhs = (ln_l_u - ln_l_l) * d + n * ln_l_l + self.ln_gamma;
            }
            TestForm::H { ln_c_l, ln_c_u, ln_b } => {
                for &y in obs {
                    let x = model.ln_l(y);
                    if x >= ln_c_u {
                        st.n_high += 1;
                    } else if x <= ln_c_l {
                        st.n_low += 1;
                    } else {
                        st.lhs += x;
                    }
                }
                st.rhs = -(st.n_high as f64 * ln_c_u + st.n_low as f64 * ln_c_l) - n * ln_b + self.ln_gamma;
            }
            TestForm::C { ln_l_l, ln_l_u, ln_c_l, ln_c_u, ln_b } => {
                for &y in obs {
                    let r = self.llr.ln_l_hat(y) - ln_b;
                    if r >= ln_c_u {
                        st.n_high += 1;
                    } else if r <= ln_c_l {
                        st.n_low += 1;
                    } else {
                        let d = self.llr.delta(y);
                        st.lhs += model.ln_l(y) + (1.0 - d) * -ln_l_l - d * ln_l_u;
                    }
                }
                st.rhs = -(st.n_high as f64 * ln_c_u + st.n_low as f64 * ln_c_l) - n * ln_b + self.ln_gamma;
            }
            TestForm::A { exponent, threshold } => {
                st.lhs = obs.iter().map(|&y| model.ln_l(y)).sum::<f64>() / n;
                st.rhs = threshold + self.ln_gamma / (exponent * n);
            }
            TestForm::SoftSign => {
                st.lhs = obs.iter().map(|&y| self.llr.delta(y)).sum();
                st.rhs = 0.5 * n;
            }
            TestForm::Sign => {
                st.lhs = obs.iter().map(|&y| sign_score(model.ln_l(y))).sum();
                st.rhs = 0.5 * n;
            }
        }
        st
    }

    /// Decision on `obs`; an exact tie is broken with one uniform draw from
    /// `rng`, rejecting with probability equal to the mean `delta_hat` of the
    /// observations on flat branches of `l_hat` (one half when there are none).
    pub fn decide_with<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Decision {
        let (diff, scale) = match self.form {
            TestForm::SoftSign | TestForm::Sign => {
                let s = self.statistic(obs);
                (s.lhs - s.rhs, 1.0 + s.rhs.abs())
            }
            _ => {
                let mut sum = 0.0;
                let mut scale = 1.0 + self.ln_gamma.abs();
                for &y in obs {
                    let v = self.llr.ln_l_hat(y);
                    sum += v;
                    scale += v.abs();
                }
                (sum - self.ln_gamma, scale)
            }
        };
        if diff > TIE_TOL * scale {
            return Decision::RejectH0;
        }
        if diff < -TIE_TOL * scale {
            return Decision::AcceptH0;
        }
        let p = self.tie_fraction(obs);
        if rng.random::<f64>() < p {
            Decision::RejectH0
        } else {
            Decision::AcceptH0
        }
    }

    /// [`decide_with`](Self::decide_with) on a fresh stream of `seed`.
    pub fn decide(&self, obs: &[f64], seed: u64) -> Decision {
        self.decide_with(obs, &mut stream(seed, 0))
    }

    fn tie_fraction(&self, obs: &[f64]) -> f64 {
        if matches!(self.form, TestForm::Sign) {
            return 0.5;
        }
        let (mut sum, mut count) = (0.0, 0usize);
        for &y in obs {
            if self.llr.segment_at(self.llr.model().ln_l(y)).is_flat() {
                sum += self.llr.delta(y);
                count += 1;
            }
        }
        if count == 0 {
            0.5
        } else {
            sum / count as f64
        }
    }
}

fn sign_score(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// `sum delta_hat(y_i)`, the statistic the KL-ball test tends to as the
/// band `[l_l, l_u]` covers the whole range of `l`.
pub fn limiting_m_statistic(sol: &MTestSolution, obs: &[f64]) -> f64 {
    let llr = sol.robust_llr();
    obs.iter().map(|&y| llr.delta(y)).sum()
}

/// Monte Carlo error rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub rate: f64,
    pub std_error: f64,
    pub errors: u64,
    pub runs: u64,
}

impl ErrorEstimate {
    fn from_counts(errors: u64, runs: u64) -> Self {
        let p = errors as f64 / runs as f64;
        Self { rate: p, std_error: (p * (1.0 - p) / runs as f64).sqrt(), errors, runs }
    }
}

/// Fraction of `runs` samples of size `test.n`, drawn from `observations`,
/// on which the test errs when `hypothesis` is true. Run `i` uses stream `i`
/// of `seed` for both the sample and the tie-break.
pub fn empirical_error(
    test: &FixedSampleTest,
    observations: &GridSampler,
    hypothesis: usize,
    runs: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    if runs < 1000 {
        return Err(Error::InvalidParameter(format!("at least 1000 runs required, got {runs}")));
    }
    let errors: u64 = chunks(runs)
        .map(|range| {
            let mut obs = vec![0.0; test.n];
            let mut count = 0u64;
            for i in range {
                let mut rng: StreamRng = stream(seed, i);
                for y in obs.iter_mut() {
                    *y = observations.sample(&mut rng);
                }
                if test.decide_with(&obs, &mut rng).rejects() != (hypothesis == 1) {
                    count += 1;
                }
            }
            count
        })
        .sum();
    Ok(ErrorEstimate::from_counts(errors, runs))
}

/// Equal-prior error probability `(P_E, P_E^0, P_E^1)` from both hypotheses.
pub fn empirical_pe(
    test: &FixedSampleTest,
    obs0: &GridSampler,
    obs1: &GridSampler,
    runs: u64,
    seed: u64,
) -> Result<(ErrorEstimate, ErrorEstimate, ErrorEstimate)> {
    let e0 = empirical_error(test, obs0, 0, runs, seed)?;
    let e1 = empirical_error(test, obs1, 1, runs, seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?;
    let both = ErrorEstimate {
        rate: 0.5 * (e0.rate + e1.rate),
        std_error: 0.5 * (e0.std_error.powi(2) + e1.std_error.powi(2)).sqrt(),
        errors: e0.errors + e1.errors,
        runs: e0.runs + e1.runs,
    };
    Ok((both, e0, e1))
}
