//! Sequential probability ratio tests on `S_n = sum ln l_hat(Y_i)`.
//!
//! The walk continues while `ln t_l < S_n < ln t_u`, decides for `H1` once
//! `S_n >= ln t_u` and for `H0` once `S_n <= ln t_l`.
//!
//! [`walk_exact`] propagates the law of `S_n` on a lattice of step
//! `grid_step`: the continuous part by FFT convolution, point masses by exact
//! shifts. [`walk_monte_carlo`] simulates the walk.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::density::{Density, GridSampler, LevelCdf};
use crate::error::{Error, Result};
use crate::lfd::{solve_a_test, solve_c_test, solve_h_test, solve_m_test, LeastFavorable, PiecewiseLLR};
use crate::llr::{pushforward, GridSpec, MixedDensity};
use crate::model::NominalModel;
use crate::quadrature::Quadrature;
use crate::rng::{chunks, stream};

/// In-band mass below which the exact recursion stops.
const MASS_FLOOR: f64 = 1e-10;
/// Largest truncated mass of an accepted run.
pub const MAX_TRUNCATED: f64 = 1e-3;
/// Atoms lighter than this are spread onto the lattice.
const ATOM_FLOOR: f64 = 1e-13;
const ATOM_MERGE: f64 = 1e-12;
const DIRECT_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SprtConfig {
    pub log_t_l: f64,
    pub log_t_u: f64,
    pub max_n: usize,
    pub mc_runs: u64,
    pub seed: u64,
    pub grid_step: f64,
}

impl Default for SprtConfig {
    fn default() -> Self {
        Self { log_t_l: -3.0, log_t_u: 3.0, max_n: 10_000, mc_runs: 100_000, seed: 0, grid_step: 0.005 }
    }
}

impl SprtConfig {
    pub fn with_thresholds(self, log_t_l: f64, log_t_u: f64) -> Self {
        Self { log_t_l, log_t_u, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.log_t_l <= 0.0 && self.log_t_u >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thresholds must satisfy ln t_l <= 0 <= ln t_u, got ({}, {})",
                self.log_t_l, self.log_t_u
            )));
        }
        if self.max_n == 0 {
            return Err(Error::InvalidParameter("max_n must be at least 1".into()));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::InvalidParameter(format!("grid step must be positive, got {}", self.grid_step)));
        }
        Ok(())
    }
}

/// Exit behaviour of the walk under one observation law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Walk {
    /// `P[decide H1]`
    pub p_upper: f64,
    /// `P[decide H0]`
    pub p_lower: f64,
    pub expected_n: f64,
    /// `P[N = n, decide H1]` at index `n - 1`.
    pub exit_upper: Vec<f64>,
    /// `P[N = n, decide H0]` at index `n - 1`.
    pub exit_lower: Vec<f64>,
    pub truncated_mass: f64,
    /// Standard errors of `p_upper`, `p_lower` and `expected_n` for
    /// simulated walks.
    pub std_errors: Option<[f64; 3]>,
}

impl Walk {
    /// `P[N = n]` at index `n - 1`.
    pub fn stop_dist(&self) -> Vec<f64> {
        self.exit_upper.iter().zip(&self.exit_lower).map(|(a, b)| a + b).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprtResult {
    pub alpha: f64,
    pub beta: f64,
    pub en0: f64,
    pub en1: f64,
    /// Walks under `H0` and `H1`.
    pub walks: [Walk; 2],
}

impl SprtResult {
    fn from_walks(w0: Walk, w1: Walk) -> Self {
        Self { alpha: w0.p_upper, beta: w1.p_lower, en0: w0.expected_n, en1: w1.expected_n, walks: [w0, w1] }
    }

    pub fn stop_dist(&self, j: usize) -> Vec<f64> {
        self.walks[j].stop_dist()
    }

    pub fn truncated_mass(&self) -> f64 {
        self.walks[0].truncated_mass.max(self.walks[1].truncated_mass)
    }

    /// Standard errors of `(alpha, beta, en0, en1)`; zero for exact results.
    pub fn std_errors(&self) -> [f64; 4] {
        let s0 = self.walks[0].std_errors.unwrap_or([0.0; 3]);
        let s1 = self.walks[1].std_errors.unwrap_or([0.0; 3]);
        [s0[0], s1[1], s0[2], s1[2]]
    }
}

/// Law of one increment, as needed by [`walk_exact`]: the single-sample law
/// of `ln l_hat` on the lattice of the configured step.
pub fn increment_law(llr: &PiecewiseLLR, observation: Arc<dyn Density>, cfg: &SprtConfig, q: &Quadrature) -> Result<MixedDensity> {
    let levels = LevelCdf::new(llr.model(), observation);
    pushforward(llr, &levels, GridSpec::Step(cfg.grid_step), q)
}

struct Lattice {
    /// Lattice index of `out[0]`.
    base: i64,
    k0: i64,
    k1: i64,
    up: Vec<f64>,
    down: Vec<f64>,
    keep: Vec<f64>,
}

impl Lattice {
    fn new(base: i64, len: usize, k0: i64, k1: i64, step: f64, lo: f64, hi: f64) -> Self {
        let mut up = vec![0.0; len];
        let mut down = vec![0.0; len];
        let mut keep = vec![0.0; len];
        for i in 0..len {
            let k = base + i as i64;
            let (a, b) = ((k as f64 - 0.5) * step, (k as f64 + 0.5) * step);
            let u = ((b - hi) / step).clamp(0.0, 1.0);
            let d = ((lo - a) / step).clamp(0.0, 1.0);
            let (u, d) = if u + d > 1.0 { (u / (u + d), d / (u + d)) } else { (u, d) };
            up[i] = u;
            down[i] = d;
            keep[i] = (1.0 - u - d).max(0.0);
        }
        Self { base, k0, k1, up, down, keep }
    }

    /// Adds `mass` at the real lattice position `pos`, split linearly between
    /// the two neighbouring points. Mass falling off the array exits.
    fn deposit(&self, out: &mut [f64], exits: &mut [f64; 2], pos: f64, mass: f64) {
        let i = pos.floor();
        let frac = pos - i;
        for (k, w) in [(i as i64, 1.0 - frac), (i as i64 + 1, frac)] {
            if w == 0.0 {
                continue;
            }
            let idx = k - self.base;
            if idx < 0 {
                exits[1] += mass * w;
            } else if idx as usize >= out.len() {
                exits[0] += mass * w;
            } else {
                out[idx as usize] += mass * w;
            }
        }
    }
}

/// Kernel spectrum with the forward and inverse plans.
type Spectrum = (Vec<Complex<f64>>, Arc<dyn rustfft::Fft<f64>>, Arc<dyn rustfft::Fft<f64>>);

struct Convolver {
    /// Kernel offsets covered by the FFT window.
    d_lo: i64,
    kernel: Vec<f64>,
    spectrum: Option<Spectrum>,
    state_len: usize,
    size: usize,
}

impl Convolver {
    fn new(kernel: Vec<f64>, d_lo: i64, state_len: usize) -> Self {
        let out_len = state_len + kernel.len() - 1;
        let mut conv = Self { d_lo, kernel, spectrum: None, state_len, size: out_len };
        if state_len > DIRECT_LIMIT && conv.kernel.len() > DIRECT_LIMIT {
            let size = out_len.next_power_of_two();
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(size);
            let inv = planner.plan_fft_inverse(size);
            let mut spec: Vec<Complex<f64>> = conv.kernel.iter().map(|&v| Complex::new(v, 0.0)).collect();
            spec.resize(size, Complex::new(0.0, 0.0));
            fwd.process(&mut spec);
            conv.size = size;
            conv.spectrum = Some((spec, fwd, inv));
        }
        conv
    }

    /// Linear convolution of `state` with the kernel; entry `i` of the result
    /// belongs to state index `i + d_lo`.
    fn apply(&self, state: &[f64]) -> Vec<f64> {
        let out_len = self.state_len + self.kernel.len() - 1;
        match &self.spectrum {
            None => {
                let mut out = vec![0.0; out_len];
                for (k, &s) in state.iter().enumerate() {
                    if s == 0.0 {
                        continue;
                    }
                    for (e, &p) in self.kernel.iter().enumerate() {
                        out[k + e] += s * p;
                    }
                }
                out
            }
            Some((spec, fwd, inv)) => {
                let mut buf: Vec<Complex<f64>> = state.iter().map(|&v| Complex::new(v, 0.0)).collect();
                buf.resize(self.size, Complex::new(0.0, 0.0));
                fwd.process(&mut buf);
                for (b, s) in buf.iter_mut().zip(spec) {
                    *b *= s;
                }
                inv.process(&mut buf);
                let scale = 1.0 / self.size as f64;
                buf[..out_len].iter().map(|c| (c.re * scale).max(0.0)).collect()
            }
        }
    }
}

#[derive(Clone, Copy)]
struct PointMass {
    at: f64,
    mass: f64,
}

/// Exact law of the walk whose increments have law `inc`, which must sit on
/// the lattice of `cfg.grid_step` (see [`increment_law`]).
pub fn walk_exact(inc: &MixedDensity, cfg: &SprtConfig) -> Result<Walk> {
    cfg.validate()?;
    let step = cfg.grid_step;
    let (lo, hi) = (cfg.log_t_l, cfg.log_t_u);
    let d0 = (inc.x0 / step).round() as i64;
    if !inc.pdf.is_empty() && ((inc.dx - step).abs() > 1e-9 * step || (inc.x0 - d0 as f64 * step).abs() > 1e-6 * step) {
        return Err(Error::InvalidParameter(format!(
            "increment law has cells of width {} at {}, expected the lattice of step {step}",
            inc.dx, inc.x0
        )));
    }
    let masses = inc.cell_masses();
    let k0 = (lo / step).ceil() as i64 - 1;
    let k1 = (hi / step).floor() as i64 + 1;
    let m = (k1 - k0 + 1) as usize;
    let w = m as i64 - 1;

    // kernel window: offsets that can move a band point back into the band
    let d_last = d0 + masses.len() as i64 - 1;
    let (d_lo, d_hi) = (d0.max(-w), d_last.min(w));
    let (mut tail_up, mut tail_down) = (0.0, 0.0);
    let mut kernel = Vec::new();
    for (i, &p) in masses.iter().enumerate() {
        let d = d0 + i as i64;
        if d > d_hi {
            tail_up += p;
        } else if d < d_lo {
            tail_down += p;
        } else {
            kernel.push(p);
        }
    }
    let conv = if kernel.is_empty() { None } else { Some(Convolver::new(kernel, d_lo, m)) };
    let base = k0.min(k0 + d_lo) - 1;
    let top = k1.max(k1 + d_hi.max(0)) + 1;
    let len = (top - base + 1) as usize;
    let lattice = Lattice::new(base, len, k0, k1, step, lo, hi);

    let mut cont = vec![0.0; m];
    let mut atoms = vec![PointMass { at: 0.0, mass: 1.0 }];
    let mut walk = Walk {
        p_upper: 0.0,
        p_lower: 0.0,
        expected_n: 0.0,
        exit_upper: Vec::new(),
        exit_lower: Vec::new(),
        truncated_mass: 0.0,
        std_errors: None,
    };
    let mut remaining = 1.0;
    for n in 1..=cfg.max_n {
        let mut out = vec![0.0; len];
        let mut exits = [0.0f64; 2];
        let cont_mass: f64 = cont.iter().sum();
        if cont_mass > 0.0 {
            if let Some(c) = &conv {
                let conv_out = c.apply(&cont);
                let shift = (k0 + c.d_lo - base) as usize;
                for (i, v) in conv_out.into_iter().enumerate() {
                    out[shift + i] += v;
                }
            }
            exits[0] += cont_mass * tail_up;
            exits[1] += cont_mass * tail_down;
            for a in &inc.atoms {
                let off = a.location / step;
                for (k, &v) in cont.iter().enumerate() {
                    if v != 0.0 {
                        lattice.deposit(&mut out, &mut exits, (k0 + k as i64) as f64 + off, v * a.mass);
                    }
                }
            }
        }
        let mut next = Vec::new();
        for s in &atoms {
            let pos = s.at / step;
            for (i, &p) in masses.iter().enumerate() {
                if p != 0.0 {
                    lattice.deposit(&mut out, &mut exits, pos + (d0 + i as i64) as f64, s.mass * p);
                }
            }
            for a in &inc.atoms {
                let at = s.at + a.location;
                let mass = s.mass * a.mass;
                if at >= hi {
                    exits[0] += mass;
                } else if at <= lo {
                    exits[1] += mass;
                } else {
                    next.push(PointMass { at, mass });
                }
            }
        }
        next.sort_by(|a, b| a.at.total_cmp(&b.at));
        atoms.clear();
        for p in next {
            match atoms.last_mut() {
                Some(last) if (last.at - p.at).abs() <= ATOM_MERGE => last.mass += p.mass,
                _ => atoms.push(p),
            }
        }
        atoms.retain(|p| {
            if p.mass < ATOM_FLOOR {
                lattice.deposit(&mut out, &mut exits, p.at / step, p.mass);
                false
            } else {
                true
            }
        });
        for (i, v) in out.iter().enumerate() {
            exits[0] += v * lattice.up[i];
            exits[1] += v * lattice.down[i];
        }
        for (k, c) in cont.iter_mut().enumerate() {
            let i = (lattice.k0 + k as i64 - lattice.base) as usize;
            *c = out[i] * lattice.keep[i];
        }
        debug_assert!(lattice.k1 - lattice.k0 + 1 == m as i64);
        walk.exit_upper.push(exits[0]);
        walk.exit_lower.push(exits[1]);
        walk.p_upper += exits[0];
        walk.p_lower += exits[1];
        walk.expected_n += n as f64 * (exits[0] + exits[1]);
        remaining = cont.iter().sum::<f64>() + atoms.iter().map(|p| p.mass).sum::<f64>();
        if remaining < MASS_FLOOR {
            break;
        }
    }
    walk.truncated_mass = remaining.max(0.0);
    if walk.truncated_mass >= MAX_TRUNCATED {
        return Err(Error::TruncationExceeded { mass: walk.truncated_mass, max_n: cfg.max_n });
    }
    Ok(walk)
}

/// Simulated walk; run `i` draws its observations from stream `i` of `seed`.
pub fn walk_monte_carlo(llr: &PiecewiseLLR, observations: &GridSampler, cfg: &SprtConfig, seed: u64) -> Result<Walk> {
    cfg.validate()?;
    let runs = cfg.mc_runs;
    if runs == 0 {
        return Err(Error::InvalidParameter("mc_runs must be positive".into()));
    }
    let (lo, hi) = (cfg.log_t_l, cfg.log_t_u);
    #[derive(Default)]
    struct Counts {
        up: Vec<u64>,
        down: Vec<u64>,
        truncated: u64,
        sum_n: u64,
        sum_n2: u128,
    }
    let merge = |mut a: Counts, b: Counts| {
        for (dst, src) in [(&mut a.up, &b.up), (&mut a.down, &b.down)] {
            if dst.len() < src.len() {
                dst.resize(src.len(), 0);
            }
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        a.truncated += b.truncated;
        a.sum_n += b.sum_n;
        a.sum_n2 += b.sum_n2;
        a
    };
    let counts = chunks(runs)
        .map(|range| {
            let mut c = Counts::default();
            for i in range {
                let mut rng = stream(seed, i);
                let mut s = 0.0;
                let mut n = 0usize;
                let side = loop {
                    n += 1;
                    s += llr.ln_l_hat(observations.sample(&mut rng));
                    if s >= hi {
                        break Some(0);
                    }
                    if s <= lo {
                        break Some(1);
                    }
                    if n == cfg.max_n {
                        break None;
                    }
                };
                match side {
                    Some(side) => {
                        let v = if side == 0 { &mut c.up } else { &mut c.down };
                        if v.len() < n {
                            v.resize(n, 0);
                        }
                        v[n - 1] += 1;
                        c.sum_n += n as u64;
                        c.sum_n2 += (n as u128) * (n as u128);
                    }
                    None => c.truncated += 1,
                }
            }
            c
        })
        .reduce(Counts::default, merge);
    let r = runs as f64;
    let len = counts.up.len().max(counts.down.len());
    let mut exit_upper: Vec<f64> = counts.up.iter().map(|&c| c as f64 / r).collect();
    let mut exit_lower: Vec<f64> = counts.down.iter().map(|&c| c as f64 / r).collect();
    exit_upper.resize(len, 0.0);
    exit_lower.resize(len, 0.0);
    let p_upper: f64 = counts.up.iter().sum::<u64>() as f64 / r;
    let p_lower: f64 = counts.down.iter().sum::<u64>() as f64 / r;
    let truncated_mass = counts.truncated as f64 / r;
    let mean_n = counts.sum_n as f64 / r;
    let var_n = (counts.sum_n2 as f64 / r - mean_n * mean_n).max(0.0);
    let walk = Walk {
        p_upper,
        p_lower,
        expected_n: mean_n,
        exit_upper,
        exit_lower,
        truncated_mass,
        std_errors: Some([
            (p_upper * (1.0 - p_upper) / r).sqrt(),
            (p_lower * (1.0 - p_lower) / r).sqrt(),
            (var_n / r).sqrt(),
        ]),
    };
    if truncated_mass >= MAX_TRUNCATED {
        return Err(Error::TruncationExceeded { mass: truncated_mass, max_n: cfg.max_n });
    }
    Ok(walk)
}

/// Exact `(alpha, beta, E0[N], E1[N])` from the increment laws under `H0`
/// and `H1`.
pub fn sprt_exact(inc0: &MixedDensity, inc1: &MixedDensity, cfg: &SprtConfig) -> Result<SprtResult> {
    Ok(SprtResult::from_walks(walk_exact(inc0, cfg)?, walk_exact(inc1, cfg)?))
}

/// Simulated `(alpha, beta, E0[N], E1[N])`.
pub fn sprt_monte_carlo(llr: &PiecewiseLLR, obs0: &GridSampler, obs1: &GridSampler, cfg: &SprtConfig) -> Result<SprtResult> {
    let w0 = walk_monte_carlo(llr, obs0, cfg, cfg.seed)?;
    let w1 = walk_monte_carlo(llr, obs1, cfg, cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?;
    Ok(SprtResult::from_walks(w0, w1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFamily {
    M,
    A,
    H,
    C,
}

impl std::str::FromStr for TestFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(TestFamily::M),
            "a" => Ok(TestFamily::A),
            "h" => Ok(TestFamily::H),
            "c" => Ok(TestFamily::C),
            _ => Err(Error::InvalidParameter(format!("unknown test family {s:?}"))),
        }
    }
}

/// Robustness radii: KL radii `eps0`, `eps1` and contamination ratios
/// `eps0_c`, `eps1_c`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Radii {
    pub eps0: f64,
    pub eps1: f64,
    pub eps0_c: f64,
    pub eps1_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// One threshold pair of a [`minimax_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub log_t_l: f64,
    pub log_t_u: f64,
    /// Under the test's own least favorable observations.
    pub reference: SprtResult,
    /// Under the competing observations.
    pub alternative: SprtResult,
}

impl ScanPoint {
    /// `alternative / reference` for `alpha`, `beta`, `E0[N]`, `E1[N]`.
    pub fn ratios(&self) -> [f64; 4] {
        let (a, r) = (&self.alternative, &self.reference);
        [a.alpha / r.alpha, a.beta / r.beta, a.en0 / r.en0, a.en1 / r.en1]
    }
}

pub const RATIO_TAGS: [&str; 4] = ["alpha", "beta", "en0", "en1"];

/// Robust SPRT with its own and competing observation laws.
pub struct ScanSetup {
    pub llr: PiecewiseLLR,
    pub reference: [Arc<dyn Density>; 2],
    pub alternative: [Arc<dyn Density>; 2],
}

impl ScanSetup {
    /// The test of `family` for `radii`, observed under its least favorable
    /// pair and under a competitor:
    ///
    /// * `M`: KL-ball test, competitor the tilted pair of the same radii;
    /// * `A`: tilted-pair test, competitor the KL-ball pair;
    /// * `H`: clipped test, competitor the nominal pair;
    /// * `C`: composite test, competitor the KL-ball pair it contaminates.
    pub fn new(model: &NominalModel, family: TestFamily, radii: &Radii, q: &Quadrature) -> Result<Self> {
        let arc = |s: &dyn LeastFavorable| [s.lfd_density(0), s.lfd_density(1)];
        let nominal: [Arc<dyn Density>; 2] = [
            Arc::new(crate::density::NominalDensity::new(model, 0)),
            Arc::new(crate::density::NominalDensity::new(model, 1)),
        ];
        Ok(match family {
            TestFamily::M => {
                let m = solve_m_test(model, radii.eps0, radii.eps1, q)?;
                let a = solve_a_test(model, radii.eps0, radii.eps1, q)?;
                Self { llr: m.robust_llr(), reference: arc(&m), alternative: arc(&a) }
            }
            TestFamily::A => {
                let m = solve_m_test(model, radii.eps0, radii.eps1, q)?;
                let a = solve_a_test(model, radii.eps0, radii.eps1, q)?;
                Self { llr: a.robust_llr(), reference: arc(&a), alternative: arc(&m) }
            }
            TestFamily::H => {
                let h = solve_h_test(model, radii.eps0_c, radii.eps1_c)?;
                Self { llr: h.robust_llr(), reference: arc(&h), alternative: nominal }
            }
            TestFamily::C => {
                let c = solve_c_test(model, radii.eps0, radii.eps1, radii.eps0_c, radii.eps1_c, q)?;
                Self { llr: c.robust_llr(), reference: arc(&c), alternative: arc(&c.inner) }
            }
        })
    }
}

/// SPRT diagnostics over a grid of `(ln t_l, ln t_u)` pairs.
pub fn minimax_scan(
    model: &NominalModel,
    family: TestFamily,
    radii: &Radii,
    grid: &[(f64, f64)],
    cfg: &SprtConfig,
    method: Method,
    q: &Quadrature,
) -> Result<Vec<ScanPoint>> {
    let setup = ScanSetup::new(model, family, radii, q)?;
    scan_setup(&setup, grid, cfg, method, q)
}

/// [`minimax_scan`] for a prepared setup.
pub fn scan_setup(setup: &ScanSetup, grid: &[(f64, f64)], cfg: &SprtConfig, method: Method, q: &Quadrature) -> Result<Vec<ScanPoint>> {
    match method {
        Method::Exact => {
            let law = |d: &Arc<dyn Density>| increment_law(&setup.llr, d.clone(), cfg, q);
            let r = [law(&setup.reference[0])?, law(&setup.reference[1])?];
            let a = [law(&setup.alternative[0])?, law(&setup.alternative[1])?];
            grid.par_iter()
                .map(|&(lo, hi)| {
                    let c = cfg.with_thresholds(lo, hi);
                    Ok(ScanPoint {
                        log_t_l: lo,
                        log_t_u: hi,
                        reference: sprt_exact(&r[0], &r[1], &c)?,
                        alternative: sprt_exact(&a[0], &a[1], &c)?,
                    })
                })
                .collect()
        }
        Method::MonteCarlo => {
            let model = setup.llr.model();
            let s = |d: &Arc<dyn Density>| GridSampler::for_model(d.clone(), model);
            let r = [s(&setup.reference[0]), s(&setup.reference[1])];
            let a = [s(&setup.alternative[0]), s(&setup.alternative[1])];
            grid.iter()
                .enumerate()
                .map(|(i, &(lo, hi))| {
                    let c = cfg.with_thresholds(lo, hi);
                    let c_ref = SprtConfig { seed: cfg.seed.wrapping_add(2 * i as u64), ..c };
                    let c_alt = SprtConfig { seed: cfg.seed.wrapping_add(2 * i as u64 + 1), ..c };
                    Ok(ScanPoint {
                        log_t_l: lo,
                        log_t_u: hi,
                        reference: sprt_monte_carlo(&setup.llr, &r[0], &r[1], &c_ref)?,
                        alternative: sprt_monte_carlo(&setup.llr, &a[0], &a[1], &c_alt)?,
                    })
                })
                .collect()
        }
    }
}

/// The `count x count` threshold pairs with `ln t_l` running from `lo_min`
/// to `lo_min / count` and `ln t_u` from `hi_max / count` to `hi_max`.
pub fn threshold_grid(lo_min: f64, hi_max: f64, count: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(count * count);
    for i in 0..count {
        let lo = lo_min * (count - i) as f64 / count as f64;
        for j in 1..=count {
            out.push((lo, hi_max * j as f64 / count as f64));
        }
    }
    out
}
