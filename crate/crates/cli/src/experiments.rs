//! The experiments behind each subcommand. Every experiment computes its
//! tables in memory; [`write_outputs`] puts them on disk.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use robust_lfd::density::{Density, GridSampler, NominalDensity};
use robust_lfd::fixed_sample::{empirical_pe, FixedSampleTest};
use robust_lfd::lfd::*;
use robust_lfd::limits::{bhattacharyya_distance, chernoff_point, equal_eps_limit, h_limit, m_limit_curve};
use robust_lfd::llr::{mean_llr, rate_point};
use robust_lfd::model::NominalModel;
use robust_lfd::quadrature::Quadrature;
use robust_lfd::sequential::{minimax_scan, threshold_grid, Radii, SprtConfig, TestFamily, RATIO_TAGS};
use robust_lfd::{Error, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Experiment, ExperimentConfig};

/// Files and solver records produced by a run.
#[derive(Debug, Default)]
pub struct Outputs {
    /// `(file name, contents)` in the order written.
    pub files: Vec<(String, String)>,
    pub solvers: Map<String, Value>,
    pub warnings: Vec<String>,
}

/// SHA-256 of the echoed configuration without its output directory, so
/// that the same computation written elsewhere carries the same hash.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Value::Object(m) = &mut v {
        m.remove("output_dir");
    }
    let text = serde_json::to_string_pretty(&v).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Numbers in CSV cells: shortest round-trip form, in exponent notation when
/// tiny or huge.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(hash: &str, header: &[&str]) -> Self {
        Self { text: format!("# config-hash: {hash}\n{}\n", header.join(",")) }
    }

    fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    fn nums(&mut self, values: &[f64]) {
        self.row(&values.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>());
    }
}

struct Solved {
    llr: PiecewiseLLR,
    lfd: [Arc<dyn Density>; 2],
    summary: Value,
}

impl Solved {
    fn from<S: LeastFavorable>(s: &S, summary: Value) -> Self {
        Self { llr: s.robust_llr(), lfd: [s.lfd_density(0), s.lfd_density(1)], summary }
    }
}

fn m_summary(s: &MTestSolution) -> Value {
    json!({
        "l_l": s.l_l, "l_u": s.l_u, "k": s.k, "z": s.z, "eps0": s.eps0, "eps1": s.eps1,
        "middle_mass": s.middle_mass, "residuals": s.residuals, "iterations": s.iterations,
    })
}

fn h_summary(s: &HTestSolution) -> Value {
    json!({
        "c_l": s.c_l, "c_u": s.c_u, "b": s.b, "eps0_c": s.eps0_c, "eps1_c": s.eps1_c,
        "residuals": s.residuals, "warnings": s.warnings,
    })
}

fn a_summary(s: &ATestSolution) -> Value {
    json!({ "u": s.u, "v": s.v, "ku": s.ku, "k1v": s.k1v, "threshold": s.threshold })
}

fn c_summary(s: &CompositeSolution) -> Value {
    json!({ "inner": m_summary(&s.inner), "outer": h_summary(&s.outer) })
}

fn family_tag(f: TestFamily) -> &'static str {
    match f {
        TestFamily::M => "m",
        TestFamily::A => "a",
        TestFamily::H => "h",
        TestFamily::C => "c",
    }
}

fn solve(model: &NominalModel, family: TestFamily, r: &Radii, q: &Quadrature) -> Result<Solved> {
    Ok(match family {
        TestFamily::M => {
            let s = solve_m_test(model, r.eps0, r.eps1, q)?;
            Solved::from(&s, m_summary(&s))
        }
        TestFamily::A => {
            let s = solve_a_test(model, r.eps0, r.eps1, q)?;
            Solved::from(&s, a_summary(&s))
        }
        TestFamily::H => {
            let s = solve_h_test(model, r.eps0_c, r.eps1_c)?;
            Solved::from(&s, h_summary(&s))
        }
        TestFamily::C => {
            let s = solve_c_test(model, r.eps0, r.eps1, r.eps0_c, r.eps1_c, q)?;
            Solved::from(&s, c_summary(&s))
        }
    })
}

/// Observation densities for a rate-curve tag.
fn observations(model: &NominalModel, tag: &str, r: &Radii, q: &Quadrature) -> Result<[Arc<dyn Density>; 2]> {
    let family = match tag {
        "n" => {
            return Ok([Arc::new(NominalDensity::new(model, 0)), Arc::new(NominalDensity::new(model, 1))]);
        }
        "c*" => {
            let a = solve_a_test(model, r.eps0, r.eps1, q)?;
            let h = solve_h_test_pair(&a.pair(), r.eps0_c, r.eps1_c)?;
            return Ok([h.lfd_density(0), h.lfd_density(1)]);
        }
        t => t.parse::<TestFamily>()?,
    };
    Ok(solve(model, family, r, q)?.lfd)
}

fn warnings_of(summary: &Value, out: &mut Vec<String>) {
    match summary {
        Value::Object(m) => {
            for (k, v) in m {
                if k == "warnings" {
                    if let Value::Array(ws) = v {
                        out.extend(ws.iter().filter_map(|w| w.as_str().map(String::from)));
                    }
                } else {
                    warnings_of(v, out);
                }
            }
        }
        Value::Array(vs) => vs.iter().for_each(|v| warnings_of(v, out)),
        _ => {}
    }
}

/// Runs `experiments` in order.
pub fn run(config: &ExperimentConfig, experiments: &[Experiment]) -> Result<Outputs> {
    let model = config.model()?;
    let q = config.quadrature.build()?;
    let hash = config_hash(config);
    let mut out = Outputs::default();
    for &e in experiments {
        match e {
            Experiment::LfdPlot => lfd_plot(config, &model, &q, &hash, &mut out)?,
            Experiment::LlrRatio => llr_ratio(config, &model, &q, &hash, &mut out)?,
            Experiment::LimitCurves => limit_curves(config, &model, &q, &hash, &mut out)?,
            Experiment::RateCurves => rate_curves(config, &model, &q, &hash, &mut out)?,
            Experiment::FssSweep => fss_sweep(config, &model, &q, &hash, &mut out)?,
            Experiment::SprtScan => sprt_scan(config, &model, &q, &hash, &mut out)?,
        }
    }
    let mut warnings = Vec::new();
    warnings_of(&Value::Object(out.solvers.clone()), &mut warnings);
    warnings.sort();
    warnings.dedup();
    out.warnings = warnings;
    Ok(out)
}

fn lfd_plot(c: &ExperimentConfig, model: &NominalModel, q: &Quadrature, hash: &str, out: &mut Outputs) -> Result<()> {
    let r = &c.eps;
    let m = solve_m_test(model, r.eps0, r.eps1, q)?;
    let cs = solve_c_test(model, r.eps0, r.eps1, r.eps0_c, r.eps1_c, q)?;
    let (g0, g1, q0, q1) = (m.density(0), m.density(1), cs.density(0), cs.density(1));
    let mut csv = Csv::new(hash, &["y", "f0", "f1", "g0_hat", "g1_hat", "q0_hat", "q1_hat"]);
    for y in model.grid(c.lfd.points) {
        csv.nums(&[y, model.f(0, y), model.f(1, y), g0.pdf(y), g1.pdf(y), q0.pdf(y), q1.pdf(y)]);
    }
    out.files.push(("lfd.csv".into(), csv.text));
    out.solvers.insert("m".into(), m_summary(&m));
    out.solvers.insert("c".into(), c_summary(&cs));
    Ok(())
}

fn llr_ratio(c: &ExperimentConfig, model: &NominalModel, q: &Quadrature, hash: &str, out: &mut Outputs) -> Result<()> {
    let s = solve(model, c.lfd.test, &c.eps, q)?;
    let mut csv = Csv::new(hash, &["y", "l", "l_hat", "ratio"]);
    for y in model.grid(c.lfd.points) {
        let ratio = (s.llr.ln_l_hat(y) - model.ln_l(y)).exp();
        csv.nums(&[y, model.l(y), s.llr.l_hat(y), ratio]);
    }
    out.files.push(("llr.csv".into(), csv.text));
    out.solvers.insert(family_tag(c.lfd.test).into(), s.summary);
    Ok(())
}

fn limit_curves(c: &ExperimentConfig, model: &NominalModel, q: &Quadrature, hash: &str, out: &mut Outputs) -> Result<()> {
    let curve = m_limit_curve(model, c.limits.points, q)?;
    let mut csv = Csv::new(hash, &["u", "eps0", "eps1"]);
    for s in &curve.samples {
        csv.nums(&[s.u, s.eps0, s.eps1]);
    }
    out.files.push(("limits.csv".into(), csv.text));

    // largest contamination of H1 for each contamination of H0
    let mut h = Csv::new(hash, &["eps0_c", "eps1_c"]);
    let n = c.limits.points;
    for i in 1..n {
        let e0 = i as f64 / n as f64;
        match h_limit(model, e0, 0) {
            Ok(e1) => h.nums(&[e0, e1]),
            Err(Error::NoRoot(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    out.files.push(("h_limits.csv".into(), h.text));

    let (u, eps) = equal_eps_limit(model, q)?;
    let (cu, cd) = chernoff_point(model, q)?;
    out.solvers.insert(
        "limits".into(),
        json!({
            "equal_eps": { "u": u, "eps": eps },
            "chernoff": { "u": cu, "distance": cd },
            "bhattacharyya": bhattacharyya_distance(model, q)?,
            "monotonicity_violations": curve.monotonicity_violations(),
        }),
    );
    Ok(())
}

fn rate_curves(c: &ExperimentConfig, model: &NominalModel, q: &Quadrature, hash: &str, out: &mut Outputs) -> Result<()> {
    let test = solve(model, c.rates.test, &c.eps, q)?;
    let lo = mean_llr(&test.llr, test.lfd[0].as_ref(), q)?;
    let hi = mean_llr(&test.llr, test.lfd[1].as_ref(), q)?;
    let n = c.rates.points;
    let ts: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let mut csv = Csv::new(hash, &["t", "I0", "I1", "source_tag"]);
    for tag in &c.rates.observations {
        let obs = observations(model, tag, &c.eps, q)?;
        for &t in &ts {
            let r = rate_point(&test.llr, obs[0].as_ref(), obs[1].as_ref(), t, q)?;
            csv.row(&[fmt_num(t), fmt_num(r.i0), fmt_num(r.i1), tag.clone()]);
        }
    }
    out.files.push(("rates.csv".into(), csv.text));
    out.solvers.insert(family_tag(c.rates.test).into(), test.summary);
    Ok(())
}

fn fss_sweep(c: &ExperimentConfig, model: &NominalModel, q: &Quadrature, hash: &str, out: &mut Outputs) -> Result<()> {
    let eps_grid = if c.fss.eps.is_empty() {
        let (_, limit) = equal_eps_limit(model, q)?;
        let n = c.fss.points;
        (1..=n).map(|k| limit * k as f64 / (n + 1) as f64).collect()
    } else {
        c.fss.eps.clone()
    };
    let mut csv = Csv::new(hash, &["eps", "pe", "pe0", "pe1", "observation_tag"]);
    let mut records = Vec::new();
    for (i, &eps) in eps_grid.iter().enumerate() {
        let m = solve_m_test(model, eps, eps, q)?;
        let a = solve_a_test(model, eps, eps, q)?;
        let test = FixedSampleTest::m_test(&m, c.fss.n)?;
        for (t, (tag, d)) in [("m", [m.lfd_density(0), m.lfd_density(1)]), ("a", [a.lfd_density(0), a.lfd_density(1)])]
            .into_iter()
            .enumerate()
        {
            let s0 = GridSampler::for_model(d[0].clone(), model);
            let s1 = GridSampler::for_model(d[1].clone(), model);
            let seed = c.seed.wrapping_add((2 * i + t) as u64);
            let (pe, pe0, pe1) = empirical_pe(&test, &s0, &s1, c.fss.runs, seed)?;
            csv.row(&[fmt_num(eps), fmt_num(pe.rate), fmt_num(pe0.rate), fmt_num(pe1.rate), tag.into()]);
        }
        records.push(json!({ "eps": eps, "m": m_summary(&m), "a": a_summary(&a) }));
    }
    out.files.push(("fss.csv".into(), csv.text));
    out.solvers.insert("fss".into(), Value::Array(records));
    Ok(())
}

fn sprt_scan(c: &ExperimentConfig, model: &NominalModel, q: &Quadrature, hash: &str, out: &mut Outputs) -> Result<()> {
    let o = &c.sprt;
    let grid = threshold_grid(o.lo_min, o.hi_max, o.count);
    let cfg = SprtConfig {
        log_t_l: o.lo_min,
        log_t_u: o.hi_max,
        max_n: o.max_n,
        mc_runs: o.mc_runs,
        seed: c.seed,
        grid_step: o.grid_step,
    };
    let points = minimax_scan(model, o.test, &c.eps, &grid, &cfg, o.method, q)?;
    let mut csv = Csv::new(hash, &["log_tl", "log_tu", "alpha", "beta", "en0", "en1", "ratio_tag", "ratio"]);
    let mut truncated = 0.0f64;
    for p in &points {
        let r = &p.reference;
        truncated = truncated.max(r.truncated_mass()).max(p.alternative.truncated_mass());
        for (tag, ratio) in RATIO_TAGS.iter().zip(p.ratios()) {
            let mut cells: Vec<String> = [p.log_t_l, p.log_t_u, r.alpha, r.beta, r.en0, r.en1].map(fmt_num).to_vec();
            cells.push(tag.to_string());
            cells.push(fmt_num(ratio));
            csv.row(&cells);
        }
    }
    out.files.push(("sprt.csv".into(), csv.text));
    let test = solve(model, o.test, &c.eps, q)?;
    out.solvers.insert(
        "sprt".into(),
        json!({ "test": family_tag(o.test), "solution": test.summary, "points": points.len(), "max_truncated_mass": truncated }),
    );
    Ok(())
}

/// Run record written next to the tables.
pub fn manifest(config: &ExperimentConfig, experiments: &[Experiment], out: &Outputs) -> String {
    let echo: Value = serde_json::from_str(&config.echo()).expect("echo is JSON");
    let m = json!({
        "config": echo,
        "config_hash": config_hash(config),
        "experiments": experiments.iter().map(|e| e.id()).collect::<Vec<_>>(),
        "files": out.files.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
        "seed": config.seed,
        "solvers": out.solvers,
        "warnings": out.warnings,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    s
}

/// Writes every table and the manifest into `dir`.
pub fn write_outputs(dir: &Path, manifest: &str, out: &Outputs) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, text) in &out.files {
        fs::write(dir.join(name), text)?;
    }
    fs::write(dir.join("manifest.json"), manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.5, -2.25e-7, 3e20, 0.1 + 0.2, 1e-4] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(1e-7), "1e-7");
        assert_eq!(fmt_num(0.5), "0.5");
    }
}
