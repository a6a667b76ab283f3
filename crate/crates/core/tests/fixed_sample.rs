use std::sync::Arc;

use rand::Rng;
use robust_lfd::density::{Density, GridSampler, NominalDensity};
use robust_lfd::fixed_sample::*;
use robust_lfd::lfd::{solve_a_test, solve_c_test, solve_h_test, solve_m_test};
use robust_lfd::model::NominalModel;
use robust_lfd::quadrature::Quadrature;
use robust_lfd::rng::stream;

fn scale() -> NominalModel {
    NominalModel::gaussian(-1.0, 1.0, 1.0, 2.0).unwrap()
}

fn sampler(m: &NominalModel, d: Arc<dyn Density>) -> GridSampler {
    GridSampler::for_model(d, m)
}

fn random_vector(seed: u64, i: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, i);
    (0..n).map(|_| rng.random_range(-5.0..7.0)).collect()
}

#[test]
fn composite_without_contamination_decides_like_the_kl_test() {
    let q = Quadrature::default();
    let m = scale();
    let c = FixedSampleTest::c_test(&solve_c_test(&m, 0.15, 0.05, 0.0, 0.0, &q).unwrap(), 5).unwrap();
    let t = FixedSampleTest::m_test(&solve_m_test(&m, 0.15, 0.05, &q).unwrap(), 5).unwrap();
    for i in 0..10_000 {
        let y = random_vector(3, i, 5);
        assert_eq!(c.decide(&y, i), t.decide(&y, i));
    }
}

#[test]
fn displayed_statistic_agrees_with_the_decision() {
    let q = Quadrature::default();
    let m = scale();
    let tests = [
        FixedSampleTest::nominal(&m, 4).unwrap(),
        FixedSampleTest::m_test(&solve_m_test(&m, 0.15, 0.05, &q).unwrap(), 4).unwrap(),
        FixedSampleTest::h_test(&solve_h_test(&m, 0.02, 0.02).unwrap(), 4).unwrap(),
        FixedSampleTest::c_test(&solve_c_test(&m, 0.15, 0.05, 0.02, 0.02, &q).unwrap(), 4).unwrap(),
        FixedSampleTest::a_test(&solve_a_test(&m, 0.01, 0.01, &q).unwrap(), 4).unwrap(),
    ];
    for test in tests {
        for ln_gamma in [-1.5, 0.0, 2.0] {
            let test = test.clone().with_ln_gamma(ln_gamma);
            for i in 0..2000 {
                let y = random_vector(11, i, 4);
                let s = test.statistic(&y);
                let gap = s.lhs - s.rhs;
                if gap.abs() < 1e-9 * (1.0 + s.lhs.abs() + s.rhs.abs()) {
                    continue;
                }
                assert_eq!(test.decide(&y, i).rejects(), gap > 0.0, "{:?} at {y:?}", test.form);
            }
        }
    }
}

#[test]
fn clip_counts() {
    let m = scale();
    let h = solve_h_test(&m, 0.02, 0.02).unwrap();
    let t = FixedSampleTest::h_test(&h, 3).unwrap();
    // ln l is large far in the tails and negative near y = -1.7
    let s = t.statistic(&[12.0, -12.0, -1.5]);
    assert_eq!((s.n_high, s.n_low), (2, 1));
    assert_eq!(s.lhs, 0.0);
}

#[test]
fn standard_error_halves_with_four_times_the_runs() {
    let m = scale();
    let t = FixedSampleTest::nominal(&m, 3).unwrap();
    let s0 = sampler(&m, Arc::new(NominalDensity::new(&m, 0)));
    let a = empirical_error(&t, &s0, 0, 20_000, 5).unwrap();
    let b = empirical_error(&t, &s0, 0, 80_000, 5).unwrap();
    let ratio = a.std_error / b.std_error;
    assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    assert!((a.rate - b.rate).abs() < 3.0 * a.std_error);
    assert!(empirical_error(&t, &s0, 0, 999, 5).is_err());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let q = Quadrature::default();
    let m = scale();
    let sol = solve_m_test(&m, 0.15, 0.05, &q).unwrap();
    let t = FixedSampleTest::m_test(&sol, 2).unwrap();
    let s0 = sampler(&m, Arc::new(sol.density(0)));
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| empirical_error(&t, &s0, 0, 30_000, 77).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn kl_test_errs_less_under_the_a_lfd() {
    let q = Quadrature::default();
    let m = scale();
    let ms = solve_m_test(&m, 0.01, 0.01, &q).unwrap();
    let a = solve_a_test(&m, 0.01, 0.01, &q).unwrap();
    let t = FixedSampleTest::m_test(&ms, 1).unwrap();
    let own = [sampler(&m, Arc::new(ms.density(0))), sampler(&m, Arc::new(ms.density(1)))];
    let other = [sampler(&m, Arc::new(a.density(0))), sampler(&m, Arc::new(a.density(1)))];
    let (lfd, _, _) = empirical_pe(&t, &own[0], &own[1], 200_000, 1).unwrap();
    let (alt, _, _) = empirical_pe(&t, &other[0], &other[1], 200_000, 2).unwrap();
    let se = (lfd.std_error.powi(2) + alt.std_error.powi(2)).sqrt();
    assert!(alt.rate <= lfd.rate + 2.0 * se, "{} > {}", alt.rate, lfd.rate);
}

#[test]
fn soft_sign_is_the_wide_band_limit() {
    let q = Quadrature::default();
    let m = NominalModel::gaussian(-1.0, 1.0, 1.0, 1.0).unwrap();
    let sol = solve_m_test(&m, 0.4, 0.4, &q).unwrap();
    let y = [0.1, -0.3, 0.05];
    let t = FixedSampleTest::soft_sign(&sol, 3).unwrap();
    let s = t.statistic(&y);
    assert!((s.lhs - limiting_m_statistic(&sol, &y)).abs() < 1e-15);
    assert_eq!(s.rhs, 1.5);
    let sign = FixedSampleTest::sign(&m, 3).unwrap().statistic(&y);
    assert_eq!(sign.lhs, 2.0);
}
