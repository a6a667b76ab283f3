use std::sync::Arc;

use proptest::prelude::*;
use robust_lfd::density::{LevelCdf, NominalDensity};
use robust_lfd::divergence::divergence_suite;
use robust_lfd::lfd::{solve_h_test, solve_m_test, PiecewiseLLR};
use robust_lfd::limits::{equal_eps_limit, tilt};
use robust_lfd::llr::{error_probabilities, llr_density, log_mgf, GridSpec};
use robust_lfd::model::{NominalModel, Region};
use robust_lfd::quadrature::Quadrature;

fn pair() -> impl Strategy<Value = NominalModel> {
    (-1.0..0.0f64, 0.6..1.8f64, 0.5..2.5f64, 0.6..1.8f64)
        .prop_map(|(m0, s0, d, s1)| NominalModel::gaussian(m0, s0, m0 + d, s1).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadrature_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, lo in -4.0..0.0f64, w in 0.1..6.0f64) {
        let q = Quadrature::default();
        let f = |y: f64| (-y * y).exp();
        let g = |y: f64| y.sin() + 0.3 * y * y;
        let hi = lo + w;
        let both = q.integrate(&|y| a * f(y) + b * g(y), lo, hi).unwrap();
        let split = a * q.integrate(&f, lo, hi).unwrap() + b * q.integrate(&g, lo, hi).unwrap();
        prop_assert!((both - split).abs() < 1e-10 * (1.0 + both.abs()));
    }

    #[test]
    fn divergences_are_non_negative(m in pair()) {
        let d = divergence_suite(&m, &Quadrature::default()).unwrap();
        prop_assert!(d.kl_01 >= 0.0 && d.kl_10 >= 0.0 && d.chi2_sym >= 0.0);
        prop_assert!((0.0..=1.0).contains(&d.hellinger2));
    }

    #[test]
    fn level_sets_partition_the_support(m in pair(), t in -3.0..3.0f64) {
        let q = Quadrature::default();
        for j in 0..2 {
            let below = m.mass(j, &Region::at_most(t), &q).unwrap();
            let above = m.mass(j, &Region::above(t), &q).unwrap();
            prop_assert!((below + above - 1.0).abs() < 1e-10);
        }
        let a = m.level_set(&Region::at_most(t)).length() + m.level_set(&Region::above(t)).length();
        prop_assert!((a - m.width()).abs() < 1e-9);
    }

    #[test]
    fn tilt_radii_are_monotone(m in pair(), u in 0.05..0.9f64, du in 0.01..0.1f64) {
        let q = Quadrature::default();
        let (a, b) = (tilt(&m, u, &q).unwrap(), tilt(&m, u + du, &q).unwrap());
        prop_assert!(b.eps0() >= a.eps0() - 1e-12);
        prop_assert!(b.eps1() <= a.eps1() + 1e-12);
    }

    #[test]
    fn kl_solver_is_deterministic_and_bounded(m in pair(), f0 in 0.05..0.5f64, f1 in 0.05..0.5f64, y in -6.0..6.0f64) {
        let q = Quadrature::default();
        let (_, limit) = equal_eps_limit(&m, &q).unwrap();
        let (e0, e1) = (f0 * limit, f1 * limit);
        let s = solve_m_test(&m, e0, e1, &q).unwrap();
        let t = solve_m_test(&m, e0, e1, &q).unwrap();
        prop_assert_eq!((s.l_l, s.l_u, s.k, s.z), (t.l_l, t.l_u, t.k, t.z));
        prop_assert!(s.l_l < 1.0 && s.l_u > 1.0);
        let llr = s.robust_llr();
        prop_assert!(llr.is_non_decreasing() || !m.is_monotone());
        let d = llr.delta(y);
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn clipped_ratio_stays_in_bounds(m in pair(), e in 0.01..0.2f64, y in -8.0..8.0f64) {
        let Ok(h) = solve_h_test(&m, e, e) else { return Ok(()) };
        let x = h.robust_llr().ln_l_hat(y);
        let (lo, hi) = ((h.b * h.c_l).ln(), (h.b * h.c_u).ln());
        prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12);
        prop_assert!(h.c_l <= 1.0 && h.c_u >= 1.0);
    }

    #[test]
    fn llr_laws_have_unit_mass_and_monotone_errors(m in pair(), e in 0.01..0.2f64) {
        let q = Quadrature::default();
        let Ok(h) = solve_h_test(&m, e, e) else { return Ok(()) };
        let llr = h.robust_llr();
        let laws: Vec<_> = (0..2)
            .map(|j| llr_density(&llr, robust_lfd::lfd::lfd_density(&h, j), GridSpec::Cells(1024), &q).unwrap())
            .collect();
        for d in &laws {
            prop_assert!((d.total_mass() - 1.0).abs() < 1e-9);
        }
        let (lo, hi) = llr.range();
        let mut prev = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=40 {
            let t = lo + (hi - lo) * i as f64 / 40.0;
            let (a, b) = error_probabilities(&laws[0], &laws[1], t);
            prop_assert!(a <= prev.0 + 1e-15 && b >= prev.1 - 1e-15);
            prev = (a, b);
        }
    }

    #[test]
    fn log_mgf_is_convex(m in pair(), u in -1.5..1.5f64, h in 0.05..0.5f64) {
        let q = Quadrature::default();
        let llr = PiecewiseLLR::nominal(&m);
        let f0 = NominalDensity::new(&m, 0);
        let v = [u - h, u, u + h].map(|u| log_mgf(&llr, &f0, u, &q).unwrap().0);
        prop_assert!(v[0] + v[2] - 2.0 * v[1] >= -1e-10);
    }

    #[test]
    fn level_cdf_is_monotone(m in pair(), a in -4.0..4.0f64, b in 0.0..3.0f64) {
        let g = LevelCdf::new(&m, Arc::new(NominalDensity::new(&m, 1)));
        prop_assert!(g.cdf(a) <= g.cdf(a + b) + 1e-15);
    }
}
