use robust_lfd::divergence::divergence_suite;
use robust_lfd::lfd::solve_h_test;
use robust_lfd::limits::*;
use robust_lfd::model::NominalModel;
use robust_lfd::quadrature::Quadrature;
use robust_lfd::Error;

fn shift() -> NominalModel {
    NominalModel::gaussian(-1.0, 1.0, 1.0, 1.0).unwrap()
}

fn gauss_kl(m0: f64, s0: f64, m1: f64, s1: f64) -> f64 {
    (s1 / s0).ln() + (s0 * s0 + (m0 - m1).powi(2)) / (2.0 * s1 * s1) - 0.5
}

fn gauss_bhattacharyya(m0: f64, s0: f64, m1: f64, s1: f64) -> f64 {
    let v = s0 * s0 + s1 * s1;
    0.25 * (m0 - m1).powi(2) / v + 0.5 * (v / (2.0 * s0 * s1)).ln()
}

#[test]
fn divergences_of_gaussian_pairs() {
    let q = Quadrature::default();
    for (m0, s0, m1, s1) in [(-1.0, 1.0, 1.0, 1.0), (-1.0, 1.0, 1.0, 2.0), (0.0, 1.5, 0.5, 0.8)] {
        let m = NominalModel::gaussian(m0, s0, m1, s1).unwrap();
        let d = divergence_suite(&m, &q).unwrap();
        assert!((d.kl_01 - gauss_kl(m0, s0, m1, s1)).abs() < 1e-9);
        assert!((d.kl_10 - gauss_kl(m1, s1, m0, s0)).abs() < 1e-9);
        let b = gauss_bhattacharyya(m0, s0, m1, s1);
        assert!((bhattacharyya_distance(&m, &q).unwrap() - b).abs() < 1e-9);
        assert!((d.hellinger2 - (1.0 - (-b).exp())).abs() < 1e-9);
    }
}

// for N(-1,1) against N(1,1): ln k(u) = -2u(1-u), eps0 = 2u^2, eps1 = 2(1-u)^2
#[test]
fn shift_pair_tilt_closed_form() {
    let q = Quadrature::default();
    let m = shift();
    for u in [0.1, 0.37, 0.5, 0.9] {
        let t = tilt(&m, u, &q).unwrap();
        assert!((t.ln_k + 2.0 * u * (1.0 - u)).abs() < 1e-10);
        assert!((t.mean - (4.0 * u - 2.0)).abs() < 1e-10);
        assert!((t.eps0() - 2.0 * u * u).abs() < 1e-10);
        assert!((t.eps1() - 2.0 * (1.0 - u).powi(2)).abs() < 1e-10);
    }
    let (u, c) = chernoff_point(&m, &q).unwrap();
    assert!((u - 0.5).abs() < 1e-6 && (c - 0.5).abs() < 1e-10);
    for e in [0.01, 0.2, 1.0] {
        let want = 2.0 * (1.0 - (e / 2.0f64).sqrt()).powi(2);
        assert!((m_max_partner(&m, e, 0, &q).unwrap() - want).abs() < 1e-9);
        assert!((m_max_partner(&m, e, 1, &q).unwrap() - want).abs() < 1e-9);
    }
    let p = limit_point(&m, 0.08, 0, &q).unwrap();
    assert!((p.u - 0.2).abs() < 1e-9);
}

#[test]
fn limit_curve_endpoints() {
    let q = Quadrature::default();
    let m = NominalModel::gaussian(-1.0, 1.0, 1.0, 2.0).unwrap();
    let curve = m_limit_curve(&m, 101, &q).unwrap();
    let d = divergence_suite(&m, &q).unwrap();
    let (first, last) = (curve.samples[0], *curve.samples.last().unwrap());
    assert!(first.eps0.abs() < 1e-12 && (first.eps1 - d.kl_01).abs() < 1e-9);
    assert!(last.eps1.abs() < 1e-12 && (last.eps0 - d.kl_10).abs() < 1e-9);
    assert_eq!(curve.monotonicity_violations(), 0);
    assert!(matches!(limit_point(&m, d.kl_10 * 1.01, 0, &q), Err(Error::OutOfRange { .. })));
}

#[test]
fn h_limit_marks_feasibility() {
    let m = shift();
    for eps0 in [0.01, 0.1, 0.3] {
        let e1 = h_limit(&m, eps0, 0).unwrap();
        assert!(e1 > 0.0 && e1 < 1.0);
        assert!(solve_h_test(&m, eps0, e1 * 0.99).is_ok());
        assert!(solve_h_test(&m, eps0, e1 * 1.01 + 1e-6).is_err());
        // mirror-image nominals give the same limit from either side
        assert!((h_limit(&m, eps0, 1).unwrap() - e1).abs() < 1e-9);
    }
    assert!(matches!(h_limit(&m, 0.0, 0), Err(Error::NoRoot(_))));
    assert!(matches!(h_limit(&m, 1.0, 0), Err(Error::OutOfRange { .. })));
}
