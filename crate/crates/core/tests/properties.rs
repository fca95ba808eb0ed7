use std::sync::Arc;

use proptest::prelude::*;

use levy_lil::measure::{
    GammaJumps, SubordinatedBrownian, Subordinator, SymmetricLogPolynomial, TwoSidedPolynomial,
};
use levy_lil::norming::{closed_form_norming, geometric_times, invert_rate, loglog, t_max, NormingFunction};
use levy_lil::rate::{
    evaluate_rate, lambda_eps, lambda_eps_prime, lambda_eps_second, log_grid_decreasing, rate_general,
    rate_symmetric, sd_bounds, solve_esscher_drift, truncated_variance, RateTable, DEFAULT_ROOT_TOL,
};
use levy_lil::measure::Params;
use levy_lil::LevyModel;

fn poly(c1: f64, a1: f64, c2: f64, a2: f64, gamma: f64, sigma2: f64) -> LevyModel {
    LevyModel::new(gamma, sigma2, Arc::new(TwoSidedPolynomial::new(c1, a1, c2, a2).unwrap())).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn catalog() -> Vec<(&'static str, LevyModel)> {
    vec![
        ("brownian", LevyModel::brownian(0.0, 1.0).unwrap()),
        ("brownian_drift", LevyModel::brownian(0.5, 1.0).unwrap()),
        ("symmetric_polynomial", poly(1.0, 1.0, 1.0, 1.0, 0.0, 0.0)),
        ("one_sided_polynomial", poly(1.0, 1.5, 0.0, 1.5, 0.0, 0.0)),
        ("asymmetric_polynomial", poly(1.0, 1.2, 0.5, 0.8, 0.3, 0.5)),
        (
            "log_polynomial",
            LevyModel::new(0.0, 0.0, Arc::new(SymmetricLogPolynomial::new(1.0, 1.0, 1.0).unwrap())).unwrap(),
        ),
        (
            "gamma_jumps",
            LevyModel::new(0.0, 0.0, Arc::new(GammaJumps::new(1.0, 1.0, 0.0, 1.0).unwrap())).unwrap(),
        ),
        (
            "stable_subordinated",
            LevyModel::new(
                0.0,
                0.0,
                Arc::new(SubordinatedBrownian::new(Subordinator::stable(0.5, 1.0).unwrap(), 0.0, 1.0).unwrap()),
            )
            .unwrap(),
        ),
    ]
}

fn asymmetric() -> impl Strategy<Value = LevyModel> {
    (0.1f64..2.0, 0.2f64..1.8, 0.0f64..2.0, 0.2f64..1.8, -1.0f64..1.0, 0.0f64..1.0)
        .prop_map(|(c1, a1, c2, a2, g, s2)| poly(c1, a1.max(a2), c2, a1.min(a2), g, s2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tail_and_moment_are_monotone_and_sum_to_u(m in asymmetric(), e1 in 1e-4f64..1.0, e2 in 1e-4f64..1.0) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(m.tail_mass(hi).unwrap() <= m.tail_mass(lo).unwrap());
        prop_assert!(m.truncated_moment(lo, 2).unwrap() <= m.truncated_moment(hi, 2).unwrap());
        for e in [lo, hi] {
            let sum = e * e * m.tail_mass(e).unwrap() + m.truncated_moment(e, 2).unwrap() + m.sigma2();
            let u = truncated_variance(&m, e).unwrap();
            prop_assert!(rel(sum, u) < 1e-14, "{} vs {}", sum, u);
        }
    }

    #[test]
    fn polynomial_tail_closed_form_matches_quadrature(
        c1 in 0.1f64..3.0, a1 in 0.1f64..1.95, c2 in 0.1f64..3.0, a2 in 0.1f64..1.95, le in -4.0f64..0.0,
    ) {
        let e = 10f64.powf(le);
        let m = poly(c1, a1.max(a2), c2, a1.min(a2), 0.0, 0.0);
        let q = m.clone().quadrature_only();
        prop_assert!(rel(q.tail_mass(e).unwrap(), m.tail_mass(e).unwrap()) < 1e-8);
        prop_assert!(rel(q.truncated_moment(e, 2).unwrap(), m.truncated_moment(e, 2).unwrap()) < 1e-8);
    }

    #[test]
    fn tilted_second_moment_is_bracketed(m in asymmetric(), e in 1e-3f64..1.0, z in -20.0f64..20.0) {
        let u = z / e;
        let base = m.truncated_moment(e, 2).unwrap();
        let t = m.tilted_second_moment(e, u).unwrap();
        let w = (u.abs() * e).exp();
        prop_assert!(t >= base / w * (1.0 - 1e-10));
        prop_assert!(t <= base * w * (1.0 + 1e-10));
    }

    #[test]
    fn lambda_second_matches_finite_difference(m in asymmetric(), e in 1e-3f64..1.0, z in -10.0f64..10.0) {
        let u = z / e;
        let h = 1e-4 * (1.0 + u.abs());
        let fd = (lambda_eps_prime(&m, e, u + h).unwrap() - lambda_eps_prime(&m, e, u - h).unwrap()) / (2.0 * h);
        let exact = lambda_eps_second(&m, e, u).unwrap();
        prop_assert!(exact >= 0.0);
        prop_assert!(rel(fd, exact) < 1e-6, "fd {} exact {}", fd, exact);
    }

    #[test]
    fn esscher_root_minimises_lambda(m in asymmetric(), le in -3.0f64..0.0) {
        let e = 10f64.powf(le);
        let s = solve_esscher_drift(&m, e, DEFAULT_ROOT_TOL);
        prop_assume!(matches!(&s, Ok(s) if s.converged));
        let s = s.unwrap();
        prop_assert!(s.lambda_at_root <= 1e-12 * (1.0 + s.lambda_at_root.abs()));
        let h = 1e-3 * (1.0 + s.u_eps.abs());
        for u in [s.u_eps - h, s.u_eps + h] {
            prop_assert!(s.lambda_at_root <= lambda_eps(&m, e, u).unwrap() + 1e-12);
        }
    }

    #[test]
    fn general_rate_reduces_to_symmetric(c in 0.1f64..3.0, a in 0.1f64..1.9, s2 in 0.0f64..1.0, le in -4.0f64..0.0) {
        let e = 10f64.powf(le);
        let m = poly(c, a, c, a, 0.0, s2);
        prop_assert!(rel(rate_general(&m, e).unwrap(), rate_symmetric(&m, e).unwrap()) < 1e-10);
    }

    #[test]
    fn polynomial_rate_closed_form_matches_quadrature(m in asymmetric(), le in -3.0f64..-0.3) {
        let e = 10f64.powf(le);
        let a = evaluate_rate(&m, e);
        prop_assume!(a.is_ok());
        let b = evaluate_rate(&m.clone().quadrature_only(), e).unwrap();
        prop_assert!(rel(b.f, a.unwrap().f) < 1e-8);
    }

    #[test]
    fn sd_bounds_are_strictly_ordered(m in asymmetric(), lt in -3.0f64..1.0, le in -3.0f64..0.0) {
        let b = sd_bounds(&m, 10f64.powf(lt), 10f64.powf(le));
        prop_assume!(b.is_ok());
        let b = b.unwrap();
        prop_assert!(b.lower < b.upper);
    }

    #[test]
    fn norming_scales_as_power_of_lambda(alpha in 0.5f64..2.0, lambda in 0.25f64..4.0, lt in -8.0f64..-2.0) {
        let t = 10f64.powf(lt);
        let table = RateTable::from_fn("power", log_grid_decreasing(1e-40, 0.5, 200), |e| e.powf(-alpha)).unwrap();
        let b1 = NormingFunction::from_table(table.clone(), 1.0).unwrap().eval(t).unwrap();
        let bl = NormingFunction::from_table(table, lambda).unwrap().eval(t).unwrap();
        prop_assert!(rel(bl, lambda.powf(1.0 / alpha) * b1) < 1e-3);
    }

    #[test]
    fn lambda_and_rate_rescaling_agree(lambda in 0.25f64..4.0, lt in -8.0f64..-2.0) {
        let t = 10f64.powf(lt);
        let grid = log_grid_decreasing(1e-12, 0.5, 120);
        let f = RateTable::from_fn("f", grid.clone(), |e| 4.0 / e - 2.0).unwrap();
        let g = RateTable::from_fn("lf", grid, |e| lambda * (4.0 / e - 2.0)).unwrap();
        let a = NormingFunction::from_table(f, lambda).unwrap().eval(t).unwrap();
        let b = NormingFunction::from_table(g, 1.0).unwrap().eval(t).unwrap();
        prop_assert!(rel(a, b) < 1e-9);
    }
}

#[test]
fn catalog_tables_are_strictly_monotone() {
    let grid = log_grid_decreasing(1e-4, 0.5, 30);
    for (name, m) in catalog() {
        let t = RateTable::build_auto(&m, grid.clone()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(t.f_values().windows(2).all(|w| w[1] > w[0]), "{name}");
    }
}

#[test]
fn catalog_norming_is_nondecreasing() {
    let grid = log_grid_decreasing(1e-60, 0.5, 80);
    for (name, m) in catalog() {
        let table = RateTable::build_auto(&m, grid.clone()).unwrap_or_else(|e| panic!("{name}: {e}"));
        // smallest t whose level log|log t| / t the table still covers
        let mut t_lo = 1.0 / table.f_max();
        for _ in 0..20 {
            t_lo = 1.01 * loglog(t_lo) / table.f_max();
        }
        let nf = NormingFunction::from_table(table, 1.0).unwrap();
        let times = geometric_times(t_lo.max(1e-12), t_max(), 50);
        let b: Vec<f64> = times.iter().map(|&t| nf.eval(t).unwrap()).collect();
        // times run downwards
        assert!(b.windows(2).all(|w| w[1] <= w[0]), "{name}: {b:?}");
    }
}

#[test]
fn inversion_round_trips() {
    let m = poly(1.0, 1.0, 1.0, 1.0, 0.0, 0.0);
    let grid = log_grid_decreasing(1e-5, 0.5, 120);
    let table = RateTable::build_auto(&m, grid.clone()).unwrap();
    for (&e, &f) in table.eps_grid().iter().zip(table.f_values()) {
        assert!(rel(invert_rate(&table, f).unwrap(), e) < 1e-9, "{e}");
    }
    for w in grid.windows(2) {
        let mid = (w[0] * w[1]).sqrt();
        let f = rate_symmetric(&m, mid).unwrap();
        assert!(rel(invert_rate(&table, f).unwrap(), mid) < 1e-3, "{mid}");
    }
}

#[test]
fn brownian_closed_form_matches_sharp_table() {
    let c = std::f64::consts::PI.powi(2) / 8.0;
    let table = RateTable::from_fn("sharp", log_grid_decreasing(1e-7, 0.5, 120), |e| c / (e * e)).unwrap();
    let nf = NormingFunction::from_table(table, 1.0).unwrap();
    let p = Params::new().with("sigma", 1.0);
    for t in geometric_times(1e-10, t_max(), 40) {
        let closed = closed_form_norming("brownian", &p, 1.0, t).unwrap();
        assert!(rel(nf.eval(t).unwrap(), closed) < 1e-3, "{t}");
        assert!(loglog(t) > 0.0);
    }
}
