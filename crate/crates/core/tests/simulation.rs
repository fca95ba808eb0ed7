use std::sync::Arc;

use levy_lil::measure::{GammaJumps, Params, TwoSidedPolynomial};
use levy_lil::norming::{closed_form_norming, NormingFunction, NormingRegistry};
use levy_lil::rate::{log_grid_decreasing, RateTable};
use levy_lil::rng::StreamKey;
use levy_lil::simulate::{
    estimate_small_dev, simulate_path, simulate_variance_gamma, PathConfig, SimSettings, SmallJumpMode,
};
use levy_lil::verify::lil_liminf_estimate;
use levy_lil::LevyModel;

fn poly(c1: f64, a1: f64, c2: f64, a2: f64, gamma: f64, sigma2: f64) -> LevyModel {
    LevyModel::new(gamma, sigma2, Arc::new(TwoSidedPolynomial::new(c1, a1, c2, a2).unwrap())).unwrap()
}

fn mean_var(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m, v, m4)
}

#[test]
fn jump_counts_have_the_poisson_mean() {
    let m = poly(1.0, 0.5, 0.0, 0.5, 0.0, 0.0);
    let sampler = m.jump_sampler(0.1).unwrap();
    let horizon = 2.0 / sampler.rate();
    let n = 20_000;
    let total: usize = (0..n)
        .map(|p| {
            let mut rng = StreamKey::new(3, p, 0).stream();
            sampler.sample(horizon, &mut rng).unwrap().len()
        })
        .sum();
    let mean = total as f64 / n as f64;
    // Poisson(2): standard error sqrt(2/n)
    assert!((mean - 2.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "{mean}");
}

#[test]
fn jump_sizes_follow_the_restricted_measure() {
    let (alpha, delta) = (0.5, 0.1);
    let m = poly(1.0, alpha, 0.0, alpha, 0.0, 0.0);
    let mut sizes = Vec::new();
    let mut p = 0;
    while sizes.len() < 5000 {
        let mut rng = StreamKey::new(4, p, 0).stream();
        sizes.extend(m.sample_jumps(delta, 1.0, &mut rng).unwrap().iter().map(|j| j.size));
        p += 1;
    }
    assert!(sizes.iter().all(|&x| x > delta && x <= 1.0));
    sizes.sort_by(f64::total_cmp);
    let tail = |x: f64| (x.powf(-alpha) - 1.0) / alpha;
    let cdf = |x: f64| 1.0 - tail(x) / tail(delta);
    let n = sizes.len() as f64;
    let d = sizes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    // Kolmogorov 1% critical value
    assert!(d * n.sqrt() < 1.63, "KS statistic {}", d * n.sqrt());
}

#[test]
fn jump_signs_split_by_side_mass() {
    let m = poly(1.0, 1.2, 0.5, 0.8, 0.0, 0.0);
    let delta: f64 = 0.05;
    let pos = (1.0 / 1.2) * (delta.powf(-1.2) - 1.0);
    let neg = (0.5 / 0.8) * (delta.powf(-0.8) - 1.0);
    let share = pos / (pos + neg);
    let (mut up, mut all) = (0usize, 0usize);
    for p in 0..2000 {
        let mut rng = StreamKey::new(5, p, 0).stream();
        for j in m.sample_jumps(delta, 1.0, &mut rng).unwrap() {
            all += 1;
            up += usize::from(j.size > 0.0);
        }
    }
    let se = (share * (1.0 - share) / all as f64).sqrt();
    assert!((up as f64 / all as f64 - share).abs() < 4.0 * se);
}

fn endpoint_moments(model: &LevyModel, delta: f64, mode: SmallJumpMode, n: u64) -> (f64, f64, f64) {
    let cfg = PathConfig::new(1.0, 16, delta, mode, 8).unwrap();
    let xs: Vec<f64> = (0..n)
        .map(|p| *simulate_path(model, &cfg, p).unwrap().values.last().unwrap())
        .collect();
    mean_var(&xs)
}

#[test]
fn endpoint_mean_and_variance_match_the_triplet() {
    let n = 100_000u64;
    let cases = [
        ("brownian_drift", LevyModel::brownian(0.5, 1.0).unwrap(), 0.05, SmallJumpMode::GaussianApprox, 1.0),
        (
            "asymmetric_polynomial",
            poly(1.0, 1.2, 0.5, 0.8, 0.3, 0.5),
            0.05,
            SmallJumpMode::GaussianApprox,
            0.5 + 1.0 / 0.8 + 0.5 / 1.2,
        ),
        (
            "symmetric_polynomial",
            poly(1.0, 1.0, 1.0, 1.0, -0.2, 0.0),
            0.05,
            SmallJumpMode::GaussianApprox,
            2.0,
        ),
    ];
    for (name, m, delta, mode, var) in cases {
        let (mean, v, m4) = endpoint_moments(&m, delta, mode, n);
        let nf = n as f64;
        assert!((mean - m.gamma()).abs() < 3.0 * (v / nf).sqrt(), "{name}: mean {mean}");
        assert!((v - var).abs() < 3.0 * ((m4 - v * v) / nf).sqrt(), "{name}: variance {v} vs {var}");
    }
}

#[test]
fn variance_gamma_measure_moments_with_dropped_small_jumps() {
    let m = LevyModel::new(0.2, 0.0, Arc::new(GammaJumps::new(1.0, 1.0, 0.0, 1.0).unwrap())).unwrap();
    let var = m.truncated_moment(1.0, 2).unwrap();
    let (mean, v, m4) = endpoint_moments(&m, 0.01, SmallJumpMode::Drop, 50_000);
    assert!((mean - 0.2).abs() < 3.0 * (v / 5e4).sqrt(), "{mean}");
    assert!((v - var).abs() < 3.0 * ((m4 - v * v) / 5e4).sqrt(), "{v} vs {var}");
}

#[test]
fn brownian_estimate_depends_on_t_over_eps_squared() {
    let m = LevyModel::brownian(0.0, 1.0).unwrap();
    let s = SimSettings { n_steps: 256, refine_levels: 3, ..SimSettings::default() };
    let a = estimate_small_dev(&m, 1.0, 1.0, 40_000, &s).unwrap();
    let b = estimate_small_dev(&m, 0.25, 0.5, 40_000, &SimSettings { seed: 2, ..s }).unwrap();
    let se = (a.p_hat * (1.0 - a.p_hat) / 4e4 + b.p_hat * (1.0 - b.p_hat) / 4e4).sqrt();
    assert!((a.p_hat - b.p_hat).abs() < 3.0 * se, "{} vs {}", a.p_hat, b.p_hat);
}

#[test]
fn halving_delta_keeps_estimate_within_band() {
    let m = poly(0.1, 1.5, 0.1, 1.5, 0.0, 1.0);
    let s = SimSettings { n_steps: 256, refine_levels: 3, delta: 0.1, ..SimSettings::default() };
    let a = estimate_small_dev(&m, 1.0, 1.0, 20_000, &s).unwrap();
    let b = estimate_small_dev(&m, 1.0, 1.0, 20_000, &SimSettings { delta: 0.05, seed: 2, ..s }).unwrap();
    let se = (a.p_hat * (1.0 - a.p_hat) / 2e4 + b.p_hat * (1.0 - b.p_hat) / 2e4).sqrt();
    assert!((a.p_hat - b.p_hat).abs() < 3.0 * se, "{} vs {}", a.p_hat, b.p_hat);
}

#[test]
fn variance_gamma_sup_over_t_does_not_approach_mean_drift() {
    // ‖X‖_t / t for X = B_{A_t} + μ A_t is driven by the rare large clock
    // increments, so its median stays far below |μ| E A_1.
    let (a, b, mu) = (1.0, 1.0, 1.0);
    let t = 1e-4;
    let cfg = PathConfig::new(t, 64, 0.5, SmallJumpMode::Drop, 3).unwrap();
    let mut ratios: Vec<f64> = (0..1000)
        .map(|p| simulate_variance_gamma(a, b, mu, 1.0, &cfg, p).unwrap().sup_norm / t)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[500];
    assert!(median < 0.1 * mu * a / b, "{median}");
}

#[test]
fn lil_ratios_are_not_degenerate() {
    let m = LevyModel::brownian(0.0, 1.0).unwrap();
    let form = NormingRegistry::with_builtin()
        .build("brownian", &Params::new().with("sigma", 1.0))
        .unwrap();
    let nf = NormingFunction::closed_form(form, 1.0).unwrap();
    let s = SimSettings { n_steps: 64, ..SimSettings::default() };
    let r = lil_liminf_estimate(&m, &nf, 0.5, (5, 20), 100, &s).unwrap();
    assert!(r.variance_per_time().iter().all(|&v| v > 0.0));
    assert!(r.q1 <= r.median && r.median <= r.q3);
    let b = closed_form_norming("brownian", &Params::new().with("sigma", 1.0), 1.0, r.times[0]).unwrap();
    assert_eq!(b, nf.eval(r.times[0]).unwrap());
}

#[test]
fn lil_report_is_invariant_under_joint_rescaling() {
    let m = poly(1.0, 1.0, 1.0, 1.0, 0.0, 0.0);
    let grid = log_grid_decreasing(1e-12, 0.5, 120);
    let f = RateTable::from_fn("f", grid.clone(), |e| 4.0 / e - 2.0).unwrap();
    let g = RateTable::from_fn("2f", grid, |e| 2.0 * (4.0 / e - 2.0)).unwrap();
    let a = NormingFunction::from_table(f, 2.0).unwrap();
    let b = NormingFunction::from_table(g, 1.0).unwrap();
    let s = SimSettings { n_steps: 32, ..SimSettings::default() };
    let ra = lil_liminf_estimate(&m, &a, 0.5, (5, 15), 50, &s).unwrap();
    let rb = lil_liminf_estimate(&m, &b, 0.5, (5, 15), 50, &s).unwrap();
    for (x, y) in ra.minima.iter().zip(&rb.minima) {
        assert!((x / y - 1.0).abs() < 1e-12, "{x} vs {y}");
    }
    assert!((ra.median / rb.median - 1.0).abs() < 1e-12);
}
