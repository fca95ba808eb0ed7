use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use levy_lil::io::{self, CsvTable, Summary};

const BROWNIAN: &str = "model.family = none\nmodel.sigma2 = 1\nnorming.family = brownian\nnorming.sigma = 1\n";

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_levy-lil"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn rate_brownian_is_inverse_square() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), BROWNIAN, &["rate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = io::rate_table_from_csv(&read(d.path(), "rate.csv")).unwrap();
    for (e, f) in table.eps_grid().iter().zip(table.f_values()) {
        assert!((f * e * e - 1.0).abs() < 1e-12, "{e}: {f}");
    }
    let s = Summary::parse(&read(d.path(), "rate_summary.txt")).unwrap();
    assert_eq!(s.get("symmetric"), Some("true"));
    assert_eq!(s.get("esscher_ratio.trend"), Some("decreasing"));
}

#[test]
fn rate_symmetric_polynomial_row() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "model.family = two_sided_polynomial\nmodel.c1 = 1\nmodel.alpha1 = 1\nmodel.c2 = 1\nmodel.alpha2 = 1\n\
               rate.eps_max = 0.1\nrate.n_points = 20\n";
    let o = run(d.path(), cfg, &["rate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = CsvTable::parse(&read(d.path(), "rate.csv")).unwrap();
    assert_eq!(t.rows[0][0], "0.1");
    let f: f64 = t.rows[0][1].parse().unwrap();
    assert!((f - 38.0).abs() < 1e-8 * 38.0, "{f}");
}

#[test]
fn rate_drift_dominated_prints_notice() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "model.family = two_sided_polynomial\nmodel.c1 = 0.01\nmodel.alpha1 = 0.5\nmodel.gamma = 2.02\n";
    let o = run(d.path(), cfg, &["rate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!d.path().join("out/rate.csv").exists());
    let s = Summary::parse(&read(d.path(), "rate_summary.txt")).unwrap();
    assert_eq!(s.get("regime"), Some("DriftDominated"));
    let c: f64 = s.get("drift").unwrap().parse().unwrap();
    assert!((c - 2.0).abs() < 1e-9);

    let o = run(d.path(), cfg, &["norming"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (t, b) in io::curve_from_csv(&read(d.path(), "norming.csv")).unwrap() {
        assert!((b / (c * t) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn norming_brownian_at_t_max() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), BROWNIAN, &["norming"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = io::curve_from_csv(&read(d.path(), "norming.csv")).unwrap();
    assert!((curve[0].0 - (-std::f64::consts::E).exp()).abs() < 1e-15);
    assert!((curve[0].1 - 0.2853).abs() < 5e-5, "{}", curve[0].1);
    assert!(curve.windows(2).all(|w| w[1].1 < w[0].1));
}

#[test]
fn norming_from_table_differs_from_closed_form_by_constant() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), "model.sigma2 = 1\nnorming.t_min = 1e-6\n", &["norming"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = io::curve_from_csv(&read(d.path(), "norming.csv")).unwrap();
    let o = run(d.path(), &format!("{BROWNIAN}norming.t_min = 1e-6\n"), &["norming"]);
    assert!(o.status.success());
    let closed = io::curve_from_csv(&read(d.path(), "norming.csv")).unwrap();
    for (a, b) in table.iter().zip(&closed) {
        assert_eq!(a.0, b.0);
        // F = σ²/ε² from the table against the sharp constant π²σ²/(8ε²)
        let expected = 8f64.sqrt() / std::f64::consts::PI;
        assert!((a.1 / b.1 / expected - 1.0).abs() < 1e-6, "{a:?} {b:?}");
    }
}

#[test]
fn variance_gamma_norming_needs_lambda() {
    let d = tempfile::tempdir().unwrap();
    let base = "model.family = gamma_jumps\nmodel.a = 1\nmodel.b = 1\nmodel.sigma = 1\nnorming.family = variance_gamma\n";
    let o = run(d.path(), base, &["norming"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("norming.lambda"), "{}", stderr(&o));
    let o = run(d.path(), &format!("{base}norming.lambda = 1\n"), &["norming"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn sd_bounds_are_ordered() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), BROWNIAN, &["sd-bounds"]);
    assert!(o.status.success());
    let t = CsvTable::parse(&read(d.path(), "sd_bounds.csv")).unwrap();
    assert_eq!(t.header, ["t", "eps", "lower", "upper"]);
    assert_eq!(t.rows.len(), 9);
    let lo = t.column_f64("lower").unwrap();
    let hi = t.column_f64("upper").unwrap();
    assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h));
}

#[test]
fn estimate_sd_brownian_unit_cell() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{BROWNIAN}simulate.n_paths = 20000\nsimulate.refine_levels = 7\n");
    let o = run(d.path(), &cfg, &["estimate-sd"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let est = io::estimates_from_csv(&read(d.path(), "estimate.csv")).unwrap();
    assert_eq!(est.len(), 1);
    assert!((est[0].p_hat - 0.3708).abs() < 0.015, "{:?}", est[0]);
}

#[test]
fn identical_seed_gives_identical_files() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = format!("{BROWNIAN}simulate.n_paths = 2000\nsimulate.seed = 5\n");
    for d in [&a, &b] {
        assert!(run(d.path(), &cfg, &["estimate-sd"]).status.success());
    }
    assert!(run(c.path(), &cfg, &["estimate-sd", "--seed", "6"]).status.success());
    let (ea, eb, ec) = (read(a.path(), "estimate.csv"), read(b.path(), "estimate.csv"), read(c.path(), "estimate.csv"));
    assert_eq!(ea, eb);
    assert_ne!(ea, ec);
    let s = Summary::parse(&read(c.path(), "estimate_summary.txt")).unwrap();
    assert_eq!(s.get("seed"), Some("6"));
}

#[test]
fn verify_sandwich_without_estimable_cells_fails() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{BROWNIAN}verify.t_grid = 1\nverify.eps_grid = 0.01, 0.02\nsimulate.n_paths = 1000\n");
    let o = run(d.path(), &cfg, &["verify-sandwich"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no estimable cells"), "{}", stderr(&o));
}

#[test]
fn verify_sandwich_small_run() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{BROWNIAN}verify.t_grid = 0.5, 1\nverify.eps_grid = 0.75, 1\nsimulate.n_paths = 5000\nsimulate.n_steps = 256\n");
    let o = run(d.path(), &cfg, &["verify-sandwich"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = CsvTable::parse(&read(d.path(), "sandwich.csv")).unwrap();
    assert_eq!(t.rows.len(), 4);
    assert!(t.rows.iter().all(|r| r[9] == "pass"));
}

#[test]
fn verify_lil_brownian_median() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{BROWNIAN}verify.lil_paths = 100\nverify.k_range = 5, 20\nsimulate.n_steps = 64\n");
    let o = run(d.path(), &cfg, &["verify-lil"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = Summary::parse(&read(d.path(), "lil_summary.txt")).unwrap();
    let median: f64 = s.get("median").unwrap().parse().unwrap();
    assert!(median > 0.3 && median < 2.0, "{median}");
    let t = CsvTable::parse(&read(d.path(), "lil_minima.csv")).unwrap();
    assert_eq!(t.rows.len(), 100);
}

#[test]
fn check_conditions_writes_reports() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "model.family = two_sided_polynomial\nmodel.c1 = 1\nmodel.alpha1 = 1.5\nmodel.c2 = 0\nrate.n_points = 40\n";
    let o = run(d.path(), cfg, &["check-conditions"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = Summary::parse(&read(d.path(), "conditions_summary.txt")).unwrap();
    assert_eq!(s.get("variance_bound.pass"), Some("true"));
    assert!(s.get("condition_m.pass").is_some());
    assert!(s.get("regularity.pass").is_some());
}

#[test]
fn config_errors_carry_line_numbers() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), "model.sigma2 = 1\nsimulate.colour = red\n", &["rate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    let o = run(d.path(), "model.sigma2 = 1\nrate.eps_min = 0\n", &["rate"]);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn emitted_files_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{BROWNIAN}model.gamma = 0.5\nrate.n_points = 40\nsimulate.n_paths = 1000\n");
    for cmd in ["rate", "norming", "sd-bounds", "estimate-sd", "check-conditions"] {
        let o = run(d.path(), &cfg, &[cmd]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    let mut seen = 0;
    for entry in fs::read_dir(d.path().join("out")).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => assert_eq!(CsvTable::parse(&text).unwrap().render(), text, "{}", path.display()),
            Some("txt") => assert_eq!(Summary::parse(&text).unwrap().render(), text, "{}", path.display()),
            _ => panic!("unexpected file {}", path.display()),
        }
        seen += 1;
    }
    assert!(seen >= 10, "{seen}");
    let rate = read(d.path(), "rate.csv");
    assert_eq!(io::rate_table_to_csv(&io::rate_table_from_csv(&rate).unwrap()), rate);
    let norming = read(d.path(), "norming.csv");
    assert_eq!(io::curve_to_csv(&io::curve_from_csv(&norming).unwrap()), norming);
    let est = read(d.path(), "estimate.csv");
    assert_eq!(io::estimates_to_csv(&io::estimates_from_csv(&est).unwrap()), est);
}
