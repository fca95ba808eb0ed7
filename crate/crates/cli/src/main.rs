use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use levy_lil::conditions::{check_condition_m, check_esscher_negligible, check_flargeru};
use levy_lil::io::{self, fmt_f64, Summary};
use levy_lil::norming::{
    check_b_regularity, geometric_times, norming_curve, DriftNorming, NormingFunction, DEFAULT_REGULARITY_FLOOR,
};
use levy_lil::rate::{sd_bounds, RateTable};
use levy_lil::simulate::estimate_small_dev;
use levy_lil::verify::{lil_liminf_estimate, sandwich_check};
use levy_lil::{Error, LevyModel, RunConfig};

#[derive(Parser)]
#[command(name = "levy-lil", version, about = "Small-deviation rates and LIL norming for Lévy processes")]
struct Cli {
    /// Run configuration (`section.key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides `simulate.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate F on the rate grid, with diagnostics.
    Rate,
    /// Tabulate the norming function b(t).
    Norming,
    /// Two-sided bounds on -log P(|X|_t <= eps) over the verify grids.
    SdBounds,
    /// Monte Carlo estimate of P(|X|_t <= eps) at simulate.t, simulate.eps.
    EstimateSd,
    /// Compare Monte Carlo estimates with the bounds on the verify grids.
    VerifySandwich,
    /// Sample min_k |X|_{r^k} / b(r^k) over paths.
    VerifyLil,
    /// Side conditions: Esscher negligibility, condition M, variance bound, b regularity.
    CheckConditions,
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn emit(&self, name: &str, summary: &Summary) -> anyhow::Result<()> {
        let text = summary.render();
        print!("{text}");
        self.write(name, &text)
    }
}

fn drift_dominated(model: &LevyModel) -> Option<f64> {
    match RateTable::build_auto(model, vec![0.5, 0.25]) {
        Err(Error::DriftDominated { drift }) => Some(drift),
        _ => None,
    }
}

fn cmd_rate(ctx: &Ctx, model: &LevyModel) -> anyhow::Result<bool> {
    let mut s = Summary::new();
    s.put("symmetric", model.is_symmetric());
    if let Some(c) = drift_dominated(model) {
        s.put("regime", "DriftDominated")
            .put_f64("drift", c)
            .put("norming", format!("b(t) = {} t", fmt_f64(c.abs())));
        ctx.emit("rate_summary.txt", &s)?;
        return Ok(true);
    }
    let table = ctx.cfg.rate_table(model)?;
    ctx.write("rate.csv", &io::rate_table_to_csv(&table))?;
    s.put("regime", "Root")
        .put("kind", format!("{:?}", table.kind()))
        .put("n_points", table.len())
        .put_f64("eps0", table.eps0())
        .put_f64("f_min", table.f_min())
        .put_f64("f_max", table.f_max());

    let ess = check_esscher_negligible(model, table.eps_grid())?;
    ctx.write("esscher_ratios.csv", &io::esscher_ratios_to_csv(&ess))?;
    s.put("esscher_ratio.trend", ess.trend.as_str());
    if let Some(last) = ess.rows.last() {
        s.put_f64("esscher_ratio.smallest_eps", last.ratio);
    }
    let v = &ctx.cfg.verify;
    match check_condition_m(model, &table, &v.beta_grid, v.n_max) {
        Ok(r) => s.put("condition_m.pass", r.pass),
        Err(e) => s.put("condition_m.pass", format!("unavailable ({e})")),
    };
    let fl = check_flargeru(model, &table, v.flargeru_c)?;
    s.put_f64("variance_bound.max_ratio", fl.max_ratio);
    ctx.emit("rate_summary.txt", &s)?;
    Ok(true)
}

fn norming_for(cfg: &RunConfig, model: &LevyModel) -> anyhow::Result<NormingFunction> {
    if cfg.norming.family.is_none() {
        if let Some(c) = drift_dominated(model) {
            let nf = NormingFunction::closed_form(std::sync::Arc::new(DriftNorming { c }), cfg.norming.lambda)?;
            return Ok(nf.with_t_max(cfg.norming.t_max)?);
        }
    }
    Ok(cfg.norming_function(model)?)
}

fn cmd_norming(ctx: &Ctx, model: &LevyModel) -> anyhow::Result<bool> {
    let n = &ctx.cfg.norming;
    let nf = norming_for(&ctx.cfg, model)?;
    let times = geometric_times(n.t_min, n.t_max, n.n_points);
    let curve = norming_curve(&nf, &times)?;
    ctx.write("norming.csv", &io::curve_to_csv(&curve))?;
    let reg = check_b_regularity(&nf, &times, DEFAULT_REGULARITY_FLOOR)?;
    let mut s = Summary::new();
    s.put_f64("lambda", nf.lambda())
        .put_f64("t_max", nf.t_max())
        .put_f64("b_at_t_max", curve[0].1)
        .put_f64("regularity.c_hat", reg.c_hat)
        .put("regularity.pass", reg.pass);
    ctx.emit("norming_summary.txt", &s)?;
    Ok(true)
}

fn cmd_sd_bounds(ctx: &Ctx, model: &LevyModel) -> anyhow::Result<bool> {
    let v = &ctx.cfg.verify;
    let mut rows = Vec::new();
    for &t in &v.t_grid {
        for &eps in &v.eps_grid {
            rows.push(sd_bounds(model, t, eps)?);
        }
    }
    ctx.write("sd_bounds.csv", &io::sd_bounds_to_csv(&rows))?;
    let mut s = Summary::new();
    s.put("cells", rows.len());
    ctx.emit("sd_bounds_summary.txt", &s)?;
    Ok(true)
}

fn cmd_estimate_sd(ctx: &Ctx, model: &LevyModel) -> anyhow::Result<bool> {
    let sim = &ctx.cfg.simulate;
    let est = estimate_small_dev(model, sim.t, sim.eps, sim.n_paths, &ctx.cfg.sim_settings())?;
    ctx.write("estimate.csv", &io::estimates_to_csv(&[est]))?;
    let mut s = Summary::new();
    s.put_f64("t", est.t)
        .put_f64("eps", est.eps)
        .put("n_paths", est.n_paths)
        .put("hits", est.hits)
        .put_f64("p_hat", est.p_hat)
        .put_f64("ci_low", est.ci_low)
        .put_f64("ci_high", est.ci_high)
        .put("seed", sim.seed);
    ctx.emit("estimate_summary.txt", &s)?;
    Ok(true)
}

fn cmd_verify_sandwich(ctx: &Ctx, model: &LevyModel) -> anyhow::Result<bool> {
    let v = &ctx.cfg.verify;
    let report = sandwich_check(model, &v.t_grid, &v.eps_grid, ctx.cfg.simulate.n_paths, &ctx.cfg.sim_settings())?;
    ctx.write("sandwich.csv", &io::sandwich_to_csv(&report))?;
    let mut s = Summary::new();
    s.put("cells", report.cells.len())
        .put("estimable", report.estimable().count())
        .put("failed", report.n_failed())
        .put("strictly_inside", report.cells.iter().filter(|c| c.strictly_inside).count())
        .put("pass", report.all_pass());
    ctx.emit("sandwich_summary.txt", &s)?;
    Ok(report.all_pass())
}

fn cmd_verify_lil(ctx: &Ctx, model: &LevyModel) -> anyhow::Result<bool> {
    let v = &ctx.cfg.verify;
    let nf = norming_for(&ctx.cfg, model)?;
    let report = lil_liminf_estimate(model, &nf, v.r, v.k_range, v.lil_paths, &ctx.cfg.sim_settings())?;
    ctx.write("lil_minima.csv", &io::liminf_to_csv(&report))?;
    let mut s = Summary::new();
    s.put_f64("r", v.r)
        .put("k_min", v.k_range.0)
        .put("k_max", v.k_range.1)
        .put("n_paths", v.lil_paths)
        .put_f64("median", report.median)
        .put_f64("q1", report.q1)
        .put_f64("q3", report.q3)
        .put_f64("iqr", report.iqr());
    ctx.emit("lil_summary.txt", &s)?;
    Ok(true)
}

fn cmd_check_conditions(ctx: &Ctx, model: &LevyModel) -> anyhow::Result<bool> {
    let mut s = Summary::new();
    if let Some(c) = drift_dominated(model) {
        s.put("regime", "DriftDominated").put_f64("drift", c);
        ctx.emit("conditions_summary.txt", &s)?;
        return Ok(true);
    }
    let v = &ctx.cfg.verify;
    let table = ctx.cfg.rate_table(model)?;
    let ess = check_esscher_negligible(model, table.eps_grid())?;
    ctx.write("esscher_ratios.csv", &io::esscher_ratios_to_csv(&ess))?;
    s.put("esscher_ratio.trend", ess.trend.as_str());
    match check_condition_m(model, &table, &v.beta_grid, v.n_max) {
        Ok(r) => {
            ctx.write("condition_m.csv", &io::condition_m_to_csv(&r))?;
            s.put("condition_m.pass", r.pass)
        }
        Err(e) => s.put("condition_m.pass", format!("unavailable ({e})")),
    };
    let fl = check_flargeru(model, &table, v.flargeru_c)?;
    ctx.write("variance_bound.csv", &io::flargeru_to_csv(&fl))?;
    s.put_f64("variance_bound.max_ratio", fl.max_ratio)
        .put_f64("variance_bound.c", fl.c_const)
        .put("variance_bound.pass", fl.pass);
    let nf = ctx.cfg.norming_function(model)?;
    let n = &ctx.cfg.norming;
    let reg = check_b_regularity(&nf, &geometric_times(n.t_min, n.t_max, n.n_points), DEFAULT_REGULARITY_FLOOR)?;
    s.put_f64("regularity.c_hat", reg.c_hat).put("regularity.pass", reg.pass);
    ctx.emit("conditions_summary.txt", &s)?;
    Ok(true)
}

fn load(config: Option<&Path>, seed: Option<u64>) -> anyhow::Result<RunConfig> {
    let mut cfg = match config {
        Some(p) => RunConfig::from_file(p).with_context(|| format!("in {}", p.display()))?,
        None => bail!("--config is required"),
    };
    if let Some(s) = seed {
        cfg.simulate.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let cfg = load(cli.config.as_deref(), cli.seed)?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let model = cfg.build_model()?;
    let ctx = Ctx { cfg, out: cli.out };
    match cli.command {
        Command::Rate => cmd_rate(&ctx, &model),
        Command::Norming => cmd_norming(&ctx, &model),
        Command::SdBounds => cmd_sd_bounds(&ctx, &model),
        Command::EstimateSd => cmd_estimate_sd(&ctx, &model),
        Command::VerifySandwich => cmd_verify_sandwich(&ctx, &model),
        Command::VerifyLil => cmd_verify_lil(&ctx, &model),
        Command::CheckConditions => cmd_check_conditions(&ctx, &model),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
