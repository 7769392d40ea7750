//! Command-line dispatch.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use collarflow_core::angular::{angular_bound_audit, snapshot_c1};
use collarflow_core::flow::{dlogell_bound_check, run};
use collarflow_core::geometry::{
    dz2_l2_sq_series, dz2_norms, CollarGrid, CollarParams,
};
use collarflow_core::quad_diff::{
    decay_slope, lp_norm, principal_part_constant, project_holomorphic, synthesize, DecayProbe,
    FourierQD, Norm,
};
use collarflow_core::wp::{correction_coefficient, integrate_to_pinch, leading_distance, CORRECTION_COEFFICIENT};
use collarflow_core::Complex64;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::demos;
use crate::error::CliError;
use crate::initial::build_initial;
use crate::io::{
    ensure_dir, read_map_field, read_qd_field, write_csv, write_json, write_map_field, write_qd_field,
    Provenance,
};
use crate::verify::{verify, Hooks, SUITES};

#[derive(Debug, Parser)]
#[command(name = "collarflow", version, about = "Numerical laboratory for the harmonic map flow on hyperbolic collars")]
pub struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Global seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collar geometry profile and dz² norms.
    Geometry {
        #[arg(long)]
        ell: Option<f64>,
    },
    /// Fourier decomposition, principal split and decay of a quadratic differential.
    Qd {
        #[arg(long)]
        ell: Option<f64>,
        /// Quadratic differential CSV to analyse instead of the configured modes.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Run the coupled flow.
    Flow(FlowArgs),
    /// Angular decay audit of a map field.
    Angular {
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Weil–Petersson pinching path.
    Wp {
        #[arg(long)]
        ell0: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Comma-separated lengths for the correction fit.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<f64>>,
    },
    /// Run the invariant registry.
    Verify {
        /// Restrict to one suite.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: Option<String>,
        /// Test hook: perturb ρ inside the geometry checks.
        #[arg(long)]
        inject_rho_perturbation: bool,
    },
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    /// Start from a shipped demo (wrap, radial-pinch, sphere) instead of `--config`.
    #[arg(long)]
    pub demo: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub n_s: Option<usize>,
    #[arg(long)]
    pub n_theta: Option<usize>,
}

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command_line = args.join(" ");
    match dispatch(cli, &command_line) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    prov: Provenance,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn context(cli: &Cli, mut cfg: ExperimentConfig, command_line: &str) -> Result<Ctx, CliError> {
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    let out = cfg.output_dir.clone();
    ensure_dir(&out)?;
    let prov = Provenance::new(&cfg.to_json(), cfg.seed, command_line);
    Ok(Ctx { cfg, out, prov })
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    if let Command::Flow(FlowArgs { demo: Some(name), .. }) = &cli.command {
        if cli.config.is_some() {
            return Err(CliError::Usage("--demo and --config are mutually exclusive".into()));
        }
        let names: Vec<_> = demos::names().collect();
        return demos::demo(name).ok_or_else(|| CliError::Usage(format!("unknown demo {name}; known: {names:?}")));
    }
    match &cli.config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn dispatch(cli: Cli, command_line: &str) -> Result<i32, CliError> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Geometry { ell } => {
            if let Some(l) = ell {
                cfg.geometry.ell = *l;
            }
            geometry_cmd(&context(&cli, cfg, command_line)?)
        }
        Command::Qd { ell, field } => {
            if let Some(l) = ell {
                cfg.qd.ell = *l;
            }
            if field.is_some() {
                cfg.qd.field = field.clone();
            }
            qd_cmd(&context(&cli, cfg, command_line)?)
        }
        Command::Flow(a) => {
            if let Some(t) = a.t_end {
                cfg.flow.t_end = t;
            }
            if let Some(n) = a.n_s {
                cfg.flow.n_s = n;
            }
            if let Some(n) = a.n_theta {
                cfg.flow.n_theta = n;
            }
            flow_cmd(&context(&cli, cfg, command_line)?)
        }
        Command::Angular { field, c1, lambda, delta } => {
            if field.is_some() {
                cfg.angular.field = field.clone();
            }
            if c1.is_some() {
                cfg.angular.c1 = *c1;
            }
            if let Some(l) = lambda {
                cfg.angular.lambda = *l;
            }
            if let Some(d) = delta {
                cfg.angular.delta = *d;
            }
            angular_cmd(&context(&cli, cfg, command_line)?)
        }
        Command::Wp { ell0, tol, sweep } => {
            if let Some(l) = ell0 {
                cfg.wp.ell0 = *l;
            }
            if let Some(t) = tol {
                cfg.wp.tol = *t;
            }
            if let Some(s) = sweep {
                cfg.wp.sweep = s.clone();
            }
            wp_cmd(&context(&cli, cfg, command_line)?)
        }
        Command::Verify { suite, inject_rho_perturbation } => {
            let ctx = context(&cli, cfg, command_line)?;
            verify_cmd(&ctx, suite.as_deref(), *inject_rho_perturbation)
        }
    }
}

fn geometry_cmd(ctx: &Ctx) -> Result<i32, CliError> {
    let b = &ctx.cfg.geometry;
    let p = CollarParams::new(b.ell)?;
    let x = p.half_length();
    if b.samples < 2 {
        return Err(CliError::invalid("geometry.samples must be at least 2"));
    }
    let rows = (0..b.samples)
        .map(|k| {
            // Open interval: the end points are excluded.
            let s = -x + 2.0 * x * (k as f64 + 0.5) / b.samples as f64;
            Ok(vec![s, p.rho(s)?, p.injectivity_radius(s)?, p.log_rho_slope(s)?])
        })
        .collect::<Result<Vec<_>, collarflow_core::Error>>()?;
    write_csv(&ctx.path("geometry.csv"), &["s", "rho", "inj", "log_rho_slope"], rows, &ctx.prov, json!({ "ell": b.ell }))?;
    let n = dz2_norms(b.ell)?;
    let g = CollarGrid::full_collar(p, b.n_s, 4)?;
    let quad: f64 = g
        .s_weights()
        .iter()
        .zip(g.rho())
        .map(|(w, r)| std::f64::consts::TAU * w * 4.0 / (r * r))
        .sum();
    let deltas = b
        .deltas
        .iter()
        .map(|&d| {
            let xd = p.delta_thin_half_length(d)?;
            Ok(json!({ "delta": d, "x_delta": xd, "gap": x - xd, "upper_bound": std::f64::consts::PI.powi(2) / (2.0 * d) }))
        })
        .collect::<Result<Vec<_>, collarflow_core::Error>>()?;
    let summary = json!({
        "ell": b.ell,
        "half_length": x,
        "rho_at_end": p.rho_at_end(),
        "inj_at_end": p.inj_at_end(),
        "log_rho_slope_bound": p.log_rho_slope_bound(),
        "dz2": {
            "l1": n.l1,
            "l2_sq": n.l2_sq,
            "l_inf": n.l_inf,
            "l2_sq_series": dz2_l2_sq_series(b.ell),
            "l2_sq_quadrature": quad,
            "l2_sq_quadrature_rel_err": (quad - n.l2_sq) / n.l2_sq,
        },
        "delta_thin": deltas,
    });
    write_json(&ctx.path("geometry_summary.json"), summary, &ctx.prov)?;
    Ok(0)
}

fn qd_cmd(ctx: &Ctx) -> Result<i32, CliError> {
    let b = &ctx.cfg.qd;
    let field = match &b.field {
        Some(path) => read_qd_field(path)?,
        None => {
            let p = CollarParams::new(b.ell)?;
            let grid = Arc::new(CollarGrid::full_collar(p, b.n_s, b.n_theta)?);
            let n_top = b.modes.iter().map(|m| m.n.unsigned_abs() as usize).max().unwrap_or(0);
            let mut c = FourierQD::zeros(n_top, grid.s_max());
            for m in &b.modes {
                c.set_scaled(m.n, c.scaled(m.n) + Complex64::new(m.re, m.im));
            }
            synthesize(&c, grid)
        }
    };
    let grid = field.grid().clone();
    let proj = project_holomorphic(&field, b.n_max)?;
    let coeff_rows: Vec<Vec<f64>> = proj
        .coeffs
        .modes()
        .map(|(n, c)| {
            let bn = proj.coeffs.b(n);
            vec![n as f64, bn.re, bn.im, c.re, c.im]
        })
        .collect();
    write_qd_field(&ctx.path("qd_field.csv"), &field, &ctx.prov)?;
    write_csv(
        &ctx.path("qd_coeffs.csv"),
        &["n", "re_b", "im_b", "re_scaled", "im_scaled"],
        coeff_rows,
        &ctx.prov,
        json!({ "s_ref": proj.coeffs.s_ref(), "scaled": "b_n * exp(|n| s_ref)" }),
    )?;
    let mut decay_part = proj.coeffs.clone();
    decay_part.set_scaled(0, Complex64::new(0.0, 0.0));
    let probe = DecayProbe::new(&decay_part, grid.clone(), b.delta0)?;
    let mut ms = Vec::new();
    for &d in &b.deltas {
        if let Some(m) = probe.measure(d)? {
            ms.push(m);
        }
    }
    let slope = decay_slope(&ms).map(|f| f.slope);
    let split = &proj.split;
    let summary = json!({
        "ell": grid.ell(),
        "grid": { "n_s": grid.n_s(), "n_theta": grid.n_theta(), "s_max": grid.s_max() },
        "norms": { "l1": lp_norm(&field, Norm::L1), "l2": lp_norm(&field, Norm::L2), "l_inf": lp_norm(&field, Norm::Inf) },
        "b0": { "re": split.b0.re, "im": split.b0.im },
        "principal_part_constant": principal_part_constant(&field, split.b0),
        "projection_l2": lp_norm(&proj.field, Norm::L2),
        "decay": {
            "delta0": b.delta0,
            "thick_l2": probe.thick_l2(),
            "samples": ms.iter().map(|m| json!({
                "delta": m.delta, "thin_sup": m.thin_sup, "ratio": m.ratio(), "constant": m.constant()
            })).collect::<Vec<_>>(),
            "slope": slope,
        },
    });
    write_json(&ctx.path("qd_summary.json"), summary, &ctx.prov)?;
    Ok(0)
}

fn flow_cmd(ctx: &Ctx) -> Result<i32, CliError> {
    let fb = &ctx.cfg.flow;
    let cfg = fb.flow_config()?;
    let u0 = build_initial(cfg.grid()?, &fb.target.spec(), &fb.initial, ctx.cfg.seed)?;
    let tr = run(&cfg, &u0)?;
    let header = ["t", "ell", "E", "I", "I_theta", "I_smooth", "tension_l2", "re_b0", "im_b0", "dE_residual"];
    let rows: Vec<Vec<f64>> = tr
        .rows
        .iter()
        .map(|r| vec![r.t, r.ell, r.energy, r.i_weighted, r.i_theta, r.i_smooth, r.tension_l2, r.re_b0, r.im_b0, r.de_residual])
        .collect();
    write_csv(&ctx.path("trace.csv"), &header, rows, &ctx.prov, json!({ "dt": cfg.dt, "stride": cfg.stride }))?;
    let st = &tr.final_state;
    let final_u = st.u.with_grid(Arc::new(st.u.grid().with_ell(st.ell)?))?;
    write_map_field(&ctx.path("final_field.csv"), &final_u, &ctx.prov)?;
    let e0 = tr.rows[0].energy;
    let bounds = dlogell_bound_check(&tr, e0);
    let max_res = tr.rows.iter().map(|r| r.de_residual.abs()).filter(|x| x.is_finite()).fold(0.0, f64::max);
    let summary = json!({
        "status": tr.status.as_str(),
        "steps": tr.steps,
        "dt": cfg.dt,
        "t_final": st.t,
        "ell0": cfg.ell0,
        "ell_final": st.ell,
        "E0": e0,
        "E_final": tr.rows.last().map(|r| r.energy),
        "max_abs_dE_residual": max_res,
        "fitted_constants": { "dlogell": bounds.c1, "dlog_weighted": bounds.c2 },
    });
    write_json(&ctx.path("summary.json"), summary, &ctx.prov)?;
    Ok(0)
}

fn angular_cmd(ctx: &Ctx) -> Result<i32, CliError> {
    let b = &ctx.cfg.angular;
    let u = match &b.field {
        Some(p) => read_map_field(p)?,
        None => {
            let fb = &ctx.cfg.flow;
            let cfg = fb.flow_config()?;
            build_initial(cfg.grid()?, &fb.target.spec(), &fb.initial, ctx.cfg.seed)?
        }
    };
    let (c1, source) = match b.c1 {
        Some(c) => (c, "config"),
        None => (snapshot_c1(&u, b.lambda, 4)?, "fitted from field"),
    };
    let audit = angular_bound_audit(&u, c1, b.lambda, b.delta, b.n_kernel)?;
    let rows: Vec<Vec<f64>> = audit.rows.iter().map(|r| vec![r.s0, r.lhs, r.rhs, r.slack]).collect();
    write_csv(
        &ctx.path("angular_audit.csv"),
        &["s0", "lhs", "rhs", "slack"],
        rows,
        &ctx.prov,
        json!({ "lambda": b.lambda, "delta": b.delta }),
    )?;
    let summary = json!({
        "status": audit.status.as_str(),
        "x_delta": audit.x_delta,
        "fitted_c": audit.fitted_c,
        "c1": c1,
        "c1_source": source,
        "i_theta_ratio": audit.i_theta_ratio,
        "kernel_checked": audit.kernel_checked,
        "kernel_violations": audit.kernel_violations,
    });
    write_json(&ctx.path("angular_summary.json"), summary, &ctx.prov)?;
    Ok(if audit.kernel_violations == 0 { 0 } else { 1 })
}

fn wp_cmd(ctx: &Ctx) -> Result<i32, CliError> {
    let b = &ctx.cfg.wp;
    let path = integrate_to_pinch(b.ell0, b.tol)?;
    let rows: Vec<Vec<f64>> = path.samples.iter().map(|&(s, l)| vec![s, l]).collect();
    write_csv(&ctx.path("wp_path.csv"), &["s", "ell"], rows, &ctx.prov, json!({ "ell0": b.ell0, "tol": b.tol }))?;
    let fit = if b.sweep.is_empty() { None } else { Some(correction_coefficient(&b.sweep)?) };
    let lead = leading_distance(b.ell0);
    let summary = json!({
        "ell0": b.ell0,
        "tol": b.tol,
        "distance": path.distance,
        "leading_distance": lead,
        "expansion": lead * (1.0 - CORRECTION_COEFFICIENT * b.ell0.powi(3)),
        "sweep": b.sweep,
        "fitted_c": fit.map(|f| f.c),
        "fitted_e": fit.map(|f| f.e),
        "fit_condition": fit.map(|f| f.condition),
        "fit_rms_residual": fit.map(|f| f.rms_residual),
        "reference_c": CORRECTION_COEFFICIENT,
    });
    write_json(&ctx.path("wp_summary.json"), summary, &ctx.prov)?;
    Ok(0)
}

/// Worker count from `COLLARFLOW_THREADS` (default 1).
pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var("COLLARFLOW_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("COLLARFLOW_THREADS must be a positive integer, got {v:?}"))),
    }
}

fn verify_cmd(ctx: &Ctx, suite: Option<&str>, inject: bool) -> Result<i32, CliError> {
    let hooks = Hooks { rho_perturbation: if inject { 0.1 } else { 0.0 } };
    let (report, timings) = verify(ctx.cfg.seed, suite, hooks, thread_count()?);
    for (name, rec) in &report.checks {
        println!("{:4} {name}  measured={:.6e} tol={:.3e}  {}", rec.status.to_uppercase(), rec.measured, rec.tolerance, rec.note);
    }
    println!("{} passed, {} failed", report.passed, report.failed);
    let body = json!({
        "suite": suite,
        "inject_rho_perturbation": inject,
        "report": report,
    });
    write_json(&ctx.path("report.json"), body, &ctx.prov)?;
    write_json(&ctx.path("timings.json"), json!({ "seconds": timings }), &ctx.prov)?;
    Ok(if report.all_passed() { 0 } else { 1 })
}
