//! Command-line front end: argument parsing, subcommand dispatch and CSV
//! output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::chart::FdConfig;
use crate::coho1::{self, interior_grid};
use crate::config::{validate_t_grid, RunConfig, WarpedSection};
use crate::counterexample::{self, build, regular_points, scalar_blowup_scan, scan_points, verify_negative_ricci, verify_quotient_ricci, DEFAULT_T_GRID};
use crate::error::{CheegerError, Result};
use crate::feasibility::{self, is_feasible_2, is_feasible_n, solve_lambdas_2, solve_lambdas_n, to_f64, Outcome, Rational};
use crate::group::so_block_rep;
use crate::limiting::{effectiveness_criterion, inf_trace, regular_sample};
use crate::warped::{choose_t0, verify_curvature, WarpedMetricSpec};

pub const QUOTIENT_T_GRID: [f64; 4] = [10.0, 1e2, 1e3, 1e4];
pub const SCAN_T_GRID: [f64; 5] = [0.0, 1.0, 10.0, 1e2, 1e3];

#[derive(Debug, Parser)]
#[command(name = "cheeger", version, about = "Cheeger deformations: Ricci and scalar curvature checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration (schema = 1).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, or a path ending in .csv.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the regular sample and sweep in `criterion`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated deformation parameters.
    #[arg(long = "t-grid", global = true, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    /// Pass tolerance for the subcommand's contract.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Negative Ricci curvature along the fixed axis of the S^n example.
    Counterexample {
        /// Sphere dimension, at least 5. Overrides [warped].n.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Effectiveness report for a block representation from [group].
    Criterion,
    /// Solve the λ-feasibility problem from [feasibility].
    Feasibility,
    /// Second-derivative criterion for the family in [coho1].
    #[command(name = "coho1-check")]
    Coho1Check,
    /// Scalar curvature of the S^5 example under deformation.
    ScalarScan,
    /// Closed-form warped curvature against finite differences.
    VerifyCurvature,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Counterexample { .. } => "counterexample",
            Command::Criterion => "criterion",
            Command::Feasibility => "feasibility",
            Command::Coho1Check => "coho1-check",
            Command::ScalarScan => "scalar-scan",
            Command::VerifyCurvature => "verify-curvature",
        }
    }
}

/// Everything a subcommand produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub csv: PathBuf,
    pub report: String,
    /// First failing contract, if any.
    pub failure: Option<String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Whether an error is the caller's fault (exit 2) rather than a failed
/// computation (exit 1).
pub fn is_usage_error(e: &CheegerError) -> bool {
    matches!(
        e,
        CheegerError::Config { .. } | CheegerError::Input(_) | CheegerError::Domain(_) | CheegerError::Dimension { .. } | CheegerError::Unsupported(_)
    )
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Resolved settings shared by the subcommands.
struct Settings {
    cfg: RunConfig,
    seed: u64,
    t_grid: Option<Vec<f64>>,
    tol: Option<f64>,
}

impl Settings {
    fn warped(&self) -> WarpedSection {
        self.cfg.warped.clone().unwrap_or_default()
    }
}

fn output_paths(out: Option<&Path>, name: &str) -> Result<(PathBuf, PathBuf)> {
    let out = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let csv = if out.extension().is_some_and(|e| e == "csv") {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        out
    } else {
        std::fs::create_dir_all(&out)?;
        out.join(format!("{name}.csv"))
    };
    let report = csv.with_extension("txt");
    Ok((csv, report))
}

/// Runs one subcommand and writes its CSV and report files.
pub fn run(cli: &Cli) -> Result<RunOutcome> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let t_grid = cli.t_grid.clone().or_else(|| cfg.run.t_grid.clone());
    if let Some(g) = &t_grid {
        validate_t_grid(g).map_err(|m| CheegerError::Config {
            section: "run".into(),
            field: "t_grid".into(),
            message: m,
        })?;
    }
    let tol = cli.tol.or(cfg.run.tol);
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CheegerError::Input(format!("--tol must be positive, got {t}")));
        }
    }
    let settings = Settings {
        seed: cli.seed.or(cfg.run.seed).unwrap_or(counterexample::SEED),
        t_grid,
        tol,
        cfg,
    };
    let out = cli.out.clone().or_else(|| settings.cfg.run.out.clone());
    let (table, report, failure) = match &cli.command {
        Command::Counterexample { n } => run_counterexample(&settings, *n)?,
        Command::Criterion => run_criterion(&settings)?,
        Command::Feasibility => run_feasibility(&settings)?,
        Command::Coho1Check => run_coho1(&settings)?,
        Command::ScalarScan => run_scalar_scan(&settings)?,
        Command::VerifyCurvature => run_verify_curvature(&settings)?,
    };
    let (csv, report_path) = output_paths(out.as_deref(), cli.command.name())?;
    table.write(&csv)?;
    let mut report = report;
    match &failure {
        None => report.push_str("all contracts hold\n"),
        Some(f) => {
            let _ = writeln!(report, "contract failed: {f}");
        }
    }
    std::fs::write(&report_path, &report)?;
    Ok(RunOutcome { csv, report, failure })
}

type Produced = (Table, String, Option<String>);

fn first_failure(checks: &[(bool, String)]) -> Option<String> {
    checks.iter().find(|c| !c.0).map(|c| c.1.clone())
}

fn run_counterexample(s: &Settings, n: Option<usize>) -> Result<Produced> {
    let n = n.unwrap_or(s.warped().n);
    let spec = build(n)?;
    let grid = s.t_grid.clone().unwrap_or(DEFAULT_T_GRID.to_vec());
    let tol = s.tol.unwrap_or(1e-8);
    let neg = verify_negative_ricci(&spec, &grid)?;
    let w = s.warped();
    let quotient_points = regular_points(&spec.quotient_model().spec, w.quotient_points);
    let quotient = verify_quotient_ricci(&spec, &quotient_points, &QUOTIENT_T_GRID)?;
    let gaps = verify_quotient_ricci(&spec, &quotient_points[..1], &grid)?;
    let scan = scalar_blowup_scan(&spec, &grid, &scan_points(&spec.warped, w.scan_t, w.scan_theta))?;

    let mut table = Table::new(&["t", "ricci_t_X", "scal_min", "quotient_gap"]);
    for (k, &(t, ric)) in neg.rows.iter().enumerate() {
        table.push(vec![fmt_f64(t), fmt_f64(ric), fmt_f64(scan.rows[k].1), fmt_f64(gaps.gaps[0].1[k].1)]);
    }
    let mut r = String::new();
    let _ = writeln!(r, "counterexample on S^{n}");
    let _ = writeln!(r, "lambda = ({}, {}), t0 = {:.12}", spec.lambdas.0, spec.lambdas.1, spec.warped.t0);
    let _ = writeln!(r, "Ric^H(X) = {}", spec.expected_ricci());
    for (t, ric) in &neg.rows {
        let _ = writeln!(r, "  t = {t:>10e}  Ric_t(X) = {ric:.15}");
    }
    let _ = writeln!(r, "max deviation {:e}, max z_t(X, e_i) {:e}", neg.max_deviation, neg.max_zt);
    let _ = writeln!(r, "quotient: Ric -> 2*lambda1 = {}, rescale c = {}", quotient.target, quotient.rescale);
    let _ = writeln!(r, "  log-log slopes {:?}", quotient.slopes);
    let _ = writeln!(r, "  quotient curvature error {:e}", quotient.curvature_error);
    let failure = first_failure(&[
        (neg.expected < 0.0, format!("Ric^H(X) = {} is not negative", neg.expected)),
        (neg.max_deviation <= tol, format!("Ric_t(X) deviates by {:e} > {tol:e}", neg.max_deviation)),
        (neg.max_zt <= 1e-10, format!("z_t(X, e_i) reaches {:e}", neg.max_zt)),
        (quotient.passed(), "quotient Ricci limit".to_string()),
    ]);
    Ok((table, r, failure))
}

fn run_criterion(s: &Settings) -> Result<Produced> {
    let g = RunConfig::require(&s.cfg.group, "group")?;
    let (_, rep) = so_block_rep(g.m, &g.blocks);
    let report = effectiveness_criterion(&rep, g.axis_block, s.seed)?;
    let y = regular_sample(&rep, s.seed);
    let mut table = Table::new(&["block", "dim", "inf_trace", "sweep_inf", "margin", "lambda1", "lambda2", "satisfied"]);
    let mut r = String::new();
    let _ = writeln!(r, "verdict: {:?}", report.verdict);
    let _ = writeln!(r, "fixed axes {}, axis block {:?}, l = {}", report.fixed_axes, report.axis_block, report.l);
    let mut checks = Vec::new();
    for b in &report.blocks {
        let inf = inf_trace(&rep, b.block, &y, s.seed)?;
        let (l1, l2) = match &b.solution {
            Some((_, sol)) => {
                checks.push((b.instance.satisfied_by(&sol.lambdas), format!("λ's for block {} fail substitution", b.block)));
                (sol.lambdas[0].to_string(), sol.lambdas[1].to_string())
            }
            None => (String::new(), String::new()),
        };
        checks.push((inf.gap().abs() <= 1e-6, format!("block {} sweep gap {:e}", b.block, inf.gap())));
        checks.push((inf.monotone(1e-9), format!("block {} sweep is not monotone", b.block)));
        let _ = writeln!(
            r,
            "  block {}: dim {}, inf tr = {}, sweep {:.9}, margin {}, lambdas ({l1}, {l2})",
            b.block,
            b.dim,
            b.inf_trace,
            inf.sweep_infimum(),
            b.margin
        );
        table.push(vec![
            b.block.to_string(),
            b.dim.to_string(),
            b.inf_trace.to_string(),
            fmt_f64(inf.sweep_infimum()),
            b.margin.to_string(),
            l1,
            l2,
            b.satisfied().to_string(),
        ]);
    }
    if let Some((j, i)) = report.pair {
        let _ = writeln!(r, "index pair (j, i) = ({j}, {i})");
    }
    Ok((table, r, first_failure(&checks)))
}

fn rational_row(kind: &str, index: usize, x: &Rational) -> Vec<String> {
    vec![kind.to_string(), index.to_string(), x.to_string(), fmt_f64(to_f64(x))]
}

fn run_feasibility(s: &Settings) -> Result<Produced> {
    let f = RunConfig::require(&s.cfg.feasibility, "feasibility")?;
    let inst = f.instance()?;
    let mut r = String::new();
    let _ = writeln!(r, "dims {:?}, l = {}, {} constraints", inst.dims(), inst.l(), inst.constraints().len());
    let solution = if inst.dims().len() == 2 {
        let v = is_feasible_2(&inst)?;
        let _ = writeln!(r, "margins ({}, {})", v.margins.0, v.margins.1);
        match solve_lambdas_2(&inst)? {
            Outcome::Feasible((side, sol)) => {
                let _ = writeln!(r, "feasible, side {side:?}");
                Some(sol)
            }
            Outcome::Infeasible => None,
        }
    } else {
        let _ = writeln!(r, "pair criterion: {:?}", is_feasible_n(&inst)?);
        match solve_lambdas_n(&inst)? {
            Outcome::Feasible((pair, sol)) => {
                let _ = writeln!(r, "feasible via (i0, j0) = ({}, {})", pair.i0, pair.j0);
                Some(sol)
            }
            Outcome::Infeasible => None,
        }
    };
    let mut table = Table::new(&["kind", "index", "exact", "value"]);
    let mut failure = None;
    match &solution {
        None => {
            let _ = writeln!(r, "infeasible by the criterion");
        }
        Some(sol) => {
            for (i, l) in sol.lambdas.iter().enumerate() {
                table.push(rational_row("lambda", i, l));
            }
            for (k, row) in inst.constraints().iter().enumerate() {
                let v: Rational = row.iter().zip(&sol.lambdas).map(|(a, l)| a * l).sum();
                table.push(rational_row("constraint", k, &v));
            }
            let weighted: Rational = inst
                .dims()
                .iter()
                .zip(&sol.lambdas)
                .map(|(d, l)| feasibility::int(*d as i64) * l)
                .sum();
            table.push(rational_row("weighted_sum", 0, &weighted));
            let _ = writeln!(r, "lambda = [{}]", sol.lambdas.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", "));
            let _ = writeln!(r, "epsilon = {}", sol.epsilon);
            if !inst.satisfied_by(&sol.lambdas) {
                failure = Some("returned λ's fail substitution".to_string());
            }
        }
    }
    Ok((table, r, failure))
}

fn run_coho1(s: &Settings) -> Result<Produced> {
    let c = RunConfig::require(&s.cfg.coho1, "coho1")?;
    let family = c.family()?;
    let tol = s.tol.unwrap_or(1e-6);
    let grid = interior_grid(family.r(), c.grid);
    let report = coho1::criterion(&family, &grid, c.c_min)?;
    let mut table = Table::new(&["s", "trace_p_inv", "d2_trace", "identity_residual"]);
    let mut worst = 0.0f64;
    let mut unsupported = false;
    for &(x, tr, d2) in &report.samples {
        let mut res: Option<f64> = Some(0.0);
        for i in 0..family.blocks().len() {
            match coho1::dual_holonomy_identity_check(&family, x, i) {
                Ok(v) => res = res.map(|m| m.max(v.residual)),
                Err(CheegerError::Unsupported(_)) => res = None,
                Err(e) => return Err(e),
            }
        }
        match res {
            Some(v) => worst = worst.max(v),
            None => unsupported = true,
        }
        table.push(vec![fmt_f64(x), fmt_f64(tr), fmt_f64(d2), res.map(fmt_f64).unwrap_or_default()]);
    }
    let mut r = String::new();
    let _ = writeln!(r, "R = {}, {} blocks, derivatives {:?}", family.r(), family.blocks().len(), report.method);
    let _ = writeln!(r, "inf d2/ds2 tr P^-1 = {:.15} at s = {:.6} (c_min = {})", report.infimum, report.argmin, report.c_min);
    if unsupported {
        let _ = writeln!(r, "identity check skipped for spline profiles");
    } else {
        let _ = writeln!(r, "max identity residual {worst:e}");
    }
    let failure = first_failure(&[
        (report.passed, format!("inf {} < c_min {}", report.infimum, report.c_min)),
        (worst <= tol, format!("identity residual {worst:e} > {tol:e}")),
    ]);
    Ok((table, r, failure))
}

fn run_scalar_scan(s: &Settings) -> Result<Produced> {
    let w = s.warped();
    let spec = build(w.n)?;
    let grid = s.t_grid.clone().unwrap_or(SCAN_T_GRID.to_vec());
    let points = scan_points(&spec.warped, w.scan_t, w.scan_theta);
    let scan = scalar_blowup_scan(&spec, &grid, &points)?;
    let mut table = Table::new(&["t", "scal_min", "fake_horizontal_bound"]);
    for (row, fake) in scan.rows.iter().zip(&scan.fake_horizontal) {
        table.push(vec![fmt_f64(row.0), fmt_f64(row.1), fmt_f64(fake.1)]);
    }
    let mut r = String::new();
    let _ = writeln!(r, "scalar curvature scan on S^{} at {} points", w.n, scan.points);
    for (t, v) in &scan.rows {
        let _ = writeln!(r, "  t = {t:>10e}  min scal = {v:.9}");
    }
    let _ = writeln!(r, "first positive T = {:?}", scan.first_positive);
    let _ = writeln!(r, "abelian bracket contribution {:e}", scan.abelian_bracket);
    let failure = first_failure(&[
        (scan.points >= 50, format!("only {} sample points", scan.points)),
        (scan.first_positive.is_some_and(|t| t <= 1e3), "no T <= 1e3 with positive scalar curvature".to_string()),
        (scan.abelian_bracket < 1e-12, format!("abelian bracket {:e}", scan.abelian_bracket)),
    ]);
    Ok((table, r, failure))
}

fn run_verify_curvature(s: &Settings) -> Result<Produced> {
    let w = s.warped();
    let tol = s.tol.unwrap_or(1e-5);
    let spec = build(w.n)?;
    let l1 = w.lambda1.unwrap_or(spec.lambda1());
    let l2 = w.lambda2.unwrap_or(spec.lambda2());
    let t0 = choose_t0(l1, l2, w.n, 3, 1);
    let mut table = Table::new(&["profile", "t", "theta", "fd_error", "max_abs", "relative_error"]);
    let mut r = String::new();
    let mut checks = Vec::new();
    for &kind in &w.profiles {
        let ws = WarpedMetricSpec::new(1, w.n - 2, l1, l2, t0, kind)?;
        let check = verify_curvature(&ws, w.points, &FdConfig::default())?;
        let name = format!("{kind:?}").to_lowercase();
        for row in &check.rows {
            table.push(vec![
                name.clone(),
                fmt_f64(row.t),
                fmt_f64(row.theta),
                fmt_f64(row.fd_error),
                fmt_f64(row.max_abs),
                fmt_f64(row.relative_error()),
            ]);
        }
        let _ = writeln!(
            r,
            "{name}: max relative error {:e}, block scalars {:?}, block residual {:e}",
            check.max_relative_error(),
            check.blocks.iter().map(|b| b.0).collect::<Vec<_>>(),
            check.max_block_residual()
        );
        checks.push((check.max_relative_error() <= tol, format!("{name}: FD error {:e} > {tol:e}", check.max_relative_error())));
        checks.push((check.max_block_residual() <= 1e-9, format!("{name}: block residual {:e}", check.max_block_residual())));
    }
    Ok((table, r, first_failure(&checks)))
}
