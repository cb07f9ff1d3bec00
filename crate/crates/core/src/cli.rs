//! Command-line front end. `main` only parses arguments and maps errors to exit codes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checks::{self, grid_indices, Baseline, ExtensionData, Outcome};
use crate::commitment::CommitmentSolution;
use crate::config::{parse_config, GridSpec, RunConfig};
use crate::environment::Environment;
use crate::equilibrium::Model;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::extensions::{linear_reputation, ConvexCost};
use crate::noise::{Family, NoiseModel};
use crate::numeric::logspace;
use crate::output::{fmt_num, sweep_csv, sweep_svg, table_csv, write_file};

/// Samples per grid point in the Monte Carlo artifact.
pub const ORACLE_ARTIFACT_SAMPLES: usize = 200_000;
const NOISE_RESOLUTION: usize = 2001;

#[derive(Debug, Parser)]
#[command(name = "screenlab", version, about = "Equilibria and precision sweeps for noisy screening games")]
pub struct Cli {
    /// Run configuration (`section.key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides `noise.family` from the configuration.
    #[arg(long, global = true, value_enum)]
    pub family: Option<FamilyArg>,

    /// Evaluate grid points on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Normal,
    Laplace,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Normal => Family::Normal,
            FamilyArg::Laplace => Family::Laplace,
        }
    }
}

#[derive(Debug, Clone, Copy, Args)]
#[group(required = true, multiple = false)]
pub struct Target {
    /// Noise scale.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Precision, `1 / sigma`.
    #[arg(long)]
    pub rho: Option<f64>,
}

impl Target {
    fn sigma(&self) -> Result<f64> {
        let s = match (self.sigma, self.rho) {
            (Some(s), _) => s,
            (None, Some(r)) => 1.0 / r,
            (None, None) => return Err(Error::Domain("need --sigma or --rho".into())),
        };
        if s > 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(Error::Domain(format!("noise scale must be positive and finite, got {s}")))
        }
    }
}

fn grid_arg(s: &str) -> std::result::Result<GridSpec, String> {
    GridSpec::parse_absolute(s)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the noise family and environment assumptions.
    Validate,
    /// Solve the equilibrium at one precision.
    Solve(Target),
    /// Welfare across the precision grid.
    Sweep {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Absolute grid `min:max:points[:log|lin]` in place of the configured one.
        #[arg(long, value_parser = grid_arg)]
        rho_grid: Option<GridSpec>,
    },
    /// Optimal committed standard at one precision.
    Commit(Target),
    /// Sweep with commitment columns.
    CommitSweep {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = grid_arg)]
        rho_grid: Option<GridSpec>,
    },
    /// Model extensions.
    Ext {
        #[command(subcommand)]
        which: ExtCommand,
    },
    /// Independent checks of a solved equilibrium.
    Oracle {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        /// Defaults to `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate every artifact and run the acceptance checks.
    Repro {
        #[arg(long, default_value = "repro")]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExtCommand {
    /// Quadratic effort cost.
    Quadratic {
        #[arg(long, value_parser = grid_arg)]
        rho_grid: Option<GridSpec>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Effort restricted to `{0, ebar}`.
    Binary {
        #[arg(long, default_value_t = checks::BINARY_EBAR)]
        ebar: f64,
        #[arg(long, default_value_t = checks::BINARY_CKAPPA)]
        ckappa: f64,
        #[arg(long, value_parser = grid_arg)]
        rho_grid: Option<GridSpec>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gaussian reputation signal.
    Reputation {
        #[arg(long, default_value_t = checks::REPUTATION_OMEGA)]
        omega: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, value_parser = grid_arg)]
        rho_grid: Option<GridSpec>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Loads the configuration file, if any, and applies the family override.
pub fn load_config(path: Option<&Path>, family: Option<FamilyArg>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(f) = family {
        cfg.family = f.into();
    }
    Ok(cfg)
}

/// Assumption report as `key=value` lines, and whether every check passed.
pub fn validate_report(env: &Environment, noise: &NoiseModel) -> (String, bool) {
    let mut s = String::new();
    let nr = noise.validate(NOISE_RESOLUTION);
    let _ = writeln!(s, "noise.family={}", nr.family);
    for c in &nr.checks {
        let at = c.at.map(fmt_num).unwrap_or_else(|| "none".into());
        let _ = writeln!(
            s,
            "noise.{}={} worst={} at={at}",
            c.name,
            if c.passed { "ok" } else { "FAIL" },
            fmt_num(c.worst)
        );
    }
    let er = env.validate();
    let flag = |b: bool| if b { "ok" } else { "FAIL" };
    let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_else(|| "none".into());
    let _ = writeln!(s, "env.mass={}", fmt_num(er.mass));
    let _ = writeln!(s, "env.density_positive={}", flag(er.density_positive));
    let _ = writeln!(s, "env.payoff_monotone={}", flag(er.payoff_monotone));
    let _ = writeln!(s, "env.mean_payoff={} pessimistic={}", fmt_num(er.mean_payoff), flag(er.pessimistic()));
    let _ = writeln!(s, "env.good_mass={}", fmt_num(er.good_mass));
    let _ = writeln!(s, "env.good_mean_payoff={}", fmt_num(er.good_mean_payoff));
    let _ = writeln!(s, "env.theta_tilde={}", opt(er.theta_tilde));
    let _ = writeln!(s, "env.theta_dagger={}", opt(er.theta_dagger));
    let mut passed = nr.passed() && er.passed();
    if passed {
        match Model::new(env.clone(), noise.clone()).and_then(|m| m.sigma_tilde()) {
            Ok(t) => {
                let _ = writeln!(s, "sigma_tilde={}", fmt_num(t.sigma));
                let _ = writeln!(s, "rho_tilde={}", fmt_num(t.rho()));
                let _ = writeln!(s, "sigma_tilde.extra_roots={}", t.extra_roots);
            }
            Err(e) => {
                let _ = writeln!(s, "sigma_tilde=FAIL {e}");
                passed = false;
            }
        }
    }
    let _ = writeln!(s, "status={}", if passed { "ok" } else { "FAIL" });
    (s, passed)
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn resolve_grid(model: &Model, spec: GridSpec) -> Result<Vec<f64>> {
    let tilde = if spec.relative { model.sigma_tilde()?.rho() } else { 1.0 };
    Ok(spec.resolve(tilde))
}

fn ext_grid(spec: Option<GridSpec>, default: (f64, f64, usize)) -> Vec<f64> {
    match spec {
        Some(g) => g.resolve(1.0),
        None => logspace(default.0, default.1, default.2),
    }
}

fn commitments(model: &Model, sigmas: &[f64], exec: Execution) -> Vec<Option<CommitmentSolution>> {
    exec.map(sigmas, |&s| model.solve_commitment(s).ok())
}

fn quadratic_table(rows: &[(f64, Option<crate::extensions::GeneralCostEquilibrium>)]) -> String {
    let body: Vec<Vec<Option<f64>>> = rows
        .iter()
        .map(|(r, e)| {
            let e = e.as_ref();
            vec![Some(*r), e.map(|e| e.tau), e.map(|e| e.theta_hat), e.map(|e| e.value), e.map(|e| e.residual)]
        })
        .collect();
    table_csv(&["rho", "tau", "theta_hat", "V", "residual"], &body)
}

fn binary_table(rows: &[(f64, Option<crate::extensions::BinaryEffortEquilibrium>)]) -> String {
    let body: Vec<Vec<Option<f64>>> = rows
        .iter()
        .map(|(r, e)| {
            let e = e.as_ref();
            vec![
                Some(*r),
                e.map(|e| e.tau),
                e.map(|e| e.delta),
                e.map(|e| e.theta_hat),
                e.map(|e| e.value),
                e.map(|e| e.residual),
            ]
        })
        .collect();
    table_csv(&["rho", "tau", "delta", "theta_hat", "V", "residual"], &body)
}

fn reputation_table(rows: &[(f64, f64, f64)], omega: f64) -> String {
    let body: Vec<Vec<Option<f64>>> = rows.iter().map(|&(r, k, q)| vec![Some(r), Some(omega), Some(k), Some(q)]).collect();
    table_csv(&["rho", "omega", "k", "q"], &body)
}

fn oracle_table(model: &Model, sweep: &crate::welfare::SweepResult, seed: u64, exec: Execution) -> Result<String> {
    let mut header = vec!["rho"];
    for name in ["V", "AR", "U", "alpha", "beta"] {
        header.push(name);
    }
    let names = ["V_mc", "V_se", "AR_mc", "AR_se", "U_mc", "U_se", "alpha_mc", "alpha_se", "beta_mc", "beta_se"];
    header.extend(names);
    let mut body = Vec::new();
    for i in grid_indices(sweep.rows.len(), 5) {
        let row = &sweep.rows[i];
        let (Some(eq), Some(w)) = (&row.equilibrium, &row.welfare) else {
            continue;
        };
        let mc = model.monte_carlo_welfare(eq, ORACLE_ARTIFACT_SAMPLES, seed, exec)?;
        let mut cells = vec![Some(row.rho)];
        cells.extend([w.principal, w.approval_rate, w.agent, w.type_one, w.type_two].map(Some));
        for (_, e) in mc.fields() {
            cells.push(Some(e.mean));
            cells.push(Some(e.se));
        }
        body.push(cells);
    }
    Ok(table_csv(&header, &body))
}

/// Files written by [`write_artifacts`], with the extension data they were built from.
#[derive(Debug, Clone)]
pub struct Artifacts {
    /// CSV files as `(name, bytes)`, in a fixed order.
    pub csv: Vec<(String, Vec<u8>)>,
    pub extensions: ExtensionData,
}

/// Writes every reproducible artifact into `dir`.
pub fn write_artifacts(cfg: &RunConfig, dir: &Path, exec: Execution) -> Result<Artifacts> {
    let mut files: Vec<(String, String)> = Vec::new();
    let mut normal = None;
    for family in [Family::Normal, Family::Laplace] {
        let c = cfg.with_family(family);
        let model = c.model()?;
        let grid = resolve_grid(&model, c.grid)?;
        let sweep = model.sweep(&grid, exec)?;
        files.push((format!("fig1-{family}.csv"), sweep_csv(&sweep, None)));
        write_file(&dir.join(format!("fig1-{family}.svg")), &sweep_svg(&format!("{family} noise"), &sweep))?;
        if family == Family::Normal {
            normal = Some((model, sweep));
        }
    }
    let (model, sweep) = normal.expect("normal sweep was built");
    let sigmas: Vec<f64> = sweep.rows.iter().map(|r| r.sigma).collect();
    files.push(("commit-normal.csv".into(), sweep_csv(&sweep, Some(&commitments(&model, &sigmas, exec)))));

    let ext = ExtensionData::build(exec)?;
    files.push(("ext-quadratic.csv".into(), quadratic_table(&ext.quadratic)));
    files.push(("ext-binary.csv".into(), binary_table(&ext.binary)));
    files.push(("ext-reputation.csv".into(), reputation_table(&ext.reputation, checks::REPUTATION_OMEGA)));
    files.push(("oracle.csv".into(), oracle_table(&model, &sweep, cfg.seed, exec)?));

    for (name, text) in &files {
        write_file(&dir.join(name), text)?;
    }
    Ok(Artifacts {
        csv: files.into_iter().map(|(n, t)| (n, t.into_bytes())).collect(),
        extensions: ext,
    })
}

/// Writes artifacts into `dir`, runs every acceptance check and prints one line per check.
pub fn repro(cfg: &RunConfig, dir: &Path, exec: Execution, out: &mut dyn Write) -> Result<Vec<Outcome>> {
    let first = write_artifacts(cfg, dir, exec)?;
    let base = Baseline::build(exec)?;
    let mut outcomes = vec![
        checks::criterion_1(&base),
        checks::criterion_2(&base),
        checks::criterion_3(&base),
        checks::criterion_4(&base),
        checks::criterion_5(&base, exec),
        checks::criterion_6(&base, exec),
        checks::criterion_7(&base),
        checks::criterion_8(&base),
        checks::criterion_9(&first.extensions),
        checks::criterion_10(),
    ];
    let scratch = dir.join(".determinism");
    let second = write_artifacts(cfg, &scratch, Execution::Sequential)?;
    fs::remove_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
    outcomes.push(checks::criterion_11(&first.csv, &second.csv));
    for o in &outcomes {
        writeln!(out, "{o}")?;
    }
    Ok(outcomes)
}

/// Runs a parsed command. Returns the process exit code for non-error outcomes.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(cli.config.as_deref(), cli.family)?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match &cli.command {
        Command::Validate => {
            let (text, ok) = validate_report(&cfg.environment()?, &cfg.noise()?);
            out.write_all(text.as_bytes())?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Solve(t) => {
            let model = cfg.model()?;
            let eq = model.solve(t.sigma()?)?;
            let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
            writeln!(out, "kind,sigma,rho,tau,tau_hat,theta_hat,Q,P")?;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                eq.kind,
                fmt_num(eq.sigma),
                fmt_num(eq.rho),
                fmt_num(eq.tau.to_f64()),
                fmt_num(eq.tau_hat.to_f64()),
                fmt_num(eq.theta_hat),
                opt(model.indifference_residual(&eq)),
                opt(model.principal_residual(&eq)),
            )?;
            Ok(0)
        }
        Command::Sweep { out: path, svg, rho_grid } => {
            let model = cfg.model()?;
            let grid = resolve_grid(&model, rho_grid.unwrap_or(cfg.grid))?;
            let sweep = model.sweep(&grid, exec)?;
            emit(out, path.as_deref().or(cfg.csv.as_deref()), &sweep_csv(&sweep, None))?;
            if let Some(p) = svg.as_deref().or(cfg.svg.as_deref()) {
                write_file(p, &sweep_svg(&format!("{} noise", cfg.family), &sweep))?;
            }
            Ok(0)
        }
        Command::Commit(t) => {
            let model = cfg.model()?;
            let sigma = t.sigma()?;
            let sol = model.solve_commitment(sigma)?;
            let v = model.welfare(&model.solve(sigma)?)?.principal;
            writeln!(out, "tau_hat_star,theta_hat_star,Vbar,V,gap")?;
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_num(sol.tau_hat),
                fmt_num(sol.theta_hat),
                fmt_num(sol.value),
                fmt_num(v),
                fmt_num(sol.value - v)
            )?;
            Ok(0)
        }
        Command::CommitSweep { out: path, rho_grid } => {
            let model = cfg.model()?;
            let grid = resolve_grid(&model, rho_grid.unwrap_or(cfg.grid))?;
            let sweep = model.sweep(&grid, exec)?;
            let sigmas: Vec<f64> = sweep.rows.iter().map(|r| r.sigma).collect();
            let text = sweep_csv(&sweep, Some(&commitments(&model, &sigmas, exec)));
            emit(out, path.as_deref(), &text)?;
            Ok(0)
        }
        Command::Ext { which } => {
            let model = cfg.model()?;
            match which {
                ExtCommand::Quadratic { rho_grid, out: path } => {
                    let cost = ConvexCost::quadratic();
                    let rhos = ext_grid(*rho_grid, checks::QUADRATIC_GRID);
                    let rows = exec.try_map(&rhos, |&r| Ok((r, model.solve_convex_cost_equilibrium(r, &cost)?)))?;
                    emit(out, path.as_deref(), &quadratic_table(&rows))?;
                }
                ExtCommand::Binary { ebar, ckappa, rho_grid, out: path } => {
                    let rhos = ext_grid(*rho_grid, checks::BINARY_GRID);
                    let rows = exec.try_map(&rhos, |&r| Ok((r, model.binary_effort_equilibrium(r, *ebar, *ckappa)?)))?;
                    emit(out, path.as_deref(), &binary_table(&rows))?;
                }
                ExtCommand::Reputation { omega, mu, rho_grid, out: path } => {
                    let rows = ext_grid(*rho_grid, checks::REPUTATION_GRID)
                        .into_iter()
                        .map(|r| linear_reputation(r, *mu, *omega).map(|(k, q)| (r, k, q)))
                        .collect::<Result<Vec<_>>>()?;
                    emit(out, path.as_deref(), &reputation_table(&rows, *omega))?;
                }
            }
            Ok(0)
        }
        Command::Oracle { target, n, seed } => {
            let model = cfg.model()?;
            let eq = model.solve(target.sigma()?)?;
            let report = model.oracle_report(&eq, *n, seed.unwrap_or(cfg.seed), exec)?;
            write!(out, "{report}")?;
            Ok(0)
        }
        Command::Repro { out: dir } => {
            let outcomes = repro(&cfg, dir, exec, out)?;
            Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { 1 })
        }
    }
}
