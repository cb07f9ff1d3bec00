//! The acceptance suite, shared by `repro` and the integration tests.
//!
//! Every check runs on the reference configuration: types uniform on `[5, 15]`,
//! payoff `θ − 11`, and the grid of 60 log-spaced precisions from the existence
//! boundary to a hundred times it.

use std::fmt;
use std::time::{Duration, Instant};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::environment::Environment;
use crate::equilibrium::Model;
use crate::error::Result;
use crate::exec::Execution;
use crate::extensions::{linear_reputation, BinaryEffortEquilibrium, ConvexCost, GeneralCostEquilibrium};
use crate::ext::ExtReal;
use crate::noise::{Family, NoiseModel};
use crate::numeric::logspace;
use crate::welfare::{central_differences, default_p_grid, AccuracyOrdering, SweepResult};

pub const GRID_POINTS: usize = 60;
pub const GRID_SPAN: f64 = 100.0;
/// Number of largest grid points that stand for "high precision".
pub const TAIL: usize = 6;
pub const SWEEP_BUDGET: Duration = Duration::from_secs(30);
pub const MC_BUDGET: Duration = Duration::from_secs(60);
pub const MC_SAMPLES: usize = 1_000_000;
pub const SEED: u64 = 42;

pub const QUADRATIC_GRID: (f64, f64, usize) = (0.5, 1.2, 12);
pub const BINARY_GRID: (f64, f64, usize) = (2.0, 200.0, 16);
pub const REPUTATION_GRID: (f64, f64, usize) = (0.1, 100.0, 20);
pub const BINARY_EBAR: f64 = 1.0;
pub const BINARY_CKAPPA: f64 = 8.0;
pub const REPUTATION_OMEGA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] criterion {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &'static str, failures: Vec<String>, summary: String) -> Outcome {
    let passed = failures.is_empty();
    let detail = if passed {
        summary
    } else {
        format!("{summary}; {}", failures.join("; "))
    };
    Outcome { id, name, passed, detail }
}

pub fn reference_environment() -> Environment {
    Environment::uniform_affine(5.0, 15.0, 11.0).expect("reference environment is valid")
}

pub fn reference_model(family: Family) -> Result<Model> {
    Model::new(reference_environment(), NoiseModel::from_family(family)?)
}

/// Reference grid and sweep for one noise family.
#[derive(Debug, Clone)]
pub struct FamilySweep {
    pub family: Family,
    pub model: Model,
    pub sweep: SweepResult,
    pub elapsed: Duration,
}

impl FamilySweep {
    pub fn build(family: Family, exec: Execution) -> Result<Self> {
        let start = Instant::now();
        let model = reference_model(family)?;
        let grid = model.precision_grid(1.0, GRID_SPAN, GRID_POINTS)?;
        let sweep = model.sweep(&grid, exec)?;
        Ok(FamilySweep {
            family,
            model,
            sweep,
            elapsed: start.elapsed(),
        })
    }

    pub fn rhos(&self) -> Vec<f64> {
        self.sweep.rhos()
    }

    /// Column values, or the indices of rows without an equilibrium.
    fn column(&self, pick: impl Fn(&crate::welfare::WelfareReport) -> f64) -> std::result::Result<Vec<f64>, String> {
        let col = self.sweep.column(pick);
        let missing: Vec<usize> = col.iter().enumerate().filter(|c| c.1.is_none()).map(|c| c.0).collect();
        if missing.is_empty() {
            Ok(col.into_iter().flatten().collect())
        } else {
            Err(format!("{}: no equilibrium at grid rows {missing:?}", self.family))
        }
    }
}

/// Both reference sweeps.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub normal: FamilySweep,
    pub laplace: FamilySweep,
}

impl Baseline {
    pub fn build(exec: Execution) -> Result<Self> {
        Ok(Baseline {
            normal: FamilySweep::build(Family::Normal, exec)?,
            laplace: FamilySweep::build(Family::Laplace, exec)?,
        })
    }

    fn both(&self) -> [&FamilySweep; 2] {
        [&self.normal, &self.laplace]
    }
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn tail(xs: &[f64]) -> &[f64] {
    &xs[xs.len().saturating_sub(TAIL)..]
}

/// Principal payoff rises just above the existence boundary and falls at high precision.
pub fn criterion_1(base: &Baseline) -> Outcome {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for fs in base.both() {
        let v = match fs.column(|w| w.principal) {
            Ok(v) => v,
            Err(e) => {
                failures.push(e);
                continue;
            }
        };
        let d = central_differences(&fs.rhos(), &v);
        let head = &d[..3];
        summary.push(format!("{} dV head {} tail {}", fs.family, fmt_list(head), fmt_list(tail(&d))));
        if !head.iter().all(|&x| x > 0.0) {
            failures.push(format!("{}: dV/drho not positive at the first 3 interior points", fs.family));
        }
        if !tail(&d).iter().all(|&x| x < 0.0) {
            failures.push(format!("{}: dV/drho not negative at the last {TAIL}", fs.family));
        }
    }
    let elapsed = base.normal.elapsed + base.laplace.elapsed;
    summary.push(format!("sweeps took {:.2}s", elapsed.as_secs_f64()));
    if elapsed >= SWEEP_BUDGET {
        failures.push(format!("sweeps exceeded {}s", SWEEP_BUDGET.as_secs()));
    }
    outcome(1, "principal payoff rises then falls", failures, summary.join("; "))
}

/// Approval rate and agent payoff rise at high precision; agent payoff never exceeds approvals.
pub fn criterion_2(base: &Baseline) -> Outcome {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for fs in base.both() {
        let (ar, u) = match (fs.column(|w| w.approval_rate), fs.column(|w| w.agent)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                failures.push(e);
                continue;
            }
        };
        let rho = fs.rhos();
        let dar = central_differences(&rho, &ar);
        let du = central_differences(&rho, &u);
        summary.push(format!("{} dAR tail {} dU tail {}", fs.family, fmt_list(tail(&dar)), fmt_list(tail(&du))));
        if !tail(&dar).iter().all(|&x| x > 0.0) {
            failures.push(format!("{}: dAR/drho not positive at the last {TAIL}", fs.family));
        }
        if !tail(&du).iter().all(|&x| x > 0.0) {
            failures.push(format!("{}: dU/drho not positive at the last {TAIL}", fs.family));
        }
        let above: Vec<usize> = u.iter().zip(&ar).enumerate().filter(|(_, (u, a))| u > a).map(|x| x.0).collect();
        if !above.is_empty() {
            failures.push(format!("{}: U > AR at rows {above:?}", fs.family));
        }
    }
    outcome(2, "approval rate and agent payoff", failures, summary.join("; "))
}

/// Type I error falls at every step, type II error rises at high precision, and approvals partition.
pub fn criterion_3(base: &Baseline) -> Outcome {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for fs in base.both() {
        let cols = (
            fs.column(|w| w.type_one),
            fs.column(|w| w.type_two),
            fs.column(|w| w.approval_rate),
        );
        let (alpha, beta, ar) = match cols {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                failures.push(e);
                continue;
            }
        };
        let rising: Vec<usize> = alpha.windows(2).enumerate().filter(|(_, w)| !(w[1] < w[0])).map(|x| x.0).collect();
        if !rising.is_empty() {
            failures.push(format!("{}: alpha not decreasing at steps {rising:?}", fs.family));
        }
        let db = central_differences(&fs.rhos(), &beta);
        if !tail(&db).iter().all(|&x| x > 0.0) {
            failures.push(format!("{}: dbeta/drho not positive at the last {TAIL}", fs.family));
        }
        let good = fs.model.good_mass();
        let worst = (0..ar.len())
            .map(|i| (beta[i] + good - alpha[i] - ar[i]).abs())
            .fold(0.0, f64::max);
        summary.push(format!("{} dbeta tail {} partition error {worst:.2e}", fs.family, fmt_list(tail(&db))));
        if !(worst < 1e-10) {
            failures.push(format!("{}: partition identity off by {worst:e}", fs.family));
        }
    }
    outcome(3, "screening errors", failures, summary.join("; "))
}

/// Threshold and standard approach the vanishing-noise limit; threshold falls and
/// adjusted standard rises along the grid.
pub fn criterion_4(base: &Baseline) -> Outcome {
    let fs = &base.normal;
    let dagger = fs.model.theta_dagger();
    let rows: Vec<_> = fs.sweep.solved().collect();
    let mut failures = Vec::new();
    if rows.len() != fs.sweep.rows.len() {
        failures.push("some grid rows have no equilibrium".into());
    }
    let Some(&(last_row, last, _)) = rows.last() else {
        return outcome(4, "vanishing-noise limit", vec!["no equilibria".into()], String::new());
    };
    let theta_gap = (last.theta_hat - dagger).abs();
    let tau_gap = (last.tau.to_f64() - dagger).abs();
    let summary = format!(
        "dagger {dagger:.10}; at rho {:.4}: theta_hat {:.10} (gap {theta_gap:.3e}), tau {:.10} (gap {tau_gap:.3e})",
        last_row.rho,
        last.theta_hat,
        last.tau.to_f64()
    );
    if !(theta_gap < 0.05) {
        failures.push(format!("theta_hat gap {theta_gap:.4} not below 0.05"));
    }
    if !(tau_gap < 0.05) {
        failures.push(format!("tau gap {tau_gap:.4} not below 0.05"));
    }
    let gaps: Vec<f64> = rows.iter().map(|r| (r.1.theta_hat - dagger).abs()).collect();
    if tail(&gaps).windows(2).any(|w| w[1] > w[0]) {
        failures.push(format!("threshold gap not shrinking over the tail {}", fmt_list(tail(&gaps))));
    }
    let up_theta: Vec<usize> = rows.windows(2).enumerate().filter(|(_, w)| w[1].1.theta_hat > w[0].1.theta_hat).map(|x| x.0).collect();
    if !up_theta.is_empty() {
        failures.push(format!("theta_hat increases at steps {up_theta:?}"));
    }
    let tau_hat = |r: &(&crate::welfare::SweepRow, &crate::equilibrium::Equilibrium, &crate::welfare::WelfareReport)| r.1.tau_hat.to_f64();
    let down_tau: Vec<usize> = rows.windows(2).enumerate().filter(|(_, w)| !(tau_hat(&w[1]) > tau_hat(&w[0]))).map(|x| x.0).collect();
    if !down_tau.is_empty() {
        failures.push(format!("tau_hat not increasing at steps {down_tau:?}"));
    }
    outcome(4, "vanishing-noise limit", failures, summary)
}

/// Evenly spread grid indices, both ends included.
pub fn grid_indices(len: usize, count: usize) -> Vec<usize> {
    if count <= 1 || len <= 1 {
        return vec![0];
    }
    (0..count)
        .map(|i| ((i * (len - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

/// Fixed-point residuals and brute-force best-response checks at 10 grid points.
pub fn criterion_5(base: &Baseline, exec: Execution) -> Outcome {
    let fs = &base.normal;
    let m = &fs.model;
    let mut failures = Vec::new();
    let mut worst = [0.0f64; 4];
    for i in grid_indices(fs.sweep.rows.len(), 10) {
        let row = &fs.sweep.rows[i];
        let Some(eq) = &row.equilibrium else {
            failures.push(format!("no equilibrium at row {i}"));
            continue;
        };
        let q = m.indifference_residual(eq).unwrap_or(f64::NAN).abs();
        let p = m.principal_residual(eq).unwrap_or(f64::NAN).abs();
        let br = m.verify_agent_best_response(eq, 257, 4096, exec);
        let post = match m.verify_principal_indifference(eq, 0.0) {
            Ok(Some(r)) => r.abs(),
            Ok(None) => f64::NAN,
            Err(e) => {
                failures.push(format!("row {i}: {e}"));
                continue;
            }
        };
        for (k, (val, tol, name)) in [(q, 1e-8, "Q"), (p, 1e-8, "P-BR"), (br, 1e-5, "grid oracle"), (post, 1e-6, "posterior")]
            .into_iter()
            .enumerate()
        {
            worst[k] = worst[k].max(val);
            if !(val < tol) {
                failures.push(format!("row {i}: {name} residual {val:e} not below {tol:e}"));
            }
        }
    }
    let summary = format!(
        "max |Q| {:.2e}, max |P-BR| {:.2e}, max grid violation {:.2e}, max posterior {:.2e}",
        worst[0], worst[1], worst[2], worst[3]
    );
    outcome(5, "equilibrium fixed-point health", failures, summary)
}

/// Simulated welfare within three standard errors of the quadrature values.
pub fn criterion_6(base: &Baseline, exec: Execution) -> Outcome {
    let fs = &base.normal;
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_z: f64 = 0.0;
    for i in [15, 30, 45] {
        let row = &fs.sweep.rows[i];
        let (Some(eq), Some(w)) = (&row.equilibrium, &row.welfare) else {
            failures.push(format!("no equilibrium at row {i}"));
            continue;
        };
        let mc = match fs.model.monte_carlo_welfare(eq, MC_SAMPLES, SEED, exec) {
            Ok(mc) => mc,
            Err(e) => {
                failures.push(format!("row {i}: {e}"));
                continue;
            }
        };
        let exact = [w.principal, w.approval_rate, w.agent, w.type_one, w.type_two];
        for ((name, est), x) in mc.fields().into_iter().zip(exact) {
            let z = est.z_score(x);
            worst_z = worst_z.max(z);
            if !(z <= 3.0) {
                failures.push(format!("row {i} {name}: {:.6} vs {x:.6} ({z:.2} se)", est.mean));
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= MC_BUDGET {
        failures.push(format!("Monte Carlo exceeded {}s", MC_BUDGET.as_secs()));
    }
    let summary = format!("largest deviation {worst_z:.2} se; took {:.2}s", elapsed.as_secs_f64());
    outcome(6, "Monte Carlo concordance", failures, summary)
}

/// Accuracy orderings of type pairs under two precisions.
pub fn criterion_7(base: &Baseline) -> Outcome {
    let fs = &base.normal;
    let m = &fs.model;
    let (hi_row, lo_row) = (&fs.sweep.rows[45], &fs.sweep.rows[15]);
    let (Some(sharp), Some(blunt)) = (&hi_row.equilibrium, &lo_row.equilibrium) else {
        return outcome(7, "accuracy orderings", vec!["missing equilibria".into()], String::new());
    };
    let env = m.env();
    let (lo, hi, tilde) = (env.theta_low(), env.theta_high(), m.theta_tilde());
    let th = sharp.theta_hat;
    let grid = default_p_grid();
    let frac = |i: usize| (i as f64 + 0.5) / 5.0;
    let mut failures = Vec::new();
    let mut counts = [0usize; 2];
    for (regime, want) in [("a", AccuracyOrdering::MoreAccurate), ("b", AccuracyOrdering::LessAccurate)] {
        for i in 0..5 {
            let theta = if regime == "a" {
                lo + (th - lo) * frac(i)
            } else {
                th + (tilde - th) * frac(i)
            };
            let theta_prime = tilde + (hi - tilde) * frac(4 - i);
            match m.accuracy_compare_equilibria(theta, theta_prime, sharp, blunt, &grid) {
                Ok(c) if c.ordering == want && c.violations() == 0 => {
                    counts[usize::from(regime == "b")] += 1;
                }
                Ok(c) => failures.push(format!(
                    "({regime}) theta {theta:.3}, theta' {theta_prime:.3}: {:?} with {} violations",
                    c.ordering,
                    c.violations()
                )),
                Err(e) => failures.push(format!("({regime}) {e}")),
            }
        }
    }
    let summary = format!(
        "rho {:.4} vs {:.4}: {}/5 part (a) more accurate, {}/5 part (b) less accurate",
        hi_row.rho, lo_row.rho, counts[0], counts[1]
    );
    outcome(7, "accuracy orderings", failures, summary)
}

/// Commitment raises the standard and the payoff, and its value rises with precision.
pub fn criterion_8(base: &Baseline) -> Outcome {
    let fs = &base.normal;
    let m = &fs.model;
    let tilde = m.theta_tilde();
    let mut failures = Vec::new();
    let mut values = Vec::new();
    for i in grid_indices(fs.sweep.rows.len(), 5) {
        let row = &fs.sweep.rows[i];
        let (Some(eq), Some(w)) = (&row.equilibrium, &row.welfare) else {
            failures.push(format!("no equilibrium at row {i}"));
            continue;
        };
        let sol = match m.solve_commitment(row.sigma) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("row {i}: {e}"));
                continue;
            }
        };
        let tau_eq = eq.tau_hat.to_f64();
        if !(sol.tau_hat > tau_eq) {
            failures.push(format!("row {i}: committed tau_hat {} not above {tau_eq}", sol.tau_hat));
        }
        if !(sol.theta_hat > tilde) {
            failures.push(format!("row {i}: committed theta_hat {} not above {tilde}", sol.theta_hat));
        }
        if !(sol.value >= w.principal) {
            failures.push(format!("row {i}: Vbar {} below V {}", sol.value, w.principal));
        }
        values.push(sol.value);
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        failures.push(format!("Vbar not increasing: {}", fmt_list(&values)));
    }
    let v_max = fs.sweep.argmax_principal().map(|x| x.1).unwrap_or(f64::NAN);
    let v_last = fs.sweep.rows.last().and_then(|r| r.welfare).map(|w| w.principal).unwrap_or(f64::NAN);
    if !(v_last < v_max) {
        failures.push(format!("V at the top of the grid {v_last} is the grid maximum"));
    }
    let summary = format!("Vbar {}; V(top) {v_last:.6} < max V {v_max:.6}", fmt_list(&values));
    outcome(8, "commitment benchmark", failures, summary)
}

/// Extension sweeps on their pinned grids.
#[derive(Debug, Clone)]
pub struct ExtensionData {
    pub quadratic: Vec<(f64, Option<GeneralCostEquilibrium>)>,
    pub binary: Vec<(f64, Option<BinaryEffortEquilibrium>)>,
    /// `(ρ, k, q)`.
    pub reputation: Vec<(f64, f64, f64)>,
}

impl ExtensionData {
    pub fn build(exec: Execution) -> Result<Self> {
        let m = reference_model(Family::Normal)?;
        let cost = ConvexCost::quadratic();
        let grid = |(a, b, n): (f64, f64, usize)| logspace(a, b, n);
        let qs = grid(QUADRATIC_GRID);
        let quadratic = exec.try_map(&qs, |&r| Ok((r, m.solve_convex_cost_equilibrium(r, &cost)?)))?;
        let bs = grid(BINARY_GRID);
        let binary = exec.try_map(&bs, |&r| Ok((r, m.binary_effort_equilibrium(r, BINARY_EBAR, BINARY_CKAPPA)?)))?;
        let reputation = grid(REPUTATION_GRID)
            .into_iter()
            .map(|r| linear_reputation(r, 0.0, REPUTATION_OMEGA).map(|(k, q)| (r, k, q)))
            .collect::<Result<_>>()?;
        Ok(ExtensionData { quadratic, binary, reputation })
    }
}

/// Interior grid maximum strictly above both ends.
fn rises_then_falls(v: &[f64]) -> bool {
    let Some((imax, &vmax)) = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) else {
        return false;
    };
    imax > 0 && imax + 1 < v.len() && vmax > v[0] && vmax > v[v.len() - 1]
}

pub fn criterion_9(ext: &ExtensionData) -> Outcome {
    let mut failures = Vec::new();
    let qv: Vec<f64> = ext.quadratic.iter().filter_map(|(_, e)| e.as_ref().map(|e| e.value)).collect();
    if qv.len() != ext.quadratic.len() {
        failures.push("quadratic: some grid points have no equilibrium".into());
    }
    if !rises_then_falls(&qv) {
        failures.push(format!("quadratic V does not rise then fall: {}", fmt_list(&qv)));
    }
    let bv: Vec<f64> = ext.binary.iter().filter_map(|(_, e)| e.as_ref().map(|e| e.value)).collect();
    if bv.len() != ext.binary.len() {
        failures.push("binary: some grid points have no equilibrium".into());
    }
    if !rises_then_falls(&bv) {
        failures.push(format!("binary V is not rise-then-fall: {}", fmt_list(&bv)));
    }
    let top = ext.binary.last().and_then(|(_, e)| e.as_ref()).map(|e| e.theta_hat).unwrap_or(f64::NAN);
    if !((top - BINARY_CKAPPA).abs() < 0.1) {
        failures.push(format!("binary threshold {top} not within 0.1 of {BINARY_CKAPPA}"));
    }
    if ext.reputation.windows(2).any(|w| !(w[1].1 > w[0].1)) {
        failures.push("reputation loading k not increasing".into());
    }
    let w2 = REPUTATION_OMEGA * REPUTATION_OMEGA;
    if ext.reputation.iter().any(|&(_, k, q)| q != k * w2) {
        failures.push("q differs from k * omega^2".into());
    }
    let summary = format!(
        "quadratic V {}; binary V {}; binary theta_hat at top {top:.6}",
        fmt_list(&qv),
        fmt_list(&bv)
    );
    outcome(9, "extensions", failures, summary)
}

/// Residuals at or below this are treated as exact zeros when checking monotone convergence.
pub const ROUNDING_FLOOR: f64 = 1e-12;

fn non_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] || w[1] <= ROUNDING_FLOOR)
}

/// Residuals of the three asymptotic facts at `p = 1e-2, …, 1e-6`.
pub fn asymptotic_residuals(noise: &NoiseModel) -> Result<[Vec<f64>; 5]> {
    let ps: Vec<f64> = (2..=6).map(|k| 10f64.powi(-k)).collect();
    let z = |p: f64| -> Result<f64> {
        match noise.inv_pdf_upper(p)? {
            ExtReal::Finite(z) => Ok(z),
            ExtReal::PosInf => Ok(f64::INFINITY),
        }
    };
    let mut ratio = [Vec::new(), Vec::new()];
    let mut shift = [Vec::new(), Vec::new()];
    let mut bound = Vec::new();
    for &p in &ps {
        let bp = noise.b(p)?;
        for (k, c) in [0.5f64, 2.0].into_iter().enumerate() {
            ratio[k].push((noise.b(c * p)? / bp - 1.0).abs());
            shift[k].push((z(c * p)? - z(p)? + bp * c.ln()).abs());
        }
        // log of f(1/p) / (p^2 b(p))
        bound.push(noise.ln_pdf(1.0 / p) - 2.0 * p.ln() - bp.ln());
    }
    let [r0, r1] = ratio;
    let [s0, s1] = shift;
    Ok([r0, r1, s0, s1, bound])
}

pub fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for noise in [NoiseModel::normal(), NoiseModel::laplace()] {
        let fam = noise.family();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let (a, b) = (-6.0 + 12.0 * unit(), -6.0 + 12.0 * unit());
            let (x, xp) = if a > b { (a, b) } else { (b, a) };
            let mass = if xp >= 0.0 {
                noise.cdf(-xp) - noise.cdf(-x)
            } else {
                noise.cdf(x) - noise.cdf(xp)
            };
            let mid = (noise.pdf(x) - noise.pdf(xp)) / mass;
            let (left, right) = (noise.score(xp), noise.score(x));
            let slack = 1e-9 * (1.0 + mid.abs());
            let gap = (mid - left).max(right - mid);
            worst = worst.max(gap);
            if gap > slack {
                failures.push(format!("{fam}: log-concavity inequality fails at ({x:.4}, {xp:.4})"));
            }
        }
        summary.push(format!("{fam} worst log-concavity gap {worst:.2e}"));
        match asymptotic_residuals(&noise) {
            Ok(res) => {
                let names = ["b(p/2)/b(p)", "b(2p)/b(p)", "shift c=1/2", "shift c=2", "tail bound (log)"];
                for (name, r) in names.iter().zip(&res) {
                    if !non_increasing(r) {
                        failures.push(format!("{fam}: {name} residuals not decreasing {}", fmt_list(r)));
                    }
                }
            }
            Err(e) => failures.push(format!("{fam}: {e}")),
        }
        match noise.tail_regularity(30.0) {
            Ok(t) if (t - 1.0).abs() <= 0.01 => summary.push(format!("{fam} tail regularity at 30 = {t:.6}")),
            Ok(t) => failures.push(format!("{fam}: tail regularity at 30 is {t}")),
            Err(e) => failures.push(format!("{fam}: {e}")),
        }
    }
    outcome(10, "noise properties", failures, summary.join("; "))
}

/// Byte comparison of two artifact sets, as `(name, bytes)` pairs.
pub fn criterion_11(first: &[(String, Vec<u8>)], second: &[(String, Vec<u8>)]) -> Outcome {
    let mut failures = Vec::new();
    let names = |s: &[(String, Vec<u8>)]| s.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
    if names(first) != names(second) {
        failures.push(format!("file sets differ: {:?} vs {:?}", names(first), names(second)));
    }
    for ((n, a), (_, b)) in first.iter().zip(second) {
        if a != b {
            failures.push(format!("{n} differs"));
        }
    }
    if first.is_empty() {
        failures.push("no CSV artifacts produced".into());
    }
    let summary = format!("{} CSV files compared", first.len());
    outcome(11, "determinism", failures, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_cover_both_ends() {
        assert_eq!(grid_indices(60, 5), vec![0, 15, 30, 44, 59]);
        assert_eq!(grid_indices(60, 10).len(), 10);
        assert_eq!(*grid_indices(60, 10).last().unwrap(), 59);
    }

    #[test]
    fn rise_then_fall_shape() {
        assert!(rises_then_falls(&[1.0, 3.0, 2.0]));
        assert!(!rises_then_falls(&[1.0, 2.0, 3.0]));
        assert!(!rises_then_falls(&[3.0, 2.0, 1.0]));
        assert!(!rises_then_falls(&[]));
    }

    #[test]
    fn noise_suite_passes() {
        let o = criterion_10();
        assert!(o.passed, "{o}");
    }

    #[test]
    fn determinism_comparison() {
        let a = vec![("x.csv".to_string(), b"1".to_vec())];
        let b = vec![("x.csv".to_string(), b"2".to_vec())];
        assert!(criterion_11(&a, &a).passed);
        assert!(!criterion_11(&a, &b).passed);
    }
}
