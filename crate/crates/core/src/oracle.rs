//! Brute-force and Monte Carlo cross-checks of solved equilibria.

use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equilibrium::{Equilibrium, Model};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ext::ExtReal;
use crate::numeric::{linspace, quad_split};

/// Number of independent RNG streams a Monte Carlo run is split into.
pub const SHARDS: u64 = 64;
pub const MIN_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Distance from `value` in standard errors; infinite if the estimate is degenerate and differs.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.mean - value).abs();
        if self.se > 0.0 {
            d / self.se
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloWelfare {
    pub n: usize,
    pub seed: u64,
    pub principal: Estimate,
    pub approval_rate: Estimate,
    pub agent: Estimate,
    pub type_one: Estimate,
    pub type_two: Estimate,
}

impl MonteCarloWelfare {
    pub fn fields(&self) -> [(&'static str, Estimate); 5] {
        [
            ("V", self.principal),
            ("AR", self.approval_rate),
            ("U", self.agent),
            ("alpha", self.type_one),
            ("beta", self.type_two),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub sigma: f64,
    pub best_response_violation: f64,
    /// `None` for a pooling equilibrium.
    pub principal_residual: Option<f64>,
    pub monte_carlo: MonteCarloWelfare,
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sigma={:.17e}", self.sigma)?;
        writeln!(f, "rho={:.17e}", 1.0 / self.sigma)?;
        writeln!(f, "seed={}", self.monte_carlo.seed)?;
        writeln!(f, "n={}", self.monte_carlo.n)?;
        writeln!(f, "best_response_violation={:.17e}", self.best_response_violation)?;
        match self.principal_residual {
            Some(r) => writeln!(f, "principal_residual={r:.17e}")?,
            None => writeln!(f, "principal_residual=skipped")?,
        }
        for (name, e) in self.monte_carlo.fields() {
            writeln!(f, "{name}={:.17e}", e.mean)?;
            writeln!(f, "{name}_se={:.17e}", e.se)?;
        }
        Ok(())
    }
}

/// Uniform draw strictly inside `(0, 1)`.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    sum: [f64; 5],
    sq: [f64; 5],
}

impl Model {
    fn agent_payoff(&self, e: f64, theta: f64, tau: f64, sigma: f64) -> f64 {
        self.noise().cdf((e - tau) / sigma) - e / theta
    }

    /// Largest payoff gain any grid type finds on an even effort grid over `[0, τ + 6σ]`.
    pub fn verify_agent_best_response(
        &self,
        eq: &Equilibrium,
        types: usize,
        efforts: usize,
        exec: Execution,
    ) -> f64 {
        let tau = match eq.tau {
            ExtReal::PosInf => return 0.0,
            ExtReal::Finite(t) => t,
        };
        let sigma = eq.sigma;
        let env = self.env();
        let thetas = linspace(env.theta_low(), env.theta_high(), types);
        let grid = linspace(0.0, tau + 6.0 * sigma, efforts);
        exec.map(&thetas, |&th| {
            let base = self.agent_payoff(self.effort(eq, th), th, tau, sigma);
            grid.iter()
                .map(|&e| self.agent_payoff(e, th, tau, sigma) - base)
                .fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// `∫ v g f_σ(τ + shift·σ − e*)`; `None` for pooling.
    pub fn verify_principal_indifference(&self, eq: &Equilibrium, shift: f64) -> Result<Option<f64>> {
        let tau = match eq.tau {
            ExtReal::PosInf => return Ok(None),
            ExtReal::Finite(t) => t + shift * eq.sigma,
        };
        let sigma = eq.sigma;
        let env = self.env();
        let noise = self.noise();
        let integrand = |th: f64| {
            env.payoff(th) * env.density(th) * noise.pdf((tau - self.effort(eq, th)) / sigma) / sigma
        };
        let breaks = [self.kink(sigma), self.theta_tilde()];
        let tol = self.tolerances().quad;
        let below = quad_split(integrand, env.theta_low(), eq.theta_hat, &breaks, tol)?;
        let above = quad_split(integrand, eq.theta_hat, env.theta_high(), &breaks, tol)?;
        Ok(Some(below + above))
    }

    fn shard_moments(&self, eq: &Equilibrium, n: usize, seed: u64, shard: u64) -> Result<Moments> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shard);
        let env = self.env();
        let noise = self.noise();
        let tilde = self.theta_tilde();
        let mut m = Moments::default();
        for _ in 0..n {
            let th = env.quantile(open_unit(&mut rng));
            let eps = noise.quantile(open_unit(&mut rng))?;
            let (approve, e) = match eq.tau {
                ExtReal::PosInf => (false, 0.0),
                ExtReal::Finite(tau) => {
                    let e = self.effort(eq, th);
                    (e + eq.sigma * eps > tau, e)
                }
            };
            let a = if approve { 1.0 } else { 0.0 };
            let good = th >= tilde;
            let x = [
                env.payoff(th) * a,
                a,
                a - e / th,
                if good && !approve { 1.0 } else { 0.0 },
                if !good && approve { 1.0 } else { 0.0 },
            ];
            for k in 0..5 {
                m.sum[k] += x[k];
                m.sq[k] += x[k] * x[k];
            }
        }
        Ok(m)
    }

    /// Simulated welfare functionals with standard errors.
    ///
    /// Samples are split over [`SHARDS`] ChaCha streams keyed by `seed`, so the result
    /// does not depend on `exec`.
    pub fn monte_carlo_welfare(
        &self,
        eq: &Equilibrium,
        n: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<MonteCarloWelfare> {
        if n < MIN_SAMPLES {
            return Err(Error::Domain(format!(
                "Monte Carlo needs at least {MIN_SAMPLES} samples, got {n}"
            )));
        }
        let base = n / SHARDS as usize;
        let extra = n % SHARDS as usize;
        let shards: Vec<(u64, usize)> = (0..SHARDS)
            .map(|s| (s, base + usize::from((s as usize) < extra)))
            .collect();
        let parts = exec.try_map(&shards, |&(s, k)| self.shard_moments(eq, k, seed, s))?;
        let mut tot = Moments::default();
        for p in &parts {
            for k in 0..5 {
                tot.sum[k] += p.sum[k];
                tot.sq[k] += p.sq[k];
            }
        }
        let nf = n as f64;
        let est = |k: usize| {
            let mean = tot.sum[k] / nf;
            let var = ((tot.sq[k] / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
            Estimate {
                mean,
                se: (var / nf).sqrt(),
            }
        };
        Ok(MonteCarloWelfare {
            n,
            seed,
            principal: est(0),
            approval_rate: est(1),
            agent: est(2),
            type_one: est(3),
            type_two: est(4),
        })
    }

    pub fn oracle_report(&self, eq: &Equilibrium, n: usize, seed: u64, exec: Execution) -> Result<OracleReport> {
        Ok(OracleReport {
            sigma: eq.sigma,
            best_response_violation: self.verify_agent_best_response(eq, 257, 4096, exec),
            principal_residual: self.verify_principal_indifference(eq, 0.0)?,
            monte_carlo: self.monte_carlo_welfare(eq, n, seed, exec)?,
        })
    }

    /// Kolmogorov-Smirnov distance between `n` seeded type draws and the type cdf.
    pub fn type_draw_ks(&self, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = self.env();
        let mut xs: Vec<f64> = (0..n).map(|_| env.quantile(open_unit(&mut rng))).collect();
        ks_statistic(&mut xs, |x| env.cdf(x))
    }
}

/// Sup distance between the empirical cdf of `xs` and `cdf`. Sorts `xs`.
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Environment;
    use crate::noise::NoiseModel;

    fn model() -> Model {
        Model::new(
            Environment::uniform_affine(5.0, 15.0, 11.0).unwrap(),
            NoiseModel::normal(),
        )
        .unwrap()
    }

    #[test]
    fn exact_equilibrium_passes_grid_check() {
        let m = model();
        let eq = m.solve_semiseparating(1.0).unwrap().unwrap();
        let v = m.verify_agent_best_response(&eq, 257, 4096, Execution::Sequential);
        assert!(v <= 1e-6, "{v}");
    }

    #[test]
    fn perturbed_standard_is_caught() {
        let m = model();
        let mut eq = m.solve_semiseparating(1.0).unwrap().unwrap();
        let tau = eq.tau.finite().unwrap() * 1.05;
        eq.tau = ExtReal::Finite(tau);
        eq.tau_hat = ExtReal::Finite(tau / eq.sigma);
        assert!(m.verify_agent_best_response(&eq, 257, 4096, Execution::Sequential) > 1e-4);
    }

    #[test]
    fn pooling_has_nothing_to_check() {
        let m = model();
        let eq = m.pooling(5.0);
        assert_eq!(m.verify_agent_best_response(&eq, 33, 64, Execution::Sequential), 0.0);
        assert_eq!(m.verify_principal_indifference(&eq, 0.0).unwrap(), None);
        let mc = m.monte_carlo_welfare(&eq, 20_000, 1, Execution::Sequential).unwrap();
        assert_eq!(mc.approval_rate.mean, 0.0);
    }

    #[test]
    fn principal_indifference_and_its_sign() {
        let m = model();
        for sigma in [2.0, 0.5] {
            let eq = m.solve_semiseparating(sigma).unwrap().unwrap();
            let r = m.verify_principal_indifference(&eq, 0.0).unwrap().unwrap();
            assert!(r.abs() < 1e-6, "{r}");
            assert!(m.verify_principal_indifference(&eq, 0.1).unwrap().unwrap() > 0.0);
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_and_schedule_free() {
        let m = model();
        let eq = m.solve_semiseparating(1.0).unwrap().unwrap();
        let a = m.monte_carlo_welfare(&eq, 50_000, 7, Execution::Sequential).unwrap();
        let b = m.monte_carlo_welfare(&eq, 50_000, 7, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = m.monte_carlo_welfare(&eq, 50_000, 8, Execution::Sequential).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature() {
        let m = model();
        let eq = m.solve_semiseparating(1.0).unwrap().unwrap();
        let w = m.welfare(&eq).unwrap();
        let mc = m.monte_carlo_welfare(&eq, 200_000, 3, Execution::Parallel).unwrap();
        let exact = [w.principal, w.approval_rate, w.agent, w.type_one, w.type_two];
        for ((name, e), x) in mc.fields().into_iter().zip(exact) {
            assert!(e.se > 0.0);
            assert!(e.z_score(x) < 4.0, "{name}: {} vs {x}", e.mean);
        }
    }

    #[test]
    fn rejects_tiny_samples() {
        let m = model();
        let eq = m.pooling(5.0);
        assert!(m.monte_carlo_welfare(&eq, 100, 1, Execution::Sequential).is_err());
    }

    #[test]
    fn type_draws_pass_ks() {
        let m = model();
        let n = 100_000;
        assert!(m.type_draw_ks(n, 11) < 1.63 / (n as f64).sqrt());
    }

    #[test]
    fn ks_of_perfect_grid() {
        let mut xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_statistic(&mut xs, |x| x) - 0.05).abs() < 1e-15);
    }
}
