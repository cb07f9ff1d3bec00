//! Payoffs, approval rates and screening errors, alone and across precision grids.

use crate::equilibrium::{Equilibrium, Model};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ext::ExtReal;
use crate::numeric::{logspace, quad_split};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareReport {
    /// Principal's ex-ante payoff.
    pub principal: f64,
    pub approval_rate: f64,
    /// Agent's ex-ante payoff net of effort cost.
    pub agent: f64,
    /// Probability a good type is rejected.
    pub type_one: f64,
    /// Probability a bad type is approved.
    pub type_two: f64,
}

impl Model {
    /// Outcome functionals when types at or above `theta_hat` exert interior effort
    /// against the standard `tau_hat` and everyone else exerts none.
    pub fn outcomes(&self, tau_hat: ExtReal, theta_hat: f64, sigma: f64) -> Result<WelfareReport> {
        let env = self.env();
        let (lo, hi, tilde) = (env.theta_low(), env.theta_high(), self.theta_tilde());
        let t = match tau_hat {
            ExtReal::PosInf => {
                return Ok(WelfareReport {
                    principal: 0.0,
                    approval_rate: 0.0,
                    agent: 0.0,
                    type_one: 1.0 - env.cdf(tilde),
                    type_two: 0.0,
                })
            }
            ExtReal::Finite(t) => t,
        };
        if !(theta_hat >= lo && theta_hat <= hi) {
            return Err(Error::Domain(format!("threshold {theta_hat} outside type range")));
        }
        let noise = self.noise();
        let tol = self.tolerances().quad;
        let breaks = [self.kink(sigma), tilde];
        let lucky = noise.cdf(-t);
        let pass = |th: f64| noise.cdf(self.overshoot(th, sigma));
        let fail = |th: f64| noise.cdf(-self.overshoot(th, sigma));
        let g = |th: f64| env.density(th);

        let principal = env.payoff_below(theta_hat) * lucky
            + quad_split(|th| env.payoff(th) * g(th) * pass(th), theta_hat, hi, &breaks, tol)?;

        let split = theta_hat.max(tilde);
        let bad_effort = quad_split(|th| g(th) * pass(th), theta_hat, split, &breaks, tol)?;
        let good_effort = quad_split(|th| g(th) * pass(th), split, hi, &breaks, tol)?;
        let type_two = env.cdf(theta_hat.min(tilde)) * lucky + bad_effort;
        let good_lucky = (env.cdf(theta_hat) - env.cdf(tilde)).max(0.0) * lucky;
        let approval_rate = type_two + good_lucky + good_effort;

        let idle_good = (env.cdf(theta_hat) - env.cdf(tilde)).max(0.0) * (1.0 - lucky);
        let type_one = idle_good + quad_split(|th| g(th) * fail(th), split, hi, &breaks, tol)?;

        let cost = quad_split(
            |th| g(th) * sigma / th * (t + self.overshoot(th, sigma)).max(0.0),
            theta_hat,
            hi,
            &breaks,
            tol,
        )?;

        Ok(WelfareReport {
            principal,
            approval_rate,
            agent: approval_rate - cost,
            type_one,
            type_two,
        })
    }

    pub fn welfare(&self, eq: &Equilibrium) -> Result<WelfareReport> {
        self.outcomes(eq.tau_hat, eq.theta_hat, eq.sigma)
    }

    pub fn principal_payoff(&self, eq: &Equilibrium) -> Result<f64> {
        Ok(self.welfare(eq)?.principal)
    }

    /// `(approval rate, agent payoff)`.
    pub fn approval_and_agent(&self, eq: &Equilibrium) -> Result<(f64, f64)> {
        let w = self.welfare(eq)?;
        Ok((w.approval_rate, w.agent))
    }

    /// `(type I, type II)` error probabilities.
    pub fn type_errors(&self, eq: &Equilibrium) -> Result<(f64, f64)> {
        let w = self.welfare(eq)?;
        Ok((w.type_one, w.type_two))
    }

    /// Mass of good types.
    pub fn good_mass(&self) -> f64 {
        1.0 - self.env().cdf(self.theta_tilde())
    }

    /// Compares the experiment `(theta, theta_prime)` under two equilibria via the
    /// quantile transform `F(F^{-1}(p) + (e(theta) - e(theta')) / sigma)`.
    ///
    /// The ordering is that of `first` relative to `second`.
    pub fn accuracy_compare_equilibria(
        &self,
        theta: f64,
        theta_prime: f64,
        first: &Equilibrium,
        second: &Equilibrium,
        p_grid: &[f64],
    ) -> Result<AccuracyComparison> {
        if !(theta < theta_prime) {
            return Err(Error::Domain(format!(
                "accuracy comparison needs theta < theta' (got {theta}, {theta_prime})"
            )));
        }
        let shift = |eq: &Equilibrium| {
            (self.effort(eq, theta) - self.effort(eq, theta_prime)) / eq.sigma
        };
        let (d1, d2) = (shift(first), shift(second));
        let noise = self.noise();
        let mut points = Vec::with_capacity(p_grid.len());
        for &p in p_grid {
            let x = noise.quantile(p)?;
            let a = noise.ln_cdf(x + d1);
            let b = noise.ln_cdf(x + d2);
            points.push((p, a, b));
        }
        Ok(AccuracyComparison::from_points(points))
    }

    /// Solves both noise scales and compares as in [`Model::accuracy_compare_equilibria`].
    pub fn accuracy_compare(
        &self,
        theta: f64,
        theta_prime: f64,
        sigma: f64,
        sigma_prime: f64,
        p_grid: &[f64],
    ) -> Result<AccuracyComparison> {
        let solve = |s: f64| {
            self.solve_semiseparating(s)?.ok_or_else(|| {
                Error::Domain(format!("no semi-separating equilibrium at sigma {s}"))
            })
        };
        let (a, b) = (solve(sigma)?, solve(sigma_prime)?);
        self.accuracy_compare_equilibria(theta, theta_prime, &a, &b, p_grid)
    }

    /// One row per precision; rows beyond the existence boundary carry no equilibrium.
    pub fn sweep(&self, rhos: &[f64], exec: Execution) -> Result<SweepResult> {
        if rhos.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Domain("precision grid must be positive and finite".into()));
        }
        if rhos.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("precision grid must be strictly increasing".into()));
        }
        let rows = exec.try_map(rhos, |&rho| {
            let sigma = 1.0 / rho;
            let eq = self.solve_semiseparating(sigma)?;
            let welfare = eq.as_ref().map(|e| self.welfare(e)).transpose()?;
            Ok(SweepRow {
                rho,
                sigma,
                equilibrium: eq,
                welfare,
            })
        })?;
        Ok(SweepResult { rows })
    }

    /// Log-spaced grid between multiples of the existence boundary in precision.
    pub fn precision_grid(&self, min_mult: f64, max_mult: f64, points: usize) -> Result<Vec<f64>> {
        let rho_tilde = self.sigma_tilde()?.rho();
        Ok(logspace(min_mult * rho_tilde, max_mult * rho_tilde, points))
    }
}

/// Default evaluation points for accuracy comparisons: `i / 34` for `i = 1..=33`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=33).map(|i| i as f64 / 34.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracyOrdering {
    MoreAccurate,
    LessAccurate,
    Equivalent,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyComparison {
    pub ordering: AccuracyOrdering,
    /// `(p, ln H_first, ln H_second)` per grid point.
    pub points: Vec<(f64, f64, f64)>,
}

impl AccuracyComparison {
    fn from_points(points: Vec<(f64, f64, f64)>) -> Self {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        let mut lower = 0;
        let mut higher = 0;
        for &(_, a, b) in &points {
            if same(a, b) {
                continue;
            }
            if a < b {
                lower += 1;
            } else {
                higher += 1;
            }
        }
        let ordering = match (lower, higher) {
            (0, 0) => AccuracyOrdering::Equivalent,
            (_, 0) => AccuracyOrdering::MoreAccurate,
            (0, _) => AccuracyOrdering::LessAccurate,
            _ => AccuracyOrdering::Incomparable,
        };
        AccuracyComparison { ordering, points }
    }

    /// Grid points that contradict the reported ordering.
    pub fn violations(&self) -> usize {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        self.points
            .iter()
            .filter(|&&(_, a, b)| match self.ordering {
                AccuracyOrdering::MoreAccurate => a > b && !same(a, b),
                AccuracyOrdering::LessAccurate => a < b && !same(a, b),
                AccuracyOrdering::Equivalent => !same(a, b),
                AccuracyOrdering::Incomparable => false,
            })
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub sigma: f64,
    pub equilibrium: Option<Equilibrium>,
    pub welfare: Option<WelfareReport>,
}

impl SweepRow {
    pub fn exists(&self) -> bool {
        self.equilibrium.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn rhos(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rho).collect()
    }

    /// Rows with an equilibrium.
    pub fn solved(&self) -> impl Iterator<Item = (&SweepRow, &Equilibrium, &WelfareReport)> {
        self.rows
            .iter()
            .filter_map(|r| Some((r, r.equilibrium.as_ref()?, r.welfare.as_ref()?)))
    }

    pub fn column(&self, pick: impl Fn(&WelfareReport) -> f64) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.welfare.as_ref().map(&pick)).collect()
    }

    /// Grid precision with the largest principal payoff.
    pub fn argmax_principal(&self) -> Option<(f64, f64)> {
        self.solved()
            .map(|(r, _, w)| (r.rho, w.principal))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Central differences `(y[i+1] - y[i-1]) / (x[i+1] - x[i-1])` at interior points.
pub fn central_differences(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..x.len().saturating_sub(1))
        .map(|i| (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Environment;
    use crate::noise::NoiseModel;

    fn model(noise: NoiseModel) -> Model {
        Model::new(Environment::uniform_affine(5.0, 15.0, 11.0).unwrap(), noise).unwrap()
    }

    /// Trapezoid over types of the equilibrium approval probability computed from the
    /// effort schedule directly.
    fn brute_force(m: &Model, eq: &Equilibrium) -> (f64, f64) {
        let tau = eq.tau.finite().unwrap();
        let pr = |th: f64| 1.0 - m.noise().cdf((tau - m.effort(eq, th)) / eq.sigma);
        let (mut v, mut ar) = (0.0, 0.0);
        // Simpson on each side of the participation jump
        for (a, b, p) in [(5.0, eq.theta_hat, 1.0 - m.noise().cdf(eq.tau_hat.finite().unwrap())), (eq.theta_hat, 15.0, f64::NAN)] {
            let n = 100_000;
            let h = (b - a) / n as f64;
            for i in 0..=n {
                let th = a + h * i as f64;
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                let q = if p.is_nan() { pr(th.max(eq.theta_hat)) } else { p };
                v += w * h / 3.0 * (th - 11.0) / 10.0 * q;
                ar += w * h / 3.0 / 10.0 * q;
            }
        }
        (v, ar)
    }

    #[test]
    fn pooling_outcomes() {
        let m = model(NoiseModel::normal());
        let w = m.welfare(&m.pooling(10.0)).unwrap();
        assert_eq!((w.principal, w.approval_rate, w.agent), (0.0, 0.0, 0.0));
        assert!((w.type_one - 0.4).abs() < 1e-15);
        assert_eq!(w.type_two, 0.0);
    }

    #[test]
    fn quadrature_matches_brute_force() {
        for noise in [NoiseModel::normal(), NoiseModel::laplace()] {
            let m = model(noise);
            for sigma in [3.0, 1.2, 0.4] {
                let eq = m.solve_semiseparating(sigma).unwrap().unwrap();
                let w = m.welfare(&eq).unwrap();
                let (v, ar) = brute_force(&m, &eq);
                assert!((w.principal - v).abs() < 2e-6, "{sigma}: {} vs {v}", w.principal);
                assert!((w.approval_rate - ar).abs() < 2e-6);
            }
        }
    }

    #[test]
    fn report_invariants_and_partition() {
        let m = model(NoiseModel::normal());
        let st = m.sigma_tilde().unwrap().sigma;
        for k in 0..30 {
            let sigma = st * 0.9f64.powi(k);
            let eq = m.solve_semiseparating(sigma).unwrap().unwrap();
            let w = m.welfare(&eq).unwrap();
            for p in [w.approval_rate, w.type_one, w.type_two] {
                assert!((0.0..=1.0).contains(&p));
            }
            assert!(w.agent <= w.approval_rate);
            assert!(w.type_two <= w.approval_rate);
            assert!(w.type_one <= m.good_mass());
            let identity = w.type_two + m.good_mass() - w.type_one - w.approval_rate;
            assert!(identity.abs() < 1e-10, "{identity}");
        }
    }

    #[test]
    fn vanishing_noise_payoffs_approach_limits() {
        let m = model(NoiseModel::normal());
        let d = m.theta_dagger();
        let v_lim = ((15.0 - 11.0f64).powi(2) - (d - 11.0).powi(2)) / 20.0;
        let u_lim = ((15.0 - d) - d * (15.0 / d).ln()) / 10.0;
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for sigma in [0.5, 0.2, 0.1, 0.05] {
            let eq = m.solve_semiseparating(sigma).unwrap().unwrap();
            let w = m.welfare(&eq).unwrap();
            let gaps = ((w.principal - v_lim).abs(), (w.agent - u_lim).abs());
            assert!(gaps.0 < prev.0 && gaps.1 < prev.1);
            prev = gaps;
        }
        assert!(prev.0 < 5e-3 && prev.1 < 5e-2, "{prev:?}");
    }

    #[test]
    fn accuracy_equal_noise_is_equivalent() {
        let m = model(NoiseModel::normal());
        let c = m.accuracy_compare(6.0, 13.0, 1.0, 1.0, &default_p_grid()).unwrap();
        assert_eq!(c.ordering, AccuracyOrdering::Equivalent);
        assert_eq!(c.violations(), 0);
        assert!(matches!(
            m.accuracy_compare(13.0, 6.0, 1.0, 2.0, &default_p_grid()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        let m = model(NoiseModel::normal());
        assert!(m.sweep(&[1.0, 0.5], Execution::Sequential).is_err());
    }

    #[test]
    fn sweep_flags_existence_once() {
        let m = model(NoiseModel::normal());
        let grid = m.precision_grid(0.5, 3.0, 12).unwrap();
        let s = m.sweep(&grid, Execution::default()).unwrap();
        let flags: Vec<bool> = s.rows.iter().map(|r| r.exists()).collect();
        let first = flags.iter().position(|&f| f).unwrap();
        assert!(first > 0);
        assert!(flags[first..].iter().all(|&f| f));
        let seq = m.sweep(&grid, Execution::Sequential).unwrap();
        assert_eq!(s, seq);
    }

    #[test]
    fn central_difference_of_line() {
        let x = [0.0, 1.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_eq!(central_differences(&x, &y), vec![2.0, 2.0]);
    }
}
