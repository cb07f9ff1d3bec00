//! Best responses and the semi-separating equilibrium.

use std::fmt;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::noise::NoiseModel;
use crate::numeric::{bisect, bisect_predicate};

/// Slack on the log-scale existence test at the edge of the existence region.
const EXISTENCE_SLACK: f64 = 1e-9;
const SIGMA_SCAN_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bisection width in the unknown. Zero runs to machine resolution.
    pub solver: f64,
    /// Absolute quadrature tolerance.
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: 1e-12,
            quad: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    SemiSeparating,
    Pooling,
}

impl fmt::Display for EquilibriumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumKind::SemiSeparating => "semi-separating",
            EquilibriumKind::Pooling => "pooling",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub sigma: f64,
    pub rho: f64,
    /// Approval standard in signal units.
    pub tau: ExtReal,
    /// Standard in noise units, `tau / sigma`.
    pub tau_hat: ExtReal,
    /// Lowest participating type.
    pub theta_hat: f64,
    pub kind: EquilibriumKind,
}

impl Equilibrium {
    pub fn is_pooling(&self) -> bool {
        self.kind == EquilibriumKind::Pooling
    }
}

/// Location of the existence threshold in the noise scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaTilde {
    pub sigma: f64,
    /// Sign changes of the threshold condition beyond the first.
    pub extra_roots: usize,
}

impl SigmaTilde {
    pub fn rho(&self) -> f64 {
        1.0 / self.sigma
    }
}

/// An environment paired with a noise family.
#[derive(Debug, Clone)]
pub struct Model {
    env: Environment,
    noise: NoiseModel,
    tol: Tolerances,
    tilde: f64,
    dagger: f64,
}

impl Model {
    pub fn new(env: Environment, noise: NoiseModel) -> Result<Self> {
        Self::with_tolerances(env, noise, Tolerances::default())
    }

    pub fn with_tolerances(env: Environment, noise: NoiseModel, tol: Tolerances) -> Result<Self> {
        if !(tol.solver >= 0.0 && tol.quad > 0.0) {
            return Err(Error::Domain(format!("invalid tolerances {tol:?}")));
        }
        let tilde = env.theta_tilde()?;
        let dagger = env.theta_dagger()?;
        Ok(Model {
            env,
            noise,
            tol,
            tilde,
            dagger,
        })
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn theta_tilde(&self) -> f64 {
        self.tilde
    }

    pub fn theta_dagger(&self) -> f64 {
        self.dagger
    }

    /// `f^{-1}(sigma / theta)`: noise-unit overshoot of an interior effort.
    pub fn overshoot(&self, theta: f64, sigma: f64) -> f64 {
        self.noise.inv_pdf_positive(sigma / theta)
    }

    /// Type above which the interior overshoot is positive.
    pub fn kink(&self, sigma: f64) -> f64 {
        sigma / self.noise.peak()
    }

    pub fn optimal_positive_effort(&self, theta: f64, tau: f64, sigma: f64) -> f64 {
        (tau + sigma * self.overshoot(theta, sigma)).max(0.0)
    }

    /// Gain from the interior effort over zero effort, per unit of approval.
    pub fn indifference(&self, theta_hat: f64, tau_hat: f64, sigma: f64) -> f64 {
        let z = self.overshoot(theta_hat, sigma);
        self.noise.cdf(z) - (tau_hat + z) * sigma / theta_hat - self.noise.cdf(-tau_hat)
    }

    /// Lowest type that prefers positive effort against the standard `tau_hat`.
    pub fn agent_threshold(&self, tau_hat: ExtReal, sigma: f64) -> f64 {
        let (lo, hi) = (self.env.theta_low(), self.env.theta_high());
        let t = match tau_hat {
            ExtReal::PosInf => return hi,
            ExtReal::Finite(t) => t,
        };
        if t < 0.0 {
            return (sigma / self.noise.pdf(-t)).clamp(lo, hi);
        }
        if self.indifference(lo, t, sigma) >= 0.0 {
            return lo;
        }
        if self.indifference(hi, t, sigma) <= 0.0 {
            return hi;
        }
        bisect(|th| self.indifference(th, t, sigma), lo, hi, 0.0).unwrap_or(hi)
    }

    /// Principal's best standard in noise units given participation threshold `theta_hat`.
    pub fn principal_standard(&self, theta_hat: f64, sigma: f64) -> Result<ExtReal> {
        if theta_hat <= self.dagger {
            if theta_hat == self.dagger {
                return Ok(ExtReal::PosInf);
            }
            let ratio = self.env.ratio(theta_hat)?;
            return Err(Error::UndefinedStandard { theta_hat, ratio });
        }
        let ratio = self.env.ratio(theta_hat)?;
        if ratio > 0.0 {
            return Err(Error::UndefinedStandard { theta_hat, ratio });
        }
        let density = -sigma * ratio;
        let peak = self.noise.peak();
        if density > peak {
            return Err(Error::NoiseTooLarge {
                sigma,
                density,
                peak,
            });
        }
        self.noise.inv_pdf_upper(density)
    }

    /// `Theta(T(theta_hat)) - theta_hat`.
    pub fn fixed_point_residual(&self, theta_hat: f64, sigma: f64) -> Result<f64> {
        let t = self.principal_standard(theta_hat, sigma)?;
        Ok(self.agent_threshold(t, sigma) - theta_hat)
    }

    /// Threshold condition whose root in sigma is the existence boundary.
    /// Nonpositive values admit a semi-separating equilibrium.
    pub fn threshold_condition(&self, sigma: f64) -> Result<f64> {
        let tilde = self.tilde;
        let r = self.env.ratio(tilde)?;
        let z1 = self.overshoot(tilde, sigma);
        let z2 = match self.noise.inv_pdf_upper(-sigma * r)? {
            ExtReal::Finite(z) => z,
            ExtReal::PosInf => return Ok(f64::NEG_INFINITY),
        };
        Ok(sigma / tilde * (z1 + z2) - (self.noise.cdf(z1) - self.noise.cdf(-z2)))
    }

    pub fn sigma_tilde(&self) -> Result<SigmaTilde> {
        let upper = self.tilde * self.noise.peak() * 0.999;
        let grid: Vec<f64> = (1..=SIGMA_SCAN_POINTS)
            .map(|i| upper * i as f64 / SIGMA_SCAN_POINTS as f64)
            .collect();
        let vals = grid
            .iter()
            .map(|&s| self.threshold_condition(s))
            .collect::<Result<Vec<f64>>>()?;
        let changes: Vec<usize> = vals
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[0] > 0.0) != (w[1] > 0.0))
            .map(|(i, _)| i)
            .collect();
        let Some(&first) = changes.first() else {
            return Err(Error::ThresholdNotFound(format!(
                "no sign change of the existence condition on (0, {upper}]"
            )));
        };
        let root = bisect(
            |s| self.threshold_condition(s).unwrap_or(f64::NAN),
            grid[first],
            grid[first + 1],
            0.0,
        )
        .ok_or_else(|| Error::ThresholdNotFound("bisection lost the bracket".into()))?;
        Ok(SigmaTilde {
            sigma: root,
            extra_roots: changes.len() - 1,
        })
    }

    /// Smallest standard that deters every bad type.
    fn deterrence_standard(&self, sigma: f64) -> f64 {
        let deters = |t: f64| self.agent_threshold(ExtReal::Finite(t), sigma) >= self.tilde;
        let mut b = 1.0;
        while !deters(b) {
            b *= 2.0;
        }
        bisect_predicate(deters, 0.0, b, 0.0)
    }

    /// Log gap between the noise density at `tau_hat` and the principal's indifference density.
    /// Non-increasing in `tau_hat`; `+inf` while the induced threshold is at or below the
    /// lowest admissible threshold.
    fn standard_gap(&self, tau_hat: f64, sigma: f64) -> f64 {
        let th = self.agent_threshold(ExtReal::Finite(tau_hat), sigma).min(self.tilde);
        let above = self.env.weighted_payoff_above(th);
        if above <= 0.0 {
            return f64::INFINITY;
        }
        let below = -self.env.payoff_below(th);
        self.noise.ln_pdf(tau_hat) - sigma.ln() - above.ln() + below.ln()
    }

    /// Participation threshold consistent with the principal's indifference at `tau_hat`,
    /// clamped to the admissible range.
    fn principal_threshold(&self, tau_hat: f64, sigma: f64) -> f64 {
        let density = self.noise.pdf(tau_hat);
        let residual =
            |th: f64| density * self.env.payoff_below(th) + sigma * self.env.weighted_payoff_above(th);
        if residual(self.dagger) >= 0.0 {
            return self.dagger;
        }
        if residual(self.tilde) <= 0.0 {
            return self.tilde;
        }
        bisect(residual, self.dagger, self.tilde, 0.0).unwrap_or(self.tilde)
    }

    /// Semi-separating equilibrium at noise scale `sigma`, or `None` beyond the existence boundary.
    pub fn solve_semiseparating(&self, sigma: f64) -> Result<Option<Equilibrium>> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("noise scale {sigma}")));
        }
        let t_max = self.deterrence_standard(sigma);
        let edge = self.standard_gap(t_max, sigma);
        if edge > EXISTENCE_SLACK {
            return Ok(None);
        }
        let tau_hat = if edge <= 0.0 {
            bisect(|t| self.standard_gap(t, sigma), 0.0, t_max, self.tol.solver).ok_or_else(|| {
                Error::SolverInconsistency(format!("standard bracket lost at sigma {sigma}"))
            })?
        } else {
            t_max
        };
        let theta_hat = self.principal_threshold(tau_hat, sigma);
        Ok(Some(Equilibrium {
            sigma,
            rho: 1.0 / sigma,
            tau: ExtReal::Finite(sigma * tau_hat),
            tau_hat: ExtReal::Finite(tau_hat),
            theta_hat,
            kind: EquilibriumKind::SemiSeparating,
        }))
    }

    pub fn pooling(&self, sigma: f64) -> Equilibrium {
        Equilibrium {
            sigma,
            rho: 1.0 / sigma,
            tau: ExtReal::PosInf,
            tau_hat: ExtReal::PosInf,
            theta_hat: self.env.theta_high(),
            kind: EquilibriumKind::Pooling,
        }
    }

    /// Semi-separating equilibrium when it exists, pooling otherwise.
    pub fn solve(&self, sigma: f64) -> Result<Equilibrium> {
        Ok(self
            .solve_semiseparating(sigma)?
            .unwrap_or_else(|| self.pooling(sigma)))
    }

    /// Equilibrium effort of type `theta`.
    pub fn effort(&self, eq: &Equilibrium, theta: f64) -> f64 {
        match eq.tau {
            ExtReal::PosInf => 0.0,
            ExtReal::Finite(tau) if theta >= eq.theta_hat => {
                self.optimal_positive_effort(theta, tau, eq.sigma)
            }
            ExtReal::Finite(_) => 0.0,
        }
    }

    /// Agent indifference residual at the equilibrium threshold.
    pub fn indifference_residual(&self, eq: &Equilibrium) -> Option<f64> {
        eq.tau_hat
            .finite()
            .map(|t| self.indifference(eq.theta_hat, t, eq.sigma))
    }

    /// `f(tau_hat) int_low^theta v g + sigma int_theta^high v g / t`.
    pub fn principal_residual(&self, eq: &Equilibrium) -> Option<f64> {
        eq.tau_hat.finite().map(|t| {
            self.noise.pdf(t) * self.env.payoff_below(eq.theta_hat)
                + eq.sigma * self.env.weighted_payoff_above(eq.theta_hat)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(noise: NoiseModel) -> Model {
        Model::new(Environment::uniform_affine(5.0, 15.0, 11.0).unwrap(), noise).unwrap()
    }

    // frozen from an independent scipy brentq on the closed-form condition
    const SIGMA_TILDE_NORMAL: f64 = 3.357_603_335_778_64;
    const SIGMA_TILDE_LAPLACE: f64 = 3.139_202_659_984_530_6;

    #[test]
    fn effort_at_saturated_density_is_the_standard() {
        let m = model(NoiseModel::normal());
        assert_eq!(m.optimal_positive_effort(5.0, 1.3, 2.5), 1.3);
        assert_eq!(m.optimal_positive_effort(5.0, -1.3, 2.5), 0.0);
    }

    #[test]
    fn laplace_interior_effort() {
        let m = model(NoiseModel::laplace());
        let e = m.optimal_positive_effort(4.0, 2.0, 1.0);
        assert!((e - (2.0 + 2f64.ln())).abs() < 1e-15);
        assert!((e - 2.69315).abs() < 1e-5);
    }

    #[test]
    fn interior_effort_satisfies_foc() {
        for noise in [NoiseModel::normal(), NoiseModel::laplace()] {
            let m = model(noise);
            for (theta, tau, sigma) in [(6.0, 1.0, 0.5), (12.0, 3.0, 0.1), (14.0, 0.2, 1.5)] {
                let e = m.optimal_positive_effort(theta, tau, sigma);
                let foc = m.noise().pdf((e - tau) / sigma) / sigma;
                assert!((foc - 1.0 / theta).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn threshold_corners() {
        let m = model(NoiseModel::laplace());
        assert_eq!(m.agent_threshold(ExtReal::PosInf, 0.5), 15.0);
        assert_eq!(m.agent_threshold(ExtReal::Finite(0.0), 0.5), 5.0);
        let t = m.agent_threshold(ExtReal::Finite(-1.0), 2.0);
        assert!((t - 4.0 * 1f64.exp()).abs() < 1e-12);
        assert!((t - 10.873).abs() < 1e-3);
    }

    #[test]
    fn threshold_is_non_decreasing() {
        let m = model(NoiseModel::normal());
        let ts: Vec<f64> = (0..200)
            .map(|i| m.agent_threshold(ExtReal::Finite(i as f64 * 0.05), 0.7))
            .collect();
        assert!(ts.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn principal_standard_examples() {
        let m = model(NoiseModel::laplace());
        assert_eq!(m.principal_standard(m.theta_dagger(), 0.3).unwrap(), ExtReal::PosInf);
        let r = m.env().ratio(11.0).unwrap();
        let t = m.principal_standard(11.0, 0.1).unwrap().finite().unwrap();
        assert!((t + (2.0 * 0.1 * -r).ln()).abs() < 1e-14);
        assert!((t - 5.0303).abs() < 1e-4);
        assert!(matches!(
            m.principal_standard(7.0, 0.1),
            Err(Error::UndefinedStandard { .. })
        ));
        assert!(matches!(
            m.principal_standard(11.0, 100.0),
            Err(Error::NoiseTooLarge { .. })
        ));
    }

    #[test]
    fn principal_standard_decreasing_below_tilde() {
        let m = model(NoiseModel::normal());
        let d = m.theta_dagger();
        let ts: Vec<f64> = (1..100)
            .map(|i| {
                let th = d + (11.0 - d) * i as f64 / 100.0;
                m.principal_standard(th, 0.5).unwrap().finite().unwrap()
            })
            .collect();
        assert!(ts.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn sigma_tilde_matches_frozen_values() {
        let st = model(NoiseModel::normal()).sigma_tilde().unwrap();
        assert!((st.sigma - SIGMA_TILDE_NORMAL).abs() < 1e-9);
        assert_eq!(st.extra_roots, 0);
        let m = model(NoiseModel::laplace());
        let st = m.sigma_tilde().unwrap();
        assert!((st.sigma - SIGMA_TILDE_LAPLACE).abs() < 1e-9);
        assert!(m.threshold_condition(st.sigma).unwrap().abs() < 1e-9);
    }

    #[test]
    fn existence_boundary() {
        for noise in [NoiseModel::normal(), NoiseModel::laplace()] {
            let m = model(noise);
            let st = m.sigma_tilde().unwrap().sigma;
            let eq = m.solve_semiseparating(st * (1.0 - 1e-9)).unwrap().unwrap();
            assert!((eq.theta_hat - 11.0).abs() < 1e-3, "{}", eq.theta_hat);
            assert!(m.solve_semiseparating(st * (1.0 + 1e-6)).unwrap().is_none());
            assert!(m.solve(st * 1.5).unwrap().is_pooling());
        }
    }

    #[test]
    fn solved_equilibrium_is_a_fixed_point() {
        let m = model(NoiseModel::normal());
        for sigma in [3.0, 1.5, 1.0, 0.2] {
            let eq = m.solve_semiseparating(sigma).unwrap().unwrap();
            assert!(eq.theta_hat >= m.theta_dagger() && eq.theta_hat <= 11.0);
            assert!(eq.tau.finite().unwrap() > 0.0);
            assert!(m.indifference_residual(&eq).unwrap().abs() < 1e-10);
            assert!(m.principal_residual(&eq).unwrap().abs() < 1e-8);
            // the standard diverges once the threshold rounds to its lower limit
            if eq.theta_hat > m.theta_dagger() {
                let p = m.fixed_point_residual(eq.theta_hat, sigma).unwrap();
                assert!(p.abs() < 1e-8, "sigma {sigma}: {p}");
            }
        }
    }

    #[test]
    fn vanishing_noise_limit() {
        let m = model(NoiseModel::normal());
        let d = m.theta_dagger();
        let mut prev = f64::INFINITY;
        for sigma in [0.2, 0.1, 0.05, 0.02] {
            let eq = m.solve_semiseparating(sigma).unwrap().unwrap();
            let gap = (eq.theta_hat - d).abs().max((eq.tau.finite().unwrap() - d).abs());
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 0.1);
    }

    #[test]
    fn schedule_shape() {
        let m = model(NoiseModel::normal());
        let eq = m.solve_semiseparating(0.5).unwrap().unwrap();
        assert_eq!(m.effort(&eq, eq.theta_hat - 1e-9), 0.0);
        let tau = eq.tau.finite().unwrap();
        assert!(m.effort(&eq, 15.0) > tau);
        let es: Vec<f64> = (0..100).map(|i| m.effort(&eq, 5.0 + 0.1 * i as f64)).collect();
        assert!(es.windows(2).all(|w| w[1] >= w[0]));
        let pool = m.pooling(10.0);
        assert_eq!(m.effort(&pool, 14.0), 0.0);
    }
}
