//! The principal's problem when the standard is fixed before effort is chosen.

use crate::equilibrium::Model;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::numeric::{bisect_predicate, golden_max, linspace, quad_split};

const SCAN_POINTS: usize = 65;
const REFINE_TOL: f64 = 1e-8;
const NEAR_MAX: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CommitmentSolution {
    pub sigma: f64,
    /// Committed standard in noise units.
    pub tau_hat: f64,
    /// Participation threshold induced by the committed standard.
    pub theta_hat: f64,
    pub value: f64,
    /// Derivative of the committed value at the optimum, when the threshold is interior.
    pub foc_residual: Option<f64>,
    /// Other scan maxima within `1e-6` of the best, as `(tau_hat, value)`.
    pub near_maxima: Vec<(f64, f64)>,
}

impl Model {
    /// Principal payoff when agents best respond to a committed standard `tau_hat`.
    pub fn committed_value(&self, tau_hat: ExtReal, sigma: f64) -> Result<f64> {
        let t = match tau_hat {
            ExtReal::PosInf => return Ok(0.0),
            ExtReal::Finite(t) => t,
        };
        let env = self.env();
        let th = self.agent_threshold(tau_hat, sigma);
        let tail = quad_split(
            |x| env.payoff(x) * env.density(x) * self.noise().cdf(self.overshoot(x, sigma)),
            th,
            env.theta_high(),
            &[self.kink(sigma), self.theta_tilde()],
            self.tolerances().quad,
        )?;
        Ok(env.payoff_below(th) * self.noise().cdf(-t) + tail)
    }

    /// Smallest standard that deters every type.
    pub fn full_deterrence_standard(&self, sigma: f64) -> f64 {
        let hi = self.env().theta_high();
        let deters = |t: f64| self.agent_threshold(ExtReal::Finite(t), sigma) >= hi;
        let mut b = 1.0;
        while !deters(b) {
            b *= 2.0;
        }
        bisect_predicate(deters, 0.0, b, 0.0)
    }

    /// Slope of the induced threshold in the standard.
    pub fn threshold_slope(&self, tau_hat: f64, theta_hat: f64, sigma: f64) -> f64 {
        let z = self.overshoot(theta_hat, sigma);
        (sigma / theta_hat - self.noise().pdf(-tau_hat)) * theta_hat * theta_hat
            / ((tau_hat + z) * sigma)
    }

    /// Derivative of the committed value in `tau_hat`.
    pub fn committed_value_slope(&self, tau_hat: f64, sigma: f64) -> f64 {
        let env = self.env();
        let noise = self.noise();
        let th = self.agent_threshold(ExtReal::Finite(tau_hat), sigma);
        let direct = -env.payoff_below(th) * noise.pdf(-tau_hat);
        if th <= env.theta_low() || th >= env.theta_high() {
            return direct;
        }
        let z = self.overshoot(th, sigma);
        let jump = env.payoff(th) * env.density(th) * (noise.cdf(-tau_hat) - noise.cdf(z));
        direct + jump * self.threshold_slope(tau_hat, th, sigma)
    }

    /// Bisects the analytic slope around a golden-section optimum, keeping the
    /// side where the slope is negative.
    fn polish_commitment(&self, (x, fx): (f64, f64), sigma: f64) -> Result<(f64, f64)> {
        let slope = |t: f64| self.committed_value_slope(t, sigma);
        let mut delta = 1e-7 * x.max(1.0);
        for _ in 0..24 {
            let (a, b) = ((x - delta).max(0.0), x + delta);
            if slope(a) > 0.0 && slope(b) < 0.0 {
                let t = bisect_predicate(|t| slope(t) < 0.0, a, b, 0.0);
                let v = self.committed_value(ExtReal::Finite(t), sigma)?;
                if v >= fx - 1e-12 {
                    return Ok((t, v));
                }
                break;
            }
            delta *= 2.0;
        }
        Ok((x, fx))
    }

    pub fn solve_commitment(&self, sigma: f64) -> Result<CommitmentSolution> {
        let hi = self.full_deterrence_standard(sigma);
        let grid = linspace(0.0, hi, SCAN_POINTS);
        let vals = grid
            .iter()
            .map(|&t| self.committed_value(ExtReal::Finite(t), sigma))
            .collect::<Result<Vec<f64>>>()?;
        let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(best > 0.0) {
            return Err(Error::DegenerateCommitment { sigma, best });
        }

        let mut candidates = Vec::new();
        for i in 0..SCAN_POINTS {
            let left = if i == 0 { f64::NEG_INFINITY } else { vals[i - 1] };
            let right = if i + 1 == SCAN_POINTS { f64::NEG_INFINITY } else { vals[i + 1] };
            if vals[i] >= left && vals[i] >= right && vals[i] > 0.0 {
                let a = grid[i.saturating_sub(1)];
                let b = grid[(i + 1).min(SCAN_POINTS - 1)];
                let mut err = None;
                let (x, fx) = golden_max(
                    |t| {
                        self.committed_value(ExtReal::Finite(t), sigma)
                            .unwrap_or_else(|e| {
                                err.get_or_insert(e);
                                f64::NEG_INFINITY
                            })
                    },
                    a,
                    b,
                    REFINE_TOL,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                candidates.push((x, fx));
            }
        }
        candidates.sort_by(|p, q| q.1.total_cmp(&p.1));
        let (tau_hat, value) = self.polish_commitment(candidates[0], sigma)?;
        let near_maxima = candidates[1..]
            .iter()
            .copied()
            .filter(|&(t, v)| value - v <= NEAR_MAX && (t - tau_hat).abs() > REFINE_TOL * 10.0)
            .collect();
        let theta_hat = self.agent_threshold(ExtReal::Finite(tau_hat), sigma);
        let env = self.env();
        let interior = theta_hat > env.theta_low() && theta_hat < env.theta_high();
        Ok(CommitmentSolution {
            sigma,
            tau_hat,
            theta_hat,
            value,
            foc_residual: interior.then(|| self.committed_value_slope(tau_hat, sigma)),
            near_maxima,
        })
    }
}
