//! Convex effort costs, binary effort, and the linear-reputation contrast.

use std::fmt;
use std::sync::Arc;

use crate::equilibrium::Model;
use crate::error::{Error, Result};
use crate::numeric::{bisect, bisect_predicate, composite_gk15, linspace};

const EFFORT_GRID: usize = 2048;
const TYPE_SCAN: usize = 129;
const TAU_SCAN: usize = 32;
const PANELS: usize = 8;
const SCHEDULE_POINTS: usize = 65;
const BINARY_TAU_SCAN: usize = 256;

type CostFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Effort cost `C(e, θ)` together with its marginal `C_e(e, θ)`.
#[derive(Clone)]
pub struct ConvexCost {
    name: String,
    cost: CostFn,
    marginal: CostFn,
}

impl fmt::Debug for ConvexCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexCost").field("name", &self.name).finish()
    }
}

impl ConvexCost {
    /// `C(e, θ) = e² / (2θ)`.
    pub fn quadratic() -> Self {
        ConvexCost::new("quadratic", |e, t| e * e / (2.0 * t), |e, t| e / t)
    }

    pub fn new<C, M>(name: impl Into<String>, cost: C, marginal: M) -> Self
    where
        C: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        M: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        ConvexCost {
            name: name.into(),
            cost: Arc::new(cost),
            marginal: Arc::new(marginal),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cost(&self, effort: f64, theta: f64) -> f64 {
        (self.cost)(effort, theta)
    }

    pub fn marginal(&self, effort: f64, theta: f64) -> f64 {
        (self.marginal)(effort, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub effort: f64,
    pub branch: Branch,
    pub payoff: f64,
    /// Every local maximizer found, in increasing order; includes the corner when it is one.
    pub local_maxima: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralCostEquilibrium {
    pub rho: f64,
    pub tau: f64,
    /// Lowest type choosing the high branch.
    pub theta_hat: f64,
    pub value: f64,
    pub residual: f64,
    /// `(θ, e_L(θ), e_H(θ))` on an even type grid.
    pub schedule: Vec<(f64, f64, f64)>,
    /// Other standards where the residual changes sign, as `(τ, V)`.
    pub other_roots: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryEffortEquilibrium {
    pub rho: f64,
    pub ebar: f64,
    pub tau: f64,
    pub delta: f64,
    pub theta_hat: f64,
    pub value: f64,
    /// Principal indifference residual, scaled by the larger of its two density terms.
    pub residual: f64,
    pub other_roots: Vec<(f64, f64)>,
}

impl Model {
    fn convex_payoff(&self, e: f64, theta: f64, tau: f64, rho: f64, cost: &ConvexCost) -> f64 {
        self.noise().cdf(rho * (e - tau)) - cost.cost(e, theta)
    }

    pub fn convex_cost_best_response(
        &self,
        theta: f64,
        tau: f64,
        rho: f64,
        cost: &ConvexCost,
    ) -> BestResponse {
        let noise = self.noise();
        let foc = |e: f64| rho * noise.pdf(rho * (tau - e)) - cost.marginal(e, theta);
        let mut span = (tau + 6.0 / rho).max(1e-12);
        while foc(span) > 0.0 && span < 1e12 {
            span *= 2.0;
        }
        let grid = linspace(0.0, span, EFFORT_GRID);
        let vals: Vec<f64> = grid.iter().map(|&e| foc(e)).collect();

        let mut maxima = Vec::new();
        if vals[0] <= 0.0 {
            maxima.push(0.0);
        }
        for i in 0..EFFORT_GRID - 1 {
            if vals[i] > 0.0 && vals[i + 1] <= 0.0 {
                let e = bisect(foc, grid[i], grid[i + 1], 0.0).unwrap_or(grid[i + 1]);
                maxima.push(e);
            }
        }

        let mut best = (f64::NEG_INFINITY, 0.0);
        for &e in &maxima {
            let u = self.convex_payoff(e, theta, tau, rho, cost);
            if u >= best.0 {
                best = (u, e);
            }
        }
        let (payoff, effort) = best;
        let top = *maxima.last().expect("a maximum always exists");
        BestResponse {
            effort,
            branch: if (maxima.len() > 1 && effort == top) || (maxima.len() == 1 && effort >= tau) {
                Branch::High
            } else {
                Branch::Low
            },
            payoff,
            local_maxima: maxima,
        }
    }

    /// Type where the agent's choice switches to the high branch.
    pub fn convex_cost_threshold(&self, tau: f64, rho: f64, cost: &ConvexCost) -> f64 {
        let env = self.env();
        let high = |t: f64| self.convex_cost_best_response(t, tau, rho, cost).branch == Branch::High;
        let types = linspace(env.theta_low(), env.theta_high(), TYPE_SCAN);
        match types.iter().position(|&t| high(t)) {
            None => env.theta_high(),
            Some(0) => env.theta_low(),
            Some(i) => bisect_predicate(high, types[i - 1], types[i], 0.0),
        }
    }

    fn convex_integral<F: Fn(f64, f64) -> f64>(&self, tau: f64, rho: f64, cost: &ConvexCost, h: F) -> f64 {
        let env = self.env();
        let th = self.convex_cost_threshold(tau, rho, cost);
        let integrand = |t: f64| {
            let e = self.convex_cost_best_response(t, tau, rho, cost).effort;
            env.payoff(t) * env.density(t) * h(t, e)
        };
        composite_gk15(&integrand, env.theta_low(), th, PANELS)
            + composite_gk15(&integrand, th, env.theta_high(), PANELS)
    }

    /// `∫ v g f_ρ(τ − e*)`, zero at an equilibrium standard.
    pub fn convex_cost_residual(&self, tau: f64, rho: f64, cost: &ConvexCost) -> f64 {
        let noise = self.noise();
        self.convex_integral(tau, rho, cost, |_, e| rho * noise.pdf(rho * (tau - e)))
    }

    pub fn convex_cost_value(&self, tau: f64, rho: f64, cost: &ConvexCost) -> f64 {
        let noise = self.noise();
        self.convex_integral(tau, rho, cost, |_, e| noise.cdf(rho * (e - tau)))
    }

    /// Effort above which even the top type prefers a sure rejection.
    fn max_worthwhile_effort(&self, cost: &ConvexCost) -> f64 {
        let top = self.env().theta_high();
        let too_costly = |e: f64| cost.cost(e, top) > 1.0;
        let mut b = 1.0;
        while !too_costly(b) && b < 1e12 {
            b *= 2.0;
        }
        bisect_predicate(too_costly, 0.0, b, 0.0)
    }

    pub fn solve_convex_cost_equilibrium(
        &self,
        rho: f64,
        cost: &ConvexCost,
    ) -> Result<Option<GeneralCostEquilibrium>> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Domain(format!("precision must be positive, got {rho}")));
        }
        let top = self.max_worthwhile_effort(cost);
        let taus = linspace(top / TAU_SCAN as f64, top, TAU_SCAN);
        let res: Vec<f64> = taus.iter().map(|&t| self.convex_cost_residual(t, rho, cost)).collect();

        let mut roots = Vec::new();
        for i in 0..TAU_SCAN - 1 {
            if (res[i] > 0.0) != (res[i + 1] > 0.0) {
                if let Some(t) = bisect(|t| self.convex_cost_residual(t, rho, cost), taus[i], taus[i + 1], 1e-12) {
                    roots.push((t, self.convex_cost_value(t, rho, cost)));
                }
            }
        }
        let Some(best) = roots
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            return Ok(None);
        };
        let (tau, value) = best;
        let env = self.env();
        let schedule = linspace(env.theta_low(), env.theta_high(), SCHEDULE_POINTS)
            .into_iter()
            .map(|t| {
                let br = self.convex_cost_best_response(t, tau, rho, cost);
                (t, br.local_maxima[0], *br.local_maxima.last().expect("non-empty"))
            })
            .collect();
        Ok(Some(GeneralCostEquilibrium {
            rho,
            tau,
            theta_hat: self.convex_cost_threshold(tau, rho, cost),
            value,
            residual: self.convex_cost_residual(tau, rho, cost),
            schedule,
            other_roots: roots.into_iter().filter(|r| r.0 != tau).collect(),
        }))
    }
}

/// Gain in approval probability from exerting `ebar` against standard `tau`.
pub fn binary_delta(model: &Model, tau: f64, rho: f64, ebar: f64) -> f64 {
    let noise = model.noise();
    noise.cdf(rho * tau) - noise.cdf(rho * (tau - ebar))
}

impl Model {
    /// Cutoff type for cost `c(θ) = c_kappa / θ`, clamped to the support.
    pub fn binary_threshold(&self, tau: f64, rho: f64, ebar: f64, c_kappa: f64) -> f64 {
        let env = self.env();
        let d = binary_delta(self, tau, rho, ebar);
        if d <= 0.0 {
            return env.theta_high();
        }
        (c_kappa / d).clamp(env.theta_low(), env.theta_high())
    }

    /// Returns `(residual, value)` with the residual normalized by its larger density term.
    fn binary_terms(&self, tau: f64, rho: f64, ebar: f64, c_kappa: f64) -> (f64, f64) {
        let env = self.env();
        let noise = self.noise();
        let th = self.binary_threshold(tau, rho, ebar, c_kappa);
        let below = env.payoff_below(th);
        let above = env.mean_payoff() - below;
        let a = noise.ln_pdf(rho * tau);
        let b = noise.ln_pdf(rho * (tau - ebar));
        let m = a.max(b);
        let residual = below * (a - m).exp() + above * (b - m).exp();
        let value = below * noise.cdf(-rho * tau) + above * noise.cdf(rho * (ebar - tau));
        (residual, value)
    }

    pub fn binary_effort_equilibrium(
        &self,
        rho: f64,
        ebar: f64,
        c_kappa: f64,
    ) -> Result<Option<BinaryEffortEquilibrium>> {
        if !(rho > 0.0 && ebar > 0.0 && c_kappa > 0.0) {
            return Err(Error::Domain(format!(
                "binary effort needs positive rho, ebar, c (got {rho}, {ebar}, {c_kappa})"
            )));
        }
        let res = |t: f64| self.binary_terms(t, rho, ebar, c_kappa).0;
        let grid = linspace(0.0, ebar, BINARY_TAU_SCAN + 1);
        let mut roots = Vec::new();
        for w in grid.windows(2) {
            let (a, b) = (w[0].max(ebar * 1e-12), w[1].min(ebar * (1.0 - 1e-12)));
            if (res(a) > 0.0) != (res(b) > 0.0) {
                if let Some(t) = bisect(res, a, b, 0.0) {
                    roots.push((t, self.binary_terms(t, rho, ebar, c_kappa).1));
                }
            }
        }
        let Some((tau, value)) = roots.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)) else {
            return Ok(None);
        };
        Ok(Some(BinaryEffortEquilibrium {
            rho,
            ebar,
            tau,
            delta: binary_delta(self, tau, rho, ebar),
            theta_hat: self.binary_threshold(tau, rho, ebar, c_kappa),
            value,
            residual: res(tau),
            other_roots: roots.into_iter().filter(|r| r.0 != tau).collect(),
        }))
    }
}

/// Signal loading `k` and posterior-mean variance `q` of the linear reputation game.
pub fn linear_reputation(rho: f64, _mu: f64, omega: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0 && omega > 0.0) {
        return Err(Error::Domain(format!(
            "linear reputation needs positive rho and omega (got {rho}, {omega})"
        )));
    }
    let w2 = omega * omega;
    let denom = w2 + 1.0 / (rho * rho);
    let k = w2 / denom;
    Ok((k, k * w2))
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
    fn low_precision_has_one_interior_optimum() {
        let m = model();
        let q = ConvexCost::quadratic();
        for t in [5.0, 10.0, 15.0] {
            let br = m.convex_cost_best_response(t, 2.0, 0.2, &q);
            assert_eq!(br.local_maxima.len(), 1, "{t}: {:?}", br.local_maxima);
            assert!(br.effort > 0.0);
        }
    }

    #[test]
    fn high_precision_switches_between_two_optima() {
        let m = model();
        let q = ConvexCost::quadratic();
        let tau = 3.8;
        let rho = 20.0;
        let low = m.convex_cost_best_response(5.0, tau, rho, &q);
        let high = m.convex_cost_best_response(15.0, tau, rho, &q);
        assert_eq!(low.branch, Branch::Low);
        assert_eq!(high.branch, Branch::High);
        let th = m.convex_cost_threshold(tau, rho, &q);
        assert!(th > 5.0 && th < 15.0);
        let at = m.convex_cost_best_response(th, tau, rho, &q);
        assert_eq!(at.local_maxima.len(), 2);
        let u: Vec<f64> = at
            .local_maxima
            .iter()
            .map(|&e| m.noise().cdf(rho * (e - tau)) - q.cost(e, th))
            .collect();
        assert!((u[0] - u[1]).abs() < 1e-9, "{u:?}");
    }

    #[test]
    fn best_response_beats_the_effort_grid() {
        let m = model();
        let q = ConvexCost::quadratic();
        for (t, tau, rho) in [(7.0, 3.0, 5.0), (12.0, 3.5, 1.0), (9.0, 4.0, 30.0)] {
            let br = m.convex_cost_best_response(t, tau, rho, &q);
            for e in linspace(0.0, 2.0 * tau + 6.0 / rho, 4096) {
                let u = m.noise().cdf(rho * (e - tau)) - q.cost(e, t);
                assert!(br.payoff >= u - 1e-9, "{t} {tau} {rho} at {e}");
            }
        }
    }

    #[test]
    fn convex_equilibrium_is_indifferent() {
        let m = model();
        let q = ConvexCost::quadratic();
        let eq = m.solve_convex_cost_equilibrium(2.0, &q).unwrap().unwrap();
        assert!(eq.residual.abs() < 1e-7, "{}", eq.residual);
        for &(t, lo, hi) in &eq.schedule {
            if t >= eq.theta_hat {
                assert!(hi >= lo);
            }
        }
    }

    #[test]
    fn no_convex_equilibrium_at_very_low_precision() {
        let m = model();
        assert!(m
            .solve_convex_cost_equilibrium(0.05, &ConvexCost::quadratic())
            .unwrap()
            .is_none());
    }

    #[test]
    fn binary_delta_symmetry() {
        let m = model();
        for rho in [0.5, 2.0, 7.0] {
            let d = binary_delta(&m, 0.5, rho, 1.0);
            assert!((d - (2.0 * m.noise().cdf(rho * 0.5) - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn binary_delta_increases_with_precision() {
        let m = model();
        for tau in [0.1, 0.5, 0.9] {
            let mut prev = 0.0;
            for rho in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
                let d = binary_delta(&m, tau, rho, 1.0);
                assert!(d > prev && (0.0..=1.0).contains(&d));
                prev = d;
            }
        }
    }

    #[test]
    fn binary_threshold_approaches_cost_inverse_of_one() {
        let m = model();
        let eq = m.binary_effort_equilibrium(200.0, 1.0, 8.0).unwrap().unwrap();
        assert!(eq.tau > 0.0 && eq.tau < 1.0);
        assert!((eq.theta_hat - 8.0).abs() < 0.01, "{}", eq.theta_hat);
        assert!(eq.residual.abs() < 1e-9);
    }

    #[test]
    fn reputation_closed_forms() {
        let (k, q) = linear_reputation(0.5, 0.0, 2.0).unwrap();
        assert!((k - 0.5).abs() < 1e-15 && (q - 2.0).abs() < 1e-15);
        let (k, q) = linear_reputation(1e8, 0.0, 1.5).unwrap();
        assert!((k - 1.0).abs() < 1e-12 && (q - 2.25).abs() < 1e-12);
        assert!(linear_reputation(0.0, 0.0, 1.0).is_err());
    }
}
