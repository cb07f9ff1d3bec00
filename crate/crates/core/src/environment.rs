//! Type distribution and principal payoff.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{bisect, bisect_predicate, gk15, quad};

const TABLE_CELLS: usize = 4096;
const DAGGER_OFFSET: f64 = 1e-12;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Cumulative integrals on a uniform grid, with GK15 for partial cells.
struct Tables {
    g: ScalarFn,
    v: ScalarFn,
    step: f64,
    cum_g: Vec<f64>,
    cum_vg: Vec<f64>,
    cum_vg_over: Vec<f64>,
}

#[derive(Clone)]
enum Shape {
    UniformAffine { kappa: f64 },
    General(Arc<Tables>),
}

#[derive(Clone)]
pub struct Environment {
    low: f64,
    high: f64,
    shape: Shape,
    tilde: Option<f64>,
    dagger: Option<f64>,
}

impl fmt::Debug for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape {
            Shape::UniformAffine { kappa } => write!(
                f,
                "Environment(uniform [{}, {}], v = theta - {kappa})",
                self.low, self.high
            ),
            Shape::General(_) => write!(f, "Environment(general [{}, {}])", self.low, self.high),
        }
    }
}

fn check_bounds(low: f64, high: f64) -> Result<()> {
    if !(low.is_finite() && high.is_finite()) {
        return Err(Error::Domain(format!("type bounds [{low}, {high}] not finite")));
    }
    if !(low > 0.0) {
        return Err(Error::Domain(format!("lowest type {low} must be positive")));
    }
    if !(low < high) {
        return Err(Error::Domain(format!("type bounds [{low}, {high}] are not increasing")));
    }
    Ok(())
}

impl Environment {
    /// Uniform types on `[low, high]` with payoff `theta - kappa`.
    pub fn uniform_affine(low: f64, high: f64, kappa: f64) -> Result<Self> {
        check_bounds(low, high)?;
        if !kappa.is_finite() {
            return Err(Error::Domain(format!("kappa {kappa} not finite")));
        }
        Ok(Self::finish(low, high, Shape::UniformAffine { kappa }))
    }

    /// Arbitrary density `g` and payoff `v` on `[low, high]`.
    pub fn general<G, V>(low: f64, high: f64, g: G, v: V) -> Result<Self>
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        V: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_bounds(low, high)?;
        let step = (high - low) / TABLE_CELLS as f64;
        let mut cum_g = Vec::with_capacity(TABLE_CELLS + 1);
        let mut cum_vg = Vec::with_capacity(TABLE_CELLS + 1);
        let mut cum_vg_over = Vec::with_capacity(TABLE_CELLS + 1);
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        cum_g.push(a);
        cum_vg.push(b);
        cum_vg_over.push(c);
        for i in 0..TABLE_CELLS {
            let x0 = low + step * i as f64;
            let x1 = if i + 1 == TABLE_CELLS { high } else { x0 + step };
            a += gk15(&|t| g(t), x0, x1).0;
            b += gk15(&|t| v(t) * g(t), x0, x1).0;
            c += gk15(&|t| v(t) * g(t) / t, x0, x1).0;
            cum_g.push(a);
            cum_vg.push(b);
            cum_vg_over.push(c);
        }
        let tables = Tables {
            g: Arc::new(g),
            v: Arc::new(v),
            step,
            cum_g,
            cum_vg,
            cum_vg_over,
        };
        Ok(Self::finish(low, high, Shape::General(Arc::new(tables))))
    }

    fn finish(low: f64, high: f64, shape: Shape) -> Self {
        let mut env = Environment {
            low,
            high,
            shape,
            tilde: None,
            dagger: None,
        };
        env.tilde = env.find_tilde();
        if let Some(t) = env.tilde {
            env.dagger = env.find_dagger(t);
        }
        env
    }

    fn find_tilde(&self) -> Option<f64> {
        if self.payoff(self.low) >= 0.0 {
            return Some(self.low);
        }
        if self.payoff(self.high) < 0.0 {
            return None;
        }
        Some(bisect_predicate(|t| self.payoff(t) >= 0.0, self.low, self.high, 0.0))
    }

    fn find_dagger(&self, tilde: f64) -> Option<f64> {
        if self.weighted_payoff_above(self.low) >= 0.0 {
            return None;
        }
        let a = self.low + DAGGER_OFFSET;
        bisect(|t| self.weighted_payoff_above(t), a, tilde, 0.0)
    }

    pub fn theta_low(&self) -> f64 {
        self.low
    }

    pub fn theta_high(&self) -> f64 {
        self.high
    }

    pub fn kappa(&self) -> Option<f64> {
        match self.shape {
            Shape::UniformAffine { kappa } => Some(kappa),
            Shape::General(_) => None,
        }
    }

    pub fn density(&self, theta: f64) -> f64 {
        if theta < self.low || theta > self.high {
            return 0.0;
        }
        match &self.shape {
            Shape::UniformAffine { .. } => 1.0 / (self.high - self.low),
            Shape::General(t) => (t.g)(theta),
        }
    }

    pub fn payoff(&self, theta: f64) -> f64 {
        match &self.shape {
            Shape::UniformAffine { kappa } => theta - kappa,
            Shape::General(t) => (t.v)(theta),
        }
    }

    /// Type cdf `G`.
    pub fn cdf(&self, theta: f64) -> f64 {
        let x = theta.clamp(self.low, self.high);
        match &self.shape {
            Shape::UniformAffine { .. } => (x - self.low) / (self.high - self.low),
            Shape::General(t) => self.cumulative(t, &t.cum_g, x, |s| (t.g)(s)),
        }
    }

    /// Inverse type cdf on `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.shape {
            Shape::UniformAffine { .. } => self.low + u * (self.high - self.low),
            Shape::General(_) => {
                bisect(|t| self.cdf(t) - u, self.low, self.high, 1e-14).unwrap_or(if u <= 0.0 {
                    self.low
                } else {
                    self.high
                })
            }
        }
    }

    fn cumulative(&self, t: &Tables, cum: &[f64], x: f64, f: impl Fn(f64) -> f64) -> f64 {
        let i = (((x - self.low) / t.step) as usize).min(TABLE_CELLS - 1);
        let x0 = self.low + t.step * i as f64;
        cum[i] + if x > x0 { gk15(&f, x0, x).0 } else { 0.0 }
    }

    /// `int_low^theta v g`.
    pub fn payoff_below(&self, theta: f64) -> f64 {
        let x = theta.clamp(self.low, self.high);
        match &self.shape {
            Shape::UniformAffine { kappa } => {
                (x - self.low) * (x + self.low - 2.0 * kappa) / (2.0 * (self.high - self.low))
            }
            Shape::General(t) => self.cumulative(t, &t.cum_vg, x, |s| (t.v)(s) * (t.g)(s)),
        }
    }

    /// `int_a^b v g`.
    pub fn payoff_between(&self, a: f64, b: f64) -> f64 {
        self.payoff_below(b) - self.payoff_below(a)
    }

    /// `int_theta^high v g / t`.
    pub fn weighted_payoff_above(&self, theta: f64) -> f64 {
        let x = theta.clamp(self.low, self.high);
        match &self.shape {
            Shape::UniformAffine { kappa } => {
                ((self.high - x) - kappa * (self.high / x).ln()) / (self.high - self.low)
            }
            Shape::General(t) => {
                let total = t.cum_vg_over[TABLE_CELLS];
                total - self.cumulative(t, &t.cum_vg_over, x, |s| (t.v)(s) * (t.g)(s) / s)
            }
        }
    }

    pub fn mean_payoff(&self) -> f64 {
        self.payoff_below(self.high)
    }

    /// Lowest type with nonnegative payoff.
    pub fn theta_tilde(&self) -> Result<f64> {
        self.tilde.ok_or_else(|| {
            Error::InfeasibleEnvironment(format!(
                "payoff negative on all of [{}, {}]",
                self.low, self.high
            ))
        })
    }

    /// Lowest participation threshold the principal can sustain.
    pub fn theta_dagger(&self) -> Result<f64> {
        self.theta_tilde()?;
        self.dagger.ok_or_else(|| {
            Error::OutOfScope(format!(
                "weighted payoff integral from the lowest type is {} >= 0",
                self.weighted_payoff_above(self.low)
            ))
        })
    }

    /// `int_{theta}^{high} v g / t` over `int_{low}^{theta} v g`.
    pub fn ratio(&self, theta_hat: f64) -> Result<f64> {
        if !(theta_hat > self.low && theta_hat <= self.high) {
            if theta_hat == self.low {
                return Err(Error::ZeroDenominator(format!(
                    "ratio at the lowest type {theta_hat}"
                )));
            }
            return Err(Error::Domain(format!("ratio at {theta_hat} outside the type range")));
        }
        let den = self.payoff_below(theta_hat);
        if den == 0.0 {
            return Err(Error::ZeroDenominator(format!("ratio at {theta_hat}")));
        }
        Ok(self.weighted_payoff_above(theta_hat) / den)
    }

    pub fn validate(&self) -> EnvironmentReport {
        let n = 1001;
        let grid: Vec<f64> = (0..n)
            .map(|i| self.low + (self.high - self.low) * i as f64 / (n - 1) as f64)
            .collect();
        let density_positive = grid.iter().all(|&t| self.density(t) > 0.0);
        let payoff_monotone = grid.windows(2).all(|w| self.payoff(w[1]) >= self.payoff(w[0]));
        let mass = quad(|t| self.density(t), self.low, self.high, 1e-12).unwrap_or(f64::NAN);
        let mean = self.mean_payoff();
        let (good_mass, good_mean) = match self.tilde {
            Some(t) => {
                let m = 1.0 - self.cdf(t);
                let p = self.payoff_between(t, self.high);
                (m, if m > 0.0 { p / m } else { f64::NAN })
            }
            None => (0.0, f64::NAN),
        };
        EnvironmentReport {
            mean_payoff: mean,
            good_mean_payoff: good_mean,
            good_mass,
            mass,
            density_positive,
            payoff_monotone,
            theta_tilde: self.tilde,
            theta_dagger: self.dagger,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentReport {
    pub mean_payoff: f64,
    /// Mean payoff conditional on a good type.
    pub good_mean_payoff: f64,
    pub good_mass: f64,
    pub mass: f64,
    pub density_positive: bool,
    pub payoff_monotone: bool,
    pub theta_tilde: Option<f64>,
    pub theta_dagger: Option<f64>,
}

impl EnvironmentReport {
    pub fn pessimistic(&self) -> bool {
        self.mean_payoff <= 0.0
    }

    pub fn passed(&self) -> bool {
        self.density_positive
            && self.payoff_monotone
            && (self.mass - 1.0).abs() <= 1e-8
            && self.pessimistic()
            && self.good_mean_payoff > 0.0
            && self.theta_tilde.is_some()
            && self.theta_dagger.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig() -> Environment {
        Environment::uniform_affine(5.0, 15.0, 11.0).unwrap()
    }

    #[test]
    fn theta_tilde_examples() {
        assert_eq!(fig().theta_tilde().unwrap(), 11.0);
        let all_good = Environment::uniform_affine(5.0, 15.0, 2.0).unwrap();
        assert_eq!(all_good.theta_tilde().unwrap(), 5.0);
        let sq = Environment::general(5.0, 15.0, |_| 0.1, |t| t * t - 100.0).unwrap();
        assert!((sq.theta_tilde().unwrap() - 10.0).abs() < 1e-12);
        let none = Environment::uniform_affine(5.0, 15.0, 20.0).unwrap();
        assert!(matches!(none.theta_tilde(), Err(Error::InfeasibleEnvironment(_))));
    }

    // frozen from an independent sign scan plus bisection on adaptive quadrature
    const DAGGER_K11: f64 = 7.783_463_747_528_264;
    const DAGGER_K10: f64 = 6.257_825_342_012_828;

    #[test]
    fn theta_dagger_examples() {
        let d = fig().theta_dagger().unwrap();
        assert!((d - DAGGER_K11).abs() < 1e-10);
        assert!((d - 7.790).abs() < 0.05);
        assert!(((15.0 - d) - 11.0 * (15.0 / d).ln()).abs() < 1e-13);
        let e10 = Environment::uniform_affine(5.0, 15.0, 10.0).unwrap();
        assert!((e10.theta_dagger().unwrap() - DAGGER_K10).abs() < 1e-10);
        let optimistic = Environment::uniform_affine(5.0, 15.0, 5.0).unwrap();
        assert!(matches!(optimistic.theta_dagger(), Err(Error::OutOfScope(_))));
    }

    #[test]
    fn dagger_below_tilde() {
        for k in [10.0, 11.0, 12.0, 13.0] {
            let e = Environment::uniform_affine(5.0, 15.0, k).unwrap();
            let (d, t) = (e.theta_dagger().unwrap(), e.theta_tilde().unwrap());
            assert!(d > 5.0 && d < t);
            assert!(e.weighted_payoff_above(t) > 0.0);
        }
    }

    #[test]
    fn ratio_examples() {
        let e = fig();
        let r = e.ratio(11.0).unwrap();
        assert!((e.weighted_payoff_above(11.0) - 0.05883).abs() < 1e-5);
        assert!((e.payoff_below(11.0) + 1.8).abs() < 1e-14);
        assert!((r + 0.03268).abs() < 1e-5);
        let d = e.theta_dagger().unwrap();
        assert!(e.ratio(d).unwrap().abs() < 1e-14);
        let just_above = e.ratio(d + 1e-3).unwrap();
        assert!(just_above < 0.0 && just_above > -1e-3);
        assert!(matches!(e.ratio(5.0), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn mean_and_validation() {
        let r = fig().validate();
        assert!((r.mean_payoff + 1.0).abs() < 1e-14);
        assert!((r.good_mean_payoff - 2.0).abs() < 1e-12);
        assert!(r.passed());
        let bad = Environment::uniform_affine(5.0, 15.0, 5.0).unwrap().validate();
        assert!((bad.mean_payoff - 5.0).abs() < 1e-12);
        assert!(!bad.passed());
    }

    #[test]
    fn bad_bounds_rejected() {
        assert!(Environment::uniform_affine(20.0, 10.0, 11.0).is_err());
        assert!(Environment::uniform_affine(0.0, 10.0, 11.0).is_err());
    }

    #[test]
    fn general_tables_match_closed_forms() {
        let g = Environment::general(5.0, 15.0, |_| 0.1, |t| t - 11.0).unwrap();
        let u = fig();
        for x in [5.0, 5.3, 7.7834, 9.99, 11.0, 14.2, 15.0] {
            assert!((g.payoff_below(x) - u.payoff_below(x)).abs() < 1e-13, "{x}");
            assert!((g.weighted_payoff_above(x) - u.weighted_payoff_above(x)).abs() < 1e-13);
            assert!((g.cdf(x) - u.cdf(x)).abs() < 1e-13);
        }
        assert!((g.theta_dagger().unwrap() - u.theta_dagger().unwrap()).abs() < 1e-10);
        assert!((g.quantile(0.37) - u.quantile(0.37)).abs() < 1e-12);
    }

    #[test]
    fn ratio_shape() {
        let e = fig();
        let d = e.theta_dagger().unwrap();
        let lo: Vec<f64> = (1..200).map(|i| d + (11.0 - d) * i as f64 / 200.0).collect();
        let r: Vec<f64> = lo.iter().map(|&t| e.ratio(t).unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]));
        let hi: Vec<f64> = (1..200).map(|i| 11.0 + 4.0 * i as f64 / 200.0).collect();
        let r: Vec<f64> = hi.iter().map(|&t| e.ratio(t).unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }
}
