use proptest::prelude::*;

use screenlab::checks::reference_model;
use screenlab::exec::Execution;
use screenlab::ext::ExtReal;
use screenlab::noise::{Family, NoiseModel};
use screenlab::output::{parse_sweep_csv, sweep_csv};

fn upper_mass(noise: &NoiseModel, x: f64, xp: f64) -> f64 {
    if xp >= 0.0 {
        noise.cdf(-xp) - noise.cdf(-x)
    } else {
        noise.cdf(x) - noise.cdf(xp)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn log_concave_chord_lies_between_scores(a in -8.0f64..8.0, d in 1e-3f64..8.0, laplace in any::<bool>()) {
        let noise = if laplace { NoiseModel::laplace() } else { NoiseModel::normal() };
        let (xp, x) = (a, a + d);
        let mid = (noise.pdf(x) - noise.pdf(xp)) / upper_mass(&noise, x, xp);
        let slack = 1e-9 * (1.0 + mid.abs());
        prop_assert!(noise.score(xp) >= mid - slack, "left {} mid {}", noise.score(xp), mid);
        prop_assert!(mid >= noise.score(x) - slack, "mid {} right {}", mid, noise.score(x));
    }

    #[test]
    fn agent_threshold_rises_with_standard(t in 0.0f64..20.0, dt in 1e-3f64..5.0, sigma in 0.05f64..3.0) {
        let m = reference_model(Family::Normal).unwrap();
        let lo = m.agent_threshold(ExtReal::Finite(t), sigma);
        let hi = m.agent_threshold(ExtReal::Finite(t + dt), sigma);
        prop_assert!(hi >= lo, "{} then {}", lo, hi);
    }

    #[test]
    fn sweep_csv_round_trips(mut rhos in prop::collection::vec(0.05f64..50.0, 1..6)) {
        rhos.sort_by(f64::total_cmp);
        rhos.dedup();
        let m = reference_model(Family::Laplace).unwrap();
        let sweep = m.sweep(&rhos, Execution::Sequential).unwrap();
        let rows = parse_sweep_csv(&sweep_csv(&sweep, None)).unwrap();
        prop_assert_eq!(rows.len(), rhos.len());
        for (r, orig) in rows.iter().zip(&sweep.rows) {
            prop_assert_eq!(r.rho, orig.rho);
            prop_assert_eq!(r.sigma, orig.sigma);
            prop_assert_eq!(r.exists, orig.exists());
            prop_assert_eq!(r.v, orig.welfare.map(|w| w.principal));
            prop_assert_eq!(r.alpha, orig.welfare.map(|w| w.type_one));
            prop_assert_eq!(r.theta_hat, orig.equilibrium.map(|e| e.theta_hat));
        }
    }
}

#[test]
fn sweep_is_identical_across_execution_modes() {
    let m = reference_model(Family::Normal).unwrap();
    let grid = m.precision_grid(0.8, 100.0, 24).unwrap();
    let a = m.sweep(&grid, Execution::Sequential).unwrap();
    let b = m.sweep(&grid, Execution::Parallel).unwrap();
    assert_eq!(sweep_csv(&a, None), sweep_csv(&b, None));
}
