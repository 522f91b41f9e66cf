//! Property tests: algebraic identities that must hold for arbitrary valid
//! parameter draws, plus the fixed 50-draw solver-versus-closed-form
//! protocol for the gain-balanced branch.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tcqpt_core::analytic::{gain_balanced_order, hermitian_order};
use tcqpt_core::model::{
    build_effective, critical_coupling, gain_balance_rate, matching_ratio,
};
use tcqpt_core::steady::solve_from;
use tcqpt_core::{MeanFieldState, ModelParams, Regime};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn base_params(delta_c: f64, delta_s: f64, lambda: f64) -> ModelParams {
    ModelParams {
        delta_c,
        delta_s,
        lambda,
        omega_a: c(1.0, 0.0),
        ..ModelParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The gain-balanced matching ratio is the lossy one evaluated at the
    /// balance rate: the regimes differ only through the effective κ.
    #[test]
    fn gain_balanced_ratio_is_lossy_ratio_at_balance_rate(
        delta_c in 0.5f64..20.0,
        delta_s in 0.5f64..20.0,
        lambda in 0.5f64..16.0,
        gamma_perp in 1e-3f64..3.0,
        kappa_c in 0.0f64..3.0,
    ) {
        let mut params = base_params(delta_c, delta_s, lambda);
        params.gamma_perp = gamma_perp;
        params.kappa_c = kappa_c;
        let balanced = matching_ratio(&params, Regime::GainBalanced).unwrap();

        params.kappa_g = gain_balance_rate(&params).unwrap();
        let lossy = matching_ratio(&params, Regime::Lossy).unwrap();
        prop_assert!(
            (balanced - lossy).norm() <= 1e-12 * balanced.norm(),
            "{balanced} vs {lossy}"
        );
    }

    /// Spin dissipation always raises the threshold; it leaves it unchanged
    /// exactly when γ⊥ = 0.
    #[test]
    fn gain_balanced_threshold_dominates_hermitian(
        delta_c in 0.5f64..20.0,
        delta_s in 0.5f64..20.0,
        gamma_perp in 1e-3f64..3.0,
    ) {
        let mut params = base_params(delta_c, delta_s, 1.0);
        params.gamma_perp = gamma_perp;
        let hermitian = critical_coupling(&params, Regime::Hermitian).unwrap();
        let balanced = critical_coupling(&params, Regime::GainBalanced).unwrap();
        prop_assert!(balanced > hermitian);

        params.gamma_perp = 0.0;
        let degenerate = critical_coupling(&params, Regime::GainBalanced).unwrap();
        prop_assert!((degenerate - hermitian).abs() <= 1e-12 * hermitian);
    }

    /// The residual collective drive is linear in the drive mismatch:
    /// doubling the offset from the matched drive doubles the residual.
    #[test]
    fn residual_drive_is_linear_in_mismatch(
        delta_c in 0.5f64..20.0,
        delta_s in 0.5f64..20.0,
        lambda in 0.5f64..16.0,
        kappa_c in 0.0f64..3.0,
        gamma_perp in 0.0f64..3.0,
        offset_re in -2.0f64..2.0,
        offset_im in -2.0f64..2.0,
    ) {
        let mut params = base_params(delta_c, delta_s, lambda);
        params.kappa_c = kappa_c;
        params.gamma_perp = gamma_perp;
        let matched = params
            .with_matched_drives(Regime::Lossy, params.omega_a)
            .unwrap();
        let offset = c(offset_re, offset_im);
        prop_assume!(offset.norm() > 1e-6);

        let once = ModelParams {
            omega_j: matched.omega_j + offset,
            ..matched.clone()
        };
        let twice = ModelParams {
            omega_j: matched.omega_j + 2.0 * offset,
            ..matched
        };
        let r1 = build_effective(&once).unwrap().residual_drive;
        let r2 = build_effective(&twice).unwrap().residual_drive;
        prop_assert!((r2 - 2.0 * r1).norm() <= 1e-12 * r1.norm().max(1.0));
    }

    /// Both order-parameter branches agree where they meet: jz, jm, F, and
    /// n_phot are continuous across λc in both regimes.
    #[test]
    fn order_parameter_branches_are_continuous_at_threshold(
        delta in 1.0f64..15.0,
        gamma_perp in 0.05f64..2.0,
        ratio in 0.02f64..1.0,
    ) {
        let mut params = base_params(delta, delta, 1.0);
        params.gamma_perp = gamma_perp;
        params.gamma_par = ratio * gamma_perp;

        for regime in [Regime::Hermitian, Regime::GainBalanced] {
            let lambda_c = critical_coupling(&params, regime).unwrap();
            let eps = 1e-12 * lambda_c;
            let (below, above) = match regime {
                Regime::Hermitian => (
                    hermitian_order(&params, lambda_c - eps),
                    hermitian_order(&params, lambda_c + eps),
                ),
                _ => (
                    gain_balanced_order(&params, lambda_c - eps),
                    gain_balanced_order(&params, lambda_c + eps),
                ),
            };
            prop_assert!((below.jz - above.jz).abs() < 1e-9);
            prop_assert!((below.jm - above.jm).norm() < 1e-5);
            prop_assert!((below.f_quantity - above.f_quantity).abs() < 1e-5);
            prop_assert!((below.n_phot - above.n_phot).abs() < 1e-5);
        }
    }

    /// F from its definition (squared scaled spin length) on the closed-form
    /// branch equals the reported closed-form value, and photon number is
    /// the squared amplitude — for every coupling and dissipation ratio.
    #[test]
    fn f_definition_and_photon_number_identities(
        delta in 1.0f64..15.0,
        gamma_perp in 0.05f64..2.0,
        ratio in 0.02f64..1.0,
        excess in 1.0f64..3.0,
    ) {
        let mut params = base_params(delta, delta, 1.0);
        params.gamma_perp = gamma_perp;
        params.gamma_par = ratio * gamma_perp;
        let lambda_c = critical_coupling(&params, Regime::GainBalanced).unwrap();
        let order = gain_balanced_order(&params, excess * lambda_c);

        let definition = order.jm.norm_sqr() + order.jz * order.jz;
        prop_assert!(
            (definition - order.f_quantity).abs() < 1e-12,
            "definition {definition} vs closed form {}",
            order.f_quantity
        );
        prop_assert!(order.f_quantity <= 1.0 + 1e-12);
        prop_assert!(
            (order.n_phot - order.a_mean.norm_sqr()).abs()
                <= 1e-12 * order.n_phot.max(1.0)
        );
    }
}

/// Fifty seeded draws of (λ, Δ, γ⊥, γ∥) above threshold: the Newton solver,
/// seeded near but not on the closed-form gain-balanced root, must reproduce
/// it to 1e−9 in every coordinate.
#[test]
fn solver_reproduces_gain_balanced_branch_on_fifty_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_F00D);
    for draw in 0..50 {
        let delta = rng.random_range(3.0..12.0);
        let gamma_perp = rng.random_range(0.3..2.0);
        let gamma_par = gamma_perp * rng.random_range(0.02..0.4);
        let mut params = ModelParams {
            delta_c: delta,
            delta_s: delta,
            lambda: 1.0,
            kappa_c: rng.random_range(0.2..2.0),
            gamma_perp,
            gamma_par,
            omega_a: c(1.0, 0.0),
            ..ModelParams::default()
        };
        let lambda_c = critical_coupling(&params, Regime::GainBalanced).unwrap();
        params.lambda = lambda_c * rng.random_range(1.05..2.5);
        params.kappa_g = gain_balance_rate(&params).unwrap();
        let params = params
            .with_matched_drives(Regime::GainBalanced, c(1.0, 0.0))
            .unwrap();

        let order = gain_balanced_order(&params, params.lambda);
        let seed = MeanFieldState::new(
            order.a_mean * 1.001,
            order.jm * 0.999,
            (order.jz + 1e-3).clamp(-1.0, 1.0),
        );
        let solution = solve_from(&params, &seed)
            .unwrap_or_else(|e| panic!("draw {draw}: solver failed: {e}"));

        let got = solution.state.to_array();
        let want = MeanFieldState::new(order.a_mean, order.jm, order.jz).to_array();
        for (axis, (g, w)) in got.iter().zip(want).enumerate() {
            assert!(
                (g - w).abs() < 1e-9,
                "draw {draw} axis {axis}: solver {g} vs closed form {w}"
            );
        }
    }
}
