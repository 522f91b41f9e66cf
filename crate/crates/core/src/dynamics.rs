//! Time integration of the mean-field flow: an independent relaxation oracle
//! for steady-state roots and a tool for transient studies.
//!
//! The integrator is an adaptive embedded Runge–Kutta 5(4) pair
//! (Dormand–Prince coefficients, first-same-as-last) on the five real
//! coordinates, with standard proportional step control. The system is small
//! and only mildly stiff near folds; an implicit backward-Euler fallback with
//! step-doubling error control is available behind a switch for parameter
//! corners where the explicit step collapses.

use nalgebra::{Matrix5, Vector5};

use crate::model::ModelParams;
use crate::steady::{flow, flow_jacobian, solve_from, MeanFieldState, Stability, SteadySolution};
use crate::{Error, Result};

/// Integrator controls. Defaults: relative tolerance 1e−9, absolute 1e−12,
/// early stop when the flow norm stays below the settle threshold for three
/// consecutive accepted steps. The settle threshold is deliberately coarser
/// than the tolerances — local truncation noise keeps the observed flow norm
/// near rtol·‖flow Jacobian‖ even once the state is pinned — and is widened
/// to 100·rtol·(initial flow norm) on fast systems whose noise floor exceeds
/// it; `settle` refines the endpoint with Newton afterwards anyway.
#[derive(Debug, Clone, Copy)]
pub struct Controls {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen from the fastest rate in the model if unset.
    pub initial_step: Option<f64>,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: usize,
    /// Switch to backward Euler instead of erroring when the explicit step
    /// underflows.
    pub implicit_fallback: bool,
    /// Flow-norm floor for the early convergence stop.
    pub settle_flow_tol: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            rtol: 1e-9,
            atol: 1e-12,
            initial_step: None,
            max_steps: 5_000_000,
            implicit_fallback: false,
            settle_flow_tol: 1e-8,
        }
    }
}

/// One integrated trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Strictly increasing accepted time points, starting at 0.
    pub times: Vec<f64>,
    /// State at each time point; finite throughout.
    pub states: Vec<MeanFieldState>,
    /// The flow norm stayed below the settle threshold for three consecutive
    /// accepted steps before the horizon.
    pub converged: bool,
    /// Steady-state residual norm at the final state.
    pub final_residual: f64,
    /// The model is conservative (all rates zero): no relaxation is expected
    /// and `converged` is only reachable by starting on a fixed point.
    pub rate_free_warning: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &MeanFieldState {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

// Dormand–Prince 5(4) tableau. The flow is autonomous, so the stage times
// (c coefficients) never enter.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (equal to the last A row: first-same-as-last pair).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// State norm beyond which a trajectory counts as diverged (scaled
/// coordinates are order one for anything physical).
const DIVERGENCE_NORM: f64 = 1e9;

fn flow_v(params: &ModelParams, y: &Vector5<f64>) -> Vector5<f64> {
    let state = MeanFieldState::from_array([y[0], y[1], y[2], y[3], y[4]]);
    Vector5::from(flow(params, &state))
}

fn state_of(y: &Vector5<f64>) -> MeanFieldState {
    MeanFieldState::from_array([y[0], y[1], y[2], y[3], y[4]])
}

/// Fastest rate in the model, for the initial step heuristic.
fn rate_scale(params: &ModelParams) -> f64 {
    [
        params.delta_c,
        params.delta_s,
        params.lambda,
        params.kappa().abs(),
        params.gamma_perp,
        params.gamma_par,
        params.omega_a.norm(),
        params.omega_j.norm(),
        1.0,
    ]
    .into_iter()
    .fold(f64::MIN, f64::max)
}

/// Integrate the mean-field flow from `initial` for `horizon` time units.
/// Stops early (converged) when the flow norm stays below the settle
/// threshold for three consecutive accepted steps.
pub fn integrate(
    params: &ModelParams,
    initial: &MeanFieldState,
    horizon: f64,
    controls: &Controls,
) -> Result<Trajectory> {
    params.validate()?;
    if horizon <= 0.0 || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive and finite (got {horizon})"
        )));
    }
    if !initial.is_finite() {
        return Err(Error::InvalidParameter(
            "initial state is not finite".into(),
        ));
    }

    let mut t = 0.0_f64;
    let mut y = Vector5::from(initial.to_array());
    let mut times = vec![0.0];
    let mut states = vec![*initial];
    let mut converged = false;

    let mut h = controls
        .initial_step
        .unwrap_or_else(|| (horizon / 100.0).min(0.1 / rate_scale(params)))
        .min(horizon);
    let mut k1 = flow_v(params, &y);
    // Truncation noise keeps the observed flow norm near rtol·‖J‖·‖y‖ once
    // the state is pinned, so on fast systems the fixed floor alone would
    // never trigger; widen it with the initial flow norm as the scale.
    let settle_tol = controls
        .settle_flow_tol
        .max(100.0 * controls.rtol * k1.norm());
    let mut quiet_steps = 0usize;
    let mut implicit = false;

    let mut steps = 0usize;
    while t < horizon {
        steps += 1;
        if steps > controls.max_steps {
            return Err(Error::Stiffness { t, step: h });
        }
        if y.norm() > DIVERGENCE_NORM {
            return Err(Error::Diverged { t, norm: y.norm() });
        }
        h = h.min(horizon - t);

        let accepted = if implicit {
            implicit_step(params, &y, &mut h, controls)
        } else {
            explicit_step(params, &y, &k1, &mut h, controls)
        };
        match accepted {
            StepOutcome::Accept { y_new, k_last, h_taken } => {
                t += h_taken;
                y = y_new;
                k1 = k_last.unwrap_or_else(|| flow_v(params, &y));
                times.push(t);
                states.push(state_of(&y));
                if k1.norm() < settle_tol {
                    quiet_steps += 1;
                    if quiet_steps >= 3 {
                        converged = true;
                        break;
                    }
                } else {
                    quiet_steps = 0;
                }
            }
            StepOutcome::Underflow => {
                if controls.implicit_fallback && !implicit {
                    implicit = true;
                    h = (horizon - t) / 100.0;
                } else {
                    return Err(Error::Stiffness { t, step: h });
                }
            }
        }
    }

    let last = *states.last().expect("at least the initial state");
    Ok(Trajectory {
        times,
        states,
        converged,
        final_residual: crate::steady::residual_norm(params, &last),
        rate_free_warning: params.is_rate_free(),
    })
}

enum StepOutcome {
    Accept {
        y_new: Vector5<f64>,
        /// Flow at the accepted point when the scheme provides it (FSAL).
        k_last: Option<Vector5<f64>>,
        h_taken: f64,
    },
    Underflow,
}

/// One adaptive explicit step attempt loop: shrinks `h` on rejection, grows
/// it for the next step on acceptance.
fn explicit_step(
    params: &ModelParams,
    y: &Vector5<f64>,
    k1: &Vector5<f64>,
    h: &mut f64,
    controls: &Controls,
) -> StepOutcome {
    loop {
        if !step_is_viable(*h) {
            return StepOutcome::Underflow;
        }
        let mut k = [Vector5::zeros(); 7];
        k[0] = *k1;
        for stage in 1..7 {
            let mut arg = *y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage - 1][j];
                if a != 0.0 {
                    arg += *h * a * *kj;
                }
            }
            k[stage] = flow_v(params, &arg);
        }
        let mut y5 = *y;
        let mut err = Vector5::zeros();
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                y5 += *h * B5[j] * *kj;
            }
            let diff = B5[j] - B4[j];
            if diff != 0.0 {
                err += *h * diff * *kj;
            }
        }
        let mut err_norm = 0.0_f64;
        for i in 0..5 {
            let scale = controls.atol + controls.rtol * y[i].abs().max(y5[i].abs());
            let e = err[i] / scale;
            err_norm += e * e;
        }
        err_norm = (err_norm / 5.0).sqrt();

        if err_norm.is_finite() && err_norm <= 1.0 && y5.iter().all(|v| v.is_finite()) {
            let h_taken = *h;
            let factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            *h *= factor;
            // k7 is the flow at the accepted point (first-same-as-last).
            return StepOutcome::Accept {
                y_new: y5,
                k_last: Some(k[6]),
                h_taken,
            };
        }
        let factor = if err_norm.is_finite() {
            (0.9 * err_norm.powf(-0.2)).clamp(0.1, 0.7)
        } else {
            0.1
        };
        *h *= factor;
    }
}

/// Backward-Euler fallback with step-doubling error control: robust for stiff
/// corners, first order but self-correcting via the Newton solve per step.
fn implicit_step(
    params: &ModelParams,
    y: &Vector5<f64>,
    h: &mut f64,
    controls: &Controls,
) -> StepOutcome {
    loop {
        if !step_is_viable(*h) {
            return StepOutcome::Underflow;
        }
        let full = backward_euler(params, y, *h);
        let half = backward_euler(params, y, 0.5 * *h)
            .and_then(|mid| backward_euler(params, &mid, 0.5 * *h));
        let (Some(full), Some(half)) = (full, half) else {
            *h *= 0.5;
            continue;
        };
        let mut err_norm = 0.0_f64;
        for i in 0..5 {
            let scale = controls.atol + controls.rtol * y[i].abs().max(half[i].abs());
            let e = (full[i] - half[i]) / scale;
            err_norm += e * e;
        }
        err_norm = (err_norm / 5.0).sqrt();
        if err_norm.is_finite() && err_norm <= 1.0 {
            let h_taken = *h;
            let factor = if err_norm == 0.0 {
                4.0
            } else {
                (0.9 * err_norm.powf(-0.5)).clamp(0.2, 4.0)
            };
            *h *= factor;
            // Richardson extrapolation of the step-doubling pair: second
            // order locally, so the first-order error does not accumulate
            // over long horizons.
            return StepOutcome::Accept {
                y_new: 2.0 * half - full,
                k_last: None,
                h_taken,
            };
        }
        *h *= 0.5;
    }
}

fn backward_euler(
    params: &ModelParams,
    y: &Vector5<f64>,
    h: f64,
) -> Option<Vector5<f64>> {
    // Solve z = y + h f(z) by Newton from the explicit predictor.
    let mut z = *y + h * flow_v(params, y);
    for _ in 0..12 {
        let f = flow_v(params, &z);
        let g = z - *y - h * f;
        if g.norm() < 1e-13 * (1.0 + z.norm()) {
            return Some(z);
        }
        let jac = flow_jacobian(params, &state_of(&z));
        let m = Matrix5::identity() - h * jac;
        let step = m.lu().solve(&(-g))?;
        z += step;
        if !z.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    None
}

fn step_is_viable(h: f64) -> bool {
    h.is_finite() && h > 1e-14
}

/// Integrate with doubling horizons until the flow settles, then polish the
/// endpoint with the Newton solver. Requires a dissipative model: a
/// conservative flow has no attractors to settle onto.
pub fn settle(
    params: &ModelParams,
    initial: &MeanFieldState,
    max_horizon: f64,
) -> Result<SteadySolution> {
    settle_with(params, initial, max_horizon, &Controls::default())
}

/// [`settle`] with explicit integrator controls.
pub fn settle_with(
    params: &ModelParams,
    initial: &MeanFieldState,
    max_horizon: f64,
    controls: &Controls,
) -> Result<SteadySolution> {
    params.validate()?;
    if params.is_rate_free() {
        return Err(Error::InvalidParameter(
            "settle needs a dissipative model; conservative flows do not relax".into(),
        ));
    }
    if max_horizon <= 0.0 || !max_horizon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "max_horizon must be positive and finite (got {max_horizon})"
        )));
    }

    let mut state = *initial;
    let mut total = 0.0_f64;
    let mut chunk = max_horizon / 64.0;
    let mut rejected = 0usize;
    loop {
        let remaining = max_horizon - total;
        let horizon = chunk.min(remaining);
        let traj = integrate(params, &state, horizon, controls)?;
        state = *traj.final_state();
        total += *traj.times.last().expect("nonempty");
        if traj.converged {
            // A trajectory can also go quiet while creeping past a saddle,
            // and Newton would then pin the saddle itself. Reject unstable
            // polished roots a few times and keep integrating; past the cap,
            // report whatever the polish finds.
            match solve_from(params, &state) {
                Ok(root) if rejected >= 4 || root.stability != Stability::Unstable => {
                    return Ok(root);
                }
                Ok(_) => rejected += 1,
                Err(_) if rejected < 4 => rejected += 1,
                Err(err) => return Err(err),
            }
        }
        if total >= max_horizon {
            let flow_norm = flow(params, &state)
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            return Err(Error::NoSettle {
                horizon: max_horizon,
                flow_norm,
                last: state,
            });
        }
        chunk *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    use super::*;
    use crate::model::{ModelParams, Regime};
    use crate::steady::{find_all, GridSpec, Stability};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lossy_matched(lambda: f64) -> ModelParams {
        ModelParams {
            delta_c: 8.0,
            delta_s: 8.0,
            lambda,
            kappa_c: 1.0,
            gamma_perp: 1.0,
            gamma_par: 0.1,
            ..ModelParams::default()
        }
        .with_matched_drives(Regime::Lossy, c(1.0, 0.0))
        .unwrap()
    }

    #[test]
    fn decoupled_linear_system_integrates_to_closed_form() {
        // λ → 0 decouples the three blocks into damped rotations plus an
        // inversion decay with explicit solutions.
        let params = ModelParams {
            delta_c: 2.0,
            delta_s: 3.0,
            lambda: 1e-300,
            kappa_c: 0.3,
            gamma_perp: 0.4,
            gamma_par: 0.5,
            ..ModelParams::default()
        };
        let a0 = c(0.7, -0.2);
        let jm0 = c(-0.4, 0.5);
        let jz0 = 0.6;
        let horizon = 3.0;
        let traj = integrate(
            &params,
            &MeanFieldState::new(a0, jm0, jz0),
            horizon,
            &Controls::default(),
        )
        .unwrap();
        let t = *traj.times.last().unwrap();
        assert_abs_diff_eq!(t, horizon, epsilon = 1e-12);
        let last = traj.final_state();
        // ā(t) = ā0 e^{−(κ+iΔc)t}, jm(t) = jm0 e^{−(γ⊥+iΔs)t},
        // jz(t) = −1 + (jz0+1) e^{−γ∥t}.
        let a_exact = a0 * (c(-params.kappa_c, -params.delta_c) * t).exp();
        let jm_exact = jm0 * (c(-params.gamma_perp, -params.delta_s) * t).exp();
        let jz_exact = -1.0 + (jz0 + 1.0) * (-params.gamma_par * t).exp();
        assert_abs_diff_eq!(last.a_mean.re, a_exact.re, epsilon = 1e-8);
        assert_abs_diff_eq!(last.a_mean.im, a_exact.im, epsilon = 1e-8);
        assert_abs_diff_eq!(last.jm.re, jm_exact.re, epsilon = 1e-8);
        assert_abs_diff_eq!(last.jm.im, jm_exact.im, epsilon = 1e-8);
        assert_abs_diff_eq!(last.jz, jz_exact, epsilon = 1e-8);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fixed_point_start_converges_immediately() {
        let params = lossy_matched(8.0);
        let root = crate::steady::solve_from(&params, &MeanFieldState::trivial(&params)).unwrap();
        let traj = integrate(&params, &root.state, 50.0, &Controls::default()).unwrap();
        assert!(traj.converged);
        assert!(traj.final_state().distance(&root.state) < 1e-9);
        assert!(traj.final_residual < 1e-9);
    }

    #[test]
    fn rate_free_flow_conserves_spin_length() {
        let params = ModelParams {
            delta_c: 8.0,
            delta_s: 8.0,
            lambda: 10.0,
            ..ModelParams::default()
        }
        .with_matched_drives(Regime::Hermitian, c(1.0, 0.0))
        .unwrap();
        let start = MeanFieldState::new(c(0.1, -0.3), c(0.5, 0.2), 0.4);
        let s0 = start.spin_length();
        let controls = Controls {
            rtol: 1e-11,
            atol: 1e-13,
            ..Controls::default()
        };
        let horizon = 100.0 / params.delta_c;
        let traj = integrate(&params, &start, horizon, &controls).unwrap();
        assert!(traj.rate_free_warning);
        for state in &traj.states {
            assert!((state.spin_length() - s0).abs() < 1e-8);
        }
    }

    #[test]
    fn matched_zero_coherence_line_is_invariant_and_settles_trivially() {
        // On the displaced-cavity line (ā at its trivial value, jm = 0) the
        // residual collective drive vanishes, so coherence is never sourced
        // and only the inversion relaxes: every start on the line slides down
        // to the trivial root. Checked in the lossy regime, where that root
        // is linearly stable and rounding noise off the line is contracted
        // rather than amplified.
        let params = lossy_matched(8.0);
        let trivial = MeanFieldState::trivial(&params);
        let start = MeanFieldState::new(trivial.a_mean, c(0.0, 0.0), -0.2);
        let traj = integrate(&params, &start, 30.0, &Controls::default()).unwrap();
        for state in &traj.states {
            assert!(state.jm.norm() < 1e-9, "coherence must stay zero on the line");
        }
        let settled = settle(&params, &start, 400.0).unwrap();
        assert!(settled.state.distance(&trivial) < 1e-8);
    }

    #[test]
    fn settle_reaches_both_attractors_in_a_bistable_window() {
        // Factor-0.7-style drive mismatch in the lossy model: pick a window
        // point with three roots and relax from starts near each outer
        // branch.
        let lambda = 8.0;
        let mut window_params = None;
        for i in 0..60 {
            let x = 0.4 + 1.6 * i as f64 / 59.0;
            let delta = x * lambda;
            let matched = ModelParams {
                delta_c: delta,
                delta_s: delta,
                lambda,
                kappa_c: 1.0,
                gamma_perp: 1.0,
                gamma_par: 0.1,
                ..ModelParams::default()
            }
            .with_matched_drives(Regime::Lossy, c(1.0, 0.0))
            .unwrap();
            let params = ModelParams {
                omega_j: matched.omega_j / 0.77,
                ..matched
            };
            if let Ok(roots) = find_all(&params, &GridSpec::default()) {
                if roots.len() == 3 {
                    window_params = Some((params, roots));
                    break;
                }
            }
        }
        let (params, roots) = window_params.expect("three-root window exists");
        let stable: Vec<_> = roots
            .iter()
            .filter(|r| r.stability == Stability::Stable)
            .collect();
        assert_eq!(stable.len(), 2, "outer branches are the attractors");
        for root in &stable {
            let start = MeanFieldState::new(
                root.state.a_mean * 1.02,
                root.state.jm * 1.02 + c(1e-3, 0.0),
                (root.state.jz * 0.98).clamp(-1.0, 1.0),
            );
            let settled = settle(&params, &start, 20_000.0).unwrap();
            assert!(
                settled.state.distance(&root.state) < 1e-8,
                "perturbed start should fall back onto its own branch"
            );
        }
    }

    #[test]
    fn settle_rejects_conservative_models() {
        let params = ModelParams {
            delta_c: 8.0,
            delta_s: 8.0,
            lambda: 10.0,
            ..ModelParams::default()
        }
        .with_matched_drives(Regime::Hermitian, c(1.0, 0.0))
        .unwrap();
        let start = MeanFieldState::trivial(&params);
        assert!(matches!(
            settle(&params, &start, 100.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn settle_reports_no_convergence_within_tiny_horizon() {
        let params = lossy_matched(8.0);
        let start = MeanFieldState::new(c(0.5, 0.5), c(0.3, -0.2), 0.5);
        match settle(&params, &start, 1e-4) {
            Err(Error::NoSettle { last, .. }) => assert!(last.is_finite()),
            other => panic!("expected NoSettle, got {other:?}"),
        }
    }

    #[test]
    fn runaway_gain_reports_divergence() {
        // Net cavity gain with a negligible coupling: the amplitude grows
        // exponentially without bound.
        let params = ModelParams {
            delta_c: 1.0,
            delta_s: 1.0,
            lambda: 1e-300,
            kappa_c: 0.0,
            kappa_g: 2.0,
            omega_a: c(1.0, 0.0),
            ..ModelParams::default()
        };
        let start = MeanFieldState::new(c(1.0, 0.0), c(0.0, 0.0), -1.0);
        match integrate(&params, &start, 100.0, &Controls::default()) {
            Err(Error::Diverged { norm, .. }) => assert!(norm > 1e8),
            other => panic!("expected Diverged, got {other:?}"),
        }
    }

    #[test]
    fn implicit_fallback_matches_explicit_result() {
        // Not a stiff case, but the fallback must agree with the explicit
        // integrator when forced into use via a tiny starting step budget.
        let params = lossy_matched(6.0);
        let start = MeanFieldState::new(c(0.2, 0.1), c(0.1, -0.2), 0.0);
        let explicit = integrate(&params, &start, 2.0, &Controls::default()).unwrap();
        let implicit = {
            let mut y = Vector5::from(start.to_array());
            let mut t = 0.0;
            let mut h = 1e-3f64;
            let controls = Controls {
                rtol: 1e-9,
                atol: 1e-12,
                ..Controls::default()
            };
            while t < 2.0 {
                h = h.min(2.0 - t);
                match implicit_step(&params, &y, &mut h, &controls) {
                    StepOutcome::Accept { y_new, h_taken, .. } => {
                        y = y_new;
                        t += h_taken;
                    }
                    StepOutcome::Underflow => panic!("implicit underflow"),
                }
            }
            state_of(&y)
        };
        assert!(explicit.final_state().distance(&implicit) < 1e-5);
    }
}
