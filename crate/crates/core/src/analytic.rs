//! Closed-form order parameters for the two solvable matching regimes, the
//! spin-length quantity F, photon-number variation, and critical-exponent
//! extraction from sampled data.

use num_complex::Complex64;

use crate::model::{critical_coupling, ModelParams, Regime};
use crate::{Error, Result};

/// Order parameters of one phase point, all in scaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderParameters {
    /// Inversion ⟨Jz⟩/(N/2), in [−1, 0].
    pub jz: f64,
    /// Spin-lowering amplitude ⟨J−⟩/(N/2); real ≥ 0 by the phase convention.
    pub jm: Complex64,
    /// Cavity amplitude ⟨a⟩/√N.
    pub a_mean: Complex64,
    /// Photon number ⟨a†a⟩/N = |a_mean|² at mean-field level.
    pub n_phot: f64,
    /// Spin length F = (⟨Jx⟩² + ⟨Jy⟩² + ⟨Jz⟩²)/(N/2)²; 1 when conserved.
    pub f_quantity: f64,
}

/// Order parameters of the rate-free case under Hermitian drive matching.
///
/// Below λc the normal phase is all spins down with the displaced cavity
/// empty; above λc the inversion rises as −λc²/λ² and the spin coherence
/// follows from spin-length conservation.
pub fn hermitian_order(params: &ModelParams, lambda: f64) -> OrderParameters {
    let lambda_c = (params.delta_c * params.delta_s).sqrt();
    let (jz, jm_abs) = if lambda < lambda_c {
        (-1.0, 0.0)
    } else {
        let r2 = (lambda_c / lambda).powi(2);
        (-r2, (1.0 - r2 * r2).max(0.0).sqrt())
    };
    let jm = Complex64::new(jm_abs, 0.0);
    let a_mean = -(lambda * jm / 2.0 + params.omega_a) / params.delta_c;
    OrderParameters {
        jz,
        jm,
        a_mean,
        n_phot: a_mean.norm_sqr(),
        f_quantity: 1.0,
    }
}

/// Order parameters of the dissipative case at exact gain balance
/// (κg = κc + γ⊥Δc/Δs) under the matched drive ratio Δc(1 + iγ⊥/Δs)/λ.
///
/// The transition survives dissipation here, but the spin length does not:
/// above λc the closed form for F drops below one, signalling
/// decoherence-induced violation of spin conservation.
pub fn gain_balanced_order(params: &ModelParams, lambda: f64) -> OrderParameters {
    if params.gamma_perp == 0.0 {
        // Balance with no transverse decoherence is the Hermitian problem.
        return hermitian_order(params, lambda);
    }
    let g = params.gamma_perp / params.delta_s;
    let lambda_c = (params.delta_c * params.delta_s * (1.0 + g * g)).sqrt();
    let denom = params.delta_c * Complex64::new(1.0, g);
    let (jz, jm_abs, f_quantity) = if lambda < lambda_c {
        (-1.0, 0.0, 1.0)
    } else {
        let r2 = (lambda_c / lambda).powi(2);
        let ratio = params.gamma_par / params.gamma_perp;
        let jm_abs = r2.sqrt() * ((1.0 - r2) * ratio).max(0.0).sqrt();
        let f = r2 * (1.0 - r2) * ratio + r2 * r2;
        (-r2, jm_abs, f)
    };
    let jm = Complex64::new(jm_abs, 0.0);
    let a_mean = -(lambda * jm / 2.0 + params.omega_a) / denom;
    OrderParameters {
        jz,
        jm,
        a_mean,
        n_phot: a_mean.norm_sqr(),
        f_quantity,
    }
}

/// Photon-number variation δn(λ) = n_phot(λ) − n_phot(λc) from the exact
/// branch formulas (not the leading-order asymptotics). Zero for λ ≤ λc.
pub fn photon_number_variation(params: &ModelParams, lambda: f64, regime: Regime) -> Result<f64> {
    let order = match regime {
        Regime::Hermitian => hermitian_order,
        Regime::GainBalanced => gain_balanced_order,
        Regime::Lossy => {
            return Err(Error::InvalidParameter(
                "photon-number variation is defined for the hermitian and gain_balanced regimes"
                    .into(),
            ))
        }
    };
    let lambda_c = critical_coupling(params, regime)?;
    if lambda <= lambda_c {
        return Ok(0.0);
    }
    Ok(order(params, lambda).n_phot - order(params, lambda_c).n_phot)
}

/// Result of a power-law fit |obs(λ) − obs(λc)| ≈ amplitude·(λ − λc)^exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
}

/// Points closer to λc than this (relative to λc) are dropped before fitting:
/// their differences are rounding noise in double precision.
pub const FIT_WINDOW_REL: f64 = 1e-6;

/// Least-squares fit of log|obs − obs(λc)| against log(λ − λc).
///
/// `samples` are (λ, observable) pairs, all strictly above λc;
/// `obs_at_critical` is the observable's value exactly at the transition
/// (−1 for jz, 0 for jm, the flat normal-branch value for n_phot).
pub fn fit_critical_exponent(
    samples: &[(f64, f64)],
    lambda_c: f64,
    obs_at_critical: f64,
) -> Result<ExponentFit> {
    let wrong_side = samples.iter().filter(|(l, _)| *l < lambda_c).count();
    if wrong_side > 0 {
        return Err(Error::WrongSideSamples {
            count: wrong_side,
            lambda_c,
        });
    }
    let above = samples.iter().filter(|(l, _)| *l > lambda_c).count();
    if above < 8 {
        return Err(Error::TooFewSamples {
            kept: above,
            need: 8,
        });
    }

    let window = FIT_WINDOW_REL * lambda_c;
    let points: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(l, obs)| *l - lambda_c >= window && *obs != obs_at_critical)
        .map(|(l, obs)| ((l - lambda_c).ln(), (obs - obs_at_critical).abs().ln()))
        .collect();
    if points.len() < 4 {
        return Err(Error::TooFewSamples {
            kept: points.len(),
            need: 4,
        });
    }

    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
        (a + (x - mx) * (x - mx), b + (x - mx) * (y - my))
    });
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|(_, y)| (y - my) * (y - my)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    Ok(ExponentFit {
        exponent: slope,
        amplitude: intercept.exp(),
        r_squared,
    })
}
