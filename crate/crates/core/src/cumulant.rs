//! Second-order cumulant corrections to the mean-field steady state: the two
//! mixed correlators ⟨Jz a⟩ and ⟨a J+⟩ are kept as unknowns instead of being
//! factorized, giving a nine-real steady-state system.
//!
//! # Scaled system
//!
//! With ā = ⟨a⟩/√N, jm = ⟨J−⟩/(N/2), jz = ⟨Jz⟩/(N/2), c_za = ⟨Jz a⟩/((N/2)√N),
//! c_ap = ⟨a J+⟩/(√N·(N/2)), drive amplitudes wa = Ωa/√N, wj = ΩJ/√N and
//! κ = κc − κg, every coefficient below is independent of N — including the
//! inversion–relaxation feed −(N/2)γ∥⟨a⟩, which scales to −γ∥ā. (Checked
//! symbolically: each term of the evolution equations carries exactly the
//! power of N that its correlator scaling removes.) The steady conditions
//! are:
//!
//! ```text
//! E1 = (Δc − iκ)·ā + (λ/2)·jm + wa
//! E2 = (Δs − iγ⊥)·jm − 2λ·c_za − 2·jz·wj
//! e3 = 2λ·Im(c_ap) + 2·Im(wj·conj(jm)) − γ∥(1 + jz)
//! E4 = (Δc − i(κ+γ∥))·c_za − iγ∥·ā + (λ/2)·jz·jm
//!      + λ·ā·(c_ap − conj(c_ap)) + wj·c_ap − conj(wj)·ā·jm + wa·jz
//! E5 = ((Δc−Δs) − i(κ+γ⊥))·c_ap + (λ/2)·jm·conj(jm) + 2λ·c_za·conj(ā)
//!      + wa·conj(jm) + 2·conj(wj)·c_za
//! ```
//!
//! ⟨a†J−⟩ never appears as a separate unknown: it equals conj(c_ap) exactly.
//! Three-operator terms are closed as a correlator times a singleton
//! (c_ap·ā-type products above); substituting the factorized values
//! c_za = jz·ā, c_ap = ā·conj(jm) collapses E1–e3 to the mean-field
//! residuals, which is the reduction property the tests pin down.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::model::ModelParams;
use crate::steady::{MeanFieldState, SolveOptions};
use crate::{Error, Result};

type Vector9 = SVector<f64, 9>;
type Matrix9 = SMatrix<f64, 9, 9>;

/// Mean-field state extended by the two mixed second-order correlators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CumulantState {
    pub base: MeanFieldState,
    /// ⟨Jz a⟩ / ((N/2)·√N).
    pub c_za: Complex64,
    /// ⟨a J+⟩ / (√N·(N/2)); ⟨a†J−⟩ is its conjugate.
    pub c_ap: Complex64,
}

impl CumulantState {
    /// Factorized (mean-field) lift: c_za = jz·ā, c_ap = ā·conj(jm).
    pub fn factorized(base: MeanFieldState) -> Self {
        CumulantState {
            base,
            c_za: base.jz * base.a_mean,
            c_ap: base.a_mean * base.jm.conj(),
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        let b = self.base.to_array();
        [
            b[0], b[1], b[2], b[3], b[4], //
            self.c_za.re,
            self.c_za.im,
            self.c_ap.re,
            self.c_ap.im,
        ]
    }

    pub fn from_array(x: [f64; 9]) -> Self {
        CumulantState {
            base: MeanFieldState::from_array([x[0], x[1], x[2], x[3], x[4]]),
            c_za: Complex64::new(x[5], x[6]),
            c_ap: Complex64::new(x[7], x[8]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Euclidean distance over the nine real coordinates.
    pub fn distance(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A converged cumulant root.
#[derive(Debug, Clone, Copy)]
pub struct CumulantSolution {
    pub state: CumulantState,
    pub residual_norm: f64,
}

/// The nine steady-state residuals in the order
/// [Re E1, Im E1, Re E2, Im E2, e3, Re E4, Im E4, Re E5, Im E5].
/// The first five components at a factorized state reproduce the mean-field
/// residual.
pub fn cumulant_residual(params: &ModelParams, state: &CumulantState) -> [f64; 9] {
    let p = params;
    let kappa = p.kappa();
    let a = state.base.a_mean;
    let jm = state.base.jm;
    let jz = state.base.jz;
    let (za, ap) = (state.c_za, state.c_ap);
    let (wa, wj) = (p.omega_a, p.omega_j);
    let l = p.lambda;

    let e1 = Complex64::new(p.delta_c, -kappa) * a + (l / 2.0) * jm + wa;
    let e2 = Complex64::new(p.delta_s, -p.gamma_perp) * jm - 2.0 * l * za - 2.0 * jz * wj;
    let e3 = 2.0 * l * ap.im + 2.0 * (wj * jm.conj()).im - p.gamma_par * (1.0 + jz);
    let e4 = Complex64::new(p.delta_c, -(kappa + p.gamma_par)) * za
        - Complex64::i() * p.gamma_par * a
        + (l / 2.0) * jz * jm
        + l * a * (ap - ap.conj())
        + wj * ap
        - wj.conj() * a * jm
        + wa * jz;
    let e5 = Complex64::new(p.delta_c - p.delta_s, -(kappa + p.gamma_perp)) * ap
        + (l / 2.0) * jm * jm.conj()
        + 2.0 * l * za * a.conj()
        + wa * jm.conj()
        + 2.0 * wj.conj() * za;
    [
        e1.re, e1.im, e2.re, e2.im, e3, e4.re, e4.im, e5.re, e5.im,
    ]
}

/// Euclidean norm of [`cumulant_residual`].
pub fn cumulant_residual_norm(params: &ModelParams, state: &CumulantState) -> f64 {
    cumulant_residual(params, state)
        .iter()
        .map(|r| r * r)
        .sum::<f64>()
        .sqrt()
}

/// Write the 2×2 real block of one complex equation with respect to one
/// complex unknown from its Wirtinger pair (p = ∂E/∂w, q = ∂E/∂w̄).
fn set_block(m: &mut Matrix9, row: usize, col: usize, p: Complex64, q: Complex64) {
    m[(row, col)] = (p + q).re;
    m[(row, col + 1)] = -(p - q).im;
    m[(row + 1, col)] = (p + q).im;
    m[(row + 1, col + 1)] = (p - q).re;
}

/// Column of one complex equation with respect to the real unknown jz.
fn set_jz(m: &mut Matrix9, row: usize, d: Complex64) {
    m[(row, 4)] = d.re;
    m[(row + 1, 4)] = d.im;
}

/// Analytic Jacobian of [`cumulant_residual`]; real coordinates ordered
/// [Re ā, Im ā, Re jm, Im jm, jz, Re c_za, Im c_za, Re c_ap, Im c_ap].
fn cumulant_jacobian(params: &ModelParams, state: &CumulantState) -> Matrix9 {
    let p = params;
    let kappa = p.kappa();
    let a = state.base.a_mean;
    let jm = state.base.jm;
    let ap = state.c_ap;
    let za = state.c_za;
    let jz = state.base.jz;
    let (wa, wj) = (p.omega_a, p.omega_j);
    let l = p.lambda;
    let zero = Complex64::ZERO;
    let mut m = Matrix9::zeros();

    // E1 rows 0–1.
    set_block(&mut m, 0, 0, Complex64::new(p.delta_c, -kappa), zero);
    set_block(&mut m, 0, 2, Complex64::new(l / 2.0, 0.0), zero);

    // E2 rows 2–3.
    set_block(&mut m, 2, 2, Complex64::new(p.delta_s, -p.gamma_perp), zero);
    set_jz(&mut m, 2, -2.0 * wj);
    set_block(&mut m, 2, 5, Complex64::new(-2.0 * l, 0.0), zero);

    // e3 row 4 (real equation).
    m[(4, 2)] = 2.0 * wj.im;
    m[(4, 3)] = -2.0 * wj.re;
    m[(4, 4)] = -p.gamma_par;
    m[(4, 8)] = 2.0 * l;

    // E4 rows 5–6.
    set_block(
        &mut m,
        5,
        0,
        -Complex64::i() * p.gamma_par + l * (ap - ap.conj()) - wj.conj() * jm,
        zero,
    );
    set_block(&mut m, 5, 2, (l / 2.0) * jz - wj.conj() * a, zero);
    set_jz(&mut m, 5, (l / 2.0) * jm + wa);
    set_block(
        &mut m,
        5,
        5,
        Complex64::new(p.delta_c, -(kappa + p.gamma_par)),
        zero,
    );
    set_block(&mut m, 5, 7, l * a + wj, -l * a);

    // E5 rows 7–8.
    set_block(&mut m, 7, 0, zero, 2.0 * l * za);
    set_block(&mut m, 7, 2, (l / 2.0) * jm.conj(), (l / 2.0) * jm + wa);
    set_block(&mut m, 7, 5, 2.0 * l * a.conj() + 2.0 * wj.conj(), zero);
    set_block(
        &mut m,
        7,
        7,
        Complex64::new(p.delta_c - p.delta_s, -(kappa + p.gamma_perp)),
        zero,
    );
    m
}

/// Newton-solve the nine-real cumulant system. Default tolerance 1e−10; the
/// usual initial guess is the factorized lift of a mean-field root.
pub fn solve_cumulant(params: &ModelParams, initial: &CumulantState) -> Result<CumulantSolution> {
    solve_cumulant_with(
        params,
        initial,
        &SolveOptions {
            tol: 1e-10,
            ..SolveOptions::default()
        },
    )
}

/// [`solve_cumulant`] with explicit solver options.
pub fn solve_cumulant_with(
    params: &ModelParams,
    initial: &CumulantState,
    opts: &SolveOptions,
) -> Result<CumulantSolution> {
    params.validate()?;
    if !initial.is_finite() {
        return Err(Error::InvalidParameter(
            "initial cumulant state is not finite".into(),
        ));
    }
    let mut x = Vector9::from(initial.to_array());
    let mut r = Vector9::from(cumulant_residual(params, &CumulantState::from_array(x.into())));
    let mut n = r.norm();
    for iter in 0..opts.max_iter {
        if n < opts.tol {
            return Ok(CumulantSolution {
                state: CumulantState::from_array(x.into()),
                residual_norm: n,
            });
        }
        let state = CumulantState::from_array(x.into());
        let jac = cumulant_jacobian(params, &state);
        let step = match jac.lu().solve(&(-r)) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => {
                let svd = jac.svd(true, true);
                svd.solve(&(-r), 1e-14)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?
            }
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let x_try = x + t * step;
            let r_try =
                Vector9::from(cumulant_residual(params, &CumulantState::from_array(x_try.into())));
            let n_try = r_try.norm();
            if n_try.is_finite() && n_try < n * (1.0 - 1e-4 * t) {
                x = x_try;
                r = r_try;
                n = n_try;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: n,
                last: x.iter().copied().collect(),
            });
        }
    }
    if n < opts.tol {
        return Ok(CumulantSolution {
            state: CumulantState::from_array(x.into()),
            residual_norm: n,
        });
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: n,
        last: x.iter().copied().collect(),
    })
}
