//! Mean-field steady states of the driven Tavis–Cummings model: residual
//! evaluation, damped-Newton root finding, linear stability, and multi-start
//! enumeration of coexisting branches.
//!
//! All coordinates are scaled: cavity amplitude ⟨a⟩/√N, spin coherence
//! ⟨J−⟩/(N/2), inversion ⟨Jz⟩/(N/2) — five real numbers per state. The cavity
//! steady-state condition is linear in the amplitude, so root-finding runs in
//! a reduced three-real system (coherence + inversion) with the amplitude
//! reconstructed afterward.
//!
//! Two structural special cases are handled throughout:
//!
//! * **Exact drive matching** (residual drive zero): the equations are
//!   invariant under a common phase rotation of the cavity amplitude, the
//!   coherence and the drives, so broken-symmetry roots come in circles. The
//!   solver then works in the gauge slice Im ⟨J−⟩ = 0 and reports the
//!   representative with real coherence ≥ 0.
//! * **Rate-free flow** (κ = γ⊥ = γ∥ = 0): the flow conserves the spin length
//!   jx² + jy² + jz², making the inversion equation vanish identically on the
//!   solution manifold. The unit-spin-length constraint |jm|² + jz² = 1, which
//!   every pure-state fixed point satisfies, stands in for it.

mod continuation;

pub use continuation::{continue_branch, ContinuationOptions};

use nalgebra::{Matrix3, Matrix5, Schur, Vector3};
use num_complex::Complex64;

use crate::model::{ModelParams, MATCH_TOL};
use crate::{Error, Result};

/// Scaled expectation values of one mean-field state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldState {
    /// Cavity amplitude ⟨a⟩/√N.
    pub a_mean: Complex64,
    /// Spin-lowering amplitude ⟨J−⟩/(N/2); ⟨J+⟩ is implicitly its conjugate.
    pub jm: Complex64,
    /// Inversion ⟨Jz⟩/(N/2) ∈ [−1, 1].
    pub jz: f64,
}

impl MeanFieldState {
    pub fn new(a_mean: Complex64, jm: Complex64, jz: f64) -> Self {
        MeanFieldState { a_mean, jm, jz }
    }

    /// The all-spins-down state with the cavity displaced by the drive:
    /// jz = −1, jm = 0, ⟨a⟩/√N = −(Ωa/√N)/(Δc − iκ).
    pub fn trivial(params: &ModelParams) -> Self {
        let a = -params.omega_a / Complex64::new(params.delta_c, -params.kappa());
        MeanFieldState::new(a, Complex64::ZERO, -1.0)
    }

    /// Copy with a small real coherence added — the standard seed for leaving
    /// the jm = 0 invariant manifold in the superradiant phase.
    pub fn with_jm_seed(mut self, eps: f64) -> Self {
        self.jm += Complex64::new(eps, 0.0);
        self
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.a_mean.re,
            self.a_mean.im,
            self.jm.re,
            self.jm.im,
            self.jz,
        ]
    }

    pub fn from_array(x: [f64; 5]) -> Self {
        MeanFieldState::new(
            Complex64::new(x[0], x[1]),
            Complex64::new(x[2], x[3]),
            x[4],
        )
    }

    /// Euclidean distance in the five real coordinates.
    pub fn distance(&self, other: &Self) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Spin length jx² + jy² + jz² of this state (1 when conserved).
    pub fn spin_length(&self) -> f64 {
        self.jm.norm_sqr() + self.jz * self.jz
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Linear stability of a root under the mean-field flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A converged steady-state root with its certificate.
#[derive(Debug, Clone)]
pub struct SteadySolution {
    pub state: MeanFieldState,
    /// Euclidean norm of the five steady-state residuals at the root.
    pub residual_norm: f64,
    pub stability: Stability,
    /// Eigenvalues of the linearized flow, sorted by descending real part.
    pub eigenvalues: [Complex64; 5],
    /// Label distinguishing coexisting branches; assignment is up to the
    /// producing operation (enumeration order, continuation trace id, ...).
    pub branch_id: usize,
}

/// Solver knobs. The defaults match the documented tolerances: Newton stops
/// at residual norm 1e−11 and distinct roots are separated by more than 1e−7.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub dedup_distance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-11,
            max_iter: 200,
            dedup_distance: 1e-7,
        }
    }
}

/// Residual norm above which a state no longer counts as a root for
/// classification purposes.
pub const CLASSIFY_ROOT_TOL: f64 = 1e-9;

/// Real-part band inside which an eigenvalue counts as neutral.
pub const MARGIN_BAND: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Flow and residual.
// ---------------------------------------------------------------------------

/// Time derivatives of the five real coordinates under the mean-field flow:
///
/// ```text
/// d⟨a⟩/dt  = −i(Δc − iκ)⟨a⟩ − i(λ/2)⟨J−⟩ − iΩa          (scaled)
/// d⟨J−⟩/dt = −i(Δs − iγ⊥)⟨J−⟩ + 2i⟨Jz⟩(λ⟨a⟩ + ΩJ)
/// d⟨Jz⟩/dt = 2 Im[(λ⟨a⟩ + ΩJ)⟨J+⟩] − γ∥(1 + ⟨Jz⟩)
/// ```
pub fn flow(params: &ModelParams, state: &MeanFieldState) -> [f64; 5] {
    let kappa = params.kappa();
    let u = params.lambda * state.a_mean + params.omega_j;
    let da = -Complex64::new(kappa, params.delta_c) * state.a_mean
        - Complex64::new(0.0, params.lambda / 2.0) * state.jm
        - Complex64::new(0.0, 1.0) * params.omega_a;
    let djm = -Complex64::new(params.gamma_perp, params.delta_s) * state.jm
        + Complex64::new(0.0, 2.0 * state.jz) * u;
    let djz = 2.0 * (u * state.jm.conj()).im - params.gamma_par * (1.0 + state.jz);
    [da.re, da.im, djm.re, djm.im, djz]
}

/// Jacobian of [`flow`] with respect to the five real coordinates.
pub fn flow_jacobian(params: &ModelParams, state: &MeanFieldState) -> Matrix5<f64> {
    let kappa = params.kappa();
    let (dc, ds) = (params.delta_c, params.delta_s);
    let (gp, gl) = (params.gamma_perp, params.gamma_par);
    let l = params.lambda;
    let u = l * state.a_mean + params.omega_j;
    let (m1, m2) = (state.jm.re, state.jm.im);
    let jz = state.jz;
    Matrix5::new(
        -kappa, dc, 0.0, l / 2.0, 0.0, //
        -dc, -kappa, -l / 2.0, 0.0, 0.0, //
        0.0, -2.0 * l * jz, -gp, ds, -2.0 * u.im, //
        2.0 * l * jz, 0.0, -ds, -gp, 2.0 * u.re, //
        -2.0 * l * m2, 2.0 * l * m1, 2.0 * u.im, -2.0 * u.re, -gl,
    )
}

/// The five steady-state residuals. The two complex conditions are the flow
/// equations multiplied by i (an isometry, so the norms agree with the flow);
/// the inversion condition is purely imaginary by construction — its left side
/// divided by i is returned as the fifth, real component.
pub fn residual(params: &ModelParams, state: &MeanFieldState) -> [f64; 5] {
    let kappa = params.kappa();
    let u = params.lambda * state.a_mean + params.omega_j;
    let r1 = Complex64::new(params.delta_c, -kappa) * state.a_mean
        + params.lambda / 2.0 * state.jm
        + params.omega_a;
    let r2 = Complex64::new(params.delta_s, -params.gamma_perp) * state.jm - 2.0 * state.jz * u;
    let r3 = 2.0 * (u * state.jm.conj()).im - params.gamma_par * (1.0 + state.jz);
    [r1.re, r1.im, r2.re, r2.im, r3]
}

/// Euclidean norm of [`residual`].
pub fn residual_norm(params: &ModelParams, state: &MeanFieldState) -> f64 {
    residual(params, state)
        .iter()
        .map(|r| r * r)
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Reduced system: cavity amplitude eliminated.
// ---------------------------------------------------------------------------

/// Steady-state problem with the cavity amplitude eliminated through the
/// (linear) cavity condition: ⟨a⟩ = a_coef·⟨J−⟩ + a_off. The remaining
/// unknowns are (Re jm, Im jm, jz).
pub(crate) struct Reduced {
    params: ModelParams,
    /// d⟨a⟩/d⟨J−⟩ = −(λ/2)/(Δc − iκ).
    a_coef: Complex64,
    /// Drive part −(Ωa/√N)/(Δc − iκ) — the displacement of the trivial state.
    a_off: Complex64,
    /// Drives cancel: phase-rotation gauge freedom present.
    pub matched: bool,
    /// Conservative flow: inversion equation replaced by the spin-length
    /// constraint.
    pub rate_free: bool,
}

impl Reduced {
    pub(crate) fn new(params: &ModelParams) -> Self {
        let kappa = params.kappa();
        let denom = Complex64::new(params.delta_c, -kappa);
        let a_coef = -(params.lambda / 2.0) / denom;
        let a_off = -params.omega_a / denom;
        let drive = params.lambda * a_off + params.omega_j;
        let scale = (params.lambda * a_off).norm().max(params.omega_j.norm());
        let matched = drive.norm() <= MATCH_TOL * scale || scale == 0.0;
        Reduced {
            params: params.clone(),
            a_coef,
            a_off,
            matched,
            rate_free: params.is_rate_free(),
        }
    }

    pub(crate) fn a_mean(&self, jm: Complex64) -> Complex64 {
        self.a_coef * jm + self.a_off
    }

    fn pack(&self, state: &MeanFieldState) -> Vector3<f64> {
        if self.matched {
            Vector3::new(state.jm.norm(), 0.0, state.jz)
        } else {
            Vector3::new(state.jm.re, state.jm.im, state.jz)
        }
    }

    pub(crate) fn unpack(&self, v: &Vector3<f64>) -> MeanFieldState {
        let jm = Complex64::new(v.x, v.y);
        MeanFieldState::new(self.a_mean(jm), jm, v.z)
    }

    /// The three reduced residuals: the complex coherence condition split in
    /// two, then the inversion condition (or the spin-length constraint when
    /// the flow is conservative).
    fn residual3(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let p = &self.params;
        let jm = Complex64::new(v.x, v.y);
        let jz = v.z;
        let u = p.lambda * self.a_mean(jm) + p.omega_j;
        let g2 = Complex64::new(p.delta_s, -p.gamma_perp) * jm - 2.0 * jz * u;
        let g3 = if self.rate_free {
            v.x * v.x + v.y * v.y + jz * jz - 1.0
        } else {
            2.0 * (u * jm.conj()).im - p.gamma_par * (1.0 + jz)
        };
        Vector3::new(g2.re, g2.im, g3)
    }

    /// Analytic Jacobian of [`Reduced::residual3`]; columns (Re jm, Im jm, jz).
    fn jacobian3(&self, v: &Vector3<f64>) -> Matrix3<f64> {
        let p = &self.params;
        let jm = Complex64::new(v.x, v.y);
        let jz = v.z;
        let u = p.lambda * self.a_mean(jm) + p.omega_j;
        let la = p.lambda * self.a_coef;
        // dG2/d(Re jm) is w; dG2/d(Im jm) is i·w.
        let w = Complex64::new(p.delta_s, -p.gamma_perp) - 2.0 * jz * la;
        let r0 = [w.re, -w.im, -2.0 * u.re];
        let r1 = [w.im, w.re, -2.0 * u.im];
        let r2 = if self.rate_free {
            [2.0 * v.x, 2.0 * v.y, 2.0 * jz]
        } else {
            [
                2.0 * (la.im * v.x + u.im - la.re * v.y),
                2.0 * (la.re * v.x - u.re + la.im * v.y),
                -p.gamma_par,
            ]
        };
        Matrix3::new(
            r0[0], r0[1], r0[2], //
            r1[0], r1[1], r1[2], //
            r2[0], r2[1], r2[2],
        )
    }

    /// Damped Newton (Gauss–Newton in the matched gauge slice, where the
    /// three conditions share a rank-2 Jacobian) from a packed start.
    pub(crate) fn newton(
        &self,
        start: Vector3<f64>,
        opts: &SolveOptions,
    ) -> Result<(Vector3<f64>, f64)> {
        let mut v = start;
        if self.matched {
            v.y = 0.0;
        }
        let mut r = self.residual3(&v);
        let mut n = r.norm();
        for iter in 0..opts.max_iter {
            if n < opts.tol {
                return Ok((v, n));
            }
            let j = self.jacobian3(&v);
            let step = self.solve_step(&j, &r)?;
            let mut accepted = false;
            let mut t = 1.0;
            for _ in 0..40 {
                let mut trial = v + t * step;
                if self.matched {
                    trial.y = 0.0;
                }
                let r_try = self.residual3(&trial);
                let n_try = r_try.norm();
                if n_try.is_finite() && n_try < n * (1.0 - 1e-4 * t) {
                    v = trial;
                    r = r_try;
                    n = n_try;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                let last = self.unpack(&v);
                return Err(Error::NoConvergence {
                    iterations: iter,
                    residual: n,
                    last: last.to_array().to_vec(),
                });
            }
        }
        if n < opts.tol {
            return Ok((v, n));
        }
        let last = self.unpack(&v);
        Err(Error::NoConvergence {
            iterations: opts.max_iter,
            residual: n,
            last: last.to_array().to_vec(),
        })
    }

    fn solve_step(&self, j: &Matrix3<f64>, r: &Vector3<f64>) -> Result<Vector3<f64>> {
        if self.matched {
            // Gauge slice Im jm = 0: solve the 3×2 least-squares problem in
            // (Re jm, jz). The three conditions are consistent at roots, so
            // Gauss–Newton retains quadratic convergence.
            let jm = nalgebra::Matrix3x2::new(
                j[(0, 0)],
                j[(0, 2)],
                j[(1, 0)],
                j[(1, 2)],
                j[(2, 0)],
                j[(2, 2)],
            );
            let svd = jm.svd(true, true);
            let sol = svd
                .solve(&(-r), 1e-14)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(Vector3::new(sol.x, 0.0, sol.y))
        } else {
            match j.lu().solve(&(-r)) {
                Some(step) if step.iter().all(|x| x.is_finite()) => Ok(step),
                _ => {
                    // Singular Jacobian (fold or transition point): fall back
                    // to the pseudo-inverse step.
                    let svd = j.svd(true, true);
                    let sol = svd
                        .solve(&(-r), 1e-14)
                        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                    Ok(sol)
                }
            }
        }
    }

    /// Gauge-fix a converged reduced vector: under matching the reported
    /// representative has real coherence ≥ 0.
    fn gauge_fix(&self, mut v: Vector3<f64>) -> Vector3<f64> {
        if self.matched {
            v.x = v.x.abs();
            v.y = 0.0;
        }
        v
    }
}

// ---------------------------------------------------------------------------
// Public solver entry points.
// ---------------------------------------------------------------------------

/// Newton-solve the steady-state system from an initial state, with default
/// options: tolerance 1e−11, at most 200 iterations.
pub fn solve_from(params: &ModelParams, initial: &MeanFieldState) -> Result<SteadySolution> {
    solve_from_with(params, initial, &SolveOptions::default())
}

/// [`solve_from`] with explicit solver options.
pub fn solve_from_with(
    params: &ModelParams,
    initial: &MeanFieldState,
    opts: &SolveOptions,
) -> Result<SteadySolution> {
    params.validate()?;
    if !initial.is_finite() {
        return Err(Error::InvalidParameter(
            "initial state is not finite".into(),
        ));
    }
    let sys = Reduced::new(params);
    let (v, _) = sys.newton(sys.pack(initial), opts)?;
    finish_root(params, &sys, v, 0)
}

fn finish_root(
    params: &ModelParams,
    sys: &Reduced,
    v: Vector3<f64>,
    branch_id: usize,
) -> Result<SteadySolution> {
    let state = sys.unpack(&sys.gauge_fix(v));
    let res = residual_norm(params, &state);
    let (stability, eigenvalues) = classify(params, &state)?;
    Ok(SteadySolution {
        state,
        residual_norm: res,
        stability,
        eigenvalues,
        branch_id,
    })
}

/// Linear stability of a root: eigenvalues of the flow Jacobian, stable iff
/// every real part is below −1e−9, unstable iff any exceeds +1e−9, marginal
/// otherwise. Rate-free flows are conservative and always report marginal.
pub fn classify(
    params: &ModelParams,
    state: &MeanFieldState,
) -> Result<(Stability, [Complex64; 5])> {
    let res = residual_norm(params, state);
    if !res.is_finite() || res > CLASSIFY_ROOT_TOL {
        return Err(Error::NotARoot { residual: res });
    }
    let jac = flow_jacobian(params, state);
    let eig = spectrum(&jac).ok_or(Error::NoConvergence {
        iterations: SPECTRUM_MAX_ITER,
        residual: f64::NAN,
        last: state.to_array().to_vec(),
    })?;
    let mut eigenvalues = [Complex64::ZERO; 5];
    for (slot, value) in eigenvalues.iter_mut().zip(eig.iter()) {
        *slot = *value;
    }
    eigenvalues.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));

    let stability = if params.is_rate_free() {
        Stability::Marginal
    } else {
        let max_re = eigenvalues[0].re;
        if eigenvalues.iter().any(|e| e.re > MARGIN_BAND) {
            Stability::Unstable
        } else if max_re < -MARGIN_BAND && eigenvalues.iter().all(|e| e.re < -MARGIN_BAND) {
            Stability::Stable
        } else {
            Stability::Marginal
        }
    };
    Ok((stability, eigenvalues))
}

/// Iteration budget per Schur attempt in [`spectrum`].
const SPECTRUM_MAX_ITER: usize = 1_000;

/// Eigenvalues of a real 5×5 matrix via bounded-iteration Schur reduction.
///
/// The convenience eigenvalue routine iterates without a bound and deflates
/// on a threshold proportional to adjacent diagonal entries, so it cycles
/// forever (or, bounded, burns the whole budget) on matrices whose diagonal
/// stays exactly zero — precisely the shape of the flow Jacobian around
/// symmetric roots of a conservative flow (eigenvalue quadruples ±σ ± iω).
/// A fixed orthogonal conjugation preserves the spectrum exactly while making
/// the entries generic enough to deflate, so it is applied up front; the
/// unconjugated matrix and a slightly wider tolerance are the fallbacks.
fn spectrum(m: &Matrix5<f64>) -> Option<nalgebra::Vector5<Complex64>> {
    let q = mixing_rotation();
    let conjugated = q * m * q.transpose();
    for eps in [1e-15, 1e-13, 1e-11] {
        if let Some(schur) = Schur::try_new(conjugated, eps, SPECTRUM_MAX_ITER) {
            return Some(schur.complex_eigenvalues());
        }
    }
    Schur::try_new(*m, 1e-15, SPECTRUM_MAX_ITER).map(|schur| schur.complex_eigenvalues())
}

/// Deterministic dense orthogonal matrix used by [`spectrum`] to scramble
/// structured Jacobians before the Schur reduction.
fn mixing_rotation() -> Matrix5<f64> {
    let mut q = Matrix5::identity();
    let (s, c) = 0.912_587_662_447f64.sin_cos();
    for (i, j) in [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (1, 3), (2, 4)] {
        let mut g = Matrix5::identity();
        g[(i, i)] = c;
        g[(j, j)] = c;
        g[(i, j)] = -s;
        g[(j, i)] = s;
        q = g * q;
    }
    q
}

/// Initial-guess lattice for [`find_all`]: inversion in [−1, 1], coherence
/// magnitude in [0, 1], coherence phase in [0, 2π). The cavity amplitude is
/// eliminated and needs no starts. Zero-magnitude rows collapse to a single
/// phase, and under exact matching the phase dimension is redundant (any root
/// is a phase rotation of a real-coherence one), so those starts collapse too.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub jz_points: usize,
    pub jm_points: usize,
    pub phase_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            jz_points: 9,
            jm_points: 6,
            phase_points: 8,
        }
    }
}

impl GridSpec {
    /// A lattice with `n` points along every axis.
    pub fn cube(n: usize) -> Self {
        GridSpec {
            jz_points: n,
            jm_points: n,
            phase_points: n,
        }
    }

    fn starts(&self, matched: bool) -> Vec<Vector3<f64>> {
        let mut out = Vec::new();
        let jz_n = self.jz_points.max(2);
        let jm_n = self.jm_points.max(2);
        for i in 0..jz_n {
            let jz = -1.0 + 2.0 * i as f64 / (jz_n - 1) as f64;
            for k in 0..jm_n {
                let r = k as f64 / (jm_n - 1) as f64;
                if r == 0.0 {
                    out.push(Vector3::new(0.0, 0.0, jz));
                    continue;
                }
                if matched {
                    out.push(Vector3::new(r, 0.0, jz));
                    continue;
                }
                for q in 0..self.phase_points.max(1) {
                    let phase = 2.0 * std::f64::consts::PI * q as f64
                        / self.phase_points.max(1) as f64;
                    out.push(Vector3::new(r * phase.cos(), r * phase.sin(), jz));
                }
            }
        }
        out
    }
}

/// Slack allowed on the spin-length bound when filtering unphysical roots.
const PHYSICAL_SLACK: f64 = 1e-9;

/// Enumerate steady-state roots by damped Newton from a lattice of starts,
/// keeping physically admissible roots (spin length ≤ 1), deduplicated by
/// state distance and sorted by inversion. Branch ids follow that order.
pub fn find_all(params: &ModelParams, grid: &GridSpec) -> Result<Vec<SteadySolution>> {
    find_all_with(params, grid, &SolveOptions::default())
}

/// [`find_all`] with explicit solver options.
pub fn find_all_with(
    params: &ModelParams,
    grid: &GridSpec,
    opts: &SolveOptions,
) -> Result<Vec<SteadySolution>> {
    params.validate()?;
    let sys = Reduced::new(params);
    let starts = grid.starts(sys.matched);
    let attempted = starts.len();

    let mut converged: Vec<(Vector3<f64>, f64)> = Vec::new();
    for start in starts {
        if let Ok((v, n)) = sys.newton(start, opts) {
            let v = sys.gauge_fix(v);
            let length = v.x * v.x + v.y * v.y + v.z * v.z;
            if length <= 1.0 + PHYSICAL_SLACK {
                converged.push((v, n));
            }
        }
    }

    // Deduplicate: best residual first, keep roots farther apart than the
    // dedup distance (measured over all five coordinates).
    converged.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(a.0.z.total_cmp(&b.0.z))
            .then(a.0.x.total_cmp(&b.0.x))
            .then(a.0.y.total_cmp(&b.0.y))
    });
    let mut distinct: Vec<MeanFieldState> = Vec::new();
    for (v, _) in &converged {
        let state = sys.unpack(v);
        if distinct
            .iter()
            .all(|kept| kept.distance(&state) > opts.dedup_distance)
        {
            distinct.push(state);
        }
    }
    if distinct.is_empty() {
        return Err(Error::NoRoots { starts: attempted });
    }

    distinct.sort_by(|a, b| {
        a.jz.total_cmp(&b.jz)
            .then(a.jm.norm().total_cmp(&b.jm.norm()))
            .then(a.jm.arg().total_cmp(&b.jm.arg()))
    });
    distinct
        .into_iter()
        .enumerate()
        .map(|(id, state)| {
            let res = residual_norm(params, &state);
            let (stability, eigenvalues) = classify(params, &state)?;
            Ok(SteadySolution {
                state,
                residual_norm: res,
                stability,
                eigenvalues,
                branch_id: id,
            })
        })
        .collect()
}
