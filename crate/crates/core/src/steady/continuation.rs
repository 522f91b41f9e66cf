//! Branch continuation along a one-parameter family of models.
//!
//! Natural stepping (secant predictor + Newton corrector at fixed parameter)
//! covers smooth branch segments. When the corrector keeps failing or lands
//! far from the predictor — the signature of a fold, where the branch turns
//! around in the parameter — the tracer switches to pseudo-arclength
//! stepping: predictor along the branch tangent, corrector in the hyperplane
//! orthogonal to it, which walks through folds and around closed loops.

use nalgebra::{Matrix4, Vector3, Vector4};

use crate::model::ModelParams;
use crate::steady::{finish_root, Reduced, SolveOptions, SteadySolution};
use crate::sweep::{SweepRecord, SweepResult};
use crate::Result;

/// Continuation knobs. Step sizes default to fractions of the sweep span:
/// initial span/200, maximum span/50. A trace whose step underflows
/// `min_step_frac`·span stops and is flagged stalled.
#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    pub min_step_frac: f64,
    /// Safety cap on recorded points per trace.
    pub max_points: usize,
    pub solve: SolveOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            initial_step: None,
            max_step: None,
            min_step_frac: 1e-10,
            max_points: 50_000,
            solve: SolveOptions::default(),
        }
    }
}

/// Natural-mode guard: a corrector result farther from the predictor than
/// `max(JUMP_FACTOR·previous increment, JUMP_FLOOR)` is a branch jump and is
/// rejected. The floor keeps first steps honest; the scaling keeps steep but
/// smooth segments (square-root growth at a transition) from false-triggering.
const JUMP_FACTOR: f64 = 12.0;
const JUMP_FLOOR: f64 = 0.02;

/// Trace one steady-state branch over `range` of the parameter `param_name`,
/// where `build` produces the full model at a given parameter value and
/// `seed` is a converged root at the start of the range. Returns every
/// accepted point as a sweep record in trace order, fold points marked. A
/// zero-length range yields the single re-converged seed.
pub fn continue_branch<F>(
    param_name: &str,
    build: F,
    range: (f64, f64),
    seed: &SteadySolution,
    opts: &ContinuationOptions,
) -> Result<SweepResult>
where
    F: Fn(f64) -> ModelParams,
{
    let (t0, t1) = range;
    let p0 = build(t0);
    p0.validate()?;
    let sys0 = Reduced::new(&p0);
    let (v0, _) = sys0.newton(sys0.pack(&seed.state), &opts.solve)?;

    let mut result = SweepResult::new(param_name, p0.clone());
    let span = (t1 - t0).abs();
    if span == 0.0 {
        let solution = finish_root(&p0, &sys0, v0, 0)?;
        result.records.push(SweepRecord {
            value: t0,
            solution,
            arc_index: 0,
            fold: false,
        });
        result.finalize();
        return Ok(result);
    }

    let tracer = Tracer {
        build: &build,
        opts,
        t_start: t0,
        t_end: t1,
        span,
        dir: (t1 - t0).signum(),
        matched: sys0.matched,
    };
    let end = tracer.run(t0, v0, &mut result)?;
    match end {
        TraceEnd::Stalled => result.metadata.stalled = true,
        TraceEnd::ClosedLoop => result.metadata.closed_loop = true,
        TraceEnd::Reached | TraceEnd::LeftWindow => {}
    }
    result.finalize();
    Ok(result)
}

enum TraceEnd {
    Reached,
    Stalled,
    LeftWindow,
    ClosedLoop,
}

struct Tracer<'a, F: Fn(f64) -> ModelParams> {
    build: &'a F,
    opts: &'a ContinuationOptions,
    t_start: f64,
    t_end: f64,
    span: f64,
    dir: f64,
    matched: bool,
}

impl<F: Fn(f64) -> ModelParams> Tracer<'_, F> {
    fn stall_step(&self) -> f64 {
        self.opts.min_step_frac * self.span
    }

    fn system_at(&self, t: f64) -> Result<(ModelParams, Reduced)> {
        let params = (self.build)(t);
        params.validate()?;
        let sys = Reduced::new(&params);
        Ok((params, sys))
    }

    fn push(
        &self,
        t: f64,
        v: Vector3<f64>,
        fold: bool,
        result: &mut SweepResult,
    ) -> Result<()> {
        let (params, sys) = self.system_at(t)?;
        let solution = finish_root(&params, &sys, v, 0)?;
        let arc_index = result.records.len();
        result.records.push(SweepRecord {
            value: t,
            solution,
            arc_index,
            fold,
        });
        Ok(())
    }

    fn run(&self, t0: f64, v0: Vector3<f64>, result: &mut SweepResult) -> Result<TraceEnd> {
        let h0 = self.opts.initial_step.unwrap_or(self.span / 200.0).abs();
        let h_max = self.opts.max_step.unwrap_or(self.span / 50.0).abs();
        let h_fail = h0 / 64.0;

        self.push(t0, v0, false, result)?;
        let mut t = t0;
        let mut v = v0;
        let mut prev: Option<(f64, Vector3<f64>)> = None;
        let mut last_inc = 0.0_f64;
        let mut h = h0;

        while (t - self.t_end) * self.dir < 0.0 {
            if result.records.len() >= self.opts.max_points {
                return Ok(TraceEnd::Reached);
            }
            let t_next = if (t + h * self.dir - self.t_end) * self.dir >= 0.0 {
                self.t_end
            } else {
                t + h * self.dir
            };
            let v_pred = match prev {
                Some((tp, vp)) if (t - tp).abs() > 0.0 => {
                    v + (v - vp) * ((t_next - t) / (t - tp))
                }
                _ => v,
            };
            let (_, sys) = self.system_at(t_next)?;
            let jump_tol = (JUMP_FACTOR * last_inc).max(JUMP_FLOOR);
            let accepted = match sys.newton(v_pred, &self.opts.solve) {
                Ok((v_new, _)) if (v_new - v_pred).norm() <= jump_tol => Some(v_new),
                _ => None,
            };
            match accepted {
                Some(v_new) => {
                    last_inc = (v_new - v).norm();
                    prev = Some((t, v));
                    t = t_next;
                    v = v_new;
                    self.push(t, v, false, result)?;
                    h = (h * 1.4).min(h_max);
                }
                None => {
                    h *= 0.5;
                    if h < h_fail {
                        if self.matched {
                            // No fold handling under exact matching (the
                            // gauge circle makes the augmented system
                            // rank-deficient); shrink until stall instead.
                            if h < self.stall_step() {
                                return Ok(TraceEnd::Stalled);
                            }
                        } else {
                            let tangent0 = match prev {
                                Some((tp, vp)) if (t - tp).abs() > 0.0 => {
                                    let mut z = Vector4::new(
                                        v.x - vp.x,
                                        v.y - vp.y,
                                        v.z - vp.z,
                                        t - tp,
                                    );
                                    z.normalize_mut();
                                    z
                                }
                                _ => Vector4::new(0.0, 0.0, 0.0, self.dir),
                            };
                            return self.arclength(t, v, tangent0, h.max(h_fail), result);
                        }
                    }
                }
            }
        }
        Ok(TraceEnd::Reached)
    }

    // -- pseudo-arclength mode ----------------------------------------------

    /// Partial derivative of the reduced residual with respect to the sweep
    /// parameter, by central difference.
    fn dresidual_dt(&self, t: f64, v: &Vector3<f64>) -> Result<Vector3<f64>> {
        let delta = 1e-6 * self.span;
        let (_, hi) = self.system_at(t + delta)?;
        let (_, lo) = self.system_at(t - delta)?;
        Ok((hi.residual3(v) - lo.residual3(v)) / (2.0 * delta))
    }

    /// Bordered system matrix: reduced Jacobian extended by the parameter
    /// column and closed by the tangent row.
    fn bordered(&self, t: f64, v: &Vector3<f64>, tau: &Vector4<f64>) -> Result<Matrix4<f64>> {
        let (_, sys) = self.system_at(t)?;
        let j = sys.jacobian3(v);
        let jt = self.dresidual_dt(t, v)?;
        Ok(Matrix4::new(
            j[(0, 0)],
            j[(0, 1)],
            j[(0, 2)],
            jt.x,
            j[(1, 0)],
            j[(1, 1)],
            j[(1, 2)],
            jt.y,
            j[(2, 0)],
            j[(2, 1)],
            j[(2, 2)],
            jt.z,
            tau.x,
            tau.y,
            tau.z,
            tau.w,
        ))
    }

    /// Unit tangent along the branch, oriented to continue `tau_prev`.
    fn tangent(&self, z: &Vector4<f64>, tau_prev: &Vector4<f64>) -> Result<Vector4<f64>> {
        let v = Vector3::new(z.x, z.y, z.z);
        let m = self.bordered(z.w, &v, tau_prev)?;
        let rhs = Vector4::new(0.0, 0.0, 0.0, 1.0);
        let mut tau = match m.lu().solve(&rhs) {
            Some(x) if x.iter().all(|c| c.is_finite()) && x.norm() > 0.0 => x,
            _ => *tau_prev,
        };
        tau.normalize_mut();
        if tau.dot(tau_prev) < 0.0 {
            tau = -tau;
        }
        Ok(tau)
    }

    /// Newton corrector in the hyperplane through `z_pred` orthogonal to
    /// `tau`. Returns the corrected point or None if it fails to converge.
    fn correct(
        &self,
        z_pred: &Vector4<f64>,
        tau: &Vector4<f64>,
    ) -> Result<Option<Vector4<f64>>> {
        let mut z = *z_pred;
        for _ in 0..14 {
            let v = Vector3::new(z.x, z.y, z.z);
            let sys = match self.system_at(z.w) {
                Ok((_, sys)) => sys,
                Err(_) => return Ok(None),
            };
            let f = sys.residual3(&v);
            let c = tau.dot(&(z - z_pred));
            if f.norm() < self.opts.solve.tol && c.abs() < 10.0 * self.opts.solve.tol {
                return Ok(Some(z));
            }
            let m = self.bordered(z.w, &v, tau)?;
            let rhs = -Vector4::new(f.x, f.y, f.z, c);
            let step = match m.lu().solve(&rhs) {
                Some(s) if s.iter().all(|x| x.is_finite()) => s,
                _ => return Ok(None),
            };
            z += step;
            if !z.iter().all(|x| x.is_finite()) {
                return Ok(None);
            }
        }
        Ok(None)
    }

    fn arclength(
        &self,
        t_in: f64,
        v_in: Vector3<f64>,
        tau_init: Vector4<f64>,
        ds_init: f64,
        result: &mut SweepResult,
    ) -> Result<TraceEnd> {
        let ds_max = 2.0 * self.opts.max_step.unwrap_or(self.span / 50.0).abs();
        let mut z = Vector4::new(v_in.x, v_in.y, v_in.z, t_in);
        let mut tau = self.tangent(&z, &tau_init)?;
        let tau_start = tau;
        let z_start = z;
        let mut ds = ds_init.min(ds_max);
        let mut steps = 0usize;

        loop {
            if result.records.len() >= self.opts.max_points {
                return Ok(TraceEnd::Reached);
            }
            let z_pred = z + ds * tau;
            let corrected = self.correct(&z_pred, &tau)?;
            let z_new = match corrected {
                Some(z_new) => z_new,
                None => {
                    ds *= 0.5;
                    if ds < self.stall_step() {
                        return Ok(TraceEnd::Stalled);
                    }
                    continue;
                }
            };
            let tau_new = self.tangent(&z_new, &tau)?;
            let fold = tau.w * tau_new.w < 0.0;
            z = z_new;
            tau = tau_new;
            steps += 1;
            let v = Vector3::new(z.x, z.y, z.z);
            self.push(z.w, v, fold, result)?;
            ds = (ds * 1.3).min(ds_max);

            // Reached the far end of the window: finish with an exact-end point.
            if (z.w - self.t_end) * self.dir >= 0.0 {
                self.clip_to(self.t_end, &v, result)?;
                return Ok(TraceEnd::Reached);
            }
            // Walked backward out of the window through the start side.
            if (z.w - self.t_start) * self.dir < -0.02 * self.span {
                self.clip_to(self.t_start, &v, result)?;
                return Ok(TraceEnd::LeftWindow);
            }
            // Returned to the starting point: closed loop.
            if steps >= 10 && (z - z_start).norm() < 1.5 * ds && tau.dot(&tau_start) > 0.0 {
                return Ok(TraceEnd::ClosedLoop);
            }
        }
    }

    /// Land exactly on a window edge from the last interior point.
    fn clip_to(&self, t: f64, v: &Vector3<f64>, result: &mut SweepResult) -> Result<()> {
        let (_, sys) = self.system_at(t)?;
        if let Ok((v_end, _)) = sys.newton(*v, &self.opts.solve) {
            if (v_end - v).norm() <= JUMP_FLOOR {
                self.push(t, v_end, false, result)?;
            }
        }
        Ok(())
    }
}
