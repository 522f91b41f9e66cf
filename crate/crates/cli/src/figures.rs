//! Figure-data programs: fixed parameter scripts that regenerate each data
//! set behind the reference figures, at desk scale, as sweeps ready for CSV
//! export.
//!
//! Conventions shared by all programs: the coupling stays at λ = 8 and the
//! cavity drive at Ωa = 1 unless overridden; sweeps vary the detunings
//! through a dimensionless axis (λ/Δc for the threshold figures, Δc/λ for
//! the bistability panels); drives are re-matched at every sweep point. A
//! drive-mismatch factor f means ΩJ = ΩJ,matched / f. Cumulant sweeps report
//! the corrected means but reuse the stability tag of the mean-field branch
//! they correct, since stability is a property of the mean-field flow.

use std::str::FromStr;

use rayon::prelude::*;
use tcqpt_core::analytic::{gain_balanced_order, hermitian_order, ExponentFit};
use tcqpt_core::cumulant::{solve_cumulant, CumulantState};
use tcqpt_core::model::{critical_coupling, gain_balance_rate};
use tcqpt_core::steady::{
    continue_branch, find_all, find_all_with, solve_from, ContinuationOptions, GridSpec,
    SolveOptions,
};
use tcqpt_core::sweep::{SweepRecord, SweepResult};
use tcqpt_core::{
    Error, MeanFieldState, ModelParams, Regime, Result, SteadySolution,
};

/// The reproducible figure data sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// Order parameters vs λ/Δc, Hermitian and gain-balanced.
    Fig2,
    /// Photon number vs λ/Δc, same two sweeps as Fig2.
    Fig3,
    /// Drive-mismatch sensitivity: factors 1.0 / 1.1 / 1.2.
    Fig4a,
    /// Gain-mismatch sensitivity: κg at 1.0 / 1.2 / 1.4 of the balance rate.
    Fig4b,
    /// Mean-field vs cumulant, lossy cavity, matched drives.
    FigS1a,
    /// Mean-field vs cumulant, lossy cavity, drive ratio 1.2× off matching.
    FigS1b,
    /// All branches vs Δc/λ at mismatch factor 0.87.
    FigS2a,
    /// Same at factor 0.77 (bistable window).
    FigS2b,
    /// Same at factor 0.70 (bistable window plus detached loop).
    FigS2c,
    /// Same at factor 0.60.
    FigS2d,
}

impl FigureId {
    pub const ALL: [FigureId; 10] = [
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig4a,
        FigureId::Fig4b,
        FigureId::FigS1a,
        FigureId::FigS1b,
        FigureId::FigS2a,
        FigureId::FigS2b,
        FigureId::FigS2c,
        FigureId::FigS2d,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4a => "fig4a",
            FigureId::Fig4b => "fig4b",
            FigureId::FigS1a => "figS1a",
            FigureId::FigS1b => "figS1b",
            FigureId::FigS2a => "figS2a",
            FigureId::FigS2b => "figS2b",
            FigureId::FigS2c => "figS2c",
            FigureId::FigS2d => "figS2d",
        }
    }
}

impl std::fmt::Display for FigureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        FigureId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(&lower))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown figure '{s}' (expected one of fig2, fig3, fig4a, fig4b, figS1a, figS1b, figS2a..figS2d)"
                ))
            })
    }
}

/// Numeric adjustments applied to a figure's base parameters before the
/// program runs. Keys programmed per sweep point (detunings, matched drives,
/// balanced gain) are recomputed by the program and win over an override.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Sweep density; each figure has its own default.
    pub points: Option<usize>,
    /// (ModelParams key, value) pairs, applied in order.
    pub sets: Vec<(String, f64)>,
}

/// Set one numeric model parameter by its key name.
pub fn set_numeric(params: &mut ModelParams, key: &str, value: f64) -> Result<()> {
    match key {
        "delta_c" => params.delta_c = value,
        "delta_s" => params.delta_s = value,
        "lambda" => params.lambda = value,
        "n_tls" => params.n_tls = value as u64,
        "kappa_c" => params.kappa_c = value,
        "kappa_g" => params.kappa_g = value,
        "gamma_perp" => params.gamma_perp = value,
        "gamma_par" => params.gamma_par = value,
        "omega_a_re" => params.omega_a.re = value,
        "omega_a_im" => params.omega_a.im = value,
        "omega_j_re" => params.omega_j.re = value,
        "omega_j_im" => params.omega_j.im = value,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown parameter key '{other}'"
            )))
        }
    }
    Ok(())
}

fn apply_overrides(params: &mut ModelParams, sets: &[(String, f64)]) -> Result<()> {
    for (key, value) in sets {
        set_numeric(params, key, *value)?;
    }
    Ok(())
}

/// One executed figure program: named sweeps ready for export under
/// `{figure}-{label}` stems.
#[derive(Debug, Clone)]
pub struct FigureRun {
    pub id: FigureId,
    pub sweeps: Vec<(String, SweepResult)>,
}

/// Execute the parameter program of `id`. Sweep points run on the rayon
/// pool; record order is deterministic.
pub fn run_figure(id: FigureId, overrides: &Overrides) -> Result<FigureRun> {
    let sweeps = match id {
        FigureId::Fig2 | FigureId::Fig3 => coupling_sweeps(overrides)?,
        FigureId::Fig4a => drive_mismatch_sweeps(overrides)?,
        FigureId::Fig4b => gain_mismatch_sweeps(overrides)?,
        FigureId::FigS1a => cumulant_sweeps(overrides, 1.0)?,
        FigureId::FigS1b => cumulant_sweeps(overrides, 1.2)?,
        FigureId::FigS2a => bistability_sweeps(overrides, 0.87)?,
        FigureId::FigS2b => bistability_sweeps(overrides, 0.77)?,
        FigureId::FigS2c => bistability_sweeps(overrides, 0.70)?,
        FigureId::FigS2d => bistability_sweeps(overrides, 0.60)?,
    };
    Ok(FigureRun { id, sweeps })
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Base parameters shared by every figure before program-specific edits:
/// λ = 8, Ωa = 1, unit cavity loss, unit decoherence, γ∥ = 0.1.
fn figure_base(overrides: &Overrides) -> Result<ModelParams> {
    let mut params = ModelParams {
        delta_c: 8.0,
        delta_s: 8.0,
        lambda: 8.0,
        kappa_c: 1.0,
        gamma_perp: 1.0,
        gamma_par: 0.1,
        omega_a: num_complex::Complex64::new(1.0, 0.0),
        ..ModelParams::default()
    };
    apply_overrides(&mut params, &overrides.sets)?;
    Ok(params)
}

/// Gain-balanced model at coupling ratio x = λ/Δc: detunings λ/x, gain at
/// the balance rate, drives matched.
fn gain_balanced_point(base: &ModelParams, x: f64) -> Result<ModelParams> {
    let delta = base.lambda / x;
    let mut params = ModelParams {
        delta_c: delta,
        delta_s: delta,
        ..base.clone()
    };
    params.kappa_g = gain_balance_rate(&params)?;
    params.with_matched_drives(Regime::GainBalanced, base.omega_a)
}

/// Rate-free model at coupling ratio x = λ/Δc with Hermitian matching.
fn hermitian_point(base: &ModelParams, x: f64) -> Result<ModelParams> {
    let delta = base.lambda / x;
    let params = ModelParams {
        delta_c: delta,
        delta_s: delta,
        kappa_c: 0.0,
        kappa_g: 0.0,
        gamma_perp: 0.0,
        gamma_par: 0.0,
        ..base.clone()
    };
    params.with_matched_drives(Regime::Hermitian, base.omega_a)
}

/// Lossy model at inverse ratio x = Δc/λ (κg = 0), drives matched then
/// divided by `factor`.
fn lossy_point(base: &ModelParams, x: f64, factor: f64) -> Result<ModelParams> {
    let delta = base.lambda * x;
    let params = ModelParams {
        delta_c: delta,
        delta_s: delta,
        kappa_g: 0.0,
        ..base.clone()
    };
    let mut params = params.with_matched_drives(Regime::Lossy, base.omega_a)?;
    params.omega_j /= factor;
    Ok(params)
}

/// The plotted branch at one sweep point: the root with the largest
/// coherence — superradiant where one exists. Coherence-free roots tie-break
/// toward the lowest inversion, so a conservative model reports its jz = −1
/// root rather than the inverted jz = +1 one below threshold.
fn principal_root(params: &ModelParams) -> Result<SteadySolution> {
    let roots = find_all(params, &GridSpec::default())?;
    Ok(roots
        .into_iter()
        .max_by(|a, b| {
            a.state
                .jm
                .norm()
                .total_cmp(&b.state.jm.norm())
                .then(b.state.jz.total_cmp(&a.state.jz))
        })
        .expect("find_all returns at least one root"))
}

fn record(value: f64, arc_index: usize, mut solution: SteadySolution) -> SweepRecord {
    solution.branch_id = 0;
    SweepRecord {
        value,
        solution,
        arc_index,
        fold: false,
    }
}

/// One single-branch sweep over precomputed points, evaluated in parallel.
fn scan_sweep<B>(param_name: &str, xs: &[f64], regime: Regime, build: B) -> Result<SweepResult>
where
    B: Fn(f64) -> Result<ModelParams> + Sync,
{
    let records: Vec<SweepRecord> = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| -> Result<SweepRecord> {
            let params = build(x)?;
            Ok(record(x, i, principal_root(&params)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = SweepResult::new(param_name, build(xs[0])?);
    result.metadata.regime = Some(regime);
    result.records = records;
    result.finalize();
    Ok(result)
}

/// fig2/fig3: λ/Δc ∈ [0.5, 2], 501 points, Hermitian and gain-balanced,
/// with the closed-form branch attached as an overlay.
fn coupling_sweeps(overrides: &Overrides) -> Result<Vec<(String, SweepResult)>> {
    let base = figure_base(overrides)?;
    let xs = linspace(0.5, 2.0, overrides.points.unwrap_or(501));

    let mut hermitian = scan_sweep("lambda_over_delta_c", &xs, Regime::Hermitian, |x| {
        hermitian_point(&base, x)
    })?;
    hermitian.analytic_overlay = Some(
        xs.iter()
            .map(|&x| {
                let p = hermitian_point(&base, x)?;
                Ok((x, hermitian_order(&p, p.lambda)))
            })
            .collect::<Result<Vec<_>>>()?,
    );

    let mut balanced = scan_sweep("lambda_over_delta_c", &xs, Regime::GainBalanced, |x| {
        gain_balanced_point(&base, x)
    })?;
    balanced.analytic_overlay = Some(
        xs.iter()
            .map(|&x| {
                let p = gain_balanced_point(&base, x)?;
                Ok((x, gain_balanced_order(&p, p.lambda)))
            })
            .collect::<Result<Vec<_>>>()?,
    );

    Ok(vec![
        ("hermitian".into(), hermitian),
        ("gain-balanced".into(), balanced),
    ])
}

/// fig4a: gain-balanced sweeps at drive-mismatch factors 1.0 / 1.1 / 1.2.
fn drive_mismatch_sweeps(overrides: &Overrides) -> Result<Vec<(String, SweepResult)>> {
    let base = figure_base(overrides)?;
    let xs = linspace(0.5, 2.0, overrides.points.unwrap_or(501));
    [1.0, 1.1, 1.2]
        .iter()
        .map(|&factor| {
            let sweep = scan_sweep("lambda_over_delta_c", &xs, Regime::GainBalanced, |x| {
                let mut params = gain_balanced_point(&base, x)?;
                params.omega_j /= factor;
                Ok(params)
            })?;
            Ok((format!("factor-{factor}"), sweep))
        })
        .collect()
}

/// fig4b: drives stay at the balanced ratio while the actual gain runs at
/// 1.0 / 1.2 / 1.4 of the balance rate.
fn gain_mismatch_sweeps(overrides: &Overrides) -> Result<Vec<(String, SweepResult)>> {
    let base = figure_base(overrides)?;
    let xs = linspace(0.5, 2.0, overrides.points.unwrap_or(501));
    [1.0, 1.2, 1.4]
        .iter()
        .map(|&factor| {
            let sweep = scan_sweep("lambda_over_delta_c", &xs, Regime::GainBalanced, |x| {
                let mut params = gain_balanced_point(&base, x)?;
                params.kappa_g *= factor;
                Ok(params)
            })?;
            Ok((format!("gain-{factor}"), sweep))
        })
        .collect()
}

/// figS1: lossy cavity, mean-field versus cumulant along λ/Δc, at matching
/// (`mismatch` = 1) or with the drive ratio off by `mismatch`.
fn cumulant_sweeps(
    overrides: &Overrides,
    mismatch: f64,
) -> Result<Vec<(String, SweepResult)>> {
    let base = figure_base(overrides)?;
    let xs = linspace(0.5, 2.0, overrides.points.unwrap_or(501));
    // figS1 plots against λ/Δc like fig2; the lossy builder takes Δc/λ.
    let build = |x: f64| lossy_point(&base, 1.0 / x, mismatch);

    let pairs: Vec<(SweepRecord, SweepRecord)> = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| -> Result<(SweepRecord, SweepRecord)> {
            let params = build(x)?;
            let mean_field = principal_root(&params)?;
            let corrected = solve_cumulant(
                &params,
                &CumulantState::factorized(mean_field.state),
            )?;
            let cumulant_solution = SteadySolution {
                state: corrected.state.base,
                residual_norm: corrected.residual_norm,
                stability: mean_field.stability,
                eigenvalues: mean_field.eigenvalues,
                branch_id: 0,
            };
            Ok((
                record(x, i, mean_field),
                record(x, i, cumulant_solution),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let assemble = |records: Vec<SweepRecord>| -> Result<SweepResult> {
        let mut result = SweepResult::new("lambda_over_delta_c", build(xs[0])?);
        result.metadata.regime = Some(Regime::Lossy);
        result.records = records;
        result.finalize();
        Ok(result)
    };
    let (mean_field, cumulant): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(vec![
        ("mean-field".into(), assemble(mean_field)?),
        ("cumulant".into(), assemble(cumulant)?),
    ])
}

/// How far apart two states at nearby sweep values may be while still
/// counting as the same branch during the figS2 coverage check.
const BRANCH_MATCH_DISTANCE: f64 = 0.05;

/// figS2: every branch over Δc/λ ∈ [0.2, 2.5] at one mismatch factor.
/// A continuation trace from the left edge walks the main branch through
/// any folds; a coarse multistart scan then flags roots the trace missed
/// (detached loops), and each gets its own continuation trace.
fn bistability_sweeps(
    overrides: &Overrides,
    factor: f64,
) -> Result<Vec<(String, SweepResult)>> {
    let base = figure_base(overrides)?;
    let (x_min, x_max) = (0.2, 2.5);
    let points = overrides.points.unwrap_or(250);
    let build = |x: f64| lossy_point(&base, x, factor);

    // Coarse root inventory for seeding and coverage checking.
    let scan_xs = linspace(x_min, x_max, 24);
    let scan: Vec<(f64, Vec<SteadySolution>)> = scan_xs
        .par_iter()
        .map(|&x| -> Result<(f64, Vec<SteadySolution>)> {
            let roots = find_all_with(
                &build(x)?,
                &GridSpec::cube(6),
                &SolveOptions::default(),
            )?;
            Ok((x, roots))
        })
        .collect::<Result<Vec<_>>>()?;

    let span = x_max - x_min;
    let opts = ContinuationOptions {
        initial_step: Some(span / (2.0 * points as f64)),
        max_step: Some(span / points as f64),
        ..ContinuationOptions::default()
    };

    // The scan above already built parameters across the whole window, so
    // the continuation closure cannot fail (λ is fixed along it).
    let trace = |x: f64| build(x).expect("scanned window has valid parameters");

    let seed = scan[0]
        .1
        .first()
        .expect("find_all returns at least one root")
        .clone();
    let mut result = continue_branch("delta_c_over_lambda", trace, (x_min, x_max), &seed, &opts)?;
    result.metadata.regime = Some(Regime::Lossy);

    // Roots the main trace never visited start new branches (detached loops).
    let mut next_branch = result.branch_ids().len();
    for (x, roots) in &scan {
        for root in roots {
            let window = 2.0 * span / points as f64;
            let covered = result
                .records
                .iter()
                .filter(|r| (r.value - x).abs() <= window)
                .any(|r| r.solution.state.distance(&root.state) <= BRANCH_MATCH_DISTANCE);
            if !covered {
                let extra = continue_branch(
                    "delta_c_over_lambda",
                    trace,
                    (*x, x_max),
                    root,
                    &opts,
                )?;
                result.merge_as_branch(extra, next_branch);
                next_branch += 1;
            }
        }
    }

    Ok(vec![("branches".into(), result)])
}

// ---------------------------------------------------------------------------
// Critical-exponent reports.
// ---------------------------------------------------------------------------

/// Observable whose critical exponent is being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Jz,
    Jm,
    NPhot,
}

impl Observable {
    pub fn as_str(&self) -> &'static str {
        match self {
            Observable::Jz => "jz",
            Observable::Jm => "jm",
            Observable::NPhot => "n_phot",
        }
    }

    fn extract(&self, state: &MeanFieldState) -> f64 {
        match self {
            Observable::Jz => state.jz,
            Observable::Jm => state.jm.norm(),
            Observable::NPhot => state.a_mean.norm_sqr(),
        }
    }
}

impl std::fmt::Display for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jz" => Ok(Observable::Jz),
            "jm" => Ok(Observable::Jm),
            "n_phot" | "n-phot" | "nphot" => Ok(Observable::NPhot),
            other => Err(Error::InvalidParameter(format!(
                "unknown observable '{other}' (expected jz, jm or n_phot)"
            ))),
        }
    }
}

/// A fitted critical exponent with the solver samples behind it.
#[derive(Debug, Clone)]
pub struct ExponentReport {
    pub observable: Observable,
    pub regime: Regime,
    pub lambda_c: f64,
    /// (λ, observable) pairs from solver roots above threshold.
    pub samples: Vec<(f64, f64)>,
    pub observable_at_critical: f64,
    pub fit: ExponentFit,
}

/// λ ladder above threshold: 24 points, λ/λc − 1 geometric over
/// [2e−6, 1e−4]. Close enough that subleading corrections stay below the
/// acceptance tolerance, far enough out that differences beat rounding.
fn exponent_ladder(lambda_c: f64) -> Vec<f64> {
    (0..24)
        .map(|i| lambda_c * (1.0 + 2e-6 * 50f64.powf(i as f64 / 23.0)))
        .collect()
}

/// Generate solver data near threshold at the standard figure anchor
/// (Δc = Δs = 8, Ωa = 1) and fit the critical exponent of `observable`.
pub fn exponent_report(regime: Regime, observable: Observable) -> Result<ExponentReport> {
    let anchor = ModelParams {
        delta_c: 8.0,
        delta_s: 8.0,
        lambda: 1.0,
        omega_a: num_complex::Complex64::new(1.0, 0.0),
        ..ModelParams::default()
    };
    let at_coupling = |lambda: f64| -> Result<ModelParams> {
        let mut params = ModelParams { lambda, ..anchor.clone() };
        match regime {
            Regime::Hermitian => {}
            Regime::GainBalanced => {
                params.kappa_c = 1.0;
                params.gamma_perp = 1.0;
                params.gamma_par = 0.1;
                params.kappa_g = gain_balance_rate(&params)?;
            }
            Regime::Lossy => {
                return Err(Error::InvalidParameter(
                    "no critical exponents in the lossy regime; it has no transition".into(),
                ))
            }
        }
        params.with_matched_drives(regime, anchor.omega_a)
    };

    let lambda_c = critical_coupling(&at_coupling(1.0)?, regime)?;

    // The observable exactly at threshold comes from the solver too: the
    // trivial root, where the nontrivial branch terminates.
    let critical_params = at_coupling(lambda_c)?;
    let critical_root = solve_from(&critical_params, &MeanFieldState::trivial(&critical_params))?;
    let observable_at_critical = observable.extract(&critical_root.state);

    let samples: Vec<(f64, f64)> = exponent_ladder(lambda_c)
        .into_iter()
        .map(|lambda| -> Result<(f64, f64)> {
            let params = at_coupling(lambda)?;
            let order = match regime {
                Regime::Hermitian => hermitian_order(&params, lambda),
                _ => gain_balanced_order(&params, lambda),
            };
            let seed = MeanFieldState::new(
                order.a_mean * 1.001,
                order.jm * 0.999,
                (order.jz + 1e-4).clamp(-1.0, 1.0),
            );
            let root = solve_from(&params, &seed)?;
            Ok((lambda, observable.extract(&root.state)))
        })
        .collect::<Result<Vec<_>>>()?;

    let fit = tcqpt_core::analytic::fit_critical_exponent(
        &samples,
        lambda_c,
        observable_at_critical,
    )?;
    Ok(ExponentReport {
        observable,
        regime,
        lambda_c,
        samples,
        observable_at_critical,
        fit,
    })
}
