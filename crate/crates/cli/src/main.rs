//! Command-line driver: steady states, sweeps, relaxation dynamics, figure
//! data, and critical-exponent fits. Exit codes: 0 success, 2 bad input,
//! 3 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcqpt::export::export;
use tcqpt::figures::{
    exponent_report, run_figure, set_numeric, FigureId, Observable, Overrides,
};
use tcqpt_core::dynamics::{integrate, settle_with, Controls};
use tcqpt_core::steady::{continue_branch, find_all, ContinuationOptions, GridSpec};
use tcqpt_core::{
    Error, MeanFieldState, ModelParams, Regime, Result, SteadySolution, SweepResult,
};

#[derive(Parser)]
#[command(
    name = "tcqpt",
    version,
    about = "Steady states and phase structure of the driven dissipative Tavis-Cummings model"
)]
struct Cli {
    /// Worker threads for sweep evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find every steady-state root of one model and print the root table.
    Solve(SolveArgs),
    /// Continue a branch along one parameter and export it as CSV.
    Sweep(SweepArgs),
    /// Integrate the mean-field flow from a near-trivial start.
    Dynamics(DynamicsArgs),
    /// Regenerate the data set behind one reference figure.
    Figure(FigureArgs),
    /// Fit a critical exponent on solver data near threshold.
    Exponent(ExponentArgs),
}

/// Model parameters as flags; every flag mirrors a ModelParams key and wins
/// over the same key from --config.
#[derive(Args, Clone, Default)]
struct ParamFlags {
    /// Cavity detuning.
    #[arg(long)]
    delta_c: Option<f64>,
    /// Spin (two-level) detuning.
    #[arg(long)]
    delta_s: Option<f64>,
    /// Collective coupling strength.
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of two-level systems (pure scale factor).
    #[arg(long)]
    n_tls: Option<u64>,
    /// Cavity loss rate.
    #[arg(long)]
    kappa_c: Option<f64>,
    /// Cavity gain rate.
    #[arg(long)]
    kappa_g: Option<f64>,
    /// Spin dephasing rate.
    #[arg(long)]
    gamma_perp: Option<f64>,
    /// Spin relaxation rate.
    #[arg(long)]
    gamma_par: Option<f64>,
    /// Cavity drive, real part.
    #[arg(long)]
    omega_a_re: Option<f64>,
    /// Cavity drive, imaginary part.
    #[arg(long)]
    omega_a_im: Option<f64>,
    /// Spin drive, real part.
    #[arg(long)]
    omega_j_re: Option<f64>,
    /// Spin drive, imaginary part.
    #[arg(long)]
    omega_j_im: Option<f64>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Flat key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Match the drives for this regime (hermitian | lossy | gain_balanced).
    /// gain_balanced also sets kappa_g to the balance rate unless --kappa-g
    /// is given.
    #[arg(long)]
    regime: Option<String>,
    #[command(flatten)]
    flags: ParamFlags,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Multistart lattice points per axis (default: a mixed-density lattice).
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Model parameter key to sweep (e.g. lambda, delta_c, omega_j_re).
    #[arg(long)]
    param: String,
    /// Sweep start value.
    #[arg(long)]
    from: f64,
    /// Sweep end value.
    #[arg(long)]
    to: f64,
    /// Target resolution; continuation adapts its own step around it.
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Branch id (in the root table at --from) to start the trace on.
    #[arg(long, default_value_t = 0)]
    branch: usize,
    /// Output directory for the CSV files and the metadata sidecar.
    #[arg(long)]
    out: PathBuf,
    /// Output file stem.
    #[arg(long, default_value = "sweep")]
    stem: String,
}

#[derive(Args)]
struct DynamicsArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Integration horizon, or the relaxation budget with --settle.
    #[arg(long, default_value_t = 100.0)]
    horizon: f64,
    /// Initial inversion; the cavity starts at its displaced value.
    #[arg(long, default_value_t = -1.0)]
    start_jz: f64,
    /// Symmetry-breaking coherence seed added to the start.
    #[arg(long, default_value_t = 1e-3)]
    jm_seed: f64,
    /// Relax until the flow settles (within --horizon) and polish the root.
    #[arg(long)]
    settle: bool,
    /// Relative step-error tolerance.
    #[arg(long, default_value_t = 1e-9)]
    rtol: f64,
    /// Absolute step-error tolerance.
    #[arg(long, default_value_t = 1e-12)]
    atol: f64,
    /// Write the trajectory as CSV under this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output file stem.
    #[arg(long, default_value = "dynamics")]
    stem: String,
}

#[derive(Args)]
struct FigureArgs {
    /// fig2 | fig3 | fig4a | fig4b | figS1a | figS1b | figS2a..figS2d
    figure: String,
    /// Output directory for the CSV files and the metadata sidecars.
    #[arg(long)]
    out: PathBuf,
    /// Sweep density override.
    #[arg(long)]
    points: Option<usize>,
    /// Numeric parameter override, key=value; repeatable.
    #[arg(long = "set")]
    sets: Vec<String>,
}

#[derive(Args)]
struct ExponentArgs {
    /// jz | jm | n_phot
    #[arg(long)]
    observable: String,
    /// hermitian | gain_balanced
    #[arg(long, default_value = "gain_balanced")]
    regime: String,
    /// Parameter anchor; only fig2 is defined.
    #[arg(long, default_value = "fig2")]
    figure: String,
    /// Write the fitted samples as CSV under this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output file stem.
    #[arg(long, default_value = "exponent")]
    stem: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(failure_code(&err))
        }
    }
}

/// 2 for anything wrong with the request, 3 for solver-side failures.
fn failure_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. }
        | Error::InvalidParameter(_)
        | Error::DegenerateCoupling(_)
        | Error::Io(_) => 2,
        _ => 3,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve(args) => solve_cmd(args),
        Command::Sweep(args) => sweep_cmd(args),
        Command::Dynamics(args) => dynamics_cmd(args),
        Command::Figure(args) => figure_cmd(args),
        Command::Exponent(args) => exponent_cmd(args),
    }
}

impl ParamFlags {
    fn apply(&self, params: &mut ModelParams) {
        macro_rules! set {
            ($field:ident) => {
                if let Some(value) = self.$field {
                    params.$field = value;
                }
            };
        }
        set!(delta_c);
        set!(delta_s);
        set!(lambda);
        set!(n_tls);
        set!(kappa_c);
        set!(kappa_g);
        set!(gamma_perp);
        set!(gamma_par);
        if let Some(v) = self.omega_a_re {
            params.omega_a.re = v;
        }
        if let Some(v) = self.omega_a_im {
            params.omega_a.im = v;
        }
        if let Some(v) = self.omega_j_re {
            params.omega_j.re = v;
        }
        if let Some(v) = self.omega_j_im {
            params.omega_j.im = v;
        }
    }
}

impl ModelArgs {
    /// Config file, then flags, then regime drive matching.
    fn build(&self) -> Result<(ModelParams, Option<Regime>)> {
        let (params, regime) = self.build_base()?;
        Ok((self.finish(params, regime)?, regime))
    }

    /// Config file and flags only, before any drive matching.
    fn build_base(&self) -> Result<(ModelParams, Option<Regime>)> {
        let mut params = match &self.config {
            Some(path) => ModelParams::load_config(path)?,
            None => ModelParams::default(),
        };
        self.flags.apply(&mut params);
        let regime = match &self.regime {
            Some(text) => Some(text.parse::<Regime>()?),
            None => None,
        };
        Ok((params, regime))
    }

    /// Gain balancing, drive matching, and validation.
    fn finish(&self, mut params: ModelParams, regime: Option<Regime>) -> Result<ModelParams> {
        if let Some(regime) = regime {
            if regime == Regime::GainBalanced && self.flags.kappa_g.is_none() {
                params.kappa_g = tcqpt_core::model::gain_balance_rate(&params)?;
            }
            params = params.with_matched_drives(regime, params.omega_a)?;
        }
        params.validate()?;
        Ok(params)
    }

    /// True when regime matching itself sets `param`, so a sweep override of
    /// it must be applied after matching instead of before.
    fn matching_determines(&self, param: &str, regime: Option<Regime>) -> bool {
        match param {
            "omega_j_re" | "omega_j_im" => regime.is_some(),
            "kappa_g" => regime == Some(Regime::GainBalanced) && self.flags.kappa_g.is_none(),
            _ => false,
        }
    }
}

fn print_root_table(roots: &[SteadySolution]) {
    println!(
        "{:<7} {:>14} {:>14} {:>14} {:>14} {:>14} {:>12} {:>12} {:>10} {:>10}",
        "branch", "jz", "Re jm", "Im jm", "Re a", "Im a", "n_phot", "F", "stability", "residual"
    );
    for root in roots {
        let s = &root.state;
        println!(
            "{:<7} {:>14.9} {:>14.9} {:>14.9} {:>14.9} {:>14.9} {:>12.6e} {:>12.6e} {:>10} {:>10.2e}",
            root.branch_id,
            s.jz,
            s.jm.re,
            s.jm.im,
            s.a_mean.re,
            s.a_mean.im,
            s.a_mean.norm_sqr(),
            s.jm.norm_sqr() + s.jz * s.jz,
            root.stability,
            root.residual_norm,
        );
    }
}

fn solve_cmd(args: SolveArgs) -> Result<()> {
    let (params, _) = args.model.build()?;
    let grid = match args.grid {
        Some(0) => {
            return Err(Error::InvalidParameter(
                "--grid must be at least 1".into(),
            ));
        }
        Some(n) => GridSpec::cube(n),
        None => GridSpec::default(),
    };
    let roots = find_all(&params, &grid)?;
    print_root_table(&roots);
    Ok(())
}

fn sweep_cmd(args: SweepArgs) -> Result<()> {
    // The trace starts from the base model with the swept parameter set to
    // --from. Apply that override before regime matching so the seed roots
    // see matched drives at the start point — unless matching itself owns
    // the parameter, in which case the override must come afterwards. The
    // drives then stay fixed along the trace.
    let (mut base, regime) = args.model.build_base()?;
    if args.model.matching_determines(&args.param, regime) {
        base = args.model.finish(base, regime)?;
        set_numeric(&mut base, &args.param, args.from)?;
        base.validate()?;
    } else {
        set_numeric(&mut base, &args.param, args.from)?;
        base = args.model.finish(base, regime)?;
    }
    let roots = find_all(&base, &GridSpec::default())?;
    let seed = roots.get(args.branch).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "branch {} not found: the root table at {} = {} has {} entries",
            args.branch, args.param, args.from, roots.len()
        ))
    })?;

    let span = (args.to - args.from).abs();
    let opts = ContinuationOptions {
        initial_step: Some(span / (2.0 * args.points.max(2) as f64)),
        max_step: Some(span / args.points.max(2) as f64),
        ..ContinuationOptions::default()
    };
    let param = args.param.clone();
    let template = base.clone();
    let build = move |value: f64| {
        let mut params = template.clone();
        // The key was validated above, so this cannot fail here.
        set_numeric(&mut params, &param, value).expect("validated sweep key");
        params
    };
    let mut result = continue_branch(&args.param, build, (args.from, args.to), seed, &opts)?;
    result.metadata.regime = regime;
    let written = export(&result, &args.out, &args.stem)?;
    report_sweep(&result, &written);
    Ok(())
}

fn report_sweep(result: &SweepResult, written: &[PathBuf]) {
    let folds = result.records.iter().filter(|r| r.fold).count();
    println!(
        "{} points on {} branch(es), {} fold(s){}{}",
        result.records.len(),
        result.branch_ids().len(),
        folds,
        if result.metadata.stalled { ", stalled" } else { "" },
        if result.metadata.closed_loop { ", closed loop" } else { "" },
    );
    for path in written {
        println!("wrote {}", path.display());
    }
}

fn dynamics_cmd(args: DynamicsArgs) -> Result<()> {
    let (params, _) = args.model.build()?;
    let start = MeanFieldState {
        jz: args.start_jz,
        ..MeanFieldState::trivial(&params)
    }
    .with_jm_seed(args.jm_seed);
    let controls = Controls {
        rtol: args.rtol,
        atol: args.atol,
        ..Controls::default()
    };

    if args.settle {
        let root = settle_with(&params, &start, args.horizon, &controls)?;
        println!("settled onto:");
        print_root_table(std::slice::from_ref(&root));
        return Ok(());
    }

    let trajectory = integrate(&params, &start, args.horizon, &controls)?;
    let last = trajectory.final_state();
    println!(
        "t = {}: jz = {:.9}, jm = {:.9} {:+.9}i, a = {:.9} {:+.9}i ({}, residual {:.2e})",
        trajectory.times.last().unwrap(),
        last.jz,
        last.jm.re,
        last.jm.im,
        last.a_mean.re,
        last.a_mean.im,
        if trajectory.converged { "converged" } else { "still moving" },
        trajectory.final_residual,
    );
    if trajectory.rate_free_warning {
        println!("note: conservative model; the flow does not relax");
    }
    if let Some(dir) = &args.out {
        let path = write_trajectory(&trajectory, dir, &args.stem)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_trajectory(
    trajectory: &tcqpt_core::Trajectory,
    dir: &Path,
    stem: &str,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut body = String::from("t, Re a_mean, Im a_mean, Re jm, Im jm, jz\n");
    for (t, state) in trajectory.times.iter().zip(&trajectory.states) {
        body.push_str(&format!(
            "{}, {}, {}, {}, {}, {}\n",
            t, state.a_mean.re, state.a_mean.im, state.jm.re, state.jm.im, state.jz
        ));
    }
    let path = dir.join(format!("{stem}-trajectory.csv"));
    fs::write(&path, body)?;
    Ok(path)
}

fn figure_cmd(args: FigureArgs) -> Result<()> {
    let id: FigureId = args.figure.parse()?;
    let mut sets = Vec::new();
    for entry in &args.sets {
        let (key, value) = entry.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("override '{entry}' is not key=value"))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::InvalidParameter(format!("override '{entry}' has a non-numeric value"))
        })?;
        sets.push((key.trim().to_string(), value));
    }
    let overrides = Overrides {
        points: args.points,
        sets,
    };
    let run = run_figure(id, &overrides)?;
    for (label, sweep) in &run.sweeps {
        let written = export(sweep, &args.out, &format!("{id}-{label}"))?;
        report_sweep(sweep, &written);
    }
    Ok(())
}

fn exponent_cmd(args: ExponentArgs) -> Result<()> {
    if !args.figure.eq_ignore_ascii_case("fig2") {
        return Err(Error::InvalidParameter(format!(
            "unknown exponent anchor '{}' (only fig2 is defined)",
            args.figure
        )));
    }
    let observable: Observable = args.observable.parse()?;
    let regime: Regime = args.regime.parse()?;
    let report = exponent_report(regime, observable)?;
    println!(
        "regime={} observable={} lambda_c={} exponent={:.6} amplitude={:.6e} r_squared={:.9} samples={}",
        report.regime,
        report.observable,
        report.lambda_c,
        report.fit.exponent,
        report.fit.amplitude,
        report.fit.r_squared,
        report.samples.len(),
    );
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        let mut body = format!("lambda, {}\n", report.observable);
        for (lambda, value) in &report.samples {
            body.push_str(&format!("{lambda}, {value}\n"));
        }
        let path = dir.join(format!("{}-samples.csv", args.stem));
        fs::write(&path, body)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
