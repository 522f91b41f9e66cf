//! Model parameters, derived quantities, and the drive-matching conditions.
//!
//! Everything downstream works in scaled variables: the cavity drive is stored
//! as Ωa/√N, the collective drive as ΩJ/√N, and the dynamical variables are
//! ⟨a⟩/√N, ⟨J−⟩/(N/2), ⟨Jz⟩/(N/2). In these units the mean-field layer carries
//! no explicit ensemble size, so `n_tls` is metadata rather than a solver
//! input. Frequencies and rates are plain numbers in a user-chosen common unit.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::{Error, Result};

/// Relative tolerance for the drive-matching flags. The matching conditions
/// are algebraic identities, not fits, so anything beyond rounding noise
/// counts as a mismatch.
pub const MATCH_TOL: f64 = 1e-12;

/// Which drive-matching / balance condition is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// No dissipation anywhere; drives cancel when Ωa/ΩJ = Δc/λ.
    Hermitian,
    /// General dissipative cavity; drives cancel when Ωa/ΩJ = (Δc − iκ)/λ.
    Lossy,
    /// Gain-balanced cavity (κg = κg⁰); drives cancel when
    /// Ωa/ΩJ = Δc(1 + iγ⊥/Δs)/λ.
    GainBalanced,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Hermitian => "hermitian",
            Regime::Lossy => "lossy",
            Regime::GainBalanced => "gain_balanced",
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hermitian" => Ok(Regime::Hermitian),
            "lossy" => Ok(Regime::Lossy),
            "gain_balanced" | "gain-balanced" => Ok(Regime::GainBalanced),
            other => Err(Error::InvalidParameter(format!(
                "unknown regime '{other}' (expected hermitian, lossy or gain_balanced)"
            ))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Physical parameters of one driven Tavis–Cummings instance, written in the
/// frame rotating at the drive frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Cavity detuning Δc = ωc − ωd (> 0).
    pub delta_c: f64,
    /// Spin detuning Δs = ωs − ωd (> 0).
    pub delta_s: f64,
    /// Collective coupling λ = λs√N.
    pub lambda: f64,
    /// Ensemble size N. The scaled equations are N-free; kept as metadata.
    pub n_tls: u64,
    /// Cavity Rabi drive, stored scaled as Ωa/√N.
    pub omega_a: Complex64,
    /// Collective spin drive, stored scaled as ΩJ/√N.
    pub omega_j: Complex64,
    /// Cavity decay rate κc ≥ 0.
    pub kappa_c: f64,
    /// Cavity gain rate κg ≥ 0; the effective rate κ = κc − κg may be negative.
    pub kappa_g: f64,
    /// Transverse spin decoherence rate γ⊥ ≥ 0.
    pub gamma_perp: f64,
    /// Longitudinal spin relaxation rate γ∥ ≥ 0.
    pub gamma_par: f64,
    /// Bare frequency triple (ωc, ωs, ωd) when the detunings were derived from
    /// one; kept so exported metadata reproduces the input exactly.
    pub frequencies: Option<(f64, f64, f64)>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            delta_c: 1.0,
            delta_s: 1.0,
            lambda: 1.0,
            n_tls: 1,
            omega_a: Complex64::ZERO,
            omega_j: Complex64::ZERO,
            kappa_c: 0.0,
            kappa_g: 0.0,
            gamma_perp: 0.0,
            gamma_par: 0.0,
            frequencies: None,
        }
    }
}

impl ModelParams {
    /// Effective cavity rate κ = κc − κg (negative means net gain).
    pub fn kappa(&self) -> f64 {
        self.kappa_c - self.kappa_g
    }

    /// True when the mean-field flow is conservative: κ = 0 and both spin
    /// rates vanish. Such flows conserve the spin length and have no
    /// attractors, which several solver paths treat specially.
    pub fn is_rate_free(&self) -> bool {
        self.kappa() == 0.0 && self.gamma_perp == 0.0 && self.gamma_par == 0.0
    }

    /// Check the parameter invariants. Solvers call this on entry, so a
    /// hand-built struct that violates them fails fast instead of producing
    /// garbage.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("delta_c", self.delta_c),
            ("delta_s", self.delta_s),
            ("lambda", self.lambda),
            ("omega_a_re", self.omega_a.re),
            ("omega_a_im", self.omega_a.im),
            ("omega_j_re", self.omega_j.re),
            ("omega_j_im", self.omega_j.im),
            ("kappa_c", self.kappa_c),
            ("kappa_g", self.kappa_g),
            ("gamma_perp", self.gamma_perp),
            ("gamma_par", self.gamma_par),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if self.delta_c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta_c must be > 0 (got {})",
                self.delta_c
            )));
        }
        if self.delta_s <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delta_s must be > 0 (got {})",
                self.delta_s
            )));
        }
        for (name, rate) in [
            ("kappa_c", self.kappa_c),
            ("kappa_g", self.kappa_g),
            ("gamma_perp", self.gamma_perp),
            ("gamma_par", self.gamma_par),
        ] {
            if rate < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be >= 0 (got {rate})"
                )));
            }
        }
        if self.n_tls == 0 {
            return Err(Error::InvalidParameter("n_tls must be >= 1".into()));
        }
        Ok(())
    }

    /// Copy of `self` with both drives set so that Ωa = `omega_a` and the
    /// matching condition of `regime` holds exactly: ΩJ = Ωa / ratio.
    pub fn with_matched_drives(&self, regime: Regime, omega_a: Complex64) -> Result<Self> {
        let ratio = matching_ratio(self, regime)?;
        Ok(ModelParams {
            omega_a,
            omega_j: omega_a / ratio,
            ..self.clone()
        })
    }
}

/// Displacement transform of one parameter set: the frame shift α that removes
/// the cavity drive, the collective drive left over after the shift, and the
/// derived rates. `residual_drive = 0` is exactly the drive-cancellation
/// condition.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    /// Displacement α = −(Ωa/√N)/(Δc − iκ); reduces to −(Ωa/√N)/Δc when κ = 0.
    pub alpha: Complex64,
    /// Leftover collective drive (ΩJ + λα)/√N after the displacement.
    pub residual_drive: Complex64,
    /// Critical coupling of the active case: the gain-balanced formula, which
    /// reduces to the Hermitian √(ΔcΔs) as γ⊥ → 0.
    pub lambda_crit: f64,
    /// Effective cavity rate κ = κc − κg.
    pub kappa_eff: f64,
    /// Drive ratio satisfies the Hermitian condition within tolerance.
    pub matched_hermitian: bool,
    /// Drive ratio satisfies the lossy condition (Δc − iκ)/λ within tolerance.
    pub matched_lossy: bool,
    /// Drive ratio satisfies the gain-balanced condition within tolerance.
    pub matched_gain_balanced: bool,
}

/// Drive-amplitude ratio Ωa/ΩJ at which the two drives cancel after the
/// displacement transform.
pub fn matching_ratio(params: &ModelParams, regime: Regime) -> Result<Complex64> {
    if params.lambda <= 0.0 {
        return Err(Error::DegenerateCoupling(format!(
            "matching ratio needs lambda > 0 (got {})",
            params.lambda
        )));
    }
    let ratio = match regime {
        Regime::Hermitian => Complex64::new(params.delta_c / params.lambda, 0.0),
        Regime::Lossy => Complex64::new(params.delta_c, -params.kappa()) / params.lambda,
        Regime::GainBalanced => {
            Complex64::new(params.delta_c, 0.0)
                * Complex64::new(1.0, params.gamma_perp / params.delta_s)
                / params.lambda
        }
    };
    Ok(ratio)
}

/// Gain rate κg⁰ = κc + γ⊥Δc/Δs that balances the coupled loss combination:
/// with κg = κg⁰ the quantity Δcγ⊥ + Δsκ vanishes and the nontrivial steady
/// branch becomes real.
pub fn gain_balance_rate(params: &ModelParams) -> Result<f64> {
    if params.delta_s == 0.0 {
        return Err(Error::InvalidParameter(
            "gain balance rate needs delta_s != 0".into(),
        ));
    }
    Ok(params.kappa_c + params.gamma_perp * params.delta_c / params.delta_s)
}

/// Critical coupling λc of the superradiant transition.
pub fn critical_coupling(params: &ModelParams, regime: Regime) -> Result<f64> {
    if params.delta_c <= 0.0 || params.delta_s <= 0.0 {
        return Err(Error::InvalidParameter(
            "critical coupling needs delta_c > 0 and delta_s > 0".into(),
        ));
    }
    match regime {
        Regime::Hermitian => Ok((params.delta_s * params.delta_c).sqrt()),
        Regime::GainBalanced => {
            let g = params.gamma_perp / params.delta_s;
            Ok((params.delta_c * params.delta_s * (1.0 + g * g)).sqrt())
        }
        Regime::Lossy => Err(Error::InvalidParameter(
            "no critical coupling in the lossy regime; the transition needs gain balance".into(),
        )),
    }
}

/// Build the displaced-frame description with the default matching tolerance.
pub fn build_effective(params: &ModelParams) -> Result<EffectiveModel> {
    build_effective_with_tol(params, MATCH_TOL)
}

/// Build the displaced-frame description, flagging which of the three matching
/// conditions the supplied drive pair satisfies within `rel_tol`.
pub fn build_effective_with_tol(params: &ModelParams, rel_tol: f64) -> Result<EffectiveModel> {
    params.validate()?;
    let kappa = params.kappa();
    let alpha = -params.omega_a / Complex64::new(params.delta_c, -kappa);
    let residual_drive = params.omega_j + params.lambda * alpha;
    let lambda_crit = critical_coupling(params, Regime::GainBalanced)?;

    let matched = |regime: Regime| -> bool {
        match matching_ratio(params, regime) {
            Ok(ratio) => {
                let lhs = params.omega_a;
                let rhs = ratio * params.omega_j;
                let scale = lhs.norm().max(rhs.norm());
                (lhs - rhs).norm() <= rel_tol * scale
            }
            Err(_) => false,
        }
    };

    Ok(EffectiveModel {
        alpha,
        residual_drive,
        lambda_crit,
        kappa_eff: kappa,
        matched_hermitian: matched(Regime::Hermitian),
        matched_lossy: matched(Regime::Lossy),
        matched_gain_balanced: matched(Regime::GainBalanced),
    })
}

// ---------------------------------------------------------------------------
// Flat key = value configuration files.
// ---------------------------------------------------------------------------

const CONFIG_KEYS: &[&str] = &[
    "omega_c",
    "omega_s",
    "omega_d",
    "delta_c",
    "delta_s",
    "lambda",
    "n_tls",
    "omega_a_re",
    "omega_a_im",
    "omega_j_re",
    "omega_j_im",
    "kappa_c",
    "kappa_g",
    "gamma_perp",
    "gamma_par",
    "gamma_p",
    "gamma_h",
];

/// Relative tolerance for redundant config entries (a frequency triple next to
/// explicit detunings, or γp/γh next to γ⊥/γ∥).
const CONSISTENCY_TOL: f64 = 1e-12;

#[derive(Default)]
struct RawConfig {
    values: Vec<(String, f64, usize)>,
}

impl RawConfig {
    fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _, _)| k == key).map(|v| v.1)
    }
}

fn consistent(supplied: f64, derived: f64) -> bool {
    (supplied - derived).abs() <= CONSISTENCY_TOL * supplied.abs().max(derived.abs()).max(1.0)
}

impl ModelParams {
    /// Parse a flat `key = value` configuration.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let stripped = line.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("expected 'key = value', got '{stripped}'"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("unknown key '{key}'"),
                });
            }
            if raw.get(key).is_some() {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate key '{key}'"),
                });
            }
            let parsed: f64 = value.parse().map_err(|_| Error::Config {
                line: line_no,
                message: format!("cannot parse '{value}' as a number"),
            })?;
            raw.values.push((key.to_string(), parsed, line_no));
        }
        Self::from_raw(&raw)
    }

    /// Load a configuration file from disk.
    pub fn load_config<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_config_str(&text)
    }

    fn from_raw(raw: &RawConfig) -> Result<Self> {
        let triple = (raw.get("omega_c"), raw.get("omega_s"), raw.get("omega_d"));
        let frequencies = match triple {
            (Some(c), Some(s), Some(d)) => Some((c, s, d)),
            (None, None, None) => None,
            _ => {
                return Err(Error::Config {
                    line: 0,
                    message: "frequency triple is incomplete: give all of omega_c, omega_s, \
                              omega_d or none"
                        .into(),
                })
            }
        };

        let (delta_c, delta_s) = if let Some((oc, os, od)) = frequencies {
            let dc = oc - od;
            let ds = os - od;
            for (key, derived) in [("delta_c", dc), ("delta_s", ds)] {
                if let Some(supplied) = raw.get(key) {
                    if !consistent(supplied, derived) {
                        return Err(Error::Config {
                            line: 0,
                            message: format!(
                                "{key} = {supplied} contradicts the frequency triple \
                                 ({key} should be {derived})"
                            ),
                        });
                    }
                }
            }
            (dc, ds)
        } else {
            let dc = raw.get("delta_c").ok_or_else(|| Error::Config {
                line: 0,
                message: "missing delta_c (or a full frequency triple)".into(),
            })?;
            let ds = raw.get("delta_s").ok_or_else(|| Error::Config {
                line: 0,
                message: "missing delta_s (or a full frequency triple)".into(),
            })?;
            (dc, ds)
        };

        let lambda = raw.get("lambda").ok_or_else(|| Error::Config {
            line: 0,
            message: "missing lambda".into(),
        })?;

        let (gamma_perp, gamma_par) =
            if raw.get("gamma_p").is_some() || raw.get("gamma_h").is_some() {
                let gp = raw.get("gamma_p").unwrap_or(0.0);
                let gh = raw.get("gamma_h").unwrap_or(0.0);
                if gp < 0.0 || gh < 0.0 {
                    return Err(Error::Config {
                        line: 0,
                        message: "gamma_p and gamma_h must be >= 0".into(),
                    });
                }
                let perp = gh + 2.0 * gp;
                let par = 2.0 * gh;
                for (key, derived) in [("gamma_perp", perp), ("gamma_par", par)] {
                    if let Some(supplied) = raw.get(key) {
                        if !consistent(supplied, derived) {
                            return Err(Error::Config {
                                line: 0,
                                message: format!(
                                    "{key} = {supplied} contradicts gamma_p/gamma_h \
                                     ({key} should be {derived})"
                                ),
                            });
                        }
                    }
                }
                (perp, par)
            } else {
                (
                    raw.get("gamma_perp").unwrap_or(0.0),
                    raw.get("gamma_par").unwrap_or(0.0),
                )
            };

        let n_tls = match raw.get("n_tls") {
            None => 1,
            Some(v) => {
                if v < 1.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
                    return Err(Error::Config {
                        line: 0,
                        message: format!("n_tls must be a positive integer (got {v})"),
                    });
                }
                v as u64
            }
        };

        let params = ModelParams {
            delta_c,
            delta_s,
            lambda,
            n_tls,
            omega_a: Complex64::new(
                raw.get("omega_a_re").unwrap_or(0.0),
                raw.get("omega_a_im").unwrap_or(0.0),
            ),
            omega_j: Complex64::new(
                raw.get("omega_j_re").unwrap_or(0.0),
                raw.get("omega_j_im").unwrap_or(0.0),
            ),
            kappa_c: raw.get("kappa_c").unwrap_or(0.0),
            kappa_g: raw.get("kappa_g").unwrap_or(0.0),
            gamma_perp,
            gamma_par,
            frequencies,
        };
        params.validate()?;
        Ok(params)
    }

    /// Serialize as a flat config that [`ModelParams::from_config_str`] maps
    /// back to a bit-identical struct. Floats use Rust's shortest
    /// round-trip decimal form.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        if let Some((oc, os, od)) = self.frequencies {
            let _ = writeln!(out, "omega_c = {oc}");
            let _ = writeln!(out, "omega_s = {os}");
            let _ = writeln!(out, "omega_d = {od}");
        }
        let _ = writeln!(out, "delta_c = {}", self.delta_c);
        let _ = writeln!(out, "delta_s = {}", self.delta_s);
        let _ = writeln!(out, "lambda = {}", self.lambda);
        let _ = writeln!(out, "n_tls = {}", self.n_tls);
        let _ = writeln!(out, "omega_a_re = {}", self.omega_a.re);
        let _ = writeln!(out, "omega_a_im = {}", self.omega_a.im);
        let _ = writeln!(out, "omega_j_re = {}", self.omega_j.re);
        let _ = writeln!(out, "omega_j_im = {}", self.omega_j.im);
        let _ = writeln!(out, "kappa_c = {}", self.kappa_c);
        let _ = writeln!(out, "kappa_g = {}", self.kappa_g);
        let _ = writeln!(out, "gamma_perp = {}", self.gamma_perp);
        let _ = writeln!(out, "gamma_par = {}", self.gamma_par);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn fig2_like() -> ModelParams {
        ModelParams {
            delta_c: 8.0,
            delta_s: 8.0,
            lambda: 8.0,
            gamma_perp: 1.0,
            kappa_c: 1.0,
            gamma_par: 0.1,
            ..Default::default()
        }
    }

    #[test]
    fn hermitian_ratio_is_real() {
        let p = ModelParams {
            delta_c: 8.0,
            lambda: 8.0,
            ..Default::default()
        };
        let r = matching_ratio(&p, Regime::Hermitian).unwrap();
        assert_eq!(r, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn gain_balanced_ratio_example() {
        let p = fig2_like();
        let r = matching_ratio(&p, Regime::GainBalanced).unwrap();
        assert_abs_diff_eq!(r.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, 0.125, epsilon = 1e-15);
    }

    #[test]
    fn lossy_ratio_example() {
        let p = ModelParams {
            delta_c: 8.0,
            lambda: 8.0,
            kappa_c: 1.0,
            ..Default::default()
        };
        let r = matching_ratio(&p, Regime::Lossy).unwrap();
        assert_abs_diff_eq!(r.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, -0.125, epsilon = 1e-15);
    }

    #[test]
    fn zero_coupling_is_degenerate() {
        let p = ModelParams {
            lambda: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            matching_ratio(&p, Regime::Hermitian),
            Err(Error::DegenerateCoupling(_))
        ));
    }

    #[test]
    fn balance_rate_examples() {
        let symmetric = ModelParams {
            kappa_c: 1.0,
            gamma_perp: 1.0,
            delta_c: 3.0,
            delta_s: 3.0,
            ..Default::default()
        };
        assert_eq!(gain_balance_rate(&symmetric).unwrap(), 2.0);

        let loss_only = ModelParams {
            kappa_c: 0.7,
            gamma_perp: 0.0,
            ..Default::default()
        };
        assert_eq!(gain_balance_rate(&loss_only).unwrap(), 0.7);

        let detuned = ModelParams {
            kappa_c: 0.0,
            gamma_perp: 1.0,
            delta_c: 4.0,
            delta_s: 2.0,
            ..Default::default()
        };
        assert_eq!(gain_balance_rate(&detuned).unwrap(), 2.0);
    }

    #[test]
    fn balance_rate_kills_coupled_loss_term() {
        let mut p = fig2_like();
        p.delta_c = 7.3;
        p.delta_s = 5.1;
        p.kappa_g = gain_balance_rate(&p).unwrap();
        let combo = p.delta_c * p.gamma_perp + p.delta_s * p.kappa();
        assert_abs_diff_eq!(combo, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn critical_coupling_examples() {
        let symmetric = ModelParams {
            delta_c: 4.0,
            delta_s: 4.0,
            ..Default::default()
        };
        assert_eq!(
            critical_coupling(&symmetric, Regime::Hermitian).unwrap(),
            4.0
        );

        // The inverse anchor: at delta_c = delta_s = sqrt(63) with unit
        // transverse rate the gain-balanced critical coupling is exactly 8,
        // so the threshold in a lambda/delta_c sweep with lambda = 8 sits at
        // 8/sqrt(63) = 1.00790...
        let anchor = ModelParams {
            delta_c: 63f64.sqrt(),
            delta_s: 63f64.sqrt(),
            gamma_perp: 1.0,
            ..Default::default()
        };
        assert_relative_eq!(
            critical_coupling(&anchor, Regime::GainBalanced).unwrap(),
            8.0,
            max_relative = 1e-14
        );
        let ratio = 8.0 / 63f64.sqrt();
        assert!((ratio - 1.0079).abs() < 5e-4);
    }

    #[test]
    fn lossy_regime_has_no_critical_coupling() {
        assert!(critical_coupling(&fig2_like(), Regime::Lossy).is_err());
    }

    #[test]
    fn gain_balanced_lambda_c_dominates_hermitian() {
        let mut p = fig2_like();
        for g in [0.0, 0.3, 1.0, 4.0] {
            p.gamma_perp = g;
            let herm = critical_coupling(&p, Regime::Hermitian).unwrap();
            let bal = critical_coupling(&p, Regime::GainBalanced).unwrap();
            if g == 0.0 {
                assert_eq!(herm, bal);
            } else {
                assert!(bal > herm);
            }
        }
    }

    #[test]
    fn gain_balanced_ratio_equals_lossy_at_balance_rate() {
        let mut p = fig2_like();
        p.delta_c = 6.0;
        p.delta_s = 9.0;
        p.kappa_c = 0.4;
        p.kappa_g = gain_balance_rate(&p).unwrap();
        let lossy = matching_ratio(&p, Regime::Lossy).unwrap();
        let balanced = matching_ratio(&p, Regime::GainBalanced).unwrap();
        assert_abs_diff_eq!((lossy - balanced).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn effective_model_matched_hermitian() {
        let p = ModelParams {
            delta_c: 8.0,
            lambda: 8.0,
            omega_a: Complex64::new(1.0, 0.0),
            omega_j: Complex64::new(1.0, 0.0),
            ..Default::default()
        };
        let eff = build_effective(&p).unwrap();
        assert_abs_diff_eq!(eff.residual_drive.norm(), 0.0, epsilon = 1e-14);
        assert!(eff.matched_hermitian);
        // With all rates zero the lossy condition coincides with the
        // Hermitian one.
        assert!(eff.matched_lossy);
        assert!(!eff.matched_gain_balanced || p.gamma_perp == 0.0);
    }

    #[test]
    fn effective_model_mismatch_is_linear() {
        let base = ModelParams {
            delta_c: 8.0,
            lambda: 8.0,
            omega_a: Complex64::new(1.2, 0.0),
            omega_j: Complex64::new(1.0, 0.0),
            ..Default::default()
        };
        let eff = build_effective(&base).unwrap();
        assert!(!eff.matched_hermitian);
        assert!(eff.residual_drive.norm() > 0.1);

        // Doubling the drive mismatch doubles the residual.
        let matched_omega_a = Complex64::new(1.0, 0.0);
        let double = ModelParams {
            omega_a: matched_omega_a + 2.0 * (base.omega_a - matched_omega_a),
            ..base.clone()
        };
        let eff2 = build_effective(&double).unwrap();
        assert_relative_eq!(
            eff2.residual_drive.norm(),
            2.0 * eff.residual_drive.norm(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn effective_model_single_drive_is_biased() {
        let p = ModelParams {
            delta_c: 8.0,
            lambda: 8.0,
            omega_a: Complex64::new(1.0, 0.0),
            omega_j: Complex64::ZERO,
            ..Default::default()
        };
        let eff = build_effective(&p).unwrap();
        assert!(eff.residual_drive.norm() > 0.5);
        assert!(!eff.matched_hermitian && !eff.matched_lossy && !eff.matched_gain_balanced);
    }

    #[test]
    fn config_round_trip_is_bit_identical() {
        let mut p = fig2_like();
        p.omega_a = Complex64::new(0.1 + 0.2, -1.0 / 3.0);
        p.omega_j = Complex64::new(2.0f64.sqrt(), 0.3e-17);
        p.kappa_g = 1.9999999999999998;
        p.n_tls = 100;
        let text = p.to_config_string();
        let back = ModelParams::from_config_str(&text).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn config_with_frequency_triple() {
        let text = "omega_c = 9.0\nomega_s = 9.5\nomega_d = 1.5\nlambda = 8\n";
        let p = ModelParams::from_config_str(text).unwrap();
        assert_eq!(p.delta_c, 7.5);
        assert_eq!(p.delta_s, 8.0);
        assert_eq!(p.frequencies, Some((9.0, 9.5, 1.5)));
        // And the round trip preserves the triple.
        let back = ModelParams::from_config_str(&p.to_config_string()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn inconsistent_triple_is_a_load_error() {
        let text = "omega_c = 9.0\nomega_s = 9.5\nomega_d = 1.5\ndelta_c = 7.0\nlambda = 8\n";
        assert!(matches!(
            ModelParams::from_config_str(text),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn incomplete_triple_is_a_load_error() {
        let text = "omega_c = 9.0\nomega_d = 1.5\nlambda = 8\n";
        assert!(ModelParams::from_config_str(text).is_err());
    }

    #[test]
    fn gamma_aliases_derive_rates() {
        let text = "delta_c = 8\ndelta_s = 8\nlambda = 8\ngamma_p = 0.25\ngamma_h = 0.1\n";
        let p = ModelParams::from_config_str(text).unwrap();
        assert_eq!(p.gamma_perp, 0.6);
        assert_eq!(p.gamma_par, 0.2);
        assert!(p.gamma_par <= 2.0 * p.gamma_perp);
    }

    #[test]
    fn contradictory_gamma_aliases_fail() {
        let text =
            "delta_c = 8\ndelta_s = 8\nlambda = 8\ngamma_p = 0.25\ngamma_h = 0.1\ngamma_perp = 1\n";
        assert!(ModelParams::from_config_str(text).is_err());
    }

    #[test]
    fn unknown_and_malformed_keys_fail() {
        assert!(ModelParams::from_config_str("delta_x = 1\n").is_err());
        assert!(ModelParams::from_config_str("delta_c 8\n").is_err());
        assert!(ModelParams::from_config_str("delta_c = abc\n").is_err());
        assert!(ModelParams::from_config_str("delta_c = 8\ndelta_c = 9\n").is_err());
    }

    #[test]
    fn negative_detuning_rejected() {
        let text = "delta_c = -8\ndelta_s = 8\nlambda = 8\n";
        assert!(ModelParams::from_config_str(text).is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# model\n\ndelta_c = 8 # cavity\ndelta_s = 8\nlambda = 8\n";
        let p = ModelParams::from_config_str(text).unwrap();
        assert_eq!(p.delta_c, 8.0);
    }
}
