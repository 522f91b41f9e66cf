//! Serialization of sweep results: one CSV per branch plus a metadata
//! sidecar in the flat config format, so every exported file is reproducible
//! from its own directory.

use std::fs;
use std::path::{Path, PathBuf};

use tcqpt_core::{Result, SweepResult};

/// Exact column set of every branch CSV. The trailing `fold` column is 1 on
/// rows where a continuation trace turned around in the sweep parameter.
pub const CSV_HEADER: &str = "sweep value, jz, Re jm, Im jm, Re a_mean, Im a_mean, n_phot, F, stability, residual_norm, fold";

/// Write `result` under `dir` as `{stem}-branch{id}.csv` files (rows in trace
/// order) plus `{stem}-meta.cfg`. An empty sweep still produces a header-only
/// CSV. Returns the paths written, CSVs first.
pub fn export(result: &SweepResult, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let ids = result.branch_ids();
    if ids.is_empty() {
        let path = dir.join(format!("{stem}-branch0.csv"));
        fs::write(&path, format!("{CSV_HEADER}\n"))?;
        written.push(path);
    }
    for id in ids {
        let mut body = String::from(CSV_HEADER);
        body.push('\n');
        for record in result.branch(id) {
            let state = &record.solution.state;
            let n_phot = state.a_mean.norm_sqr();
            let f_quantity = state.jm.norm_sqr() + state.jz * state.jz;
            body.push_str(&format!(
                "{}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}\n",
                record.value,
                state.jz,
                state.jm.re,
                state.jm.im,
                state.a_mean.re,
                state.a_mean.im,
                n_phot,
                f_quantity,
                record.solution.stability,
                record.solution.residual_norm,
                u8::from(record.fold),
            ));
        }
        let path = dir.join(format!("{stem}-branch{id}.csv"));
        fs::write(&path, body)?;
        written.push(path);
    }

    let meta_path = dir.join(format!("{stem}-meta.cfg"));
    fs::write(&meta_path, metadata_text(result))?;
    written.push(meta_path);
    Ok(written)
}

/// Sidecar text: sweep provenance as comments on top of the base parameters
/// in the standard config format, so the file itself loads as a ModelParams.
fn metadata_text(result: &SweepResult) -> String {
    let meta = &result.metadata;
    let mut text = format!("# sweep parameter: {}\n", result.param_name);
    if let Some(regime) = meta.regime {
        text.push_str(&format!("# regime: {regime}\n"));
    }
    text.push_str(&format!("# code version: {}\n", meta.code_version));
    text.push_str(&format!("# stalled: {}\n", meta.stalled));
    text.push_str(&format!("# closed loop: {}\n", meta.closed_loop));
    text.push_str(&meta.base_params.to_config_string());
    text
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use tcqpt_core::model::ModelParams;
    use tcqpt_core::steady::{solve_from, MeanFieldState};
    use tcqpt_core::sweep::{SweepRecord, SweepResult};
    use tcqpt_core::Regime;

    use super::*;

    fn sample_sweep() -> SweepResult {
        let params = ModelParams {
            delta_c: 8.0,
            delta_s: 8.0,
            lambda: 8.0,
            kappa_c: 1.0,
            gamma_perp: 1.0,
            gamma_par: 0.1,
            omega_a: Complex64::new(1.0, -0.25),
            ..ModelParams::default()
        }
        .with_matched_drives(Regime::Lossy, Complex64::new(1.0, -0.25))
        .unwrap();
        let root = solve_from(&params, &MeanFieldState::trivial(&params)).unwrap();
        let mut result = SweepResult::new("lambda", params);
        result.metadata.regime = Some(Regime::Lossy);
        result.records.push(SweepRecord {
            value: 8.0,
            solution: root,
            arc_index: 0,
            fold: false,
        });
        result.finalize();
        result
    }

    #[test]
    fn metadata_sidecar_reloads_bit_identically() {
        let result = sample_sweep();
        let dir = tempfile::tempdir().unwrap();
        let paths = export(&result, dir.path(), "sample").unwrap();
        let meta_path = paths.last().unwrap();
        let reloaded = ModelParams::load_config(meta_path).unwrap();
        assert_eq!(reloaded, result.metadata.base_params);
    }

    #[test]
    fn empty_sweep_writes_header_only_csv() {
        let mut result = sample_sweep();
        result.records.clear();
        result.finalize();
        let dir = tempfile::tempdir().unwrap();
        let paths = export(&result, dir.path(), "empty").unwrap();
        assert_eq!(paths.len(), 2);
        let csv = fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(csv, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rows_carry_all_columns_in_order() {
        let result = sample_sweep();
        let dir = tempfile::tempdir().unwrap();
        let paths = export(&result, dir.path(), "cols").unwrap();
        let csv = fs::read_to_string(&paths[0]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(", ").collect();
        assert_eq!(row.len(), 11);
        assert_eq!(row[0], "8");
        assert_eq!(row[1], "-1"); // trivial root inversion
        assert_eq!(row[8], "stable");
        assert_eq!(row[10], "0");
        // Shortest round-trip decimals re-parse to the same bits.
        let jz: f64 = row[1].parse().unwrap();
        assert_eq!(jz, result.records[0].solution.state.jz);
    }
}
