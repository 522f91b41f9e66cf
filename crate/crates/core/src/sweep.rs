//! Containers for parameter sweeps: per-point records carrying full root
//! certificates, optional closed-form overlays, and reproduction metadata.

use crate::analytic::OrderParameters;
use crate::model::{ModelParams, Regime};
use crate::steady::SteadySolution;

/// One root along a sweep.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    /// Value of the swept parameter.
    pub value: f64,
    pub solution: SteadySolution,
    /// Position along the producing trace (continuation order); scan-built
    /// sweeps number records per branch in value order.
    pub arc_index: usize,
    /// True where a continuation trace turned around in the parameter.
    pub fold: bool,
}

/// Provenance attached to a sweep so exported data is reproducible.
#[derive(Debug, Clone)]
pub struct SweepMetadata {
    /// Parameters at the start of the path; the swept entry varies.
    pub base_params: ModelParams,
    /// Drive-matching regime the sweep was set up in, when one applies.
    pub regime: Option<Regime>,
    pub code_version: String,
    /// A continuation trace stalled (step underflow) before reaching the end
    /// of the requested range; records cover only the explored part.
    pub stalled: bool,
    /// A continuation trace returned to its starting point: the branch is a
    /// closed loop (isola) rather than a window-spanning curve.
    pub closed_loop: bool,
}

impl SweepMetadata {
    pub fn new(base_params: ModelParams) -> Self {
        SweepMetadata {
            base_params,
            regime: None,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            stalled: false,
            closed_loop: false,
        }
    }
}

/// A completed sweep: every root found along the path, ordered by sweep value
/// and branch.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub param_name: String,
    /// Distinct sweep values visited, ascending.
    pub values: Vec<f64>,
    pub records: Vec<SweepRecord>,
    /// Closed-form order parameters at selected sweep values, when the regime
    /// has an analytic solution to compare against.
    pub analytic_overlay: Option<Vec<(f64, OrderParameters)>>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn new(param_name: impl Into<String>, base_params: ModelParams) -> Self {
        SweepResult {
            param_name: param_name.into(),
            values: Vec::new(),
            records: Vec::new(),
            analytic_overlay: None,
            metadata: SweepMetadata::new(base_params),
        }
    }

    /// Sort records by (value, branch, arc position) and rebuild the value
    /// list. Call after all records are pushed.
    pub fn finalize(&mut self) {
        self.records.sort_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.solution.branch_id.cmp(&b.solution.branch_id))
                .then(a.arc_index.cmp(&b.arc_index))
        });
        let mut values: Vec<f64> = self.records.iter().map(|r| r.value).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        self.values = values;
    }

    /// Branch ids present, ascending.
    pub fn branch_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.records.iter().map(|r| r.solution.branch_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Records of one branch in trace order.
    pub fn branch(&self, id: usize) -> Vec<&SweepRecord> {
        let mut records: Vec<&SweepRecord> = self
            .records
            .iter()
            .filter(|r| r.solution.branch_id == id)
            .collect();
        records.sort_by_key(|r| r.arc_index);
        records
    }

    /// Absorb another sweep's records under a fresh branch id (for assembling
    /// multi-branch figures from individual continuation traces).
    pub fn merge_as_branch(&mut self, mut other: SweepResult, branch_id: usize) {
        for record in &mut other.records {
            record.solution.branch_id = branch_id;
        }
        self.records.append(&mut other.records);
        self.metadata.stalled |= other.metadata.stalled;
        self.metadata.closed_loop |= other.metadata.closed_loop;
        self.finalize();
    }
}
