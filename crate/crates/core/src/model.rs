//! Domain types shared by the cost model, planner, simulator and miner.
//!
//! Units: times in milliseconds, sizes in MB (10^6 bytes), rates in MB/ms.
//! With these units 1 GB/s is exactly 1 MB/ms.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates and reconfiguration time of the modeled accelerator, host and link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    /// Time to load one accelerator into the partially reconfigurable region.
    #[serde(rename = "t_reconfig_ms")]
    pub t_reconfig: f64,
    /// Storage scan rate.
    #[serde(rename = "r_scan_mb_per_ms")]
    pub r_scan: f64,
    /// Accelerator streaming rate.
    #[serde(rename = "r_acc_mb_per_ms")]
    pub r_acc: f64,
    /// Accelerator-to-host transfer rate.
    #[serde(rename = "r_network_mb_per_ms")]
    pub r_network: f64,
    /// Host filter cost per MB of input.
    #[serde(rename = "c_dbms_ms_per_mb")]
    pub c_dbms: f64,
}

/// Converts a rate given in GB/s to MB/ms.
pub fn gb_per_s(rate: f64) -> f64 {
    rate * 1e9 / 1e6 / 1e3
}

/// Converts a rate given in MB/s to MB/ms.
pub fn mb_per_s(rate: f64) -> f64 {
    rate / 1e3
}

/// The measured prototype constants: 15 ms reconfiguration, 1 GB/s scan,
/// 1.5 GB/s accelerators, 80 MB/s network and 0.03 ms/MB on the host.
pub fn calibrated_profile() -> DeviceProfile {
    DeviceProfile {
        t_reconfig: 15.0,
        r_scan: gb_per_s(1.0),
        r_acc: gb_per_s(1.5),
        r_network: mb_per_s(80.0),
        c_dbms: 0.03,
    }
}

impl Default for DeviceProfile {
    fn default() -> Self {
        calibrated_profile()
    }
}

impl DeviceProfile {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("t_reconfig", self.t_reconfig),
            ("r_scan", self.r_scan),
            ("r_acc", self.r_acc),
            ("r_network", self.r_network),
            ("c_dbms", self.c_dbms),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidProfile(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub name: String,
    /// MB
    pub size: f64,
}

/// A filter operator. Its id also names the accelerator implementing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOp {
    pub id: String,
    /// Output size over input size, in `[0, 1]`.
    pub selectivity: f64,
    /// Whether the operator may be reordered with the other filters.
    pub commutes: bool,
}

impl FilterOp {
    pub fn new(id: impl Into<String>, selectivity: f64) -> Self {
        Self { id: id.into(), selectivity, commutes: true }
    }

    pub fn non_commuting(mut self) -> Self {
        self.commutes = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub table: TableSpec,
    pub ops: Vec<FilterOp>,
}

impl Query {
    pub fn op(&self, id: &str) -> Option<&FilterOp> {
        self.ops.iter().find(|op| op.id == id)
    }

    pub fn has_op(&self, id: &str) -> bool {
        self.op(id).is_some()
    }

    /// Op ids in the order a local optimizer would run them: ascending
    /// selectivity, ties broken by id.
    pub fn selectivity_order(&self) -> Vec<String> {
        let mut ops: Vec<&FilterOp> = self.ops.iter().collect();
        ops.sort_by(|a, b| a.selectivity.total_cmp(&b.selectivity).then_with(|| a.id.cmp(&b.id)));
        ops.into_iter().map(|op| op.id.clone()).collect()
    }
}

/// Queries in arrival order plus the average gap after each one but the last.
///
/// `gaps[i]` runs from the completion of `queries[i]` (result transferred and
/// host post-processing done) to the arrival of `queries[i + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySequence {
    pub queries: Vec<Query>,
    pub gaps: Vec<f64>,
}

impl QuerySequence {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Validates and converts the violation list into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        validate_sequence(self).map_err(Error::InvalidSequence)
    }

    /// Multiplies every table size by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut seq = self.clone();
        for q in &mut seq.queries {
            q.table.size *= factor;
        }
        seq
    }

    /// Replaces every operator selectivity with `selectivity`.
    pub fn with_selectivity(&self, selectivity: f64) -> Self {
        let mut seq = self.clone();
        for op in seq.queries.iter_mut().flat_map(|q| q.ops.iter_mut()) {
            op.selectivity = selectivity;
        }
        seq
    }

    /// Replaces every gap with `gap`.
    pub fn with_gap(&self, gap: f64) -> Self {
        let mut seq = self.clone();
        seq.gaps.iter_mut().for_each(|g| *g = gap);
        seq
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    TooFewQueries,
    GapCount { expected: usize, found: usize },
    NegativeGap,
    EmptyId,
    TableSize,
    NoOperators,
    SelectivityRange,
    DuplicateOpId,
}

impl ViolationKind {
    pub fn name(&self) -> &'static str {
        match self {
            ViolationKind::TooFewQueries => "too few queries",
            ViolationKind::GapCount { .. } => "gap count",
            ViolationKind::NegativeGap => "negative gap",
            ViolationKind::EmptyId => "empty id",
            ViolationKind::TableSize => "table size",
            ViolationKind::NoOperators => "no operators",
            ViolationKind::SelectivityRange => "selectivity range",
            ViolationKind::DuplicateOpId => "duplicate op id",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Where the violation was found, e.g. `queries[1].ops[0]`.
    pub location: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::GapCount { expected, found } => {
                write!(f, "{}: gap count (expected {expected}, found {found})", self.location)
            }
            kind => write!(f, "{}: {}", self.location, kind.name()),
        }
    }
}

/// Collects every invariant violation of `seq`. `Ok(())` means the sequence
/// is accepted by the cost model, planner and simulator.
pub fn validate_sequence(seq: &QuerySequence) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut push = |location: String, kind| out.push(Violation { location, kind });

    if seq.queries.len() < 2 {
        push("queries".into(), ViolationKind::TooFewQueries);
    }
    let expected = seq.queries.len().saturating_sub(1);
    if seq.gaps.len() != expected {
        push("gaps".into(), ViolationKind::GapCount { expected, found: seq.gaps.len() });
    }
    for (i, gap) in seq.gaps.iter().enumerate() {
        if !(gap.is_finite() && *gap >= 0.0) {
            push(format!("gaps[{i}]"), ViolationKind::NegativeGap);
        }
    }
    for (qi, q) in seq.queries.iter().enumerate() {
        if q.id.is_empty() {
            push(format!("queries[{qi}].id"), ViolationKind::EmptyId);
        }
        if !(q.table.size.is_finite() && q.table.size >= 0.0) {
            push(format!("queries[{qi}].table"), ViolationKind::TableSize);
        }
        if q.ops.is_empty() {
            push(format!("queries[{qi}].ops"), ViolationKind::NoOperators);
        }
        let mut seen = HashSet::new();
        for (oi, op) in q.ops.iter().enumerate() {
            let loc = format!("queries[{qi}].ops[{oi}]");
            if op.id.is_empty() {
                push(loc.clone(), ViolationKind::EmptyId);
            }
            if !(0.0..=1.0).contains(&op.selectivity) {
                push(loc.clone(), ViolationKind::SelectivityRange);
            }
            if !seen.insert(op.id.as_str()) {
                push(loc, ViolationKind::DuplicateOpId);
            }
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// The five global plan shapes, in tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Full pushdown, no hints.
    S,
    /// Push down only the first (most selective) filter.
    I,
    /// Push down only the second filter; reload the successor's accelerator during the transfer.
    II,
    /// Full pushdown with speculative reload of the successor's accelerator.
    III,
    /// Full pushdown with the shared accelerator invoked last.
    IV,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [Strategy::S, Strategy::I, Strategy::II, Strategy::III, Strategy::IV];

    /// Whether the strategy depends on knowing the successor query.
    pub fn needs_hints(self) -> bool {
        matches!(self, Strategy::II | Strategy::III | Strategy::IV)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::S => "S",
            Strategy::I => "I",
            Strategy::II => "II",
            Strategy::III => "III",
            Strategy::IV => "IV",
        };
        f.write_str(s)
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S" => Ok(Strategy::S),
            "I" => Ok(Strategy::I),
            "II" => Ok(Strategy::II),
            "III" => Ok(Strategy::III),
            "IV" => Ok(Strategy::IV),
            other => Err(Error::InvalidArgument(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    Rpu,
    Host,
}

/// Placement and accelerator order for one query of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub placements: BTreeMap<String, Placement>,
    /// Execution order of the RPU-placed ops.
    pub rpu_order: Vec<String>,
}

impl QueryPlan {
    /// Every op on the accelerator, run in `order`.
    pub fn full_pushdown(order: Vec<String>) -> Self {
        let placements = order.iter().map(|id| (id.clone(), Placement::Rpu)).collect();
        Self { placements, rpu_order: order }
    }

    /// Only `pushed` runs on the accelerator; the other ops of `query` go to the host.
    pub fn partial(query: &Query, pushed: &str) -> Self {
        let placements = query
            .ops
            .iter()
            .map(|op| {
                let p = if op.id == pushed { Placement::Rpu } else { Placement::Host };
                (op.id.clone(), p)
            })
            .collect();
        Self { placements, rpu_order: vec![pushed.to_string()] }
    }

    pub fn placement(&self, op: &str) -> Option<Placement> {
        self.placements.get(op).copied()
    }

    pub fn first_rpu_op(&self) -> Option<&str> {
        self.rpu_order.first().map(String::as_str)
    }

    pub fn last_rpu_op(&self) -> Option<&str> {
        self.rpu_order.last().map(String::as_str)
    }
}

/// A reconfiguration started right after `after_op` of query `query`
/// finishes, loading `accelerator` for the next query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeculativeLoad {
    pub query: usize,
    pub after_op: String,
    pub accelerator: String,
}

/// A global plan for a query sequence. `queries[i]` belongs to `seq.queries[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub strategy: Strategy,
    pub queries: Vec<QueryPlan>,
    pub speculative_loads: Vec<SpeculativeLoad>,
}

impl Plan {
    pub fn speculative_load_after(&self, query: usize) -> Option<&SpeculativeLoad> {
        self.speculative_loads.iter().find(|l| l.query == query)
    }
}
