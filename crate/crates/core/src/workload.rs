//! Workload JSON files: device profile, tables, queries and the sequence.
//!
//! ```json
//! { "profile": {"t_reconfig_ms":15,"r_scan_mb_per_ms":1.0,"r_acc_mb_per_ms":1.5,
//!               "r_network_mb_per_ms":0.08,"c_dbms_ms_per_mb":0.03},
//!   "tables": [{"name":"date_dim","size_mb":9.0}],
//!   "queries": [{"id":"Q0","table":"date_dim","ops":[{"id":"acc0","selectivity":0.33}]}],
//!   "sequence": {"order":["Q0","Q1"],"gaps_ms":[1.0]} }
//! ```
//!
//! Unknown keys are rejected. A missing profile means the calibrated one.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{calibrated_profile, DeviceProfile, FilterOp, Query, QuerySequence, TableSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<DeviceProfile>,
    pub tables: Vec<TableEntry>,
    pub queries: Vec<QueryEntry>,
    pub sequence: SequenceEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub name: String,
    pub size_mb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryEntry {
    pub id: String,
    pub table: String,
    pub ops: Vec<OpEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpEntry {
    pub id: String,
    pub selectivity: f64,
    #[serde(default = "default_commutes", skip_serializing_if = "is_true")]
    pub commutes: bool,
}

fn default_commutes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub order: Vec<String>,
    pub gaps_ms: Vec<f64>,
}

/// A parsed workload: the profile to use and the query sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub profile: DeviceProfile,
    pub sequence: QuerySequence,
}

impl Workload {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: WorkloadFile = serde_json::from_str(text)?;
        file.resolve()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_file(&self) -> WorkloadFile {
        WorkloadFile::from_sequence(Some(self.profile), &self.sequence)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    /// The calibrated two-query scenario: 9 MB and 1 MB tables, filter
    /// selectivities 0.33 and 0.43 for the first query, 0.14 for the second,
    /// and a 1 ms gap.
    pub fn calibrated_scenario() -> Self {
        Self {
            profile: calibrated_profile(),
            sequence: QuerySequence {
                queries: vec![
                    Query {
                        id: "Q0".into(),
                        table: TableSpec { name: "date_dim".into(), size: 9.0 },
                        ops: vec![FilterOp::new("acc0", 0.33), FilterOp::new("acc1", 0.43)],
                    },
                    Query {
                        id: "Q1".into(),
                        table: TableSpec { name: "date_dim_q1".into(), size: 1.0 },
                        ops: vec![FilterOp::new("acc0", 0.14)],
                    },
                ],
                gaps: vec![1.0],
            },
        }
    }
}

impl WorkloadFile {
    pub fn resolve(self) -> Result<Workload> {
        let profile = self.profile.unwrap_or_else(calibrated_profile);
        profile.validate()?;

        let mut tables = HashMap::new();
        for t in &self.tables {
            if tables.insert(t.name.as_str(), t.size_mb).is_some() {
                return Err(Error::Workload(format!("duplicate table {:?}", t.name)));
            }
        }
        let mut queries = HashMap::new();
        for q in &self.queries {
            let size = *tables
                .get(q.table.as_str())
                .ok_or_else(|| Error::Workload(format!("query {:?} references unknown table {:?}", q.id, q.table)))?;
            let query = Query {
                id: q.id.clone(),
                table: TableSpec { name: q.table.clone(), size },
                ops: q
                    .ops
                    .iter()
                    .map(|o| FilterOp { id: o.id.clone(), selectivity: o.selectivity, commutes: o.commutes })
                    .collect(),
            };
            if queries.insert(q.id.as_str(), query).is_some() {
                return Err(Error::Workload(format!("duplicate query {:?}", q.id)));
            }
        }
        let seq = QuerySequence {
            queries: self
                .sequence
                .order
                .iter()
                .map(|id| {
                    queries
                        .get(id.as_str())
                        .cloned()
                        .ok_or_else(|| Error::Workload(format!("sequence references unknown query {id:?}")))
                })
                .collect::<Result<_>>()?,
            gaps: self.sequence.gaps_ms.clone(),
        };
        seq.ensure_valid()?;
        Ok(Workload { profile, sequence: seq })
    }

    /// File form of a sequence. Repeated query ids share one query entry.
    pub fn from_sequence(profile: Option<DeviceProfile>, seq: &QuerySequence) -> Self {
        let mut tables: Vec<TableEntry> = Vec::new();
        let mut queries: Vec<QueryEntry> = Vec::new();
        for q in &seq.queries {
            if !tables.iter().any(|t| t.name == q.table.name) {
                tables.push(TableEntry { name: q.table.name.clone(), size_mb: q.table.size });
            }
            if !queries.iter().any(|e| e.id == q.id) {
                queries.push(QueryEntry {
                    id: q.id.clone(),
                    table: q.table.name.clone(),
                    ops: q
                        .ops
                        .iter()
                        .map(|o| OpEntry { id: o.id.clone(), selectivity: o.selectivity, commutes: o.commutes })
                        .collect(),
                });
            }
        }
        WorkloadFile {
            profile,
            tables,
            queries,
            sequence: SequenceEntry {
                order: seq.queries.iter().map(|q| q.id.clone()).collect(),
                gaps_ms: seq.gaps.clone(),
            },
        }
    }
}
