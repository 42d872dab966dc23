//! Closed-form phase times and sequence totals.
//!
//! Every phase duration is `size / rate`. For two queries the totals reduce to
//! the usual pair formulas, e.g. for the full-pushdown baseline
//!
//! ```text
//! t_Q0 = max(t_r, t_scan0) + t_acc0 + t_r + t_acc1 + t_trans0
//! t_Q1 = max(t_r, t_scan1) + t_acc0' + t_trans1
//! t_S  = t_Q0 + t_gap + t_Q1
//! ```
//!
//! and for speculative reloading the successor's leading term becomes
//! `max(t_r, t_trans0 + t_gap + t_scan1)`. Longer sequences compose pairwise:
//! each query starts with `max(ready, t_scan)` where `ready` is the time still
//! needed at its arrival before its first accelerator is resident.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceProfile, Placement, Plan, Query, QueryPlan, QuerySequence, Strategy};
use crate::planner::{self, IllegalPlan};

/// Output size of a filter with the given selectivity.
pub fn filtered_size(input_size: f64, selectivity: f64) -> f64 {
    input_size * selectivity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccPhase {
    pub op: String,
    pub time: f64,
    pub input_size: f64,
    pub output_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostPhase {
    pub op: String,
    pub time: f64,
    pub input_size: f64,
}

/// Per-phase durations of one query under a given placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub scan: f64,
    /// RPU ops in execution order.
    pub acc: Vec<AccPhase>,
    pub trans: f64,
    /// Size sent to the host.
    pub transfer_size: f64,
    /// Host ops in query order, after the transfer.
    pub host: Vec<HostPhase>,
    /// Sum of the host op times.
    pub dbms: f64,
}

impl PhaseTimes {
    pub fn acc_total(&self) -> f64 {
        self.acc.iter().map(|a| a.time).sum()
    }

    /// Time from the end of the last accelerator run to query completion.
    pub fn tail(&self) -> f64 {
        self.trans + self.dbms
    }
}

/// Phase durations of `query` when placed and ordered as in `qplan`.
pub fn phase_times(query: &Query, qplan: &QueryPlan, profile: &DeviceProfile) -> Result<PhaseTimes> {
    let mut size = query.table.size;
    let scan = size / profile.r_scan;

    let mut acc = Vec::with_capacity(qplan.rpu_order.len());
    for id in &qplan.rpu_order {
        let op = query.op(id).ok_or_else(|| {
            Error::IllegalPlan(IllegalPlan::UnknownOp { query: query.id.clone(), op: id.clone() })
        })?;
        if qplan.placement(id) != Some(Placement::Rpu) {
            return Err(Error::IllegalPlan(IllegalPlan::OrderMismatch {
                query: query.id.clone(),
                op: id.clone(),
            }));
        }
        let output = filtered_size(size, op.selectivity);
        acc.push(AccPhase { op: id.clone(), time: size / profile.r_acc, input_size: size, output_size: output });
        size = output;
    }

    let transfer_size = size;
    let trans = size / profile.r_network;

    let mut host = Vec::new();
    for op in &query.ops {
        if qplan.placement(&op.id) == Some(Placement::Host) {
            host.push(HostPhase { op: op.id.clone(), time: profile.c_dbms * size, input_size: size });
            size = filtered_size(size, op.selectivity);
        }
    }
    let dbms = host.iter().map(|h| h.time).sum();

    Ok(PhaseTimes { scan, acc, trans, transfer_size, host, dbms })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTime {
    pub query: String,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub strategy: Strategy,
    /// Per-query times; only filled for plans without speculative loads,
    /// where query times are separable.
    pub per_query: Vec<QueryTime>,
    /// Arrival of the first query to completion of the last, gaps included.
    pub total: f64,
}

/// Total execution time of `seq` under `plan`.
pub fn plan_cost(seq: &QuerySequence, plan: &Plan, profile: &DeviceProfile) -> Result<CostBreakdown> {
    profile.validate()?;
    seq.ensure_valid()?;
    planner::check_legality(plan, seq).map_err(|e| match e {
        IllegalPlan::RequiresSequenceKnowledge(s) => Error::RequiresSequenceKnowledge(s),
        other => Error::IllegalPlan(other),
    })?;

    let phases = seq
        .queries
        .iter()
        .zip(&plan.queries)
        .map(|(q, qp)| phase_times(q, qp, profile))
        .collect::<Result<Vec<_>>>()?;

    for load in &plan.speculative_loads {
        if plan.queries[load.query].last_rpu_op() != Some(load.after_op.as_str()) {
            return Err(Error::Scheduling(format!(
                "speculative load of {} after {} in query {} while PR busy",
                load.accelerator, load.after_op, seq.queries[load.query].id
            )));
        }
    }

    let tr = profile.t_reconfig;
    let separable = plan.speculative_loads.is_empty();
    let mut per_query = Vec::new();
    let mut total = 0.0;
    let mut loaded: Option<&str> = None;
    // speculative reconfiguration in flight: (accelerator, time elapsed since it started)
    let mut pending: Option<(&str, f64)> = None;

    for (i, (qp, ph)) in plan.queries.iter().zip(&phases).enumerate() {
        let gap = seq.gaps.get(i).copied().unwrap_or(0.0);
        let t_q = match qp.first_rpu_op() {
            None => {
                let t = ph.scan + ph.tail();
                if let Some((_, elapsed)) = pending.as_mut() {
                    *elapsed += t + gap;
                }
                t
            }
            Some(first) => {
                let ready = match pending.take() {
                    Some((acc, elapsed)) if acc == first => tr - elapsed,
                    Some((_, elapsed)) => (tr - elapsed).max(0.0) + tr,
                    None if loaded == Some(first) => 0.0,
                    None => tr,
                };
                let reloads = (qp.rpu_order.len() - 1) as f64 * tr;
                loaded = qp.last_rpu_op();
                if let Some(load) = plan.speculative_load_after(i) {
                    pending = Some((load.accelerator.as_str(), ph.tail() + gap));
                }
                ready.max(ph.scan) + ph.acc_total() + reloads + ph.tail()
            }
        };
        if separable {
            per_query.push(QueryTime { query: seq.queries[i].id.clone(), time: t_q });
        }
        total += t_q + gap;
    }

    Ok(CostBreakdown { strategy: plan.strategy, per_query, total })
}

/// Percentage reduction of `candidate` against `baseline`; negative when the
/// candidate is slower.
pub fn improvement(candidate: &CostBreakdown, baseline: &CostBreakdown) -> Result<f64> {
    improvement_pct(candidate.total, baseline.total)
}

pub fn improvement_pct(candidate_total: f64, baseline_total: f64) -> Result<f64> {
    if baseline_total.is_nan() || baseline_total <= 0.0 {
        return Err(Error::ZeroBaseline(baseline_total));
    }
    Ok(100.0 * (1.0 - candidate_total / baseline_total))
}
