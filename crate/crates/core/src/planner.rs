//! Plan construction, legality, plan choice, hints and the RPU-side
//! reconfiguration policy.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::{self, CostBreakdown, PhaseTimes};
use crate::error::{Error, Result};
use crate::model::{
    DeviceProfile, Placement, Plan, Query, QueryPlan, QuerySequence, SpeculativeLoad, Strategy,
};

/// Accelerators used by two adjacent queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedPair {
    /// Index of the first query of the pair; the second is `first + 1`.
    pub first: usize,
    pub first_id: String,
    pub second_id: String,
    /// Ordered as in the second query.
    pub shared: Vec<String>,
}

/// Common accelerators of every adjacent query pair, in sequence order.
pub fn shared_accelerators(seq: &QuerySequence) -> Vec<SharedPair> {
    seq.queries
        .windows(2)
        .enumerate()
        .map(|(i, w)| SharedPair {
            first: i,
            first_id: w[0].id.clone(),
            second_id: w[1].id.clone(),
            shared: w[1].ops.iter().filter(|op| w[0].has_op(&op.id)).map(|op| op.id.clone()).collect(),
        })
        .collect()
}

fn any_shared(seq: &QuerySequence) -> bool {
    shared_accelerators(seq).iter().any(|p| !p.shared.is_empty())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IllegalPlan {
    ShapeMismatch { plan: usize, sequence: usize },
    MissingPlacement { query: String, op: String },
    UnknownOp { query: String, op: String },
    OrderMismatch { query: String, op: String },
    NonCommuting { query: String, op: String },
    SpeculativeLoad { index: usize, reason: &'static str },
    HintsNotAllowed(Strategy),
    RequiresSequenceKnowledge(Strategy),
    NoSharedAccelerator(Strategy),
}

impl fmt::Display for IllegalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IllegalPlan::ShapeMismatch { plan, sequence } => {
                write!(f, "plan covers {plan} queries, sequence has {sequence}")
            }
            IllegalPlan::MissingPlacement { query, op } => write!(f, "missing placement for {op} in {query}"),
            IllegalPlan::UnknownOp { query, op } => write!(f, "unknown op {op} in {query}"),
            IllegalPlan::OrderMismatch { query, op } => {
                write!(f, "RPU order of {query} does not match its RPU placements at {op}")
            }
            IllegalPlan::NonCommuting { query, op } => write!(f, "non-commuting op {op} reordered in {query}"),
            IllegalPlan::SpeculativeLoad { index, reason } => write!(f, "speculative load #{index}: {reason}"),
            IllegalPlan::HintsNotAllowed(s) => write!(f, "strategy {s} gives no hints but has speculative loads"),
            IllegalPlan::RequiresSequenceKnowledge(s) => write!(f, "strategy {s} requires sequence knowledge"),
            IllegalPlan::NoSharedAccelerator(s) => write!(f, "strategy {s} needs a shared accelerator"),
        }
    }
}

impl std::error::Error for IllegalPlan {}

/// Checks that `plan` covers `seq`, only reorders commuting filters, and only
/// uses sequence knowledge where adjacent queries share an accelerator.
pub fn check_legality(plan: &Plan, seq: &QuerySequence) -> std::result::Result<(), IllegalPlan> {
    if plan.queries.len() != seq.queries.len() {
        return Err(IllegalPlan::ShapeMismatch { plan: plan.queries.len(), sequence: seq.queries.len() });
    }
    for (q, qp) in seq.queries.iter().zip(&plan.queries) {
        check_query_plan(q, qp)?;
    }

    match plan.strategy {
        Strategy::S | Strategy::I if !plan.speculative_loads.is_empty() => {
            return Err(IllegalPlan::HintsNotAllowed(plan.strategy));
        }
        Strategy::II | Strategy::III if !any_shared(seq) => {
            return Err(IllegalPlan::RequiresSequenceKnowledge(plan.strategy));
        }
        Strategy::IV if !any_shared(seq) => return Err(IllegalPlan::NoSharedAccelerator(plan.strategy)),
        Strategy::IV if !plan.speculative_loads.is_empty() => {
            return Err(IllegalPlan::HintsNotAllowed(plan.strategy));
        }
        _ => {}
    }

    let mut issuers = HashSet::new();
    for (index, load) in plan.speculative_loads.iter().enumerate() {
        let bad = |reason| Err(IllegalPlan::SpeculativeLoad { index, reason });
        if load.query + 1 >= seq.queries.len() {
            return bad("no successor query");
        }
        if !issuers.insert(load.query) {
            return bad("more than one load after the same query");
        }
        let (cur, next) = (&seq.queries[load.query], &seq.queries[load.query + 1]);
        let (cur_plan, next_plan) = (&plan.queries[load.query], &plan.queries[load.query + 1]);
        if !cur_plan.rpu_order.contains(&load.after_op) {
            return bad("issued after an op not run on the RPU");
        }
        if load.accelerator == load.after_op {
            return bad("accelerator is already loaded");
        }
        if !(cur.has_op(&load.accelerator) && next.has_op(&load.accelerator)) {
            return bad("accelerator is not shared with the successor");
        }
        if !next_plan.rpu_order.contains(&load.accelerator) {
            return bad("successor does not run the accelerator on the RPU");
        }
    }
    Ok(())
}

fn check_query_plan(q: &Query, qp: &QueryPlan) -> std::result::Result<(), IllegalPlan> {
    let err_op = |op: &str| (q.id.clone(), op.to_string());
    for op in &q.ops {
        if qp.placement(&op.id).is_none() {
            let (query, op) = err_op(&op.id);
            return Err(IllegalPlan::MissingPlacement { query, op });
        }
    }
    for id in qp.placements.keys() {
        if !q.has_op(id) {
            let (query, op) = err_op(id);
            return Err(IllegalPlan::UnknownOp { query, op });
        }
    }
    let mut seen = HashSet::new();
    for id in &qp.rpu_order {
        if qp.placement(id) != Some(Placement::Rpu) || !seen.insert(id.as_str()) {
            let (query, op) = err_op(id);
            return Err(IllegalPlan::OrderMismatch { query, op });
        }
    }
    for (id, p) in &qp.placements {
        if *p == Placement::Rpu && !seen.contains(id.as_str()) {
            let (query, op) = err_op(id);
            return Err(IllegalPlan::OrderMismatch { query, op });
        }
    }
    // ops moved away from the locally preferred position must commute
    let preferred: Vec<String> =
        q.selectivity_order().into_iter().filter(|id| qp.rpu_order.contains(id)).collect();
    for (actual, pref) in qp.rpu_order.iter().zip(&preferred) {
        if actual != pref {
            for id in [actual, pref] {
                if q.op(id).is_some_and(|op| !op.commutes) {
                    let (query, op) = err_op(id);
                    return Err(IllegalPlan::NonCommuting { query, op });
                }
            }
        }
    }
    Ok(())
}

pub fn is_legal(plan: &Plan, seq: &QuerySequence) -> bool {
    check_legality(plan, seq).is_ok()
}

/// Builds the plan of shape `strategy` for `seq`.
///
/// * S: every filter on the RPU in ascending selectivity.
/// * I / II: every query with a successor and at least two filters pushes only
///   its first / second filter; II also reloads the successor's first
///   accelerator during the transfer when that accelerator is shared.
/// * III: like S, plus a speculative reload of the successor's first
///   accelerator after each query's last RPU op when it is shared.
/// * IV: like S, but each query runs last the shared accelerator its
///   successor needs first, when all moved filters commute.
pub fn build_plan(seq: &QuerySequence, strategy: Strategy) -> Result<Plan> {
    seq.ensure_valid()?;
    let n = seq.queries.len();
    let full = |q: &Query| QueryPlan::full_pushdown(q.selectivity_order());

    let mut queries: Vec<QueryPlan> = seq.queries.iter().map(full).collect();
    let mut speculative_loads = Vec::new();

    match strategy {
        Strategy::S => {}
        Strategy::I | Strategy::II => {
            let pick = if strategy == Strategy::I { 0 } else { 1 };
            for (q, qp) in seq.queries[..n - 1].iter().zip(queries.iter_mut()) {
                if q.ops.len() >= 2 {
                    *qp = QueryPlan::partial(q, &q.selectivity_order()[pick]);
                }
            }
            if strategy == Strategy::II {
                speculative_loads = handoff_loads(seq, &queries);
            }
        }
        Strategy::III => speculative_loads = handoff_loads(seq, &queries),
        Strategy::IV => {
            for i in (0..n - 1).rev() {
                let Some(next_first) = queries[i + 1].first_rpu_op().map(str::to_string) else { continue };
                let q = &seq.queries[i];
                if !q.has_op(&next_first) {
                    continue;
                }
                let mut order = queries[i].rpu_order.clone();
                order.retain(|id| *id != next_first);
                order.push(next_first);
                let candidate = QueryPlan::full_pushdown(order);
                if check_query_plan(q, &candidate).is_ok() {
                    queries[i] = candidate;
                }
            }
        }
    }

    let plan = Plan { strategy, queries, speculative_loads };
    check_legality(&plan, seq).map_err(|e| match e {
        IllegalPlan::RequiresSequenceKnowledge(s) => Error::RequiresSequenceKnowledge(s),
        other => Error::IllegalPlan(other),
    })?;
    Ok(plan)
}

/// Speculative reloads of each successor's first accelerator, where that
/// accelerator is shared and not already the last one loaded.
fn handoff_loads(seq: &QuerySequence, queries: &[QueryPlan]) -> Vec<SpeculativeLoad> {
    let mut loads = Vec::new();
    for i in 0..seq.queries.len() - 1 {
        let (Some(last), Some(next_first)) = (queries[i].last_rpu_op(), queries[i + 1].first_rpu_op()) else {
            continue;
        };
        if last != next_first && seq.queries[i].has_op(next_first) {
            loads.push(SpeculativeLoad { query: i, after_op: last.to_string(), accelerator: next_first.to_string() });
        }
    }
    loads
}

/// All plan shapes that apply to `seq`, in strategy order.
///
/// S always; I and II when some query with a successor has two or more
/// filters; III when an adjacent pair shares an accelerator; IV when such a
/// pair's first query has only commuting filters.
pub fn enumerate_plans(seq: &QuerySequence) -> Result<Vec<Plan>> {
    seq.ensure_valid()?;
    let pairs = shared_accelerators(seq);
    let splittable = seq.queries[..seq.len() - 1].iter().any(|q| q.ops.len() >= 2);
    let shared = pairs.iter().any(|p| !p.shared.is_empty());
    let swappable = pairs
        .iter()
        .any(|p| !p.shared.is_empty() && seq.queries[p.first].ops.iter().all(|op| op.commutes));

    let mut plans = vec![build_plan(seq, Strategy::S)?];
    if splittable {
        plans.push(build_plan(seq, Strategy::I)?);
        if shared {
            plans.push(build_plan(seq, Strategy::II)?);
        }
    }
    if shared {
        plans.push(build_plan(seq, Strategy::III)?);
    }
    if swappable {
        plans.push(build_plan(seq, Strategy::IV)?);
    }
    Ok(plans)
}

/// Cheapest applicable plan. Without hints only S and I are considered.
/// Exact ties go to the earlier strategy.
pub fn choose_plan(seq: &QuerySequence, profile: &DeviceProfile, hints_enabled: bool) -> Result<(Plan, CostBreakdown)> {
    let mut best: Option<(Plan, CostBreakdown)> = None;
    for plan in enumerate_plans(seq)? {
        if !hints_enabled && plan.strategy.needs_hints() {
            continue;
        }
        let cost = cost::plan_cost(seq, &plan, profile)?;
        if best.as_ref().is_none_or(|(_, b)| cost.total < b.total) {
            best = Some((plan, cost));
        }
    }
    Ok(best.expect("strategy S is always applicable"))
}

/// What the RPU is told about the query following a given one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hint {
    /// Index of the query the hint accompanies.
    pub query: usize,
    /// Shared accelerators, in the order the next query uses them.
    pub next_accelerators: Vec<String>,
    pub expected_gap: f64,
    pub expected_scan: f64,
}

/// One hint per adjacent pair that shares an accelerator.
pub fn generate_hints(seq: &QuerySequence, plan: &Plan, profile: &DeviceProfile) -> Result<Vec<Hint>> {
    seq.ensure_valid()?;
    check_legality(plan, seq).map_err(Error::IllegalPlan)?;
    Ok(shared_accelerators(seq)
        .into_iter()
        .filter(|p| !p.shared.is_empty())
        .map(|p| {
            let next = &seq.queries[p.first + 1];
            // ordered by the successor's planned RPU order when it uses them there
            let mut accs = p.shared;
            let order = &plan.queries[p.first + 1].rpu_order;
            accs.sort_by_key(|a| order.iter().position(|o| o == a).unwrap_or(usize::MAX));
            Hint {
                query: p.first,
                next_accelerators: accs,
                expected_gap: seq.gaps[p.first],
                expected_scan: next.table.size / profile.r_scan,
            }
        })
        .collect())
}

/// Accelerator configured in the single reconfigurable region.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpuState {
    pub loaded: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReconfigChoice {
    /// Reload the next query's accelerator after the current one finishes (III).
    SpeculativeLoad,
    /// Run the shared accelerator last in the current query (IV).
    Swap,
    /// Plain execution (S).
    None,
}

/// Terms of the `t_trans + t_gap + t_scan <= t_r` test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyTerms {
    pub trans: f64,
    pub gap: f64,
    pub scan: f64,
    pub t_reconfig: f64,
}

impl PolicyTerms {
    pub fn window(&self) -> f64 {
        self.trans + self.gap + self.scan
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconfigDecision {
    pub choice: ReconfigChoice,
    pub rationale: Option<PolicyTerms>,
}

/// Local decision of the RPU for `current` given the hint about its successor.
///
/// Swaps when the time before the successor can use its accelerator
/// (transfer, gap and successor scan) fits inside one reconfiguration and the
/// swap is legal; otherwise loads speculatively.
pub fn rpu_policy(
    hint: Option<&Hint>,
    state: &RpuState,
    current: &Query,
    phases: &PhaseTimes,
    profile: &DeviceProfile,
) -> ReconfigDecision {
    let none = ReconfigDecision { choice: ReconfigChoice::None, rationale: None };
    let Some(hint) = hint else { return none };
    let Some(target) = hint.next_accelerators.first() else { return none };

    let terms = PolicyTerms {
        trans: phases.trans,
        gap: hint.expected_gap,
        scan: hint.expected_scan,
        t_reconfig: profile.t_reconfig,
    };
    let resident = match phases.acc.last() {
        Some(last) => last.op == *target,
        None => state.loaded.as_deref() == Some(target.as_str()),
    };
    if resident {
        return ReconfigDecision { choice: ReconfigChoice::None, rationale: Some(terms) };
    }

    let order: Vec<String> = phases.acc.iter().map(|a| a.op.clone()).collect();
    let swap_legal = order.contains(target) && {
        let mut swapped = order.clone();
        swapped.retain(|id| id != target);
        swapped.push(target.clone());
        order.iter().zip(&swapped).all(|(a, b)| {
            a == b || [a, b].iter().all(|id| current.op(id).is_some_and(|op| op.commutes))
        })
    };

    let choice = if swap_legal && terms.window() <= terms.t_reconfig {
        ReconfigChoice::Swap
    } else {
        ReconfigChoice::SpeculativeLoad
    };
    ReconfigDecision { choice, rationale: Some(terms) }
}
