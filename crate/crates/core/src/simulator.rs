//! Event-driven execution of a plan on a single reconfigurable region.
//!
//! Scheduling rules:
//! * a query's scan starts at its arrival and may overlap reconfiguration;
//! * an accelerator runs only once its configuration is loaded and the scan
//!   has finished, and never while the region is being reconfigured;
//! * the transfer follows the last accelerator run, host operators follow the
//!   transfer;
//! * a speculative reconfiguration starts when its issuing op finishes and may
//!   overlap transfer, host work, the gap and the next scan;
//! * the next query arrives one gap after the previous one completed.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cost::{self, PhaseTimes};
use crate::error::{Error, Result};
use crate::model::{DeviceProfile, Plan, QuerySequence};
use crate::planner;

/// Query column value for phases that belong to no query.
pub const NO_QUERY: &str = "—";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Resource {
    Scan,
    Pr,
    Net,
    Dbms,
    Idle,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::Scan => "SCAN",
            Resource::Pr => "PR",
            Resource::Net => "NET",
            Resource::Dbms => "DBMS",
            Resource::Idle => "IDLE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseKind {
    Scan,
    Reconfig,
    AccExec,
    Transfer,
    Dbms,
    Gap,
}

impl PhaseKind {
    pub fn resource(self) -> Resource {
        match self {
            PhaseKind::Scan => Resource::Scan,
            PhaseKind::Reconfig | PhaseKind::AccExec => Resource::Pr,
            PhaseKind::Transfer => Resource::Net,
            PhaseKind::Dbms => Resource::Dbms,
            PhaseKind::Gap => Resource::Idle,
        }
    }
}

impl fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseKind::Scan => "scan",
            PhaseKind::Reconfig => "reconfig",
            PhaseKind::AccExec => "acc-exec",
            PhaseKind::Transfer => "transfer",
            PhaseKind::Dbms => "dbms",
            PhaseKind::Gap => "gap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub resource: Resource,
    pub label: PhaseKind,
    pub query: String,
    /// Accelerator or host operator, when the phase concerns one.
    pub op: Option<String>,
    pub start: f64,
    pub end: f64,
}

impl Phase {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    fn overlaps(&self, other: &Phase) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    /// Sorted by start time, then resource.
    pub phases: Vec<Phase>,
    pub makespan: f64,
}

// Ties at equal time resolve in this order, then by query index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventRank {
    ReconfigEnd,
    ScanEnd,
    AccEnd,
    TransferEnd,
    DbmsEnd,
    Arrival,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum EventKind {
    Arrival,
    ScanEnd,
    ReconfigEnd { acc: String },
    AccEnd { step: usize },
    TransferEnd,
    DbmsEnd { step: usize },
}

impl EventKind {
    fn rank(&self) -> EventRank {
        match self {
            EventKind::ReconfigEnd { .. } => EventRank::ReconfigEnd,
            EventKind::ScanEnd => EventRank::ScanEnd,
            EventKind::AccEnd { .. } => EventRank::AccEnd,
            EventKind::TransferEnd => EventRank::TransferEnd,
            EventKind::DbmsEnd { .. } => EventRank::DbmsEnd,
            EventKind::Arrival => EventRank::Arrival,
        }
    }
}

#[derive(Debug, Clone)]
struct Event {
    time: f64,
    query: usize,
    seq: u64,
    kind: EventKind,
}

impl Event {
    fn key(&self) -> (f64, EventRank, usize, u64) {
        (self.time, self.kind.rank(), self.query, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)).then(b.2.cmp(&a.2)).then(b.3.cmp(&a.3))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum PrActivity {
    Idle,
    Reconfiguring(String),
    Executing,
}

#[derive(Debug, Clone)]
struct ReconfigRequest {
    acc: String,
    query: usize,
}

#[derive(Debug, Clone, Default)]
struct QueryProgress {
    scanned: bool,
    /// Index into the RPU order of the next op to execute.
    next_op: usize,
}

struct Engine<'a> {
    seq: &'a QuerySequence,
    plan: &'a Plan,
    profile: &'a DeviceProfile,
    phases_of: Vec<PhaseTimes>,
    events: BinaryHeap<Event>,
    next_seq: u64,
    now: f64,
    pr: PrActivity,
    loaded: Option<String>,
    pr_queue: VecDeque<ReconfigRequest>,
    progress: Vec<QueryProgress>,
    completed: Option<f64>,
    phases: Vec<Phase>,
}

impl<'a> Engine<'a> {
    fn push(&mut self, time: f64, query: usize, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.push(Event { time, query, seq, kind });
    }

    fn record(&mut self, label: PhaseKind, query: usize, op: Option<&str>, start: f64, end: f64) {
        if end > start {
            self.phases.push(Phase {
                resource: label.resource(),
                label,
                query: self.seq.queries[query].id.clone(),
                op: op.map(str::to_string),
                start,
                end,
            });
        }
    }

    fn run(mut self) -> Result<Timeline> {
        self.push(0.0, 0, EventKind::Arrival);
        while let Some(ev) = self.events.pop() {
            self.now = ev.time;
            let q = ev.query;
            match ev.kind {
                EventKind::Arrival => self.on_arrival(q),
                EventKind::ScanEnd => {
                    self.progress[q].scanned = true;
                    self.try_exec(q);
                }
                EventKind::ReconfigEnd { acc } => {
                    self.loaded = Some(acc);
                    self.pr = PrActivity::Idle;
                    self.start_pr();
                    self.try_exec(q);
                }
                EventKind::AccEnd { step } => self.on_acc_end(q, step)?,
                EventKind::TransferEnd => self.start_dbms(q, 0),
                EventKind::DbmsEnd { step } => self.start_dbms(q, step + 1),
            }
        }
        let completed = self
            .completed
            .ok_or_else(|| Error::Scheduling("sequence did not run to completion".into()))?;

        let mut phases = self.phases;
        phases.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.resource.cmp(&b.resource)));
        let makespan = phases.iter().map(|p| p.end).fold(completed, f64::max);
        Ok(Timeline { phases, makespan })
    }

    fn on_arrival(&mut self, q: usize) {
        let scan = self.phases_of[q].scan;
        self.record(PhaseKind::Scan, q, None, self.now, self.now + scan);
        self.push(self.now + scan, q, EventKind::ScanEnd);

        if let Some(first) = self.plan.queries[q].first_rpu_op() {
            let in_flight = matches!(&self.pr, PrActivity::Reconfiguring(acc) if acc == first)
                || self.pr_queue.back().is_some_and(|r| r.acc == first);
            let resident = self.loaded.as_deref() == Some(first) && self.pr_queue.is_empty()
                && !matches!(self.pr, PrActivity::Reconfiguring(_));
            if !in_flight && !resident {
                self.pr_queue.push_back(ReconfigRequest { acc: first.to_string(), query: q });
                self.start_pr();
            }
        }
    }

    fn start_pr(&mut self) {
        while self.pr == PrActivity::Idle {
            let Some(req) = self.pr_queue.pop_front() else { return };
            if self.loaded.as_deref() == Some(req.acc.as_str()) {
                continue;
            }
            let end = self.now + self.profile.t_reconfig;
            self.record(PhaseKind::Reconfig, req.query, Some(&req.acc), self.now, end);
            self.pr = PrActivity::Reconfiguring(req.acc.clone());
            self.push(end, req.query, EventKind::ReconfigEnd { acc: req.acc });
        }
    }

    fn try_exec(&mut self, q: usize) {
        let progress = &self.progress[q];
        if !progress.scanned {
            return;
        }
        let order = &self.plan.queries[q].rpu_order;
        if order.is_empty() {
            // nothing on the accelerator: the scan feeds the transfer directly
            if progress.next_op == 0 {
                self.progress[q].next_op = 1;
                self.start_transfer(q);
            }
            return;
        }
        let step = progress.next_op;
        let Some(acc) = order.get(step) else { return };
        if self.pr != PrActivity::Idle || !self.pr_queue.is_empty() || self.loaded.as_deref() != Some(acc.as_str()) {
            return;
        }
        let time = self.phases_of[q].acc[step].time;
        let acc = acc.clone();
        self.record(PhaseKind::AccExec, q, Some(&acc), self.now, self.now + time);
        self.pr = PrActivity::Executing;
        self.progress[q].next_op = step + 1;
        self.push(self.now + time, q, EventKind::AccEnd { step });
    }

    fn on_acc_end(&mut self, q: usize, step: usize) -> Result<()> {
        self.pr = PrActivity::Idle;
        let order = &self.plan.queries[q].rpu_order;
        let last = step + 1 == order.len();
        let speculative = self
            .plan
            .speculative_load_after(q)
            .filter(|l| l.after_op == order[step])
            .cloned();

        if let Some(load) = &speculative {
            if !last {
                return Err(Error::Scheduling(format!(
                    "speculative load of {} after {} in query {} while PR busy with {}",
                    load.accelerator,
                    load.after_op,
                    self.seq.queries[q].id,
                    order[step + 1]
                )));
            }
        }

        if last {
            self.start_transfer(q);
            if let Some(load) = speculative {
                self.pr_queue.push_back(ReconfigRequest { acc: load.accelerator, query: q + 1 });
            }
        } else {
            let next = order[step + 1].clone();
            self.pr_queue.push_back(ReconfigRequest { acc: next, query: q });
        }
        self.start_pr();
        self.try_exec(q);
        Ok(())
    }

    fn start_transfer(&mut self, q: usize) {
        let trans = self.phases_of[q].trans;
        self.record(PhaseKind::Transfer, q, None, self.now, self.now + trans);
        self.push(self.now + trans, q, EventKind::TransferEnd);
    }

    fn start_dbms(&mut self, q: usize, step: usize) {
        match self.phases_of[q].host.get(step) {
            Some(h) => {
                let (op, time) = (h.op.clone(), h.time);
                self.record(PhaseKind::Dbms, q, Some(&op), self.now, self.now + time);
                self.push(self.now + time, q, EventKind::DbmsEnd { step });
            }
            None => self.complete(q),
        }
    }

    fn complete(&mut self, q: usize) {
        if q + 1 == self.seq.queries.len() {
            self.completed = Some(self.now);
            return;
        }
        let gap = self.seq.gaps[q];
        if gap > 0.0 {
            self.phases.push(Phase {
                resource: Resource::Idle,
                label: PhaseKind::Gap,
                query: NO_QUERY.to_string(),
                op: None,
                start: self.now,
                end: self.now + gap,
            });
        }
        self.push(self.now + gap, q + 1, EventKind::Arrival);
    }
}

/// Runs `plan` over `seq` and returns the phase timeline.
pub fn simulate(seq: &QuerySequence, plan: &Plan, profile: &DeviceProfile) -> Result<Timeline> {
    profile.validate()?;
    seq.ensure_valid()?;
    planner::check_legality(plan, seq).map_err(Error::IllegalPlan)?;
    let phases_of = seq
        .queries
        .iter()
        .zip(&plan.queries)
        .map(|(q, qp)| cost::phase_times(q, qp, profile))
        .collect::<Result<Vec<_>>>()?;

    Engine {
        seq,
        plan,
        profile,
        phases_of,
        events: BinaryHeap::new(),
        next_seq: 0,
        now: 0.0,
        pr: PrActivity::Idle,
        loaded: None,
        pr_queue: VecDeque::new(),
        progress: vec![QueryProgress::default(); seq.queries.len()],
        completed: None,
        phases: Vec::new(),
    }
    .run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimelineViolationKind {
    NegativeDuration,
    ResourceOverlap,
    PrConflict,
    PhaseOrder,
    Makespan,
}

impl TimelineViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            TimelineViolationKind::NegativeDuration => "negative duration",
            TimelineViolationKind::ResourceOverlap => "resource overlap",
            TimelineViolationKind::PrConflict => "PR conflict",
            TimelineViolationKind::PhaseOrder => "phase order",
            TimelineViolationKind::Makespan => "makespan",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineViolation {
    pub kind: TimelineViolationKind,
    pub detail: String,
}

impl fmt::Display for TimelineViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.detail)
    }
}

fn describe(p: &Phase) -> String {
    format!("{} {} {} [{:.6}, {:.6}]", p.resource, p.label, p.query, p.start, p.end)
}

/// Checks resource exclusivity, the no-execution-during-reconfiguration
/// rule, per-query phase order and the makespan.
pub fn validate_timeline(t: &Timeline) -> std::result::Result<(), Vec<TimelineViolation>> {
    let mut out = Vec::new();
    let mut push = |kind, detail| out.push(TimelineViolation { kind, detail });
    let tol = |x: f64| 1e-9 * x.abs().max(1.0);

    for p in &t.phases {
        if p.end < p.start {
            push(TimelineViolationKind::NegativeDuration, describe(p));
        }
    }

    for (i, a) in t.phases.iter().enumerate() {
        for b in &t.phases[i + 1..] {
            if !a.overlaps(b) {
                continue;
            }
            let pr_pair = matches!(
                (a.label, b.label),
                (PhaseKind::Reconfig, PhaseKind::AccExec) | (PhaseKind::AccExec, PhaseKind::Reconfig)
            );
            if pr_pair {
                push(TimelineViolationKind::PrConflict, format!("{} overlaps {}", describe(a), describe(b)));
            } else if a.resource == b.resource {
                push(TimelineViolationKind::ResourceOverlap, format!("{} overlaps {}", describe(a), describe(b)));
            }
        }
    }

    // scan < acc-exec < transfer < dbms within each query
    let stage = |k: PhaseKind| match k {
        PhaseKind::Scan => Some(0),
        PhaseKind::AccExec => Some(1),
        PhaseKind::Transfer => Some(2),
        PhaseKind::Dbms => Some(3),
        _ => None,
    };
    for a in &t.phases {
        for b in &t.phases {
            if a.query != b.query || a.query == NO_QUERY {
                continue;
            }
            if let (Some(sa), Some(sb)) = (stage(a.label), stage(b.label)) {
                if sa < sb && b.start + tol(b.start) < a.end {
                    push(TimelineViolationKind::PhaseOrder, format!("{} starts before {} ends", describe(b), describe(a)));
                }
            }
        }
    }

    let max_end = t.phases.iter().map(|p| p.end).fold(0.0, f64::max);
    if (t.makespan - max_end).abs() > tol(max_end) {
        push(TimelineViolationKind::Makespan, format!("makespan {:.6} but last phase ends at {:.6}", t.makespan, max_end));
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

pub const TIMELINE_CSV_HEADER: &str = "resource,label,query,start_ms,end_ms";

/// Writes the timeline as CSV, one phase per row, times with six decimals.
pub fn write_timeline_csv<W: Write>(t: &Timeline, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{TIMELINE_CSV_HEADER}")?;
    for p in &t.phases {
        writeln!(w, "{},{},{},{:.6},{:.6}", p.resource, p.label, p.query, p.start, p.end)?;
    }
    Ok(())
}

pub fn timeline_csv(t: &Timeline) -> String {
    let mut buf = Vec::new();
    write_timeline_csv(t, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("timeline CSV is UTF-8")
}
