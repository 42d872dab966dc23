//! Command-line front end. The `rpuseq` binary only forwards to [`run`].
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 on I/O failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cost::plan_cost;
use crate::error::{Error, Result};
use crate::miner::{self, MinedSequence};
use crate::model::Strategy;
use crate::planner::{build_plan, choose_plan, enumerate_plans, generate_hints};
use crate::simulator::{simulate, validate_timeline, write_timeline_csv};
use crate::sweep::{run_sweep, sweep_csv, FixedParams, SweepSpec, SweepVariable};
use crate::workload::{Workload, WorkloadFile};

#[derive(Debug, Parser)]
#[command(name = "rpuseq", version, about = "Query-sequence planning for a reconfigurable storage accelerator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Total execution time of one strategy (or the chosen one).
    Cost(PlanArgs),
    /// Choose the cheapest plan and print its hints.
    Plan(PlanArgs),
    /// Simulate a plan and emit its phase timeline as CSV.
    Simulate(SimulateArgs),
    /// Sweep scale, selectivity or gap and emit totals and improvements as CSV.
    Sweep(SweepArgs),
    /// Mine recurring query sequences from a log.
    Mine(MineArgs),
}

#[derive(Debug, Args)]
pub struct WorkloadArgs {
    /// Workload JSON file; the calibrated two-query scenario when omitted.
    #[arg(long)]
    pub workload: Option<PathBuf>,
}

impl WorkloadArgs {
    fn load(&self) -> Result<Workload> {
        match &self.workload {
            Some(path) => Workload::load(path),
            None => Ok(Workload::calibrated_scenario()),
        }
    }
}

#[derive(Debug, Args)]
pub struct HintArgs {
    /// Allow strategies that need sequence knowledge (II, III, IV).
    #[arg(long, overrides_with = "no_hints")]
    pub hints: bool,
    #[arg(long, overrides_with = "hints")]
    pub no_hints: bool,
}

impl HintArgs {
    fn enabled(&self) -> bool {
        !self.no_hints
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    /// S, I, II, III, IV or auto.
    #[arg(long, default_value = "auto")]
    pub strategy: String,
    #[command(flatten)]
    pub hints: HintArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Timeline CSV output; stdout when omitted.
    #[arg(long)]
    pub timeline: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    /// scale, selectivity or gap.
    #[arg(long = "sweep")]
    pub variable: String,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub steps: usize,
    /// Comma-separated strategies; all five when omitted.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<String>,
    /// Fixed table-size scale factor when not sweeping scale.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Fixed common selectivity.
    #[arg(long)]
    pub selectivity: Option<f64>,
    /// Fixed gap in ms.
    #[arg(long)]
    pub gap: Option<f64>,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Log file with `epoch_ms<TAB>query[<TAB>duration_ms]` lines.
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub min_support: usize,
    #[arg(long, default_value_t = 4)]
    pub max_len: usize,
    /// Longest gap (ms) still considered part of one sequence.
    #[arg(long, default_value_t = 1000.0)]
    pub max_gap: f64,
    /// Report CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Catalog JSON mapping templates to tables and filters.
    #[arg(long, requires = "workload_out")]
    pub catalog: Option<PathBuf>,
    /// Workload JSON written for the top mined sequence covered by the catalog.
    #[arg(long, requires = "catalog")]
    pub workload_out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 2,
        _ => 1,
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Cost(a) => cmd_cost(a, out),
        Command::Plan(a) => cmd_plan(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Mine(a) => cmd_mine(a, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn parse_strategy(text: &str) -> Result<Option<Strategy>> {
    if text.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        text.parse().map(Some)
    }
}

fn resolve_plan(args: &PlanArgs, w: &Workload) -> Result<crate::model::Plan> {
    match parse_strategy(&args.strategy)? {
        Some(s) => {
            if s.needs_hints() && !args.hints.enabled() {
                return Err(Error::InvalidArgument(format!("strategy {s} requires --hints")));
            }
            build_plan(&w.sequence, s)
        }
        None => choose_plan(&w.sequence, &w.profile, args.hints.enabled()).map(|(p, _)| p),
    }
}

fn cmd_cost(args: &PlanArgs, out: &mut dyn Write) -> Result<()> {
    let w = args.workload.load()?;
    let plan = resolve_plan(args, &w)?;
    let cost = plan_cost(&w.sequence, &plan, &w.profile)?;
    let mut text = format!("strategy {}\n", cost.strategy);
    for q in &cost.per_query {
        text.push_str(&format!("  {} {:.3} ms\n", q.query, q.time));
    }
    text.push_str(&format!("total {:.3} ms\n", cost.total));
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn cmd_plan(args: &PlanArgs, out: &mut dyn Write) -> Result<()> {
    let w = args.workload.load()?;
    let (seq, profile) = (&w.sequence, &w.profile);
    let plan = resolve_plan(args, &w)?;
    let cost = plan_cost(seq, &plan, profile)?;

    let mut text = format!("strategy {} total {:.3} ms\n", plan.strategy, cost.total);
    for (q, qp) in seq.queries.iter().zip(&plan.queries) {
        let host: Vec<&str> = q
            .ops
            .iter()
            .filter(|op| qp.placement(&op.id) == Some(crate::model::Placement::Host))
            .map(|op| op.id.as_str())
            .collect();
        text.push_str(&format!("  {}: rpu [{}] host [{}]\n", q.id, qp.rpu_order.join(", "), host.join(", ")));
    }
    for l in &plan.speculative_loads {
        text.push_str(&format!("  speculative load {} after {} in {}\n", l.accelerator, l.after_op, seq.queries[l.query].id));
    }
    if args.hints.enabled() {
        for h in generate_hints(seq, &plan, profile)? {
            text.push_str(&format!(
                "  hint after {}: next [{}] gap {:.3} ms scan {:.3} ms\n",
                seq.queries[h.query].id,
                h.next_accelerators.join(", "),
                h.expected_gap,
                h.expected_scan
            ));
        }
    }
    text.push_str("candidates:\n");
    for p in enumerate_plans(seq)? {
        if p.strategy.needs_hints() && !args.hints.enabled() {
            continue;
        }
        let c = plan_cost(seq, &p, profile)?;
        text.push_str(&format!("  {:<3} {:.3} ms\n", p.strategy, c.total));
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let w = args.plan.workload.load()?;
    let plan = resolve_plan(&args.plan, &w)?;
    let timeline = simulate(&w.sequence, &plan, &w.profile)?;
    if let Err(v) = validate_timeline(&timeline) {
        let msg: Vec<String> = v.iter().map(|v| v.to_string()).collect();
        return Err(Error::Scheduling(msg.join("; ")));
    }
    match &args.timeline {
        Some(path) => {
            let mut buf = Vec::new();
            write_timeline_csv(&timeline, &mut buf).map_err(|e| Error::io(path, e))?;
            write_file(path, &buf)?;
            writeln!(out, "strategy {} makespan {:.3} ms", plan.strategy, timeline.makespan).map_err(stdout_err)
        }
        None => write_timeline_csv(&timeline, out).map_err(stdout_err),
    }
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let w = args.workload.load()?;
    let strategies = if args.strategies.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        args.strategies.iter().map(|s| s.parse()).collect::<Result<Vec<Strategy>>>()?
    };
    let spec = SweepSpec {
        variable: args.variable.parse::<SweepVariable>()?,
        from: args.from,
        to: args.to,
        steps: args.steps,
        fixed: FixedParams { scale: args.scale, selectivity: args.selectivity, gap: args.gap },
        strategies,
    };
    let csv = sweep_csv(&run_sweep(&spec, &w.sequence, &w.profile)?);
    match &args.out {
        Some(path) => write_file(path, csv.as_bytes()),
        None => out.write_all(csv.as_bytes()).map_err(stdout_err),
    }
}

fn cmd_mine(args: &MineArgs, out: &mut dyn Write) -> Result<()> {
    let log = miner::read_log(&args.log)?;
    let mined = miner::mine_sequences(&log, args.min_support, args.max_len, args.max_gap)?;
    let report = miner::report_csv(&mined);
    match &args.out {
        Some(path) => {
            write_file(path, report.as_bytes())?;
            let mut legend = std::collections::BTreeMap::new();
            for e in &log {
                legend.entry(miner::fingerprint(&e.text)?).or_insert(miner::normalize(&e.text)?);
            }
            let mut text = format!("{} sequences\n", mined.len());
            for (id, template) in legend {
                text.push_str(&format!("  {id}  {template}\n"));
            }
            out.write_all(text.as_bytes()).map_err(stdout_err)?;
        }
        None => out.write_all(report.as_bytes()).map_err(stdout_err)?,
    }

    if let (Some(catalog_path), Some(workload_path)) = (&args.catalog, &args.workload_out) {
        let text = std::fs::read_to_string(catalog_path).map_err(|e| Error::io(catalog_path, e))?;
        let catalog = miner::parse_catalog(&text)?;
        let top: &MinedSequence = mined
            .iter()
            .find(|m| m.templates.iter().all(|t| catalog.contains_key(t)))
            .ok_or_else(|| Error::Workload("no mined sequence is covered by the catalog".into()))?;
        let seq = miner::to_workload(top, &catalog)?;
        let file = WorkloadFile::from_sequence(None, &seq);
        write_file(workload_path, serde_json::to_string_pretty(&file)?.as_bytes())?;
    }
    Ok(())
}
