//! Cost model, planner and discrete-event simulator for running query
//! sequences on a storage-side accelerator with one partially reconfigurable
//! region.
//!
//! * [`model`]: domain types and the calibrated device profile.
//! * [`cost`]: closed-form phase times and plan totals.
//! * [`planner`]: plan enumeration, legality, plan choice, hints and the
//!   accelerator-side reconfiguration policy.
//! * [`simulator`]: event-driven execution producing phase timelines.
//! * [`miner`]: templates and recurring sequences from query logs.
//! * [`sweep`] and [`cli`]: parameter sweeps and the command-line front end.

pub mod cli;
pub mod cost;
pub mod error;
pub mod miner;
pub mod model;
pub mod planner;
pub mod simulator;
pub mod sweep;
pub mod workload;

pub use cost::{filtered_size, improvement, phase_times, plan_cost, CostBreakdown, PhaseTimes};
pub use error::{Error, Result};
pub use model::{
    calibrated_profile, validate_sequence, DeviceProfile, FilterOp, Placement, Plan, Query, QueryPlan,
    QuerySequence, SpeculativeLoad, Strategy, TableSpec,
};
pub use planner::{
    build_plan, check_legality, choose_plan, enumerate_plans, generate_hints, rpu_policy, shared_accelerators, Hint,
    ReconfigChoice, ReconfigDecision, RpuState,
};
pub use simulator::{simulate, validate_timeline, Timeline};
pub use workload::Workload;
