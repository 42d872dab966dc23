//! Loads a workload file (or a built-in three-query chain) and compares the
//! locally chosen plan with the one chosen using sequence hints.
//!
//! cargo run --example custom_workload -- [workload.json]

use rpuseq::{choose_plan, enumerate_plans, plan_cost, Workload};

const CHAIN: &str = r#"{
  "tables": [
    {"name": "orders", "size_mb": 24},
    {"name": "lineitem", "size_mb": 6},
    {"name": "customer", "size_mb": 2}
  ],
  "queries": [
    {"id": "recent_orders", "table": "orders",
     "ops": [{"id": "date_range", "selectivity": 0.2}, {"id": "status_eq", "selectivity": 0.5}]},
    {"id": "open_items", "table": "lineitem",
     "ops": [{"id": "date_range", "selectivity": 0.3, "commutes": false}, {"id": "qty_gt", "selectivity": 0.6}]},
    {"id": "vip_customers", "table": "customer",
     "ops": [{"id": "date_range", "selectivity": 0.05}, {"id": "region_eq", "selectivity": 0.5}]}
  ],
  "sequence": {"order": ["recent_orders", "open_items", "vip_customers"], "gaps_ms": [2, 4]}
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let w = match std::env::args().nth(1) {
        Some(path) => Workload::load(path)?,
        None => Workload::from_json(CHAIN)?,
    };

    for plan in enumerate_plans(&w.sequence)? {
        let cost = plan_cost(&w.sequence, &plan, &w.profile)?;
        println!("{:<4} {:>9.3} ms  loads {}", plan.strategy.to_string(), cost.total, plan.speculative_loads.len());
    }
    let (local, local_cost) = choose_plan(&w.sequence, &w.profile, false)?;
    let (hinted, hinted_cost) = choose_plan(&w.sequence, &w.profile, true)?;
    println!("without hints: {} {:.3} ms", local.strategy, local_cost.total);
    println!("with hints:    {} {:.3} ms", hinted.strategy, hinted_cost.total);
    Ok(())
}
