//! Costs every strategy on the calibrated two-query scenario.
//!
//! cargo run --example calibrated_scenario

use rpuseq::cost::improvement_pct;
use rpuseq::{build_plan, plan_cost, Strategy, Workload};

fn main() -> rpuseq::Result<()> {
    let w = Workload::calibrated_scenario();
    let baseline = plan_cost(&w.sequence, &build_plan(&w.sequence, Strategy::S)?, &w.profile)?.total;

    println!("{:<8} {:>10} {:>12}", "strategy", "total ms", "vs S");
    for s in Strategy::ALL {
        let plan = build_plan(&w.sequence, s)?;
        let cost = plan_cost(&w.sequence, &plan, &w.profile)?;
        let pct = improvement_pct(cost.total, baseline)?;
        println!("{:<8} {:>10.3} {:>11.2}%", s.to_string(), cost.total, pct);
        for q in &cost.per_query {
            println!("  {:<6} {:>10.3}", q.query, q.time);
        }
    }
    Ok(())
}
