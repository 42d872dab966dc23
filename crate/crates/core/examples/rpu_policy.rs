//! Walks the gap between the two queries and shows when the device swaps
//! filter order instead of reloading speculatively, next to the costs of
//! both strategies.
//!
//! cargo run --example rpu_policy -- [scale]

use rpuseq::{build_plan, generate_hints, phase_times, plan_cost, rpu_policy, ReconfigChoice, RpuState, Strategy, Workload};

fn main() -> rpuseq::Result<()> {
    let scale: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let w = Workload::calibrated_scenario();
    let p = w.profile;

    println!("scale {scale}, t_reconfig {} ms", p.t_reconfig);
    println!("{:>6} {:>8} {:>10} {:>10}  decision", "gap", "window", "III", "IV");
    for step in 0..=12 {
        let gap = step as f64;
        let seq = w.sequence.scaled(scale).with_gap(gap);
        let plan = build_plan(&seq, Strategy::S)?;
        let hints = generate_hints(&seq, &plan, &p)?;
        let phases = phase_times(&seq.queries[0], &plan.queries[0], &p)?;
        let decision = rpu_policy(hints.first(), &RpuState::default(), &seq.queries[0], &phases, &p);

        let iii = plan_cost(&seq, &build_plan(&seq, Strategy::III)?, &p)?.total;
        let iv = plan_cost(&seq, &build_plan(&seq, Strategy::IV)?, &p)?.total;
        let window = decision.rationale.map_or(f64::NAN, |t| t.window());
        let choice = match decision.choice {
            ReconfigChoice::Swap => "swap (IV)",
            ReconfigChoice::SpeculativeLoad => "speculative load (III)",
            ReconfigChoice::None => "none",
        };
        println!("{gap:>6.1} {window:>8.3} {iii:>10.3} {iv:>10.3}  {choice}");
    }
    Ok(())
}
