//! Simulates one strategy and draws its per-resource timeline.
//!
//! cargo run --example simulate_timeline -- [S|I|II|III|IV]

use rpuseq::simulator::{PhaseKind, Resource};
use rpuseq::{build_plan, plan_cost, simulate, validate_timeline, Strategy, Workload};

const WIDTH: usize = 72;

fn main() -> rpuseq::Result<()> {
    let strategy: Strategy = std::env::args().nth(1).as_deref().unwrap_or("III").parse()?;
    let w = Workload::calibrated_scenario();
    let plan = build_plan(&w.sequence, strategy)?;
    let timeline = simulate(&w.sequence, &plan, &w.profile)?;
    validate_timeline(&timeline).expect("simulator produced an invalid timeline");

    let analytic = plan_cost(&w.sequence, &plan, &w.profile)?.total;
    println!("strategy {strategy}: makespan {:.3} ms (closed form {:.3} ms)", timeline.makespan, analytic);

    let scale = WIDTH as f64 / timeline.makespan;
    let col = |t: f64| ((t * scale).round() as usize).min(WIDTH);
    for resource in [Resource::Scan, Resource::Pr, Resource::Net, Resource::Dbms, Resource::Idle] {
        let mut row = vec![' '; WIDTH];
        for p in timeline.phases.iter().filter(|p| p.resource == resource) {
            let mark = match p.label {
                PhaseKind::Reconfig => 'R',
                PhaseKind::Gap => '.',
                _ => p.query.chars().last().unwrap_or('?'),
            };
            for c in &mut row[col(p.start)..col(p.end).max(col(p.start) + 1).min(WIDTH)] {
                *c = mark;
            }
        }
        println!("{:<5}|{}|", resource.to_string(), row.into_iter().collect::<String>());
    }
    println!("digits mark the owning query, R a reconfiguration, . the idle gap");
    Ok(())
}
