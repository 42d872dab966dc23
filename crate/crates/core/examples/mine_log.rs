//! Mines recurring sequences from a synthetic query log and turns the top
//! one into a workload via a small catalog.
//!
//! cargo run --example mine_log

use rpuseq::miner::{fingerprint, mine_sequences, normalize, parse_catalog, to_workload, LogEntry};
use rpuseq::{calibrated_profile, choose_plan};

const CATALOG: &str = r#"{"entries": [
  {"query": "SELECT count(*) FROM date_dim WHERE d_year = 2000 AND d_moy = 1", "table": "date_dim", "size_mb": 9,
   "ops": [{"id": "acc0", "selectivity": 0.33}, {"id": "acc1", "selectivity": 0.43}]},
  {"query": "SELECT d_date FROM date_dim WHERE d_year = 2000", "table": "date_dim", "size_mb": 1,
   "ops": [{"id": "acc0", "selectivity": 0.14}]}
]}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut log = Vec::new();
    let mut t = 0.0;
    for day in 0..6 {
        // an unrelated report query, far from everything else
        log.push(LogEntry::new(t, format!("SELECT * FROM store_sales WHERE ss_item_sk = {}", 100 + day)));
        t += 60_000.0;
        // the recurring dashboard pair
        let mut first = LogEntry::new(t, format!("select count(*) from date_dim where d_year = {} and d_moy = {}", 1998 + day, day + 1));
        first.duration = Some(54.0);
        log.push(first);
        log.push(LogEntry::new(t + 55.0, format!("SELECT d_date FROM date_dim WHERE d_year = {}", 1998 + day)));
        t += 3_600_000.0;
    }

    let mined = mine_sequences(&log, 2, 4, 1000.0)?;
    for m in &mined {
        let texts: Vec<String> = m
            .templates
            .iter()
            .map(|id| {
                let sample = log.iter().find(|e| fingerprint(&e.text).ok().as_ref() == Some(id)).unwrap();
                normalize(&sample.text).unwrap()
            })
            .collect();
        println!("support {} gaps {:?}", m.support, m.avg_gaps);
        for t in texts {
            println!("  {t}");
        }
    }

    let catalog = parse_catalog(CATALOG)?;
    let seq = to_workload(&mined[0], &catalog)?;
    let profile = calibrated_profile();
    let (plan, cost) = choose_plan(&seq, &profile, true)?;
    println!("mined workload: {} queries, best plan {} at {:.3} ms", seq.len(), plan.strategy, cost.total);
    Ok(())
}
