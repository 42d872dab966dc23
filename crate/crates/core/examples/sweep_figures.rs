//! Regenerates the scale, selectivity and gap sweeps as CSV files.
//!
//! cargo run --example sweep_figures -- [out_dir]

use std::path::PathBuf;

use rpuseq::sweep::{run_sweep, sweep_csv, SweepSpec, SweepVariable};
use rpuseq::Workload;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweeps".into()));
    std::fs::create_dir_all(&dir)?;
    let w = Workload::calibrated_scenario();

    let scale = SweepSpec::new(SweepVariable::Scale, 1.0, 5.0, 17);

    let mut selectivity = SweepSpec::new(SweepVariable::Selectivity, 0.0, 1.0, 21);
    selectivity.fixed.gap = Some(1.0);

    let mut gap = SweepSpec::new(SweepVariable::Gap, 0.5, 30.0, 60);
    gap.fixed.scale = 3.0;

    for (name, spec) in [("scale", scale), ("selectivity", selectivity), ("gap", gap)] {
        let rows = run_sweep(&spec, &w.sequence, &w.profile)?;
        let path = dir.join(format!("{name}.csv"));
        std::fs::write(&path, sweep_csv(&rows))?;

        let best = rows.iter().max_by(|a, b| a.improvement.total_cmp(&b.improvement)).unwrap();
        println!(
            "{:<12} {:>4} rows -> {}  (best: {} at {} = {:.2}%)",
            name,
            rows.len(),
            path.display(),
            best.strategy,
            best.value,
            best.improvement
        );
    }
    Ok(())
}
