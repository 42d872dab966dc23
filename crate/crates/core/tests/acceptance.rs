//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits nonzero if any fails.

mod common;

use std::time::Instant;

use common::{oracle, pair_sequence, rel_close, PairScenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpuseq::cost::{improvement_pct, phase_times};
use rpuseq::miner::{fingerprint, mine_sequences, LogEntry};
use rpuseq::sweep::{run_sweep, SweepSpec, SweepVariable};
use rpuseq::{
    build_plan, calibrated_profile, choose_plan, plan_cost, simulate, validate_timeline, DeviceProfile,
    QuerySequence, Strategy,
};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn total(seq: &QuerySequence, s: Strategy, p: &DeviceProfile) -> f64 {
    plan_cost(seq, &build_plan(seq, s).unwrap(), p).unwrap().total
}

/// 1. Calibrated scenario totals against the hand-coded oracle (1e-6 ms).
fn calibrated_totals() -> Outcome {
    let p = calibrated_profile();
    let sc = PairScenario::calibrated();
    let seq = sc.sequence();
    let o = oracle(&sc, &p);
    let expected = [
        (Strategy::S, o.s, 72.360),
        (Strategy::I, o.i, 62.631),
        (Strategy::II, o.ii, 73.908),
        (Strategy::III, o.iii, 58.360),
        (Strategy::IV, o.iv, 58.960),
    ];
    let mut parts = Vec::new();
    for (s, oracle_total, rounded) in expected {
        let got = total(&seq, s, &p);
        if (got - oracle_total).abs() > 1e-6 {
            return Err(format!("{s}: {got:.9} vs oracle {oracle_total:.9}"));
        }
        if (got - rounded).abs() > 5e-4 {
            return Err(format!("{s}: {got:.6} does not round to {rounded}"));
        }
        parts.push(format!("{s}={got:.3}"));
    }
    Ok(parts.join(" "))
}

/// 2. Selectivity sweep at scale 1, gap 1 ms: IV-vs-S maximum in [24, 32] %,
///    nonincreasing in selectivity.
fn selectivity_headline() -> Outcome {
    let w = rpuseq::Workload::calibrated_scenario();
    let mut spec = SweepSpec::new(SweepVariable::Selectivity, 0.0, 1.0, 101);
    spec.fixed.gap = Some(1.0);
    spec.strategies = vec![Strategy::IV];
    let rows = run_sweep(&spec, &w.sequence, &w.profile).map_err(|e| e.to_string())?;
    let best = rows.iter().map(|r| r.improvement).fold(f64::NEG_INFINITY, f64::max);
    if !(24.0..=32.0).contains(&best) {
        return Err(format!("max improvement {best:.3}% outside [24, 32]"));
    }
    for w in rows.windows(2) {
        if w[1].improvement > w[0].improvement + 1e-9 {
            return Err(format!("improvement rises from {:.6} to {:.6} at f = {}", w[0].improvement, w[1].improvement, w[1].value));
        }
    }
    Ok(format!("max IV improvement {best:.3}% at f = {}", rows[0].value))
}

/// 3. I and II slower than S for every scale factor >= 2.
fn partial_pushdown_trend() -> Outcome {
    let w = rpuseq::Workload::calibrated_scenario();
    let mut spec = SweepSpec::new(SweepVariable::Scale, 1.0, 5.0, 17);
    spec.strategies = vec![Strategy::I, Strategy::II];
    let rows = run_sweep(&spec, &w.sequence, &w.profile).map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    for r in rows.iter().filter(|r| r.value >= 2.0) {
        if r.improvement >= 0.0 {
            return Err(format!("{} at scale {} improves by {:.3}%", r.strategy, r.value, r.improvement));
        }
        worst = worst.max(r.improvement);
    }
    Ok(format!("largest improvement for scale >= 2 is {worst:.3}%"))
}

/// 4. Crossover law between III and IV on randomized instances.
fn crossover_law() -> Outcome {
    let p = calibrated_profile();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut checked, mut in_band, mut iv_wins) = (0, 0, 0);
    for k in 0..4000 {
        // half drawn near the crossover region, half over wide ranges
        let (smax, gmax) = if k % 2 == 0 { (12.0, 8.0) } else { (100.0, 50.0) };
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let (f0, f1) = (a.min(b), a.max(b));
        let sc = PairScenario {
            s0: rng.gen_range(0.0..smax),
            s1: rng.gen_range(0.0..smax / 4.0),
            f0,
            f1,
            fq1: rng.gen(),
            gap: rng.gen_range(0.0..gmax),
        };
        let seq = sc.sequence();
        let iii = total(&seq, Strategy::III, &p);
        let iv = total(&seq, Strategy::IV, &p);

        let plan = build_plan(&seq, Strategy::S).unwrap();
        let q0 = phase_times(&seq.queries[0], &plan.queries[0], &p).unwrap();
        let window = q0.trans + sc.gap + sc.s1 / p.r_scan;
        let threshold = p.t_reconfig - (f1 - f0) * sc.s0 / p.r_acc;
        if (window - threshold).abs() <= 1e-9 * threshold.abs().max(1.0) || (iv - iii).abs() <= 1e-9 * iii.max(1.0) {
            in_band += 1;
            continue;
        }
        checked += 1;
        let predicted = window < threshold;
        if predicted != (iv < iii) {
            return Err(format!("disagreement at {sc:?}: window {window} threshold {threshold} III {iii} IV {iv}"));
        }
        iv_wins += predicted as usize;
    }
    if checked < 1000 {
        return Err(format!("only {checked} instances outside the boundary band"));
    }
    Ok(format!("{checked}/{checked} agree ({iv_wins} IV wins, {in_band} in band)"))
}

/// 5. Simulated makespan equals the analytic total for every strategy.
fn simulator_equivalence() -> Outcome {
    let p = calibrated_profile();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut runs = 0;
    for _ in 0..1000 {
        let seq = pair_sequence(
            rng.gen_range(0.0..=100.0),
            rng.gen_range(0.0..=100.0),
            rng.gen_range(0.0..=1.0),
            rng.gen_range(0.0..=1.0),
            rng.gen_range(0.0..=1.0),
            rng.gen_range(0.0..=50.0),
        );
        for s in Strategy::ALL {
            let plan = build_plan(&seq, s).map_err(|e| e.to_string())?;
            let cost = plan_cost(&seq, &plan, &p).map_err(|e| e.to_string())?;
            let t = simulate(&seq, &plan, &p).map_err(|e| e.to_string())?;
            if !rel_close(t.makespan, cost.total, 1e-9) {
                return Err(format!("{s}: makespan {} vs analytic {} for {seq:?}", t.makespan, cost.total));
            }
            if let Err(v) = validate_timeline(&t) {
                return Err(format!("{s}: invalid timeline: {}", v[0]));
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} simulations match"))
}

/// 6. III's improvement over S is nonincreasing in the gap once the
///    reconfiguration is hidden (scale 3).
fn gap_trend() -> Outcome {
    let w = rpuseq::Workload::calibrated_scenario();
    let p = w.profile;
    let mut spec = SweepSpec::new(SweepVariable::Gap, 0.5, 30.0, 119);
    spec.fixed.scale = 3.0;
    spec.strategies = vec![Strategy::III];
    let rows = run_sweep(&spec, &w.sequence, &p).map_err(|e| e.to_string())?;

    let mut hidden = Vec::new();
    for r in &rows {
        let seq = spec.point(&w.sequence, r.value);
        let plan = build_plan(&seq, Strategy::S).unwrap();
        let q0 = phase_times(&seq.queries[0], &plan.queries[0], &p).unwrap();
        if q0.trans + r.value + seq.queries[1].table.size / p.r_scan >= p.t_reconfig {
            hidden.push(r);
        }
    }
    if hidden.len() < 2 {
        return Err("fewer than two hidden-regime points".into());
    }
    for w in hidden.windows(2) {
        if w[1].improvement > w[0].improvement + 1e-9 {
            return Err(format!("rises at gap {}: {} -> {}", w[1].value, w[0].improvement, w[1].improvement));
        }
    }
    Ok(format!(
        "{} hidden points, improvement {:.3}% -> {:.3}%",
        hidden.len(),
        hidden[0].improvement,
        hidden.last().unwrap().improvement
    ))
}

/// 7. Planted three-query sequence is recovered exactly.
fn miner_recovery() -> Outcome {
    let max_gap = 50.0;
    let mut log = Vec::new();
    let mut t = 0.0;
    for rep in 0..5 {
        for n in 0..3 {
            log.push(LogEntry::new(t, format!("SELECT * FROM noise_{rep}_{n} WHERE k = {}", rep * 7 + n)));
            t += 100.0;
        }
        log.push(LogEntry::new(t, format!("SELECT * FROM date_dim WHERE d_year = {}", 1990 + rep)));
        log.push(LogEntry::new(t + 5.0, format!("SELECT * FROM date_dim WHERE d_moy = {}", rep + 1)));
        log.push(LogEntry::new(t + 13.0, format!("SELECT * FROM store WHERE s_state = 'S{rep}'")));
        t += 200.0;
    }
    let planted = vec![
        fingerprint("select * from date_dim where d_year = 1").unwrap(),
        fingerprint("select * from date_dim where d_moy = 1").unwrap(),
        fingerprint("select * from store where s_state = 'x'").unwrap(),
    ];
    let mined = mine_sequences(&log, 2, 4, max_gap).map_err(|e| e.to_string())?;
    let hit = mined
        .iter()
        .find(|m| m.templates == planted)
        .ok_or_else(|| format!("planted sequence missing from {} results", mined.len()))?;
    if hit.support != 5 || hit.avg_gaps != vec![5.0, 8.0] {
        return Err(format!("support {} gaps {:?}", hit.support, hit.avg_gaps));
    }
    if mined.iter().any(|m| m.support > 5 || m.templates.len() > 3) {
        return Err("spurious sequences".into());
    }
    Ok(format!("support {} avg_gaps {:?} ({} sequences total)", hit.support, hit.avg_gaps, mined.len()))
}

/// 8. Enabling hints never yields a more expensive chosen plan.
fn hint_monotonicity() -> Outcome {
    let p = calibrated_profile();
    let base = rpuseq::Workload::calibrated_scenario().sequence;
    let mut points = 0;
    for i in 0..10 {
        let scale = 0.25 + 0.5 * i as f64;
        for j in 0..10 {
            let f = j as f64 / 9.0;
            for k in 0..10 {
                let gap = 50.0 * k as f64 / 9.0;
                let seq = base.scaled(scale).with_selectivity(f).with_gap(gap);
                let (_, with) = choose_plan(&seq, &p, true).map_err(|e| e.to_string())?;
                let (_, without) = choose_plan(&seq, &p, false).map_err(|e| e.to_string())?;
                if with.total > without.total {
                    return Err(format!("scale {scale} f {f} gap {gap}: {} > {}", with.total, without.total));
                }
                improvement_pct(with.total, without.total).map_err(|e| e.to_string())?;
                points += 1;
            }
        }
    }
    Ok(format!("{points} grid points"))
}

fn main() {
    let criteria: [Check; 8] = [
        ("1 calibrated scenario totals", calibrated_totals),
        ("2 selectivity headline", selectivity_headline),
        ("3 partial pushdown vs scale", partial_pushdown_trend),
        ("4 III/IV crossover law", crossover_law),
        ("5 simulator-analytic equivalence", simulator_equivalence),
        ("6 III gap trend", gap_trend),
        ("7 miner recovery", miner_recovery),
        ("8 hint monotonicity", hint_monotonicity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{ms:.1} ms]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{ms:.1} ms]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
