//! Shared test fixtures and the hand-coded two-query oracle.
//!
//! The oracle evaluates the closed-form pair equations term by term with
//! plain `f64` arithmetic. It does not touch the library's cost or
//! simulator code, so it can be used to check both.

#![allow(dead_code)]

use rpuseq::{DeviceProfile, FilterOp, Query, QuerySequence, TableSpec};

/// Parameters of the two-query scenario: Q0 = [acc0, acc1] on one table,
/// Q1 = [acc0] on another, one gap between them.
#[derive(Debug, Clone, Copy)]
pub struct PairScenario {
    pub s0: f64,
    pub s1: f64,
    pub f0: f64,
    pub f1: f64,
    pub fq1: f64,
    pub gap: f64,
}

impl PairScenario {
    pub fn calibrated() -> Self {
        Self { s0: 9.0, s1: 1.0, f0: 0.33, f1: 0.43, fq1: 0.14, gap: 1.0 }
    }

    pub fn scaled(scale: f64) -> Self {
        let base = Self::calibrated();
        Self { s0: base.s0 * scale, s1: base.s1 * scale, ..base }
    }

    pub fn sequence(&self) -> QuerySequence {
        pair_sequence(self.s0, self.s1, self.f0, self.f1, self.fq1, self.gap)
    }
}

pub fn pair_sequence(s0: f64, s1: f64, f0: f64, f1: f64, fq1: f64, gap: f64) -> QuerySequence {
    QuerySequence {
        queries: vec![
            Query {
                id: "Q0".into(),
                table: TableSpec { name: "date_dim".into(), size: s0 },
                ops: vec![FilterOp::new("acc0", f0), FilterOp::new("acc1", f1)],
            },
            Query {
                id: "Q1".into(),
                table: TableSpec { name: "date_dim_q1".into(), size: s1 },
                ops: vec![FilterOp::new("acc0", fq1)],
            },
        ],
        gaps: vec![gap],
    }
}

/// Oracle totals for the pair scenario, assuming f0 <= f1 so that the
/// locally preferred order is acc0 then acc1.
#[derive(Debug, Clone, Copy)]
pub struct OracleTotals {
    pub s: f64,
    pub i: f64,
    pub ii: f64,
    pub iii: f64,
    pub iv: f64,
}

pub fn oracle(p: &PairScenario, prof: &DeviceProfile) -> OracleTotals {
    let tr = prof.t_reconfig;
    let max = f64::max;

    // scan, accelerator and transfer terms: time = size / rate
    let scan0 = p.s0 / prof.r_scan;
    let scan1 = p.s1 / prof.r_scan;
    let inter0 = p.s0 * p.f0;
    let result0 = inter0 * p.f1;
    let result1 = p.s1 * p.fq1;
    let q0_acc0 = p.s0 / prof.r_acc;
    let q0_acc1 = inter0 / prof.r_acc;
    let q0_trans = result0 / prof.r_network;
    let q1_acc0 = p.s1 / prof.r_acc;
    let q1_trans = result1 / prof.r_network;

    // S
    let t_q0 = max(tr, scan0) + q0_acc0 + tr + q0_acc1 + q0_trans;
    let t_q1 = max(tr, scan1) + q1_acc0 + q1_trans;
    let s = t_q0 + p.gap + t_q1;

    // I: acc0 on the RPU, acc1 on the host
    let i_trans = inter0 / prof.r_network;
    let i_dbms1 = prof.c_dbms * inter0;
    let t_q0 = max(tr, scan0) + q0_acc0 + i_trans + i_dbms1;
    let t_q1_warm = scan1 + q1_acc0 + q1_trans;
    let i = t_q0 + p.gap + t_q1_warm;

    // II: acc1 on the RPU over the full table, acc0 on the host, reload of
    // acc0 overlapping transfer, DBMS work, gap and Q1's scan
    let ii_acc1 = p.s0 / prof.r_acc;
    let ii_result = p.s0 * p.f1;
    let ii_trans = ii_result / prof.r_network;
    let ii_dbms0 = prof.c_dbms * ii_result;
    let ii = max(tr, scan0) + ii_acc1 + max(tr, ii_trans + ii_dbms0 + p.gap + scan1) + q1_acc0 + q1_trans;

    // III
    let iii = max(tr, scan0) + q0_acc0 + tr + q0_acc1 + max(tr, q0_trans + p.gap + scan1) + q1_acc0 + q1_trans;

    // IV: acc1 first on the full table, acc0 second
    let iv_acc1 = p.s0 / prof.r_acc;
    let iv_acc0 = p.s0 * p.f1 / prof.r_acc;
    let t_q0 = max(tr, scan0) + iv_acc1 + tr + iv_acc0 + q0_trans;
    let iv = t_q0 + p.gap + t_q1_warm;

    OracleTotals { s, i, ii, iii, iv }
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
