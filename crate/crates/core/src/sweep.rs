//! Parameter sweeps over scale, selectivity or gap.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::{improvement_pct, plan_cost};
use crate::error::{Error, Result};
use crate::model::{DeviceProfile, QuerySequence, Strategy};
use crate::planner::build_plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    /// Multiplies every table size.
    Scale,
    /// Replaces every filter selectivity.
    Selectivity,
    /// Replaces every gap.
    Gap,
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVariable::Scale => "scale",
            SweepVariable::Selectivity => "selectivity",
            SweepVariable::Gap => "gap",
        })
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scale" => Ok(SweepVariable::Scale),
            "selectivity" => Ok(SweepVariable::Selectivity),
            "gap" => Ok(SweepVariable::Gap),
            other => Err(Error::InvalidArgument(format!("unknown sweep variable {other:?}"))),
        }
    }
}

/// Scenario parameters held constant during a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub scale: f64,
    pub selectivity: Option<f64>,
    pub gap: Option<f64>,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self { scale: 1.0, selectivity: None, gap: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub fixed: FixedParams,
    pub strategies: Vec<Strategy>,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, from: f64, to: f64, steps: usize) -> Self {
        Self { variable, from, to, steps, fixed: FixedParams::default(), strategies: Strategy::ALL.to_vec() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.from.is_finite() && self.to.is_finite()) || self.from > self.to {
            return bad(format!("invalid range {}..{}", self.from, self.to));
        }
        if self.steps < 2 {
            return bad(format!("steps must be at least 2, got {}", self.steps));
        }
        if self.strategies.is_empty() {
            return bad("no strategies selected".into());
        }
        match self.variable {
            SweepVariable::Selectivity if self.from < 0.0 || self.to > 1.0 => {
                bad("selectivity range must lie in [0, 1]".into())
            }
            SweepVariable::Scale | SweepVariable::Gap if self.from < 0.0 => bad("range must be nonnegative".into()),
            _ => Ok(()),
        }
    }

    /// Evenly spaced grid from `from` to `to` inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| if k + 1 == self.steps { self.to } else { self.from + (self.to - self.from) * k as f64 / last })
            .collect()
    }

    /// The sequence evaluated at grid value `value`.
    pub fn point(&self, base: &QuerySequence, value: f64) -> QuerySequence {
        let mut seq = match self.variable {
            SweepVariable::Scale => base.scaled(value),
            _ => base.scaled(self.fixed.scale),
        };
        if let Some(f) = self.fixed.selectivity {
            seq = seq.with_selectivity(f);
        }
        if let Some(g) = self.fixed.gap {
            seq = seq.with_gap(g);
        }
        match self.variable {
            SweepVariable::Selectivity => seq.with_selectivity(value),
            SweepVariable::Gap => seq.with_gap(value),
            SweepVariable::Scale => seq,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub strategy: Strategy,
    pub total: f64,
    /// Improvement over S at the same grid point, in percent.
    pub improvement: f64,
}

/// Evaluates every selected strategy at every grid point, in grid order.
pub fn run_sweep(spec: &SweepSpec, base: &QuerySequence, profile: &DeviceProfile) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.steps * spec.strategies.len());
    for value in spec.grid() {
        let seq = spec.point(base, value);
        let baseline = plan_cost(&seq, &build_plan(&seq, Strategy::S)?, profile)?;
        for &strategy in &spec.strategies {
            let cost = plan_cost(&seq, &build_plan(&seq, strategy)?, profile)?;
            rows.push(SweepRow {
                variable: spec.variable,
                value,
                strategy,
                total: cost.total,
                improvement: improvement_pct(cost.total, baseline.total)?,
            });
        }
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "variable,value,strategy,total_ms,improvement_pct";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{:.6},{},{:.6},{:.6}\n", r.variable, r.value, r.strategy, r.total, r.improvement));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::Workload;

    #[test]
    fn grid_includes_endpoints() {
        let spec = SweepSpec::new(SweepVariable::Scale, 1.0, 5.0, 5);
        assert_eq!(spec.grid(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(SweepSpec::new(SweepVariable::Gap, 2.0, 1.0, 3).validate().is_err());
        assert!(SweepSpec::new(SweepVariable::Gap, 0.0, 1.0, 1).validate().is_err());
        assert!(SweepSpec::new(SweepVariable::Selectivity, 0.0, 1.5, 3).validate().is_err());
        let mut s = SweepSpec::new(SweepVariable::Gap, 0.0, 1.0, 2);
        s.strategies.clear();
        assert!(s.validate().is_err());
    }

    #[test]
    fn points_apply_fixed_then_swept() {
        let base = Workload::calibrated_scenario().sequence;
        let mut spec = SweepSpec::new(SweepVariable::Gap, 0.5, 30.0, 3);
        spec.fixed.scale = 3.0;
        let p = spec.point(&base, 7.0);
        assert_eq!(p.gaps, vec![7.0]);
        assert_eq!(p.queries[0].table.size, 27.0);

        let spec = SweepSpec::new(SweepVariable::Selectivity, 0.0, 1.0, 3);
        let p = spec.point(&base, 0.2);
        assert!(p.queries.iter().flat_map(|q| &q.ops).all(|o| o.selectivity == 0.2));
    }

    #[test]
    fn improvement_column_matches_costs() {
        let w = Workload::calibrated_scenario();
        let spec = SweepSpec::new(SweepVariable::Scale, 1.0, 5.0, 5);
        let rows = run_sweep(&spec, &w.sequence, &w.profile).unwrap();
        assert_eq!(rows.len(), 25);
        for chunk in rows.chunks(5) {
            let s = chunk.iter().find(|r| r.strategy == Strategy::S).unwrap();
            assert_eq!(s.improvement, 0.0);
            for r in chunk {
                assert!((r.improvement - 100.0 * (1.0 - r.total / s.total)).abs() < 1e-12);
            }
        }
    }
}
