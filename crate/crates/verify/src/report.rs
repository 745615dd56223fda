use admlab::bracket::GridRecord;
use admlab::TorusGrid;
use serde::{Serialize, Serializer};

use crate::config::SuiteConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Residuals at or below this are treated as rounding noise.
pub const ROUNDING_FLOOR: f64 = 1e-14;

/// Rounding level of residuals built from time finite differences, which
/// amplify rounding by the inverse sample spacing.
pub const DIFFERENCE_FLOOR: f64 = 1e-12;

/// One verified identity. `relative` is the quantity compared against
/// `tolerance`; for absolute checks it equals `residual`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub residual: f64,
    pub scale: f64,
    pub relative: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub grid: Option<GridRecord>,
    pub seed: Option<u64>,
}

impl CheckRecord {
    pub fn relative(
        name: impl Into<String>,
        anchor: impl Into<String>,
        residual: f64,
        scale: f64,
        tolerance: f64,
    ) -> Self {
        Self::with_relative(name, anchor, residual, scale, admlab::bracket::relative_residual(residual, scale), tolerance)
    }

    pub fn absolute(
        name: impl Into<String>,
        anchor: impl Into<String>,
        residual: f64,
        scale: f64,
        tolerance: f64,
    ) -> Self {
        Self::with_relative(name, anchor, residual, scale, residual, tolerance)
    }

    fn with_relative(
        name: impl Into<String>,
        anchor: impl Into<String>,
        residual: f64,
        scale: f64,
        relative: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            residual,
            scale,
            relative,
            tolerance,
            pass: relative <= tolerance,
            grid: None,
            seed: None,
        }
    }

    pub fn on(mut self, grid: &TorusGrid, seed: Option<u64>) -> Self {
        self.grid = Some(GridRecord { d: grid.dim(), n: grid.n() });
        self.seed = seed;
        self
    }
}

fn order_or_na<S: Serializer>(order: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match order {
        Some(p) => s.serialize_f64(*p),
        None => s.serialize_str("n/a"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub at: f64,
    pub residual: f64,
    #[serde(serialize_with = "order_or_na")]
    pub observed_order: Option<f64>,
}

/// Residuals along a refinement sweep of `variable`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub name: String,
    pub anchor: String,
    pub seed: Option<u64>,
    pub variable: String,
    pub rows: Vec<ConvergenceRow>,
    pub monotone: bool,
    pub pass: bool,
}

impl ConvergenceTable {
    /// Rows from `(level, residual)` in refinement order. The observed order
    /// between consecutive rows is `ln(r_prev / r) / |ln(level_prev / level)|`,
    /// `"n/a"` when the coarser residual is at `floor`. A sweep is monotone
    /// when each residual strictly decreases, except that residuals already
    /// at the floor need only stay there.
    pub fn new(
        name: impl Into<String>,
        anchor: impl Into<String>,
        seed: Option<u64>,
        variable: impl Into<String>,
        samples: &[(f64, f64)],
        floor: f64,
    ) -> Self {
        let mut rows = Vec::with_capacity(samples.len());
        let mut monotone = true;
        for (k, &(at, residual)) in samples.iter().enumerate() {
            let mut observed_order = None;
            if k > 0 {
                let (prev_at, prev) = samples[k - 1];
                if prev <= floor {
                    monotone &= residual <= floor;
                } else {
                    monotone &= residual < prev;
                    if residual > 0.0 {
                        observed_order = Some((prev / residual).ln() / (prev_at / at).ln().abs());
                    }
                }
            }
            rows.push(ConvergenceRow { at, residual, observed_order });
        }
        Self {
            name: name.into(),
            anchor: anchor.into(),
            seed,
            variable: variable.into(),
            rows,
            monotone,
            pass: monotone,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub suite: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub config: SuiteConfig,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
    pub convergence: Vec<ConvergenceTable>,
    /// Wall-clock seconds per suite; left out of [`SuiteReport::to_json`].
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

impl SuiteReport {
    pub fn new(config: SuiteConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config,
            pass: true,
            checks: Vec::new(),
            convergence: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn push_checks(&mut self, checks: impl IntoIterator<Item = CheckRecord>) {
        for c in checks {
            self.pass &= c.pass;
            self.checks.push(c);
        }
    }

    pub fn push_tables(&mut self, tables: impl IntoIterator<Item = ConvergenceTable>) {
        for t in tables {
            self.pass &= t.pass;
            self.convergence.push(t);
        }
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count() + self.convergence.iter().filter(|t| !t.pass).count()
    }

    /// Deterministic JSON: everything except timings.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with a trailing `timings` array.
    pub fn to_json_with_timings(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        value["timings"] = serde_json::to_value(&self.timings).expect("timings serialize");
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let at = match (&c.grid, c.seed) {
                (Some(g), Some(s)) => format!("d={} N={} seed={s}", g.d, g.n),
                (Some(g), None) => format!("d={} N={}", g.d, g.n),
                (None, Some(s)) => format!("seed={s}"),
                (None, None) => String::new(),
            };
            out.push_str(&format!(
                "{} {:<26} {:<22} residual={:.3e} relative={:.3e} tol={:.1e}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                at,
                c.residual,
                c.relative,
                c.tolerance
            ));
        }
        for t in &self.convergence {
            out.push_str(&format!(
                "{} {} seed={} over {}\n",
                if t.pass { "PASS" } else { "FAIL" },
                t.name,
                t.seed.map_or("-".into(), |s| s.to_string()),
                t.variable
            ));
            for r in &t.rows {
                let order = r.observed_order.map_or("n/a".into(), |p| format!("{p:.2}"));
                out.push_str(&format!("     {:<10} {:.3e}  order {order}\n", r.at, r.residual));
            }
        }
        for t in &self.timings {
            out.push_str(&format!("time {:<12} {:.2}s\n", t.suite, t.seconds));
        }
        out.push_str(&format!(
            "{}: {} checks, {} tables, {} failed\n",
            if self.pass { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.convergence.len(),
            self.failures()
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SuiteKind;

    #[test]
    fn pass_iff_within_tolerance() {
        assert!(CheckRecord::absolute("a", "", 1e-9, 1.0, 1e-8).pass);
        assert!(!CheckRecord::absolute("a", "", 2e-8, 1.0, 1e-8).pass);
        assert!(!CheckRecord::absolute("a", "", f64::NAN, 1.0, 1e-8).pass);
        let r = CheckRecord::relative("r", "", 1e-6, 1.0, 1e-4);
        assert_eq!(r.relative, 1e-6);
        assert!(r.pass);
    }

    #[test]
    fn convergence_orders() {
        let t = ConvergenceTable::new("x", "", None, "N", &[(8.0, 1e-2), (16.0, 2.5e-3), (32.0, 6.25e-4)], ROUNDING_FLOOR);
        assert!(t.monotone);
        assert_eq!(t.rows[0].observed_order, None);
        assert!((t.rows[1].observed_order.unwrap() - 2.0).abs() < 1e-12);
        let sweep = ConvergenceTable::new("t", "", None, "t", &[(0.1, 4e-4), (0.05, 1e-4)], ROUNDING_FLOOR);
        assert!((sweep.rows[1].observed_order.unwrap() - 2.0).abs() < 1e-12);
        let bad = ConvergenceTable::new("x", "", None, "N", &[(8.0, 1e-3), (16.0, 2e-3), (32.0, 1e-4)], ROUNDING_FLOOR);
        assert!(!bad.pass);
        let flat = ConvergenceTable::new("x", "", None, "N", &[(8.0, 0.0), (16.0, 1e-16), (32.0, 0.0)], ROUNDING_FLOOR);
        assert!(flat.pass);
        assert!(flat.rows.iter().all(|r| r.observed_order.is_none()));
        let json = serde_json::to_string(&flat.rows[1]).unwrap();
        assert!(json.contains("\"observed_order\":\"n/a\""));
    }

    #[test]
    fn json_excludes_timings() {
        let mut r = SuiteReport::new(SuiteConfig::new(SuiteKind::Dewitt));
        r.timings.push(Timing { suite: "dewitt".into(), seconds: 1.5 });
        assert!(!r.to_json().contains("timings"));
        assert!(r.to_json_with_timings().contains("\"timings\""));
    }
}
