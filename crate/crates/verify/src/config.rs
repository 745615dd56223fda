use std::fmt;
use std::str::FromStr;

use admlab::bracket::{GradientMethod, GradientStrategy};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::SuiteError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Dewitt,
    Anomaly,
    Gaussian,
    Algebroid,
    Convergence,
    All,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Dewitt => "dewitt",
            SuiteKind::Anomaly => "anomaly",
            SuiteKind::Gaussian => "gaussian",
            SuiteKind::Algebroid => "algebroid",
            SuiteKind::Convergence => "convergence",
            SuiteKind::All => "all",
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pass thresholds, one per check family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub dewitt_shift_shift: f64,
    pub dewitt_shift_lapse: f64,
    pub dewitt_lapse_lapse: f64,
    pub coisotropy: f64,
    pub frozen_anomaly: f64,
    pub killing_jacobiator: f64,
    pub lapse_constancy: f64,
    pub gaussianity: f64,
    /// Largest admissible residual ratio under step halving.
    pub ode_halving: f64,
    /// Admissible distance of the fitted slope from 2.
    pub first_order_slope: f64,
    pub gaussian_action: f64,
    pub nongaussian_identity: f64,
    /// Smallest witness magnitude that counts as nonzero.
    pub witness_magnitude: f64,
    /// Largest admissible fraction of seeds without a witness.
    pub witness_missing: f64,
    pub compat: f64,
    pub bracket_agreement: f64,
    pub anchor_kernel: f64,
    pub section_antisymmetry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            dewitt_shift_shift: 1e-4,
            dewitt_shift_lapse: 1e-4,
            dewitt_lapse_lapse: 1e-4,
            coisotropy: 1e-8,
            frozen_anomaly: 1e-8,
            killing_jacobiator: 1e-10,
            lapse_constancy: 0.0,
            gaussianity: 1e-6,
            ode_halving: 0.125,
            first_order_slope: 0.1,
            gaussian_action: 1e-6,
            nongaussian_identity: 1e-6,
            witness_magnitude: 1e-2,
            witness_missing: 0.1,
            compat: 1e-4,
            bracket_agreement: 1e-6,
            anchor_kernel: 1e-12,
            section_antisymmetry: 1e-13,
        }
    }
}

impl Tolerances {
    fn values(&self) -> [(&'static str, f64); 18] {
        [
            ("dewitt_shift_shift", self.dewitt_shift_shift),
            ("dewitt_shift_lapse", self.dewitt_shift_lapse),
            ("dewitt_lapse_lapse", self.dewitt_lapse_lapse),
            ("coisotropy", self.coisotropy),
            ("frozen_anomaly", self.frozen_anomaly),
            ("killing_jacobiator", self.killing_jacobiator),
            ("lapse_constancy", self.lapse_constancy),
            ("gaussianity", self.gaussianity),
            ("ode_halving", self.ode_halving),
            ("first_order_slope", self.first_order_slope),
            ("gaussian_action", self.gaussian_action),
            ("nongaussian_identity", self.nongaussian_identity),
            ("witness_magnitude", self.witness_magnitude),
            ("witness_missing", self.witness_missing),
            ("compat", self.compat),
            ("bracket_agreement", self.bracket_agreement),
            ("anchor_kernel", self.anchor_kernel),
            ("section_antisymmetry", self.section_antisymmetry),
        ]
    }
}

/// Default RK4 step of the gaussian extension; samples are spaced `8×` wider.
pub const DEFAULT_ODE_STEP: f64 = 0.05 / 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: SuiteKind,
    pub dim: usize,
    /// Grid sizes; single-resolution suites run at each of them.
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub kmax: usize,
    pub epsilon: f64,
    pub seeds: Vec<u64>,
    pub gradient: GradientStrategy,
    pub ode_step: f64,
    pub tolerances: Tolerances,
    /// Metric path file replacing the seeded paths.
    pub path: Option<String>,
    pub output: Option<String>,
}

impl SuiteConfig {
    /// `d = 2`, `N = 16` (`8, 16, 32` for convergence), `kmax = 2`,
    /// `ε = 0.05`, seeds `1..=5`, complex-step gradients.
    pub fn new(suite: SuiteKind) -> Self {
        Self {
            suite,
            dim: 2,
            n: if suite == SuiteKind::Convergence { vec![8, 16, 32] } else { vec![16] },
            kmax: 2,
            epsilon: 0.05,
            seeds: (1..=5).collect(),
            gradient: GradientStrategy {
                method: GradientMethod::ComplexStep,
                ..GradientStrategy::default()
            },
            ode_step: DEFAULT_ODE_STEP,
            tolerances: Tolerances::default(),
            path: None,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<(), SuiteError> {
        let bad = |msg: String| Err(SuiteError::Config(msg));
        if !(2..=3).contains(&self.dim) {
            return bad(format!("dimension {} not in {{2, 3}}", self.dim));
        }
        if self.n.is_empty() {
            return bad("no grid size given".into());
        }
        for &n in &self.n {
            if n < 8 || n % 2 != 0 {
                return bad(format!("N = {n} must be even and at least 8"));
            }
            if self.kmax == 0 || 2 * self.kmax >= n {
                return bad(format!("kmax = {} must satisfy 1 ≤ kmax < N/2 = {}", self.kmax, n / 2));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} must be finite and non-negative", self.epsilon));
        }
        if self.seeds.is_empty() {
            return bad("no seeds given".into());
        }
        if !(self.gradient.eta > 0.0 && self.gradient.eta.is_finite()) {
            return bad(format!("gradient eta = {} must be positive", self.gradient.eta));
        }
        if !(self.ode_step > 0.0 && self.ode_step.is_finite()) {
            return bad(format!("ode step = {} must be positive", self.ode_step));
        }
        for (name, tol) in self.tolerances.values() {
            if !(tol >= 0.0) {
                return bad(format!("tolerance {name} = {tol} must be non-negative"));
            }
        }
        if self.suite == SuiteKind::Convergence {
            if self.n.len() < 3 {
                return bad(format!("convergence needs at least 3 grid sizes, got {}", self.n.len()));
            }
            if self.n.windows(2).any(|w| w[1] <= w[0]) {
                return bad("convergence grid sizes must increase".into());
            }
        }
        Ok(())
    }
}

/// A seed list: `3`, `1,4,9` or the inclusive range `1..5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed {t:?}: {e}"));
        if let Some((lo, hi)) = s.split_once("..") {
            let (lo, hi) = (parse(lo)?, parse(hi.trim_start_matches('='))?);
            if hi < lo {
                return Err(format!("empty seed range {s:?}"));
            }
            return Ok(SeedList((lo..=hi).collect()));
        }
        let seeds = s.split(',').map(parse).collect::<Result<Vec<_>, _>>()?;
        Ok(SeedList(seeds))
    }
}
