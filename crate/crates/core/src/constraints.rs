//! Vacuum ADM constraints on phase space and their smeared scalar forms.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::field::{MetricField, ScalarField, SymTensorField, Variance, VectorField};
use crate::geometry::inverse_points;
use crate::grid::TorusGrid;
use crate::kernel;

/// A point `(γ, π)` of the cotangent bundle of the space of metrics, with `π`
/// carried as a covariant symmetric tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    gamma: MetricField,
    pi: SymTensorField,
}

impl PhaseSpacePoint {
    pub fn new(gamma: MetricField, pi: SymTensorField) -> Result<Self> {
        if gamma.grid() != pi.grid() {
            return Err(LabError::GridMismatch);
        }
        pi.expect(Variance::Covariant)?;
        Ok(Self { gamma, pi })
    }

    /// `(δ, 0)`.
    pub fn flat_vacuum(grid: &TorusGrid) -> Self {
        Self {
            gamma: MetricField::flat(grid),
            pi: SymTensorField::zeros(grid, Variance::Covariant),
        }
    }

    pub fn gamma(&self) -> &MetricField {
        &self.gamma
    }

    pub fn pi(&self) -> &SymTensorField {
        &self.pi
    }

    pub fn grid(&self) -> &TorusGrid {
        self.gamma.grid()
    }
}

/// A shift vector field and a lapse function: a constant section of
/// `XΣ ⊕ FΣ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    shift: VectorField,
    lapse: ScalarField,
}

impl Section {
    pub fn new(shift: VectorField, lapse: ScalarField) -> Result<Self> {
        if shift.grid() != lapse.grid() {
            return Err(LabError::GridMismatch);
        }
        Ok(Self { shift, lapse })
    }

    pub fn zero(grid: &TorusGrid) -> Self {
        Self {
            shift: VectorField::zeros(grid),
            lapse: ScalarField::zeros(grid),
        }
    }

    /// `(X, 0)`.
    pub fn shift_only(shift: VectorField) -> Self {
        let lapse = ScalarField::zeros(shift.grid());
        Self { shift, lapse }
    }

    /// `(0, φ)`.
    pub fn lapse_only(lapse: ScalarField) -> Self {
        let shift = VectorField::zeros(lapse.grid());
        Self { shift, lapse }
    }

    pub fn shift(&self) -> &VectorField {
        &self.shift
    }

    pub fn lapse(&self) -> &ScalarField {
        &self.lapse
    }

    pub fn grid(&self) -> &TorusGrid {
        self.shift.grid()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::new(self.shift.add(&other.shift)?, self.lapse.add(&other.lapse)?)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Self::new(self.shift.sub(&other.shift)?, self.lapse.sub(&other.lapse)?)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            shift: self.shift.scale(s),
            lapse: self.lapse.scale(s),
        }
    }

    /// Sup-norm over both parts.
    pub fn max_abs(&self) -> f64 {
        self.shift.max_abs().max(self.lapse.max_abs())
    }
}

fn momentum_raw(gamma: &MetricField, ginv: &[[[f64; 3]; 3]], pi: &SymTensorField) -> Vec<Vec<f64>> {
    kernel::momentum(gamma.grid(), gamma.tensor().components(), ginv, pi.components())
}

fn energy_raw(gamma: &MetricField, ginv: &[[[f64; 3]; 3]], pi: &SymTensorField) -> Vec<f64> {
    kernel::energy(gamma.grid(), gamma.tensor().components(), ginv, pi.components())
}

/// `C_mom^i = −2 γ^{ij} (div_γ π)_j`.
pub fn momentum_constraint(p: &PhaseSpacePoint) -> VectorField {
    let ginv = inverse_points(&p.gamma);
    VectorField::new(p.grid(), momentum_raw(&p.gamma, &ginv, &p.pi)).expect("d components")
}

/// `C_en = −R(γ) + Tr_γ π² − (Tr_γ π)² / (d − 1)`.
pub fn energy_constraint(p: &PhaseSpacePoint) -> ScalarField {
    let ginv = inverse_points(&p.gamma);
    ScalarField::new(p.grid(), energy_raw(&p.gamma, &ginv, &p.pi)).expect("length matches grid")
}

/// `C_(X,φ)(γ, π) = ∫ { γ(X, C_mom) + φ C_en } vol_γ`.
///
/// Parts whose smearing field vanishes identically are skipped.
pub fn smeared_constraint(a: &Section, p: &PhaseSpacePoint) -> Result<f64> {
    if a.grid() != p.grid() {
        return Err(LabError::GridMismatch);
    }
    Ok(kernel::smeared(
        p.grid(),
        p.gamma.tensor().components(),
        p.pi.components(),
        (!a.shift.is_zero()).then(|| a.shift.components()),
        (!a.lapse.is_zero()).then(|| a.lapse.values()),
    ))
}

/// Structured name of a phase-space functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum FunctionalLabel {
    CSection(String),
    Product(Box<FunctionalLabel>, Box<FunctionalLabel>),
    NestedBracket(Box<FunctionalLabel>, Box<FunctionalLabel>),
    Custom(String),
}

impl fmt::Display for FunctionalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalLabel::CSection(name) => write!(f, "C_{name}"),
            FunctionalLabel::Product(a, b) => write!(f, "({a})·({b})"),
            FunctionalLabel::NestedBracket(a, b) => write!(f, "{{{a}, {b}}}"),
            FunctionalLabel::Custom(name) => write!(f, "{name}"),
        }
    }
}

type Evaluator = dyn Fn(&PhaseSpacePoint) -> Result<f64> + Send + Sync;

/// Holomorphic extension of an evaluator to complex `(γ, π)` component arrays.
pub(crate) type ComplexEvaluator =
    dyn Fn(&TorusGrid, &[Vec<Complex64>], &[Vec<Complex64>]) -> Complex64 + Send + Sync;

/// A real-valued function on phase space. Evaluators must be pure.
///
/// Constraint functionals and their products also carry a holomorphic
/// extension, which enables complex-step gradients.
#[derive(Clone)]
pub struct Functional {
    label: FunctionalLabel,
    eval: Arc<Evaluator>,
    complex: Option<Arc<ComplexEvaluator>>,
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional").field("label", &self.label).finish()
    }
}

impl Functional {
    pub fn new(
        label: FunctionalLabel,
        eval: impl Fn(&PhaseSpacePoint) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label,
            eval: Arc::new(eval),
            complex: None,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(&PhaseSpacePoint) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self::new(FunctionalLabel::Custom(name.into()), eval)
    }

    pub fn constant(c: f64) -> Self {
        Self::custom(format!("{c}"), move |_| Ok(c))
    }

    /// Pointwise product `F·G` on phase space.
    pub fn product(f: &Functional, g: &Functional) -> Self {
        let (f2, g2) = (f.clone(), g.clone());
        let mut out = Self::new(
            FunctionalLabel::Product(Box::new(f.label.clone()), Box::new(g.label.clone())),
            move |p| Ok(f2.evaluate(p)? * g2.evaluate(p)?),
        );
        if let (Some(cf), Some(cg)) = (f.complex.clone(), g.complex.clone()) {
            out.complex = Some(Arc::new(move |grid: &TorusGrid, gamma: &[Vec<Complex64>], pi: &[Vec<Complex64>]| {
                cf(grid, gamma, pi) * cg(grid, gamma, pi)
            }));
        }
        out
    }

    /// Whether complex-step differentiation is available.
    pub fn supports_complex_step(&self) -> bool {
        self.complex.is_some()
    }

    pub(crate) fn complex_evaluator(&self) -> Option<&ComplexEvaluator> {
        self.complex.as_deref()
    }

    pub fn label(&self) -> &FunctionalLabel {
        &self.label
    }

    pub fn evaluate(&self, p: &PhaseSpacePoint) -> Result<f64> {
        (self.eval)(p)
    }
}

/// `C_(X,φ)` as a functional.
pub fn constraint_functional(a: &Section) -> Functional {
    constraint_functional_named(a, "(X,φ)")
}

pub fn constraint_functional_named(a: &Section, name: impl Into<String>) -> Functional {
    let section = a.clone();
    let mut f = Functional::new(FunctionalLabel::CSection(name.into()), move |p| {
        smeared_constraint(&section, p)
    });
    let section = a.clone();
    f.complex = Some(Arc::new(move |grid: &TorusGrid, gamma: &[Vec<Complex64>], pi: &[Vec<Complex64>]| {
        kernel::smeared(
            grid,
            gamma,
            pi,
            (!section.shift.is_zero()).then(|| section.shift.components()),
            (!section.lapse.is_zero()).then(|| section.lapse.values()),
        )
    }));
    f
}
