//! Discrete canonical Poisson structure on phase space.
//!
//! Degrees of freedom are the stored metric components `γ_c(x_k)` followed by
//! conjugate momenta `p_c(x_k) = w · m_c · π̃^{ij}(x_k)`, where
//! `π̃^{ij} = √det γ γ^{ik} γ^{jl} π_kl` is the momentum density, `w` the cell
//! weight and `m_c` the symmetric multiplicity of slot `c`. With this scaling
//! `Σ_A ∂F/∂γ_A ∂G/∂p_A` is the uniform quadrature of `∫ δF/δγ_ij δG/δπ̃^{ij}`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constraints::{
    constraint_functional_named, smeared_constraint, Functional, FunctionalLabel,
    PhaseSpacePoint, Section,
};
use crate::error::{LabError, Result};
use crate::field::{
    det, invert, sym_multiplicity, GridSpec, MetricField, OneFormField, ScalarField,
    SymTensorField, Variance, VectorField,
};
use crate::geometry::{
    differential, directional_derivative, lie_bracket, lie_derivative_sym2, metric_inverse, raise,
};
use crate::grid::{pairwise_sum, TorusGrid};
use crate::kernel;

/// Scales below this are treated as zero and residuals are judged absolutely.
pub const SCALE_FLOOR: f64 = 1e-8;

/// `residual / scale`, or the bare residual when the scale is negligible.
pub fn relative_residual(residual: f64, scale: f64) -> f64 {
    if scale > SCALE_FLOOR {
        residual / scale
    } else {
        residual
    }
}

/// Packed canonical coordinates: metric block then momentum block.
#[derive(Debug, Clone, PartialEq)]
pub struct DofVector {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl DofVector {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of metric (equivalently momentum) degrees of freedom.
    pub fn block_len(&self) -> usize {
        self.values.len() / 2
    }

    pub fn metric_block(&self) -> &[f64] {
        &self.values[..self.block_len()]
    }

    pub fn momentum_block(&self) -> &[f64] {
        &self.values[self.block_len()..]
    }

    pub fn from_values(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        let expected = 2 * grid.sym_len() * grid.len();
        if values.len() != expected {
            return Err(LabError::InvalidArgument(format!(
                "expected {expected} degrees of freedom, got {}",
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }
}

pub fn pack_canonical(p: &PhaseSpacePoint) -> DofVector {
    let grid = p.grid();
    let (d, n, ns) = (grid.dim(), grid.len(), grid.sym_len());
    let w = grid.cell_weight();
    let mut values = Vec::with_capacity(2 * ns * n);
    for c in p.gamma().tensor().components() {
        values.extend_from_slice(c);
    }
    let mut momentum = vec![0.0; ns * n];
    for q in 0..n {
        let g = p.gamma().at(q);
        let gi = invert(&g, d);
        let sqrt_det = det(&g, d).sqrt();
        let pi = p.pi().at(q);
        let mut c = 0;
        for i in 0..d {
            for j in i..d {
                let mut up = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        up += gi[i][k] * gi[j][l] * pi[k][l];
                    }
                }
                momentum[c * n + q] = w * sym_multiplicity(c, d) * sqrt_det * up;
                c += 1;
            }
        }
    }
    values.extend(momentum);
    DofVector {
        grid: grid.clone(),
        values,
    }
}

/// Inverse of [`pack_canonical`]; fails when the metric block is not
/// positive-definite.
pub fn unpack_canonical(dofs: &DofVector) -> Result<PhaseSpacePoint> {
    let grid = &dofs.grid;
    let (n, ns) = (grid.len(), grid.sym_len());
    let gamma_comps = (0..ns).map(|c| dofs.values[c * n..(c + 1) * n].to_vec()).collect();
    let gamma = MetricField::new(SymTensorField::new(grid, Variance::Covariant, gamma_comps)?)?;
    let pi = kernel::momenta_to_pi(grid, gamma.tensor().components(), dofs.momentum_block());
    let pi = SymTensorField::new(grid, Variance::Covariant, pi)?;
    PhaseSpacePoint::new(gamma, pi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// Two-point central difference, error `O(h²)`.
    CentralFd,
    /// Four-point central difference, error `O(h⁴)`.
    HigherOrderFd,
    /// `Im F(x + i h e_A) / h` with `h = COMPLEX_STEP`; free of cancellation,
    /// so gradients are accurate to rounding. Needs a functional with a
    /// holomorphic extension; `eta` and `richardson` are ignored.
    ComplexStep,
}

/// Imaginary step of [`GradientMethod::ComplexStep`].
pub const COMPLEX_STEP: f64 = 1e-30;

/// Finite-difference configuration for functional gradients.
///
/// The step for degree of freedom `A` is `eta · max(1, |value_A|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientStrategy {
    pub method: GradientMethod,
    pub eta: f64,
    /// Combine steps `h` and `h/2` by Richardson extrapolation.
    pub richardson: bool,
}

impl Default for GradientStrategy {
    fn default() -> Self {
        Self {
            method: GradientMethod::CentralFd,
            eta: 1e-6,
            richardson: false,
        }
    }
}

fn eval_shifted(f: &Functional, base: &DofVector, a: usize, delta: f64) -> Result<f64> {
    let mut shifted = base.clone();
    shifted.values[a] += delta;
    f.evaluate(&unpack_canonical(&shifted)?)
}

fn stencil(f: &Functional, base: &DofVector, a: usize, h: f64, method: GradientMethod) -> Result<f64> {
    let at = |k: f64| eval_shifted(f, base, a, k * h);
    Ok(match method {
        GradientMethod::CentralFd => (at(1.0)? - at(-1.0)?) / (2.0 * h),
        GradientMethod::HigherOrderFd => {
            (-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * h)
        }
        GradientMethod::ComplexStep => unreachable!("complex step has its own path"),
    })
}

fn partial(f: &Functional, base: &DofVector, a: usize, h: f64, s: &GradientStrategy) -> Result<f64> {
    let coarse = stencil(f, base, a, h, s.method)?;
    if !s.richardson {
        return Ok(coarse);
    }
    let fine = stencil(f, base, a, 0.5 * h, s.method)?;
    let factor = match s.method {
        GradientMethod::HigherOrderFd => 16.0,
        _ => 4.0,
    };
    Ok((factor * fine - coarse) / (factor - 1.0))
}

fn gradient_component(f: &Functional, base: &DofVector, a: usize, s: &GradientStrategy) -> Result<f64> {
    let h = s.eta * base.values[a].abs().max(1.0);
    match partial(f, base, a, h, s) {
        Err(LabError::DegenerateMetric { .. }) => {
            partial(f, base, a, 0.1 * h, s).map_err(|e| match e {
                LabError::DegenerateMetric { .. } => LabError::GradientStep { dof: a },
                other => other,
            })
        }
        other => other,
    }
}

/// `∂F/∂DOF_A` for every canonical degree of freedom.
///
/// Components are independent and computed in parallel; each lands in its own
/// slot, so the result does not depend on the thread count.
pub fn functional_gradient(
    f: &Functional,
    p: &PhaseSpacePoint,
    s: &GradientStrategy,
) -> Result<DofVector> {
    let base = pack_canonical(p);
    if s.method == GradientMethod::ComplexStep {
        return complex_step_gradient(f, &base);
    }
    let values = (0..base.len())
        .into_par_iter()
        .map(|a| gradient_component(f, &base, a, s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DofVector {
        grid: base.grid.clone(),
        values,
    })
}

fn complex_step_gradient(f: &Functional, base: &DofVector) -> Result<DofVector> {
    let eval = f.complex_evaluator().ok_or_else(|| {
        LabError::InvalidArgument(format!(
            "{} has no holomorphic extension; use a finite-difference method",
            f.label()
        ))
    })?;
    let grid = &base.grid;
    let n = grid.len();
    let block = base.block_len();
    let real: Vec<Complex64> = base.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let values = (0..base.len())
        .into_par_iter()
        .map(|a| {
            let mut z = real.clone();
            z[a].im = COMPLEX_STEP;
            let gamma: Vec<Vec<Complex64>> = z[..block].chunks(n).map(|c| c.to_vec()).collect();
            let pi = kernel::momenta_to_pi(grid, &gamma, &z[block..]);
            eval(grid, &gamma, &pi).im / COMPLEX_STEP
        })
        .collect();
    Ok(DofVector {
        grid: grid.clone(),
        values,
    })
}

/// `Σ_A (∂F/∂γ_A ∂G/∂p_A − ∂G/∂γ_A ∂F/∂p_A)` over a fixed summation tree.
pub fn bracket_from_gradients(df: &DofVector, dg: &DofVector) -> Result<f64> {
    if df.values.len() != dg.values.len() || df.grid != dg.grid {
        return Err(LabError::GridMismatch);
    }
    let terms: Vec<f64> = df
        .metric_block()
        .iter()
        .zip(dg.momentum_block())
        .zip(dg.metric_block().iter().zip(df.momentum_block()))
        .map(|((fg, gp), (gg, fp))| fg * gp - gg * fp)
        .collect();
    Ok(pairwise_sum(&terms))
}

pub fn poisson_bracket(
    f: &Functional,
    g: &Functional,
    p: &PhaseSpacePoint,
    s: &GradientStrategy,
) -> Result<f64> {
    let df = functional_gradient(f, p, s)?;
    let dg = functional_gradient(g, p, s)?;
    bracket_from_gradients(&df, &dg)
}

/// `p ↦ {F, G}(p)` as a functional, for nesting brackets.
pub fn bracket_as_functional(f: &Functional, g: &Functional, s: &GradientStrategy) -> Functional {
    let (f2, g2, s2) = (f.clone(), g.clone(), *s);
    Functional::new(
        FunctionalLabel::NestedBracket(Box::new(f.label().clone()), Box::new(g.label().clone())),
        move |p| poisson_bracket(&f2, &g2, p, &s2),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeWittRelation {
    /// `{C_X, C_Y} = C_[X,Y]`
    ShiftShift,
    /// `{C_X, C_φ} = C_{X·φ}`
    ShiftLapse,
    /// `{C_φ, C_ψ} = C_{γ^{-1}(φ dψ − ψ dφ)}`
    LapseLapse,
}

impl DeWittRelation {
    pub const ALL: [DeWittRelation; 3] = [
        DeWittRelation::ShiftShift,
        DeWittRelation::ShiftLapse,
        DeWittRelation::LapseLapse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DeWittRelation::ShiftShift => "dewitt_shift_shift",
            DeWittRelation::ShiftLapse => "dewitt_shift_lapse",
            DeWittRelation::LapseLapse => "dewitt_lapse_lapse",
        }
    }

    pub fn identity(self) -> &'static str {
        match self {
            DeWittRelation::ShiftShift => "{C_X,C_Y} = C_[X,Y]",
            DeWittRelation::ShiftLapse => "{C_X,C_φ} = C_{X·φ}",
            DeWittRelation::LapseLapse => "{C_φ,C_ψ} = C_{γ^-1(φdψ − ψdφ)}",
        }
    }
}

/// Outcome of one bracket relation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelationResidual {
    pub bracket: f64,
    pub smeared: f64,
    pub residual: f64,
    /// `max(|bracket|, |smeared|)`.
    pub scale: f64,
    pub relative: f64,
}

impl RelationResidual {
    pub fn new(bracket: f64, smeared: f64) -> Self {
        let residual = (bracket - smeared).abs();
        let scale = bracket.abs().max(smeared.abs());
        Self {
            bracket,
            smeared,
            residual,
            scale,
            relative: relative_residual(residual, scale),
        }
    }
}

/// `{d, N}` as written in report records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridRecord {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
}

impl From<GridSpec> for GridRecord {
    fn from(g: GridSpec) -> Self {
        Self { d: g.dim, n: g.n }
    }
}

/// JSON report record of a bracket relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationRecord {
    pub relation: String,
    pub residual: f64,
    pub scale: f64,
    pub relative: f64,
    pub grid: GridRecord,
    pub seed: Option<u64>,
    pub strategy: GradientStrategy,
}

impl RelationRecord {
    pub fn new(
        relation: impl Into<String>,
        r: &RelationResidual,
        grid: &TorusGrid,
        seed: Option<u64>,
        strategy: GradientStrategy,
    ) -> Self {
        Self {
            relation: relation.into(),
            residual: r.residual,
            scale: r.scale,
            relative: r.relative,
            grid: GridSpec::from(grid).into(),
            seed,
            strategy,
        }
    }
}

/// `γ^{-1}(φ dψ − ψ dφ) = φ grad ψ − ψ grad φ`.
pub fn lapse_pair_shift(g: &MetricField, phi: &ScalarField, psi: &ScalarField) -> Result<VectorField> {
    let omega = differential(psi)
        .scale_by(phi)?
        .sub(&differential(phi).scale_by(psi)?)?;
    raise(&metric_inverse(g), &omega)
}

/// The three relations `{C_X,C_Y} − C_[X,Y]`, `{C_X,C_φ} − C_{X·φ}` and
/// `{C_φ,C_ψ} − C_{γ^{-1}(φdψ − ψdφ)}` at `p`, with `γ` taken from `p`.
pub fn dewitt_residuals(
    p: &PhaseSpacePoint,
    x: &VectorField,
    y: &VectorField,
    phi: &ScalarField,
    psi: &ScalarField,
    s: &GradientStrategy,
) -> Result<[RelationResidual; 3]> {
    let cx = constraint_functional_named(&Section::shift_only(x.clone()), "X");
    let cy = constraint_functional_named(&Section::shift_only(y.clone()), "Y");
    let cphi = constraint_functional_named(&Section::lapse_only(phi.clone()), "φ");
    let cpsi = constraint_functional_named(&Section::lapse_only(psi.clone()), "ψ");
    let gx = functional_gradient(&cx, p, s)?;
    let gy = functional_gradient(&cy, p, s)?;
    let gphi = functional_gradient(&cphi, p, s)?;
    let gpsi = functional_gradient(&cpsi, p, s)?;

    let shift_shift = RelationResidual::new(
        bracket_from_gradients(&gx, &gy)?,
        smeared_constraint(&Section::shift_only(lie_bracket(x, y)?), p)?,
    );
    let shift_lapse = RelationResidual::new(
        bracket_from_gradients(&gx, &gphi)?,
        smeared_constraint(&Section::lapse_only(directional_derivative(x, phi)?), p)?,
    );
    let lapse_lapse = RelationResidual::new(
        bracket_from_gradients(&gphi, &gpsi)?,
        smeared_constraint(
            &Section::shift_only(lapse_pair_shift(p.gamma(), phi, psi)?),
            p,
        )?,
    );
    Ok([shift_shift, shift_lapse, lapse_lapse])
}

/// Label-level bracket over a frozen metric `γ̄`:
/// `([X,Y] + φ grad ψ − ψ grad φ, X·ψ − Y·φ)`.
pub fn frozen_section_bracket(gbar: &MetricField, a: &Section, b: &Section) -> Result<Section> {
    if gbar.grid() != a.grid() || a.grid() != b.grid() {
        return Err(LabError::GridMismatch);
    }
    let shift = lie_bracket(a.shift(), b.shift())?
        .add(&lapse_pair_shift(gbar, a.lapse(), b.lapse())?)?;
    let lapse = directional_derivative(a.shift(), b.lapse())?
        .sub(&directional_derivative(b.shift(), a.lapse())?)?;
    Section::new(shift, lapse)
}

/// `[a,[b,c]] + [b,[c,a]] + [c,[a,b]]` under [`frozen_section_bracket`].
pub fn frozen_jacobiator(gbar: &MetricField, a: &Section, b: &Section, c: &Section) -> Result<Section> {
    let br = |u: &Section, v: &Section| frozen_section_bracket(gbar, u, v);
    br(a, &br(b, c)?)?
        .add(&br(b, &br(c, a)?)?)?
        .add(&br(c, &br(a, b)?)?)
}

/// `(L_X(γ̄^{-1})(φ dψ − ψ dφ), 0)`.
pub fn anomaly_section(
    gbar: &MetricField,
    x: &VectorField,
    phi: &ScalarField,
    psi: &ScalarField,
) -> Result<Section> {
    let lie_inverse = lie_derivative_sym2(x, &metric_inverse(gbar))?;
    let omega: OneFormField = differential(psi)
        .scale_by(phi)?
        .sub(&differential(phi).scale_by(psi)?)?;
    Ok(Section::shift_only(raise(&lie_inverse, &omega)?))
}

/// Sup-norm distance between the frozen jacobiator of `((X,0), (0,φ), (0,ψ))`
/// and the anomaly section.
pub fn frozen_jacobiator_residual(
    gbar: &MetricField,
    x: &VectorField,
    phi: &ScalarField,
    psi: &ScalarField,
) -> Result<f64> {
    let jac = frozen_jacobiator(
        gbar,
        &Section::shift_only(x.clone()),
        &Section::lapse_only(phi.clone()),
        &Section::lapse_only(psi.clone()),
    )?;
    Ok(jac.sub(&anomaly_section(gbar, x, phi, psi)?)?.max_abs())
}
