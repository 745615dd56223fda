//! The trivialized algebroid of evolutions: constant-section bracket, anchor
//! through gaussian extension, and its compatibility with constraint brackets.

use rayon::prelude::*;

use crate::bracket::{frozen_jacobiator, frozen_section_bracket, poisson_bracket, GradientStrategy, RelationResidual};
use crate::constraints::{constraint_functional, smeared_constraint, PhaseSpacePoint, Section};
use crate::error::{LabError, Result};
use crate::field::{MetricField, SymTensorField};
use crate::gaussian::{gaussian_extend, path_derivative, spacetime_bracket, symmetric_samples, MetricPath, BRACKET_TIME_STEP};
use crate::geometry::lie_derivative_sym2;
use crate::grid::TorusGrid;

/// Covariant spatial sym2 fields `α(t)` sampled on a path's window.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPath {
    times: Vec<f64>,
    alphas: Vec<SymTensorField>,
}

impl TangentPath {
    pub fn new(times: Vec<f64>, alphas: Vec<SymTensorField>) -> Result<Self> {
        if times.is_empty() || times.len() != alphas.len() {
            return Err(LabError::InvalidArgument(format!(
                "{} times for {} samples",
                times.len(),
                alphas.len()
            )));
        }
        let grid = alphas[0].grid();
        if alphas.iter().any(|a| a.grid() != grid) {
            return Err(LabError::GridMismatch);
        }
        Ok(Self { times, alphas })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn alphas(&self) -> &[SymTensorField] {
        &self.alphas
    }

    pub fn grid(&self) -> &TorusGrid {
        self.alphas[0].grid()
    }

    pub fn at(&self, t: f64) -> Option<&SymTensorField> {
        self.times.iter().position(|&s| s == t).map(|j| &self.alphas[j])
    }

    /// Largest sup norm over all samples.
    pub fn max_abs(&self) -> f64 {
        self.alphas.iter().map(SymTensorField::max_abs).fold(0.0, f64::max)
    }
}

/// Bracket of constant sections at `γ0`; the same formula as the frozen bracket.
pub fn section_bracket(gamma0: &MetricField, a: &Section, b: &Section) -> Result<Section> {
    frozen_section_bracket(gamma0, a, b)
}

/// `α(t) = −(L_{X(t)} γ(t) + φ γ̇(t))` along the gaussian extension of `a`.
pub fn anchor(path: &MetricPath, a: &Section, t_samples: &[f64]) -> Result<TangentPath> {
    let mut times = t_samples.to_vec();
    if !times.contains(&0.0) {
        times.push(0.0);
        times.sort_by(f64::total_cmp);
    }
    let v = gaussian_extend(path, a, &times, None)?;
    let alphas = t_samples
        .par_iter()
        .map(|&t| {
            let j = v.sample_index(t)?;
            let gamma = path.metric_at(t)?;
            lie_derivative_sym2(&v.shifts()[j], gamma.tensor())?
                .add(&path_derivative(path, t, 1)?.scale_by(&v.lapses()[j])?)
                .map(|s| s.scale(-1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    TangentPath::new(t_samples.to_vec(), alphas)
}

/// Default anchor samples: `−T/2, −T/4, 0, T/4, T/2` for window `[−T, T]`.
pub fn anchor_samples(path: &MetricPath) -> Vec<f64> {
    symmetric_samples(path, 2, path.window() / 4.0)
}

/// Whether the anchor of `a` vanishes to `tol` on [`anchor_samples`].
pub fn anchor_kernel_test(path: &MetricPath, a: &Section, tol: f64) -> Result<bool> {
    Ok(anchor(path, a, &anchor_samples(path))?.max_abs() <= tol)
}

/// `{C_a, C_b}(p)` against `C_{[a,b]}(p)` with the section bracket taken at `p.γ`.
pub fn bracket_constraint_compat(
    p: &PhaseSpacePoint,
    a: &Section,
    b: &Section,
    s: &GradientStrategy,
) -> Result<RelationResidual> {
    let bracket = poisson_bracket(&constraint_functional(a), &constraint_functional(b), p, s)?;
    let smeared = smeared_constraint(&section_bracket(p.gamma(), a, b)?, p)?;
    Ok(RelationResidual::new(bracket, smeared))
}

/// Where the jacobiator takes its metric from.
#[derive(Debug, Clone, Copy)]
pub enum GammaSource<'a> {
    /// A fixed metric `γ̄`.
    Frozen(&'a MetricField),
    /// The metric of the phase-space point the brackets are evaluated at.
    PerEvaluation(&'a PhaseSpacePoint),
}

impl GammaSource<'_> {
    pub fn metric(&self) -> &MetricField {
        match self {
            GammaSource::Frozen(g) => g,
            GammaSource::PerEvaluation(p) => p.gamma(),
        }
    }
}

/// `[a,[b,c]] + [b,[c,a]] + [c,[a,b]]` under [`section_bracket`].
pub fn section_jacobiator(source: GammaSource<'_>, a: &Section, b: &Section, c: &Section) -> Result<Section> {
    frozen_jacobiator(source.metric(), a, b, c)
}

/// Sup-norm gap between the slice split of `[v, w]` at `t = 0` for gaussian
/// extensions `v`, `w` of `a`, `b`, and `section_bracket(γ(0), a, b)`.
/// Returns `(gap, ‖section_bracket‖∞)`.
pub fn gaussian_bracket_agreement(path: &MetricPath, a: &Section, b: &Section) -> Result<(f64, f64)> {
    let times = symmetric_samples(path, 2, BRACKET_TIME_STEP);
    let v = gaussian_extend(path, a, &times, None)?;
    let w = gaussian_extend(path, b, &times, None)?;
    let j = v.sample_index(0.0)?;
    let (shift, lapse) = spacetime_bracket(&v.jet(j)?, &w.jet(j)?)?;
    let four = Section::new(shift, lapse)?;
    let slice = section_bracket(&path.metric_at(0.0)?, a, b)?;
    Ok((four.sub(&slice)?.max_abs(), slice.max_abs()))
}
