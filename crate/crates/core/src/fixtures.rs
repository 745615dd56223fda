//! Seeded experiment inputs shared by the suites, the CLI and the tests.
//!
//! A seed fixes the Fourier coefficients, not the grid samples, so the same
//! seed describes the same continuum fields at every resolution.

use crate::constraints::{PhaseSpacePoint, Section};
use crate::error::Result;
use crate::field::{MetricField, ScalarField, Variance, VectorField};
use crate::gaussian::MetricPath;
use crate::grid::TorusGrid;
use crate::random::{random_cometric, random_metric, random_scalar, random_sym2, random_vector, sub_seed};

/// `(δ + ε h, ε k)` with band-limited `h`, `k`; the flat vacuum when `ε = 0`.
pub fn seeded_phase_point(grid: &TorusGrid, seed: u64, kmax: usize, epsilon: f64) -> Result<PhaseSpacePoint> {
    let gamma = random_metric(grid, sub_seed(seed, 1), kmax, epsilon)?;
    let pi = random_sym2(grid, sub_seed(seed, 2), kmax, epsilon, Variance::Covariant)?;
    PhaseSpacePoint::new(gamma, pi)
}

/// Unit-amplitude smearing data `(X, Y, φ, ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmearingSet {
    pub x: VectorField,
    pub y: VectorField,
    pub phi: ScalarField,
    pub psi: ScalarField,
}

impl SmearingSet {
    pub fn seeded(grid: &TorusGrid, seed: u64, kmax: usize) -> Result<Self> {
        Ok(Self {
            x: random_vector(grid, sub_seed(seed, 3), kmax, 1.0)?,
            y: random_vector(grid, sub_seed(seed, 4), kmax, 1.0)?,
            phi: random_scalar(grid, sub_seed(seed, 5), kmax, 1.0)?,
            psi: random_scalar(grid, sub_seed(seed, 6), kmax, 1.0)?,
        })
    }

    /// Two mixed sections `(X, φ)` and `(Y, ψ)`.
    pub fn sections(&self) -> (Section, Section) {
        (
            Section::new(self.x.clone(), self.phi.clone()).expect("shared grid"),
            Section::new(self.y.clone(), self.psi.clone()).expect("shared grid"),
        )
    }

    /// Shift-only, lapse-only and mixed variants of the first and second
    /// section, in that order.
    pub fn typed_sections(&self) -> [(&'static str, Section, Section); 3] {
        let (a, b) = self.sections();
        [
            ("shift", Section::shift_only(self.x.clone()), Section::shift_only(self.y.clone())),
            ("lapse", Section::lapse_only(self.phi.clone()), Section::lapse_only(self.psi.clone())),
            ("mixed", a, b),
        ]
    }
}

/// Frozen metric with band-limited inverse, amplitude `ε`.
pub fn seeded_frozen_metric(grid: &TorusGrid, seed: u64, kmax: usize, epsilon: f64) -> Result<MetricField> {
    random_cometric(grid, sub_seed(seed, 7), kmax, epsilon)
}

/// Half-width of the window of seeded metric paths.
pub const PATH_WINDOW: f64 = 0.5;

/// Quadratic path `γ0 + t γ1 + t² γ2` with `γ0^{-1} = δ + ε h`, `γ1` of
/// amplitude `4ε` and `γ2` of amplitude `2ε`; static and flat when `ε = 0`.
pub fn seeded_path(grid: &TorusGrid, seed: u64, kmax: usize, epsilon: f64) -> Result<MetricPath> {
    let gamma0 = random_cometric(grid, sub_seed(seed, 8), kmax, epsilon)?;
    let gamma1 = random_sym2(grid, sub_seed(seed, 9), kmax, 4.0 * epsilon, Variance::Covariant)?;
    let gamma2 = random_sym2(grid, sub_seed(seed, 10), kmax, 2.0 * epsilon, Variance::Covariant)?;
    MetricPath::new(vec![gamma0.into_tensor(), gamma1, gamma2], PATH_WINDOW)
}

/// `γ(t) = δ` on `[−T, T]`.
pub fn static_flat_path(grid: &TorusGrid) -> Result<MetricPath> {
    MetricPath::static_path(&MetricField::flat(grid), PATH_WINDOW)
}
