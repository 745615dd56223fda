//! Spectral verification laboratory for the ADM constraints of vacuum general
//! relativity on flat tori, their canonical Poisson brackets, gaussian
//! extensions of lapse and shift, and the trivialized Lie algebroid of
//! hypersurface evolutions.

pub mod algebroid;
pub mod bracket;
pub mod constraints;
pub mod error;
pub mod field;
pub mod fixtures;
pub mod gaussian;
pub mod geometry;
pub mod grid;
mod kernel;
pub mod random;

pub use constraints::{
    constraint_functional, energy_constraint, momentum_constraint, smeared_constraint, Functional,
    FunctionalLabel, PhaseSpacePoint, Section,
};
pub use error::{LabError, Result};
pub use field::{
    ChristoffelField, Field, FieldSnapshot, MetricField, OneFormField, ScalarField,
    SymTensorField, Variance, VectorField,
};
pub use grid::TorusGrid;
