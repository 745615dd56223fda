//! Tensor fields sampled on a [`TorusGrid`] and their JSON snapshot format.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::TorusGrid;

/// Storage slot of the symmetric component `(i, j)`; `i ≤ j` pairs are stored
/// row by row.
pub fn sym_index(i: usize, j: usize, dim: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i.saturating_sub(1)) / 2 + (j - i)
}

/// The `(i, j)` pair stored in slot `c`.
pub fn sym_pair(c: usize, dim: usize) -> (usize, usize) {
    let mut slot = 0;
    for i in 0..dim {
        for j in i..dim {
            if slot == c {
                return (i, j);
            }
            slot += 1;
        }
    }
    panic!("symmetric slot {c} out of range for dimension {dim}");
}

/// 1 on the diagonal, 2 off it: the number of `(i, j)` orderings a stored slot stands for.
pub fn sym_multiplicity(c: usize, dim: usize) -> f64 {
    let (i, j) = sym_pair(c, dim);
    if i == j {
        1.0
    } else {
        2.0
    }
}

fn check_len(grid: &TorusGrid, values: &[f64]) -> Result<()> {
    if values.len() == grid.len() {
        Ok(())
    } else {
        Err(LabError::InvalidArgument(format!(
            "expected {} values, got {}",
            grid.len(),
            values.len()
        )))
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        check_len(grid, &values)?;
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        Self {
            grid: grid.clone(),
            values: grid.sample(f),
        }
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a * b)
    }

    fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: zip_map(&self.values, &other.values, f),
        })
    }
}

macro_rules! rank_one_field {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: TorusGrid,
            components: Vec<Vec<f64>>,
        }

        impl $name {
            pub fn new(grid: &TorusGrid, components: Vec<Vec<f64>>) -> Result<Self> {
                if components.len() != grid.dim() {
                    return Err(LabError::InvalidArgument(format!(
                        "expected {} components, got {}",
                        grid.dim(),
                        components.len()
                    )));
                }
                for c in &components {
                    check_len(grid, c)?;
                }
                Ok(Self {
                    grid: grid.clone(),
                    components,
                })
            }

            pub fn from_fn(grid: &TorusGrid, f: impl Fn(usize, &[f64; 3]) -> f64) -> Self {
                Self {
                    grid: grid.clone(),
                    components: (0..grid.dim()).map(|i| grid.sample(|x| f(i, x))).collect(),
                }
            }

            pub fn from_scalars(components: Vec<ScalarField>) -> Result<Self> {
                let grid = components
                    .first()
                    .map(|c| c.grid().clone())
                    .ok_or_else(|| LabError::InvalidArgument("no components".into()))?;
                if components.iter().any(|c| *c.grid() != grid) {
                    return Err(LabError::GridMismatch);
                }
                Self::new(&grid, components.into_iter().map(|c| c.into_values()).collect())
            }

            pub fn zeros(grid: &TorusGrid) -> Self {
                Self {
                    grid: grid.clone(),
                    components: vec![vec![0.0; grid.len()]; grid.dim()],
                }
            }

            /// A spatially constant field.
            pub fn constant(grid: &TorusGrid, c: &[f64]) -> Result<Self> {
                if c.len() != grid.dim() {
                    return Err(LabError::InvalidArgument("wrong component count".into()));
                }
                Ok(Self {
                    grid: grid.clone(),
                    components: c.iter().map(|&v| vec![v; grid.len()]).collect(),
                })
            }

            pub fn grid(&self) -> &TorusGrid {
                &self.grid
            }

            pub fn component(&self, i: usize) -> &[f64] {
                &self.components[i]
            }

            pub fn components(&self) -> &[Vec<f64>] {
                &self.components
            }

            pub fn component_field(&self, i: usize) -> ScalarField {
                ScalarField {
                    grid: self.grid.clone(),
                    values: self.components[i].clone(),
                }
            }

            pub fn at(&self, p: usize) -> [f64; 3] {
                let mut v = [0.0; 3];
                for (i, c) in self.components.iter().enumerate() {
                    v[i] = c[p];
                }
                v
            }

            pub fn max_abs(&self) -> f64 {
                self.components.iter().map(|c| max_abs(c)).fold(0.0, f64::max)
            }

            pub fn is_zero(&self) -> bool {
                self.components.iter().flatten().all(|&v| v == 0.0)
            }

            pub fn scale(&self, s: f64) -> Self {
                Self {
                    grid: self.grid.clone(),
                    components: self
                        .components
                        .iter()
                        .map(|c| c.iter().map(|v| v * s).collect())
                        .collect(),
                }
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                self.combine(other, |a, b| a + b)
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.combine(other, |a, b| a - b)
            }

            /// Multiplies every component pointwise by `f`.
            pub fn scale_by(&self, f: &ScalarField) -> Result<Self> {
                if self.grid != *f.grid() {
                    return Err(LabError::GridMismatch);
                }
                Ok(Self {
                    grid: self.grid.clone(),
                    components: self
                        .components
                        .iter()
                        .map(|c| zip_map(c, f.values(), |a, b| a * b))
                        .collect(),
                })
            }

            fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
                if self.grid != other.grid {
                    return Err(LabError::GridMismatch);
                }
                Ok(Self {
                    grid: self.grid.clone(),
                    components: self
                        .components
                        .iter()
                        .zip(&other.components)
                        .map(|(a, b)| zip_map(a, b, &f))
                        .collect(),
                })
            }
        }
    };
}

rank_one_field!(VectorField, "Contravariant vector field `X^i`.");
rank_one_field!(OneFormField, "Covariant one-form field `ω_i`.");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variance {
    Covariant,
    Contravariant,
}

impl Variance {
    pub fn name(self) -> &'static str {
        match self {
            Variance::Covariant => "covariant",
            Variance::Contravariant => "contravariant",
        }
    }
}

/// Symmetric 2-tensor field storing the `i ≤ j` components only.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    grid: TorusGrid,
    variance: Variance,
    components: Vec<Vec<f64>>,
}

impl SymTensorField {
    pub fn new(grid: &TorusGrid, variance: Variance, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.sym_len() {
            return Err(LabError::InvalidArgument(format!(
                "expected {} symmetric components, got {}",
                grid.sym_len(),
                components.len()
            )));
        }
        for c in &components {
            check_len(grid, c)?;
        }
        Ok(Self {
            grid: grid.clone(),
            variance,
            components,
        })
    }

    /// Builds from a function of `(i, j, x)`, evaluated for `i ≤ j` only.
    pub fn from_fn(
        grid: &TorusGrid,
        variance: Variance,
        f: impl Fn(usize, usize, &[f64; 3]) -> f64,
    ) -> Self {
        let d = grid.dim();
        let components = (0..grid.sym_len())
            .map(|c| {
                let (i, j) = sym_pair(c, d);
                grid.sample(|x| f(i, j, x))
            })
            .collect();
        Self {
            grid: grid.clone(),
            variance,
            components,
        }
    }

    pub fn zeros(grid: &TorusGrid, variance: Variance) -> Self {
        Self {
            grid: grid.clone(),
            variance,
            components: vec![vec![0.0; grid.len()]; grid.sym_len()],
        }
    }

    /// `c·δ` in the requested variance.
    pub fn identity(grid: &TorusGrid, variance: Variance, c: f64) -> Self {
        Self::from_fn(grid, variance, |i, j, _| if i == j { c } else { 0.0 })
    }

    /// Fills every point with the same full `d×d` matrix (upper triangle read).
    pub fn constant(grid: &TorusGrid, variance: Variance, m: &[[f64; 3]; 3]) -> Self {
        Self::from_fn(grid, variance, |i, j, _| m[i][j])
    }

    /// Builds a tensor from per-point full matrices.
    pub fn from_points(
        grid: &TorusGrid,
        variance: Variance,
        f: impl Fn(usize) -> [[f64; 3]; 3],
    ) -> Self {
        let d = grid.dim();
        let mut components = vec![vec![0.0; grid.len()]; grid.sym_len()];
        for p in 0..grid.len() {
            let m = f(p);
            for (c, comp) in components.iter_mut().enumerate() {
                let (i, j) = sym_pair(c, d);
                comp[p] = m[i][j];
            }
        }
        Self {
            grid: grid.clone(),
            variance,
            components,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn variance(&self) -> Variance {
        self.variance
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component(&self, i: usize, j: usize) -> &[f64] {
        &self.components[sym_index(i, j, self.grid.dim())]
    }

    /// Full symmetric matrix at point `p`.
    pub fn at(&self, p: usize) -> [[f64; 3]; 3] {
        let d = self.grid.dim();
        let mut m = [[0.0; 3]; 3];
        for i in 0..d {
            for j in i..d {
                let v = self.components[sym_index(i, j, d)][p];
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    }

    pub fn expect(&self, variance: Variance) -> Result<()> {
        if self.variance == variance {
            Ok(())
        } else {
            Err(LabError::VarianceMismatch {
                expected: variance.name(),
                found: self.variance.name(),
            })
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(|c| max_abs(c)).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            variance: self.variance,
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|v| v * s).collect())
                .collect(),
        }
    }

    pub fn scale_by(&self, f: &ScalarField) -> Result<Self> {
        if self.grid != *f.grid() {
            return Err(LabError::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            variance: self.variance,
            components: self
                .components
                .iter()
                .map(|c| zip_map(c, f.values(), |a, b| a * b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch);
        }
        other.expect(self.variance)?;
        Ok(Self {
            grid: self.grid.clone(),
            variance: self.variance,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| zip_map(a, b, &f))
                .collect(),
        })
    }
}

/// A covariant symmetric tensor that is positive-definite at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    tensor: SymTensorField,
}

impl MetricField {
    /// Validates positive-definiteness through the leading principal minors.
    pub fn new(tensor: SymTensorField) -> Result<Self> {
        tensor.expect(Variance::Covariant)?;
        let d = tensor.grid().dim();
        for p in 0..tensor.grid().len() {
            let m = tensor.at(p);
            for (k, value) in leading_minors(&m, d).into_iter().enumerate().take(d) {
                if !(value > 0.0) {
                    return Err(LabError::DegenerateMetric {
                        point: p,
                        minor: k + 1,
                        value,
                    });
                }
            }
        }
        Ok(Self { tensor })
    }

    /// The flat metric `δ`.
    pub fn flat(grid: &TorusGrid) -> Self {
        Self {
            tensor: SymTensorField::identity(grid, Variance::Covariant, 1.0),
        }
    }

    pub fn tensor(&self) -> &SymTensorField {
        &self.tensor
    }

    pub fn into_tensor(self) -> SymTensorField {
        self.tensor
    }

    pub fn grid(&self) -> &TorusGrid {
        self.tensor.grid()
    }

    pub fn at(&self, p: usize) -> [[f64; 3]; 3] {
        self.tensor.at(p)
    }

    /// `√det γ` at every point.
    pub fn sqrt_det(&self) -> ScalarField {
        let d = self.grid().dim();
        let values = (0..self.grid().len())
            .map(|p| det(&self.at(p), d).sqrt())
            .collect();
        ScalarField {
            grid: self.grid().clone(),
            values,
        }
    }
}

fn leading_minors(m: &[[f64; 3]; 3], d: usize) -> [f64; 3] {
    let m1 = m[0][0];
    let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let m3 = if d == 3 { det(m, 3) } else { 0.0 };
    [m1, m2, m3]
}

pub(crate) fn det(m: &[[f64; 3]; 3], d: usize) -> f64 {
    crate::kernel::det(m, d)
}

/// Inverse of a symmetric positive-definite `d×d` block by cofactors.
pub(crate) fn invert(m: &[[f64; 3]; 3], d: usize) -> [[f64; 3]; 3] {
    crate::kernel::invert(m, d)
}

/// Christoffel symbols of the second kind `Γ^k_ij`, stored as `[k][sym(i, j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelField {
    grid: TorusGrid,
    components: Vec<Vec<Vec<f64>>>,
}

impl ChristoffelField {
    pub(crate) fn from_raw(grid: &TorusGrid, components: Vec<Vec<Vec<f64>>>) -> Self {
        Self {
            grid: grid.clone(),
            components,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Values of `Γ^k_ij`; symmetric in `i, j` by storage.
    pub fn component(&self, k: usize, i: usize, j: usize) -> &[f64] {
        &self.components[k][sym_index(i, j, self.grid.dim())]
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .map(|c| max_abs(c))
            .fold(0.0, f64::max)
    }
}

/// Any field the snapshot format can carry.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
    OneForm(OneFormField),
    Sym2(SymTensorField),
    Metric(MetricField),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
}

impl From<&TorusGrid> for GridSpec {
    fn from(g: &TorusGrid) -> Self {
        Self {
            dim: g.dim(),
            n: g.n(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    Scalar,
    Vector,
    OneForm,
    Sym2Covariant,
    Sym2Contravariant,
    Metric,
}

/// JSON form `{grid: {dim, n}, kind, components: [[...]]}`; every component
/// is a row-major list of point values with axis 0 varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub grid: GridSpec,
    pub kind: SnapshotKind,
    pub components: Vec<Vec<f64>>,
}

impl Field {
    pub fn grid(&self) -> &TorusGrid {
        match self {
            Field::Scalar(f) => f.grid(),
            Field::Vector(f) => f.grid(),
            Field::OneForm(f) => f.grid(),
            Field::Sym2(f) => f.grid(),
            Field::Metric(f) => f.grid(),
        }
    }

    pub fn to_snapshot(&self) -> FieldSnapshot {
        let (kind, components) = match self {
            Field::Scalar(f) => (SnapshotKind::Scalar, vec![f.values().to_vec()]),
            Field::Vector(f) => (SnapshotKind::Vector, f.components().to_vec()),
            Field::OneForm(f) => (SnapshotKind::OneForm, f.components().to_vec()),
            Field::Sym2(f) => (
                match f.variance() {
                    Variance::Covariant => SnapshotKind::Sym2Covariant,
                    Variance::Contravariant => SnapshotKind::Sym2Contravariant,
                },
                f.components().to_vec(),
            ),
            Field::Metric(f) => (SnapshotKind::Metric, f.tensor().components().to_vec()),
        };
        FieldSnapshot {
            grid: self.grid().into(),
            kind,
            components,
        }
    }

    pub fn from_snapshot(snap: &FieldSnapshot) -> Result<Self> {
        let grid = TorusGrid::new(snap.grid.dim, snap.grid.n)?;
        let comps = snap.components.clone();
        Ok(match snap.kind {
            SnapshotKind::Scalar => {
                let [values]: [Vec<f64>; 1] = comps
                    .try_into()
                    .map_err(|_| LabError::Snapshot("scalar needs one component".into()))?;
                Field::Scalar(ScalarField::new(&grid, values)?)
            }
            SnapshotKind::Vector => Field::Vector(VectorField::new(&grid, comps)?),
            SnapshotKind::OneForm => Field::OneForm(OneFormField::new(&grid, comps)?),
            SnapshotKind::Sym2Covariant => {
                Field::Sym2(SymTensorField::new(&grid, Variance::Covariant, comps)?)
            }
            SnapshotKind::Sym2Contravariant => {
                Field::Sym2(SymTensorField::new(&grid, Variance::Contravariant, comps)?)
            }
            SnapshotKind::Metric => Field::Metric(MetricField::new(SymTensorField::new(
                &grid,
                Variance::Covariant,
                comps,
            )?)?),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_snapshot()).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: FieldSnapshot =
            serde_json::from_str(text).map_err(|e| LabError::Snapshot(e.to_string()))?;
        Self::from_snapshot(&snap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_slots_cover_upper_triangle() {
        for d in [2, 3] {
            let n = d * (d + 1) / 2;
            for c in 0..n {
                let (i, j) = sym_pair(c, d);
                assert!(i <= j);
                assert_eq!(sym_index(i, j, d), c);
                assert_eq!(sym_index(j, i, d), c);
            }
        }
    }

    #[test]
    fn metric_rejects_indefinite_tensor() {
        let g = TorusGrid::new(2, 8).unwrap();
        let t = SymTensorField::constant(
            &g,
            Variance::Covariant,
            &[[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0; 3]],
        );
        assert!(matches!(
            MetricField::new(t),
            Err(LabError::DegenerateMetric { minor: 2, .. })
        ));
        let contra = SymTensorField::identity(&g, Variance::Contravariant, 1.0);
        assert!(matches!(
            MetricField::new(contra),
            Err(LabError::VarianceMismatch { .. })
        ));
    }

    #[test]
    fn cofactor_inverse_3d() {
        let m = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let inv = invert(&m, 3);
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let g = TorusGrid::new(2, 8).unwrap();
        let t = SymTensorField::from_fn(&g, Variance::Contravariant, |i, j, x| {
            (i + 2 * j) as f64 * x[0].sin()
        });
        let field = Field::Sym2(t);
        let back = Field::from_json(&field.to_json()).unwrap();
        assert_eq!(back, field);
        let text = Field::Scalar(ScalarField::constant(&g, 1.0)).to_json();
        assert!(text.starts_with(r#"{"grid":{"dim":2,"n":8},"kind":"scalar","components":[["#));
    }
}
