//! Riemannian tensor calculus on a slice: inverse metric, Levi-Civita
//! connection, scalar curvature, gradients, divergences, Lie brackets and Lie
//! derivatives of symmetric 2-tensors.
//!
//! All spatial derivatives are Fourier-spectral. Symmetric tensors store their
//! `i ≤ j` components; every contraction below expands to full index ranges.

use crate::error::{LabError, Result};
use crate::field::{
    sym_pair, ChristoffelField, MetricField, OneFormField, ScalarField,
    SymTensorField, Variance, VectorField,
};
use crate::grid::TorusGrid;
use crate::kernel;

type Mat = [[f64; 3]; 3];

fn same_grid(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(LabError::GridMismatch)
    }
}

/// Derivative of raw point values; the axis is always valid for internal callers.
fn deriv(grid: &TorusGrid, values: &[f64], axis: usize) -> Vec<f64> {
    grid.derivative(values, axis)
        .expect("internal derivative call with valid axis and length")
}

/// `∂_axis f`.
pub fn spectral_derivative(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    let values = f.grid().derivative(f.values(), axis)?;
    ScalarField::new(f.grid(), values)
}

/// Pointwise inverse matrices of a metric.
pub(crate) fn inverse_points(g: &MetricField) -> Vec<Mat> {
    kernel::inverse_points(g.grid(), g.tensor().components())
}

fn sym_from_points(grid: &TorusGrid, variance: Variance, points: &[Mat]) -> SymTensorField {
    SymTensorField::from_points(grid, variance, |p| points[p])
}

/// `γ^{ij}`, returned as a contravariant symmetric tensor.
///
/// Positive-definiteness is a [`MetricField`] invariant, so a degenerate input
/// is rejected when the metric is constructed.
pub fn metric_inverse(g: &MetricField) -> SymTensorField {
    sym_from_points(g.grid(), Variance::Contravariant, &inverse_points(g))
}

fn christoffel_raw(g: &MetricField, ginv: &[Mat]) -> Vec<Vec<Vec<f64>>> {
    kernel::christoffel(g.grid(), g.tensor().components(), ginv)
}

/// `Γ^k_ij = ½ γ^{kl}(∂_i γ_lj + ∂_j γ_li − ∂_l γ_ij)`.
pub fn christoffel(g: &MetricField) -> ChristoffelField {
    let ginv = inverse_points(g);
    ChristoffelField::from_raw(g.grid(), christoffel_raw(g, &ginv))
}

pub(crate) fn scalar_curvature_with(g: &MetricField, ginv: &[Mat]) -> Vec<f64> {
    kernel::scalar_curvature(g.grid(), g.tensor().components(), ginv)
}

/// Ricci scalar `R = γ^{jl} R^i_{jil}` with
/// `R^i_{jkl} = ∂_k Γ^i_{lj} − ∂_l Γ^i_{kj} + Γ^i_{km} Γ^m_{lj} − Γ^i_{lm} Γ^m_{kj}`
/// (positive on round spheres).
pub fn scalar_curvature(g: &MetricField) -> ScalarField {
    let ginv = inverse_points(g);
    ScalarField::new(g.grid(), scalar_curvature_with(g, &ginv)).expect("length matches grid")
}

/// `dφ`.
pub fn differential(phi: &ScalarField) -> OneFormField {
    let grid = phi.grid();
    OneFormField::new(
        grid,
        (0..grid.dim()).map(|a| deriv(grid, phi.values(), a)).collect(),
    )
    .expect("d components")
}

/// `T^{ij} ω_j` for a contravariant symmetric `T`.
pub fn raise(t: &SymTensorField, omega: &OneFormField) -> Result<VectorField> {
    t.expect(Variance::Contravariant)?;
    same_grid(t.grid(), omega.grid())?;
    let grid = t.grid();
    let d = grid.dim();
    let comps = (0..d)
        .map(|i| {
            (0..grid.len())
                .map(|p| (0..d).map(|j| t.component(i, j)[p] * omega.component(j)[p]).sum())
                .collect()
        })
        .collect();
    VectorField::new(grid, comps)
}

/// `γ_ij X^j`.
pub fn lower(g: &MetricField, x: &VectorField) -> Result<OneFormField> {
    interior_sym(x, g.tensor())
}

/// `(i_X T)_j = X^i T_ij` for a covariant symmetric `T`.
pub fn interior_sym(x: &VectorField, t: &SymTensorField) -> Result<OneFormField> {
    t.expect(Variance::Covariant)?;
    same_grid(x.grid(), t.grid())?;
    let grid = x.grid();
    let d = grid.dim();
    let comps = (0..d)
        .map(|j| {
            (0..grid.len())
                .map(|p| (0..d).map(|i| x.component(i)[p] * t.component(i, j)[p]).sum())
                .collect()
        })
        .collect();
    OneFormField::new(grid, comps)
}

/// `ω(X) = ω_i X^i`.
pub fn pair(omega: &OneFormField, x: &VectorField) -> Result<ScalarField> {
    same_grid(omega.grid(), x.grid())?;
    let grid = x.grid();
    let values = (0..grid.len())
        .map(|p| {
            (0..grid.dim())
                .map(|i| omega.component(i)[p] * x.component(i)[p])
                .sum()
        })
        .collect();
    ScalarField::new(grid, values)
}

/// `X·φ = X^i ∂_i φ`.
pub fn directional_derivative(x: &VectorField, phi: &ScalarField) -> Result<ScalarField> {
    same_grid(x.grid(), phi.grid())?;
    pair(&differential(phi), x)
}

/// `grad_γ φ = γ^{ij} ∂_j φ`.
pub fn grad_spatial(g: &MetricField, phi: &ScalarField) -> Result<VectorField> {
    same_grid(g.grid(), phi.grid())?;
    raise(&metric_inverse(g), &differential(phi))
}

pub(crate) fn divergence_sym_with(
    g: &MetricField,
    ginv: &[Mat],
    pi: &SymTensorField,
) -> Vec<Vec<f64>> {
    kernel::divergence(g.grid(), g.tensor().components(), ginv, pi.components())
}

/// `(div_γ π)_j = γ^{ik} ∇_i π_kj` for a covariant symmetric `π`.
pub fn divergence_sym(g: &MetricField, pi: &SymTensorField) -> Result<OneFormField> {
    pi.expect(Variance::Covariant)?;
    same_grid(g.grid(), pi.grid())?;
    let ginv = inverse_points(g);
    OneFormField::new(g.grid(), divergence_sym_with(g, &ginv, pi))
}

/// Jacobian `∂_j X^i` indexed `[i][j]`.
pub(crate) fn vector_jacobian(x: &VectorField) -> Vec<Vec<Vec<f64>>> {
    let grid = x.grid();
    x.components()
        .iter()
        .map(|c| (0..grid.dim()).map(|j| deriv(grid, c, j)).collect())
        .collect()
}

/// `[X, Y]^i = X^j ∂_j Y^i − Y^j ∂_j X^i`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    same_grid(x.grid(), y.grid())?;
    let grid = x.grid();
    let d = grid.dim();
    let jx = vector_jacobian(x);
    let jy = vector_jacobian(y);
    let comps = (0..d)
        .map(|i| {
            (0..grid.len())
                .map(|p| {
                    (0..d)
                        .map(|j| {
                            x.component(j)[p] * jy[i][j][p] - y.component(j)[p] * jx[i][j][p]
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    VectorField::new(grid, comps)
}

/// Lie derivative of a symmetric 2-tensor of either variance.
///
/// Covariant: `X^k ∂_k T_ij + T_kj ∂_i X^k + T_ik ∂_j X^k`.
/// Contravariant: `X^k ∂_k T^ij − T^kj ∂_k X^i − T^ik ∂_k X^j`.
pub fn lie_derivative_sym2(x: &VectorField, t: &SymTensorField) -> Result<SymTensorField> {
    same_grid(x.grid(), t.grid())?;
    let grid = x.grid();
    let d = grid.dim();
    let jx = vector_jacobian(x);
    let dt: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|k| t.components().iter().map(|c| deriv(grid, c, k)).collect())
        .collect();
    let covariant = t.variance() == Variance::Covariant;
    let mut comps = vec![vec![0.0; grid.len()]; grid.sym_len()];
    for p in 0..grid.len() {
        let tm = t.at(p);
        for (c, comp) in comps.iter_mut().enumerate() {
            let (i, j) = sym_pair(c, d);
            let mut s = 0.0;
            for k in 0..d {
                s += x.component(k)[p] * dt[k][c][p];
                if covariant {
                    s += tm[k][j] * jx[k][i][p] + tm[i][k] * jx[k][j][p];
                } else {
                    s -= tm[k][j] * jx[i][k][p] + tm[i][k] * jx[j][k][p];
                }
            }
            comp[p] = s;
        }
    }
    SymTensorField::new(grid, t.variance(), comps)
}

pub(crate) fn traces_with(ginv: &[Mat], pi: &SymTensorField) -> (Vec<f64>, Vec<f64>) {
    kernel::traces(pi.grid().dim(), ginv, pi.components())
}

/// `(Tr_γ π, Tr_γ π²)` with `π` read as the endomorphism `γ^{ik} π_kj`.
pub fn traces(g: &MetricField, pi: &SymTensorField) -> Result<(ScalarField, ScalarField)> {
    pi.expect(Variance::Covariant)?;
    same_grid(g.grid(), pi.grid())?;
    let (tr, tr2) = traces_with(&inverse_points(g), pi);
    Ok((ScalarField::new(g.grid(), tr)?, ScalarField::new(g.grid(), tr2)?))
}

/// `∫ f vol_γ` by the uniform rule, which is spectrally exact for periodic integrands.
pub fn integrate_density(g: &MetricField, f: &ScalarField) -> Result<f64> {
    same_grid(g.grid(), f.grid())?;
    let weighted = f.mul(&g.sqrt_det())?;
    Ok(g.grid().integrate(weighted.values()))
}

/// Coordinate divergence `∂_i X^i` (flat metric).
pub fn flat_divergence(x: &VectorField) -> ScalarField {
    let grid = x.grid();
    let mut out = vec![0.0; grid.len()];
    for (i, c) in x.components().iter().enumerate() {
        for (o, v) in out.iter_mut().zip(deriv(grid, c, i)) {
            *o += v;
        }
    }
    ScalarField::new(grid, out).expect("length matches grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(2, n).unwrap()
    }

    fn conformal(g: &TorusGrid, a: f64) -> MetricField {
        let t = SymTensorField::from_fn(g, Variance::Covariant, |i, j, x| {
            if i == j {
                (2.0 * a * x[0].sin()).exp()
            } else {
                0.0
            }
        });
        MetricField::new(t).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn mixed_partials_commute() {
        let g = grid(16);
        let f = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + x[1].sin());
        let fxy = spectral_derivative(&spectral_derivative(&f, 0).unwrap(), 1).unwrap();
        let fyx = spectral_derivative(&spectral_derivative(&f, 1).unwrap(), 0).unwrap();
        assert!(fxy.sub(&fyx).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn spectral_derivative_examples() {
        let g = grid(16);
        let f = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let df = spectral_derivative(&f, 1).unwrap();
        let expect = g.sample(|x| -2.0 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin());
        assert!(close(df.values(), &expect, 1e-12));
        let c = spectral_derivative(&ScalarField::constant(&g, 3.5), 0).unwrap();
        assert!(c.max_abs() < 1e-14);
        assert!(matches!(
            spectral_derivative(&f, 2),
            Err(LabError::AxisOutOfRange { axis: 2, dim: 2 })
        ));
    }

    #[test]
    fn inverse_examples() {
        let g = grid(8);
        let flat = metric_inverse(&MetricField::flat(&g));
        assert_eq!(flat, SymTensorField::identity(&g, Variance::Contravariant, 1.0));
        let diag = MetricField::new(SymTensorField::constant(
            &g,
            Variance::Covariant,
            &[[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]],
        ))
        .unwrap();
        let inv = metric_inverse(&diag);
        assert!(close(inv.component(0, 0), &vec![0.25; g.len()], 0.0));
        assert!(close(inv.component(1, 1), &vec![1.0; g.len()], 0.0));

        let g16 = grid(16);
        let conf = conformal(&g16, 0.1);
        let inv = metric_inverse(&conf);
        // oracle: e^{-2a sin x} δ, and γγ^{-1} = I
        let expect = g16.sample(|x| (-0.2 * x[0].sin()).exp());
        assert!(close(inv.component(0, 0), &expect, 1e-14));
        for p in 0..g16.len() {
            let (m, mi) = (conf.at(p), inv.at(p));
            for i in 0..2 {
                for j in 0..2 {
                    let s: f64 = (0..2).map(|k| m[i][k] * mi[k][j]).sum();
                    assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn christoffel_examples() {
        let g = grid(16);
        let flat = christoffel(&MetricField::flat(&g));
        assert_eq!(flat.max_abs(), 0.0);

        let a = 0.1;
        let gam = christoffel(&conformal(&g, a));
        let expect = g.sample(|x| a * x[0].cos());
        assert!(close(gam.component(0, 0, 0), &expect, 1e-12));

        let m = MetricField::new(SymTensorField::from_fn(&g, Variance::Covariant, |i, j, x| {
            match (i, j) {
                (0, 0) => 1.0 + 0.1 * x[1].sin(),
                (1, 1) => 1.0,
                _ => 0.0,
            }
        }))
        .unwrap();
        let gam = christoffel(&m);
        let expect = g.sample(|x| 0.05 * x[1].cos() / (1.0 + 0.1 * x[1].sin()));
        assert!(close(gam.component(0, 0, 1), &expect, 1e-12));
        assert_eq!(gam.component(0, 0, 1), gam.component(0, 1, 0));
    }

    #[test]
    fn curvature_of_conformal_family() {
        let g = grid(24);
        let a = 0.1;
        let r = scalar_curvature(&conformal(&g, a));
        let expect = g.sample(|x| 2.0 * a * x[0].sin() * (-2.0 * a * x[0].sin()).exp());
        assert!(close(r.values(), &expect, 1e-10));
        let scaled = MetricField::new(SymTensorField::identity(&g, Variance::Covariant, 2.5)).unwrap();
        assert!(scalar_curvature(&scaled).max_abs() < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let g = grid(16);
        let phi = ScalarField::from_fn(&g, |x| x[0].sin());
        let flat = grad_spatial(&MetricField::flat(&g), &phi).unwrap();
        assert!(close(flat.component(0), &g.sample(|x| x[0].cos()), 1e-13));
        let diag = MetricField::new(SymTensorField::constant(
            &g,
            Variance::Covariant,
            &[[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]],
        ))
        .unwrap();
        let v = grad_spatial(&diag, &phi).unwrap();
        assert!(close(v.component(0), &g.sample(|x| x[0].cos() / 4.0), 1e-13));
        assert!(v.component(1).iter().all(|c| c.abs() < 1e-14));
        let zero = grad_spatial(&diag, &ScalarField::constant(&g, 2.0)).unwrap();
        assert!(zero.max_abs() < 1e-14);
        assert!(grad_spatial(&diag, &ScalarField::zeros(&grid(8))).is_err());
    }

    #[test]
    fn divergence_examples() {
        let g = grid(16);
        let flat = MetricField::flat(&g);
        let pi = SymTensorField::from_fn(&g, Variance::Covariant, |i, j, x| {
            if (i, j) == (0, 0) {
                x[0].sin()
            } else {
                0.0
            }
        });
        let div = divergence_sym(&flat, &pi).unwrap();
        assert!(close(div.component(0), &g.sample(|x| x[0].cos()), 1e-13));
        assert!(div.component(1).iter().all(|v| v.abs() < 1e-14));
        let c = SymTensorField::identity(&g, Variance::Covariant, 3.0);
        assert!(divergence_sym(&flat, &c).unwrap().max_abs() < 1e-14);
        let contra = SymTensorField::identity(&g, Variance::Contravariant, 1.0);
        assert!(divergence_sym(&flat, &contra).is_err());
    }

    #[test]
    fn bracket_examples() {
        let g = grid(16);
        let dx = VectorField::constant(&g, &[1.0, 0.0]).unwrap();
        let dy = VectorField::constant(&g, &[0.0, 1.0]).unwrap();
        assert_eq!(lie_bracket(&dx, &dy).unwrap().max_abs(), 0.0);
        let y = VectorField::from_fn(&g, |i, x| if i == 1 { x[0].sin() } else { 0.0 });
        let b = lie_bracket(&dx, &y).unwrap();
        assert!(close(b.component(1), &g.sample(|x| x[0].cos()), 1e-13));
        assert!(b.component(0).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn lie_derivative_examples() {
        let g = grid(16);
        let dx = VectorField::constant(&g, &[1.0, 0.0]).unwrap();
        let delta = SymTensorField::identity(&g, Variance::Covariant, 1.0);
        assert!(lie_derivative_sym2(&dx, &delta).unwrap().max_abs() < 1e-14);

        let x = VectorField::from_fn(&g, |i, x| if i == 0 { x[0].sin() } else { 0.0 });
        let l = lie_derivative_sym2(&x, &delta).unwrap();
        assert!(close(l.component(0, 0), &g.sample(|x| 2.0 * x[0].cos()), 1e-13));
        assert!(l.component(0, 1).iter().chain(l.component(1, 1)).all(|v| v.abs() < 1e-14));

        let delta_up = SymTensorField::identity(&g, Variance::Contravariant, 1.0);
        let l = lie_derivative_sym2(&x, &delta_up).unwrap();
        assert_eq!(l.variance(), Variance::Contravariant);
        assert!(close(l.component(0, 0), &g.sample(|x| -2.0 * x[0].cos()), 1e-13));
    }

    #[test]
    fn trace_examples() {
        let g = grid(8);
        let flat = MetricField::flat(&g);
        let p = 0.7;
        let (t, t2) = traces(&flat, &SymTensorField::identity(&g, Variance::Covariant, p)).unwrap();
        assert!(close(t.values(), &vec![2.0 * p; g.len()], 1e-15));
        assert!(close(t2.values(), &vec![2.0 * p * p; g.len()], 1e-15));
        let pi = SymTensorField::constant(
            &g,
            Variance::Covariant,
            &[[p, 0.0, 0.0], [0.0, -p, 0.0], [0.0; 3]],
        );
        let (t, t2) = traces(&flat, &pi).unwrap();
        assert!(t.max_abs() < 1e-15);
        assert!(close(t2.values(), &vec![2.0 * p * p; g.len()], 1e-15));
        let (t, t2) = traces(&flat, &SymTensorField::zeros(&g, Variance::Covariant)).unwrap();
        assert_eq!((t.max_abs(), t2.max_abs()), (0.0, 0.0));
    }

    #[test]
    fn integration_examples() {
        let g = grid(16);
        let vol = (2.0 * std::f64::consts::PI).powi(2);
        let flat = MetricField::flat(&g);
        let one = ScalarField::constant(&g, 1.0);
        assert!((integrate_density(&flat, &one).unwrap() - vol).abs() < 1e-12);
        let s = ScalarField::from_fn(&g, |x| x[0].sin());
        assert!(integrate_density(&flat, &s).unwrap().abs() < 1e-13);
        let c = 1.7;
        let scaled =
            MetricField::new(SymTensorField::identity(&g, Variance::Covariant, c * c)).unwrap();
        assert!((integrate_density(&scaled, &one).unwrap() - c * c * vol).abs() < 1e-11);
    }
}
