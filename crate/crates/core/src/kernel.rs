//! Pointwise and spectral kernels shared by real evaluation and complex-step
//! differentiation. Everything here is generic over [`Scalar`], so the
//! complex path evaluates literally the same expressions as the real one.
//!
//! Symmetric tensors are passed as their stored `i ≤ j` component arrays.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use rustfft::num_complex::Complex64;

use crate::field::{sym_index, sym_multiplicity, sym_pair};
use crate::grid::TorusGrid;

pub(crate) type Mat<T> = [[T; 3]; 3];

pub(crate) trait Scalar:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Mul<f64, Output = Self>
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn sqrt(self) -> Self;
    fn derivative(grid: &TorusGrid, values: &[Self], axis: usize) -> Vec<Self>;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    fn derivative(grid: &TorusGrid, values: &[Self], axis: usize) -> Vec<Self> {
        grid.derivative(values, axis)
            .expect("internal derivative call with valid axis and length")
    }
}

impl Scalar for Complex64 {
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }

    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }

    fn derivative(grid: &TorusGrid, values: &[Self], axis: usize) -> Vec<Self> {
        grid.derivative_complex(values, axis)
            .expect("internal derivative call with valid axis and length")
    }
}

pub(crate) fn det<T: Scalar>(m: &Mat<T>, d: usize) -> T {
    match d {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }
}

/// Cofactor inverse of the leading `d×d` block.
pub(crate) fn invert<T: Scalar>(m: &Mat<T>, d: usize) -> Mat<T> {
    let det = det(m, d);
    let mut inv = [[T::zero(); 3]; 3];
    if d == 2 {
        inv[0][0] = m[1][1] / det;
        inv[1][1] = m[0][0] / det;
        inv[0][1] = -m[0][1] / det;
        inv[1][0] = -m[1][0] / det;
    } else {
        for (i, row) in inv.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                *v = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
            }
        }
    }
    inv
}

/// Full symmetric matrix at point `p` from stored components.
pub(crate) fn point<T: Scalar>(comps: &[Vec<T>], p: usize, d: usize) -> Mat<T> {
    let mut m = [[T::zero(); 3]; 3];
    for i in 0..d {
        for j in 0..d {
            m[i][j] = comps[sym_index(i, j, d)][p];
        }
    }
    m
}

pub(crate) fn inverse_points<T: Scalar>(grid: &TorusGrid, g: &[Vec<T>]) -> Vec<Mat<T>> {
    let d = grid.dim();
    (0..grid.len()).map(|p| invert(&point(g, p, d), d)).collect()
}

pub(crate) fn sqrt_det_points<T: Scalar>(grid: &TorusGrid, g: &[Vec<T>]) -> Vec<T> {
    let d = grid.dim();
    (0..grid.len()).map(|p| det(&point(g, p, d), d).sqrt()).collect()
}

pub(crate) fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        let mut s = T::zero();
        for &v in values {
            s += v;
        }
        s
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// `Γ^k_ij = ½ γ^{kl}(∂_i γ_lj + ∂_j γ_li − ∂_l γ_ij)` as `[k][sym(i, j)]`.
pub(crate) fn christoffel<T: Scalar>(grid: &TorusGrid, g: &[Vec<T>], ginv: &[Mat<T>]) -> Vec<Vec<Vec<T>>> {
    let d = grid.dim();
    let ns = grid.sym_len();
    let dg: Vec<Vec<Vec<T>>> = (0..d)
        .map(|a| g.iter().map(|c| T::derivative(grid, c, a)).collect())
        .collect();
    let mut gamma = vec![vec![vec![T::zero(); grid.len()]; ns]; d];
    for p in 0..grid.len() {
        let dgp = |a: usize, i: usize, j: usize| dg[a][sym_index(i, j, d)][p];
        for c in 0..ns {
            let (i, j) = sym_pair(c, d);
            for (k, gk) in gamma.iter_mut().enumerate() {
                let mut s = T::zero();
                for l in 0..d {
                    s += ginv[p][k][l] * (dgp(i, l, j) + dgp(j, l, i) - dgp(l, i, j));
                }
                gk[c][p] = s * 0.5;
            }
        }
    }
    gamma
}

/// `R = γ^{jl}(∂_i Γ^i_jl − ∂_l Γ^i_ij + Γ^i_im Γ^m_jl − Γ^i_lm Γ^m_ij)`.
pub(crate) fn scalar_curvature<T: Scalar>(grid: &TorusGrid, g: &[Vec<T>], ginv: &[Mat<T>]) -> Vec<T> {
    let d = grid.dim();
    let ns = grid.sym_len();
    let n = grid.len();
    let gamma = christoffel(grid, g, ginv);
    let gam = |k: usize, i: usize, j: usize, p: usize| gamma[k][sym_index(i, j, d)][p];

    let mut div_gamma = vec![vec![T::zero(); n]; ns];
    for (c, out) in div_gamma.iter_mut().enumerate() {
        for (i, gi) in gamma.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(T::derivative(grid, &gi[c], i)) {
                *o += v;
            }
        }
    }
    let trace: Vec<Vec<T>> = (0..d)
        .map(|j| {
            (0..n)
                .map(|p| {
                    let mut s = T::zero();
                    for i in 0..d {
                        s += gam(i, i, j, p);
                    }
                    s
                })
                .collect()
        })
        .collect();
    let dtrace: Vec<Vec<Vec<T>>> = (0..d)
        .map(|l| trace.iter().map(|v| T::derivative(grid, v, l)).collect())
        .collect();

    (0..n)
        .map(|p| {
            let mut r = T::zero();
            for j in 0..d {
                for l in 0..d {
                    let mut ric = div_gamma[sym_index(j, l, d)][p] - dtrace[l][j][p];
                    for i in 0..d {
                        for m in 0..d {
                            ric += gam(i, i, m, p) * gam(m, j, l, p) - gam(i, l, m, p) * gam(m, i, j, p);
                        }
                    }
                    r += ginv[p][j][l] * ric;
                }
            }
            r
        })
        .collect()
}

/// `(div_γ π)_j = γ^{ik}(∂_i π_kj − Γ^l_ik π_lj − Γ^l_ij π_kl)`.
pub(crate) fn divergence<T: Scalar>(
    grid: &TorusGrid,
    g: &[Vec<T>],
    ginv: &[Mat<T>],
    pi: &[Vec<T>],
) -> Vec<Vec<T>> {
    let d = grid.dim();
    let gamma = christoffel(grid, g, ginv);
    let dpi: Vec<Vec<Vec<T>>> = (0..d)
        .map(|i| pi.iter().map(|c| T::derivative(grid, c, i)).collect())
        .collect();
    let mut out = vec![vec![T::zero(); grid.len()]; d];
    for p in 0..grid.len() {
        let gam = |l: usize, i: usize, k: usize| gamma[l][sym_index(i, k, d)][p];
        let pim = point(pi, p, d);
        for (j, o) in out.iter_mut().enumerate() {
            let mut s = T::zero();
            for i in 0..d {
                for k in 0..d {
                    let mut cov = dpi[i][sym_index(k, j, d)][p];
                    for l in 0..d {
                        cov -= gam(l, i, k) * pim[l][j] + gam(l, i, j) * pim[k][l];
                    }
                    s += ginv[p][i][k] * cov;
                }
            }
            o[p] = s;
        }
    }
    out
}

/// Pointwise `(Tr π, Tr π²)` for the endomorphism `π^i_j = γ^{ik} π_kj`.
pub(crate) fn traces<T: Scalar>(d: usize, ginv: &[Mat<T>], pi: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    let mut tr = Vec::with_capacity(ginv.len());
    let mut tr2 = Vec::with_capacity(ginv.len());
    for (p, gi) in ginv.iter().enumerate() {
        let pm = point(pi, p, d);
        let mut mixed = [[T::zero(); 3]; 3];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    mixed[i][j] += gi[i][k] * pm[k][j];
                }
            }
        }
        let mut t = T::zero();
        let mut t2 = T::zero();
        for i in 0..d {
            t += mixed[i][i];
            for j in 0..d {
                t2 += mixed[i][j] * mixed[j][i];
            }
        }
        tr.push(t);
        tr2.push(t2);
    }
    (tr, tr2)
}

/// `C_mom^i = −2 γ^{ij} (div_γ π)_j`.
pub(crate) fn momentum<T: Scalar>(grid: &TorusGrid, g: &[Vec<T>], ginv: &[Mat<T>], pi: &[Vec<T>]) -> Vec<Vec<T>> {
    let d = grid.dim();
    let div = divergence(grid, g, ginv, pi);
    (0..d)
        .map(|i| {
            (0..grid.len())
                .map(|p| {
                    let mut s = T::zero();
                    for (j, dj) in div.iter().enumerate() {
                        s += ginv[p][i][j] * dj[p];
                    }
                    s * -2.0
                })
                .collect()
        })
        .collect()
}

/// `C_en = −R + Tr π² − (Tr π)² / (d − 1)`.
pub(crate) fn energy<T: Scalar>(grid: &TorusGrid, g: &[Vec<T>], ginv: &[Mat<T>], pi: &[Vec<T>]) -> Vec<T> {
    let d = grid.dim();
    let coefficient = 1.0 / (d as f64 - 1.0);
    let r = scalar_curvature(grid, g, ginv);
    let (tr, tr2) = traces(d, ginv, pi);
    r.iter()
        .zip(tr.iter().zip(&tr2))
        .map(|(&r, (&t, &t2))| -r + t2 - t * t * coefficient)
        .collect()
}

/// `∫ { γ(X, C_mom) + φ C_en } vol_γ`; `None` smearing parts are skipped.
pub(crate) fn smeared<T: Scalar>(
    grid: &TorusGrid,
    g: &[Vec<T>],
    pi: &[Vec<T>],
    shift: Option<&[Vec<f64>]>,
    lapse: Option<&[f64]>,
) -> T {
    let d = grid.dim();
    let ginv = inverse_points(grid, g);
    let mut integrand = vec![T::zero(); grid.len()];
    if let Some(x) = shift {
        let c_mom = momentum(grid, g, &ginv, pi);
        for (q, out) in integrand.iter_mut().enumerate() {
            for i in 0..d {
                for (j, cj) in c_mom.iter().enumerate() {
                    *out += g[sym_index(i, j, d)][q] * cj[q] * x[i][q];
                }
            }
        }
    }
    if let Some(phi) = lapse {
        let c_en = energy(grid, g, &ginv, pi);
        for ((out, &f), &c) in integrand.iter_mut().zip(phi).zip(&c_en) {
            *out += c * f;
        }
    }
    for (out, v) in integrand.iter_mut().zip(sqrt_det_points(grid, g)) {
        *out = *out * v;
    }
    pairwise_sum(&integrand) * grid.cell_weight()
}

/// Covariant `π_kl = γ_ki γ_lj p̃^{ij} / √det γ` from packed momenta
/// `p_c = w m_c p̃^c`, laid out component-major.
pub(crate) fn momenta_to_pi<T: Scalar>(grid: &TorusGrid, g: &[Vec<T>], momenta: &[T]) -> Vec<Vec<T>> {
    let (d, n, ns) = (grid.dim(), grid.len(), grid.sym_len());
    let w = grid.cell_weight();
    let mut out = vec![vec![T::zero(); n]; ns];
    for q in 0..n {
        let gm = point(g, q, d);
        let sqrt_det = det(&gm, d).sqrt();
        let mut density = [[T::zero(); 3]; 3];
        for c in 0..ns {
            let (i, j) = sym_pair(c, d);
            let v = momenta[c * n + q] * (1.0 / (w * sym_multiplicity(c, d)));
            density[i][j] = v;
            density[j][i] = v;
        }
        for (c, oc) in out.iter_mut().enumerate() {
            let (k, l) = sym_pair(c, d);
            let mut s = T::zero();
            for i in 0..d {
                for j in 0..d {
                    s += gm[k][i] * gm[l][j] * density[i][j];
                }
            }
            oc[q] = s / sqrt_det;
        }
    }
    out
}
