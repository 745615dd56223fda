//! Seeded band-limited random fields for test inputs.
//!
//! Every component is `Σ_k a_k cos(k·x) + b_k sin(k·x)` over integer wave
//! vectors with `|k_i| ≤ kmax`, coefficients uniform in `[-1, 1]` and then
//! rescaled so that the coefficient l1-norm equals the requested amplitude.
//! The sup-norm of each component is therefore at most the amplitude.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{Field, MetricField, ScalarField, SymTensorField, Variance, VectorField};
use crate::grid::TorusGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKind {
    Scalar,
    Vector,
    Sym2,
    Metric,
}

/// Mixes a base seed with a tag so that independent inputs of one experiment
/// draw from unrelated streams (splitmix64 finalizer).
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Wave vectors of one half-space plus the zero mode.
fn wave_vectors(dim: usize, kmax: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let range = -kmax..=kmax;
    for k0 in range.clone() {
        for k1 in range.clone() {
            let k2s: Vec<i64> = if dim == 3 { range.clone().collect() } else { vec![0] };
            for k2 in k2s {
                let k = [k0, k1, k2];
                let first = k.iter().find(|&&c| c != 0);
                if first.is_none() || *first.unwrap() > 0 {
                    out.push(k);
                }
            }
        }
    }
    out
}

fn component(grid: &TorusGrid, rng: &mut ChaCha8Rng, kmax: usize, amplitude: f64) -> Vec<f64> {
    let modes = wave_vectors(grid.dim(), kmax as i64);
    let coeffs: Vec<(f64, f64)> = modes
        .iter()
        .map(|k| {
            let a = rng.gen_range(-1.0..=1.0);
            // sin(0·x) vanishes; draw anyway to keep stream positions uniform.
            let b: f64 = rng.gen_range(-1.0..=1.0);
            (a, if k.iter().all(|&c| c == 0) { 0.0 } else { b })
        })
        .collect();
    let l1: f64 = coeffs.iter().map(|(a, b)| a.abs() + b.abs()).sum();
    let scale = if l1 > 0.0 { amplitude / l1 } else { 0.0 };
    grid.sample(|x| {
        modes
            .iter()
            .zip(&coeffs)
            .map(|(k, (a, b))| {
                let phase: f64 = (0..grid.dim()).map(|i| k[i] as f64 * x[i]).sum();
                a * phase.cos() + b * phase.sin()
            })
            .sum::<f64>()
            * scale
    })
}

fn check_kmax(grid: &TorusGrid, kmax: usize) -> Result<()> {
    if 2 * kmax >= grid.n() {
        return Err(LabError::InvalidArgument(format!(
            "kmax {kmax} must be below N/2 = {}",
            grid.n() / 2
        )));
    }
    Ok(())
}

pub fn random_scalar(grid: &TorusGrid, seed: u64, kmax: usize, amplitude: f64) -> Result<ScalarField> {
    check_kmax(grid, kmax)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScalarField::new(grid, component(grid, &mut rng, kmax, amplitude))
}

pub fn random_vector(grid: &TorusGrid, seed: u64, kmax: usize, amplitude: f64) -> Result<VectorField> {
    check_kmax(grid, kmax)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..grid.dim())
        .map(|_| component(grid, &mut rng, kmax, amplitude))
        .collect();
    VectorField::new(grid, comps)
}

/// Random symmetric tensor of the given variance.
pub fn random_sym2(
    grid: &TorusGrid,
    seed: u64,
    kmax: usize,
    amplitude: f64,
    variance: Variance,
) -> Result<SymTensorField> {
    check_kmax(grid, kmax)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..grid.sym_len())
        .map(|_| component(grid, &mut rng, kmax, amplitude))
        .collect();
    SymTensorField::new(grid, variance, comps)
}

/// `δ + ε·h` for a random symmetric `h`; fails instead of rescaling when the
/// result is not positive-definite everywhere.
pub fn random_metric(grid: &TorusGrid, seed: u64, kmax: usize, epsilon: f64) -> Result<MetricField> {
    let h = random_sym2(grid, seed, kmax, 1.0, Variance::Covariant)?;
    if epsilon == 0.0 {
        return Ok(MetricField::flat(grid));
    }
    let t = SymTensorField::identity(grid, Variance::Covariant, 1.0).add(&h.scale(epsilon))?;
    MetricField::new(t).map_err(|e| match e {
        LabError::DegenerateMetric { .. } => LabError::AmplitudeTooLarge { amplitude: epsilon },
        other => other,
    })
}

/// Metric whose inverse is band-limited: `γ = (δ + ε·h)^{-1}` for a random
/// contravariant `h`. Spectral products with `γ^{-1}` then stay alias-free.
pub fn random_cometric(grid: &TorusGrid, seed: u64, kmax: usize, epsilon: f64) -> Result<MetricField> {
    let inverse = random_metric(grid, seed, kmax, epsilon)?;
    if epsilon == 0.0 {
        return Ok(inverse);
    }
    let points = crate::geometry::inverse_points(&inverse);
    MetricField::new(SymTensorField::from_points(grid, Variance::Covariant, |p| {
        points[p]
    }))
}

/// Dispatches on the requested kind; `Sym2` is covariant.
pub fn random_band_limited(
    grid: &TorusGrid,
    seed: u64,
    kmax: usize,
    kind: RandomKind,
    amplitude: f64,
) -> Result<Field> {
    Ok(match kind {
        RandomKind::Scalar => Field::Scalar(random_scalar(grid, seed, kmax, amplitude)?),
        RandomKind::Vector => Field::Vector(random_vector(grid, seed, kmax, amplitude)?),
        RandomKind::Sym2 => Field::Sym2(random_sym2(
            grid,
            seed,
            kmax,
            amplitude,
            Variance::Covariant,
        )?),
        RandomKind::Metric => Field::Metric(random_metric(grid, seed, kmax, amplitude)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::spectral_derivative;

    #[test]
    fn same_seed_is_bit_identical() {
        let g = TorusGrid::new(2, 16).unwrap();
        for kind in [RandomKind::Scalar, RandomKind::Vector, RandomKind::Sym2, RandomKind::Metric] {
            let a = random_band_limited(&g, 42, 2, kind, 0.05).unwrap();
            let b = random_band_limited(&g, 42, 2, kind, 0.05).unwrap();
            assert_eq!(a, b);
            let c = random_band_limited(&g, 43, 2, kind, 0.05).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn zero_amplitude_metric_is_flat() {
        let g = TorusGrid::new(3, 8).unwrap();
        let m = random_metric(&g, 9, 2, 0.0).unwrap();
        assert_eq!(m, MetricField::flat(&g));
    }

    #[test]
    fn amplitude_bounds_sup_norm() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = random_scalar(&g, 5, 3, 0.3).unwrap();
        assert!(f.max_abs() <= 0.3 + 1e-15);
        assert!(f.max_abs() > 0.0);
    }

    #[test]
    fn oversized_amplitude_is_reported() {
        let g = TorusGrid::new(2, 16).unwrap();
        let hits = (0..20)
            .filter(|&s| matches!(random_metric(&g, s, 2, 5.0), Err(LabError::AmplitudeTooLarge { .. })))
            .count();
        assert!(hits > 0);
        assert!(random_scalar(&g, 1, 8, 1.0).is_err());
    }

    #[test]
    fn fourier_support_within_kmax() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = random_scalar(&g, 11, 2, 1.0).unwrap();
        // fxy == fyx exactly on band-limited data; and mode 3 along x is absent
        let fx = spectral_derivative(&f, 0).unwrap();
        let fxy = spectral_derivative(&fx, 1).unwrap();
        let fyx = spectral_derivative(&spectral_derivative(&f, 1).unwrap(), 0).unwrap();
        assert!(fxy.sub(&fyx).unwrap().max_abs() < 1e-13);
        let n = g.n();
        let mut coeff = 0.0;
        for p in 0..g.len() {
            let x = g.coords(p);
            coeff += f.values()[p] * (3.0 * x[0]).cos();
        }
        assert!((coeff / (n * n) as f64).abs() < 1e-14);
    }

    #[test]
    fn cometric_inverse_is_band_limited() {
        let g = TorusGrid::new(2, 16).unwrap();
        let m = random_cometric(&g, 3, 2, 0.05).unwrap();
        let inv = random_metric(&g, 3, 2, 0.05).unwrap();
        let back = crate::geometry::metric_inverse(&m);
        for (a, b) in back.components().iter().zip(inv.tensor().components()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }
}
