use admlab::fixtures::{seeded_path, SmearingSet};
use admlab::gaussian::{
    first_order_defect, gaussian_extend, gaussianity_residual, nongaussian_bracket_residual,
    second_fundamental_form, spacetime_lie_derivative, symmetric_samples,
};
use admlab::TorusGrid;
use proptest::prelude::*;

fn grid() -> TorusGrid {
    TorusGrid::new(2, 16).unwrap()
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(t, d)| (t.ln(), d.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lapse_is_carried_bit_exactly(seed in 0u64..10_000) {
        let g = grid();
        let path = seeded_path(&g, seed, 2, 0.05).unwrap();
        let (a, _) = SmearingSet::seeded(&g, seed, 2).unwrap().sections();
        let v = gaussian_extend(&path, &a, &symmetric_samples(&path, 3, 0.1), None).unwrap();
        for l in v.lapses() {
            prop_assert_eq!(l, a.lapse());
        }
    }

    #[test]
    fn extension_error_drops_eightfold_when_step_halves(seed in 0u64..10_000) {
        let g = grid();
        let path = seeded_path(&g, seed, 2, 0.05).unwrap();
        let (a, _) = SmearingSet::seeded(&g, seed, 2).unwrap().sections();
        let coarse = gaussian_extend(&path, &a, &symmetric_samples(&path, 2, 0.05), None).unwrap();
        let fine = gaussian_extend(&path, &a, &symmetric_samples(&path, 2, 0.025), None).unwrap();
        let (rc, rf) = (gaussianity_residual(&path, &coarse).unwrap(), gaussianity_residual(&path, &fine).unwrap());
        prop_assert!(rc <= 1e-6);
        prop_assert!(rf * 8.0 <= rc, "{rc} {rf}");
    }

    #[test]
    fn first_order_defect_is_quadratic(seed in 0u64..10_000) {
        let g = grid();
        let path = seeded_path(&g, seed, 2, 0.05).unwrap();
        let (a, _) = SmearingSet::seeded(&g, seed, 2).unwrap().sections();
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&t| (t, first_order_defect(&path, &a, t).unwrap()))
            .collect();
        let p = slope(&pts);
        prop_assert!((p - 2.0).abs() <= 0.1, "{p}");
    }

    #[test]
    fn gaussian_fields_preserve_the_slicing(seed in 0u64..10_000) {
        let g = grid();
        let path = seeded_path(&g, seed, 2, 0.05).unwrap();
        let (a, _) = SmearingSet::seeded(&g, seed, 2).unwrap().sections();
        let v = gaussian_extend(&path, &a, &symmetric_samples(&path, 2, 0.02), None).unwrap();
        let l = spacetime_lie_derivative(&path, &v, 0.0).unwrap();
        let scale = l.spatial.max_abs();
        prop_assert!(l.mixed.max_abs() <= 1e-6 * scale);
        prop_assert!(l.tt.max_abs() <= 1e-6 * scale);
    }

    #[test]
    fn second_fundamental_form_is_linear_in_the_path(s1 in 0u64..10_000, s2 in 0u64..10_000, t in -0.4f64..0.4) {
        let g = grid();
        let p1 = seeded_path(&g, s1, 2, 0.02).unwrap();
        let p2 = seeded_path(&g, s2, 2, 0.02).unwrap();
        let sum = p1.add(&p2).unwrap();
        let k = second_fundamental_form(&sum, t).unwrap();
        let k12 = second_fundamental_form(&p1, t).unwrap().add(&second_fundamental_form(&p2, t).unwrap()).unwrap();
        prop_assert!(k.sub(&k12).unwrap().max_abs() <= 1e-15);
    }
}

#[test]
fn nongaussian_identity_on_twenty_seeds() {
    let g = grid();
    let mut witnessed = 0;
    for seed in 1..=20 {
        let path = seeded_path(&g, seed, 2, 0.05).unwrap();
        let (a, b) = SmearingSet::seeded(&g, seed, 2).unwrap().sections();
        let (res, size) = nongaussian_bracket_residual(&path, &a, &b).unwrap();
        assert!(res <= 1e-6, "seed {seed}: {res}");
        witnessed += usize::from(size > 1e-2);
    }
    assert!(witnessed >= 18, "{witnessed}");
}
