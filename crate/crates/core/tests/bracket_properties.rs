use admlab::bracket::{
    bracket_from_gradients, frozen_jacobiator_residual, frozen_section_bracket, functional_gradient,
    poisson_bracket, GradientMethod, GradientStrategy,
};
use admlab::fixtures::{seeded_frozen_metric, seeded_phase_point, SmearingSet};
use admlab::random::{random_cometric, random_scalar, random_vector};
use admlab::{constraint_functional, MetricField, PhaseSpacePoint, Section, TorusGrid};
use proptest::prelude::*;

fn complex_step() -> GradientStrategy {
    GradientStrategy {
        method: GradientMethod::ComplexStep,
        ..GradientStrategy::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn poisson_bracket_is_antisymmetric(seed in 0u64..10_000) {
        let g = TorusGrid::new(2, 8).unwrap();
        let p = seeded_phase_point(&g, seed, 2, 0.05).unwrap();
        let (a, b) = SmearingSet::seeded(&g, seed, 2).unwrap().sections();
        let (f, h) = (constraint_functional(&a), constraint_functional(&b));
        let s = GradientStrategy::default();
        let fg = poisson_bracket(&f, &h, &p, &s).unwrap();
        let gf = poisson_bracket(&h, &f, &p, &s).unwrap();
        prop_assert!((fg + gf).abs() <= 1e-10 * fg.abs().max(1.0), "{fg} {gf}");
    }

    #[test]
    fn poisson_bracket_is_bilinear(seed in 0u64..10_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = TorusGrid::new(2, 8).unwrap();
        let p = seeded_phase_point(&g, seed, 2, 0.05).unwrap();
        let m = SmearingSet::seeded(&g, seed, 2).unwrap();
        let (u, v) = m.sections();
        let w = Section::shift_only(m.x.clone());
        let s = complex_step();
        let grad = |sec: &Section| functional_gradient(&constraint_functional(sec), &p, &s).unwrap();
        let combo = grad(&u.scale(a).add(&v.scale(b)).unwrap());
        let lhs = bracket_from_gradients(&combo, &grad(&w)).unwrap();
        let bu = bracket_from_gradients(&grad(&u), &grad(&w)).unwrap();
        let bv = bracket_from_gradients(&grad(&v), &grad(&w)).unwrap();
        let rhs = a * bu + b * bv;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + (a * bu).abs() + (b * bv).abs()), "{lhs} {rhs}");
    }

    #[test]
    fn frozen_bracket_is_antisymmetric(seed in 0u64..10_000) {
        let g = TorusGrid::new(2, 16).unwrap();
        let gbar = seeded_frozen_metric(&g, seed, 2, 0.1).unwrap();
        let (a, b) = SmearingSet::seeded(&g, seed, 2).unwrap().sections();
        let ab = frozen_section_bracket(&gbar, &a, &b).unwrap();
        let ba = frozen_section_bracket(&gbar, &b, &a).unwrap();
        prop_assert!(ab.add(&ba).unwrap().max_abs() <= 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn coisotropic_at_flat_vacuum(seed in 0u64..10_000) {
        let g = TorusGrid::new(2, 16).unwrap();
        let p = PhaseSpacePoint::flat_vacuum(&g);
        let m = SmearingSet::seeded(&g, seed, 2).unwrap();
        let (a, b) = m.sections();
        let sections = [
            Section::shift_only(m.x.clone()),
            Section::shift_only(m.y.clone()),
            Section::lapse_only(m.phi.clone()),
            Section::lapse_only(m.psi.clone()),
            a,
            b,
        ];
        let s = complex_step();
        let grads: Vec<_> = sections
            .iter()
            .map(|sec| functional_gradient(&constraint_functional(sec), &p, &s).unwrap())
            .collect();
        for i in 0..grads.len() {
            for j in i + 1..grads.len() {
                let v = bracket_from_gradients(&grads[i], &grads[j]).unwrap();
                prop_assert!(v.abs() <= 1e-8, "({i},{j}) {v}");
            }
        }
    }
}

#[test]
fn frozen_jacobiator_matches_anomaly_on_twenty_seeds() {
    let g = TorusGrid::new(2, 16).unwrap();
    for seed in 1..=20 {
        let gbar = seeded_frozen_metric(&g, seed, 2, 0.05).unwrap();
        let m = SmearingSet::seeded(&g, seed, 2).unwrap();
        let r = frozen_jacobiator_residual(&gbar, &m.x, &m.phi, &m.psi).unwrap();
        assert!(r <= 1e-8, "seed {seed}: {r}");
    }
}

#[test]
fn frozen_bracket_depends_on_the_metric() {
    let g = TorusGrid::new(2, 16).unwrap();
    let phi = Section::lapse_only(random_scalar(&g, 1, 2, 1.0).unwrap());
    let psi = Section::lapse_only(random_scalar(&g, 2, 2, 1.0).unwrap());
    let one = frozen_section_bracket(&MetricField::flat(&g), &phi, &psi).unwrap();
    for seed in 3..8 {
        let other = random_cometric(&g, seed, 2, 0.2).unwrap();
        let two = frozen_section_bracket(&other, &phi, &psi).unwrap();
        assert!(one.sub(&two).unwrap().max_abs() > 1e-3, "seed {seed}");
    }
    let x = Section::shift_only(random_vector(&g, 9, 2, 1.0).unwrap());
    let y = Section::shift_only(random_vector(&g, 10, 2, 1.0).unwrap());
    let other = random_cometric(&g, 11, 2, 0.2).unwrap();
    assert_eq!(
        frozen_section_bracket(&MetricField::flat(&g), &x, &y).unwrap(),
        frozen_section_bracket(&other, &x, &y).unwrap()
    );
}
