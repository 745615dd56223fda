//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero when any
//! criterion fails.

use std::process::Command;
use std::time::Instant;

use admlab::bracket::frozen_jacobiator;
use admlab::fixtures::SmearingSet;
use admlab::geometry::scalar_curvature;
use admlab::{MetricField, Section, SymTensorField, TorusGrid, Variance, VectorField};
use admlab_verify::suite::{coisotropy_at, compat_at, dewitt_at};
use admlab_verify::{run_suite, CheckRecord, SuiteConfig, SuiteKind};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(suite: SuiteKind, seeds: std::ops::RangeInclusive<u64>) -> SuiteConfig {
    let mut c = SuiteConfig::new(suite);
    c.seeds = seeds.collect();
    c
}

fn grid(n: usize) -> TorusGrid {
    TorusGrid::new(2, n).unwrap()
}

fn worst<'a>(checks: impl Iterator<Item = &'a CheckRecord>) -> (usize, usize, f64) {
    let (mut count, mut failed, mut max) = (0, 0, 0.0f64);
    for c in checks {
        count += 1;
        failed += usize::from(!c.pass);
        max = max.max(c.relative);
    }
    (count, failed, max)
}

fn dewitt_relations() -> Outcome {
    let start = Instant::now();
    let c = config(SuiteKind::Dewitt, 1..=5);
    let (mut worst16, mut decreasing, mut total) = (0.0f64, 0, 0);
    for &seed in &c.seeds {
        let coarse = dewitt_at(&c, &grid(16), seed).unwrap();
        let fine = dewitt_at(&c, &grid(32), seed).unwrap();
        for (r16, r32) in coarse.iter().zip(&fine) {
            worst16 = worst16.max(r16.relative);
            decreasing += usize::from(r32.residual < r16.residual);
            total += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst16 <= 1e-4 && decreasing == total && secs <= 600.0,
        format!("max relative at N=16 {worst16:.2e} (tol 1e-4); decreased at N=32 {decreasing}/{total}; {secs:.0}s (budget 600s)"),
    )
}

fn coisotropy() -> Outcome {
    let c = SuiteConfig::new(SuiteKind::Dewitt);
    let worst = (1..=5)
        .map(|seed| coisotropy_at(&grid(16), seed, 2, &c.gradient).unwrap())
        .fold(0.0, f64::max);
    outcome(worst <= 1e-8, format!("max |{{C_a, C_b}}(δ, 0)| over 5 seeds × 15 pairs {worst:.2e} (tol 1e-8)"))
}

fn frozen_anomaly() -> Outcome {
    let start = Instant::now();
    let report = run_suite(&config(SuiteKind::Anomaly, 1..=20)).unwrap();
    let (n, failed, max) = worst(report.checks.iter().filter(|c| c.name == "frozen_anomaly"));
    let g = grid(16);
    let s = SmearingSet::seeded(&g, 1, 2).unwrap();
    let killing = frozen_jacobiator(
        &MetricField::flat(&g),
        &Section::shift_only(VectorField::constant(&g, &[1.0, 0.0]).unwrap()),
        &Section::lapse_only(s.phi.clone()),
        &Section::lapse_only(s.psi.clone()),
    )
    .unwrap()
    .max_abs();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        n == 20 && failed == 0 && max <= 1e-8 && killing <= 1e-10 && secs <= 10.0,
        format!("max sup-norm gap {max:.2e} over {n} seeds (tol 1e-8); Killing jacobiator {killing:.2e} (tol 1e-10); {secs:.2}s (budget 10s)"),
    )
}

fn gaussian_extension() -> Outcome {
    let report = run_suite(&config(SuiteKind::Gaussian, 1..=10)).unwrap();
    let pick = |name: &str| report.checks.iter().filter(|c| c.name == name).collect::<Vec<_>>();
    let lapse = pick("lapse_constancy");
    let gauss = pick("gaussianity");
    let halving = pick("ode_halving");
    let slope = pick("first_order_slope");
    let bit_exact = lapse.iter().all(|c| c.residual == 0.0);
    let max_gauss = gauss.iter().map(|c| c.residual).fold(0.0, f64::max);
    let worst_ratio = halving.iter().map(|c| c.residual).fold(0.0, f64::max);
    let worst_slope = slope.iter().map(|c| c.residual).fold(0.0, f64::max);
    outcome(
        bit_exact && max_gauss <= 1e-6 && worst_ratio <= 0.125 && worst_slope <= 0.1 && gauss.len() == 10,
        format!(
            "lapse bit-exact {bit_exact}; gaussianity {max_gauss:.2e} (tol 1e-6); halving ratio {worst_ratio:.3} (need ≤ 1/8); |slope − 2| {worst_slope:.3} (tol 0.1)"
        ),
    )
}

fn gaussian_action() -> Outcome {
    let report = run_suite(&config(SuiteKind::Gaussian, 1..=10)).unwrap();
    let (n, failed, max) = worst(report.checks.iter().filter(|c| c.name == "gaussian_action"));
    outcome(
        n == 10 && failed == 0 && max <= 1e-6,
        format!("max mixed/tt relative to spatial {max:.2e} over {n} seeds (tol 1e-6)"),
    )
}

fn nongaussian() -> Outcome {
    let report = run_suite(&config(SuiteKind::Gaussian, 1..=20)).unwrap();
    let identity: Vec<_> = report.checks.iter().filter(|c| c.name == "nongaussian_identity").collect();
    let max = identity.iter().map(|c| c.residual).fold(0.0, f64::max);
    let witnessed = identity.iter().filter(|c| c.scale > 1e-2).count();
    outcome(
        identity.len() == 20 && max <= 1e-6 && witnessed >= 18,
        format!("max identity residual {max:.2e} over {} seeds (tol 1e-6); witness > 1e-2 on {witnessed}/20 (need 18)", identity.len()),
    )
}

fn algebroid_compat() -> Outcome {
    let c = config(SuiteKind::Algebroid, 1..=5);
    let (mut worst16, mut decreasing, mut total) = (0.0f64, 0, 0);
    for &seed in &c.seeds {
        let coarse = compat_at(&c, &grid(16), seed).unwrap();
        let fine = compat_at(&c, &grid(32), seed).unwrap();
        for ((_, r16), (_, r32)) in coarse.iter().zip(&fine) {
            worst16 = worst16.max(r16.relative);
            decreasing += usize::from(r32.residual < r16.residual);
            total += 1;
        }
    }
    let report = run_suite(&c).unwrap();
    let agreement = report
        .checks
        .iter()
        .filter(|r| r.name == "bracket_agreement")
        .map(|r| r.residual)
        .fold(0.0, f64::max);
    outcome(
        worst16 <= 1e-4 && decreasing == total && agreement <= 1e-6,
        format!(
            "max compat relative at N=16 {worst16:.2e} (tol 1e-4); decreased at N=32 {decreasing}/{total}; 4D vs section {agreement:.2e} (tol 1e-6)"
        ),
    )
}

fn conformal(g: &TorusGrid, a: f64) -> MetricField {
    let d = g.dim();
    let tensor = SymTensorField::from_fn(g, Variance::Covariant, |i, j, x| {
        if i == j {
            (2.0 * a * x[0].sin()).exp()
        } else {
            0.0
        }
    });
    assert_eq!(tensor.components().len(), d * (d + 1) / 2);
    MetricField::new(tensor).unwrap()
}

/// `R = −e^{−2f} (2(d−1) Δf + (d−2)(d−1) |∇f|²)` for `e^{2f} δ`, `f = a sin x`.
fn conformal_oracle(d: usize, a: f64, x: f64) -> f64 {
    let (lap, grad2) = (-a * x.sin(), (a * x.cos()).powi(2));
    let d = d as f64;
    -(-2.0 * a * x.sin()).exp() * (2.0 * (d - 1.0) * lap + (d - 2.0) * (d - 1.0) * grad2)
}

fn curvature_oracles() -> Outcome {
    let mut worst_rel = 0.0f64;
    let mut worst_flat = 0.0f64;
    for d in [2, 3] {
        let g = TorusGrid::new(d, 24).unwrap();
        for a in [0.1, 0.25, 0.5] {
            let r = scalar_curvature(&conformal(&g, a));
            let expect = g.sample(|x| conformal_oracle(d, a, x[0]));
            let scale = expect.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = r.values().iter().zip(&expect).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
            worst_rel = worst_rel.max(err / scale);
        }
        worst_flat = worst_flat.max(scalar_curvature(&MetricField::flat(&g)).max_abs());
        for c in [0.3, 2.5, 40.0] {
            let m = MetricField::new(SymTensorField::identity(&g, Variance::Covariant, c)).unwrap();
            worst_flat = worst_flat.max(scalar_curvature(&m).max_abs());
        }
    }
    outcome(
        worst_rel <= 1e-8 && worst_flat <= 1e-12,
        format!("conformal family relative error {worst_rel:.2e} at N=24 (tol 1e-8); flat/constant |R| {worst_flat:.2e} (tol 1e-12)"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let run = |threads: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_verify"))
            .args(["all", "--seeds", "1..2", "--out"])
            .arg(&out)
            .env("VERIFY_THREADS", threads)
            .output()
            .unwrap();
        (status.status.code(), std::fs::read(&out).unwrap())
    };
    let (code_a, a) = run("1");
    let (code_b, b) = run("2");
    outcome(
        a == b && code_a == Some(0) && code_b == Some(0),
        format!("two `verify all` runs: {} bytes, identical {} (exit codes {code_a:?}, {code_b:?})", a.len(), a == b),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 DeWitt relations", dewitt_relations),
        ("2 coisotropy at the flat vacuum", coisotropy),
        ("3 frozen-metric anomaly", frozen_anomaly),
        ("4 gaussian extension", gaussian_extension),
        ("5 gaussian action cancellation", gaussian_action),
        ("6 non-gaussianity identity", nongaussian),
        ("7 algebroid compatibility", algebroid_compat),
        ("8 curvature oracles", curvature_oracles),
        ("9 determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
