use std::time::Instant;

use admlab::algebroid::{anchor, anchor_samples, gaussian_bracket_agreement, section_bracket};
use admlab::bracket::{
    bracket_from_gradients, dewitt_residuals, frozen_jacobiator, frozen_jacobiator_residual, functional_gradient,
    DeWittRelation, GradientStrategy, RelationResidual,
};
use admlab::fixtures::{seeded_frozen_metric, seeded_path, seeded_phase_point, static_flat_path, SmearingSet};
use admlab::gaussian::{
    first_order_defect, gaussian_extend, gaussianity_residual, nongaussian_bracket_residual,
    second_fundamental_form, spacetime_lie_derivative, symmetric_samples, MetricPath,
};
use admlab::{
    constraint_functional, smeared_constraint, LabError, MetricField, PhaseSpacePoint, ScalarField, Section,
    TorusGrid, VectorField,
};
use rayon::prelude::*;

use crate::config::{SuiteConfig, SuiteKind};
use crate::report::{CheckRecord, ConvergenceTable, SuiteReport, Timing, DIFFERENCE_FLOOR, ROUNDING_FLOOR};
use crate::SuiteError;

/// Times of the first-order defect sweep, before clipping to the window.
pub const DEFECT_TIMES: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

const ANCHOR_COISOTROPY: &str = "{C_a, C_b}(δ, 0) = 0";
const ANCHOR_ANOMALY: &str = "Jac_γ̄((X,0), (0,φ), (0,ψ)) = (L_X(γ̄^{-1})(φ dψ − ψ dφ), 0)";
const ANCHOR_KILLING: &str = "Jac_δ((∂_x,0), (0,φ), (0,ψ)) = 0";
const ANCHOR_LAPSE: &str = "∂φ/∂t = 0";
const ANCHOR_GAUSSIANITY: &str = "∂X/∂t = grad_γ(t) φ";
const ANCHOR_HALVING: &str = "extension error shrinks at least 8x when the step halves";
const ANCHOR_SLOPE: &str = "X(t) = X + t grad_γ φ + O(t²)";
const ANCHOR_ACTION: &str = "(L_v g)(n, ·) = 0 for gaussian v";
const ANCHOR_NONGAUSSIAN: &str =
    "i_n L_[v,w] g = i_{grad φ} L_Y γ − i_{grad ψ} L_X γ + 2 i_{φ grad ψ − ψ grad φ} K";
const ANCHOR_WITNESS: &str = "i_n L_[v,w] g ≠ 0 when K ≠ 0";
const ANCHOR_COMPAT: &str = "{C_a, C_b} = C_[a,b]";
const ANCHOR_AGREEMENT: &str = "[G(a), G(b)] at t = 0 splits as [a, b]";
const ANCHOR_KERNEL: &str = "ρ(c^i ∂_i, c_0) = 0 on the static flat path";
const ANCHOR_ANTISYMMETRY: &str = "[a, b] = −[b, a]";

/// Runs the configured suite. Seeds run in parallel and records are
/// assembled in seed order, so the report does not depend on thread count.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport, SuiteError> {
    config.validate()?;
    let path = load_path(config)?;
    let mut report = SuiteReport::new(config.clone());
    let suites: &[SuiteKind] = match config.suite {
        SuiteKind::All if config.n.len() >= 3 => &[
            SuiteKind::Dewitt,
            SuiteKind::Anomaly,
            SuiteKind::Gaussian,
            SuiteKind::Algebroid,
            SuiteKind::Convergence,
        ],
        SuiteKind::All => &[SuiteKind::Dewitt, SuiteKind::Anomaly, SuiteKind::Gaussian, SuiteKind::Algebroid],
        _ => std::slice::from_ref(&config.suite),
    };
    for &suite in suites {
        let start = Instant::now();
        if suite == SuiteKind::Convergence {
            report.push_tables(convergence_study(config)?);
        } else {
            for &n in &config.n {
                let grid = TorusGrid::new(config.dim, n).map_err(|e| SuiteError::Config(e.to_string()))?;
                let (checks, tables) = match suite {
                    SuiteKind::Dewitt => (dewitt_suite(config, &grid)?, Vec::new()),
                    SuiteKind::Anomaly => (anomaly_suite(config, &grid)?, Vec::new()),
                    SuiteKind::Gaussian => gaussian_suite(config, &grid, path.as_ref())?,
                    SuiteKind::Algebroid => (algebroid_suite(config, &grid, path.as_ref())?, Vec::new()),
                    SuiteKind::Convergence | SuiteKind::All => unreachable!(),
                };
                report.push_checks(checks);
                report.push_tables(tables);
            }
        }
        report.timings.push(Timing {
            suite: suite.name().into(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(report)
}

fn load_path(config: &SuiteConfig) -> Result<Option<MetricPath>, SuiteError> {
    let Some(file) = &config.path else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(file).map_err(|e| SuiteError::Config(format!("{file}: {e}")))?;
    let path = MetricPath::from_json(&text).map_err(|e| SuiteError::Config(format!("{file}: {e}")))?;
    if path.grid().dim() != config.dim || config.n.iter().any(|&n| n != path.grid().n()) {
        return Err(SuiteError::Config(format!(
            "{file} lives on d = {}, N = {}, which does not match the configured grid",
            path.grid().dim(),
            path.grid().n()
        )));
    }
    Ok(Some(path))
}

fn numerical(seed: Option<u64>) -> impl Fn(LabError) -> SuiteError {
    move |source| SuiteError::Numerical { seed, source }
}

fn per_seed<T: Send>(
    config: &SuiteConfig,
    f: impl Fn(u64) -> admlab::Result<T> + Sync + Send,
) -> Result<Vec<T>, SuiteError> {
    config
        .seeds
        .par_iter()
        .map(|&seed| f(seed).map_err(numerical(Some(seed))))
        .collect()
}

fn tolerance(config: &SuiteConfig, relation: DeWittRelation) -> f64 {
    match relation {
        DeWittRelation::ShiftShift => config.tolerances.dewitt_shift_shift,
        DeWittRelation::ShiftLapse => config.tolerances.dewitt_shift_lapse,
        DeWittRelation::LapseLapse => config.tolerances.dewitt_lapse_lapse,
    }
}

/// The three DeWitt relations at a seeded point.
pub fn dewitt_at(config: &SuiteConfig, grid: &TorusGrid, seed: u64) -> admlab::Result<[RelationResidual; 3]> {
    let p = seeded_phase_point(grid, seed, config.kmax, config.epsilon)?;
    let s = SmearingSet::seeded(grid, seed, config.kmax)?;
    dewitt_residuals(&p, &s.x, &s.y, &s.phi, &s.psi, &config.gradient)
}

/// Largest `|{C_a, C_b}|` over all pairs of six seeded constraints at `(δ, 0)`.
pub fn coisotropy_at(grid: &TorusGrid, seed: u64, kmax: usize, s: &GradientStrategy) -> admlab::Result<f64> {
    let p = PhaseSpacePoint::flat_vacuum(grid);
    let m = SmearingSet::seeded(grid, seed, kmax)?;
    let (a, b) = m.sections();
    let sections = [
        Section::shift_only(m.x.clone()),
        Section::shift_only(m.y.clone()),
        Section::lapse_only(m.phi.clone()),
        Section::lapse_only(m.psi.clone()),
        a,
        b,
    ];
    let grads = sections
        .iter()
        .map(|sec| functional_gradient(&constraint_functional(sec), &p, s))
        .collect::<admlab::Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for i in 0..grads.len() {
        for j in i + 1..grads.len() {
            worst = worst.max(bracket_from_gradients(&grads[i], &grads[j])?.abs());
        }
    }
    Ok(worst)
}

fn dewitt_suite(config: &SuiteConfig, grid: &TorusGrid) -> Result<Vec<CheckRecord>, SuiteError> {
    let rows = per_seed(config, |seed| {
        Ok((dewitt_at(config, grid, seed)?, coisotropy_at(grid, seed, config.kmax, &config.gradient)?))
    })?;
    let mut out = Vec::new();
    for (&seed, (relations, coisotropy)) in config.seeds.iter().zip(rows) {
        for (relation, r) in DeWittRelation::ALL.into_iter().zip(relations) {
            out.push(
                CheckRecord::relative(relation.name(), relation.identity(), r.residual, r.scale, tolerance(config, relation))
                    .on(grid, Some(seed)),
            );
        }
        out.push(
            CheckRecord::absolute("coisotropy", ANCHOR_COISOTROPY, coisotropy, 1.0, config.tolerances.coisotropy)
                .on(grid, Some(seed)),
        );
    }
    Ok(out)
}

fn unit_shift(grid: &TorusGrid) -> VectorField {
    let mut c = vec![0.0; grid.dim()];
    c[0] = 1.0;
    VectorField::constant(grid, &c).expect("dimension matches")
}

fn anomaly_suite(config: &SuiteConfig, grid: &TorusGrid) -> Result<Vec<CheckRecord>, SuiteError> {
    let rows = per_seed(config, |seed| {
        let gbar = seeded_frozen_metric(grid, seed, config.kmax, config.epsilon)?;
        let s = SmearingSet::seeded(grid, seed, config.kmax)?;
        let scale = s.x.max_abs() * s.phi.max_abs() * s.psi.max_abs();
        Ok((frozen_jacobiator_residual(&gbar, &s.x, &s.phi, &s.psi)?, scale))
    })?;
    let mut out: Vec<CheckRecord> = config
        .seeds
        .iter()
        .zip(rows)
        .map(|(&seed, (res, scale))| {
            CheckRecord::absolute("frozen_anomaly", ANCHOR_ANOMALY, res, scale, config.tolerances.frozen_anomaly)
                .on(grid, Some(seed))
        })
        .collect();
    let seed = config.seeds[0];
    let s = SmearingSet::seeded(grid, seed, config.kmax).map_err(numerical(Some(seed)))?;
    let jac = frozen_jacobiator(
        &MetricField::flat(grid),
        &Section::shift_only(unit_shift(grid)),
        &Section::lapse_only(s.phi.clone()),
        &Section::lapse_only(s.psi.clone()),
    )
    .map_err(numerical(Some(seed)))?;
    out.push(
        CheckRecord::absolute("killing_jacobiator", ANCHOR_KILLING, jac.max_abs(), 1.0, config.tolerances.killing_jacobiator)
            .on(grid, Some(seed)),
    );
    Ok(out)
}

fn path_for(config: &SuiteConfig, grid: &TorusGrid, seed: u64, fixed: Option<&MetricPath>) -> admlab::Result<MetricPath> {
    match fixed {
        Some(p) => Ok(p.clone()),
        None => seeded_path(grid, seed, config.kmax, config.epsilon),
    }
}

/// Least-squares slope of `ln r` against `ln t`.
pub fn log_log_slope(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(t, r)| (t.ln(), r.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

struct GaussianSeed {
    lapse_drift: f64,
    gaussianity: f64,
    halved: f64,
    defects: Vec<(f64, f64)>,
    action: (f64, f64),
    nongaussian: (f64, f64),
    curved: bool,
}

fn gaussian_seed(config: &SuiteConfig, grid: &TorusGrid, seed: u64, fixed: Option<&MetricPath>) -> admlab::Result<GaussianSeed> {
    let path = path_for(config, grid, seed, fixed)?;
    let s = SmearingSet::seeded(grid, seed, config.kmax)?;
    let (a, b) = s.sections();
    let spacing = 8.0 * config.ode_step;
    let coarse = symmetric_samples(&path, 2, spacing);
    let v = gaussian_extend(&path, &a, &coarse, Some(config.ode_step))?;
    let lapse_drift = v
        .lapses()
        .iter()
        .map(|l| l.sub(a.lapse()).map(|d| d.max_abs()))
        .collect::<admlab::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let gaussianity = gaussianity_residual(&path, &v)?;
    let fine = symmetric_samples(&path, 2, 0.5 * spacing);
    let halved = gaussianity_residual(&path, &gaussian_extend(&path, &a, &fine, Some(0.5 * config.ode_step))?)?;

    let t0 = DEFECT_TIMES[0].min(path.window());
    let defects = DEFECT_TIMES
        .iter()
        .map(|&t| {
            let t = t * (t0 / DEFECT_TIMES[0]);
            first_order_defect(&path, &a, t).map(|d| (t, d))
        })
        .collect::<admlab::Result<Vec<_>>>()?;

    let l = spacetime_lie_derivative(&path, &v, 0.0)?;
    let action = (l.mixed.max_abs().max(l.tt.max_abs()), l.spatial.max_abs());
    let nongaussian = nongaussian_bracket_residual(&path, &a, &b)?;
    let curved = second_fundamental_form(&path, 0.0)?.max_abs() > 0.0;
    Ok(GaussianSeed { lapse_drift, gaussianity, halved, defects, action, nongaussian, curved })
}

fn gaussian_suite(
    config: &SuiteConfig,
    grid: &TorusGrid,
    fixed: Option<&MetricPath>,
) -> Result<(Vec<CheckRecord>, Vec<ConvergenceTable>), SuiteError> {
    let rows = per_seed(config, |seed| gaussian_seed(config, grid, seed, fixed))?;
    let tol = &config.tolerances;
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    let (mut curved, mut missing, mut smallest) = (0usize, 0usize, f64::INFINITY);
    for (&seed, r) in config.seeds.iter().zip(&rows) {
        let at = |c: CheckRecord| c.on(grid, Some(seed));
        checks.push(at(CheckRecord::absolute("lapse_constancy", ANCHOR_LAPSE, r.lapse_drift, 1.0, tol.lapse_constancy)));
        checks.push(at(CheckRecord::absolute("gaussianity", ANCHOR_GAUSSIANITY, r.gaussianity, 1.0, tol.gaussianity)));
        let ratio = if r.gaussianity <= DIFFERENCE_FLOOR { 0.0 } else { r.halved / r.gaussianity };
        checks.push(at(CheckRecord::absolute("ode_halving", ANCHOR_HALVING, ratio, r.gaussianity, tol.ode_halving)));
        tables.push(ConvergenceTable::new(
            "ode_halving",
            ANCHOR_HALVING,
            Some(seed),
            "ode_step",
            &[(config.ode_step, r.gaussianity), (0.5 * config.ode_step, r.halved)],
            DIFFERENCE_FLOOR,
        ));

        let peak = r.defects.iter().map(|d| d.1).fold(0.0, f64::max);
        let miss = if peak <= ROUNDING_FLOOR { 0.0 } else { (log_log_slope(&r.defects) - 2.0).abs() };
        checks.push(at(CheckRecord::absolute("first_order_slope", ANCHOR_SLOPE, miss, peak, tol.first_order_slope)));
        tables.push(ConvergenceTable::new("first_order_defect", ANCHOR_SLOPE, Some(seed), "t", &r.defects, ROUNDING_FLOOR));

        checks.push(at(CheckRecord::relative("gaussian_action", ANCHOR_ACTION, r.action.0, r.action.1, tol.gaussian_action)));
        checks.push(at(CheckRecord::absolute(
            "nongaussian_identity",
            ANCHOR_NONGAUSSIAN,
            r.nongaussian.0,
            r.nongaussian.1,
            tol.nongaussian_identity,
        )));
        if r.curved {
            curved += 1;
            smallest = smallest.min(r.nongaussian.1);
            if r.nongaussian.1 <= tol.witness_magnitude {
                missing += 1;
            }
        }
    }
    if curved > 0 {
        let fraction = missing as f64 / curved as f64;
        checks.push(
            CheckRecord::absolute("nongaussian_witness", ANCHOR_WITNESS, fraction, smallest, tol.witness_missing)
                .on(grid, None),
        );
    }
    Ok((checks, tables))
}

/// `{C_a, C_b} − C_[a,b]` for all nine type pairings, sharing gradients.
pub fn compat_at(
    config: &SuiteConfig,
    grid: &TorusGrid,
    seed: u64,
) -> admlab::Result<Vec<(String, RelationResidual)>> {
    let p = seeded_phase_point(grid, seed, config.kmax, config.epsilon)?;
    let s = SmearingSet::seeded(grid, seed, config.kmax)?;
    let typed = s.typed_sections();
    let grad = |sec: &Section| functional_gradient(&constraint_functional(sec), &p, &config.gradient);
    let firsts = typed.iter().map(|t| grad(&t.1)).collect::<admlab::Result<Vec<_>>>()?;
    let seconds = typed.iter().map(|t| grad(&t.2)).collect::<admlab::Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(9);
    for (i, (ta, a, _)) in typed.iter().enumerate() {
        for (j, (tb, _, b)) in typed.iter().enumerate() {
            let bracket = bracket_from_gradients(&firsts[i], &seconds[j])?;
            let smeared = smeared_constraint(&section_bracket(p.gamma(), a, b)?, &p)?;
            out.push((format!("compat_{ta}_{tb}"), RelationResidual::new(bracket, smeared)));
        }
    }
    Ok(out)
}

fn algebroid_suite(config: &SuiteConfig, grid: &TorusGrid, fixed: Option<&MetricPath>) -> Result<Vec<CheckRecord>, SuiteError> {
    let rows = per_seed(config, |seed| {
        let compat = compat_at(config, grid, seed)?;
        let path = path_for(config, grid, seed, fixed)?;
        let s = SmearingSet::seeded(grid, seed, config.kmax)?;
        let (a, b) = s.sections();
        let agreement = gaussian_bracket_agreement(&path, &a, &b)?;
        let gamma = path.metric_at(0.0)?;
        let anti = section_bracket(&gamma, &a, &b)?.add(&section_bracket(&gamma, &b, &a)?)?.max_abs();
        Ok((compat, agreement, anti))
    })?;
    let tol = &config.tolerances;
    let mut out = Vec::new();
    for (&seed, (compat, agreement, anti)) in config.seeds.iter().zip(rows) {
        for (name, r) in compat {
            out.push(CheckRecord::relative(name, ANCHOR_COMPAT, r.residual, r.scale, tol.compat).on(grid, Some(seed)));
        }
        out.push(
            CheckRecord::absolute("bracket_agreement", ANCHOR_AGREEMENT, agreement.0, agreement.1, tol.bracket_agreement)
                .on(grid, Some(seed)),
        );
        out.push(
            CheckRecord::absolute("section_antisymmetry", ANCHOR_ANTISYMMETRY, anti, 1.0, tol.section_antisymmetry)
                .on(grid, Some(seed)),
        );
    }
    let flat = static_flat_path(grid).map_err(numerical(None))?;
    let c: Vec<f64> = [1.0, -0.5, 0.25][..grid.dim()].to_vec();
    let translation = Section::new(
        VectorField::constant(grid, &c).map_err(numerical(None))?,
        ScalarField::constant(grid, 0.75),
    )
    .map_err(numerical(None))?;
    let alpha = anchor(&flat, &translation, &anchor_samples(&flat)).map_err(numerical(None))?;
    out.push(CheckRecord::absolute("anchor_kernel", ANCHOR_KERNEL, alpha.max_abs(), 1.0, tol.anchor_kernel).on(grid, None));
    Ok(out)
}

/// DeWitt residuals per relation and seed across the configured grid sizes.
pub fn convergence_study(config: &SuiteConfig) -> Result<Vec<ConvergenceTable>, SuiteError> {
    let grids = config
        .n
        .iter()
        .map(|&n| TorusGrid::new(config.dim, n).map_err(|e| SuiteError::Config(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = per_seed(config, |seed| {
        grids.iter().map(|g| dewitt_at(config, g, seed)).collect::<admlab::Result<Vec<_>>>()
    })?;
    let mut out = Vec::new();
    for (&seed, per_grid) in config.seeds.iter().zip(rows) {
        for (k, relation) in DeWittRelation::ALL.into_iter().enumerate() {
            let samples: Vec<(f64, f64)> = grids
                .iter()
                .zip(&per_grid)
                .map(|(g, r)| (g.n() as f64, r[k].residual))
                .collect();
            out.push(ConvergenceTable::new(relation.name(), relation.identity(), Some(seed), "N", &samples, ROUNDING_FLOOR));
        }
    }
    Ok(out)
}
