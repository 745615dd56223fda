//! Gaussian normal form `g = γ(t) − dt²` with `n = ∂_t`, gaussian extension of
//! lapse and shift, and the split of 4D Lie derivatives into spatial, mixed
//! and `tt` blocks. No 4D grid is built; time is polynomial or sampled.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{
    Field, FieldSnapshot, MetricField, OneFormField, ScalarField, SymTensorField, Variance,
    VectorField,
};
use crate::geometry::{
    differential, directional_derivative, interior_sym, lie_bracket, lie_derivative_sym2,
    metric_inverse, raise, vector_jacobian,
};
use crate::grid::TorusGrid;

/// Number of uniform samples used to validate a window.
pub const WINDOW_SAMPLES: usize = 33;

const MAX_WINDOW_HALVINGS: usize = 60;

/// `γ(t) = Σ_k t^k γ_k` on `|t| ≤ T`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPath {
    coefficients: Vec<SymTensorField>,
    window: f64,
}

/// JSON form `{window: [−T, T], coefficients: [snapshots]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPathFile {
    pub window: [f64; 2],
    pub coefficients: Vec<FieldSnapshot>,
}

impl MetricPath {
    /// Validates `γ(t)` at [`WINDOW_SAMPLES`] uniform times, halving the
    /// window until every sample is positive-definite.
    pub fn new(coefficients: Vec<SymTensorField>, window: f64) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| LabError::InvalidArgument("metric path needs γ_0".into()))?;
        if !(window.is_finite() && window > 0.0) {
            return Err(LabError::InvalidArgument(format!("window {window} must be positive")));
        }
        for c in &coefficients {
            c.expect(Variance::Covariant)?;
            if c.grid() != first.grid() {
                return Err(LabError::GridMismatch);
            }
        }
        MetricField::new(first.clone())?;
        let mut path = Self {
            coefficients,
            window,
        };
        for _ in 0..MAX_WINDOW_HALVINGS {
            if path.window_is_valid() {
                return Ok(path);
            }
            path.window *= 0.5;
        }
        Err(LabError::InvalidArgument(
            "no positive-definite window around t = 0".into(),
        ))
    }

    /// Time-independent path `γ(t) = γ_0`.
    pub fn static_path(gamma: &MetricField, window: f64) -> Result<Self> {
        Self::new(vec![gamma.tensor().clone()], window)
    }

    fn window_is_valid(&self) -> bool {
        let m = (WINDOW_SAMPLES - 1) as f64;
        (0..WINDOW_SAMPLES).all(|k| {
            let t = self.window * (2.0 * k as f64 / m - 1.0);
            MetricField::new(self.evaluate(t, 0)).is_ok()
        })
    }

    pub fn coefficients(&self) -> &[SymTensorField] {
        &self.coefficients
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn grid(&self) -> &TorusGrid {
        self.coefficients[0].grid()
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if t.is_finite() && t.abs() <= self.window {
            Ok(())
        } else {
            Err(LabError::OutsideWindow {
                t,
                window: self.window,
            })
        }
    }

    /// `d^order γ/dt^order` without window check.
    fn evaluate(&self, t: f64, order: usize) -> SymTensorField {
        let mut out = SymTensorField::zeros(self.grid(), Variance::Covariant);
        for (k, c) in self.coefficients.iter().enumerate().skip(order) {
            let falling: f64 = ((k - order + 1)..=k).map(|m| m as f64).product();
            let factor = falling * t.powi((k - order) as i32);
            if factor != 0.0 {
                out = out.add(&c.scale(factor)).expect("shared grid");
            }
        }
        out
    }

    pub fn metric_at(&self, t: f64) -> Result<MetricField> {
        self.check_time(t)?;
        MetricField::new(self.evaluate(t, 0))
    }

    /// Coefficient-wise sum; the window is the smaller of the two.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid() != other.grid() {
            return Err(LabError::GridMismatch);
        }
        let len = self.coefficients.len().max(other.coefficients.len());
        let zero = SymTensorField::zeros(self.grid(), Variance::Covariant);
        let coefficients = (0..len)
            .map(|k| {
                let a = self.coefficients.get(k).unwrap_or(&zero);
                let b = other.coefficients.get(k).unwrap_or(&zero);
                a.add(b)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficients, self.window.min(other.window))
    }

    pub fn to_file(&self) -> MetricPathFile {
        MetricPathFile {
            window: [-self.window, self.window],
            coefficients: self
                .coefficients
                .iter()
                .map(|c| Field::Sym2(c.clone()).to_snapshot())
                .collect(),
        }
    }

    pub fn from_file(file: &MetricPathFile) -> Result<Self> {
        let [lo, hi] = file.window;
        if lo != -hi {
            return Err(LabError::Snapshot(format!("window [{lo}, {hi}] is not symmetric")));
        }
        let coefficients = file
            .coefficients
            .iter()
            .map(|s| match Field::from_snapshot(s)? {
                Field::Sym2(t) => Ok(t),
                Field::Metric(m) => Ok(m.into_tensor()),
                _ => Err(LabError::Snapshot("path coefficients must be symmetric tensors".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficients, hi)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("path serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MetricPathFile =
            serde_json::from_str(text).map_err(|e| LabError::Snapshot(e.to_string()))?;
        Self::from_file(&file)
    }
}

/// Exact `d^k γ/dt^k` at `t`.
pub fn path_derivative(path: &MetricPath, t: f64, order: usize) -> Result<SymTensorField> {
    if order == 0 {
        return Err(LabError::InvalidArgument("derivative order must be ≥ 1".into()));
    }
    path.check_time(t)?;
    Ok(path.evaluate(t, order))
}

/// `K = −½ γ̇(t)`.
pub fn second_fundamental_form(path: &MetricPath, t: f64) -> Result<SymTensorField> {
    Ok(path_derivative(path, t, 1)?.scale(-0.5))
}

/// `v = X(t) + φ(t) n` sampled at increasing times that include 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeVectorField {
    times: Vec<f64>,
    shifts: Vec<VectorField>,
    lapses: Vec<ScalarField>,
}

impl SpacetimeVectorField {
    pub fn new(times: Vec<f64>, shifts: Vec<VectorField>, lapses: Vec<ScalarField>) -> Result<Self> {
        check_times(&times)?;
        if shifts.len() != times.len() || lapses.len() != times.len() {
            return Err(LabError::InvalidArgument(
                "one shift and one lapse per sample time".into(),
            ));
        }
        let grid = shifts[0].grid();
        if shifts.iter().any(|x| x.grid() != grid) || lapses.iter().any(|f| f.grid() != grid) {
            return Err(LabError::GridMismatch);
        }
        Ok(Self {
            times,
            shifts,
            lapses,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn shifts(&self) -> &[VectorField] {
        &self.shifts
    }

    pub fn lapses(&self) -> &[ScalarField] {
        &self.lapses
    }

    pub fn grid(&self) -> &TorusGrid {
        self.shifts[0].grid()
    }

    /// Index of the sample at exactly `t`.
    pub fn sample_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| s == t)
            .ok_or_else(|| LabError::InvalidArgument(format!("{t} is not a sample time")))
    }

    /// `(X, φ, ∂_tX, ∂_tφ)` at sample `j`, time derivatives by finite differences.
    pub fn jet(&self, j: usize) -> Result<SpacetimeJet> {
        Ok(SpacetimeJet {
            shift: self.shifts[j].clone(),
            lapse: self.lapses[j].clone(),
            shift_dot: time_derivative_vector(&self.times, &self.shifts, j)?,
            lapse_dot: time_derivative_scalar(&self.times, &self.lapses, j)?,
        })
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(LabError::TooFewSamples { needed: 1, got: 0 });
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidArgument("sample times must strictly increase".into()));
    }
    if !times.contains(&0.0) {
        return Err(LabError::InvalidArgument("sample times must contain 0".into()));
    }
    Ok(())
}

/// Fornberg weights for the `order`-th derivative at `z` from nodes `x`.
pub fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Stencil of the five samples nearest to sample `j`.
fn stencil(times: &[f64], j: usize) -> Result<(usize, Vec<f64>)> {
    const WIDTH: usize = 5;
    if times.len() < WIDTH {
        return Err(LabError::TooFewSamples {
            needed: WIDTH,
            got: times.len(),
        });
    }
    let start = j.saturating_sub(WIDTH / 2).min(times.len() - WIDTH);
    Ok((start, fd_weights(times[j], &times[start..start + WIDTH], 1)))
}

/// `Σ_k w_k (f_k − f_ref)`, exact on constants.
fn combine(weights: &[f64], rows: &[&[f64]], reference: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; reference.len()];
    for (w, row) in weights.iter().zip(rows) {
        for ((o, v), r) in out.iter_mut().zip(row.iter()).zip(reference) {
            *o += w * (v - r);
        }
    }
    out
}

fn time_derivative_scalar(times: &[f64], fields: &[ScalarField], j: usize) -> Result<ScalarField> {
    let (start, w) = stencil(times, j)?;
    let rows: Vec<&[f64]> = fields[start..start + w.len()].iter().map(|f| f.values()).collect();
    ScalarField::new(fields[j].grid(), combine(&w, &rows, fields[j].values()))
}

fn time_derivative_vector(times: &[f64], fields: &[VectorField], j: usize) -> Result<VectorField> {
    let (start, w) = stencil(times, j)?;
    let grid = fields[j].grid();
    let comps = (0..grid.dim())
        .map(|i| {
            let rows: Vec<&[f64]> = fields[start..start + w.len()]
                .iter()
                .map(|f| f.component(i))
                .collect();
            combine(&w, &rows, fields[j].component(i))
        })
        .collect();
    VectorField::new(grid, comps)
}

/// Values and first time derivatives of `(X, φ)` on one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeJet {
    pub shift: VectorField,
    pub lapse: ScalarField,
    pub shift_dot: VectorField,
    pub lapse_dot: ScalarField,
}

/// Gaussian extension of `a`: `∂X/∂t = γ(t)^{-1} dφ_0`, `φ(t) = φ_0`,
/// integrated by classical RK4 outward from `t = 0` with step at most
/// `min gap / 8` (and at most `max_step` when given).
pub fn gaussian_extend(
    path: &MetricPath,
    a: &crate::constraints::Section,
    t_samples: &[f64],
    max_step: Option<f64>,
) -> Result<SpacetimeVectorField> {
    check_times(t_samples)?;
    if a.grid() != path.grid() {
        return Err(LabError::GridMismatch);
    }
    for &t in t_samples {
        path.check_time(t)?;
    }
    let min_gap = t_samples
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let mut step = min_gap / 8.0;
    if let Some(cap) = max_step {
        if !(cap > 0.0) {
            return Err(LabError::InvalidArgument(format!("ODE step {cap} must be positive")));
        }
        step = step.min(cap);
    }
    let dphi = differential(a.lapse());
    let rhs = |t: f64| -> Result<VectorField> {
        raise(&metric_inverse(&path.metric_at(t)?), &dphi)
    };
    let zero = t_samples.iter().position(|&t| t == 0.0).expect("checked");
    let mut shifts = vec![a.shift().clone(); t_samples.len()];
    for range in [
        (zero + 1..t_samples.len()).collect::<Vec<_>>(),
        (0..zero).rev().collect::<Vec<_>>(),
    ] {
        let mut x = a.shift().clone();
        let mut t = 0.0;
        for j in range {
            let target = t_samples[j];
            let count = ((target - t).abs() / step).ceil().max(1.0) as usize;
            let h = (target - t) / count as f64;
            for k in 0..count {
                let t0 = t + k as f64 * h;
                let k1 = rhs(t0)?;
                let k23 = rhs(t0 + 0.5 * h)?;
                let k4 = rhs(t0 + h)?;
                x = x.add(&k1.add(&k23.scale(4.0))?.add(&k4)?.scale(h / 6.0))?;
            }
            t = target;
            shifts[j] = x.clone();
        }
    }
    let lapses = vec![a.lapse().clone(); t_samples.len()];
    SpacetimeVectorField::new(t_samples.to_vec(), shifts, lapses)
}

/// `‖X(t) − X_0 − t γ_0^{-1} dφ_0‖∞`.
pub fn first_order_defect(path: &MetricPath, a: &crate::constraints::Section, t: f64) -> Result<f64> {
    path.check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let samples = if t > 0.0 { vec![0.0, t] } else { vec![t, 0.0] };
    let v = gaussian_extend(path, a, &samples, None)?;
    let xt = &v.shifts()[v.sample_index(t)?];
    let grad0 = raise(&metric_inverse(&path.metric_at(0.0)?), &differential(a.lapse()))?;
    Ok(xt.sub(a.shift())?.sub(&grad0.scale(t))?.max_abs())
}

/// Largest of `‖∂_tX − γ(t)^{-1} dφ‖∞` and `‖∂_tφ‖∞` over the samples.
pub fn gaussianity_residual(path: &MetricPath, v: &SpacetimeVectorField) -> Result<f64> {
    if v.grid() != path.grid() {
        return Err(LabError::GridMismatch);
    }
    let mut worst = 0.0f64;
    for (j, &t) in v.times().iter().enumerate() {
        let jet = v.jet(j)?;
        let grad = raise(&metric_inverse(&path.metric_at(t)?), &differential(&jet.lapse))?;
        worst = worst
            .max(jet.shift_dot.sub(&grad)?.max_abs())
            .max(jet.lapse_dot.max_abs());
    }
    Ok(worst)
}

/// A symmetric 4D covariant tensor split as (`h_ij`, `h_it`, `h_tt`).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTensor {
    pub spatial: SymTensorField,
    pub mixed: OneFormField,
    pub tt: ScalarField,
}

impl BlockTensor {
    /// `g = γ − dt²`.
    pub fn gaussian_metric(gamma: &MetricField) -> Self {
        let grid = gamma.grid();
        Self {
            spatial: gamma.tensor().clone(),
            mixed: OneFormField::zeros(grid),
            tt: ScalarField::constant(grid, -1.0),
        }
    }

    /// Time derivative of [`BlockTensor::gaussian_metric`] along a path.
    pub fn gaussian_metric_rate(gamma_dot: &SymTensorField) -> Self {
        let grid = gamma_dot.grid();
        Self {
            spatial: gamma_dot.clone(),
            mixed: OneFormField::zeros(grid),
            tt: ScalarField::zeros(grid),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.spatial.max_abs().max(self.mixed.max_abs()).max(self.tt.max_abs())
    }
}

fn scalar_grad(f: &ScalarField) -> Result<Vec<Vec<f64>>> {
    Ok(differential(f).components().to_vec())
}

/// 4D coordinate Lie derivative `L_v h` in block form, for `v = X^k ∂_k + φ ∂_t`,
/// from `h` and `∂_t h` on one slice.
pub fn lie_derivative_block(v: &SpacetimeJet, h: &BlockTensor, h_dot: &BlockTensor) -> Result<BlockTensor> {
    let grid = v.shift.grid().clone();
    let d = grid.dim();
    let n = grid.len();
    let jac = vector_jacobian(&v.shift);
    let x = v.shift.components();
    let phi = v.lapse.values();
    let xd = v.shift_dot.components();
    let phid = v.lapse_dot.values();
    let dphi = scalar_grad(&v.lapse)?;
    let s = &h.spatial;
    let m = h.mixed.components();
    let htt = h.tt.values();
    let ds: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|k| {
            s.components()
                .iter()
                .map(|c| grid.derivative(c, k))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let dm: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|k| m.iter().map(|c| grid.derivative(c, k)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let dtt: Vec<Vec<f64>> = (0..d).map(|k| grid.derivative(htt, k)).collect::<Result<_>>()?;
    let sd = &h_dot.spatial;
    let md = h_dot.mixed.components();
    let ttd = h_dot.tt.values();

    let spatial = SymTensorField::from_points(&grid, Variance::Covariant, |p| {
        let sp = s.at(p);
        let sdp = sd.at(p);
        let mut out = [[0.0; 3]; 3];
        for i in 0..d {
            for j in i..d {
                let c = crate::field::sym_index(i, j, d);
                let mut v = phi[p] * sdp[i][j];
                for k in 0..d {
                    v += x[k][p] * ds[k][c][p];
                    v += sp[k][j] * jac[k][i][p] + sp[i][k] * jac[k][j][p];
                }
                v += m[j][p] * dphi[i][p] + m[i][p] * dphi[j][p];
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    });
    let mixed = OneFormField::new(
        &grid,
        (0..d)
            .map(|i| {
                (0..n)
                    .map(|p| {
                        let sp = s.at(p);
                        let mut v = phi[p] * md[i][p] + htt[p] * dphi[i][p] + m[i][p] * phid[p];
                        for k in 0..d {
                            v += x[k][p] * dm[k][i][p] + m[k][p] * jac[k][i][p] + sp[i][k] * xd[k][p];
                        }
                        v
                    })
                    .collect()
            })
            .collect(),
    )?;
    let tt = ScalarField::new(
        &grid,
        (0..n)
            .map(|p| {
                let mut v = phi[p] * ttd[p] + 2.0 * htt[p] * phid[p];
                for k in 0..d {
                    v += x[k][p] * dtt[k][p] + 2.0 * m[k][p] * xd[k][p];
                }
                v
            })
            .collect(),
    )?;
    Ok(BlockTensor { spatial, mixed, tt })
}

/// `L_v g` on the slice at sample time `t` (must be one of `v`'s samples).
pub fn spacetime_lie_derivative(path: &MetricPath, v: &SpacetimeVectorField, t: f64) -> Result<BlockTensor> {
    if v.grid() != path.grid() {
        return Err(LabError::GridMismatch);
    }
    let jet = v.jet(v.sample_index(t)?)?;
    let g = BlockTensor::gaussian_metric(&path.metric_at(t)?);
    let g_dot = BlockTensor::gaussian_metric_rate(&path_derivative(path, t, 1)?);
    lie_derivative_block(&jet, &g, &g_dot)
}

/// 4D bracket `[v, w]` on one slice: spatial part
/// `[X,Y] + φ ∂_tY − ψ ∂_tX`, normal part `X·ψ + φ ∂_tψ − Y·φ − ψ ∂_tφ`.
pub fn spacetime_bracket(v: &SpacetimeJet, w: &SpacetimeJet) -> Result<(VectorField, ScalarField)> {
    let shift = lie_bracket(&v.shift, &w.shift)?
        .add(&w.shift_dot.scale_by(&v.lapse)?)?
        .sub(&v.shift_dot.scale_by(&w.lapse)?)?;
    let lapse = directional_derivative(&v.shift, &w.lapse)?
        .add(&v.lapse.mul(&w.lapse_dot)?)?
        .sub(&directional_derivative(&w.shift, &v.lapse)?)?
        .sub(&w.lapse.mul(&v.lapse_dot)?)?;
    Ok((shift, lapse))
}

/// Half-width of the time stencil used by [`nongaussian_bracket_residual`].
pub const BRACKET_TIME_STEP: f64 = 0.02;

/// Symmetric samples `kΔ`, `k = −m..=m`, with `Δ` shrunk to fit the window.
pub fn symmetric_samples(path: &MetricPath, half_count: usize, spacing: f64) -> Vec<f64> {
    let delta = spacing.min(path.window() / half_count as f64);
    let m = half_count as i64;
    (-m..=m).map(|k| k as f64 * delta).collect()
}

/// The two sides of `i_n L_[v,w] g` at `t = 0` for gaussian extensions `v`,
/// `w` of `a`, `b`. Returns `(‖LHS − RHS‖∞, ‖LHS‖∞)` where the left side is
/// built from the 4D bracket and Lie derivative and the right side is
/// `i_{grad φ} L_Y γ − i_{grad ψ} L_X γ + 2 i_{φ grad ψ − ψ grad φ} K`.
pub fn nongaussian_bracket_residual(
    path: &MetricPath,
    a: &crate::constraints::Section,
    b: &crate::constraints::Section,
) -> Result<(f64, f64)> {
    let times = symmetric_samples(path, 4, BRACKET_TIME_STEP);
    let v = gaussian_extend(path, a, &times, None)?;
    let w = gaussian_extend(path, b, &times, None)?;
    let inner = &times[2..7];
    let mut shifts = Vec::with_capacity(inner.len());
    let mut lapses = Vec::with_capacity(inner.len());
    for j in 2..7 {
        let (s, l) = spacetime_bracket(&v.jet(j)?, &w.jet(j)?)?;
        shifts.push(s);
        lapses.push(l);
    }
    let u = SpacetimeVectorField::new(inner.to_vec(), shifts, lapses)?;
    let lhs = spacetime_lie_derivative(path, &u, 0.0)?;

    let gamma = path.metric_at(0.0)?;
    let k = second_fundamental_form(path, 0.0)?;
    let ginv = metric_inverse(&gamma);
    let grad_phi = raise(&ginv, &differential(a.lapse()))?;
    let grad_psi = raise(&ginv, &differential(b.lapse()))?;
    let cross = grad_psi.scale_by(a.lapse())?.sub(&grad_phi.scale_by(b.lapse())?)?;
    let rhs = interior_sym(&grad_phi, &lie_derivative_sym2(b.shift(), gamma.tensor())?)?
        .sub(&interior_sym(&grad_psi, &lie_derivative_sym2(a.shift(), gamma.tensor())?)?)?
        .add(&interior_sym(&cross, &k)?.scale(2.0))?;
    let residual = lhs.mixed.sub(&rhs)?.max_abs().max(lhs.tt.max_abs());
    let size = lhs.mixed.max_abs().max(lhs.tt.max_abs());
    Ok((residual, size))
}
