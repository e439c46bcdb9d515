//! Deterministic skeleton equation
//! `dX = L Psi(X) dt + int_Z f(t, X, z) (g(t, z) - 1) nu(dz) dt`
//! and its regularized relatives, plus the a-priori and continuity checks.
//!
//! # Time stepping
//!
//! Each step of length `h` solves for the increment `D = X+ - x` in
//!
//! ```text
//! D = W(h) [ L Psi(x + D) + drift + k Lambda D ]
//! ```
//!
//! where `Lambda = -L`, `k` is the Lipschitz constant of `Psi` and `W(h)` is the
//! diagonal weight of the scheme. Writing `Psi = k id + R` shows that this is
//! the linear part `-k Lambda X` handled implicitly and the remainder `R`
//! iterated. With `W = h (1 + h k Lambda)^{-1}` the fixed point is exactly the
//! implicit Euler step; with `W = (1 - e^{-h k Lambda}) / (k Lambda)` it is the
//! exponential Euler step, exact for linear `Psi`. In both cases the Picard
//! map has a Jacobian with spectrum in `[0, q)`, `q < 1`, because `R` is
//! nonincreasing with slope at least `-k`.
//!
//! The drift is explicit, evaluated at the left end of the step.

use serde::{Deserialize, Serialize};

use crate::control::ControlGrid;
use crate::error::{Error, Result};
use crate::marks::{integrated_h, Bound, JumpCoefficient, MarkSpace};
use crate::nonlinearity::PsiSpec;
use crate::spectral::{Basis, Collocation, Norm, OperatorSpec, SpectralField};

/// Everything that defines the equation except the control and initial
/// state.
#[derive(Clone, Debug)]
pub struct Model {
    pub op: OperatorSpec,
    pub psi: PsiSpec,
    pub jump: JumpCoefficient,
    pub marks: MarkSpace,
    pub horizon: f64,
}

impl Model {
    pub fn new(op: OperatorSpec, psi: PsiSpec, jump: JumpCoefficient, marks: MarkSpace, horizon: f64) -> Result<Self> {
        jump.check_space(&marks)?;
        if jump.eta().len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                found: jump.eta().len(),
            });
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
        }
        if !psi.is_linear() && op.basis() == Basis::Abstract {
            return Err(Error::UnsupportedCombination(
                "nonlinear Psi requires the Dirichlet sine basis".into(),
            ));
        }
        Ok(Self {
            op,
            psi,
            jump,
            marks,
            horizon,
        })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub(crate) fn check_state(&self, x: &SpectralField) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        if !x.is_finite() {
            return Err(Error::InvalidParameter("initial state must be finite".into()));
        }
        Ok(())
    }

    pub(crate) fn check_control(&self, g: &ControlGrid) -> Result<()> {
        g.check_marks(&self.marks)?;
        if (g.horizon() - self.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::PreconditionViolation(format!(
                "control horizon {} differs from model horizon {}",
                g.horizon(),
                self.horizon
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    #[default]
    ExponentialEuler,
    ImplicitEuler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Uniform time cells on `[0, T]`.
    pub n_t: usize,
    /// Collocation size; `None` means `2K`.
    #[serde(alias = "M")]
    pub collocation: Option<usize>,
    /// Fixed-point tolerance on the increment, measured in `F*_{1,2}`.
    pub fp_tol: f64,
    pub fp_max: usize,
    /// Damping `omega` of the Picard update.
    pub relax: f64,
    /// Halve the step and retry when the fixed point does not converge.
    pub adapt: bool,
    pub scheme: TimeScheme,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_t: 200,
            collocation: None,
            fp_tol: 1e-10,
            fp_max: 200,
            relax: 1.0,
            adapt: true,
            scheme: TimeScheme::ExponentialEuler,
        }
    }
}

impl SolverConfig {
    pub fn with_steps(n_t: usize) -> Self {
        Self {
            n_t,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self, modes: usize) -> Result<()> {
        if self.n_t == 0 {
            return Err(Error::InvalidParameter("n_t must be at least 1".into()));
        }
        if let Some(m) = self.collocation {
            if m < 2 * modes {
                return Err(Error::InvalidParameter(format!("collocation size {m} below 2K = {}", 2 * modes)));
            }
        }
        if !(self.fp_tol > 0.0) {
            return Err(Error::InvalidParameter("fp_tol must be positive".into()));
        }
        if self.fp_max == 0 {
            return Err(Error::InvalidParameter("fp_max must be at least 1".into()));
        }
        if !(self.relax > 0.0 && self.relax <= 1.0) {
            return Err(Error::InvalidParameter(format!("relax {} outside (0, 1]", self.relax)));
        }
        Ok(())
    }
}

/// Solution sampled on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    /// Running `int_0^t Psi(X(s)) ds` (trapezoid rule) at each time.
    pub psi_integral: Option<Vec<SpectralField>>,
}

impl Trajectory {
    pub fn initial(&self) -> &SpectralField {
        &self.states[0]
    }

    pub fn terminal(&self) -> &SpectralField {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `sup_t ||X(t) - Y(t)||` over shared grid times.
    pub fn sup_distance(&self, other: &Trajectory, op: &OperatorSpec, norm: Norm) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(Error::DimensionMismatch {
                expected: self.times.len(),
                found: other.times.len(),
            });
        }
        let mut sup = 0.0f64;
        for (a, b) in self.states.iter().zip(&other.states) {
            sup = sup.max(op.norm(&a.sub(b), norm)?);
        }
        Ok(sup)
    }

    /// `sup_t |X(t)|_2^2`.
    pub fn sup_l2_sq(&self) -> f64 {
        self.states.iter().map(|s| s.dot(s)).fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let k = self.states.first().map_or(0, |s| s.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=k).map(|i| format!("c{i}")));
        w.write_record(&header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut row = vec![t.to_string()];
            row.extend(s.coeffs().iter().map(|c| c.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One-step integrator for `dX = -(Lambda) Psi_delta(X) dt + drift dt`.
pub(crate) struct Stepper<'a> {
    psi: &'a PsiSpec,
    delta: f64,
    lip: f64,
    eigen: Vec<f64>,
    colloc: Option<Collocation>,
    cfg: SolverConfig,
    // scratch buffers
    grid: Vec<f64>,
    psi_coeffs: Vec<f64>,
}

const MAX_HALVINGS: u32 = 12;

impl<'a> Stepper<'a> {
    pub(crate) fn new(model: &'a Model, cfg: &SolverConfig, eps: f64, delta: f64) -> Result<Self> {
        cfg.validate(model.dim())?;
        let k = model.dim();
        let colloc = if model.psi.is_linear() {
            None
        } else {
            Some(Collocation::new(&model.op, cfg.collocation.unwrap_or(2 * k))?)
        };
        let points = colloc.as_ref().map_or(0, |c| c.points());
        Ok(Self {
            psi: &model.psi,
            delta,
            lip: model.psi.lip() + delta,
            eigen: model.op.shifted_eigenvalues(eps),
            colloc,
            cfg: *cfg,
            grid: vec![0.0; points],
            psi_coeffs: vec![0.0; k],
        })
    }

    /// Writes `Psi(y) + delta y` into `out`.
    pub(crate) fn psi_into(&mut self, y: &[f64], out: &mut [f64]) {
        match &self.colloc {
            None => {
                let k0 = self.psi.lip();
                for (o, v) in out.iter_mut().zip(y) {
                    *o = k0 * v + self.delta * v;
                }
            }
            Some(c) => {
                c.to_grid_into(y, &mut self.grid);
                for v in self.grid.iter_mut() {
                    *v = self.psi.eval(*v);
                }
                c.project_grid_into(&self.grid, out);
                if self.delta != 0.0 {
                    for (o, v) in out.iter_mut().zip(y) {
                        *o += self.delta * v;
                    }
                }
            }
        }
    }

    fn weights(&self, h: f64) -> Vec<f64> {
        self.eigen
            .iter()
            .map(|&l| {
                let a = self.lip * l;
                if a == 0.0 {
                    return h;
                }
                match self.cfg.scheme {
                    TimeScheme::ImplicitEuler => h / (1.0 + h * a),
                    TimeScheme::ExponentialEuler => -(-h * a).exp_m1() / a,
                }
            })
            .collect()
    }

    fn try_step(&mut self, x: &SpectralField, h: f64, drift: &SpectralField) -> std::result::Result<SpectralField, (f64, usize)> {
        let k = self.eigen.len();
        let w = self.weights(h);
        let omega = self.cfg.relax;
        let mut inc = vec![0.0; k];
        let mut y = vec![0.0; k];
        let mut psi_buf = std::mem::take(&mut self.psi_coeffs);
        let mut residual = f64::INFINITY;
        for it in 1..=self.cfg.fp_max {
            for i in 0..k {
                y[i] = x.coeffs()[i] + inc[i];
            }
            self.psi_into(&y, &mut psi_buf);
            let mut diff_sq = 0.0;
            for i in 0..k {
                let l = self.eigen[i];
                let target = w[i] * (-l * psi_buf[i] + drift.coeffs()[i] + self.lip * l * inc[i]);
                let next = if omega == 1.0 { target } else { (1.0 - omega) * inc[i] + omega * target };
                let d = next - inc[i];
                diff_sq += d * d / (1.0 + l);
                inc[i] = next;
            }
            residual = diff_sq.sqrt();
            if !residual.is_finite() {
                break;
            }
            if residual <= self.cfg.fp_tol {
                self.psi_coeffs = psi_buf;
                let out: Vec<f64> = x.coeffs().iter().zip(&inc).map(|(a, b)| a + b).collect();
                return Ok(SpectralField::from_raw(out));
            }
            if it == self.cfg.fp_max {
                break;
            }
        }
        self.psi_coeffs = psi_buf;
        Err((residual, self.cfg.fp_max))
    }

    /// Advances `x` from `t` to `t + h` with drift evaluated by `drift(t, x)`
    /// at the left end of every (sub)step.
    pub(crate) fn advance<D>(&mut self, x: &SpectralField, t: f64, h: f64, drift: &D) -> Result<SpectralField>
    where
        D: Fn(f64, &SpectralField) -> SpectralField,
    {
        self.advance_depth(x, t, h, drift, 0)
    }

    fn advance_depth<D>(&mut self, x: &SpectralField, t: f64, h: f64, drift: &D, depth: u32) -> Result<SpectralField>
    where
        D: Fn(f64, &SpectralField) -> SpectralField,
    {
        let d = drift(t, x);
        match self.try_step(x, h, &d) {
            Ok(next) => Ok(next),
            Err((residual, iterations)) => {
                if !self.cfg.adapt || depth >= MAX_HALVINGS {
                    return Err(Error::StepFailure {
                        time: t,
                        dt: h,
                        residual,
                        iterations,
                    });
                }
                let half = 0.5 * h;
                let mid = self.advance_depth(x, t, half, drift, depth + 1)?;
                self.advance_depth(&mid, t + half, half, drift, depth + 1)
            }
        }
    }
}

/// Drift `int_Z f(t, x, z) (g(t, z) - 1) nu(dz)` of the skeleton equation.
pub(crate) fn control_drift<'a>(model: &'a Model, g: &'a ControlGrid) -> impl Fn(f64, &SpectralField) -> SpectralField + 'a {
    let gains: Vec<f64> = (0..g.n_cells())
        .map(|i| model.jump.weighted_gain(&model.marks, |j| g.value(i, j) - 1.0))
        .collect();
    move |t, x| {
        let gain = gains[g.cell_of(t)] * model.jump.beta().eval(t);
        model.jump.shape(x).scaled(gain)
    }
}

pub(crate) fn uniform_times(horizon: f64, n_t: usize) -> Vec<f64> {
    let dt = horizon / n_t as f64;
    (0..=n_t)
        .map(|i| if i == n_t { horizon } else { i as f64 * dt })
        .collect()
}

fn integrate_uniform<D>(model: &Model, x0: &SpectralField, cfg: &SolverConfig, eps: f64, delta: f64, drift: D) -> Result<Trajectory>
where
    D: Fn(f64, &SpectralField) -> SpectralField,
{
    model.check_state(x0)?;
    let mut stepper = Stepper::new(model, cfg, eps, delta)?;
    let times = uniform_times(model.horizon, cfg.n_t);
    let k = model.dim();
    let mut states = Vec::with_capacity(times.len());
    let mut psi_int = Vec::with_capacity(times.len());
    let mut psi_prev = vec![0.0; k];
    stepper.psi_into(x0.coeffs(), &mut psi_prev);
    let mut acc = SpectralField::zeros(k);
    states.push(x0.clone());
    psi_int.push(acc.clone());
    let mut psi_next = vec![0.0; k];
    for n in 0..cfg.n_t {
        let (t0, t1) = (times[n], times[n + 1]);
        let next = stepper.advance(&states[n], t0, t1 - t0, &drift)?;
        if !next.is_finite() {
            return Err(Error::StepFailure {
                time: t0,
                dt: t1 - t0,
                residual: f64::INFINITY,
                iterations: 0,
            });
        }
        stepper.psi_into(next.coeffs(), &mut psi_next);
        let half = 0.5 * (t1 - t0);
        for (a, (p, q)) in acc.coeffs_mut().iter_mut().zip(psi_prev.iter().zip(&psi_next)) {
            *a += half * (p + q);
        }
        std::mem::swap(&mut psi_prev, &mut psi_next);
        states.push(next);
        psi_int.push(acc.clone());
    }
    Ok(Trajectory {
        times,
        states,
        psi_integral: Some(psi_int),
    })
}

/// Solves the skeleton equation with control `g` from `x0`.
pub fn solve_skeleton(model: &Model, g: &ControlGrid, x0: &SpectralField, cfg: &SolverConfig) -> Result<Trajectory> {
    solve_regularized(model, g, x0, cfg, 0.0, 0.0)
}

/// Skeleton equation with `L` replaced by `L - eps` and `Psi` by
/// `Psi + delta id`. `eps = delta = 0` is the skeleton equation itself.
pub fn solve_regularized(
    model: &Model,
    g: &ControlGrid,
    x0: &SpectralField,
    cfg: &SolverConfig,
    eps: f64,
    delta: f64,
) -> Result<Trajectory> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside [0, 1)")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside [0, 1)")));
    }
    model.check_control(g)?;
    let drift = control_drift(model, g);
    integrate_uniform(model, x0, cfg, eps, delta, drift)
}

/// Uniform-in-control energy bound check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AprioriReport {
    pub sup_l2_sq: f64,
    /// `int_0^T h_3(s) ds` for the control actually used.
    pub c_l3: f64,
    pub bound: f64,
    pub bound_ok: bool,
}

/// `sup_t |X(t)|_2^2 <= (2|x|_2^2 + 8 C^2 + 4T) e^{8 C^2 + 4T}`.
pub fn apriori_report(model: &Model, traj: &Trajectory, g: &ControlGrid) -> Result<AprioriReport> {
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let x = traj.initial();
    let c = integrated_h(Bound::L3, &model.jump, &model.marks, g)?;
    let t = model.horizon;
    let expo = 8.0 * c * c + 4.0 * t;
    let bound = (2.0 * x.dot(x) + expo) * expo.exp();
    let sup = traj.sup_l2_sq();
    Ok(AprioriReport {
        sup_l2_sq: sup,
        c_l3: c,
        bound,
        bound_ok: sup <= bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    /// `sup_t ||X^{g_n}(t) - X^g(t)||_{F*}` per sequence element.
    pub distances: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// Distances from the controlled solutions along `g_seq` to the solution for
/// `g_limit`.
pub fn continuity_experiment(
    model: &Model,
    g_seq: &[ControlGrid],
    g_limit: &ControlGrid,
    x0: &SpectralField,
    cfg: &SolverConfig,
) -> Result<ContinuityReport> {
    let reference = solve_skeleton(model, g_limit, x0, cfg)?;
    let mut distances = Vec::with_capacity(g_seq.len());
    for g in g_seq {
        let traj = solve_skeleton(model, g, x0, cfg)?;
        distances.push(traj.sup_distance(&reference, &model.op, Norm::F12Star)?);
    }
    let strictly_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(ContinuityReport {
        distances,
        strictly_decreasing,
    })
}
