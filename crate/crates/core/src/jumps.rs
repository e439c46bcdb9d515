//! Poisson random measures on `[0, T] x Z`, their controlled (thinned)
//! versions, and the jump-adapted solver for the stochastic equation
//!
//! ```text
//! dX = L Psi(X) dt + eps int_Z f(t, X(t-), z) Ñ^{phi / eps}(dz, dt)
//!      + int_Z f(t, X, z) (phi - 1) nu(dz) dt
//! ```
//!
//! Compensating the controlled measure leaves the continuous drift
//! `-int_Z f(t, X, z) nu(dz)` regardless of `phi`; the control only changes
//! the jump intensity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::control::ControlGrid;
use crate::error::{Error, Result};
use crate::skeleton::{solve_skeleton, uniform_times, Model, SolverConfig, Stepper, Trajectory};
use crate::spectral::{Norm, SpectralField};
use crate::stats;

/// Seed plus stream index; equal specs give identical draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: usize,
}

/// Time-ordered realization of a (controlled) Poisson random measure.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpStream {
    pub events: Vec<JumpEvent>,
    pub horizon: f64,
    /// Base intensity multiplier `1 / eps`.
    pub rate_scale: f64,
}

impl JumpStream {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of events per mark.
    pub fn counts(&self, marks: usize) -> Vec<u64> {
        let mut c = vec![0u64; marks];
        for e in &self.events {
            c[e.mark] += 1;
        }
        c
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "mark"])?;
        for e in &self.events {
            w.write_record([e.time.to_string(), e.mark.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sort_events(events: &mut [JumpEvent]) {
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.mark.cmp(&b.mark)));
}

/// Arrival times of a homogeneous Poisson process of `rate` on `(0, T]`.
fn poisson_arrivals<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R, mut emit: impl FnMut(f64, &mut R)) {
    if rate <= 0.0 {
        return;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t > horizon {
            break;
        }
        emit(t, rng);
    }
}

/// Poisson random measure with intensity `rate_scale * dt x nu`.
pub fn sample_prm<R: Rng + ?Sized>(space: &crate::marks::MarkSpace, horizon: f64, rate_scale: f64, rng: &mut R) -> Result<JumpStream> {
    if !(rate_scale >= 0.0 && rate_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate scale {rate_scale} must be finite and >= 0")));
    }
    let mut events = Vec::new();
    for (j, w) in space.weights().iter().enumerate() {
        poisson_arrivals(rate_scale * w, horizon, rng, |t, _| events.push(JumpEvent { time: t, mark: j }));
    }
    sort_events(&mut events);
    Ok(JumpStream {
        events,
        horizon,
        rate_scale,
    })
}

/// A deterministic control in the bounded class: `1/n <= phi <= n` on the
/// first `n` marks and `phi = 1` elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedControl {
    pub phi: ControlGrid,
    pub n_bound: usize,
}

impl BoundedControl {
    pub fn new(phi: ControlGrid, n_bound: usize) -> Result<Self> {
        if n_bound == 0 {
            return Err(Error::InvalidParameter("n_bound must be at least 1".into()));
        }
        let n = n_bound as f64;
        let compact = n_bound.min(phi.marks());
        for i in 0..phi.n_cells() {
            for j in 0..phi.marks() {
                let v = phi.value(i, j);
                if j < compact {
                    if v > n || v < 1.0 / n {
                        return Err(Error::PreconditionViolation(format!(
                            "phi = {v} at cell {i}, mark {j} outside [1/{n_bound}, {n_bound}]"
                        )));
                    }
                } else if v != 1.0 {
                    return Err(Error::PreconditionViolation(format!(
                        "phi = {v} at cell {i}, mark {j} must equal 1 off the compact K_{n_bound}"
                    )));
                }
            }
        }
        Ok(Self { phi, n_bound })
    }

    /// The null control, in every bounded class.
    pub fn null(n_cells: usize, marks: usize, horizon: f64) -> Result<Self> {
        Self::new(ControlGrid::ones(n_cells, marks, horizon)?, 1)
    }

    pub(crate) fn compact_len(&self) -> usize {
        self.n_bound.min(self.phi.marks())
    }
}

/// Controlled random measure with intensity `phi(t, z) dt nu(dz) / eps`,
/// realized by thinning a dominating measure of intensity `n / eps` on `K_n`.
pub fn sample_controlled_prm<R: Rng + ?Sized>(
    space: &crate::marks::MarkSpace,
    horizon: f64,
    eps: f64,
    control: &BoundedControl,
    rng: &mut R,
) -> Result<JumpStream> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    control.phi.check_marks(space)?;
    let phi = &control.phi;
    let n = control.n_bound as f64;
    let compact = control.compact_len();
    let mut events = Vec::new();
    for (j, w) in space.weights().iter().enumerate() {
        if j < compact {
            poisson_arrivals(n * w / eps, horizon, rng, |t, rng| {
                let accept = phi.value(phi.cell_of(t), j) / n;
                if rng.random::<f64>() < accept {
                    events.push(JumpEvent { time: t, mark: j });
                }
            });
        } else {
            poisson_arrivals(w / eps, horizon, rng, |t, _| events.push(JumpEvent { time: t, mark: j }));
        }
    }
    sort_events(&mut events);
    Ok(JumpStream {
        events,
        horizon,
        rate_scale: 1.0 / eps,
    })
}

/// Jump applied to the state: `eps f(t, X(t-), z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AppliedJump {
    pub time: f64,
    pub mark: usize,
    /// State `X(t-)` the jump was evaluated at.
    pub left_limit: SpectralField,
    pub increment: SpectralField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpdePath {
    /// States at the uniform output times (right limits at jump times).
    pub trajectory: Trajectory,
    pub jumps: Vec<AppliedJump>,
}

/// Integrates the stochastic equation along a given jump stream. Steps are
/// split at every event whose mark has nonzero amplitude.
pub fn solve_spde_on_stream(model: &Model, eps: f64, stream: &JumpStream, x0: &SpectralField, cfg: &SolverConfig) -> Result<SpdePath> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1]")));
    }
    model.check_state(x0)?;
    let jump = &model.jump;
    let compensator = -jump.weighted_gain(&model.marks, |_| 1.0);
    let drift = move |t: f64, x: &SpectralField| jump.shape(x).scaled(compensator * jump.beta().eval(t));
    let mut stepper = Stepper::new(model, cfg, 0.0, 0.0)?;
    let times = uniform_times(model.horizon, cfg.n_t);
    let mut states = Vec::with_capacity(times.len());
    states.push(x0.clone());
    let mut applied = Vec::new();
    let active: Vec<&JumpEvent> = stream
        .events
        .iter()
        .filter(|e| jump.sigma().get(e.mark).is_some_and(|s| *s != 0.0))
        .collect();
    if let Some(bad) = stream.events.iter().find(|e| e.mark >= model.marks.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad.mark,
            len: model.marks.len(),
        });
    }
    let mut next_event = 0;
    let mut x = x0.clone();
    for n in 0..cfg.n_t {
        let (t0, t1) = (times[n], times[n + 1]);
        let mut t = t0;
        while next_event < active.len() && active[next_event].time <= t1 {
            let ev = active[next_event];
            if ev.time > t {
                x = stepper.advance(&x, t, ev.time - t, &drift)?;
                t = ev.time;
            }
            let inc = jump.eval_f(ev.time, &x, ev.mark)?.scaled(eps);
            let next = x.add(&inc);
            applied.push(AppliedJump {
                time: ev.time,
                mark: ev.mark,
                left_limit: std::mem::replace(&mut x, next),
                increment: inc,
            });
            next_event += 1;
        }
        if t1 > t {
            x = stepper.advance(&x, t, t1 - t, &drift)?;
        }
        if !x.is_finite() {
            return Err(Error::StepFailure {
                time: t,
                dt: t1 - t,
                residual: f64::INFINITY,
                iterations: 0,
            });
        }
        states.push(x.clone());
    }
    Ok(SpdePath {
        trajectory: Trajectory {
            times,
            states,
            psi_integral: None,
        },
        jumps: applied,
    })
}

/// Samples the (controlled) noise and integrates one path. `control = None`
/// is the uncontrolled equation.
pub fn solve_spde(
    model: &Model,
    eps: f64,
    control: Option<&BoundedControl>,
    x0: &SpectralField,
    cfg: &SolverConfig,
    rng: RngSpec,
) -> Result<SpdePath> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1]")));
    }
    let mut r = rng.rng();
    let stream = match control {
        None => sample_prm(&model.marks, model.horizon, 1.0 / eps, &mut r)?,
        Some(c) => {
            model.check_control(&c.phi)?;
            sample_controlled_prm(&model.marks, model.horizon, eps, c, &mut r)?
        }
    };
    solve_spde_on_stream(model, eps, &stream, x0, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentRow {
    pub eps: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionBReport {
    pub rows: Vec<ExperimentRow>,
    /// Least-squares slope of `log estimate` against `log eps`; `None` when
    /// fewer than two rows are positive.
    pub slope: Option<f64>,
}

pub fn write_rows_csv<W: std::io::Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "estimate", "stderr", "trials"])?;
    for r in rows {
        w.write_record([r.eps.to_string(), r.estimate.to_string(), r.stderr.to_string(), r.trials.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Monte Carlo estimate of `E sup_t ||X^{phi_eps}(t) - Y^{phi_eps}(t)||^2_{F*}`
/// over the ladder `eps_list`, where `Y` solves the skeleton equation with
/// control `phi_eps` and `X` the controlled stochastic equation. The sup runs
/// over the uniform output grid.
pub fn condition_b_experiment<F>(
    model: &Model,
    family: F,
    eps_list: &[f64],
    trials: usize,
    x0: &SpectralField,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<ConditionBReport>
where
    F: Fn(f64) -> Result<BoundedControl> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for (ei, &eps) in eps_list.iter().enumerate() {
        let control = family(eps)?;
        let skeleton = solve_skeleton(model, &control.phi, x0, cfg)?;
        let samples: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let spec = RngSpec::new(seed, ((ei as u64) << 32) | trial as u64);
                let path = solve_spde(model, eps, Some(&control), x0, cfg, spec)?;
                let d = path.trajectory.sup_distance(&skeleton, &model.op, Norm::F12Star)?;
                Ok(d * d)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (mean, se) = stats::mean_stderr(&samples);
        rows.push(ExperimentRow {
            eps,
            estimate: mean,
            stderr: se,
            trials,
        });
    }
    let pos: Vec<&ExperimentRow> = rows.iter().filter(|r| r.estimate > 0.0).collect();
    let slope = if pos.len() >= 2 {
        let xs: Vec<f64> = pos.iter().map(|r| r.eps.ln()).collect();
        let ys: Vec<f64> = pos.iter().map(|r| r.estimate.ln()).collect();
        Some(stats::linear_fit(&xs, &ys).0)
    } else {
        None
    };
    Ok(ConditionBReport { rows, slope })
}
