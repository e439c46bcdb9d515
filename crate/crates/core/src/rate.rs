//! Rate-function estimation: `I(phi) = inf { Q(g) : phi = X^g }` restricted to
//! events on the solution path, rare-event Monte Carlo for the stochastic
//! equation and the comparison of `eps log P` against `-I`.
//!
//! The optimizer value is an upper bound on `I` over the event; the global
//! infimum is not certified.

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{q_cost, ControlGrid};
use crate::error::{Error, Result};
use crate::jumps::{solve_spde, RngSpec};
use crate::skeleton::{solve_skeleton, Model, SolverConfig, Trajectory};
use crate::spectral::{Norm, OperatorSpec, SpectralField};
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "mode", rename_all = "snake_case")]
pub enum Observable {
    TerminalFstarNorm,
    /// Coefficient of mode `k`, counted from 1.
    TerminalMode(usize),
    PathSupFstar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "ge")]
    AtLeast,
    #[serde(rename = "le")]
    AtMost,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub observable: Observable,
    pub threshold: f64,
    pub direction: Direction,
}

impl EventSpec {
    pub fn new(observable: Observable, threshold: f64, direction: Direction) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::InvalidParameter(format!("event threshold {threshold} is not finite")));
        }
        Ok(Self {
            observable,
            threshold,
            direction,
        })
    }

    pub fn observe(&self, op: &OperatorSpec, traj: &Trajectory) -> Result<f64> {
        match self.observable {
            Observable::TerminalFstarNorm => op.fstar(traj.terminal()),
            Observable::TerminalMode(k) => {
                if k == 0 || k > op.dim() {
                    return Err(Error::IndexOutOfRange { index: k, len: op.dim() });
                }
                Ok(traj.terminal().coeffs()[k - 1])
            }
            Observable::PathSupFstar => traj
                .states
                .iter()
                .map(|x| op.norm(x, Norm::F12Star))
                .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v))),
        }
    }

    /// Amount by which the event fails; zero when it holds.
    pub fn violation(&self, op: &OperatorSpec, traj: &Trajectory) -> Result<f64> {
        let v = self.observe(op, traj)?;
        Ok(match self.direction {
            Direction::AtLeast => (self.threshold - v).max(0.0),
            Direction::AtMost => (v - self.threshold).max(0.0),
        })
    }

    pub fn occurs(&self, op: &OperatorSpec, traj: &Trajectory) -> Result<bool> {
        Ok(self.violation(op, traj)? == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RateOptions {
    pub n_starts: usize,
    /// BFGS iterations per penalty stage.
    pub max_iters: u64,
    pub penalties: Vec<f64>,
    pub fd_step: f64,
    /// Control cells; `None` uses the solver's `n_t`.
    pub control_cells: Option<usize>,
    pub feasibility_tol: f64,
    /// Standard deviation of the random starting points in `u = log g`.
    pub start_spread: f64,
    pub seed: u64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            n_starts: 4,
            max_iters: 100,
            penalties: vec![1e1, 1e2, 1e3, 1e4],
            fd_step: 1e-4,
            control_cells: None,
            feasibility_tol: 1e-3,
            start_spread: 0.3,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StartSummary {
    pub start: usize,
    pub q: f64,
    pub gap: f64,
    pub cost_evals: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateResult {
    /// Best control found; for an infeasible event, the one with least gap.
    pub g_star: ControlGrid,
    /// `Q(g_star)`, or `+inf` when no start met the feasibility tolerance.
    pub q_star: f64,
    pub gap: f64,
    pub feasible: bool,
    pub trace: Vec<StartSummary>,
}

impl RateResult {
    pub fn write_g_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let g = &self.g_star;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t_start".to_string(), "t_end".to_string()];
        header.extend((1..=g.marks()).map(|j| format!("g{j}")));
        w.write_record(&header)?;
        let dt = g.dt();
        for i in 0..g.n_cells() {
            let mut rec = vec![(i as f64 * dt).to_string(), ((i + 1) as f64 * dt).to_string()];
            rec.extend(g.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

const U_CLAMP: f64 = 40.0;

struct Objective<'a> {
    model: &'a Model,
    event: &'a EventSpec,
    x0: &'a SpectralField,
    cfg: &'a SolverConfig,
    cells: usize,
    rho: f64,
    fd_step: f64,
}

impl Objective<'_> {
    fn grid(&self, u: &[f64]) -> Result<ControlGrid> {
        ControlGrid::new(
            self.cells,
            self.model.marks.len(),
            self.model.horizon,
            u.iter().map(|v| v.clamp(-U_CLAMP, U_CLAMP).exp()).collect(),
        )
    }

    fn parts(&self, u: &[f64]) -> Result<(f64, f64)> {
        let g = self.grid(u)?;
        let traj = solve_skeleton(self.model, &g, self.x0, self.cfg)?;
        Ok((q_cost(&g, &self.model.marks)?, self.event.violation(&self.model.op, &traj)?))
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        let (q, v) = self.parts(u)?;
        Ok(q + self.rho * v * v)
    }
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, u: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.value(u)?)
    }
}

impl Gradient for Objective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, u: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let base = self.value(u)?;
        let h = self.fd_step;
        let grad = (0..u.len())
            .into_par_iter()
            .map(|i| {
                let mut p = u.clone();
                p[i] += h;
                Ok((self.value(&p)? - base) / h)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(grad)
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn run_start(obj_base: &Objective, mut u: Vec<f64>, opts: &RateOptions) -> Result<(Vec<f64>, usize)> {
    let n = u.len();
    let mut evals = 0usize;
    for &rho in &opts.penalties {
        let obj = Objective { rho, ..*obj_base };
        let start_value = obj.value(&u)?;
        let solver = BFGS::new(MoreThuenteLineSearch::new())
            .with_tolerance_grad(1e-8)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .with_tolerance_cost(1e-14)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let init = u.clone();
        let run = Executor::new(obj, solver)
            .configure(|s| s.param(init).inv_hessian(identity(n)).max_iters(opts.max_iters))
            .run();
        // a line-search breakdown keeps the stage's starting point
        if let Ok(res) = run {
            let state = res.state();
            evals += state.get_func_counts().values().sum::<u64>() as usize;
            if let Some(best) = state.get_best_param() {
                if state.get_best_cost() <= start_value {
                    u = best.clone();
                }
            }
        }
    }
    Ok((u, evals))
}

/// Minimizes `Q(g)` over controls whose skeleton solution realizes `event`,
/// by a quadratic penalty on the violation with warm-started weights.
pub fn minimize_rate(event: &EventSpec, model: &Model, x0: &SpectralField, cfg: &SolverConfig, opts: &RateOptions) -> Result<RateResult> {
    if opts.n_starts == 0 || opts.penalties.is_empty() {
        return Err(Error::InvalidParameter("need at least one start and one penalty weight".into()));
    }
    if !(opts.fd_step > 0.0) {
        return Err(Error::InvalidParameter(format!("fd_step {} must be positive", opts.fd_step)));
    }
    if opts.penalties.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("penalty weights must be positive".into()));
    }
    let cells = opts.control_cells.unwrap_or(cfg.n_t);
    if cells == 0 {
        return Err(Error::InvalidParameter("control_cells must be at least 1".into()));
    }
    model.check_state(x0)?;
    let n = cells * model.marks.len();
    let base = Objective {
        model,
        event,
        x0,
        cfg,
        cells,
        rho: 0.0,
        fd_step: opts.fd_step,
    };
    let normal = Normal::new(0.0, opts.start_spread.max(0.0)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let starts: Vec<Vec<f64>> = (0..opts.n_starts)
        .map(|s| {
            if s == 0 {
                vec![0.0; n]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(s as u64);
                (0..n).map(|_| normal.sample(&mut rng)).collect()
            }
        })
        .collect();
    let outcomes = starts
        .into_par_iter()
        .enumerate()
        .map(|(s, u0)| {
            let (u, evals) = run_start(&base, u0, opts)?;
            let g = base.grid(&u)?;
            let (q, gap) = base.parts(&u)?;
            Ok((
                g,
                StartSummary {
                    start: s,
                    q,
                    gap,
                    cost_evals: evals,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let trace: Vec<StartSummary> = outcomes.iter().map(|(_, s)| *s).collect();
    let feasible_best = outcomes
        .iter()
        .filter(|(_, s)| s.gap <= opts.feasibility_tol)
        .min_by(|a, b| a.1.q.total_cmp(&b.1.q).then(a.1.start.cmp(&b.1.start)));
    match feasible_best {
        Some((g, s)) => Ok(RateResult {
            g_star: g.clone(),
            q_star: s.q,
            gap: s.gap,
            feasible: true,
            trace,
        }),
        None => {
            let (g, s) = outcomes
                .iter()
                .min_by(|a, b| a.1.gap.total_cmp(&b.1.gap).then(a.1.start.cmp(&b.1.start)))
                .expect("at least one start");
            Ok(RateResult {
                g_star: g.clone(),
                q_star: f64::INFINITY,
                gap: s.gap,
                feasible: false,
                trace,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McRow {
    pub eps: f64,
    pub hits: u64,
    pub trials: usize,
    pub p_hat: f64,
    /// `eps log p_hat`; `-inf` when there were no hits.
    pub eps_log_p: f64,
    /// Binomial standard error propagated to `eps log p_hat`.
    pub stderr: f64,
    pub valid: bool,
}

pub fn write_mc_csv<W: std::io::Write>(rows: &[McRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "hits", "trials", "p_hat", "eps_log_p", "stderr", "valid"])?;
    for r in rows {
        w.write_record([
            r.eps.to_string(),
            r.hits.to_string(),
            r.trials.to_string(),
            r.p_hat.to_string(),
            r.eps_log_p.to_string(),
            r.stderr.to_string(),
            r.valid.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fraction of uncontrolled paths realizing `event`, per `eps`.
pub fn mc_rare_event(
    event: &EventSpec,
    model: &Model,
    x0: &SpectralField,
    cfg: &SolverConfig,
    eps_list: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<McRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for (ei, &eps) in eps_list.iter().enumerate() {
        let hits: u64 = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let spec = RngSpec::new(seed, ((ei as u64) << 32) | trial as u64);
                let path = solve_spde(model, eps, None, x0, cfg, spec)?;
                Ok(u64::from(event.occurs(&model.op, &path.trajectory)?))
            })
            .collect::<Result<Vec<u64>>>()?
            .iter()
            .sum();
        let p = hits as f64 / trials as f64;
        let valid = hits > 0;
        let (eps_log_p, stderr) = if valid {
            (eps * p.ln(), eps * ((1.0 - p) / (trials as f64 * p)).sqrt())
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        rows.push(McRow {
            eps,
            hits,
            trials,
            p_hat: p,
            eps_log_p,
            stderr,
            valid,
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LdpReport {
    pub minus_i: f64,
    /// Intercept at `eps = 0` of the least-squares line through the valid
    /// `(eps, eps log p_hat)` rows.
    pub extrapolated: f64,
    /// `|extrapolated + I| / I`, or the absolute difference when `I` is
    /// below `1e-6`; `+inf` when not comparable.
    pub relative_gap: f64,
    /// False when the rate result carries the infeasible sentinel.
    pub comparable: bool,
    pub rows_used: usize,
}

pub fn ldp_slope_compare(rate: &RateResult, rows: &[McRow]) -> Result<LdpReport> {
    let valid: Vec<&McRow> = rows.iter().filter(|r| r.valid).collect();
    if valid.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            found: valid.len(),
        });
    }
    let xs: Vec<f64> = valid.iter().map(|r| r.eps).collect();
    let ys: Vec<f64> = valid.iter().map(|r| r.eps_log_p).collect();
    let (_, intercept) = stats::linear_fit(&xs, &ys);
    let minus_i = -rate.q_star;
    let comparable = rate.feasible && rate.q_star.is_finite();
    let relative_gap = if !comparable {
        f64::INFINITY
    } else if rate.q_star < 1e-6 {
        (intercept - minus_i).abs()
    } else {
        (intercept - minus_i).abs() / rate.q_star
    };
    Ok(LdpReport {
        minus_i,
        extrapolated: intercept,
        relative_gap,
        comparable,
        rows_used: valid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marks::{JumpCoefficient, MarkSpace};
    use crate::nonlinearity::PsiSpec;

    fn scalar_model(horizon: f64) -> Model {
        let op = OperatorSpec::laplacian(1).unwrap();
        let jump = JumpCoefficient::additive(&op, vec![1.0], SpectralField::new(vec![1.0]).unwrap()).unwrap();
        let marks = MarkSpace::new(vec![0.0], vec![1.0]).unwrap();
        Model::new(op, PsiSpec::linear(1.0).unwrap(), jump, marks, horizon).unwrap()
    }

    fn quick_opts(cells: usize) -> RateOptions {
        RateOptions {
            n_starts: 1,
            max_iters: 50,
            control_cells: Some(cells),
            ..RateOptions::default()
        }
    }

    #[test]
    fn null_threshold_is_free() {
        let m = scalar_model(0.5);
        let x0 = SpectralField::new(vec![0.3]).unwrap();
        let cfg = SolverConfig::with_steps(20);
        let null = solve_skeleton(&m, &ControlGrid::ones(4, 1, 0.5).unwrap(), &x0, &cfg).unwrap();
        let c = m.op.fstar(null.terminal()).unwrap();
        let ev = EventSpec::new(Observable::TerminalFstarNorm, c, Direction::AtLeast).unwrap();
        let r = minimize_rate(&ev, &m, &x0, &cfg, &quick_opts(4)).unwrap();
        assert!(r.feasible && r.q_star <= 1e-6);
        assert!(r.g_star.values().iter().all(|g| (g - 1.0).abs() < 1e-3));
        let below = EventSpec::new(Observable::TerminalFstarNorm, 0.5 * c, Direction::AtLeast).unwrap();
        assert_eq!(minimize_rate(&below, &m, &x0, &cfg, &quick_opts(4)).unwrap().q_star, 0.0);
    }

    #[test]
    fn q_star_is_cost_of_witness() {
        let m = scalar_model(0.5);
        let x0 = SpectralField::zeros(1);
        let cfg = SolverConfig::with_steps(20);
        let ev = EventSpec::new(Observable::TerminalMode(1), 0.3, Direction::AtLeast).unwrap();
        let r = minimize_rate(&ev, &m, &x0, &cfg, &quick_opts(1)).unwrap();
        assert!(r.feasible);
        assert_eq!(r.q_star, q_cost(&r.g_star, &m.marks).unwrap());
        let traj = solve_skeleton(&m, &r.g_star, &x0, &cfg).unwrap();
        assert!((ev.violation(&m.op, &traj).unwrap() - r.gap).abs() <= 1e-9);
    }

    #[test]
    fn unreachable_event_is_infeasible() {
        // with g >= 0 the terminal value is at least -(1 - e^{-T})
        let m = scalar_model(0.5);
        let ev = EventSpec::new(Observable::TerminalMode(1), -5.0, Direction::AtMost).unwrap();
        let mut opts = quick_opts(2);
        opts.max_iters = 20;
        let r = minimize_rate(&ev, &m, &SpectralField::zeros(1), &SolverConfig::with_steps(10), &opts).unwrap();
        assert!(!r.feasible && r.q_star.is_infinite());
        let rows: Vec<McRow> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&eps| McRow {
                eps,
                hits: 1,
                trials: 10,
                p_hat: 0.1,
                eps_log_p: eps * 0.1f64.ln(),
                stderr: 0.0,
                valid: true,
            })
            .collect();
        assert!(!ldp_slope_compare(&r, &rows).unwrap().comparable);
    }

    #[test]
    fn mode_index_checked() {
        let m = scalar_model(0.5);
        let traj = solve_skeleton(&m, &ControlGrid::ones(1, 1, 0.5).unwrap(), &SpectralField::zeros(1), &SolverConfig::with_steps(5)).unwrap();
        let ev = EventSpec::new(Observable::TerminalMode(2), 0.0, Direction::AtLeast).unwrap();
        assert!(matches!(ev.observe(&m.op, &traj), Err(Error::IndexOutOfRange { .. })));
        assert!(EventSpec::new(Observable::TerminalMode(1), f64::NAN, Direction::AtLeast).is_err());
    }

    #[test]
    fn sure_event_has_zero_log_probability() {
        let m = scalar_model(0.5);
        let ev = EventSpec::new(Observable::TerminalMode(1), -10.0, Direction::AtLeast).unwrap();
        let rows = mc_rare_event(&ev, &m, &SpectralField::zeros(1), &SolverConfig::with_steps(10), &[0.2, 0.1, 0.05], 200, 3).unwrap();
        assert!(rows.iter().all(|r| r.p_hat == 1.0 && r.eps_log_p == 0.0));
        let null = RateResult {
            g_star: ControlGrid::ones(1, 1, 0.5).unwrap(),
            q_star: 0.0,
            gap: 0.0,
            feasible: true,
            trace: vec![],
        };
        let rep = ldp_slope_compare(&null, &rows).unwrap();
        assert!(rep.relative_gap < 1e-12);
        assert!(matches!(ldp_slope_compare(&null, &rows[..2]), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn mc_table_reproducible() {
        let m = scalar_model(0.5);
        let ev = EventSpec::new(Observable::TerminalMode(1), 0.2, Direction::AtLeast).unwrap();
        let run = || mc_rare_event(&ev, &m, &SpectralField::zeros(1), &SolverConfig::with_steps(10), &[0.2], 300, 8).unwrap();
        assert_eq!(run(), run());
    }
}
