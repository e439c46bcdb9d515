//! Command-line front end. Every subcommand reads a JSON config and writes
//! CSV files into the output directory.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::control::q_cost;
use crate::error::{Error, Result};
use crate::jumps::{condition_b_experiment, solve_spde, write_rows_csv, RngSpec};
use crate::marks::{check_h2, tail_compact};
use crate::rate::{ldp_slope_compare, mc_rare_event, minimize_rate, write_mc_csv};
use crate::skeleton::{apriori_report, solve_skeleton, Model, Trajectory};
use crate::spectral::Norm;

#[derive(Parser, Debug)]
#[command(name = "porous-ldp", version, about = "Porous media equations with Poisson noise: skeleton solves, sampling, rate estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the controlled skeleton equation.
    Skeleton(Common),
    /// Sample one path of the stochastic equation, or run the
    /// controlled-versus-skeleton experiment when an eps list is given.
    Sample(Common),
    /// Minimize Q over controls realizing the configured event.
    Rate(Common),
    /// Rare-event Monte Carlo compared against the optimized rate.
    Ldp(Common),
    /// Check the structural hypotheses on the configured model.
    Verify(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated list, e.g. `0.2,0.1,0.05`.
    #[arg(long, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
    /// Also write plot.svg.
    #[arg(long)]
    pub plot: bool,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = Config::from_path(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(e) = &self.eps_list {
            cfg.eps_list = e.clone();
        }
        std::fs::create_dir_all(&self.out)?;
        Ok(cfg)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }
}

pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    match cli.command {
        Command::Skeleton(c) => skeleton(&c),
        Command::Sample(c) => sample(&c),
        Command::Rate(c) => rate(&c),
        Command::Ldp(c) => ldp(&c),
        Command::Verify(c) => verify(&c),
    }
}

fn write_norms(model: &Model, traj: &Trajectory, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "l2", "fstar"])?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        w.write_record([
            t.to_string(),
            model.op.norm(x, Norm::L2)?.to_string(),
            model.op.norm(x, Norm::F12Star)?.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn norm_series(model: &Model, traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, x)| Ok((*t, model.op.norm(x, Norm::F12Star)?)))
        .collect()
}

fn skeleton(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let model = cfg.model()?;
    let x0 = cfg.x0(model.dim())?;
    let g = cfg.control(&model)?;
    let traj = solve_skeleton(&model, &g, &x0, &cfg.solver)?;
    traj.write_csv(c.create("trajectory.csv")?)?;
    write_norms(&model, &traj, c.create("results.csv")?)?;
    if c.plot {
        write_svg(&c.out.join("plot.svg"), "t", "||X(t)||_F*", &norm_series(&model, &traj)?)?;
    }
    Ok(())
}

fn sample(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let model = cfg.model()?;
    let x0 = cfg.x0(model.dim())?;
    let control = cfg.bounded_control(&model)?;
    if !cfg.eps_list.is_empty() {
        let null;
        let ctrl = match &control {
            Some(b) => b,
            None => {
                null = crate::jumps::BoundedControl::null(cfg.solver.n_t, model.marks.len(), model.horizon)?;
                &null
            }
        };
        let rep = condition_b_experiment(&model, |_| Ok(ctrl.clone()), &cfg.eps_list, cfg.trials, &x0, &cfg.solver, cfg.seed)?;
        write_rows_csv(&rep.rows, c.create("results.csv")?)?;
        if c.plot {
            let pts: Vec<(f64, f64)> = rep.rows.iter().filter(|r| r.estimate > 0.0).map(|r| (r.eps, r.estimate)).collect();
            write_svg(&c.out.join("plot.svg"), "eps", "E sup ||X - Y||^2_F*", &pts)?;
        }
        return Ok(());
    }
    let path = solve_spde(&model, cfg.eps, control.as_ref(), &x0, &cfg.solver, RngSpec::new(cfg.seed, 0))?;
    path.trajectory.write_csv(c.create("trajectory.csv")?)?;
    let mut w = csv::Writer::from_writer(c.create("jumps.csv")?);
    w.write_record(["t", "mark"])?;
    for j in &path.jumps {
        w.write_record([j.time.to_string(), j.mark.to_string()])?;
    }
    w.flush()?;
    write_norms(&model, &path.trajectory, c.create("results.csv")?)?;
    if c.plot {
        write_svg(&c.out.join("plot.svg"), "t", "||X(t)||_F*", &norm_series(&model, &path.trajectory)?)?;
    }
    Ok(())
}

fn rate(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let model = cfg.model()?;
    let x0 = cfg.x0(model.dim())?;
    let event = cfg.event.ok_or_else(|| Error::Config("`rate` needs an `event`".into()))?;
    let mut opts = cfg.rate.clone();
    opts.seed = cfg.seed;
    let res = minimize_rate(&event, &model, &x0, &cfg.solver, &opts)?;
    res.write_g_csv(c.create("g_star.csv")?)?;
    let mut w = csv::Writer::from_writer(c.create("results.csv")?);
    w.write_record(["start", "q", "gap", "cost_evals", "q_star", "feasible"])?;
    for s in &res.trace {
        w.write_record([
            s.start.to_string(),
            s.q.to_string(),
            s.gap.to_string(),
            s.cost_evals.to_string(),
            res.q_star.to_string(),
            res.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn ldp(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let model = cfg.model()?;
    let x0 = cfg.x0(model.dim())?;
    let event = cfg.event.ok_or_else(|| Error::Config("`ldp` needs an `event`".into()))?;
    if cfg.eps_list.is_empty() {
        return Err(Error::Config("`ldp` needs `eps_list`".into()));
    }
    let mut opts = cfg.rate.clone();
    opts.seed = cfg.seed;
    let res = minimize_rate(&event, &model, &x0, &cfg.solver, &opts)?;
    res.write_g_csv(c.create("g_star.csv")?)?;
    let rows = mc_rare_event(&event, &model, &x0, &cfg.solver, &cfg.eps_list, cfg.trials, cfg.seed)?;
    write_mc_csv(&rows, c.create("results.csv")?)?;
    let mut w = csv::Writer::from_writer(c.create("ldp.csv")?);
    w.write_record(["minus_i", "extrapolated", "relative_gap", "comparable", "rows_used"])?;
    match ldp_slope_compare(&res, &rows) {
        Ok(rep) => w.write_record([
            rep.minus_i.to_string(),
            rep.extrapolated.to_string(),
            rep.relative_gap.to_string(),
            rep.comparable.to_string(),
            rep.rows_used.to_string(),
        ])?,
        Err(Error::InsufficientData { found, .. }) => w.write_record([
            (-res.q_star).to_string(),
            "NaN".into(),
            "inf".into(),
            "false".into(),
            found.to_string(),
        ])?,
        Err(e) => return Err(e),
    }
    w.flush()?;
    if c.plot {
        let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.valid).map(|r| (r.eps, r.eps_log_p)).collect();
        write_svg(&c.out.join("plot.svg"), "eps", "eps log P", &pts)?;
    }
    Ok(())
}

fn verify(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let model = cfg.model()?;
    let x0 = cfg.x0(model.dim())?;
    let g = cfg.control(&model)?;
    let mut w = csv::Writer::from_writer(c.create("results.csv")?);
    w.write_record(["check", "value", "pass"])?;
    let h1 = model.psi.check_h1(10_000, (-10.0, 10.0), cfg.seed)?;
    w.write_record(["psi_monotone_violation".into(), h1.monotone_violation.to_string(), h1.monotone.to_string()])?;
    w.write_record(["psi_lip_observed".into(), h1.lip_observed.to_string(), h1.lip_ok.to_string()])?;
    w.write_record([
        "psi_strong_monotone_slack".into(),
        h1.strong_monotone_slack.to_string(),
        (h1.strong_monotone_slack >= -1e-12).to_string(),
    ])?;
    w.write_record(["psi_at_zero".into(), h1.psi0.to_string(), (h1.psi0 == 0.0).to_string()])?;
    let h2 = check_h2(&model.jump, &model.marks, &model.op, model.horizon, 2000, cfg.seed)?;
    w.write_record(["f_lipschitz_slack".into(), h2.lipschitz_slack.to_string(), (h2.lipschitz_slack >= -1e-12).to_string()])?;
    w.write_record(["f_growth_fstar_slack".into(), h2.growth_fstar_slack.to_string(), (h2.growth_fstar_slack >= -1e-12).to_string()])?;
    w.write_record(["f_growth_l2_slack".into(), h2.growth_l2_slack.to_string(), (h2.growth_l2_slack >= -1e-12).to_string()])?;
    for (eps, slack) in &h2.eps_lipschitz_slack {
        w.write_record([format!("f_eps_lipschitz_slack_{eps}"), slack.to_string(), (*slack >= -1e-12).to_string()])?;
    }
    let q = q_cost(&g, &model.marks)?;
    w.write_record(["control_q".into(), q.to_string(), q.is_finite().to_string()])?;
    let budget = q.max(1.0);
    let tail = tail_compact(&model.marks, &model.jump, model.horizon, budget, 1e-2)?;
    w.write_record(["tail_compact_n".into(), tail.n.to_string(), (tail.value <= 1e-2).to_string()])?;
    let traj = solve_skeleton(&model, &g, &x0, &cfg.solver)?;
    let ap = apriori_report(&model, &traj, &g)?;
    w.write_record(["apriori_sup_l2_sq".into(), ap.sup_l2_sq.to_string(), ap.bound_ok.to_string()])?;
    w.write_record(["apriori_bound".into(), ap.bound.to_string(), ap.bound_ok.to_string()])?;
    w.flush()?;
    Ok(())
}

/// Minimal SVG line chart.
pub fn write_svg(path: &Path, xlabel: &str, ylabel: &str, pts: &[(f64, f64)]) -> Result<()> {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#)?;
    writeln!(f, r#"<rect width="{w}" height="{h}" fill="white"/>"#)?;
    if !pts.is_empty() {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in pts {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
        let line: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        writeln!(f, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, line.join(" "))?;
        writeln!(f, r#"<text x="{pad}" y="{}" font-size="12">{x0:.3}</text>"#, h - pad + 20.0)?;
        writeln!(f, r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{x1:.3}</text>"#, w - pad, h - pad + 20.0)?;
        writeln!(f, r#"<text x="5" y="{}" font-size="12">{y0:.3}</text>"#, h - pad)?;
        writeln!(f, r#"<text x="5" y="{}" font-size="12">{y1:.3}</text>"#, pad)?;
    }
    writeln!(
        f,
        r#"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad
    )?;
    writeln!(f, r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="black"/>"#, h - pad)?;
    writeln!(f, r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{xlabel}</text>"#, w / 2.0, h - 10.0)?;
    writeln!(f, r#"<text x="15" y="20" font-size="14">{ylabel}</text>"#)?;
    writeln!(f, "</svg>")?;
    f.flush()?;
    Ok(())
}
