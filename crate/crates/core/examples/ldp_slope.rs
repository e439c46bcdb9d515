//! `eps log P(X^eps(T) >= c)` from plain Monte Carlo against `-I` from the
//! rate optimizer.

use porous_ldp::*;

fn main() -> Result<()> {
    let op = OperatorSpec::laplacian(1)?;
    let jump = JumpCoefficient::additive(&op, vec![1.0], SpectralField::new(vec![1.0])?)?;
    let marks = MarkSpace::new(vec![0.0], vec![1.0])?;
    let model = Model::new(op, PsiSpec::linear(1.0)?, jump, marks, 0.5)?;
    let x0 = SpectralField::zeros(1);
    let cfg = SolverConfig::with_steps(50);
    let event = EventSpec::new(Observable::TerminalMode(1), 0.5, Direction::AtLeast)?;

    let rate = minimize_rate(
        &event,
        &model,
        &x0,
        &cfg,
        &RateOptions {
            control_cells: Some(10),
            ..RateOptions::default()
        },
    )?;
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let rows = mc_rare_event(&event, &model, &x0, &cfg, &[0.2, 0.1, 0.05], trials, 1)?;
    porous_ldp::rate::write_mc_csv(&rows, std::io::stdout().lock())?;
    let rep = ldp_slope_compare(&rate, &rows)?;
    println!(
        "-I from the optimizer = {:.4}, extrapolated eps log P = {:.4}, relative gap = {:.3}",
        rep.minus_i, rep.extrapolated, rep.relative_gap
    );
    Ok(())
}
