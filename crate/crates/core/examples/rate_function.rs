//! Cheapest control pushing the first mode above a threshold at time T,
//! compared with the closed-form optimum over constant controls.

use porous_ldp::*;

fn main() -> Result<()> {
    let op = OperatorSpec::laplacian(1)?;
    let jump = JumpCoefficient::additive(&op, vec![1.0], SpectralField::new(vec![1.0])?)?;
    let marks = MarkSpace::new(vec![0.0], vec![1.0])?;
    let horizon = 0.5;
    let model = Model::new(op, PsiSpec::linear(1.0)?, jump, marks, horizon)?;
    let x0 = SpectralField::zeros(1);
    let cfg = SolverConfig::with_steps(50);

    for c in [0.2, 0.5] {
        let event = EventSpec::new(Observable::TerminalMode(1), c, Direction::AtLeast)?;
        for cells in [1, 10] {
            let opts = RateOptions {
                control_cells: Some(cells),
                ..RateOptions::default()
            };
            let r = minimize_rate(&event, &model, &x0, &cfg, &opts)?;
            println!("c = {c}, {cells:>2} cells: q_star = {:.5}, gap = {:.2e}", r.q_star, r.gap);
            if cells == 10 {
                r.write_g_csv(std::io::stdout().lock())?;
            }
        }
        // constant control reaching c exactly
        let decay = 1.0 - (-horizon).exp();
        let g = 1.0 + c / decay;
        println!("c = {c}, closed-form constant optimum: {:.5}", entropy_l(g)? * horizon);
    }
    Ok(())
}
