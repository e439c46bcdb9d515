//! Weakly converging controls: `1 + sin(2 pi n t / T)` tends to 1 weakly, and
//! the skeleton solutions converge uniformly in `F*`.

use porous_ldp::*;

fn main() -> Result<()> {
    let op = OperatorSpec::laplacian(4)?;
    let eta = SpectralField::new(vec![0.5, 0.25, 0.0, 0.0])?;
    let jump = JumpCoefficient::new(&op, vec![1.0, 0.5], TimeProfile::Constant, eta, 0.3)?;
    let marks = MarkSpace::new(vec![0.0, 1.0], vec![1.0, 1.0])?;
    let model = Model::new(op, PsiSpec::stefan(1.0, 2.0, 0.2)?, jump, marks.clone(), 1.0)?;
    let x0 = SpectralField::new(vec![1.0, -0.4, 0.3, 0.1])?;
    let cells = 1280;
    let cfg = SolverConfig::with_steps(cells);

    let freqs = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    let seq: Vec<ControlGrid> = freqs
        .iter()
        .map(|n| ControlGrid::oscillating(cells, 2, 1.0, *n, 1.0))
        .collect::<Result<_>>()?;
    let rep = continuity_experiment(&model, &seq, &ControlGrid::ones(cells, 2, 1.0)?, &x0, &cfg)?;
    for ((n, g), d) in freqs.iter().zip(&seq).zip(&rep.distances) {
        println!("n = {n:>4}  Q(g_n) = {:.4}  sup ||X^g_n - X^1||_F* = {d:.4e}", q_cost(g, &marks)?);
    }
    println!("strictly decreasing: {}", rep.strictly_decreasing);
    Ok(())
}
