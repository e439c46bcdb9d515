//! One path of the stochastic Stefan problem with multiplicative jumps,
//! next to the deterministic limit.

use porous_ldp::*;

fn main() -> Result<()> {
    let op = OperatorSpec::laplacian(6)?;
    let eta = SpectralField::new(vec![0.5, 0.0, 0.2, 0.0, 0.0, 0.0])?;
    let jump = JumpCoefficient::new(&op, vec![1.0, 0.5], TimeProfile::Cosine { omega: 4.0 }, eta, 0.3)?;
    let marks = MarkSpace::new(vec![0.0, 1.0], vec![1.0, 2.0])?;
    let model = Model::new(op.clone(), PsiSpec::stefan(1.0, 2.0, 0.2)?, jump, marks, 1.0)?;
    let x0 = SpectralField::new(vec![1.0, -0.3, 0.2, 0.0, 0.1, 0.0])?;
    let cfg = SolverConfig::with_steps(100);

    let limit = solve_skeleton(&model, &ControlGrid::ones(1, 2, 1.0)?, &x0, &cfg)?;
    for eps in [0.2, 0.05, 0.01] {
        let path = solve_spde(&model, eps, None, &x0, &cfg, RngSpec::new(17, 0))?;
        let d = path.trajectory.sup_distance(&limit, &op, Norm::F12Star)?;
        println!("eps = {eps:<5} jumps = {:<5} sup_t ||X - X^0||_F* = {d:.4}", path.jumps.len());
    }
    let path = solve_spde(&model, 0.05, None, &x0, &cfg, RngSpec::new(17, 0))?;
    path.trajectory.write_csv(std::io::stdout().lock())?;
    Ok(())
}
