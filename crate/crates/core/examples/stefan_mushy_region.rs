//! Two-phase Stefan problem: an initial enthalpy inside the mushy interval
//! `[0, rho]` has zero temperature and does not move, while a hot region
//! diffuses until it enters the interval.

use porous_ldp::*;

fn main() -> Result<()> {
    let op = OperatorSpec::laplacian(8)?;
    let psi = PsiSpec::stefan(1.0, 2.0, 0.5)?;
    let jump = JumpCoefficient::zero(&op, 1)?;
    let marks = MarkSpace::new(vec![0.0], vec![1.0])?;
    let model = Model::new(op.clone(), psi, jump, marks, 0.5)?;
    let cfg = SolverConfig::with_steps(200);
    let g = ControlGrid::ones(1, 1, 0.5)?;

    let frozen = SpectralField::new(vec![0.5, 0.0, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0])?;
    let traj = solve_skeleton(&model, &g, &frozen, &cfg)?;
    println!("frozen state moved by {:.3e} in F*", op.fstar(&traj.terminal().sub(&frozen))?);

    let hot = SpectralField::new(vec![2.0, 0.0, 0.5, 0.0, 0.2, 0.0, 0.0, 0.0])?;
    let traj = solve_skeleton(&model, &g, &hot, &cfg)?;
    let nodes = Collocation::new(&op, 16)?.nodes();
    let start = psi.temperature(&op, &hot, 16)?;
    let end = psi.temperature(&op, traj.terminal(), 16)?;
    println!("{:>8} {:>10} {:>10}", "xi", "theta(0)", "theta(T)");
    for ((x, a), b) in nodes.iter().zip(&start).zip(&end) {
        println!("{x:8.4} {a:10.4} {b:10.4}");
    }
    Ok(())
}
