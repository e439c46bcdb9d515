//! Linear Psi with zero control reduces to the heat equation; compare each
//! mode against `c_k(0) exp(-k^2 T)`.

use porous_ldp::*;

fn main() -> Result<()> {
    let op = OperatorSpec::laplacian(4)?;
    let jump = JumpCoefficient::zero(&op, 1)?;
    let marks = MarkSpace::new(vec![0.0], vec![1.0])?;
    let model = Model::new(op, PsiSpec::linear(1.0)?, jump, marks, 0.5)?;
    let x0 = SpectralField::new(vec![1.0, 0.5, 0.25, 0.125])?;

    for scheme in [TimeScheme::ExponentialEuler, TimeScheme::ImplicitEuler] {
        let cfg = SolverConfig {
            scheme,
            ..SolverConfig::with_steps(5000)
        };
        let traj = solve_skeleton(&model, &ControlGrid::ones(1, 1, 0.5)?, &x0, &cfg)?;
        println!("{scheme:?}");
        for (k, c) in traj.terminal().coeffs().iter().enumerate() {
            let lam = ((k + 1) * (k + 1)) as f64;
            let exact = x0.coeffs()[k] * (-lam * 0.5).exp();
            println!("  mode {}: {c:.10e}  exact {exact:.10e}  rel err {:.2e}", k + 1, (c - exact).abs() / exact);
        }
    }
    Ok(())
}
