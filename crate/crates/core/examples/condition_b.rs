//! Controlled stochastic equation against its skeleton:
//! `E sup_t ||X^phi - Y^phi||^2_F*` should shrink linearly in eps.

use porous_ldp::*;

fn main() -> Result<()> {
    let op = OperatorSpec::laplacian(4)?;
    let eta = SpectralField::new(vec![1.0, 0.5, 0.25, 0.125])?;
    let jump = JumpCoefficient::additive(&op, vec![1.0, 0.5], eta)?;
    let marks = MarkSpace::new(vec![0.0, 1.0], vec![1.0, 0.5])?;
    let model = Model::new(op, PsiSpec::stefan(1.0, 2.0, 0.2)?, jump, marks, 1.0)?;
    let x0 = SpectralField::new(vec![1.0, 0.3, -0.2, 0.1])?;
    let cfg = SolverConfig::with_steps(100);
    let family = |_eps: f64| {
        let phi = ControlGrid::from_fn(100, 2, 1.0, |t, _| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * t).sin())?;
        BoundedControl::new(phi, 2)
    };
    let rep = condition_b_experiment(&model, family, &[0.2, 0.1, 0.05, 0.025], 1000, &x0, &cfg, 7)?;
    porous_ldp::jumps::write_rows_csv(&rep.rows, std::io::stdout().lock())?;
    println!("log-log slope: {:.3}", rep.slope.unwrap_or(f64::NAN));
    Ok(())
}
