//! Ordinary and controlled Poisson random measures; thinning with a
//! time-varying control.

use porous_ldp::*;

fn main() -> Result<()> {
    let space = MarkSpace::new(vec![0.0, 1.0], vec![1.0, 0.5])?;
    let eps = 0.05;
    let reps = 2000u64;

    let plain: Vec<u64> = (0..reps)
        .map(|i| sample_prm(&space, 1.0, 1.0 / eps, &mut RngSpec::new(1, i).rng()).map(|s| s.len() as u64))
        .collect::<Result<_>>()?;
    let mean = plain.iter().sum::<u64>() as f64 / reps as f64;
    println!("plain: mean count {mean:.2}, expected {:.2}", space.total_mass() / eps);

    // phi oscillates in [0.5, 1.5] on the first mark and is 1 on the second
    let phi = ControlGrid::from_fn(50, 2, 1.0, |t, j| if j == 0 { 1.0 + 0.5 * (6.0 * t).sin() } else { 1.0 })?;
    let expected: f64 = {
        let q: f64 = (0..50).map(|i| phi.value(i, 0) * phi.dt()).sum();
        (q * 1.0 + 0.5) / eps
    };
    let ctrl = BoundedControl::new(phi, 2)?;
    let thinned: Vec<u64> = (0..reps)
        .map(|i| sample_controlled_prm(&space, 1.0, eps, &ctrl, &mut RngSpec::new(2, i).rng()).map(|s| s.len() as u64))
        .collect::<Result<_>>()?;
    let mean = thinned.iter().sum::<u64>() as f64 / reps as f64;
    println!("controlled: mean count {mean:.2}, expected {expected:.2}");

    let one = sample_controlled_prm(&space, 1.0, eps, &ctrl, &mut RngSpec::new(3, 0).rng())?;
    one.write_csv(std::io::stdout().lock())?;
    Ok(())
}
