use porous_ldp::stats::{ks_test, linear_fit, mean_stderr};
use porous_ldp::*;

fn marks(weights: &[f64]) -> MarkSpace {
    MarkSpace::new((0..weights.len()).map(|j| j as f64).collect(), weights.to_vec()).unwrap()
}

#[test]
fn single_mark_interarrivals_are_exponential() {
    let space = marks(&[2.0]);
    let rate = 10.0 * 2.0;
    // one long stream, so censoring at T touches a single gap
    let s = sample_prm(&space, 600.0, 10.0, &mut RngSpec::new(21, 0).rng()).unwrap();
    let mut prev = 0.0;
    let mut gaps = Vec::with_capacity(s.len());
    for e in &s.events {
        gaps.push(e.time - prev);
        prev = e.time;
    }
    assert!(gaps.len() >= 10_000);
    gaps.truncate(10_000);
    let (_, p) = ks_test(&gaps, |x| 1.0 - (-rate * x).exp()).unwrap();
    assert!(p > 0.01, "KS p-value {p}");
}

fn mean_count(space: &MarkSpace, ctrl: &BoundedControl, seed: u64) -> f64 {
    let reps = 10_000u64;
    let total: usize = (0..reps)
        .map(|i| sample_controlled_prm(space, 1.0, 0.1, ctrl, &mut RngSpec::new(seed, i).rng()).unwrap().len())
        .sum();
    total as f64 / reps as f64
}

#[test]
fn thinning_scales_counts() {
    let space = marks(&[1.0]);
    let base = 10.0;
    let three_sigma = |mean: f64| 3.0 * (mean / 10_000.0).sqrt();

    let null = BoundedControl::null(4, 1, 1.0).unwrap();
    assert!((mean_count(&space, &null, 1) - base).abs() <= three_sigma(base));

    let double = BoundedControl::new(ControlGrid::constant(4, 1, 1.0, 2.0).unwrap(), 2).unwrap();
    assert!((mean_count(&space, &double, 2) - 2.0 * base).abs() <= three_sigma(2.0 * base));

    let n = 4;
    let low = BoundedControl::new(ControlGrid::constant(4, 1, 1.0, 1.0 / n as f64).unwrap(), n).unwrap();
    assert!((mean_count(&space, &low, 3) - base / n as f64).abs() <= three_sigma(base / n as f64));
}

#[test]
fn control_above_bound_is_rejected() {
    let phi = ControlGrid::constant(2, 1, 1.0, 2.5).unwrap();
    assert!(matches!(BoundedControl::new(phi, 2), Err(Error::PreconditionViolation(_))));
}

#[test]
fn terminal_variance_is_linear_in_eps() {
    let op = OperatorSpec::laplacian(2).unwrap();
    let jump = JumpCoefficient::additive(&op, vec![1.0], SpectralField::new(vec![1.0, 0.5]).unwrap()).unwrap();
    let model = Model::new(op, PsiSpec::linear(1.0).unwrap(), jump, marks(&[1.0]), 1.0).unwrap();
    let x0 = SpectralField::new(vec![0.5, 0.0]).unwrap();
    let cfg = SolverConfig::with_steps(20);
    let ladder = [0.2, 0.1, 0.05];
    let mut logs = Vec::new();
    for (i, eps) in ladder.iter().enumerate() {
        let xs: Vec<f64> = (0..4000u64)
            .map(|k| {
                let p = solve_spde(&model, *eps, None, &x0, &cfg, RngSpec::new(31 + i as u64, k)).unwrap();
                p.trajectory.terminal().coeffs()[0]
            })
            .collect();
        let (_, se) = mean_stderr(&xs);
        let var = se * se * xs.len() as f64;
        logs.push(var.ln());
    }
    let xs: Vec<f64> = ladder.iter().map(|e| e.ln()).collect();
    let (slope, _) = linear_fit(&xs, &logs);
    assert!((slope - 1.0).abs() <= 0.3, "slope {slope}");
}

#[test]
fn replay_identity_with_state_dependent_jumps() {
    let op = OperatorSpec::laplacian(3).unwrap();
    let eta = SpectralField::new(vec![0.5, 0.0, 0.2]).unwrap();
    let jump = JumpCoefficient::new(&op, vec![1.0, 0.4], TimeProfile::Cosine { omega: 2.0 }, eta, 0.7).unwrap();
    let model = Model::new(op, PsiSpec::stefan(1.0, 2.0, 0.3).unwrap(), jump, marks(&[1.0, 2.0]), 1.0).unwrap();
    let x0 = SpectralField::new(vec![1.0, -0.3, 0.2]).unwrap();
    let cfg = SolverConfig::with_steps(25);
    let eps = 0.1;
    let stream = sample_prm(&model.marks, 1.0, 1.0 / eps, &mut RngSpec::new(4, 4).rng()).unwrap();
    let path = solve_spde_on_stream(&model, eps, &stream, &x0, &cfg).unwrap();
    assert_eq!(path.jumps.len(), stream.len());
    let times: Vec<f64> = path.jumps.iter().map(|j| j.time).collect();
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    // rerunning on the same stream reproduces every increment
    let again = solve_spde_on_stream(&model, eps, &stream, &x0, &cfg).unwrap();
    assert_eq!(again.jumps, path.jumps);
    let mut total = SpectralField::zeros(3);
    let mut expected_total = SpectralField::zeros(3);
    for j in &path.jumps {
        let f = model.jump.eval_f(j.time, &j.left_limit, j.mark).unwrap();
        assert_eq!(j.increment, f.scaled(eps));
        total = total.add(&j.increment);
        expected_total = expected_total.axpy(eps, &f);
    }
    for (a, b) in total.coeffs().iter().zip(expected_total.coeffs()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
    // left limits differ from the previous post-jump state by a deterministic flow
    for w in path.jumps.windows(2) {
        assert_ne!(w[1].left_limit, w[0].left_limit.add(&w[0].increment));
    }
}

#[test]
fn jump_stream_csv() {
    let s = sample_prm(&marks(&[1.0]), 1.0, 5.0, &mut RngSpec::new(1, 2).rng()).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,mark\n"));
    assert_eq!(text.lines().count(), s.len() + 1);
}
