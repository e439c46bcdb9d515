use porous_ldp::*;

fn l(r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else {
        r * r.ln() - r + 1.0
    }
}

struct Scalar {
    k0: f64,
    sigma: f64,
    nu: f64,
    eta: f64,
    x0: f64,
    horizon: f64,
}

impl Scalar {
    fn model(&self) -> Model {
        let op = OperatorSpec::laplacian(1).unwrap();
        let jump = JumpCoefficient::additive(&op, vec![self.sigma], SpectralField::new(vec![self.eta]).unwrap()).unwrap();
        let marks = MarkSpace::new(vec![0.0], vec![self.nu]).unwrap();
        Model::new(op, PsiSpec::linear(self.k0).unwrap(), jump, marks, self.horizon).unwrap()
    }

    /// Grid search over constant controls `g in [0, 10]`, step `1e-3`.
    fn oracle(&self, c: f64) -> f64 {
        let a = self.k0;
        let decay = (-a * self.horizon).exp();
        (0..=10_000)
            .map(|i| i as f64 * 1e-3)
            .filter(|g| self.x0 * decay + self.sigma * self.nu * (g - 1.0) * self.eta * (1.0 - decay) / a >= c)
            .map(|g| l(g) * self.nu * self.horizon)
            .fold(f64::INFINITY, f64::min)
    }
}

fn opts(cells: usize) -> RateOptions {
    RateOptions {
        n_starts: 2,
        control_cells: Some(cells),
        ..RateOptions::default()
    }
}

#[test]
fn constant_control_matches_grid_search() {
    let p = Scalar {
        k0: 2.0,
        sigma: 0.8,
        nu: 1.5,
        eta: 1.2,
        x0: 0.2,
        horizon: 1.0,
    };
    let model = p.model();
    let x0 = SpectralField::new(vec![p.x0]).unwrap();
    let cfg = SolverConfig::with_steps(40);
    for c in [0.3, 0.6] {
        let ev = EventSpec::new(Observable::TerminalMode(1), c, Direction::AtLeast).unwrap();
        let r = minimize_rate(&ev, &model, &x0, &cfg, &opts(1)).unwrap();
        let o = p.oracle(c);
        assert!(r.feasible);
        assert!((r.q_star - o).abs() <= 0.05 * o, "c = {c}: q_star {} vs oracle {o}", r.q_star);
    }
}

#[test]
fn lower_threshold_never_costs_more() {
    let p = Scalar {
        k0: 1.0,
        sigma: 1.0,
        nu: 1.0,
        eta: 1.0,
        x0: 0.0,
        horizon: 0.5,
    };
    let model = p.model();
    let x0 = SpectralField::zeros(1);
    let cfg = SolverConfig::with_steps(20);
    let q: Vec<f64> = [0.1, 0.2, 0.3, 0.4]
        .iter()
        .map(|c| {
            let ev = EventSpec::new(Observable::TerminalMode(1), *c, Direction::AtLeast).unwrap();
            minimize_rate(&ev, &model, &x0, &cfg, &opts(5)).unwrap().q_star
        })
        .collect();
    assert!(q.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-6)), "{q:?}");
}

#[test]
fn witness_reproduces_gap_and_cost() {
    let p = Scalar {
        k0: 1.0,
        sigma: 1.0,
        nu: 1.0,
        eta: 1.0,
        x0: 0.0,
        horizon: 0.5,
    };
    let model = p.model();
    let x0 = SpectralField::zeros(1);
    let cfg = SolverConfig::with_steps(20);
    let ev = EventSpec::new(Observable::PathSupFstar, 0.2, Direction::AtLeast).unwrap();
    let r = minimize_rate(&ev, &model, &x0, &cfg, &opts(4)).unwrap();
    assert!(r.feasible && r.gap >= 0.0);
    assert_eq!(r.q_star, q_cost(&r.g_star, &model.marks).unwrap());
    let traj = solve_skeleton(&model, &r.g_star, &x0, &cfg).unwrap();
    assert!((ev.violation(&model.op, &traj).unwrap() - r.gap).abs() <= 1e-9);
    let mut buf = Vec::new();
    r.write_g_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t_start,t_end,g1\n"));
    assert_eq!(text.lines().count(), 5);
}
