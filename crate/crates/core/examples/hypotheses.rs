//! Sampled checks of the structural hypotheses on Psi and f, the compact
//! truncation of the mark space and the Young-type inequality.

use porous_ldp::*;

fn main() -> Result<()> {
    for psi in [PsiSpec::linear(2.0)?, PsiSpec::stefan(1.0, 3.0, 0.5)?, PsiSpec::tanh_saturating(1.5, 0.4)?] {
        let r = psi.check_h1(100_000, (-5.0, 5.0), 1)?;
        println!(
            "{:?}: lip {} observed {:.4}, monotone {}, strong-monotone slack {:.2e}",
            psi.kind(),
            psi.lip(),
            r.lip_observed,
            r.monotone,
            r.strong_monotone_slack
        );
    }

    let m = 30;
    let space = MarkSpace::new((0..m).map(|j| j as f64).collect(), vec![1.0; m])?;
    let op = OperatorSpec::laplacian(4)?;
    let sigma: Vec<f64> = (0..m).map(|j| 0.5f64.powi(j as i32)).collect();
    let eta = SpectralField::new(vec![1.0, 0.5, 0.0, -0.25])?;
    let fc = JumpCoefficient::new(&op, sigma, TimeProfile::Cosine { omega: 2.0 }, eta, 0.4)?;
    let h2 = check_h2(&fc, &space, &op, 1.0, 5000, 2)?;
    println!(
        "f: Lipschitz slack {:.3e}, F* growth slack {:.3e}, L2 growth slack {:.3e}, eps-norm slacks {:?}",
        h2.lipschitz_slack, h2.growth_fstar_slack, h2.growth_l2_slack, h2.eps_lipschitz_slack
    );
    for target in [1e-1, 1e-2, 1e-4] {
        let t = tail_compact(&space, &fc, 1.0, 2.0, target)?;
        println!("tail <= {target:e}: K_n with n = {}, certificate {:.3e}", t.n, t.value);
    }
    let y = young_bound(1.5, 4.0, 2.0)?;
    println!("ab = {} <= e^(sigma a) + l(b)/sigma = {:.4}", y.lhs, y.rhs);
    Ok(())
}
