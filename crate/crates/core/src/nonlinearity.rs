//! Monotone Lipschitz nonlinearities `Psi` and their pseudo-spectral action.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Basis, Collocation, OperatorSpec, SpectralField};

/// Built-in families. All satisfy `Psi(0) = 0` and are nondecreasing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiKind {
    /// `Psi(r) = k0 r`.
    Linear { k0: f64 },
    /// Two-phase Stefan enthalpy inverse: `a r` below 0, zero on the mushy
    /// interval `[0, rho]`, `b (r - rho)` above `rho`.
    Stefan { a: f64, b: f64, rho: f64 },
    /// `Psi(r) = k0 s tanh(r / s)`.
    TanhSaturating { k0: f64, s: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiSpec {
    kind: PsiKind,
    lip: f64,
    alpha_tilde: f64,
}

impl PsiSpec {
    /// Validates the parameters and certifies the Lipschitz constant
    /// analytically.
    pub fn new(kind: PsiKind) -> Result<Self> {
        let lip = match kind {
            PsiKind::Linear { k0 } => {
                if !(k0 >= 0.0 && k0.is_finite()) {
                    return Err(Error::InvalidParameter(format!("linear slope {k0} must be >= 0")));
                }
                k0
            }
            PsiKind::Stefan { a, b, rho } => {
                if !(a > 0.0 && b > 0.0 && rho > 0.0) || !(a.is_finite() && b.is_finite() && rho.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "Stefan parameters must be positive (a = {a}, b = {b}, rho = {rho})"
                    )));
                }
                a.max(b)
            }
            PsiKind::TanhSaturating { k0, s } => {
                if !(k0 >= 0.0 && k0.is_finite() && s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "tanh parameters need k0 >= 0 and s > 0 (k0 = {k0}, s = {s})"
                    )));
                }
                k0
            }
        };
        Ok(Self {
            kind,
            lip,
            alpha_tilde: 1.0 / (lip + 1.0),
        })
    }

    pub fn linear(k0: f64) -> Result<Self> {
        Self::new(PsiKind::Linear { k0 })
    }

    pub fn stefan(a: f64, b: f64, rho: f64) -> Result<Self> {
        Self::new(PsiKind::Stefan { a, b, rho })
    }

    pub fn tanh_saturating(k0: f64, s: f64) -> Result<Self> {
        Self::new(PsiKind::TanhSaturating { k0, s })
    }

    pub fn kind(&self) -> PsiKind {
        self.kind
    }

    /// Certified Lipschitz constant `k`.
    pub fn lip(&self) -> f64 {
        self.lip
    }

    /// `(k + 1)^{-1}`.
    pub fn alpha_tilde(&self) -> f64 {
        self.alpha_tilde
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, PsiKind::Linear { .. })
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match self.kind {
            PsiKind::Linear { k0 } => k0 * r,
            PsiKind::Stefan { a, b, rho } => {
                if r < 0.0 {
                    a * r
                } else if r <= rho {
                    0.0
                } else {
                    b * (r - rho)
                }
            }
            PsiKind::TanhSaturating { k0, s } => k0 * s * (r / s).tanh(),
        }
    }

    /// Nemytskii action `Psi(u)` projected back onto the modes of `op`.
    pub fn apply(&self, op: &OperatorSpec, u: &SpectralField, points: usize) -> Result<SpectralField> {
        if u.len() != op.dim() {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                found: u.len(),
            });
        }
        if let PsiKind::Linear { k0 } = self.kind {
            return Ok(u.scaled(k0));
        }
        if op.basis() == Basis::Abstract {
            return Err(Error::UnsupportedCombination(
                "nonlinear Psi needs pointwise evaluation, unavailable in the abstract basis".into(),
            ));
        }
        let grid = Collocation::new(op, points)?;
        let values: Vec<f64> = grid.to_grid(u)?.into_iter().map(|r| self.eval(r)).collect();
        grid.from_grid(&values)
    }

    /// Temperature `theta = Psi(X)` at the collocation nodes.
    pub fn temperature(&self, op: &OperatorSpec, u: &SpectralField, points: usize) -> Result<Vec<f64>> {
        Ok(Collocation::new(op, points)?
            .to_grid(u)?
            .into_iter()
            .map(|r| self.eval(r))
            .collect())
    }

    pub fn check_h1(&self, n_samples: usize, range: (f64, f64), seed: u64) -> Result<H1Report> {
        check_h1_fn(|r| self.eval(r), self.lip, n_samples, range, seed)
    }
}

/// Shorthand for [`PsiSpec::apply`].
pub fn apply_psi(psi: &PsiSpec, op: &OperatorSpec, u: &SpectralField, points: usize) -> Result<SpectralField> {
    psi.apply(op, u, points)
}

/// Sampled diagnostics for monotonicity and the Lipschitz bound.
#[derive(Clone, Debug, PartialEq)]
pub struct H1Report {
    pub monotone: bool,
    /// Largest observed `-(Psi(r) - Psi(r'))(r - r')`, zero when monotone.
    pub monotone_violation: f64,
    pub lip_observed: f64,
    pub lip_ok: bool,
    pub psi0: f64,
    /// Smallest `(dPsi)(dr) - alpha_tilde |dPsi|^2` over the samples.
    pub strong_monotone_slack: f64,
}

/// Samples `n_samples` random pairs on `range` and reports the worst
/// observations against the claimed Lipschitz constant `lip`.
pub fn check_h1_fn<F>(psi: F, lip: f64, n_samples: usize, range: (f64, f64), seed: u64) -> Result<H1Report>
where
    F: Fn(f64) -> f64,
{
    if n_samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let (lo, hi) = range;
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("empty sampling range [{lo}, {hi}]")));
    }
    let alpha_tilde = 1.0 / (lip + 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_mono = 0.0f64;
    let mut lip_obs = 0.0f64;
    let mut slack = f64::INFINITY;
    for _ in 0..n_samples {
        let r = rng.random_range(lo..hi);
        let s = rng.random_range(lo..hi);
        let dr = r - s;
        let dp = psi(r) - psi(s);
        worst_mono = worst_mono.max(-(dp * dr));
        if dr != 0.0 {
            lip_obs = lip_obs.max((dp / dr).abs());
        }
        slack = slack.min(dp * dr - alpha_tilde * dp * dp);
    }
    Ok(H1Report {
        monotone: worst_mono <= 0.0,
        monotone_violation: worst_mono,
        lip_observed: lip_obs,
        lip_ok: lip_obs <= lip + 1e-9,
        psi0: psi(0.0),
        strong_monotone_slack: slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stefan_piecewise_values() {
        let p = PsiSpec::stefan(2.0, 3.0, 1.0).unwrap();
        assert_eq!(p.eval(0.5), 0.0);
        assert_eq!(p.eval(-1.0), -2.0);
        assert_eq!(p.eval(2.0), 3.0);
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.lip(), 3.0);
    }

    #[test]
    fn linear_identity() {
        let p = PsiSpec::linear(1.0).unwrap();
        assert_eq!(p.eval(0.7), 0.7);
        assert_eq!(p.alpha_tilde(), 0.5);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(PsiSpec::stefan(0.0, 1.0, 1.0).is_err());
        assert!(PsiSpec::stefan(1.0, 1.0, -1.0).is_err());
        assert!(PsiSpec::linear(-1.0).is_err());
        assert!(PsiSpec::tanh_saturating(1.0, 0.0).is_err());
    }

    #[test]
    fn apply_linear_scales() {
        let op = OperatorSpec::laplacian(3).unwrap();
        let u = SpectralField::new(vec![0.5, -1.0, 2.0]).unwrap();
        let p = PsiSpec::linear(2.0).unwrap();
        assert_eq!(p.apply(&op, &u, 6).unwrap().coeffs(), &[1.0, -2.0, 4.0]);
        // linear also works in an abstract basis
        let ex = OperatorSpec::explicit(vec![1.0, 3.0, 5.0]).unwrap();
        assert_eq!(p.apply(&ex, &u, 6).unwrap().coeffs(), &[1.0, -2.0, 4.0]);
    }

    #[test]
    fn apply_nonlinear_abstract_is_unsupported() {
        let ex = OperatorSpec::explicit(vec![1.0, 3.0]).unwrap();
        let p = PsiSpec::stefan(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            p.apply(&ex, &SpectralField::zeros(2), 4),
            Err(Error::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn stefan_flat_region_gives_zero_field() {
        let op = OperatorSpec::laplacian(4).unwrap();
        let p = PsiSpec::stefan(1.0, 1.0, 10.0).unwrap();
        let u = SpectralField::new(vec![3.0, 0.5, 0.2, 0.0]).unwrap();
        let grid = crate::spectral::to_grid(&op, &u, 8).unwrap();
        assert!(grid.iter().all(|v| (0.0..=10.0).contains(v)));
        assert!(p.apply(&op, &u, 8).unwrap().coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn stefan_on_constant_grid_value() {
        let p = PsiSpec::stefan(2.0, 3.0, 1.0).unwrap();
        assert!([2.0; 16].iter().map(|r| p.eval(*r)).all(|v| v == 3.0));
        // a field whose nodal values all exceed rho sees the affine branch only
        let op = OperatorSpec::laplacian(1).unwrap();
        let u = SpectralField::new(vec![4.0]).unwrap();
        let theta = p.temperature(&op, &u, 2).unwrap();
        let nodal = crate::spectral::to_grid(&op, &u, 2).unwrap();
        for (t, r) in theta.iter().zip(&nodal) {
            assert!(*r > 1.0);
            assert!((t - 3.0 * (r - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn h1_reports() {
        let lin = PsiSpec::linear(1.0).unwrap().check_h1(1000, (-5.0, 5.0), 1).unwrap();
        assert!(lin.monotone);
        assert!((lin.lip_observed - 1.0).abs() < 1e-9);
        let st = PsiSpec::stefan(2.0, 3.0, 1.0).unwrap().check_h1(1000, (-5.0, 5.0), 2).unwrap();
        assert!(st.monotone && st.lip_ok && st.lip_observed <= 3.0 + 1e-9);
        assert_eq!(st.psi0, 0.0);
        let broken = check_h1_fn(|r| -r, 1.0, 1000, (-5.0, 5.0), 3).unwrap();
        assert!(!broken.monotone);
        assert!(check_h1_fn(|r| r, 1.0, 1, (-1.0, 1.0), 0).is_err());
    }
}
