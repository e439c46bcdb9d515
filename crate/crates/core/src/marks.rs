//! Finite mark space `(Z, nu)`, the affine jump coefficient
//! `f(t, x, z) = sigma(z) beta(t) (c x + eta)` and its bound functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::ControlGrid;
use crate::error::{Error, Result};
use crate::spectral::{Norm, OperatorSpec, SpectralField};

/// Weighted mark points. The compact `K_n` is the prefix of the first `n`
/// marks.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkSpace {
    marks: Vec<f64>,
    weights: Vec<f64>,
}

impl MarkSpace {
    pub fn new(marks: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if marks.is_empty() {
            return Err(Error::InvalidParameter("mark space needs at least one mark".into()));
        }
        if marks.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: marks.len(),
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!("mark weight {w} must be positive and finite")));
        }
        Ok(Self { marks, weights })
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `nu(Z)`.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Time profile `beta(t)` of the jump amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Constant,
    /// `cos(omega t)`.
    Cosine { omega: f64 },
}

impl TimeProfile {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Cosine { omega } => (omega * t).cos(),
        }
    }

    /// `sup_t |beta(t)|`.
    pub fn sup_abs(&self) -> f64 {
        1.0
    }
}

/// Which of the three bound functions of the jump coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    /// Lipschitz constant in `F*_{1,2}`.
    L1,
    /// Linear growth in `F*_{1,2}`.
    L2,
    /// Linear growth in `L^2`.
    L3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpCoefficient {
    sigma: Vec<f64>,
    beta: TimeProfile,
    eta: SpectralField,
    gain: f64,
    // max(|c|, ||eta||_{F*}, |eta|_2, 1)
    growth: f64,
}

impl JumpCoefficient {
    pub fn new(op: &OperatorSpec, sigma: Vec<f64>, beta: TimeProfile, eta: SpectralField, gain: f64) -> Result<Self> {
        if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::InvalidParameter(format!("mark amplitude {s} must be finite and >= 0")));
        }
        if !gain.is_finite() {
            return Err(Error::InvalidParameter("multiplicative gain must be finite".into()));
        }
        if !eta.is_finite() {
            return Err(Error::InvalidParameter("eta must be finite".into()));
        }
        let growth = gain
            .abs()
            .max(op.fstar(&eta)?)
            .max(op.norm(&eta, Norm::L2)?)
            .max(1.0);
        Ok(Self {
            sigma,
            beta,
            eta,
            gain,
            growth,
        })
    }

    /// Additive noise `f = sigma(z) beta(t) eta`.
    pub fn additive(op: &OperatorSpec, sigma: Vec<f64>, eta: SpectralField) -> Result<Self> {
        Self::new(op, sigma, TimeProfile::Constant, eta, 0.0)
    }

    /// `f = 0`.
    pub fn zero(op: &OperatorSpec, marks: usize) -> Result<Self> {
        Self::new(op, vec![0.0; marks], TimeProfile::Constant, SpectralField::zeros(op.dim()), 0.0)
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn beta(&self) -> TimeProfile {
        self.beta
    }

    pub fn eta(&self) -> &SpectralField {
        &self.eta
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.iter().all(|s| *s == 0.0)
    }

    pub(crate) fn check_space(&self, space: &MarkSpace) -> Result<()> {
        if self.sigma.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: self.sigma.len(),
            });
        }
        Ok(())
    }

    /// `c x + eta`, the mark- and time-independent part of `f`.
    pub(crate) fn shape(&self, x: &SpectralField) -> SpectralField {
        self.eta.axpy(self.gain, x)
    }

    pub fn eval_f(&self, t: f64, x: &SpectralField, z: usize) -> Result<SpectralField> {
        let s = *self.sigma.get(z).ok_or(Error::IndexOutOfRange {
            index: z,
            len: self.sigma.len(),
        })?;
        if x.len() != self.eta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.eta.len(),
                found: x.len(),
            });
        }
        Ok(self.shape(x).scaled(s * self.beta.eval(t)))
    }

    pub fn bound(&self, which: Bound, t: f64, z: usize) -> f64 {
        let amp = self.sigma[z] * self.beta.eval(t).abs();
        match which {
            Bound::L1 => self.gain.abs() * amp,
            Bound::L2 | Bound::L3 => self.growth * amp,
        }
    }

    /// `sup_t` of the bound, used by the tail certificates.
    pub(crate) fn bound_sup(&self, which: Bound, z: usize) -> f64 {
        let amp = self.sigma[z] * self.beta.sup_abs();
        match which {
            Bound::L1 => self.gain.abs() * amp,
            Bound::L2 | Bound::L3 => self.growth * amp,
        }
    }

    /// `sum_j sigma_j nu_j w_j` for per-mark weights `w`; the integrated
    /// drift is `beta(t)` times this scalar times `c x + eta`.
    pub(crate) fn weighted_gain(&self, space: &MarkSpace, w: impl Fn(usize) -> f64) -> f64 {
        self.sigma
            .iter()
            .zip(space.weights())
            .enumerate()
            .map(|(j, (s, nu))| s * nu * w(j))
            .sum()
    }
}

/// Worst observed slack (bound minus left side) for each hypothesis on the
/// jump coefficient. Nonnegative slack means the bound held on every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct H2Report {
    pub lipschitz_slack: f64,
    pub growth_fstar_slack: f64,
    pub growth_l2_slack: f64,
    /// `(eps, slack)` of the eps-norm Lipschitz bound with constant `l1 / sqrt(eps)`.
    pub eps_lipschitz_slack: Vec<(f64, f64)>,
    pub samples: usize,
}

impl H2Report {
    pub fn holds(&self, tol: f64) -> bool {
        self.lipschitz_slack >= -tol
            && self.growth_fstar_slack >= -tol
            && self.growth_l2_slack >= -tol
            && self.eps_lipschitz_slack.iter().all(|(_, s)| *s >= -tol)
    }
}

pub fn check_h2(
    fc: &JumpCoefficient,
    space: &MarkSpace,
    op: &OperatorSpec,
    horizon: f64,
    n_samples: usize,
    seed: u64,
) -> Result<H2Report> {
    fc.check_space(space)?;
    const EPS: [f64; 3] = [0.1, 0.5, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = op.dim();
    let mut rep = H2Report {
        lipschitz_slack: f64::INFINITY,
        growth_fstar_slack: f64::INFINITY,
        growth_l2_slack: f64::INFINITY,
        eps_lipschitz_slack: EPS.iter().map(|e| (*e, f64::INFINITY)).collect(),
        samples: n_samples,
    };
    let draw = |rng: &mut ChaCha8Rng| {
        SpectralField::from_raw((0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
    };
    for _ in 0..n_samples {
        let t = rng.random_range(0.0..=horizon);
        let z = rng.random_range(0..space.len());
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let fx = fc.eval_f(t, &x, z)?;
        let fy = fc.eval_f(t, &y, z)?;
        let dfx = fx.sub(&fy);
        let dxy = x.sub(&y);
        let l1 = fc.bound(Bound::L1, t, z);
        let l2 = fc.bound(Bound::L2, t, z);
        let l3 = fc.bound(Bound::L3, t, z);
        rep.lipschitz_slack = rep
            .lipschitz_slack
            .min(l1 * op.fstar(&dxy)? - op.fstar(&dfx)?);
        rep.growth_fstar_slack = rep
            .growth_fstar_slack
            .min(l2 * (op.fstar(&x)? + 1.0) - op.fstar(&fx)?);
        rep.growth_l2_slack = rep
            .growth_l2_slack
            .min(l3 * (op.norm(&x, Norm::L2)? + 1.0) - op.norm(&fx, Norm::L2)?);
        for (eps, slack) in rep.eps_lipschitz_slack.iter_mut() {
            let n = Norm::F12StarEps(*eps);
            let s = l1 / eps.sqrt() * op.norm(&dxy, n)? - op.norm(&dfx, n)?;
            *slack = slack.min(s);
        }
    }
    Ok(rep)
}

/// Compact prefix `K_n` and its tail certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailCertificate {
    pub n: usize,
    pub value: f64,
}

/// Upper bound, uniform over `h` in `S^N`, on
/// `max_i int_0^T int_{K_n^c} l_i |h - 1| dnu ds`.
///
/// Uses `|h - 1| <= h + 1` and, for the `h` part, the Fenchel pair of the
/// entropy `a b <= (e^{s a} - 1)/s + l(b)/s`, minimized over a fixed
/// logarithmic ladder of `s`; the certificate is therefore nonincreasing in
/// `n`.
pub fn tail_certificate(space: &MarkSpace, fc: &JumpCoefficient, horizon: f64, budget: f64, n: usize) -> Result<f64> {
    fc.check_space(space)?;
    if n > space.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            len: space.len(),
        });
    }
    let mut worst = 0.0f64;
    for which in [Bound::L1, Bound::L2, Bound::L3] {
        let tail: Vec<(f64, f64)> = (n..space.len())
            .map(|j| (fc.bound_sup(which, j), space.weights()[j]))
            .collect();
        if tail.iter().all(|(l, _)| *l == 0.0) {
            continue;
        }
        let linear: f64 = tail.iter().map(|(l, w)| l * w).sum::<f64>() * horizon;
        let mut best = f64::INFINITY;
        for step in -40..=120 {
            let s = 10f64.powf(step as f64 / 10.0);
            let exp_part: f64 = tail.iter().map(|(l, w)| (s * l).exp_m1() * w).sum::<f64>() * horizon;
            let v = (exp_part + budget) / s;
            if v < best {
                best = v;
            }
        }
        worst = worst.max(linear + best);
    }
    Ok(worst)
}

/// Smallest `n >= 1` whose tail certificate is at most `eps_tail`.
pub fn tail_compact(space: &MarkSpace, fc: &JumpCoefficient, horizon: f64, budget: f64, eps_tail: f64) -> Result<TailCertificate> {
    if !(eps_tail > 0.0) {
        return Err(Error::InvalidParameter(format!("eps_tail = {eps_tail} must be positive")));
    }
    if !(budget >= 0.0) {
        return Err(Error::InvalidParameter(format!("budget N = {budget} must be nonnegative")));
    }
    let mut best = f64::INFINITY;
    for n in 1..=space.len() {
        let value = tail_certificate(space, fc, horizon, budget, n)?;
        if value <= eps_tail {
            return Ok(TailCertificate { n, value });
        }
        best = best.min(value);
    }
    Err(Error::InfeasibleTruncation { eps_tail, best })
}

/// `h_i(t) = sum_j l_i(t, z_j) |g(t, z_j) - 1| nu_j` on time cell `cell`,
/// evaluated at the cell midpoint.
pub fn aggregate_h(which: Bound, fc: &JumpCoefficient, space: &MarkSpace, g: &ControlGrid, cell: usize) -> Result<f64> {
    fc.check_space(space)?;
    g.check_marks(space)?;
    if cell >= g.n_cells() {
        return Err(Error::IndexOutOfRange {
            index: cell,
            len: g.n_cells(),
        });
    }
    let t = (cell as f64 + 0.5) * g.dt();
    Ok(g
        .row(cell)
        .iter()
        .zip(space.weights())
        .enumerate()
        .map(|(j, (v, w))| fc.bound(which, t, j) * (v - 1.0).abs() * w)
        .sum())
}

/// `int_0^T h_i(s) ds` on the control's own grid (midpoint rule).
pub fn integrated_h(which: Bound, fc: &JumpCoefficient, space: &MarkSpace, g: &ControlGrid) -> Result<f64> {
    let mut total = 0.0;
    for cell in 0..g.n_cells() {
        total += aggregate_h(which, fc, space, g, cell)?;
    }
    Ok(total * g.dt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap(k: usize) -> OperatorSpec {
        OperatorSpec::laplacian(k).unwrap()
    }

    #[test]
    fn eval_f_examples() {
        let op = lap(2);
        let eta = SpectralField::new(vec![0.5, -0.25]).unwrap();
        let add = JumpCoefficient::additive(&op, vec![2.0], eta.clone()).unwrap();
        let x = SpectralField::new(vec![3.0, 1.0]).unwrap();
        assert_eq!(add.eval_f(0.3, &x, 0).unwrap(), eta.scaled(2.0));
        assert_eq!(add.eval_f(0.3, &SpectralField::zeros(2), 0).unwrap(), eta.scaled(2.0));

        let zero = JumpCoefficient::new(&op, vec![1.0], TimeProfile::Constant, SpectralField::zeros(2), 1.0).unwrap();
        assert_eq!(zero.eval_f(0.0, &SpectralField::zeros(2), 0).unwrap(), SpectralField::zeros(2));
        let e1 = SpectralField::unit(2, 0, 1.0);
        assert_eq!(zero.eval_f(0.0, &e1, 0).unwrap(), e1);
        assert!(matches!(zero.eval_f(0.0, &e1, 1), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn h2_holds_for_affine_families() {
        let op = lap(4);
        let ms = MarkSpace::new(vec![0.1, 0.2, 0.3], vec![1.0, 0.5, 0.25]).unwrap();
        let eta = SpectralField::new(vec![1.0, 0.5, 0.25, 0.1]).unwrap();
        let add = JumpCoefficient::additive(&op, vec![1.0, 0.5, 0.2], eta.clone()).unwrap();
        let rep = check_h2(&add, &ms, &op, 1.0, 500, 3).unwrap();
        assert!(rep.holds(1e-12));
        // l1 = 0: both sides of the Lipschitz bound vanish exactly
        assert_eq!(rep.lipschitz_slack, 0.0);

        let mult = JumpCoefficient::new(&op, vec![1.0, 0.5, 0.2], TimeProfile::Cosine { omega: 3.0 }, eta, -1.5).unwrap();
        let rep = check_h2(&mult, &ms, &op, 1.0, 2000, 4).unwrap();
        assert!(rep.holds(1e-12), "{rep:?}");
        // eps = 1 coincides with the plain Lipschitz bound
        let (eps, s1) = rep.eps_lipschitz_slack[2];
        assert_eq!(eps, 1.0);
        assert!(s1 >= -1e-12);
    }

    #[test]
    fn lipschitz_bound_is_tight_on_single_modes() {
        let op = lap(3);
        let fc = JumpCoefficient::new(&op, vec![0.7], TimeProfile::Constant, SpectralField::zeros(3), 2.0).unwrap();
        for k in 0..3 {
            let x = SpectralField::unit(3, k, 1.3);
            let y = SpectralField::zeros(3);
            let lhs = op.fstar(&fc.eval_f(0.0, &x, 0).unwrap().sub(&fc.eval_f(0.0, &y, 0).unwrap())).unwrap();
            let rhs = fc.bound(Bound::L1, 0.0, 0) * op.fstar(&x.sub(&y)).unwrap();
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn aggregate_examples() {
        let op = lap(1);
        let ms = MarkSpace::new(vec![0.0], vec![1.0]).unwrap();
        let fc = JumpCoefficient::new(&op, vec![1.0], TimeProfile::Constant, SpectralField::zeros(1), 1.0).unwrap();
        let ones = ControlGrid::ones(4, 1, 1.0).unwrap();
        assert_eq!(aggregate_h(Bound::L1, &fc, &ms, &ones, 0).unwrap(), 0.0);
        let twos = ControlGrid::constant(4, 1, 1.0, 2.0).unwrap();
        assert_eq!(aggregate_h(Bound::L1, &fc, &ms, &twos, 2).unwrap(), 1.0);
        let zeros = ControlGrid::constant(4, 1, 1.0, 0.0).unwrap();
        assert_eq!(
            aggregate_h(Bound::L3, &fc, &ms, &zeros, 1).unwrap(),
            fc.bound(Bound::L3, 0.375, 0) * 1.0
        );
        assert!(aggregate_h(Bound::L1, &fc, &ms, &ones, 4).is_err());
    }

    #[test]
    fn tail_with_exact_zero_support() {
        let op = lap(2);
        let ms = MarkSpace::new((0..6).map(|j| j as f64).collect(), vec![1.0; 6]).unwrap();
        let sigma = vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let fc = JumpCoefficient::additive(&op, sigma, SpectralField::unit(2, 0, 1.0)).unwrap();
        for eps in [1e-12, 1e-3, 1.0] {
            let cert = tail_compact(&ms, &fc, 1.0, 1.0, eps).unwrap();
            assert_eq!(cert.n, 2);
            assert_eq!(cert.value, 0.0);
        }
    }

    #[test]
    fn tail_geometric_amplitudes() {
        let op = lap(2);
        let m = 40;
        let ms = MarkSpace::new((0..m).map(|j| j as f64).collect(), vec![1.0; m]).unwrap();
        let sigma: Vec<f64> = (1..=m).map(|j| 0.5f64.powi(j as i32)).collect();
        let fc = JumpCoefficient::additive(&op, sigma, SpectralField::unit(2, 0, 1.0)).unwrap();
        let cert = tail_compact(&ms, &fc, 1.0, 1.0, 1e-3).unwrap();
        assert!(cert.n > 1 && cert.n < m);
        assert!(cert.value <= 1e-3);
        // the certificate just before the returned n fails the target
        assert!(tail_certificate(&ms, &fc, 1.0, 1.0, cert.n - 1).unwrap() > 1e-3);
        let values: Vec<f64> = (1..=m).map(|n| tail_certificate(&ms, &fc, 1.0, 1.0, n).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn tail_large_target_returns_first_prefix() {
        let op = lap(1);
        let ms = MarkSpace::new(vec![0.0, 1.0, 2.0], vec![1.0; 3]).unwrap();
        let fc = JumpCoefficient::additive(&op, vec![1.0, 1.0, 1.0], SpectralField::unit(1, 0, 1.0)).unwrap();
        let cert = tail_compact(&ms, &fc, 1.0, 1.0, 1e6).unwrap();
        assert_eq!(cert.n, 1);
        assert!(tail_compact(&ms, &fc, 1.0, 1.0, 0.0).is_err());
    }
}
