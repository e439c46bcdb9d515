//! States, the generator `L` and the Gelfand-triple norms, all expressed as
//! diagonal multipliers on the eigenbasis of `-L`.
//!
//! The physical domain is `(0, pi)` with Lebesgue measure. For the
//! Dirichlet sine basis the eigenfunctions are `e_k(x) = sqrt(2/pi) sin(k x)`;
//! an abstract basis only carries a positive spectrum and cannot be sampled
//! pointwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which eigenbasis a spectrum refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    DirichletSine,
    Abstract,
}

/// Recipe for building an [`OperatorSpec`].
#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    /// `L = Delta` with Dirichlet conditions, `lambda_k = k^2`.
    Laplacian,
    /// `L = -(-Delta)^alpha`, `lambda_k = (k^2)^alpha`, `alpha in (0, 1]`.
    Fractional(f64),
    /// Any positive nondecreasing spectrum in an abstract basis.
    Explicit(Vec<f64>),
}

/// The negative definite generator `L`, stored as the spectrum of `-L`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    eigenvalues: Vec<f64>,
    basis: Basis,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidSpectrum("mode count must be at least 1".into()));
        }
        match kind {
            OperatorKind::Laplacian => Ok(Self {
                eigenvalues: (1..=modes).map(|k| (k * k) as f64).collect(),
                basis: Basis::DirichletSine,
            }),
            OperatorKind::Fractional(alpha) => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(Error::InvalidSpectrum(format!(
                        "fractional exponent {alpha} outside (0, 1]"
                    )));
                }
                Ok(Self {
                    eigenvalues: (1..=modes).map(|k| ((k * k) as f64).powf(alpha)).collect(),
                    basis: Basis::DirichletSine,
                })
            }
            OperatorKind::Explicit(list) => {
                if list.len() != modes {
                    return Err(Error::InvalidSpectrum(format!(
                        "explicit spectrum has {} entries, expected {modes}",
                        list.len()
                    )));
                }
                Self::explicit(list)
            }
        }
    }

    pub fn laplacian(modes: usize) -> Result<Self> {
        Self::new(OperatorKind::Laplacian, modes)
    }

    pub fn fractional(alpha: f64, modes: usize) -> Result<Self> {
        Self::new(OperatorKind::Fractional(alpha), modes)
    }

    /// Abstract spectrum; must be positive, finite and nondecreasing.
    pub fn explicit(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidSpectrum("empty spectrum".into()));
        }
        if let Some(bad) = eigenvalues.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidSpectrum(format!("eigenvalue {bad} is not positive")));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpectrum("eigenvalues must be nondecreasing".into()));
        }
        Ok(Self {
            eigenvalues,
            basis: Basis::Abstract,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Spectrum of `-(L - shift)`, i.e. `lambda_k + shift`, in the same basis.
    pub(crate) fn shifted_eigenvalues(&self, shift: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l + shift).collect()
    }

    fn check_dim(&self, u: &SpectralField) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.len(),
            });
        }
        Ok(())
    }

    /// `L u`, i.e. `-lambda_k u_k` per mode.
    pub fn apply_l(&self, u: &SpectralField) -> Result<SpectralField> {
        self.check_dim(u)?;
        Ok(SpectralField(
            self.eigenvalues
                .iter()
                .zip(&u.0)
                .map(|(l, c)| -l * c)
                .collect(),
        ))
    }

    /// Applies `m(-L)`: coefficient `k` is scaled by `m(lambda_k)`.
    pub fn multiplier<F>(&self, m: F, u: &SpectralField) -> Result<SpectralField>
    where
        F: Fn(f64) -> f64,
    {
        self.check_dim(u)?;
        let mut out = Vec::with_capacity(u.len());
        for (mode, (&lambda, &c)) in self.eigenvalues.iter().zip(&u.0).enumerate() {
            let factor = m(lambda);
            if !factor.is_finite() {
                return Err(Error::SingularMultiplier { mode, lambda });
            }
            out.push(factor * c);
        }
        Ok(SpectralField(out))
    }

    pub fn norm(&self, u: &SpectralField, which: Norm) -> Result<f64> {
        self.check_dim(u)?;
        let weighted = |w: &dyn Fn(f64) -> f64| -> f64 {
            self.eigenvalues
                .iter()
                .zip(&u.0)
                .map(|(&l, &c)| w(l) * c * c)
                .sum::<f64>()
                .sqrt()
        };
        match which {
            Norm::L2 => Ok(weighted(&|_| 1.0)),
            Norm::F12 => Ok(weighted(&|l| 1.0 + l)),
            Norm::F12Star => Ok(weighted(&|l| 1.0 / (1.0 + l))),
            Norm::F12StarEps(eps) => {
                if !(eps > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "epsilon-norm needs eps > 0, got {eps}"
                    )));
                }
                Ok(weighted(&|l| 1.0 / (eps + l)))
            }
        }
    }

    /// `F*_{1,2}` norm, the distance used for every trajectory comparison.
    pub fn fstar(&self, u: &SpectralField) -> Result<f64> {
        self.norm(u, Norm::F12Star)
    }
}

/// Norms of the Gelfand triple `L^2 ⊂ F*_{1,2}` together with `F_{1,2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Norm {
    L2,
    F12,
    F12Star,
    /// Equivalent norm built from `(eps - L)^{-1}`.
    F12StarEps(f64),
}

/// Finitely many eigen-coefficients of a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectralField(Vec<f64>);

impl SpectralField {
    pub fn zeros(modes: usize) -> Self {
        Self(vec![0.0; modes])
    }

    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("field coefficients must be finite".into()));
        }
        Ok(Self(coeffs))
    }

    /// Field with `value` in mode `index` (0-based) only.
    pub fn unit(modes: usize, index: usize, value: f64) -> Self {
        let mut c = vec![0.0; modes];
        c[index] = value;
        Self(c)
    }

    pub(crate) fn from_raw(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| s * c).collect())
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + s * b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(1.0, other)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// Precomputed sine table for moving between coefficients and values at the
/// interior nodes `x_j = j pi / (M + 1)`, `j = 1..M`.
#[derive(Clone, Debug)]
pub struct Collocation {
    modes: usize,
    points: usize,
    // row-major points x modes: sin(k x_j)
    sines: Vec<f64>,
}

impl Collocation {
    pub fn new(op: &OperatorSpec, points: usize) -> Result<Self> {
        if op.basis() != Basis::DirichletSine {
            return Err(Error::UnsupportedBasis("grid evaluation needs the Dirichlet sine basis"));
        }
        Self::for_modes(op.dim(), points)
    }

    pub(crate) fn for_modes(modes: usize, points: usize) -> Result<Self> {
        if points < 2 * modes {
            return Err(Error::InvalidParameter(format!(
                "collocation size {points} below 2K = {}",
                2 * modes
            )));
        }
        let h = std::f64::consts::PI / (points as f64 + 1.0);
        let mut sines = Vec::with_capacity(points * modes);
        for j in 1..=points {
            for k in 1..=modes {
                sines.push(((k * j) as f64 * h).sin());
            }
        }
        Ok(Self {
            modes,
            points,
            sines,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Node coordinates `x_j`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = std::f64::consts::PI / (self.points as f64 + 1.0);
        (1..=self.points).map(|j| j as f64 * h).collect()
    }

    pub fn to_grid(&self, u: &SpectralField) -> Result<Vec<f64>> {
        if u.len() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                found: u.len(),
            });
        }
        let mut out = vec![0.0; self.points];
        self.to_grid_into(u.coeffs(), &mut out);
        Ok(out)
    }

    pub(crate) fn to_grid_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let scale = (2.0 / std::f64::consts::PI).sqrt();
        for (j, v) in out.iter_mut().enumerate() {
            let row = &self.sines[j * self.modes..(j + 1) * self.modes];
            *v = scale * row.iter().zip(coeffs).map(|(s, c)| s * c).sum::<f64>();
        }
    }

    pub fn from_grid(&self, values: &[f64]) -> Result<SpectralField> {
        if values.len() != self.points {
            return Err(Error::DimensionMismatch {
                expected: self.points,
                found: values.len(),
            });
        }
        let mut out = vec![0.0; self.modes];
        self.project_grid_into(values, &mut out);
        Ok(SpectralField(out))
    }

    pub(crate) fn project_grid_into(&self, values: &[f64], out: &mut [f64]) {
        // discrete orthogonality: sum_j sin(k x_j) sin(l x_j) = (M + 1)/2 delta_kl
        let scale = (2.0 * std::f64::consts::PI).sqrt() / (self.points as f64 + 1.0);
        out.iter_mut().for_each(|c| *c = 0.0);
        for (j, &v) in values.iter().enumerate() {
            let row = &self.sines[j * self.modes..(j + 1) * self.modes];
            for (c, s) in out.iter_mut().zip(row) {
                *c += s * v;
            }
        }
        out.iter_mut().for_each(|c| *c *= scale);
    }
}

/// Values of `u` at `M` interior collocation nodes.
pub fn to_grid(op: &OperatorSpec, u: &SpectralField, points: usize) -> Result<Vec<f64>> {
    Collocation::new(op, points)?.to_grid(u)
}

/// Inverse of [`to_grid`] for fields with `op.dim()` modes.
pub fn from_grid(op: &OperatorSpec, values: &[f64]) -> Result<SpectralField> {
    Collocation::new(op, values.len())?.from_grid(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn laplacian_and_fractional_spectra() {
        assert_eq!(OperatorSpec::laplacian(3).unwrap().eigenvalues(), &[1.0, 4.0, 9.0]);
        assert_eq!(OperatorSpec::fractional(0.5, 3).unwrap().eigenvalues(), &[1.0, 2.0, 3.0]);
        let ex = OperatorSpec::new(OperatorKind::Explicit(vec![2.5]), 1).unwrap();
        assert_eq!(ex.eigenvalues(), &[2.5]);
        assert_eq!(ex.basis(), Basis::Abstract);
    }

    #[test]
    fn rejects_bad_spectra() {
        assert!(matches!(OperatorSpec::explicit(vec![1.0, 0.5]), Err(Error::InvalidSpectrum(_))));
        assert!(matches!(OperatorSpec::explicit(vec![-1.0]), Err(Error::InvalidSpectrum(_))));
        assert!(matches!(OperatorSpec::explicit(vec![0.0]), Err(Error::InvalidSpectrum(_))));
        assert!(OperatorSpec::laplacian(0).is_err());
        assert!(OperatorSpec::fractional(1.5, 2).is_err());
        assert!(OperatorSpec::fractional(0.0, 2).is_err());
    }

    #[test]
    fn apply_l_examples() {
        let lap = OperatorSpec::laplacian(2).unwrap();
        let u = SpectralField::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(lap.apply_l(&u).unwrap().coeffs(), &[-1.0, 0.0]);
        assert_eq!(lap.apply_l(&SpectralField::zeros(2)).unwrap().coeffs(), &[0.0, 0.0]);
        let frac = OperatorSpec::fractional(0.5, 2).unwrap();
        let v = SpectralField::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(frac.apply_l(&v).unwrap().coeffs(), &[0.0, -2.0]);
        assert!(matches!(
            lap.apply_l(&SpectralField::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn multiplier_examples() {
        let lap = OperatorSpec::laplacian(2).unwrap();
        let u = SpectralField::new(vec![1.0, 0.0]).unwrap();
        let v = lap.multiplier(|l| (1.0 + l).powf(-0.5), &u).unwrap();
        assert!((v.coeffs()[0] - 2f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(lap.multiplier(|_| 1.0, &u).unwrap(), u);

        let w = SpectralField::new(vec![0.3, -1.2]).unwrap();
        let alpha: f64 = 1e6;
        let lim = lap.multiplier(|l| alpha.sqrt() / (alpha + l).sqrt(), &w).unwrap();
        // 1 - (1 + l / alpha)^{-1/2} <= l / (2 alpha)
        for ((a, b), l) in lim.coeffs().iter().zip(w.coeffs()).zip(lap.eigenvalues()) {
            assert!((a - b).abs() <= b.abs() * l / (2.0 * alpha));
        }

        // (alpha - L)^{-1/2} with alpha = -lambda_1 is singular
        let err = lap.multiplier(|l| 1.0 / (-1.0 + l).sqrt(), &u).unwrap_err();
        assert!(matches!(err, Error::SingularMultiplier { mode: 0, .. }));
    }

    #[test]
    fn norm_examples() {
        let lap = OperatorSpec::laplacian(3).unwrap();
        let u = SpectralField::unit(3, 0, 1.0);
        assert!((lap.norm(&u, Norm::F12Star).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((lap.norm(&u, Norm::F12).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(lap.norm(&u, Norm::L2).unwrap(), 1.0);
        assert_eq!(
            lap.norm(&u, Norm::F12StarEps(1.0)).unwrap(),
            lap.norm(&u, Norm::F12Star).unwrap()
        );
        let z = SpectralField::zeros(3);
        for n in [Norm::L2, Norm::F12, Norm::F12Star, Norm::F12StarEps(0.3)] {
            assert_eq!(lap.norm(&z, n).unwrap(), 0.0);
        }
        assert!(lap.norm(&u, Norm::F12StarEps(0.0)).is_err());
    }

    #[test]
    fn single_mode_grid_values() {
        let lap = OperatorSpec::laplacian(4).unwrap();
        let g = to_grid(&lap, &SpectralField::unit(4, 0, 1.0), 8).unwrap();
        for (j, v) in g.iter().enumerate() {
            let x = (j + 1) as f64 * std::f64::consts::PI / 9.0;
            assert!((v - (2.0 / std::f64::consts::PI).sqrt() * x.sin()).abs() < 1e-15);
        }
        assert!(to_grid(&lap, &SpectralField::zeros(4), 8).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn grid_round_trip() {
        let lap = OperatorSpec::laplacian(8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = SpectralField::new((0..8).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
            let back = from_grid(&lap, &to_grid(&lap, &u, 16).unwrap()).unwrap();
            for (a, b) in back.coeffs().iter().zip(u.coeffs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_needs_sine_basis_and_margin() {
        let ex = OperatorSpec::explicit(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            to_grid(&ex, &SpectralField::zeros(2), 8),
            Err(Error::UnsupportedBasis(_))
        ));
        let lap = OperatorSpec::laplacian(4).unwrap();
        assert!(to_grid(&lap, &SpectralField::zeros(4), 7).is_err());
    }
}
