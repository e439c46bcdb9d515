//! Controls on the time x mark grid, the entropy cost `Q` and the sublevel
//! sets `S^N = {Q <= N}`.

use crate::error::{Error, Result};
use crate::marks::MarkSpace;

/// Nonnegative control, piecewise constant on `n_cells` uniform time cells
/// of `[0, T]` and per mark.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlGrid {
    n_cells: usize,
    marks: usize,
    horizon: f64,
    // row-major: cell i, mark j
    values: Vec<f64>,
}

impl ControlGrid {
    pub fn new(n_cells: usize, marks: usize, horizon: f64, values: Vec<f64>) -> Result<Self> {
        if n_cells == 0 || marks == 0 {
            return Err(Error::InvalidParameter("control grid needs at least one cell and one mark".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {horizon} must be positive")));
        }
        if values.len() != n_cells * marks {
            return Err(Error::DimensionMismatch {
                expected: n_cells * marks,
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("control value {bad} is not a finite nonnegative number")));
        }
        Ok(Self {
            n_cells,
            marks,
            horizon,
            values,
        })
    }

    pub fn constant(n_cells: usize, marks: usize, horizon: f64, value: f64) -> Result<Self> {
        Self::new(n_cells, marks, horizon, vec![value; n_cells * marks])
    }

    /// The null control `g = 1`.
    pub fn ones(n_cells: usize, marks: usize, horizon: f64) -> Result<Self> {
        Self::constant(n_cells, marks, horizon, 1.0)
    }

    /// Fills the grid from `f(cell midpoint, mark index)`.
    pub fn from_fn<F>(n_cells: usize, marks: usize, horizon: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, usize) -> f64,
    {
        let dt = horizon / n_cells as f64;
        let mut values = Vec::with_capacity(n_cells * marks);
        for i in 0..n_cells {
            let t = (i as f64 + 0.5) * dt;
            for j in 0..marks {
                values.push(f(t, j));
            }
        }
        Self::new(n_cells, marks, horizon, values)
    }

    /// `1 + amplitude sin(2 pi freq t / T)` sampled at cell midpoints; with
    /// `amplitude = 1` the control oscillates between 0 and 2.
    pub fn oscillating(n_cells: usize, marks: usize, horizon: f64, freq: f64, amplitude: f64) -> Result<Self> {
        let w = 2.0 * std::f64::consts::PI * freq / horizon;
        Self::from_fn(n_cells, marks, horizon, |t, _| (1.0 + amplitude * (w * t).sin()).max(0.0))
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn marks(&self) -> usize {
        self.marks
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_cells as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize, mark: usize) -> f64 {
        self.values[cell * self.marks + mark]
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.marks..(cell + 1) * self.marks]
    }

    /// Cell containing time `t`, with `[t_i, t_{i+1})` half-open cells and a
    /// small tolerance so that nominal grid times land in the right cell.
    pub fn cell_of(&self, t: f64) -> usize {
        let x = t / self.horizon * self.n_cells as f64;
        let i = (x + 1e-9).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.n_cells - 1)
        }
    }

    /// Convex combination `theta g + (1 - theta) 1`.
    pub fn toward_one(&self, theta: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| theta * v + (1.0 - theta)).collect(),
            ..self.clone()
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.n_cells, self.marks, self.horizon, self.values.iter().map(|v| f(*v)).collect())
    }

    pub(crate) fn check_marks(&self, space: &MarkSpace) -> Result<()> {
        if self.marks != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                found: self.marks,
            });
        }
        Ok(())
    }
}

/// Entropy integrand `l(r) = r log r - r + 1`, with `l(0) = 1`.
pub fn entropy_l(r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!("entropy_l needs r >= 0, got {r}")));
    }
    Ok(entropy_unchecked(r))
}

#[inline]
pub(crate) fn entropy_unchecked(r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else {
        r * r.ln() - r + 1.0
    }
}

/// `Q(g) = sum_{i,j} l(g_ij) dt nu_j`.
pub fn q_cost(g: &ControlGrid, space: &MarkSpace) -> Result<f64> {
    g.check_marks(space)?;
    let dt = g.dt();
    let weights = space.weights();
    let mut total = 0.0;
    for i in 0..g.n_cells {
        let row = g.row(i);
        let s: f64 = row.iter().zip(weights).map(|(v, w)| entropy_unchecked(*v) * w).sum();
        total += s * dt;
    }
    Ok(total)
}

/// Projects onto `S^N` along the segment toward the null control.
pub fn project_sn(g: &ControlGrid, space: &MarkSpace, budget: f64) -> Result<ControlGrid> {
    if !(budget > 0.0) {
        return Err(Error::InvalidParameter(format!("budget N = {budget} must be positive")));
    }
    if q_cost(g, space)? <= budget {
        return Ok(g.clone());
    }
    // Q(theta) is convex with Q(0) = 0, hence nondecreasing on [0, 1]
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q_cost(&g.toward_one(mid), space)? <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(g.toward_one(lo))
}

/// Both sides of `a b <= e^{sigma a} + l(b) / sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YoungBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl YoungBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

pub fn young_bound(a: f64, b: f64, sigma: f64) -> Result<YoungBound> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::InvalidParameter(format!("young_bound needs a, b >= 0 (a = {a}, b = {b})")));
    }
    if !(sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!("young_bound needs sigma >= 1, got {sigma}")));
    }
    Ok(YoungBound {
        lhs: a * b,
        rhs: (sigma * a).exp() + entropy_unchecked(b) / sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_space() -> MarkSpace {
        MarkSpace::new(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_l(1.0).unwrap(), 0.0);
        assert_eq!(entropy_l(0.0).unwrap(), 1.0);
        assert!((entropy_l(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!(entropy_l(-0.1).is_err());
        assert!(entropy_l(f64::NAN).is_err());
    }

    #[test]
    fn q_cost_examples() {
        let ms = unit_space();
        assert_eq!(q_cost(&ControlGrid::ones(4, 1, 1.0).unwrap(), &ms).unwrap(), 0.0);
        assert_eq!(q_cost(&ControlGrid::constant(4, 1, 1.0, 0.0).unwrap(), &ms).unwrap(), 1.0);
        let g = ControlGrid::new(2, 1, 1.0, vec![std::f64::consts::E, 1.0]).unwrap();
        assert!((q_cost(&g, &ms).unwrap() - 0.5).abs() < 1e-15);
        let two = MarkSpace::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(q_cost(&g, &two).is_err());
    }

    #[test]
    fn projection_examples() {
        let ms = unit_space();
        let g = ControlGrid::new(2, 1, 1.0, vec![0.0, 1.0]).unwrap();
        assert_eq!(q_cost(&g, &ms).unwrap(), 0.5);
        assert_eq!(project_sn(&g, &ms, 1.0).unwrap(), g);

        let ones = ControlGrid::ones(3, 1, 1.0).unwrap();
        assert_eq!(project_sn(&ones, &ms, 1.0).unwrap(), ones);

        // g = 0, nu(Z) = 2: root of 2 l(1 - theta) = 1
        let heavy = MarkSpace::new(vec![0.0], vec![2.0]).unwrap();
        let zero = ControlGrid::constant(5, 1, 1.0, 0.0).unwrap();
        let p = project_sn(&zero, &heavy, 1.0).unwrap();
        let q = q_cost(&p, &heavy).unwrap();
        assert!((1.0 - 1e-9..=1.0).contains(&q));
        // independent scalar bisection for the same root
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * entropy_l(1.0 - mid).unwrap() <= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((p.value(0, 0) - (1.0 - lo)).abs() < 1e-8);
        assert!(project_sn(&zero, &heavy, 0.0).is_err());
    }

    #[test]
    fn young_examples() {
        let y = young_bound(0.0, 1.0, 3.0).unwrap();
        assert_eq!((y.lhs, y.rhs), (0.0, 1.0));
        let y = young_bound(1.0, 1.0, 1.0).unwrap();
        assert_eq!(y.lhs, 1.0);
        assert!((y.rhs - std::f64::consts::E).abs() < 1e-15);
        assert!(young_bound(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn cell_lookup() {
        let g = ControlGrid::ones(4, 1, 2.0).unwrap();
        assert_eq!(g.cell_of(0.0), 0);
        assert_eq!(g.cell_of(0.5), 1);
        assert_eq!(g.cell_of(3.0 * (2.0 / 6.0)), 2);
        assert_eq!(g.cell_of(2.0), 3);
    }

    #[test]
    fn rejects_negative_values() {
        assert!(ControlGrid::new(1, 1, 1.0, vec![-1.0]).is_err());
        assert!(ControlGrid::new(1, 2, 1.0, vec![1.0]).is_err());
    }
}
