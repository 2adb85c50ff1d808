//! Uniform square grids on the truncation box `[-R, R]²` and fields on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::scalar::Scalar;

/// `n × n` nodes on `[-R, R]²`; node `(i, j)` sits at `(-R + i h, -R + j h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D<T> {
    #[serde(rename = "R")]
    pub box_radius: T,
    pub n: usize,
}

impl<T: Scalar> Grid2D<T> {
    /// Grid used by the obstacle solver: `n` odd, `n ≥ 33`, `R ≥ 2`.
    pub fn new(box_radius: T, n: usize) -> Result<Self> {
        if n < 33 || n % 2 == 0 {
            return Err(Error::InvalidGrid(format!("n must be odd and at least 33, got {n}")));
        }
        if !(box_radius >= T::two()) || !box_radius.is_finite() {
            return Err(Error::InvalidGrid(format!("box radius must be at least 2, got {box_radius}")));
        }
        Ok(Grid2D { box_radius, n })
    }

    /// Grid without the solver's size restrictions (measures, oracle tests).
    pub fn unchecked(box_radius: T, n: usize) -> Self {
        assert!(n >= 2, "grid needs two nodes per side");
        Grid2D { box_radius, n }
    }

    pub fn spacing(&self) -> T {
        T::two() * self.box_radius / T::from_usize_lossy(self.n - 1)
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    #[inline]
    pub fn coord(&self, i: usize) -> T {
        -self.box_radius + T::from_usize_lossy(i) * self.spacing()
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Point<T> {
        Point::new(self.coord(i), self.coord(j))
    }

    #[inline]
    pub fn point_at(&self, k: usize) -> Point<T> {
        let (i, j) = self.coords(k);
        self.point(i, j)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    /// Nearest node to `pt`, clamped to the grid.
    pub fn nearest(&self, pt: Point<T>) -> (usize, usize) {
        let h = self.spacing();
        let last = T::from_usize_lossy(self.n - 1);
        let f = |c: T| ((c + self.box_radius) / h).round().max(T::zero()).min(last).to_usize().unwrap_or(0);
        (f(pt.x), f(pt.y))
    }

    /// The next coarser grid of the same box (every other node), if it is
    /// still a valid solver grid.
    pub fn coarser(&self) -> Option<Self> {
        if (self.n - 1) % 2 != 0 {
            return None;
        }
        let n = (self.n - 1) / 2 + 1;
        Grid2D::new(self.box_radius, n).ok()
    }
}

/// Real values at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    pub grid: Grid2D<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn constant(grid: Grid2D<T>, value: T) -> Self {
        ScalarField { grid, values: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: Grid2D<T>, mut f: impl FnMut(Point<T>) -> T) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point_at(k))).collect();
        ScalarField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    /// `-h² Δ_h` of the field at an interior node (five-point stencil).
    #[inline]
    pub fn neg_laplacian_scaled(&self, i: usize, j: usize) -> T {
        let n = self.grid.n;
        let k = self.grid.index(i, j);
        let v = &self.values;
        T::lit(4.0) * v[k] - v[k - 1] - v[k + 1] - v[k - n] - v[k + n]
    }

    /// Bilinear interpolation; `None` outside the box.
    pub fn interpolate(&self, pt: Point<T>) -> Option<T> {
        let g = self.grid;
        let h = g.spacing();
        let fx = (pt.x + g.box_radius) / h;
        let fy = (pt.y + g.box_radius) / h;
        let last = T::from_usize_lossy(g.n - 1);
        if !(fx >= T::zero() && fy >= T::zero() && fx <= last && fy <= last) {
            return None;
        }
        let i = fx.floor().min(last - T::one()).to_usize()?;
        let j = fy.floor().min(last - T::one()).to_usize()?;
        let tx = fx - T::from_usize_lossy(i);
        let ty = fy - T::from_usize_lossy(j);
        let one = T::one();
        Some(
            self.at(i, j) * (one - tx) * (one - ty)
                + self.at(i + 1, j) * tx * (one - ty)
                + self.at(i, j + 1) * (one - tx) * ty
                + self.at(i + 1, j + 1) * tx * ty,
        )
    }

    /// Bilinear prolongation onto a grid of the same box.
    pub fn resample(&self, target: Grid2D<T>) -> Self {
        ScalarField::from_fn(target, |pt| {
            let clamped = Point::new(
                pt.x.max(-self.grid.box_radius).min(self.grid.box_radius),
                pt.y.max(-self.grid.box_radius).min(self.grid.box_radius),
            );
            self.interpolate(clamped).unwrap_or_else(T::zero)
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values.iter().zip(&other.values).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max)
    }
}
