//! Closed-form criterion for the half-plane `U_a = {Re z < −a}` with `p = 1`:
//! the semicircle law on the boundary line is the constrained minimizer
//! exactly when `a ≥ √2`.
//!
//! The candidate measure lives on the boundary line. A point at transverse
//! distance `b − a ≥ 0` from it, on the side of the origin, is written
//! `(b − a) + iy` in the frame of [`semicircle_potential_closed`], whose
//! support is the imaginary axis.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::potential::{semicircle_line_constant, semicircle_potential_closed, stieltjes_semicircle};
use crate::scalar::Scalar;

/// `2H^σ((b − a) + iy) + b² + y²`, the effective potential of the line
/// candidate at the point `(b, y)`.
pub fn condition_lhs<T: Scalar>(a: T, b: T, y: T) -> T {
    T::two() * semicircle_potential_closed(Point::new(b - a, y)) + b * b + y * y
}

/// `∂/∂b` of [`condition_lhs`]: `2b − 2 Im S(y + i(b − a))` with `S` the
/// Stieltjes transform of the semicircle.
pub fn criterion_f<T: Scalar>(a: T, b: T, y: T) -> Result<T> {
    if !(b > a) {
        return Err(Error::Domain(format!("F needs b > a, got a = {a}, b = {b}")));
    }
    let s = stieltjes_semicircle(Complex::new(y, b - a))?;
    Ok(T::two() * b - T::two() * s.im)
}

/// `G(y, a, b) = condition_lhs(a, b, y) − a² − (1 + log 2)`. The line
/// candidate is optimal iff `G ≥ 0` for all `b ≥ a` and all `y`.
pub fn criterion_g<T: Scalar>(y: T, a: T, b: T) -> T {
    condition_lhs(a, b, y) - a * a - semicircle_line_constant::<T>()
}

/// `Ḡ(a, b) = G(0, a, b)`.
pub fn criterion_gbar<T: Scalar>(a: T, b: T) -> T {
    criterion_g(T::zero(), a, b)
}

/// `∂Ḡ/∂b = 2(2b − a − √(2 + (b − a)²))` for `b ≥ a`.
pub fn gbar_slope<T: Scalar>(a: T, b: T) -> T {
    let d = b - a;
    T::two() * (T::two() * b - a - (T::two() + d * d).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityVerdict {
    pub a: f64,
    /// `min G ≥ −MARGIN_TOL` over the scan.
    pub fully_singular: bool,
    pub worst_margin: f64,
    pub worst_b: f64,
    pub worst_y: f64,
}

/// Scan step in `b` and `y`.
pub const SCAN_STEP: f64 = 0.01;
/// Width of the scan box beyond the line, and its half-height.
///
/// Outside the box `q = |(b − a, y)| ≥ 4`. Since `H^σ(z) ≥ −log(|z| + √2)`
/// and `b² − a² ≥ (b − a)²`, there `G ≥ q² − 2 log(q + √2) − 1 − log 2 > 10`.
pub const SCAN_EXTENT: f64 = 4.0;
/// Refinement factor around the worst scan point.
pub const REFINE: usize = 10;
/// `G` may dip this far below zero and still count as nonnegative: the
/// minimum at `a = √2` is exactly zero, approached as `b ↘ a`.
pub const MARGIN_TOL: f64 = 1e-9;

/// Decides whether the semicircle on the line is the minimizer for `U_a`.
pub fn is_fully_singular<T: Scalar>(a: T) -> SingularityVerdict {
    let step = T::lit(SCAN_STEP);
    let extent = T::lit(SCAN_EXTENT);
    let nb = (SCAN_EXTENT / SCAN_STEP).round() as usize;
    let ny = nb;
    // b ∈ (a, a + 4], y ∈ [−4, 4]
    let coarse = (1..=nb)
        .into_par_iter()
        .map(|ib| {
            let b = a + step * T::from_usize_lossy(ib);
            (0..=2 * ny)
                .map(|iy| {
                    let y = -extent + step * T::from_usize_lossy(iy);
                    (criterion_g(y, a, b), b, y)
                })
                .fold((T::infinity(), b, T::zero()), min_by_value)
        })
        .reduce(|| (T::infinity(), a, T::zero()), min_by_value);
    let (_, b0, y0) = coarse;
    let fine = step / T::from_usize_lossy(REFINE);
    let (worst, wb, wy) = (0..=2 * REFINE)
        .flat_map(|ib| (0..=2 * REFINE).map(move |iy| (ib, iy)))
        .filter_map(|(ib, iy)| {
            let b = b0 - step + fine * T::from_usize_lossy(ib);
            let y = y0 - step + fine * T::from_usize_lossy(iy);
            (b > a).then(|| (criterion_g(y, a, b), b, y))
        })
        .fold(coarse, min_by_value);
    SingularityVerdict {
        a: a.to_f64_lossy(),
        fully_singular: worst >= -T::lit(MARGIN_TOL),
        worst_margin: worst.to_f64_lossy(),
        worst_b: wb.to_f64_lossy(),
        worst_y: wy.to_f64_lossy(),
    }
}

fn min_by_value<T: Scalar>(x: (T, T, T), y: (T, T, T)) -> (T, T, T) {
    if y.0 < x.0 {
        y
    } else {
        x
    }
}
