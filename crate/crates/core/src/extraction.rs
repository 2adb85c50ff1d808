//! Splitting the measure `−ΔH/2π` of a converged potential into its area part
//! (density `1/π` on the contact set `V`) and its boundary part `g dℋ¹` on
//! `∂U`, and the structural checks on both.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundarySample, Region};
use crate::grid::{Grid2D, ScalarField};
use crate::obstacle::node_masses;
use crate::potential::{circular_law_potential, energy_via_dirichlet, signed_log_energy, DiscreteMeasure};
use crate::scalar::Scalar;

/// Half-width of the band around `∂U`, in cells, left to the singular part.
pub const BAND_CELLS: f64 = 1.5;
/// Distances of the one-sided stencil points from `∂U`, in cells.
pub const STENCIL_CELLS: [f64; 3] = [1.5, 2.5, 3.5];
/// Weights of `f'(0)` for the quadratic through the stencil points, in units of `1/h`.
const STENCIL_WEIGHTS: [f64; 3] = [-3.0, 5.0, -2.0];
/// Depth, in cells, of the reference point used to fill the band.
const BAND_REFERENCE_CELLS: f64 = 2.5;
/// Tolerance, relative to `1 + c₁ − c₂`, locating `{w = ½(c₁ − c₂)}`.
const MAX_SET_TOL: f64 = 1e-5;
/// `g` below this counts as absent.
pub const G_PRESENT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ExtractedMeasure<T> {
    /// Mass per unit area.
    pub regular_density: ScalarField<T>,
    pub v_mask: Vec<bool>,
    /// Boundary samples with the line density `g ≥ 0`.
    pub singular: Vec<(BoundarySample<T>, T)>,
    pub mass_regular: T,
    pub mass_singular: T,
    /// Samples whose raw `g` was negative and got clamped to zero.
    pub clamped: usize,
}

impl<T: Scalar> ExtractedMeasure<T> {
    pub fn total_mass(&self) -> T {
        self.mass_regular + self.mass_singular
    }

    /// Mass on the closed region: area mass at nodes with `sd ≤ 0` plus all of
    /// the boundary part.
    pub fn mass_in_closure(&self, region: &Region<T>) -> T {
        let grid = self.regular_density.grid;
        let h2 = grid.spacing() * grid.spacing();
        let area: T = self
            .regular_density
            .values
            .iter()
            .enumerate()
            .filter(|(k, d)| **d > T::zero() && region.signed_distance(grid.point_at(*k)) <= T::zero())
            .map(|(_, d)| *d * h2)
            .sum();
        area + self.mass_singular
    }

    /// `Σ g² w`, the discrete `L²(∂U)` norm squared of the line density.
    pub fn g_l2_squared(&self) -> T {
        self.singular.iter().map(|(s, g)| *g * *g * s.arc_weight).sum()
    }

    /// Cell masses `density · h²` plus boundary atoms `g · w`.
    pub fn to_discrete(&self) -> DiscreteMeasure<T> {
        let grid = self.regular_density.grid;
        let h2 = grid.spacing() * grid.spacing();
        DiscreteMeasure {
            grid,
            cell_masses: self.regular_density.values.iter().map(|d| *d * h2).collect(),
            boundary: self.singular.iter().map(|(s, g)| (*s, *g * s.arc_weight)).collect(),
        }
    }
}

pub fn signed_distances<T: Scalar>(grid: &Grid2D<T>, region: &Region<T>) -> Vec<T> {
    (0..grid.len()).into_par_iter().map(|k| region.signed_distance(grid.point_at(k))).collect()
}

/// Area density `max(−Δ_h H, 0)/2π` away from `∂U` and `V = {density > 1/2π}`.
///
/// Nodes within `1.5h` of `∂U` carry the smeared boundary layer. Their area
/// density is copied from the node `2.5h` deeper on the same side: `1/π` if
/// that node is in `V`, zero otherwise.
pub fn extract_regular<T: Scalar>(h: &ScalarField<T>, region: &Region<T>) -> (ScalarField<T>, Vec<bool>) {
    let grid = h.grid;
    let sd = signed_distances(&grid, region);
    let band = T::lit(BAND_CELLS) * grid.spacing();
    let h2 = grid.spacing() * grid.spacing();
    let masses = node_masses(h);
    let half_level = T::one() / (T::two() * T::PI());
    let mut density: Vec<T> =
        masses.iter().zip(&sd).map(|(m, s)| if s.abs() <= band { T::zero() } else { *m / h2 }).collect();
    let reference = T::lit(BAND_REFERENCE_CELLS) * grid.spacing();
    let filled: Vec<(usize, T)> = (0..grid.len())
        .into_par_iter()
        .filter(|&k| {
            let (i, j) = grid.coords(k);
            sd[k].abs() <= band && !grid.is_boundary(i, j)
        })
        .map(|k| {
            let x = grid.point_at(k);
            let normal = region.normal_at(x);
            let depth = if sd[k] <= T::zero() { -reference } else { reference };
            let (ri, rj) = grid.nearest(x.add(normal.scale(depth)));
            let r = grid.index(ri, rj);
            let d = if sd[r].abs() > band && density[r] > half_level { T::one() / T::PI() } else { T::zero() };
            (k, d)
        })
        .collect();
    for (k, d) in filled {
        density[k] = d;
    }
    let mask = density.iter().map(|d| *d > half_level).collect();
    (ScalarField { grid, values: density }, mask)
}

/// Boundary samples used for the singular part: spacing `h`, and for the
/// half-plane the line truncated to stay clear of the box edge.
pub fn singular_samples<T: Scalar>(grid: &Grid2D<T>, region: &Region<T>) -> Result<Vec<BoundarySample<T>>> {
    let h = grid.spacing();
    let extent = grid.box_radius - T::lit(STENCIL_CELLS[2] + 1.0) * h;
    region.boundary_samples(h, extent)
}

/// Line density `g = (∂_ν H_inside − ∂_ν H_outside)/2π` at each sample.
///
/// Each one-sided derivative comes from the quadratic through `H` at
/// `1.5h, 2.5h, 3.5h` along the normal (bilinear interpolation; the first
/// point is far enough out that its cell lies on one side of `∂U`). Negative
/// values are clamped to zero and counted.
pub fn extract_singular<T: Scalar>(
    h: &ScalarField<T>,
    samples: &[BoundarySample<T>],
) -> Result<(Vec<T>, usize)> {
    let step = h.grid.spacing();
    let two_pi = T::two() * T::PI();
    let raw: Vec<T> = samples
        .par_iter()
        .map(|s| {
            let mut slopes = [T::zero(); 2];
            for (side, sign) in [(0usize, -T::one()), (1usize, T::one())] {
                let mut acc = T::zero();
                for (c, w) in STENCIL_CELLS.iter().zip(STENCIL_WEIGHTS) {
                    let pt = s.position.add(s.outward_normal.scale(sign * T::lit(*c) * step));
                    let v = h.interpolate(pt).ok_or(Error::NearBoxEdge {
                        x: s.position.x.to_f64_lossy(),
                        y: s.position.y.to_f64_lossy(),
                    })?;
                    acc = acc + T::lit(w) * v;
                }
                // derivative of t ↦ H(x ± t ν) at t = 0
                slopes[side] = acc / step;
            }
            // ∂_ν H_inside = −d/dt H(x − tν), ∂_ν H_outside = d/dt H(x + tν)
            Ok((-slopes[0] - slopes[1]) / two_pi)
        })
        .collect::<Result<_>>()?;
    let clamped = raw.iter().filter(|g| **g < T::zero()).count();
    Ok((raw.into_iter().map(|g| g.max(T::zero())).collect(), clamped))
}

pub fn extract<T: Scalar>(h: &ScalarField<T>, region: &Region<T>) -> Result<ExtractedMeasure<T>> {
    let (regular_density, v_mask) = extract_regular(h, region);
    let samples = singular_samples(&h.grid, region)?;
    let (g, clamped) = extract_singular(h, &samples)?;
    let h2 = h.grid.spacing() * h.grid.spacing();
    let mass_regular = regular_density.values.iter().map(|d| *d * h2).sum();
    let singular: Vec<(BoundarySample<T>, T)> = samples.into_iter().zip(g).collect();
    let mass_singular = singular.iter().map(|(s, g)| *g * s.arc_weight).sum();
    Ok(ExtractedMeasure { regular_density, v_mask, singular, mass_regular, mass_singular, clamped })
}

/// Logarithmic energy of `ρ = μ̂ − μ₀` computed twice: by double sums, and as
/// `(1/2π) ∫ |∇H^ρ|²` with `H^ρ` evaluated on the grid. `μ̂` is rescaled to
/// unit mass first so that `ρ` is neutral.
pub fn energy_identity<T: Scalar>(ex: &ExtractedMeasure<T>) -> Result<(T, T)> {
    let grid = ex.regular_density.grid;
    let mu = ex.to_discrete().normalized();
    let mu0 = DiscreteMeasure::circular_law(grid, CIRCULAR_LAW_SUBSAMPLES).normalized();
    let double_sum = signed_log_energy(&mu, &mu0);
    let plus = mu.potential_field();
    let minus = mu0.potential_field();
    let h_rho = ScalarField { grid, values: plus.values.iter().zip(&minus.values).map(|(a, b)| *a - *b).collect() };
    let dirichlet = energy_via_dirichlet(&mu, &mu0, &h_rho)?;
    Ok((double_sum, dirichlet))
}

/// Sub-cell samples per axis for the cells cut by the unit circle.
const CIRCULAR_LAW_SUBSAMPLES: usize = 8;

/// A pass/fail verdict with the number that produced it. `margin` is `None`
/// when the condition holds vacuously.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub ok: bool,
    pub margin: Option<f64>,
}

impl Check {
    fn new(ok: bool, margin: Option<f64>) -> Self {
        Check { ok, margin }
    }
}

/// Distance from `V ∖ Ū` to `∂U`; fine when at least `2h`.
pub fn check_gap<T: Scalar>(v_mask: &[bool], grid: &Grid2D<T>, region: &Region<T>) -> Check {
    let margin = v_mask
        .iter()
        .enumerate()
        .filter(|(_, v)| **v)
        .map(|(k, _)| region.signed_distance(grid.point_at(k)))
        .filter(|s| *s > T::zero())
        .fold(None, |acc: Option<T>, s| Some(acc.map_or(s, |a| a.min(s))));
    match margin {
        None => Check::new(true, None),
        Some(m) => Check::new(m >= T::two() * grid.spacing(), Some(m.to_f64_lossy())),
    }
}

/// Contraction: nodes of `V ∖ Ū` lie in `D` up to one cell (margin is
/// `h − max(|x| − 1)`). Expansion: nodes of `Ū ∩ D` deeper than `2h` are in
/// `V` (margin is the number of misses, negated) and every sample of
/// `∂U ∩ D` carries `g > 1e-6` (reported separately as the support check).
pub fn check_contract_expand<T: Scalar>(
    v_mask: &[bool],
    singular: &[(BoundarySample<T>, T)],
    grid: &Grid2D<T>,
    region: &Region<T>,
) -> (Check, Check, Check) {
    let h = grid.spacing();
    let mut worst_excess: Option<T> = None;
    let mut misses = 0usize;
    for (k, v) in v_mask.iter().enumerate() {
        let x = grid.point_at(k);
        let s = region.signed_distance(x);
        if *v && s > T::zero() {
            let e = x.norm() - T::one();
            worst_excess = Some(worst_excess.map_or(e, |w| w.max(e)));
        }
        if !*v && s < -T::two() * h && x.norm() < T::one() {
            misses += 1;
        }
    }
    let contract = match worst_excess {
        None => Check::new(true, None),
        Some(e) => Check::new(e <= h, Some((h - e).to_f64_lossy())),
    };
    let min_g = singular
        .iter()
        .filter(|(s, _)| s.position.norm() < T::one())
        .map(|(_, g)| *g)
        .fold(None, |acc: Option<T>, g| Some(acc.map_or(g, |a| a.min(g))));
    let support = match min_g {
        None => Check::new(true, None),
        Some(g) => Check::new(g > T::lit(G_PRESENT), Some(g.to_f64_lossy())),
    };
    let expand = Check::new(misses == 0 && support.ok, Some(0.0 - misses as f64));
    (contract, expand, support)
}

/// Nodes all of whose neighbours within `radius` cells are in `mask`.
pub fn erode<T: Scalar>(mask: &[bool], grid: &Grid2D<T>, radius: usize) -> Vec<bool> {
    let n = grid.n as isize;
    let r = radius as isize;
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !mask[k] {
                return false;
            }
            let (i, j) = grid.coords(k);
            let (i, j) = (i as isize, j as isize);
            for dj in -r..=r {
                for di in -r..=r {
                    if di * di + dj * dj > r * r {
                        continue;
                    }
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= n || b >= n || !mask[(b * n + a) as usize] {
                        return false;
                    }
                }
            }
            true
        })
        .collect()
}

/// `|density − 1/π| ≤ tol` on `V` nodes farther than `3h` from `∂V` and `∂U`;
/// the margin is `tol` minus the worst deviation.
pub fn check_density<T: Scalar>(ex: &ExtractedMeasure<T>, region: &Region<T>, tol: T) -> Check {
    let grid = ex.regular_density.grid;
    let inner = erode(&ex.v_mask, &grid, 3);
    let far = T::lit(3.0) * grid.spacing();
    let level = T::one() / T::PI();
    let worst = inner
        .iter()
        .enumerate()
        .filter(|(k, keep)| **keep && region.signed_distance(grid.point_at(*k)).abs() > far)
        .map(|(k, _)| (ex.regular_density.values[k] - level).abs())
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.max(d))));
    match worst {
        None => Check::new(true, None),
        Some(w) => Check::new(w <= tol, Some((tol - w).to_f64_lossy())),
    }
}

/// Checks on `w = H^{μ₀} − H − ½(1 − c₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WReport {
    pub w_range: (f64, f64),
    pub eps: f64,
    /// `−ε ≤ w ≤ ½(c₁ − c₂) + ε`.
    pub bounds_ok: bool,
    /// `|w| ≤ ε` on `D̄ ∩ Ū`, `w > ε` on `V ∖ Ū` away from `∂U`.
    pub w_zero_set_ok: bool,
    /// `w` reaches its upper bound on `V ∖ U` and nowhere farther than a cell
    /// from it (vacuous when `c₂ = −∞`).
    pub w_max_set_ok: bool,
}

pub fn diagnostic_w<T: Scalar>(
    h: &ScalarField<T>,
    c1: T,
    c2: Option<T>,
    v_mask: &[bool],
    region: &Region<T>,
) -> (ScalarField<T>, WReport) {
    let grid = h.grid;
    let step = grid.spacing();
    let spread = c2.map(|c2| c1 - c2);
    let eps = T::lit(10.0) * step * step * (T::one() + spread.unwrap_or(T::zero()));
    let shift = (T::one() - c1) * T::half();
    let w = ScalarField {
        grid,
        values: h.values.iter().enumerate().map(|(k, v)| circular_law_potential(grid.point_at(k)) - *v - shift).collect(),
    };
    let (lo, hi) = w.values.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), v| (a.min(*v), b.max(*v)));
    let upper = spread.map(|s| s * T::half());
    let bounds_ok = lo >= -eps && upper.is_none_or(|u| hi <= u + eps);
    let sd = signed_distances(&grid, region);
    let mut zero_ok = true;
    for k in 0..grid.len() {
        let x = grid.point_at(k);
        if x.norm() <= T::one() && sd[k] <= T::zero() && w.values[k].abs() > eps {
            zero_ok = false;
        }
        if v_mask[k] && sd[k] > T::two() * step && w.values[k] <= eps {
            zero_ok = false;
        }
    }
    // The maximum is attained on contact nodes, where `w` equals the bound up
    // to the contact tolerance. Away from them `w` decays only linearly, so
    // the set is located with that tolerance rather than with `ε`.
    let max_ok = match (upper, spread) {
        (Some(u), Some(s)) => {
            let tol = T::lit(MAX_SET_TOL) * (T::one() + s);
            let outside_v: Vec<bool> = v_mask.iter().zip(&sd).map(|(v, s)| *v && *s > T::zero()).collect();
            let near = dilate(&outside_v, &grid, 1);
            let core = erode(&outside_v, &grid, 1);
            (0..grid.len()).all(|k| {
                let at_max = w.values[k] >= u - tol;
                (!at_max || near[k]) && (!core[k] || at_max)
            })
        }
        _ => true,
    };
    let report = WReport {
        w_range: (lo.to_f64_lossy(), hi.to_f64_lossy()),
        eps: eps.to_f64_lossy(),
        bounds_ok,
        w_zero_set_ok: zero_ok,
        w_max_set_ok: max_ok,
    };
    (w, report)
}

fn dilate<T: Scalar>(mask: &[bool], grid: &Grid2D<T>, radius: usize) -> Vec<bool> {
    let inverted: Vec<bool> = mask.iter().map(|m| !m).collect();
    erode(&inverted, grid, radius).into_iter().map(|m| !m).collect()
}

/// Structural checks of a constrained minimizer, each with its margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub gap: Check,
    pub contract: Check,
    pub expand: Check,
    pub sing_support: Check,
    pub density: Check,
    pub w: WReport,
    pub g_l2_squared: f64,
    pub clamped_samples: usize,
}

impl PropertyReport {
    pub fn all_ok(&self) -> bool {
        self.gap.ok
            && self.contract.ok
            && self.expand.ok
            && self.sing_support.ok
            && self.density.ok
            && self.w.bounds_ok
            && self.w.w_zero_set_ok
            && self.w.w_max_set_ok
    }
}

/// Density tolerance of the quantization check.
pub const DENSITY_TOL: f64 = 0.02;

pub fn property_report<T: Scalar>(
    h: &ScalarField<T>,
    ex: &ExtractedMeasure<T>,
    region: &Region<T>,
    c1: T,
    c2: Option<T>,
) -> PropertyReport {
    let grid = h.grid;
    let gap = check_gap(&ex.v_mask, &grid, region);
    let (contract, expand, sing_support) = check_contract_expand(&ex.v_mask, &ex.singular, &grid, region);
    let density = check_density(ex, region, T::lit(DENSITY_TOL));
    let (_, w) = diagnostic_w(h, c1, c2, &ex.v_mask, region);
    PropertyReport {
        gap,
        contract,
        expand,
        sing_support,
        density,
        w,
        g_l2_squared: ex.g_l2_squared().to_f64_lossy(),
        clamped_samples: ex.clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::obstacle::{solve_cascade, FarField, InitialGuess, ObstacleSpec, SolverOptions};
    use crate::potential::semicircle_potential_closed;

    fn circular_solve(n: usize) -> ScalarField<f64> {
        let g = Grid2D::new(4.0, n).unwrap();
        let spec = ObstacleSpec::single_constant(Region::HalfPlane { a: 0.0 }, 1.0);
        solve_cascade(&spec, g, &FarField::Point(Point::origin()), &InitialGuess::ClampedZero, &SolverOptions::default())
            .unwrap()
            .h
    }

    #[test]
    fn harmonic_field_has_no_measure() {
        let g = Grid2D::<f64>::new(4.0, 81).unwrap();
        let psi = ScalarField::constant(g, f64::NEG_INFINITY);
        let d = crate::obstacle::far_field_dirichlet(g, Point::new(6.0, 1.0));
        let h = crate::obstacle::solve_vi(&psi, &d, &InitialGuess::ClampedZero, &SolverOptions::default()).unwrap().h;
        let ex = extract(&h, &Region::Disk { center: Point::new(0.5, 0.0), radius: 0.7 }).unwrap();
        assert!(ex.v_mask.iter().all(|v| !v));
        assert!(ex.mass_regular < 1e-8, "{}", ex.mass_regular);
        // a harmonic field is C¹ across ∂U: g vanishes to stencil accuracy
        assert!(ex.singular.iter().all(|(_, g)| *g < 1e-3), "{}", ex.mass_singular);
    }

    #[test]
    fn circular_law_density_is_quantized() {
        let h = circular_solve(201);
        let g = h.grid;
        let step = g.spacing();
        let region = Region::HalfPlane { a: 0.0 };
        let ex = extract(&h, &region).unwrap();
        let level = 1.0 / std::f64::consts::PI;
        let mut inside = 0;
        let mut good = 0;
        for k in 0..g.len() {
            let r = g.point_at(k).norm();
            let d = ex.regular_density.values[k];
            if r < 1.0 {
                inside += 1;
                if (d - level).abs() <= 0.02 {
                    good += 1;
                }
            } else if r > 1.0 + step {
                assert!(d.abs() <= 0.02);
            }
        }
        assert!(good as f64 >= 0.95 * inside as f64, "{good}/{inside}");
        // the axis is not part of the measure: no jump in the normal derivative
        assert!(ex.mass_singular < 1e-3, "{}", ex.mass_singular);
        assert!((ex.total_mass() - 1.0).abs() < 0.01, "{}", ex.total_mass());
    }

    #[test]
    fn line_density_of_sampled_semicircle_potential() {
        // H sampled from the closed form of the semicircle on Re z = −2:
        // the extracted line density must be the semicircle density.
        let g = Grid2D::<f64>::new(4.0, 401).unwrap();
        let shift = Point::new(-2.0, 0.0);
        let h = ScalarField::from_fn(g, |x| semicircle_potential_closed(x.sub(shift)));
        let region = Region::HalfPlane { a: 2.0 };
        let ex = extract(&h, &region).unwrap();
        let l1: f64 = ex
            .singular
            .iter()
            .map(|(s, gv)| (gv - crate::potential::semicircle_density(s.position.y)).abs() * s.arc_weight)
            .sum();
        assert!(l1 < 0.02, "L1 error {l1}");
        assert!((ex.mass_singular - 1.0).abs() < 0.01, "{}", ex.mass_singular);
        assert!(ex.mass_regular < 1e-3, "{}", ex.mass_regular);
    }

    #[test]
    fn samples_must_clear_the_box_edge() {
        let g = Grid2D::<f64>::new(2.0, 41).unwrap();
        let h = ScalarField::constant(g, 0.0);
        let samples = Region::HalfPlane { a: 1.9 }.boundary_samples(g.spacing(), 1.0).unwrap();
        assert!(matches!(extract_singular(&h, &samples), Err(Error::NearBoxEdge { .. })));
    }

    #[test]
    fn gap_check_controls() {
        let g = Grid2D::<f64>::new(2.0, 41).unwrap();
        let region = Region::HalfPlane { a: 0.0 };
        let mut mask = vec![false; g.len()];
        assert_eq!(check_gap(&mask, &g, &region), Check { ok: true, margin: None });
        // a V node one cell outside ∂U: gap too small
        let (i, j) = g.nearest(Point::new(g.spacing(), 0.0));
        mask[g.index(i, j)] = true;
        assert!(!check_gap(&mask, &g, &region).ok);
        let mut mask = vec![false; g.len()];
        let (i, j) = g.nearest(Point::new(0.5, 0.0));
        mask[g.index(i, j)] = true;
        let c = check_gap(&mask, &g, &region);
        assert!(c.ok && (c.margin.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn expansion_fails_without_boundary_mass() {
        // mask = D with no boundary mass on ∂U ∩ D
        let g = Grid2D::<f64>::new(2.0, 81).unwrap();
        let region = Region::Disk { center: Point::new(0.8, 0.0), radius: 0.6 };
        let mask: Vec<bool> = (0..g.len()).map(|k| g.point_at(k).norm() < 1.0).collect();
        let samples = region.boundary_samples(g.spacing(), 2.0).unwrap();
        let singular: Vec<_> = samples.into_iter().map(|s| (s, 0.0)).collect();
        let (contract, expand, support) = check_contract_expand(&mask, &singular, &g, &region);
        assert!(contract.ok);
        assert!(!support.ok);
        assert!(!expand.ok);
    }

    #[test]
    fn erosion_shrinks_a_square() {
        let g = Grid2D::<f64>::unchecked(1.0, 21);
        let mask: Vec<bool> = (0..g.len()).map(|k| {
            let (i, j) = g.coords(k);
            (5..=15).contains(&i) && (5..=15).contains(&j)
        }).collect();
        let inner = erode(&mask, &g, 3);
        assert_eq!(inner.iter().filter(|v| **v).count(), 25);
        assert!(dilate(&mask, &g, 1).iter().filter(|v| **v).count() > 121);
    }

    #[test]
    fn w_vanishes_for_the_circular_law() {
        let h = circular_solve(161);
        let region = Region::Disk { center: Point::new(0.8, 0.0), radius: 0.6 };
        let (_, v_mask) = extract_regular(&h, &region);
        let (w, report) = diagnostic_w(&h, 1.0, Some(1.0), &v_mask, &region);
        let g = h.grid;
        for k in 0..g.len() {
            if g.point_at(k).norm() <= 1.0 {
                assert!(w.values[k].abs() <= report.eps);
            }
        }
        assert!(report.bounds_ok);
    }
}
