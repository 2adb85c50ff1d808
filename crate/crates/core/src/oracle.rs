//! Brute-force minimization of the discrete rate functional over probability
//! vectors on a coarse grid, with mass `p` on the nodes of `Ū` and `1 − p`
//! elsewhere. Used to cross-check the obstacle solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::ExtractedMeasure;
use crate::geometry::{BoundarySample, Point, Region};
use crate::grid::Grid2D;
use crate::potential::{
    cell_kernel, energy, segment_pair_log_mean, semicircle_density, AtomKernel, DiscreteMeasure, Segment,
    SEGMENT_SELF_CONSTANT,
};
use crate::scalar::Scalar;

/// Masses on fixed nodes, split into the nodes of `Ū` (total `p`) and the
/// rest (total `1 − p`). The first `cells` nodes are grid cells, the others
/// are the boundary samples in `samples`, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexMeasure<T> {
    pub positions: Vec<Point<T>>,
    pub masses: Vec<T>,
    pub inside: Vec<bool>,
    pub p: T,
    pub cells: usize,
    pub samples: Vec<BoundarySample<T>>,
}

impl<T: Scalar> SimplexMeasure<T> {
    /// Mass on the inside and outside nodes.
    pub fn partition_masses(&self) -> (T, T) {
        self.masses.iter().zip(&self.inside).fold((T::zero(), T::zero()), |(i, o), (m, ins)| {
            if *ins {
                (i + *m, o)
            } else {
                (i, o + *m)
            }
        })
    }

    /// The same masses as a [`DiscreteMeasure`] on `grid`, which must be the
    /// grid the cells were built on.
    pub fn to_discrete(&self, grid: &Grid2D<T>) -> DiscreteMeasure<T> {
        DiscreteMeasure {
            grid: *grid,
            cell_masses: self.masses[..self.cells].to_vec(),
            boundary: self.samples.iter().copied().zip(self.masses[self.cells..].iter().copied()).collect(),
        }
    }
}

/// Step rule of the conditional-gradient iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRule {
    /// Move the whole partition toward its best node with step `2/(k + 2)`.
    OpenLoop,
    /// Move mass from the worst loaded node to the best one, with the exact
    /// minimizing step (the energy is quadratic).
    Pairwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRun<T> {
    pub measure: SimplexMeasure<T>,
    /// `φ = 2H^μ + |x|²` at the nodes.
    pub phi: Vec<T>,
    pub energy: T,
    /// Frank–Wolfe gap `Σ_parts Σ m_i (φ_i − min φ)`, an upper bound on the
    /// distance to the minimal energy.
    pub gap: T,
    pub iterations: usize,
    /// Energy never rose by more than `MONOTONE_SLACK` after step 10.
    pub monotone: bool,
}

/// Allowed energy increase per step before the run is flagged.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Quadratic problem `E(m) = mᵀKm + bᵀm` over a product of two simplices.
struct Problem<T> {
    n: usize,
    kernel: Vec<T>,
    linear: Vec<T>,
    inside: Vec<bool>,
    p: T,
}

impl<T: Scalar> Problem<T> {
    fn k(&self, i: usize, j: usize) -> T {
        self.kernel[i * self.n + j]
    }

    /// `φ = 2Km + b`, the gradient, which is `2H^μ + |x|²` at the nodes.
    fn gradient(&self, m: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let row = &self.kernel[i * self.n..(i + 1) * self.n];
                let km: T = row.iter().zip(m).map(|(k, m)| *k * *m).sum();
                T::two() * km + self.linear[i]
            })
            .collect()
    }

    fn energy_from(&self, m: &[T], phi: &[T]) -> T {
        // mᵀKm = ½ mᵀ(φ − b)
        m.iter().zip(phi).zip(&self.linear).map(|((m, f), b)| *m * (*f + *b) * T::half()).sum()
    }

    fn uniform(&self) -> Result<Vec<T>> {
        let n_in = self.inside.iter().filter(|b| **b).count();
        let n_out = self.n - n_in;
        if n_in == 0 && self.p > T::zero() {
            return Err(Error::InvalidProblem("no grid node lies in the closed region".into()));
        }
        if n_out == 0 && self.p < T::one() {
            return Err(Error::InvalidProblem("no grid node lies outside the closed region".into()));
        }
        Ok(self
            .inside
            .iter()
            .map(|ins| {
                if *ins {
                    self.p / T::from_usize_lossy(n_in)
                } else {
                    (T::one() - self.p) / T::from_usize_lossy(n_out)
                }
            })
            .collect())
    }

    fn parts(&self) -> [(bool, T); 2] {
        [(true, self.p), (false, T::one() - self.p)]
    }

    fn gap(&self, m: &[T], phi: &[T]) -> T {
        self.parts()
            .iter()
            .map(|(side, _)| {
                let idx = (0..self.n).filter(|i| self.inside[*i] == *side);
                let min = idx.clone().map(|i| phi[i]).fold(T::infinity(), T::min);
                idx.map(|i| m[i] * (phi[i] - min)).sum::<T>()
            })
            .sum()
    }

    /// `2K m` restricted to the masses of one partition.
    fn partial_potential(&self, m: &[T], side: bool) -> Vec<T> {
        let masked: Vec<T> = m.iter().zip(&self.inside).map(|(m, s)| if *s == side { *m } else { T::zero() }).collect();
        let full = self.gradient(&masked);
        full.iter().zip(&self.linear).map(|(f, b)| *f - *b).collect()
    }

    fn minimize(&self, iterations: usize, rule: StepRule) -> Result<Minimized<T>> {
        let mut m = self.uniform()?;
        // q[0]: potential of the inside masses, q[1]: of the outside ones
        let mut q = [self.partial_potential(&m, true), self.partial_potential(&m, false)];
        let phi_of = |q: &[Vec<T>; 2]| -> Vec<T> { (0..self.n).map(|i| q[0][i] + q[1][i] + self.linear[i]).collect() };
        let mut phi = phi_of(&q);
        let mut energy = self.energy_from(&m, &phi);
        let mut monotone = true;
        let slack = T::lit(MONOTONE_SLACK);
        for k in 0..iterations {
            for (part, (side, total)) in self.parts().into_iter().enumerate() {
                if total <= T::zero() {
                    continue;
                }
                let members = (0..self.n).filter(|i| self.inside[*i] == side);
                let best = members.clone().fold(None, |best: Option<usize>, i| match best {
                    Some(b) if phi[b] <= phi[i] => Some(b),
                    _ => Some(i),
                });
                let Some(s) = best else { continue };
                match rule {
                    StepRule::OpenLoop => {
                        let gamma = T::two() / T::from_usize_lossy(k + 2);
                        for i in members {
                            m[i] = m[i] * (T::one() - gamma);
                        }
                        m[s] = m[s] + gamma * total;
                        let push = T::two() * gamma * total;
                        for (i, v) in q[part].iter_mut().enumerate() {
                            *v = *v * (T::one() - gamma) + push * self.k(i, s);
                        }
                    }
                    StepRule::Pairwise => {
                        let worst = members.filter(|i| m[*i] > T::zero()).fold(None, |worst: Option<usize>, i| match worst {
                            Some(w) if phi[w] >= phi[i] => Some(w),
                            _ => Some(i),
                        });
                        let Some(v) = worst else { continue };
                        let slope = phi[v] - phi[s];
                        if v == s || !(slope > T::zero()) {
                            continue;
                        }
                        let curvature = self.k(s, s) + self.k(v, v) - T::two() * self.k(s, v);
                        let gamma = if curvature > T::zero() { (slope / (T::two() * curvature)).min(m[v]) } else { m[v] };
                        m[s] = m[s] + gamma;
                        m[v] = (m[v] - gamma).max(T::zero());
                        let push = T::two() * gamma;
                        for (i, val) in q[part].iter_mut().enumerate() {
                            *val = *val + push * (self.k(i, s) - self.k(i, v));
                        }
                    }
                }
                phi = phi_of(&q);
            }
            let next = self.energy_from(&m, &phi);
            if k >= 10 && next > energy + slack {
                monotone = false;
            }
            energy = next;
        }
        // refresh against drift of the incremental updates
        let phi = self.gradient(&m);
        let energy = self.energy_from(&m, &phi);
        let gap = self.gap(&m, &phi);
        Ok(Minimized { masses: m, phi, energy, gap, monotone })
    }
}

struct Minimized<T> {
    masses: Vec<T>,
    phi: Vec<T>,
    energy: T,
    gap: T,
    monotone: bool,
}

impl<T> Minimized<T> {
    fn into_run(self, measure: SimplexMeasure<T>, iterations: usize) -> OracleRun<T> {
        OracleRun {
            measure: SimplexMeasure { masses: self.masses, ..measure },
            phi: self.phi,
            energy: self.energy,
            gap: self.gap,
            iterations,
            monotone: self.monotone,
        }
    }
}

/// Cell centres in the closed region.
pub fn inside_nodes<T: Scalar>(region: &Region<T>, grid: &Grid2D<T>) -> Vec<bool> {
    (0..grid.len()).map(|k| region.signed_distance(grid.point_at(k)) <= T::zero()).collect()
}

/// Boundary samples of `region` at the grid spacing that fall inside the box.
pub fn oracle_samples<T: Scalar>(region: &Region<T>, grid: &Grid2D<T>) -> Result<Vec<BoundarySample<T>>> {
    let r = grid.box_radius;
    Ok(region
        .boundary_samples(grid.spacing(), r)?
        .into_iter()
        .filter(|s| s.position.x.abs() <= r && s.position.y.abs() <= r)
        .collect())
}

fn check_p<T: Scalar>(p: T) -> Result<()> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::InvalidProblem(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Largest coarse grid accepted, nodes per side.
pub const MAX_ORACLE_N: usize = 48;

/// Minimizes the discrete rate functional over the cells of `grid` and the
/// boundary samples of [`oracle_samples`], with mass `p` on the samples and
/// the cells of [`inside_nodes`]. Kernels are those of
/// [`crate::potential::log_interaction`], so energies agree with
/// [`crate::potential::energy`] of [`SimplexMeasure::to_discrete`].
pub fn direct_minimize<T: Scalar>(
    region: &Region<T>,
    p: T,
    grid: &Grid2D<T>,
    iterations: usize,
    rule: StepRule,
) -> Result<OracleRun<T>> {
    check_p(p)?;
    if grid.n > MAX_ORACLE_N {
        return Err(Error::InvalidGrid(format!("oracle grids have at most {MAX_ORACLE_N} nodes per side, got {}", grid.n)));
    }
    let cells = grid.len();
    let h = grid.spacing();
    let samples = if p > T::zero() { oracle_samples(region, grid)? } else { Vec::new() };
    let atoms = AtomKernel::new(grid);
    let n = cells + samples.len();
    let mut positions: Vec<Point<T>> = (0..cells).map(|k| grid.point_at(k)).collect();
    positions.extend(samples.iter().map(|s| s.position));
    let mut kernel = vec![T::zero(); n * n];
    for a in 0..n {
        for b in a..n {
            let k = match (a < cells, b < cells) {
                (true, true) => {
                    let ((ia, ja), (ib, jb)) = (grid.coords(a), grid.coords(b));
                    cell_kernel(h, ia.abs_diff(ib), ja.abs_diff(jb))
                }
                (true, false) => atoms.with_cell(&samples[b - cells], positions[a]),
                (false, true) => atoms.with_cell(&samples[a - cells], positions[b]),
                (false, false) => atoms.with_atom(&samples[a - cells], &samples[b - cells], a == b),
            };
            kernel[a * n + b] = k;
            kernel[b * n + a] = k;
        }
    }
    let cell_extra = h * h / T::lit(6.0);
    let linear = positions
        .iter()
        .enumerate()
        .map(|(k, x)| x.norm_sqr() + if k < cells { cell_extra } else { T::zero() })
        .collect();
    let mut inside = inside_nodes(region, grid);
    inside.resize(n, true);
    let problem = Problem { n, kernel, linear, inside: inside.clone(), p };
    let measure = SimplexMeasure { positions, masses: Vec::new(), inside, p, cells, samples };
    Ok(problem.minimize(iterations, rule)?.into_run(measure, iterations))
}

/// The half-plane problem restricted to the line `Re z = −a`: masses on
/// `segments` equal pieces of `i[−extent, extent]` shifted to the line, all of
/// them counted as inside.
pub fn direct_minimize_line<T: Scalar>(
    a: T,
    extent: T,
    segments: usize,
    iterations: usize,
    rule: StepRule,
) -> Result<OracleRun<T>> {
    if segments < 2 || !(extent > T::zero()) {
        return Err(Error::InvalidGrid("the line needs at least two segments of positive length".into()));
    }
    let w = T::two() * extent / T::from_usize_lossy(segments);
    let positions: Vec<Point<T>> =
        (0..segments).map(|i| Point::new(-a, -extent + w * (T::from_usize_lossy(i) + T::half()))).collect();
    let seg = Segment { tangent: Point::new(T::zero(), T::one()), length: w };
    let n = segments;
    let mut kernel = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let k = if i == j {
                -w.ln() + T::lit(SEGMENT_SELF_CONSTANT)
            } else {
                segment_pair_log_mean(positions[i], seg, positions[j], seg)
            };
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let seg_extra = w * w / T::lit(12.0);
    let linear = positions.iter().map(|x| x.norm_sqr() + seg_extra).collect();
    let inside = vec![true; n];
    let problem = Problem { n, kernel, linear, inside: inside.clone(), p: T::one() };
    let measure = SimplexMeasure { positions, masses: Vec::new(), inside, p: T::one(), cells: 0, samples: Vec::new() };
    Ok(problem.minimize(iterations, rule)?.into_run(measure, iterations))
}

/// `L¹` distance between the masses of a line run and the semicircle law
/// integrated over the same segments.
pub fn line_semicircle_l1<T: Scalar>(run: &OracleRun<T>) -> T {
    let pos = &run.measure.positions;
    let w = pos[1].y - pos[0].y;
    pos.iter()
        .zip(&run.measure.masses)
        .map(|(x, m)| {
            let lo = x.y - w * T::half();
            let sigma = crate::quadrature::integrate(semicircle_density, lo, lo + w, T::lit(1e-12));
            (*m - sigma).abs()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub c1_est: f64,
    /// `None` when the outside partition carries no mass.
    pub c2_est: Option<f64>,
    pub violation: f64,
}

/// Estimates the two constants as mass-weighted means of `φ = 2H + |x|²` on
/// each partition and reports `max (cᵢ − φ)₊` over the partition's nodes.
pub fn kkt_check<T: Scalar>(run: &OracleRun<T>) -> KktReport {
    let mu = &run.measure;
    let phi = &run.phi;
    let n = mu.positions.len();
    let estimate = |side: bool| -> Option<(T, T)> {
        let total: T = (0..n).filter(|i| mu.inside[*i] == side).map(|i| mu.masses[i]).sum();
        if !(total > T::zero()) {
            return None;
        }
        let c = (0..n).filter(|i| mu.inside[*i] == side).map(|i| mu.masses[i] * phi[i]).sum::<T>() / total;
        let viol = (0..n).filter(|i| mu.inside[*i] == side).map(|i| (c - phi[i]).max(T::zero())).fold(T::zero(), T::max);
        Some((c, viol))
    };
    let inner = estimate(true);
    let outer = estimate(false);
    KktReport {
        c1_est: inner.map_or(f64::NAN, |(c, _)| c.to_f64_lossy()),
        c2_est: outer.map(|(c, _)| c.to_f64_lossy()),
        violation: inner
            .map_or(T::zero(), |(_, v)| v)
            .max(outer.map_or(T::zero(), |(_, v)| v))
            .to_f64_lossy(),
    }
}

/// Transfers an extracted measure to the nodes of `layout` (an oracle run
/// on `coarse`). Area mass is split over the coarse cells its fine cell
/// overlaps; boundary mass goes to the nearest boundary node. Cell mass
/// landing on a node of the wrong side of `∂U` moves to the nearest node of
/// the right side.
pub fn rasterize<T: Scalar>(
    ex: &ExtractedMeasure<T>,
    coarse: &Grid2D<T>,
    region: &Region<T>,
    layout: &SimplexMeasure<T>,
) -> Vec<T> {
    let inside = &layout.inside[..layout.cells];
    let mut out = vec![T::zero(); layout.positions.len()];
    let hc = coarse.spacing();
    let n = coarse.n as isize;
    let mut deposit = |x: Point<T>, k: usize, is_in: bool, m: T| {
        if inside[k] == is_in {
            out[k] = out[k] + m;
            return;
        }
        let (ci, cj) = coarse.coords(k);
        let mut best: Option<(T, usize)> = None;
        for dj in -2isize..=2 {
            for di in -2isize..=2 {
                let (i, j) = (ci as isize + di, cj as isize + dj);
                if i < 0 || j < 0 || i >= n || j >= n {
                    continue;
                }
                let q = coarse.index(i as usize, j as usize);
                if inside[q] != is_in {
                    continue;
                }
                let d = coarse.point_at(q).dist(x);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, q));
                }
            }
        }
        let q = best.map_or(k, |(_, q)| q);
        out[q] = out[q] + m;
    };
    // overlaps of [c − w/2, c + w/2] with the coarse cells along one axis
    let overlaps = |c: T, w: T| -> Vec<(usize, T)> {
        let lo = c - w * T::half();
        let hi = c + w * T::half();
        let first = ((lo + coarse.box_radius) / hc + T::half()).floor().to_isize().unwrap_or(0).max(0);
        let last = ((hi + coarse.box_radius) / hc + T::half()).floor().to_isize().unwrap_or(0).min(n - 1);
        (first..=last)
            .filter_map(|i| {
                let centre = coarse.coord(i as usize);
                let a = lo.max(centre - hc * T::half());
                let b = hi.min(centre + hc * T::half());
                (b > a).then(|| (i as usize, (b - a) / w))
            })
            .collect()
    };
    let fine = ex.regular_density.grid;
    let hf = fine.spacing();
    for (k, d) in ex.regular_density.values.iter().enumerate() {
        if *d > T::zero() {
            let x = fine.point_at(k);
            let is_in = region.signed_distance(x) <= T::zero();
            let mass = *d * hf * hf;
            for (i, fx) in overlaps(x.x, hf) {
                for (j, fy) in overlaps(x.y, hf) {
                    deposit(x, coarse.index(i, j), is_in, mass * fx * fy);
                }
            }
        }
    }
    let mut on_samples = vec![T::zero(); layout.samples.len()];
    for (s, g) in &ex.singular {
        if *g > T::zero() {
            let m = *g * s.arc_weight;
            let nearest = layout.samples.iter().enumerate().map(|(k, c)| (c.position.dist(s.position), k)).fold(
                None,
                |best: Option<(T, usize)>, (d, k)| match best {
                    Some((bd, _)) if bd <= d => best,
                    _ => Some((d, k)),
                },
            );
            match nearest {
                Some((_, k)) => on_samples[k] = on_samples[k] + m,
                None => {
                    let (i, j) = coarse.nearest(s.position);
                    deposit(s.position, coarse.index(i, j), true, m);
                }
            }
        }
    }
    out[layout.cells..].copy_from_slice(&on_samples);
    out
}

/// Oracle against solver on a coarse grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub energy_oracle: f64,
    /// Energy of the rasterized solver measure (rescaled to unit mass).
    pub energy_solver: f64,
    pub l1_distance: f64,
    pub c1_est: f64,
    pub c2_est: Option<f64>,
    pub violation: f64,
    pub gap: f64,
    pub monotone: bool,
}

/// Box half-width of the default oracle grid; the minimizers of interest
/// live in `D` and in regions that do not reach past it.
pub const ORACLE_BOX: f64 = 1.5;
pub const ORACLE_N: usize = 32;
pub const ORACLE_ITERATIONS: usize = 20_000;

pub fn oracle_grid<T: Scalar>() -> Grid2D<T> {
    Grid2D::unchecked(T::lit(ORACLE_BOX), ORACLE_N)
}

pub fn compare_with_solver<T: Scalar>(
    ex: &ExtractedMeasure<T>,
    region: &Region<T>,
    p: T,
    coarse: &Grid2D<T>,
    iterations: usize,
) -> Result<OracleComparison> {
    let run = direct_minimize(region, p, coarse, iterations, StepRule::Pairwise)?;
    let kkt = kkt_check(&run);
    let raster = rasterize(ex, coarse, region, &run.measure);
    let total: T = raster.iter().copied().sum();
    let raster: Vec<T> = raster.into_iter().map(|m| m / total).collect();
    let solver_measure = SimplexMeasure { masses: raster.clone(), ..run.measure.clone() };
    let energy_solver = energy(&solver_measure.to_discrete(coarse));
    let l1: T = raster.iter().zip(&run.measure.masses).map(|(a, b)| (*a - *b).abs()).sum();
    Ok(OracleComparison {
        energy_oracle: run.energy.to_f64_lossy(),
        energy_solver: energy_solver.to_f64_lossy(),
        l1_distance: l1.to_f64_lossy(),
        c1_est: kkt.c1_est,
        c2_est: kkt.c2_est,
        violation: kkt.violation,
        gap: run.gap.to_f64_lossy(),
        monotone: run.monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_run(iterations: usize, rule: StepRule) -> OracleRun<f64> {
        direct_minimize(&Region::HalfPlane { a: -10.0 }, 1.0, &oracle_grid(), iterations, rule).unwrap()
    }

    fn disk() -> Region<f64> {
        Region::Disk { center: Point::new(0.8, 0.0), radius: 0.6 }
    }

    #[test]
    fn unconstrained_run_reaches_the_circular_law() {
        let run = free_run(10_000, StepRule::Pairwise);
        assert!((run.energy - 0.75).abs() < 0.01, "{}", run.energy);
        assert!(run.monotone);
        assert!(run.gap <= 1e-3 * run.energy.abs());
        let kkt = kkt_check(&run);
        assert!((kkt.c1_est - 1.0).abs() < 0.01, "{kkt:?}");
        assert!(kkt.violation <= 1e-2);
        assert_eq!(kkt.c2_est, None);
        let grid: Grid2D<f64> = oracle_grid();
        let h = grid.spacing();
        for k in 0..grid.len() {
            let r = grid.point_at(k).norm();
            if r < 0.8 {
                let density = run.measure.masses[k] / (h * h);
                assert!((density * std::f64::consts::PI - 1.0).abs() < 0.1, "{r} {density}");
            } else if r > 1.2 {
                assert!(run.measure.masses[k] < 1e-12);
            }
        }
    }

    #[test]
    fn open_loop_rule_converges() {
        let run = free_run(10_000, StepRule::OpenLoop);
        assert!((run.energy - 0.75).abs() < 0.01);
        assert!(run.gap <= 1e-2);
    }

    #[test]
    fn energy_matches_the_potential_module() {
        let grid: Grid2D<f64> = oracle_grid();
        let run = direct_minimize(&disk(), 0.3, &grid, 2_000, StepRule::Pairwise).unwrap();
        let e = energy(&run.measure.to_discrete(&grid));
        assert!((e - run.energy).abs() < 1e-10, "{e} vs {}", run.energy);
    }

    #[test]
    fn partitions_hold_their_mass() {
        let region = disk();
        let p = 2.0 * region.circular_law_mass();
        let run = direct_minimize(&region, p, &oracle_grid(), 5_000, StepRule::Pairwise).unwrap();
        let (i, o) = run.measure.partition_masses();
        assert!((i - p).abs() < 1e-12 && (o - (1.0 - p)).abs() < 1e-12);
        assert!(run.measure.masses.iter().all(|m| *m >= 0.0));
        assert!(run.measure.samples.len() > 10);
        assert!(run.measure.inside[run.measure.cells..].iter().all(|b| *b));
    }

    #[test]
    fn constrained_disk_has_c1_above_c2() {
        let region = disk();
        let p = 2.0 * region.circular_law_mass();
        let run = direct_minimize(&region, p, &oracle_grid(), ORACLE_ITERATIONS, StepRule::Pairwise).unwrap();
        let kkt = kkt_check(&run);
        assert!(kkt.c1_est > kkt.c2_est.unwrap(), "{kkt:?}");
        assert!(kkt.violation <= 1e-2);
        assert!(run.monotone);
    }

    #[test]
    fn uniform_start_violates_kkt() {
        let run = free_run(0, StepRule::Pairwise);
        assert!(kkt_check(&run).violation > 0.5, "{:?}", kkt_check(&run));
    }

    #[test]
    fn line_problem_gives_the_semicircle() {
        let run = direct_minimize_line(2.0, 2.0, 64, 10_000, StepRule::Pairwise).unwrap();
        assert!(line_semicircle_l1(&run) <= 0.05);
        assert!(run.monotone);
        let total: f64 = run.measure.masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let grid: Grid2D<f64> = oracle_grid();
        assert!(direct_minimize(&disk(), 1.5, &grid, 10, StepRule::Pairwise).is_err());
        let big = Grid2D::unchecked(1.5, 64);
        assert!(direct_minimize(&disk(), 0.5, &big, 10, StepRule::Pairwise).is_err());
        assert!(direct_minimize_line(2.0, 2.0, 1, 10, StepRule::Pairwise).is_err());
    }
}
