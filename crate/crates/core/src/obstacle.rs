//! Projected SOR for the two-constant obstacle problem and calibration of the
//! constants against the mass constraints.
//!
//! The potential `H` of the minimizer solves `min{−ΔH, H − ψ} = 0` with
//! `ψ = ½(c₁ − |x|²)` on the closed region and `½(c₂ − |x|²)` elsewhere. The
//! measure is read back as `−Δ_h H / 2π`, so on the grid the mass carried by a
//! node is `max(4H − ΣH_nb, 0) / 2π`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Region};
use crate::grid::{Grid2D, ScalarField};
use crate::scalar::Scalar;

/// Region plus obstacle constants. `c2 = None` is the `c₂ = −∞` branch used
/// when `p = 1`: outside `Ū` the potential is unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec<T> {
    pub region: Region<T>,
    pub c1: T,
    pub c2: Option<T>,
    pub p: T,
}

impl<T: Scalar> ObstacleSpec<T> {
    /// Checks `c₁ > c₂`, `μ₀(U) < p ≤ 1` and that `c₂ = −∞` exactly when `p = 1`.
    pub fn validate(&self) -> Result<()> {
        check_fraction(&self.region, self.p)?;
        match self.c2 {
            Some(c2) if !(self.c1 > c2) => {
                Err(Error::InvalidProblem(format!("need c1 > c2, got c1 = {}, c2 = {}", self.c1, c2)))
            }
            Some(_) if self.p == T::one() => Err(Error::InvalidProblem("p = 1 requires c2 = -inf".into())),
            None if self.p < T::one() => Err(Error::InvalidProblem("c2 = -inf requires p = 1".into())),
            _ => Ok(()),
        }
    }

    /// The single obstacle `½(c − |x|²)` on the whole plane, whose solution for
    /// `c = 1` is the circular-law potential.
    pub fn single_constant(region: Region<T>, c: T) -> Self {
        let p = region.circular_law_mass();
        ObstacleSpec { region, c1: c, c2: Some(c), p }
    }

    pub fn obstacle_at(&self, pt: Point<T>) -> T {
        let c = if self.region.signed_distance(pt) <= T::zero() { Some(self.c1) } else { self.c2 };
        match c {
            Some(c) => (c - pt.norm_sqr()) * T::half(),
            None => T::neg_infinity(),
        }
    }

    /// `1e-6 (c₁ − c₂ + 1)`; the spread is taken as zero when `c₂ = −∞`.
    pub fn contact_tolerance(&self) -> T {
        let spread = self.c2.map_or(T::zero(), |c2| self.c1 - c2);
        T::lit(1e-6) * (spread + T::one())
    }
}

pub(crate) fn check_fraction<T: Scalar>(region: &Region<T>, p: T) -> Result<()> {
    let m0 = region.circular_law_mass();
    if !(p > m0 && p <= T::one()) {
        return Err(Error::InvalidProblem(format!("p must lie in (mu0(U), 1] = ({m0:.6}, 1], got {p}")));
    }
    if !region.leaves_room_in_disk() {
        return Err(Error::InvalidProblem("D \\ U is empty".into()));
    }
    Ok(())
}

/// Obstacle field on the grid. Nodes outside `Ū` carry `−∞` on the `c₂ = −∞`
/// branch, which the solver treats as "no constraint".
pub fn build_obstacle<T: Scalar>(spec: &ObstacleSpec<T>, grid: Grid2D<T>) -> ScalarField<T> {
    ScalarField::from_fn(grid, |pt| spec.obstacle_at(pt))
}

/// Fixed values on the outer ring of the box, as `(node index, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletData<T> {
    pub grid: Grid2D<T>,
    pub nodes: Vec<(usize, T)>,
}

fn ring_nodes<T: Scalar>(grid: &Grid2D<T>) -> Vec<usize> {
    (0..grid.len())
        .filter(|&k| {
            let (i, j) = grid.coords(k);
            grid.is_boundary(i, j)
        })
        .collect()
}

impl<T: Scalar> DirichletData<T> {
    pub fn from_fn(grid: Grid2D<T>, f: impl Fn(Point<T>) -> T + Sync) -> Self {
        let nodes = ring_nodes(&grid).into_par_iter().map(|k| (k, f(grid.point_at(k)))).collect();
        DirichletData { grid, nodes }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.nodes.iter().zip(&other.nodes).map(|(a, b)| (a.1 - b.1).abs()).fold(T::zero(), T::max)
    }
}

/// `−log|x − center|` on the box boundary: the potential of a unit mass.
pub fn far_field_dirichlet<T: Scalar>(grid: Grid2D<T>, center: Point<T>) -> DirichletData<T> {
    DirichletData::from_fn(grid, |x| -x.dist(center).ln())
}

/// Source of boundary data that can be evaluated on any grid of a cascade.
#[derive(Debug, Clone, PartialEq)]
pub enum FarField<T> {
    /// Unit point mass.
    Point(Point<T>),
    /// Potential of a collection of point masses (typically the node masses of
    /// a previous solve).
    Atoms(Vec<(Point<T>, T)>),
}

impl<T: Scalar> FarField<T> {
    pub fn on(&self, grid: Grid2D<T>) -> DirichletData<T> {
        match self {
            FarField::Point(c) => far_field_dirichlet(grid, *c),
            FarField::Atoms(atoms) => DirichletData::from_fn(grid, |x| {
                atoms.iter().map(|(y, m)| -*m * x.dist(*y).ln()).fold(T::zero(), |s, v| s + v)
            }),
        }
    }

    /// Atoms of the discrete measure `−Δ_h H / 2π`.
    pub fn from_solution(h: &ScalarField<T>) -> Self {
        let grid = h.grid;
        let masses = node_masses(h);
        FarField::Atoms(
            masses
                .iter()
                .enumerate()
                .filter(|(_, m)| **m > T::zero())
                .map(|(k, m)| (grid.point_at(k), *m))
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub enum InitialGuess<T> {
    /// `max(0, ψ)` in the interior.
    ClampedZero,
    /// The circular-law potential centred at the far-field centre, clamped to `ψ`.
    FarField(Point<T>),
    /// An explicit field, resampled if it lives on another grid.
    Field(ScalarField<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<T> {
    /// Relaxation factor in `[1, 2)`; `None` picks `2/(1 + sin(π/(n−1)))`.
    pub omega: Option<T>,
    pub tol: T,
    /// Sweep cap; `None` means `200 n`.
    pub max_iter: Option<usize>,
    /// Sweeps between residual evaluations.
    pub check_every: usize,
    pub contact_tol: T,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions { omega: None, tol: T::lit(1e-8), max_iter: None, check_every: 10, contact_tol: T::lit(1e-6) }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn omega_for(&self, grid: &Grid2D<T>) -> T {
        self.omega.unwrap_or_else(|| {
            let s = (T::PI() / T::from_usize_lossy(grid.n - 1)).sin();
            T::two() / (T::one() + s)
        })
    }

    pub fn max_iter_for(&self, grid: &Grid2D<T>) -> usize {
        self.max_iter.unwrap_or(200 * grid.n)
    }
}

#[derive(Debug, Clone)]
pub struct VISolveResult<T> {
    pub h: ScalarField<T>,
    pub iterations: usize,
    pub residual: T,
    pub contact_mask: Vec<bool>,
    pub converged: bool,
}

/// Residual scale turning the stencil defect `4H − ΣH_nb` into potential
/// units: `(n−1)²/8` bounds the discrete Green's function of the box.
pub fn residual_scale<T: Scalar>(grid: &Grid2D<T>) -> T {
    let m = T::from_usize_lossy(grid.n - 1);
    (m * m / T::lit(8.0)).max(T::one())
}

/// `max |min(4H − ΣH_nb, H − ψ)|` over interior nodes, times [`residual_scale`].
pub fn complementarity_residual<T: Scalar>(h: &ScalarField<T>, psi: &ScalarField<T>) -> T {
    let n = h.grid.n;
    let v = &h.values;
    let rows: Vec<T> = (1..n - 1)
        .into_par_iter()
        .map(|j| {
            let mut worst = T::zero();
            for i in 1..n - 1 {
                let k = j * n + i;
                let lap = T::lit(4.0) * v[k] - v[k - 1] - v[k + 1] - v[k - n] - v[k + n];
                let r = lap.min(v[k] - psi.values[k]).abs();
                if r > worst {
                    worst = r;
                }
            }
            worst
        })
        .collect();
    rows.into_iter().fold(T::zero(), T::max) * residual_scale(&h.grid)
}

fn initial_field<T: Scalar>(
    psi: &ScalarField<T>,
    dirichlet: &DirichletData<T>,
    init: &InitialGuess<T>,
) -> ScalarField<T> {
    let grid = psi.grid;
    let mut h = match init {
        InitialGuess::ClampedZero => ScalarField::constant(grid, T::zero()),
        InitialGuess::FarField(c) => ScalarField::from_fn(grid, |x| {
            let r = x.dist(*c);
            if r <= T::one() {
                (T::one() - r * r) * T::half()
            } else {
                -r.ln()
            }
        }),
        InitialGuess::Field(f) if f.grid == grid => f.clone(),
        InitialGuess::Field(f) => f.resample(grid),
    };
    for (v, p) in h.values.iter_mut().zip(&psi.values) {
        *v = v.max(*p);
    }
    for &(k, val) in &dirichlet.nodes {
        h.values[k] = val;
    }
    h
}

/// Projected SOR on the five-point Laplacian in red-black order. Each
/// update relaxes towards the Gauss–Seidel value and clamps to `ψ`, so the
/// returned field satisfies `H ≥ ψ` exactly. Ring nodes take `dirichlet`.
pub fn solve_vi<T: Scalar>(
    psi: &ScalarField<T>,
    dirichlet: &DirichletData<T>,
    init: &InitialGuess<T>,
    opts: &SolverOptions<T>,
) -> Result<VISolveResult<T>> {
    let grid = psi.grid;
    if dirichlet.grid != grid {
        return Err(Error::InvalidGrid("boundary data and obstacle live on different grids".into()));
    }
    let omega = opts.omega_for(&grid);
    if !(omega >= T::one() && omega < T::two()) {
        return Err(Error::Config(format!("relaxation factor must lie in [1, 2), got {omega}")));
    }
    if !(opts.tol > T::zero()) {
        return Err(Error::Config("solver tolerance must be positive".into()));
    }
    let n = grid.n;
    let max_iter = opts.max_iter_for(&grid);
    let check_every = opts.check_every.max(1);
    let mut h = initial_field(psi, dirichlet, init);
    let quarter = T::lit(0.25);
    let p = &psi.values;
    let mut iterations = 0;
    let mut residual = complementarity_residual(&h, psi);
    while residual > opts.tol && iterations < max_iter {
        let sweeps = check_every.min(max_iter - iterations);
        for _ in 0..sweeps {
            psor_sweep(&mut h.values, p, n, omega, quarter);
        }
        iterations += sweeps;
        residual = complementarity_residual(&h, psi);
        if !residual.is_finite() {
            return Err(Error::NotConverged { iterations, residual: residual.to_f64_lossy() });
        }
    }
    let contact_mask = h.values.iter().zip(p).map(|(v, q)| *v - *q <= opts.contact_tol).collect();
    Ok(VISolveResult { h, iterations, residual, converged: residual <= opts.tol, contact_mask })
}

/// One red-black sweep: nodes with `i + j` even first, then odd. Within a
/// colour every update reads only nodes of the other colour.
fn psor_sweep<T: Scalar>(v: &mut [T], psi: &[T], n: usize, omega: T, quarter: T) {
    for colour in 0..2 {
        for j in 1..n - 1 {
            let (before, rest) = v.split_at_mut(j * n);
            let (cur, after) = rest.split_at_mut(n);
            let up = &before[(j - 1) * n..];
            let down = &after[..n];
            let obstacle = &psi[j * n..(j + 1) * n];
            let start = 1 + (j + 1 + colour) % 2;
            let mut i = start;
            while i < n - 1 {
                let gs = (cur[i - 1] + cur[i + 1] + up[i] + down[i]) * quarter;
                let relaxed = cur[i] + omega * (gs - cur[i]);
                cur[i] = if relaxed > obstacle[i] { relaxed } else { obstacle[i] };
                i += 2;
            }
        }
    }
}

/// Per-node masses `max(4H − ΣH_nb, 0)/2π`; zero on the box ring.
pub fn node_masses<T: Scalar>(h: &ScalarField<T>) -> Vec<T> {
    let grid = h.grid;
    let n = grid.n;
    let two_pi = T::two() * T::PI();
    let mut out = vec![T::zero(); grid.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        if j == 0 || j == n - 1 {
            return;
        }
        for (i, m) in row.iter_mut().enumerate().take(n - 1).skip(1) {
            *m = h.neg_laplacian_scaled(i, j).max(T::zero()) / two_pi;
        }
    });
    out
}

/// Total mass and the mass attributed to `Ū`, which is dilated by half a
/// cell so that the smeared boundary layer counts as inside.
pub fn measure_masses<T: Scalar>(h: &ScalarField<T>, region: &Region<T>) -> (T, T) {
    let grid = h.grid;
    let half = grid.spacing() * T::half();
    let masses = node_masses(h);
    let mut total = T::zero();
    let mut in_u = T::zero();
    for (k, m) in masses.iter().enumerate() {
        if *m == T::zero() {
            continue;
        }
        total = total + *m;
        if region.signed_distance(grid.point_at(k)) <= half {
            in_u = in_u + *m;
        }
    }
    (total, in_u)
}

/// Grids of a coarse-to-fine cascade ending at `grid`, coarsest first.
pub fn cascade_levels<T: Scalar>(grid: Grid2D<T>, min_n: usize) -> Vec<Grid2D<T>> {
    let mut levels = vec![grid];
    while let Some(c) = levels.last().and_then(|g| g.coarser()) {
        if c.n < min_n {
            break;
        }
        levels.push(c);
    }
    levels.reverse();
    levels
}

const CASCADE_MIN_N: usize = 51;

/// Solves a fixed obstacle on `grid`, first solving on coarser grids of the
/// same box and prolonging each solution as the next initial guess.
pub fn solve_cascade<T: Scalar>(
    spec: &ObstacleSpec<T>,
    grid: Grid2D<T>,
    far: &FarField<T>,
    init: &InitialGuess<T>,
    opts: &SolverOptions<T>,
) -> Result<VISolveResult<T>> {
    let mut guess = init.clone();
    let mut last = None;
    for g in cascade_levels(grid, CASCADE_MIN_N) {
        let psi = build_obstacle(spec, g);
        let res = solve_vi(&psi, &far.on(g), &guess, opts)?;
        guess = InitialGuess::Field(res.h.clone());
        last = Some(res);
    }
    Ok(last.expect("cascade has at least one level"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions<T> {
    pub solver: SolverOptions<T>,
    pub tol_mass: T,
    /// Recalibrations with boundary data recomputed from the current measure.
    pub far_field_refreshes: usize,
    /// Solve on coarser grids first and narrow the brackets from there.
    pub cascade: bool,
}

impl<T: Scalar> Default for CalibrationOptions<T> {
    fn default() -> Self {
        CalibrationOptions { solver: SolverOptions::default(), tol_mass: T::lit(1e-4), far_field_refreshes: 2, cascade: true }
    }
}

/// Calibrated constants with the final solve on the requested grid.
#[derive(Debug, Clone)]
pub struct Calibration<T> {
    pub spec: ObstacleSpec<T>,
    pub solve: VISolveResult<T>,
    pub far_field: FarField<T>,
    pub total_mass: T,
    pub in_u_mass: T,
    /// Number of obstacle solves over all levels.
    pub solves: usize,
    /// `(n, c₁, c₂)` reached on each cascade level, coarsest first.
    pub levels: Vec<(usize, T, Option<T>)>,
}

struct Probe<T, P> {
    x: T,
    f: T,
    /// Inexact probes only carry the sign of the residual.
    exact: bool,
    payload: P,
}

impl<T: Scalar, P> Probe<T, P> {
    fn accepts(&self, tol: T) -> bool {
        self.exact && self.f.abs() <= tol
    }
}

/// Root of a nondecreasing function. Starts at `guess`, steps towards the
/// root (by `slope` when known, else by `step`, doubling) until the sign
/// changes, never going above `cap`, then runs Illinois regula falsi on the
/// bracket. Also returns the secant slope of the last two exact probes.
fn monotone_root<T: Scalar, P>(
    mut eval: impl FnMut(T) -> Result<Probe<T, P>>,
    guess: T,
    step: T,
    slope: Option<T>,
    cap: Option<T>,
    tol: T,
    label: &str,
) -> Result<(Probe<T, P>, Option<T>)> {
    let cap_at = |x: T| cap.map_or(x, |c| x.min(c));
    let mut secant: Option<(T, T)> = None;
    let mut slope_est = slope.filter(|s| *s > T::zero());
    let note = |pr: &Probe<T, P>, secant: &mut Option<(T, T)>, slope_est: &mut Option<T>| {
        if pr.exact {
            if let Some((x0, f0)) = *secant {
                let s = (pr.f - f0) / (pr.x - x0);
                if s > T::zero() && s.is_finite() {
                    *slope_est = Some(s);
                }
            }
            *secant = Some((pr.x, pr.f));
        }
    };
    let mut prev = eval(cap_at(guess))?;
    note(&prev, &mut secant, &mut slope_est);
    if prev.accepts(tol) {
        return Ok((prev, slope_est));
    }
    let mut width = step.abs().max(T::lit(1e-6));
    let mut expansions = 0;
    let (mut a, mut b) = loop {
        if expansions == 60 {
            return Err(Error::BracketFailed(format!("{label}: no sign change after 60 expansions from {guess}")));
        }
        let up = prev.f < T::zero();
        if up && cap.is_some_and(|c| prev.x >= c) {
            return Err(Error::BracketFailed(format!("{label}: no upper bracket below the cap {}", prev.x)));
        }
        let newton = match slope_est {
            Some(s) if prev.exact => (prev.f / s).abs() * T::lit(1.2),
            _ => T::zero(),
        };
        let d = if newton > T::zero() && expansions == 0 { newton.min(width * T::lit(8.0)) } else { width.max(newton) };
        let x = if up { cap_at(prev.x + d) } else { prev.x - d };
        let next = eval(x)?;
        note(&next, &mut secant, &mut slope_est);
        if next.accepts(tol) {
            return Ok((next, slope_est));
        }
        width = d * T::two();
        expansions += 1;
        if (next.f < T::zero()) != up {
            break if up { (prev, next) } else { (next, prev) };
        }
        prev = next;
    };
    // a.f < 0 ≤ b.f
    let (mut fa, mut fb) = (a.f, b.f);
    let mut side = 0i8;
    for _ in 0..200 {
        let span = b.x - a.x;
        if span <= T::lit(1e-13) * (T::one() + a.x.abs().max(b.x.abs())) {
            break;
        }
        let mut x = if a.exact && b.exact { (a.x * fb - b.x * fa) / (fb - fa) } else { (a.x + b.x) * T::half() };
        if !(x > a.x && x < b.x) {
            x = (a.x + b.x) * T::half();
        }
        let c = eval(x)?;
        note(&c, &mut secant, &mut slope_est);
        if c.accepts(tol) {
            return Ok((c, slope_est));
        }
        if c.f < T::zero() {
            fa = c.f;
            a = c;
            if side == -1 {
                fb = fb * T::half();
            }
            side = -1;
        } else {
            fb = c.f;
            b = c;
            if side == 1 {
                fa = fa * T::half();
            }
            side = 1;
        }
    }
    // bracket collapsed above the tolerance: a jump in the discrete response
    match (a.exact, b.exact) {
        (true, true) => Ok((if a.f.abs() <= b.f.abs() { a } else { b }, slope_est)),
        (true, false) => Ok((a, slope_est)),
        (false, true) => Ok((b, slope_est)),
        (false, false) => Err(Error::BracketFailed(format!("{label}: bracket collapsed at {}", a.x))),
    }
}

/// Search state carried from one calibration pass to the next.
#[derive(Debug, Clone, Copy)]
struct SearchState<T> {
    c1: T,
    c1_step: T,
    /// Current estimate of `c₁ − c₂`.
    spread: T,
    spread_step: T,
    slope_c1: Option<T>,
    slope_c2: Option<T>,
}

struct Level<'a, T: Scalar> {
    region: &'a Region<T>,
    p: T,
    grid: Grid2D<T>,
    dirichlet: DirichletData<T>,
    opts: &'a CalibrationOptions<T>,
    warm: InitialGuess<T>,
    solves: usize,
    state: SearchState<T>,
}

#[derive(Clone)]
struct Solved<T> {
    c1: T,
    c2: Option<T>,
    result: VISolveResult<T>,
    total: T,
    in_u: T,
}

impl<T: Scalar> Level<'_, T> {
    fn solve(&mut self, c1: T, c2: Option<T>) -> Result<Solved<T>> {
        let spec = ObstacleSpec { region: self.region.clone(), c1, c2, p: self.p };
        let psi = build_obstacle(&spec, self.grid);
        let opts = SolverOptions { contact_tol: spec.contact_tolerance(), ..self.opts.solver };
        let result = solve_vi(&psi, &self.dirichlet, &self.warm, &opts)?;
        self.solves += 1;
        if !result.converged {
            return Err(Error::NotConverged { iterations: result.iterations, residual: result.residual.to_f64_lossy() });
        }
        self.warm = InitialGuess::Field(result.h.clone());
        let (total, in_u) = measure_masses(&result.h, self.region);
        Ok(Solved { c1, c2, result, total, in_u })
    }

    fn touches_outside(&self, s: &Solved<T>) -> bool {
        let g = self.grid;
        s.result.contact_mask.iter().enumerate().any(|(k, &c)| {
            let (i, j) = g.coords(k);
            c && !g.is_boundary(i, j) && self.region.signed_distance(g.point_at(k)) > T::zero()
        })
    }

    /// Solves for `c₂ ≤ c₁` with total mass one and reports the residual of
    /// the mass in `Ū`. When no such `c₂` exists the probe is inexact and
    /// only its sign is meaningful.
    fn inner(&mut self, c1: T) -> Result<Probe<T, Solved<T>>> {
        let tol = self.opts.tol_mass * T::lit(0.25);
        let p = self.p;
        let st = self.state;
        let mut at_cap: Option<Solved<T>> = None;
        let mut saturated: Option<Solved<T>> = None;
        let found = monotone_root(
            |c2| {
                let s = self.solve(c1, Some(c2))?;
                if c2 >= c1 {
                    at_cap = Some(s.clone());
                }
                // lowering c₂ cannot remove mass once nothing outside Ū touches
                if s.total > T::one() + tol && !self.touches_outside(&s) {
                    saturated = Some(s);
                    return Err(Error::BracketFailed("saturated".into()));
                }
                Ok(Probe { x: c2, f: s.total - T::one(), exact: true, payload: s })
            },
            c1 - st.spread,
            st.spread_step,
            st.slope_c2,
            Some(c1),
            tol,
            "c2",
        );
        match found {
            Ok((probe, slope)) => {
                let s = probe.payload;
                self.state.slope_c2 = slope.or(self.state.slope_c2);
                self.state.spread = c1 - probe.x;
                Ok(Probe { x: c1, f: s.in_u - p, exact: true, payload: s })
            }
            Err(e @ Error::BracketFailed(_)) => match (saturated, at_cap) {
                // c₁ alone already places more than unit mass
                (Some(s), _) => Ok(Probe { x: c1, f: (s.in_u - p).max(s.total - T::one()), exact: false, payload: s }),
                // c₁ is too low for any c₂ ≤ c₁
                (None, Some(s)) => Ok(Probe { x: c1, f: (s.in_u - p).min(s.total - T::one()), exact: false, payload: s }),
                (None, None) => Err(e),
            },
            Err(e) => Err(e),
        }
    }

    fn calibrate(&mut self) -> Result<Solved<T>> {
        let tol = self.opts.tol_mass * T::half();
        let st = self.state;
        if self.p == T::one() {
            let (probe, slope) = monotone_root(
                |c1| {
                    let s = self.solve(c1, None)?;
                    Ok(Probe { x: c1, f: s.total - T::one(), exact: true, payload: s })
                },
                st.c1,
                st.c1_step,
                st.slope_c1,
                None,
                tol,
                "c1",
            )?;
            self.state.slope_c1 = slope.or(st.slope_c1);
            return Ok(probe.payload);
        }
        let (probe, slope) = monotone_root(|c1| self.inner(c1), st.c1, st.c1_step, st.slope_c1, None, tol, "c1")?;
        self.state.slope_c1 = slope.or(st.slope_c1);
        if !probe.exact {
            return Err(Error::BracketFailed(format!("no admissible c2 at c1 = {}", probe.x)));
        }
        Ok(probe.payload)
    }
}

/// Finds `(c₁, c₂)` with total mass one and mass `p` in `Ū`, both within
/// `tol_mass`. For `p < 1` an outer search on `c₁` targets the mass in `Ū`
/// and, for each trial `c₁`, an inner search on `c₂` targets the total mass;
/// both responses are monotone. For `p = 1` a single search on `c₁` with
/// `c₂ = −∞`. With `cascade` the constants are first found on coarser grids
/// and the boundary data is recomputed from the measure found there.
pub fn calibrate_constants<T: Scalar>(
    region: &Region<T>,
    p: T,
    grid: Grid2D<T>,
    opts: &CalibrationOptions<T>,
) -> Result<Calibration<T>> {
    check_fraction(region, p)?;
    let levels = if opts.cascade { cascade_levels(grid, CASCADE_MIN_N) } else { vec![grid] };
    // squared diameter of the unit disk sets the initial search scale
    let diam2 = T::lit(4.0);
    let mut state = SearchState {
        c1: T::one(),
        c1_step: T::two() * diam2 / T::lit(8.0),
        spread: T::lit(0.25),
        spread_step: T::lit(4.0) * diam2 / T::lit(16.0),
        slope_c1: None,
        slope_c2: None,
    };
    let mut far = FarField::Point(Point::origin());
    let mut warm = InitialGuess::FarField(Point::origin());
    let mut history: Vec<(usize, T, Option<T>)> = Vec::new();
    let mut solves = 0;
    let mut last: Option<Solved<T>> = None;
    for (li, g) in levels.iter().enumerate() {
        let first = li == 0;
        let final_level = li + 1 == levels.len();
        let max_passes = if first || final_level { opts.far_field_refreshes + 1 } else { 1 };
        let mut pass = 0;
        loop {
            let mut level =
                Level { region, p, grid: *g, dirichlet: far.on(*g), opts, warm: warm.clone(), solves: 0, state };
            let solved = level.calibrate()?;
            solves += level.solves;
            let refreshed = FarField::from_solution(&solved.result.h);
            let change = refreshed.on(*g).max_abs_diff(&level.dirichlet);
            far = refreshed;
            warm = InitialGuess::Field(solved.result.h.clone());
            let moved = (solved.c1 - state.c1).abs();
            state = level.state;
            state.c1_step = (moved * T::two()).max(T::lit(1e-3));
            state.spread_step = state.c1_step;
            state.c1 = solved.c1;
            last = Some(solved);
            pass += 1;
            // the first level always refreshes; later ones only when the data moved
            let threshold = if first { T::lit(1e-7) } else { opts.tol_mass };
            if pass >= max_passes || change < threshold {
                break;
            }
        }
        let s = last.as_ref().expect("level solved");
        history.push((g.n, s.c1, s.c2));
    }
    let s = last.expect("at least one level");
    // c₁ = c₂ is the discrete answer only in the unconstrained limit
    if s.c2.is_some_and(|c2| s.c1 < c2) {
        return Err(Error::InvalidProblem(format!("calibration ended with c1 = {} below c2", s.c1)));
    }
    let spec = ObstacleSpec { region: region.clone(), c1: s.c1, c2: s.c2, p };
    Ok(Calibration { spec, solve: s.result, far_field: far, total_mass: s.total, in_u_mass: s.in_u, solves, levels: history })
}

/// Nodewise invariants of a constrained solution, each with its worst
/// excess over the allowed tolerance (`≤ 0` when it holds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub eps: f64,
    /// `H^{μ₀} − ½(1 − c₂) − ε ≤ H ≤ H^{μ₀} − ½(1 − c₁) + ε`.
    pub sandwich_ok: bool,
    pub sandwich_excess: f64,
    /// `|2H + |x|² − cᵢ| ≤ ε` on contact nodes of either branch.
    pub contact_ok: bool,
    pub contact_excess: f64,
    /// `2H + |x|² ≥ cᵢ − ε` on the branch of every node.
    pub lower_ok: bool,
    pub lower_excess: f64,
}

impl InvariantReport {
    pub fn all_ok(&self) -> bool {
        self.sandwich_ok && self.contact_ok && self.lower_ok
    }
}

/// `10 h² (1 + c₁ − c₂)`, with the spread taken as zero when `c₂ = −∞`.
pub fn invariant_tolerance<T: Scalar>(grid: &Grid2D<T>, c1: T, c2: Option<T>) -> T {
    let h = grid.spacing();
    T::lit(10.0) * h * h * (T::one() + c2.map_or(T::zero(), |c2| c1 - c2))
}

/// Checks the sandwich between shifted circular-law potentials and the
/// constant-on-contact conditions over the interior nodes of `h`.
pub fn check_invariants<T: Scalar>(h: &ScalarField<T>, spec: &ObstacleSpec<T>, contact_mask: &[bool], eps: T) -> InvariantReport {
    let grid = h.grid;
    let mut sandwich = T::neg_infinity();
    let mut contact = T::neg_infinity();
    let mut lower = T::neg_infinity();
    for k in 0..grid.len() {
        let (i, j) = grid.coords(k);
        if grid.is_boundary(i, j) {
            continue;
        }
        let x = grid.point_at(k);
        let v = h.values[k];
        let h0 = crate::potential::circular_law_potential(x);
        sandwich = sandwich.max(v - (h0 - (T::one() - spec.c1) * T::half()) - eps);
        if let Some(c2) = spec.c2 {
            sandwich = sandwich.max(h0 - (T::one() - c2) * T::half() - v - eps);
        }
        let branch = if spec.region.signed_distance(x) <= T::zero() { Some(spec.c1) } else { spec.c2 };
        if let Some(c) = branch {
            let eff = T::two() * v + x.norm_sqr();
            lower = lower.max(c - eff - eps);
            if contact_mask[k] {
                contact = contact.max((eff - c).abs() - eps);
            }
        }
    }
    let worst = |x: T| if x.is_finite() { x.to_f64_lossy() } else { f64::NEG_INFINITY };
    let (s, c, l) = (worst(sandwich), worst(contact), worst(lower));
    InvariantReport {
        eps: eps.to_f64_lossy(),
        sandwich_ok: s <= 0.0,
        sandwich_excess: s,
        contact_ok: c <= 0.0,
        contact_excess: c,
        lower_ok: l <= 0.0,
        lower_excess: l,
    }
}

/// Largest nodal difference between solutions of the final obstacle of
/// `cal` started from `ψ` clamped at zero and from the far-field extension.
pub fn uniqueness_gap<T: Scalar>(cal: &Calibration<T>, opts: &SolverOptions<T>) -> Result<T> {
    let grid = cal.solve.h.grid;
    let psi = build_obstacle(&cal.spec, grid);
    let d = cal.far_field.on(grid);
    let a = solve_vi(&psi, &d, &InitialGuess::ClampedZero, opts)?;
    let b = solve_vi(&psi, &d, &InitialGuess::FarField(Point::origin()), opts)?;
    if !(a.converged && b.converged) {
        let worst = if a.converged { b } else { a };
        return Err(Error::NotConverged { iterations: worst.iterations, residual: worst.residual.to_f64_lossy() });
    }
    Ok(a.h.max_abs_diff(&b.h))
}
