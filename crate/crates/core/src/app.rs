//! Run configuration, orchestration of the four modes and the files they
//! write.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::extraction::{extract, property_report, ExtractedMeasure, PropertyReport};
use crate::geometry::Region;
use crate::grid::{Grid2D, ScalarField};
use crate::halfspace::{is_fully_singular, SingularityVerdict};
use crate::obstacle::{build_obstacle, calibrate_constants, Calibration, CalibrationOptions, SolverOptions};
use crate::oracle::{compare_with_solver, OracleComparison, MAX_ORACLE_N, ORACLE_BOX, ORACLE_ITERATIONS, ORACLE_N};
use crate::potential::energy;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICS: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Verify,
    HalfspaceScan,
    OracleCompare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub box_radius: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub omega: Option<f64>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub tol_mass: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverOptions::<f64>::default();
        SolverConfig { omega: s.omega, tol: s.tol, max_iter: s.max_iter, tol_mass: CalibrationOptions::<f64>::default().tol_mass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitFlags {
    pub density_csv: bool,
    pub density_pgm: bool,
    pub singular_csv: bool,
    pub report_json: bool,
    /// `fields.csv` with `x,y,H,psi`.
    pub fields_debug: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        EmitFlags { density_csv: true, density_pgm: true, singular_csv: true, report_json: true, fields_debug: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub a_values: Vec<f64>,
    /// Also solve each half-plane problem on `grid` and report its masses.
    #[serde(default)]
    pub numeric: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub n: usize,
    #[serde(rename = "R")]
    pub box_radius: f64,
    pub iterations: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { n: ORACLE_N, box_radius: ORACLE_BOX, iterations: ORACLE_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub region: Option<Region<f64>>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit: EmitFlags,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub oracle: Option<OracleConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// The inputs of a solve, checked.
#[derive(Debug, Clone)]
pub struct Problem {
    pub region: Region<f64>,
    pub p: f64,
    pub grid: Grid2D<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_error(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Region, `p` and grid of a solving mode, validated.
    pub fn problem(&self) -> Result<Problem> {
        let region = self.region.clone().ok_or_else(|| config_error("missing field `region`"))?;
        let region = region.validated()?;
        let p = self.p.ok_or_else(|| config_error("missing field `p`"))?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(config_error(format!("p must lie in (0, 1], got {p}")));
        }
        let m0 = region.circular_law_mass();
        if p <= m0 {
            return Err(config_error(format!(
                "p = {p} does not exceed the circular-law mass of U, {m0:.6}; the constraint is inactive and the \
                 minimizer is the circular law"
            )));
        }
        let g = self.grid.ok_or_else(|| config_error("missing field `grid`"))?;
        let grid = Grid2D::new(g.box_radius, g.n)?;
        Ok(Problem { region, p, grid })
    }

    pub fn calibration_options(&self) -> CalibrationOptions<f64> {
        let s = self.solver;
        let base = CalibrationOptions::<f64>::default();
        CalibrationOptions {
            solver: SolverOptions { omega: s.omega, tol: s.tol, max_iter: s.max_iter, ..base.solver },
            tol_mass: s.tol_mass,
            ..base
        }
    }

    /// Checks the fields the mode needs.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        let s = self.solver;
        if let Some(w) = s.omega {
            if !(1.0..2.0).contains(&w) {
                return Err(config_error(format!("solver.omega must lie in [1, 2), got {w}")));
            }
        }
        if !(s.tol > 0.0) || !(s.tol_mass > 0.0) {
            return Err(config_error("solver tolerances must be positive"));
        }
        match mode {
            Mode::Solve | Mode::Verify => {
                self.problem()?;
            }
            Mode::OracleCompare => {
                self.problem()?;
                let oc = self.oracle.unwrap_or_default();
                if !(2..=MAX_ORACLE_N).contains(&oc.n) || !(oc.box_radius > 0.0) || oc.iterations == 0 {
                    return Err(config_error(format!(
                        "oracle needs 2 <= n <= {MAX_ORACLE_N}, R > 0 and at least one iteration"
                    )));
                }
            }
            Mode::HalfspaceScan => {
                let scan = self.scan.as_ref().ok_or_else(|| config_error("halfspace-scan needs `scan.a_values`"))?;
                if scan.a_values.is_empty() || scan.a_values.iter().any(|a| !a.is_finite()) {
                    return Err(config_error("scan.a_values must be a nonempty list of finite numbers"));
                }
                if scan.numeric && self.grid.is_none() {
                    return Err(config_error("numeric scan needs `grid`"));
                }
            }
        }
        Ok(())
    }
}

/// `c₂`, written as the string `"-inf"` when absent.
pub mod c2_format {
    use super::*;

    pub fn serialize<S: Serializer>(c2: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match c2 {
            Some(v) => s.serialize_f64(*v),
            None => s.serialize_str("-inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Some(v)),
            Raw::Str(s) if s == "-inf" => Ok(None),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"-inf\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    #[serde(rename = "R")]
    pub box_radius: f64,
    pub n: usize,
    pub h: f64,
}

/// Wall-clock seconds; the only nondeterministic part of a report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub calibrate: f64,
    pub extract: f64,
    pub report: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub mode: Mode,
    pub c1: f64,
    #[serde(with = "c2_format")]
    pub c2: Option<f64>,
    pub iterations: usize,
    pub solves: usize,
    pub residual: f64,
    pub mass_regular: f64,
    pub mass_singular: f64,
    pub mass_total: f64,
    /// Extracted mass on `Ū`.
    pub mass_in_u: f64,
    /// `ℐ` of the extracted measure rescaled to unit mass.
    pub energy: f64,
    pub property_report: PropertyReport,
    pub verdict: Option<Verdict>,
    pub grid: GridMeta,
    pub config: RunConfig,
    pub timings: Timings,
}

/// Pass/fail of `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub properties: bool,
    pub mass_total: bool,
    pub mass_in_u: bool,
    pub c1_above_c2: bool,
    pub passed: bool,
}

/// Mass closure tolerance of `verify`.
pub const MASS_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub schema_version: u32,
    pub mode: Mode,
    pub status: String,
    pub error: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(flatten)]
    pub verdict: SingularityVerdict,
    pub mass_singular: Option<f64>,
    pub mass_regular: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub rows: Vec<ScanRow>,
    pub monotone: bool,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema_version: u32,
    #[serde(flatten)]
    pub comparison: OracleComparison,
    pub oracle_grid: GridMeta,
    pub config: RunConfig,
    pub timings: Timings,
}

/// Outcome of a run: exit code and the files written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

/// A finished solve with everything the outputs are built from.
pub struct Solution {
    pub calibration: Calibration<f64>,
    pub extracted: ExtractedMeasure<f64>,
    pub report: SolveReport,
}

fn seconds(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn grid_meta(g: &Grid2D<f64>) -> GridMeta {
    GridMeta { box_radius: g.box_radius, n: g.n, h: g.spacing() }
}

/// Calibrates, extracts and assembles the report of `solve` or `verify`.
pub fn solve(config: &RunConfig, mode: Mode) -> Result<Solution> {
    let start = Instant::now();
    let problem = config.problem()?;
    let cal = calibrate_constants(&problem.region, problem.p, problem.grid, &config.calibration_options())?;
    let calibrate = seconds(start);
    let t = Instant::now();
    let ex = extract(&cal.solve.h, &problem.region)?;
    let extract_time = seconds(t);
    let t = Instant::now();
    let props = property_report(&cal.solve.h, &ex, &problem.region, cal.spec.c1, cal.spec.c2);
    let mass_total = ex.total_mass();
    let mass_in_u = ex.mass_in_closure(&problem.region);
    let e = energy(&ex.to_discrete().normalized());
    let verdict = (mode == Mode::Verify).then(|| {
        let mass_total_ok = (mass_total - 1.0).abs() <= MASS_TOL;
        let mass_in_u_ok = (mass_in_u - problem.p).abs() <= MASS_TOL;
        let c1_above_c2 = cal.spec.c2.is_none_or(|c2| cal.spec.c1 > c2);
        let properties = props.all_ok();
        Verdict {
            properties,
            mass_total: mass_total_ok,
            mass_in_u: mass_in_u_ok,
            c1_above_c2,
            passed: properties && mass_total_ok && mass_in_u_ok && c1_above_c2,
        }
    });
    let report = SolveReport {
        schema_version: SCHEMA_VERSION,
        mode,
        c1: cal.spec.c1,
        c2: cal.spec.c2,
        iterations: cal.solve.iterations,
        solves: cal.solves,
        residual: cal.solve.residual,
        mass_regular: ex.mass_regular,
        mass_singular: ex.mass_singular,
        mass_total,
        mass_in_u,
        energy: e,
        property_report: props,
        verdict,
        grid: grid_meta(&problem.grid),
        config: config.clone(),
        timings: Timings { calibrate, extract: extract_time, report: seconds(t), total: seconds(start) },
    };
    Ok(Solution { calibration: cal, extracted: ex, report })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// `x,y,rho` for every grid node, rows of constant `y`.
pub fn write_density_csv(path: &Path, density: &ScalarField<f64>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x,y,rho")?;
    let g = density.grid;
    for k in 0..g.len() {
        let x = g.point_at(k);
        writeln!(w, "{},{},{}", x.x, x.y, density.values[k])?;
    }
    w.flush()?;
    Ok(())
}

/// Binary greymap of the density scaled to its maximum, top row at `y = R`.
pub fn write_density_pgm(path: &Path, density: &ScalarField<f64>) -> Result<()> {
    let mut w = create(path)?;
    let n = density.grid.n;
    write!(w, "P5\n{n} {n}\n255\n")?;
    let max = density.values.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    for j in (0..n).rev() {
        let row: Vec<u8> = (0..n).map(|i| (density.at(i, j).max(0.0) * scale).round().min(255.0) as u8).collect();
        w.write_all(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `s,x,y,g` per boundary sample, `s` the arc length.
pub fn write_singular_csv(path: &Path, ex: &ExtractedMeasure<f64>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "s,x,y,g")?;
    for (s, g) in &ex.singular {
        writeln!(w, "{},{},{},{}", s.arclength, s.position.x, s.position.y, g)?;
    }
    w.flush()?;
    Ok(())
}

fn write_fields_csv(path: &Path, h: &ScalarField<f64>, psi: &ScalarField<f64>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x,y,H,psi")?;
    for k in 0..h.grid.len() {
        let x = h.grid.point_at(k);
        writeln!(w, "{},{},{},{}", x.x, x.y, h.values[k], psi.values[k])?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn emit_solution(sol: &Solution, emit: &EmitFlags, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut out = |name: &str| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };
    let density = &sol.extracted.regular_density;
    if emit.density_csv {
        write_density_csv(&out("density.csv"), density)?;
    }
    if emit.density_pgm {
        write_density_pgm(&out("density.pgm"), density)?;
    }
    if emit.singular_csv {
        write_singular_csv(&out("singular.csv"), &sol.extracted)?;
    }
    if emit.fields_debug {
        let psi = build_obstacle(&sol.calibration.spec, sol.calibration.solve.h.grid);
        write_fields_csv(&out("fields.csv"), &sol.calibration.solve.h, &psi)?;
    }
    if emit.report_json {
        write_json(&out("report.json"), &sol.report)?;
    }
    Ok(files)
}

fn is_numerical(e: &Error) -> bool {
    matches!(e, Error::NotConverged { .. } | Error::BracketFailed(_) | Error::NearBoxEdge { .. } | Error::NotNeutral(_))
}

/// Exit code for an error that ends a run.
pub fn exit_code_for(e: &Error) -> i32 {
    if is_numerical(e) {
        EXIT_NUMERICS
    } else {
        EXIT_CONFIG
    }
}

/// Runs `mode` with outputs in `out` (or the configured `output_dir`).
/// Numerical failures of a solve still write a [`FailureReport`].
pub fn run(mode: Mode, config: &RunConfig, out: Option<&Path>) -> Result<Outcome> {
    if let Some(m) = config.mode {
        if m != mode {
            return Err(config_error(format!("config is for mode {m:?}, invoked as {mode:?}")));
        }
    }
    config.validate(mode)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone());
    fs::create_dir_all(&dir)?;
    match mode {
        Mode::Solve | Mode::Verify => match solve(config, mode) {
            Ok(sol) => {
                let files = emit_solution(&sol, &config.emit, &dir)?;
                let passed = sol.report.verdict.is_none_or(|v| v.passed);
                Ok(Outcome { exit_code: if passed { EXIT_OK } else { EXIT_CHECK_FAILED }, files })
            }
            Err(e) if is_numerical(&e) => {
                let path = dir.join("report.json");
                let failure = FailureReport {
                    schema_version: SCHEMA_VERSION,
                    mode,
                    status: "numerical_failure".into(),
                    error: e.to_string(),
                    config: config.clone(),
                };
                write_json(&path, &failure)?;
                Ok(Outcome { exit_code: EXIT_NUMERICS, files: vec![path] })
            }
            Err(e) => Err(e),
        },
        Mode::HalfspaceScan => run_scan(config, &dir),
        Mode::OracleCompare => run_oracle(config, &dir),
    }
}

/// Verdicts of the half-plane criterion, optionally with numeric masses.
pub fn halfspace_scan(config: &RunConfig) -> Result<ScanReport> {
    let scan = config.scan.as_ref().ok_or_else(|| config_error("halfspace-scan needs `scan.a_values`"))?;
    let mut rows = Vec::with_capacity(scan.a_values.len());
    for &a in &scan.a_values {
        let verdict = is_fully_singular(a);
        let (mut ms, mut mr) = (None, None);
        if scan.numeric {
            let sub = RunConfig { region: Some(Region::HalfPlane { a }), p: Some(1.0), ..config.clone() };
            let sol = solve(&sub, Mode::Solve)?;
            ms = Some(sol.extracted.mass_singular);
            mr = Some(sol.extracted.mass_regular);
        }
        rows.push(ScanRow { verdict, mass_singular: ms, mass_regular: mr });
    }
    let mut sorted: Vec<&ScanRow> = rows.iter().collect();
    sorted.sort_by(|x, y| x.verdict.a.total_cmp(&y.verdict.a));
    let monotone = sorted.windows(2).all(|w| w[0].verdict.fully_singular <= w[1].verdict.fully_singular);
    Ok(ScanReport { schema_version: SCHEMA_VERSION, rows, monotone, config: config.clone() })
}

fn run_scan(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let report = halfspace_scan(config)?;
    let csv = dir.join("halfspace_scan.csv");
    let mut w = create(&csv)?;
    writeln!(w, "a,fully_singular,worst_margin,worst_b,worst_y,mass_singular,mass_regular")?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for r in &report.rows {
        let v = &r.verdict;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            v.a,
            v.fully_singular,
            v.worst_margin,
            v.worst_b,
            v.worst_y,
            opt(r.mass_singular),
            opt(r.mass_regular)
        )?;
    }
    w.flush()?;
    let json = dir.join("halfspace_scan.json");
    write_json(&json, &report)?;
    Ok(Outcome { exit_code: EXIT_OK, files: vec![csv, json] })
}

/// Solves on the configured grid and compares with the coarse oracle.
pub fn oracle_compare(config: &RunConfig) -> Result<OracleReport> {
    let start = Instant::now();
    let sol = solve(config, Mode::Solve)?;
    let calibrate = sol.report.timings.calibrate;
    let extract_time = sol.report.timings.extract;
    let oc = config.oracle.unwrap_or_default();
    let coarse = Grid2D::unchecked(oc.box_radius, oc.n);
    let problem = config.problem()?;
    let t = Instant::now();
    let comparison = compare_with_solver(&sol.extracted, &problem.region, problem.p, &coarse, oc.iterations)?;
    Ok(OracleReport {
        schema_version: SCHEMA_VERSION,
        comparison,
        oracle_grid: grid_meta(&coarse),
        config: config.clone(),
        timings: Timings { calibrate, extract: extract_time, report: seconds(t), total: seconds(start) },
    })
}

fn run_oracle(config: &RunConfig, dir: &Path) -> Result<Outcome> {
    let report = oracle_compare(config)?;
    let path = dir.join("oracle.json");
    write_json(&path, &report)?;
    Ok(Outcome { exit_code: EXIT_OK, files: vec![path] })
}

/// Removes the `timings` member, recursively, so reports can be compared.
pub fn strip_timings(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.remove("timings");
            map.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timings),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    const DISK: &str = r#"{
        "region": {"type": "disk", "center": [0.8, 0.0], "radius": 0.6},
        "p": 0.3,
        "grid": {"R": 4.0, "n": 81}
    }"#;

    #[test]
    fn parses_a_minimal_config() {
        let c = RunConfig::from_json(DISK).unwrap();
        assert_eq!(c.region, Some(Region::Disk { center: Point::new(0.8, 0.0), radius: 0.6 }));
        assert_eq!(c.grid.unwrap().n, 81);
        assert!(c.emit.report_json && !c.emit.fields_debug);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        c.validate(Mode::Solve).unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(RunConfig::from_json("{ not json"), Err(Error::Config(_))));
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let c = RunConfig::from_json(r#"{"p": 0.5}"#).unwrap();
        assert!(c.validate(Mode::Solve).is_err());
        assert!(c.validate(Mode::HalfspaceScan).is_err());
        let mut c = RunConfig::from_json(DISK).unwrap();
        c.p = Some(0.05);
        let err = c.validate(Mode::Verify).unwrap_err();
        assert!(err.to_string().contains("circular-law mass"), "{err}");
        c.p = Some(1.2);
        assert!(c.validate(Mode::Solve).is_err());
        c.p = Some(0.3);
        c.solver.omega = Some(2.0);
        assert!(c.validate(Mode::Solve).is_err());
    }

    #[test]
    fn c2_round_trips_as_minus_inf() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct W {
            #[serde(with = "c2_format")]
            c2: Option<f64>,
        }
        let text = serde_json::to_string(&W { c2: None }).unwrap();
        assert_eq!(text, r#"{"c2":"-inf"}"#);
        assert_eq!(serde_json::from_str::<W>(&text).unwrap(), W { c2: None });
        let back: W = serde_json::from_str(&serde_json::to_string(&W { c2: Some(0.25) }).unwrap()).unwrap();
        assert_eq!(back.c2, Some(0.25));
        assert!(serde_json::from_str::<W>(r#"{"c2":"inf"}"#).is_err());
    }

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code_for(&Error::InvalidProblem("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code_for(&Error::NotConverged { iterations: 1, residual: 1.0 }), EXIT_NUMERICS);
        assert_eq!(exit_code_for(&Error::BracketFailed("x".into())), EXIT_NUMERICS);
    }

    #[test]
    fn mode_mismatch_is_a_config_error() {
        let mut c = RunConfig::from_json(DISK).unwrap();
        c.mode = Some(Mode::Verify);
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(run(Mode::Solve, &c, Some(dir.path())), Err(Error::Config(_))));
    }

    #[test]
    fn strips_nested_timings() {
        let mut v = serde_json::json!({"a": 1, "timings": {"total": 2.0}, "b": [{"timings": 1}]});
        strip_timings(&mut v);
        assert_eq!(v, serde_json::json!({"a": 1, "b": [{}]}));
    }

    #[test]
    fn pgm_header_and_size() {
        let g = Grid2D::<f64>::unchecked(1.0, 5);
        let f = ScalarField::from_fn(g, |x| x.x.max(0.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pgm");
        write_density_pgm(&path, &f).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n5 5\n255\n"));
        assert_eq!(bytes.len(), 11 + 25);
        assert_eq!(*bytes.last().unwrap(), 255);
    }
}
