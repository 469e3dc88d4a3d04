//! Configuration parsing, experiment orchestration, and file emission.
//!
//! One flat JSON config drives everything; the only command-line inputs are
//! the subcommand, `--config PATH`, and `--out DIR`. Every emitted file is
//! reproducible byte-for-byte from `(config, seed)` at any worker count.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::determinacy::{
    determinacy_barrier, laplace_reference, levy_cdf, sample_tau_direct, sample_tau_scheme,
    DeterminacyConfig, TauMethod, TauSample,
};
use crate::ensemble::{
    estimate_laplace, ks_distance, mean_stderr, run_ensemble, Ecdf, EnsembleConfig, EnsembleReport,
    StatRecord,
};
use crate::error::{Error, Result};
use crate::noise::NoiseCoefficient;
use crate::paths::{BrownianSampler, PiecewiseLinearPath};
use crate::reflected::reflect;
use crate::scheme::{construct_by_hitting, refine_until, ConvergenceReport, SchemeSolution};

/// Subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// One driver and its level-n solution, as CSV.
    Path,
    /// n-doubling convergence study.
    Converge,
    /// Monte Carlo of the time of determinacy with Laplace/KS comparisons.
    Determinacy,
    /// The full invariant battery; nonzero exit on failure.
    Checks,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Path => "path",
            Command::Converge => "converge",
            Command::Determinacy => "determinacy",
            Command::Checks => "checks",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Command::Path),
            "converge" => Ok(Command::Converge),
            "determinacy" => Ok(Command::Determinacy),
            "checks" => Ok(Command::Checks),
            other => Err(Error::parse(format!(
                "unknown command `{other}` (expected path | converge | determinacy | checks)"
            ))),
        }
    }
}

/// Noise coefficient descriptor, e.g. `{"kind":"power","p":0.5}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSpec {
    Constant { c: f64 },
    Affine { intercept: f64, slope: f64 },
    Power { p: f64 },
    TruncatedPower { p: f64, delta: f64 },
    Tabulated { knots: Vec<(f64, f64)> },
}

impl SigmaSpec {
    pub fn build(&self) -> Result<NoiseCoefficient> {
        match self {
            SigmaSpec::Constant { c } => NoiseCoefficient::constant(*c),
            SigmaSpec::Affine { intercept, slope } => NoiseCoefficient::affine(*intercept, *slope),
            SigmaSpec::Power { p } => NoiseCoefficient::power_law(*p),
            SigmaSpec::TruncatedPower { p, delta } => {
                NoiseCoefficient::truncated_power_law(*p, *delta)
            }
            SigmaSpec::Tabulated { knots } => {
                NoiseCoefficient::tabulated(PiecewiseLinearPath::new(knots.clone())?)
            }
        }
    }
}

/// Driving-path descriptor: a sampled Brownian path or the deterministic
/// ramp `t -> slope t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriverSpec {
    Brownian,
    Ramp { slope: f64 },
}

fn default_method() -> String {
    "direct".to_string()
}

/// The flat run configuration. Unknown keys are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    #[serde(default)]
    pub refine_depth: u32,
    pub n0: Option<u32>,
    pub tol: Option<f64>,
    pub max_doublings: Option<u32>,
    pub sigma: Option<SigmaSpec>,
    pub x0: Option<f64>,
    pub p: Option<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    pub num_paths: Option<u64>,
    /// Occupation window half-width for the reflected-path columns.
    pub epsilon: Option<f64>,
    /// Worker count; never serialized back, because outputs are identical
    /// at any worker count and reports must be byte-reproducible.
    #[serde(default, skip_serializing)]
    pub num_workers: usize,
    pub driver: Option<DriverSpec>,
    /// Determinacy sampling method: "direct" (default) or "scheme".
    #[serde(default = "default_method")]
    pub method: String,
    /// Ladder depth for the scheme method (delta_k = 1/k, k = 2..=k_max).
    pub ladder_k_max: Option<u32>,
    /// Scheme level used by ladder runs.
    pub scheme_n: Option<u32>,
    pub output_dir: Option<String>,
}

impl RunConfig {
    fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| Error::parse(format!("missing required key `{key}`")))
    }

    fn horizon_dt(&self) -> Result<(f64, f64)> {
        let t = Self::require(self.horizon, "T")?;
        let dt = Self::require(self.dt, "dt")?;
        if !(t > 0.0) {
            return Err(Error::parse(format!("`T` = {t} must be positive")));
        }
        if !(dt > 0.0 && dt < t) {
            return Err(Error::parse(format!("`dt` = {dt} must lie in (0, T)")));
        }
        Ok((t, dt))
    }

    /// Validates per-command requirements, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        match self.command {
            Command::Path | Command::Converge => {
                let sigma = self
                    .sigma
                    .as_ref()
                    .ok_or_else(|| Error::parse("missing required key `sigma`"))?;
                sigma.build()?;
                let n0 = Self::require(self.n0, "n0")?;
                if n0 < 1 {
                    return Err(Error::parse("`n0` must be >= 1"));
                }
                if let Some(x0) = self.x0 {
                    if !(x0 >= 0.0) {
                        return Err(Error::parse(format!("`x0` = {x0} must be >= 0")));
                    }
                }
                if let Some(eps) = self.epsilon {
                    if !(eps > 0.0) {
                        return Err(Error::parse(format!("`epsilon` = {eps} must be positive")));
                    }
                }
                match self.driver.as_ref().unwrap_or(&DriverSpec::Brownian) {
                    DriverSpec::Brownian => {
                        self.horizon_dt()?;
                    }
                    DriverSpec::Ramp { .. } => {
                        Self::require(self.horizon, "T")?;
                    }
                }
                if self.command == Command::Converge {
                    let tol = Self::require(self.tol, "tol")?;
                    if !(tol > 0.0) {
                        return Err(Error::parse("`tol` must be positive"));
                    }
                    Self::require(self.max_doublings, "max_doublings")?;
                }
            }
            Command::Determinacy => {
                self.horizon_dt()?;
                let p = Self::require(self.p, "p")?;
                if !(p >= 0.0) {
                    return Err(Error::parse(format!("`p` = {p} must be >= 0")));
                }
                let n = Self::require(self.num_paths, "num_paths")?;
                if n < 1 {
                    return Err(Error::parse("`num_paths` must be >= 1"));
                }
                match self.method.as_str() {
                    "direct" | "scheme" => {}
                    other => {
                        return Err(Error::parse(format!(
                            "`method` = {other} (expected direct | scheme)"
                        )))
                    }
                }
                if p >= 1.0 {
                    if !self.lambda.is_empty() {
                        return Err(Error::parse(
                            "`lambda`: Laplace comparison needs p < 1; omit lambda to disable it",
                        ));
                    }
                    if self.method == "direct" {
                        return Err(Error::parse(
                            "`method`: the direct sampler needs p < 1; use method = scheme",
                        ));
                    }
                }
                if self.lambda.iter().any(|l| !(*l > 0.0)) {
                    return Err(Error::parse("`lambda` entries must be positive"));
                }
            }
            Command::Checks => {}
        }
        Ok(())
    }
}

/// Parses and validates a JSON configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| Error::parse(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Formats a floating-point value with 17 significant digits (value-exact
/// for f64 round-trips).
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a single path as CSV `t,value`.
pub fn write_series_csv(path: &PiecewiseLinearPath, file: &Path) -> Result<()> {
    let mut out = String::with_capacity(path.num_knots() * 48 + 16);
    out.push_str("t,value\n");
    for (t, v) in path.knots() {
        out.push_str(&fmt17(t));
        out.push(',');
        out.push_str(&fmt17(v));
        out.push('\n');
    }
    fs::write(file, out)?;
    Ok(())
}

/// Reads a `t,value` CSV back into a path, checking the header.
pub fn read_series_csv(file: &Path) -> Result<PiecewiseLinearPath> {
    let text = fs::read_to_string(file)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("t,value") => {}
        other => {
            return Err(Error::parse(format!(
                "expected header `t,value`, got {other:?}"
            )))
        }
    }
    let mut knots = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let t = parse_field(parts.next(), no, "t")?;
        let v = parse_field(parts.next(), no, "value")?;
        knots.push((t, v));
    }
    PiecewiseLinearPath::new(knots)
}

fn parse_field(s: Option<&str>, line: usize, name: &str) -> Result<f64> {
    s.ok_or_else(|| Error::parse(format!("line {}: missing column `{name}`", line + 2)))?
        .parse::<f64>()
        .map_err(|e| Error::parse(format!("line {}: column `{name}`: {e}", line + 2)))
}

/// Writes a solution as CSV with header exactly `t,x,L,Y`, rows at the
/// union of knots (the regulator's knot set).
pub fn write_solution_csv(s: &SchemeSolution, file: &Path) -> Result<()> {
    let rp = reflect(s);
    let times = rp.local_time.times();
    let xv = s.x.eval_sorted(times)?;
    let mut out = String::with_capacity(times.len() * 96 + 16);
    out.push_str("t,x,L,Y\n");
    for i in 0..times.len() {
        out.push_str(&fmt17(times[i]));
        out.push(',');
        out.push_str(&fmt17(xv[i]));
        out.push(',');
        out.push_str(&fmt17(rp.local_time.values()[i]));
        out.push(',');
        out.push_str(&fmt17(rp.y.values()[i]));
        out.push('\n');
    }
    fs::write(file, out)?;
    Ok(())
}

/// Reads the `t,x,L,Y` solution CSV, checking the header. Returns the
/// columns as paths over the same knots.
pub fn read_solution_csv(
    file: &Path,
) -> Result<(
    PiecewiseLinearPath,
    PiecewiseLinearPath,
    PiecewiseLinearPath,
)> {
    let text = fs::read_to_string(file)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("t,x,L,Y") => {}
        other => {
            return Err(Error::parse(format!(
                "expected header `t,x,L,Y`, got {other:?}"
            )))
        }
    }
    let (mut ts, mut xs, mut ls, mut ys) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (no, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        ts.push(parse_field(parts.next(), no, "t")?);
        xs.push(parse_field(parts.next(), no, "x")?);
        ls.push(parse_field(parts.next(), no, "L")?);
        ys.push(parse_field(parts.next(), no, "Y")?);
    }
    Ok((
        PiecewiseLinearPath::from_columns(ts.clone(), xs)?,
        PiecewiseLinearPath::from_columns(ts.clone(), ls)?,
        PiecewiseLinearPath::from_columns(ts, ys)?,
    ))
}

/// Writes a solution as CSV with header `t,x,L` over its knot union.
pub fn write_scheme_csv(s: &SchemeSolution, file: &Path) -> Result<()> {
    let times = s.local_time.times();
    let xv = s.x.eval_sorted(times)?;
    let mut out = String::with_capacity(times.len() * 72 + 8);
    out.push_str("t,x,L\n");
    for i in 0..times.len() {
        out.push_str(&fmt17(times[i]));
        out.push(',');
        out.push_str(&fmt17(xv[i]));
        out.push(',');
        out.push_str(&fmt17(s.local_time.values()[i]));
        out.push('\n');
    }
    fs::write(file, out)?;
    Ok(())
}

/// Writes the reflected-path diagnostic table on the uniform grid of step
/// `grid_dt`: header `t,Y,L,QV,Sigma2Int,Lambda0`, where `QV` is the
/// realized quadratic variation of `x`, `Sigma2Int` the clock
/// `int sigma^2(L) ds`, and `Lambda0` the boundary occupation estimate at
/// window half-width `eps`.
pub fn write_reflected_csv(s: &SchemeSolution, eps: f64, grid_dt: f64, file: &Path) -> Result<()> {
    let rp = crate::reflected::reflect(s);
    let qv = crate::reflected::realized_qv(&s.x, grid_dt)?;
    let clock = crate::reflected::sigma2_integral(&s.local_time, &s.sigma)?;
    let lam = crate::reflected::occupation_local_time(&rp, 0.0, eps, grid_dt)?;
    let grid = qv.times().to_vec();
    let yv = rp.y.eval_sorted(&grid)?;
    let lv = rp.local_time.eval_sorted(&grid)?;
    let cv = clock.eval_sorted(&grid)?;
    let mut out = String::with_capacity(grid.len() * 144 + 32);
    out.push_str("t,Y,L,QV,Sigma2Int,Lambda0\n");
    for i in 0..grid.len() {
        for (j, v) in [
            grid[i],
            yv[i],
            lv[i],
            qv.values()[i],
            cv[i],
            lam.values()[i],
        ]
        .into_iter()
        .enumerate()
        {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt17(v));
        }
        out.push('\n');
    }
    fs::write(file, out)?;
    Ok(())
}

/// Writes the tau-sample table as CSV
/// `path_index,method,tau,censored,L_at_T` (tau empty when censored).
pub fn write_tau_csv(samples: &[TauSample], file: &Path) -> Result<()> {
    let mut out = String::with_capacity(samples.len() * 64 + 40);
    out.push_str("path_index,method,tau,censored,L_at_T\n");
    for s in samples {
        let tau = s.tau.map(fmt17).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.path_index,
            s.method.as_str(),
            tau,
            u8::from(s.censored()),
            fmt17(s.local_time_at_horizon)
        ));
    }
    fs::write(file, out)?;
    Ok(())
}

/// Serializes any report with a stable field order, a config echo, and a
/// trailing newline; byte-identical across runs and worker counts.
pub fn write_report_json<T: Serialize>(report: &T, file: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::parse(format!("report serialization: {e}")))?;
    let mut f = fs::File::create(file)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Convergence record emitted by the `converge` command.
#[derive(Debug, Serialize)]
pub struct ConvergenceRecord {
    pub config: RunConfig,
    pub levels: Vec<u32>,
    pub sup_gaps: Vec<f64>,
    pub converged: bool,
    pub tol: f64,
    pub final_level: u32,
    pub final_events: usize,
    pub final_local_time: f64,
}

impl ConvergenceRecord {
    fn new(cfg: &RunConfig, report: &ConvergenceReport) -> Self {
        ConvergenceRecord {
            config: cfg.clone(),
            levels: report.levels.clone(),
            sup_gaps: report.sup_gaps.clone(),
            converged: report.converged,
            tol: report.tol,
            final_level: report.final_solution.n,
            final_events: report.final_solution.event_times.len(),
            final_local_time: report.final_solution.local_time.last_value(),
        }
    }
}

/// Determinacy report: ensemble statistics plus the config echo.
#[derive(Debug, Serialize)]
pub struct DeterminacyRecord {
    pub config: RunConfig,
    #[serde(flatten)]
    pub report: EnsembleReport,
    /// Analytic Laplace values `exp(-sqrt(2 lambda)/(1-p))`, aligned with
    /// the estimates (absent for p >= 1).
    pub laplace_reference: Vec<f64>,
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub failed_checks: usize,
}

fn build_driver(cfg: &RunConfig, sampler: Option<&BrownianSampler>) -> Result<PiecewiseLinearPath> {
    match cfg.driver.as_ref().unwrap_or(&DriverSpec::Brownian) {
        DriverSpec::Brownian => Ok(sampler
            .expect("validated: brownian driver has a sampler")
            .sample(0)),
        DriverSpec::Ramp { slope } => {
            PiecewiseLinearPath::ramp(*slope, cfg.horizon.expect("validated"))
        }
    }
}

fn make_sampler(cfg: &RunConfig) -> Result<Option<BrownianSampler>> {
    match cfg.driver.as_ref().unwrap_or(&DriverSpec::Brownian) {
        DriverSpec::Brownian => {
            let (t, dt) = cfg.horizon_dt()?;
            Ok(Some(BrownianSampler::new(
                cfg.seed,
                dt,
                t,
                cfg.refine_depth,
            )?))
        }
        DriverSpec::Ramp { .. } => Ok(None),
    }
}

/// Runs a validated configuration, writing outputs under `out_dir`.
pub fn run_command(cfg: &RunConfig, out_dir: &Path) -> Result<CommandOutcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    match cfg.command {
        Command::Path => run_path(cfg, out_dir),
        Command::Converge => run_converge(cfg, out_dir),
        Command::Determinacy => run_determinacy(cfg, out_dir),
        Command::Checks => run_checks(out_dir),
    }
}

fn run_path(cfg: &RunConfig, out_dir: &Path) -> Result<CommandOutcome> {
    let sampler = make_sampler(cfg)?;
    let driver = build_driver(cfg, sampler.as_ref())?;
    let sigma = cfg.sigma.as_ref().expect("validated").build()?;
    let solution = construct_by_hitting(
        &driver,
        &sigma,
        cfg.n0.expect("validated"),
        cfg.x0.unwrap_or(0.0),
    )?;
    let driver_file = out_dir.join("driver.csv");
    let solution_file = out_dir.join("solution.csv");
    write_series_csv(&driver, &driver_file)?;
    write_solution_csv(&solution, &solution_file)?;
    let mut files = vec![driver_file, solution_file];
    // With an occupation window configured, also emit the diagnostic table.
    if let Some(eps) = cfg.epsilon {
        let grid_dt = cfg.dt.unwrap_or(driver.horizon() / 1000.0);
        let reflected_file = out_dir.join("reflected.csv");
        write_reflected_csv(&solution, eps, grid_dt, &reflected_file)?;
        files.push(reflected_file);
    }
    Ok(CommandOutcome {
        files,
        lines: vec![format!(
            "n = {}, events = {}, L(T) = {:.6}",
            solution.n,
            solution.event_times.len(),
            solution.local_time.last_value()
        )],
        failed_checks: 0,
    })
}

fn run_converge(cfg: &RunConfig, out_dir: &Path) -> Result<CommandOutcome> {
    let sampler = make_sampler(cfg)?;
    let driver = build_driver(cfg, sampler.as_ref())?;
    let sigma = cfg.sigma.as_ref().expect("validated").build()?;
    let report = refine_until(
        &driver,
        &sigma,
        cfg.x0.unwrap_or(0.0),
        cfg.n0.expect("validated"),
        cfg.tol.expect("validated"),
        cfg.max_doublings.expect("validated"),
    )?;
    let record = ConvergenceRecord::new(cfg, &report);
    let report_file = out_dir.join("convergence.json");
    let solution_file = out_dir.join("solution.csv");
    write_report_json(&record, &report_file)?;
    write_solution_csv(&report.final_solution, &solution_file)?;
    let mut lines = vec![format!(
        "levels {:?}, converged = {}",
        report.levels, report.converged
    )];
    for (i, g) in report.sup_gaps.iter().enumerate() {
        lines.push(format!(
            "gap({} -> {}) = {:.3e}",
            report.levels[i],
            report.levels[i + 1],
            g
        ));
    }
    Ok(CommandOutcome {
        files: vec![report_file, solution_file],
        lines,
        failed_checks: 0,
    })
}

/// Runs the determinacy Monte Carlo described by `cfg` and reduces it to a
/// report. Used by the `determinacy` command and the acceptance suite.
pub fn determinacy_experiment(cfg: &RunConfig) -> Result<(Vec<TauSample>, EnsembleReport)> {
    let (t, dt) = cfg.horizon_dt()?;
    let p = cfg.p.expect("validated");
    let sampler = BrownianSampler::new(cfg.seed, dt, t, cfg.refine_depth)?;
    let num_paths = cfg.num_paths.expect("validated");
    let method = if cfg.method == "scheme" {
        TauMethod::Scheme
    } else {
        TauMethod::Direct
    };
    let ladder_cfg = if method == TauMethod::Scheme {
        Some(DeterminacyConfig::new(
            p,
            DeterminacyConfig::default_ladder(cfg.ladder_k_max.unwrap_or(4)),
            cfg.scheme_n.unwrap_or(1024),
            sampler.clone(),
        )?)
    } else {
        None
    };

    let run = run_ensemble(
        &EnsembleConfig {
            num_paths,
            num_workers: cfg.num_workers,
            master_seed: cfg.seed,
        },
        |i| -> std::result::Result<TauSample, String> {
            let sample = match &ladder_cfg {
                Some(lc) => sample_tau_scheme(lc, i),
                None => sample_tau_direct(p, &sampler, i),
            };
            sample.map_err(|e| e.to_string())
        },
    )?;

    let samples: Vec<TauSample> = run.results.iter().filter_map(|r| *r).collect();
    let mut report = EnsembleReport::new("determinacy", cfg.seed, num_paths);
    report.num_failures = run.failures.len();
    report.failures = run.failures.clone();
    report.wall_clock_seconds = run.wall_clock_seconds;

    let finite: Vec<f64> = samples.iter().filter_map(|s| s.tau).collect();
    let n_censored = samples.len() - finite.len();
    report.stats.push(StatRecord {
        name: "censored_fraction".into(),
        mean: n_censored as f64 / samples.len().max(1) as f64,
        stderr: None,
    });
    if !finite.is_empty() {
        let (m, se) = mean_stderr(&finite);
        report.stats.push(StatRecord {
            name: "tau_mean_uncensored".into(),
            mean: m,
            stderr: se,
        });
    }
    let l_at_t: Vec<f64> = samples.iter().map(|s| s.local_time_at_horizon).collect();
    if !l_at_t.is_empty() {
        let (m, se) = mean_stderr(&l_at_t);
        report.stats.push(StatRecord {
            name: "local_time_at_horizon_mean".into(),
            mean: m,
            stderr: se,
        });
    }

    for &lambda in &cfg.lambda {
        report.laplace.push(estimate_laplace(&samples, lambda, t)?);
    }
    if p < 1.0 && !finite.is_empty() {
        let e: Ecdf = Ecdf::with_total(&finite, samples.len())?;
        let barrier = determinacy_barrier(p);
        report.ks_vs_reference = Some(ks_distance(&e, |x| {
            if x > 0.0 {
                levy_cdf(barrier, x)
            } else {
                0.0
            }
        }));
        report.ecdf_knots = e.knots(512);
    }
    Ok((samples, report))
}

fn run_determinacy(cfg: &RunConfig, out_dir: &Path) -> Result<CommandOutcome> {
    let (samples, report) = determinacy_experiment(cfg)?;
    let p = cfg.p.expect("validated");
    let laplace_ref = if p < 1.0 {
        cfg.lambda
            .iter()
            .map(|&l| laplace_reference(p, l))
            .collect::<Result<Vec<f64>>>()?
    } else {
        Vec::new()
    };
    let mut lines = Vec::new();
    lines.push(format!(
        "paths = {}, censored = {}",
        report.num_paths,
        samples.iter().filter(|s| s.censored()).count()
    ));
    for (est, want) in report.laplace.iter().zip(&laplace_ref) {
        lines.push(format!(
            "laplace(lambda = {}): {:.6} +- {:.6} vs reference {:.6}",
            est.lambda, est.mean, est.stderr, want
        ));
    }
    if let Some(ks) = report.ks_vs_reference {
        lines.push(format!("KS vs first-passage law: {ks:.5}"));
    }
    let record = DeterminacyRecord {
        config: cfg.clone(),
        report,
        laplace_reference: laplace_ref,
    };
    let tau_file = out_dir.join("taus.csv");
    let report_file = out_dir.join("report.json");
    write_tau_csv(&samples, &tau_file)?;
    write_report_json(&record, &report_file)?;
    Ok(CommandOutcome {
        files: vec![tau_file, report_file],
        lines,
        failed_checks: 0,
    })
}

fn run_checks(out_dir: &Path) -> Result<CommandOutcome> {
    let results = crate::checks::run_all();
    let mut lines = Vec::new();
    let mut failed = 0usize;
    for r in &results {
        lines.push(format!(
            "[{}] {} {}",
            if r.passed { "pass" } else { "FAIL" },
            r.name,
            r.detail
        ));
        if !r.passed {
            failed += 1;
        }
    }
    lines.push(format!("{} checks, {} failed", results.len(), failed));
    let report_file = out_dir.join("checks.json");
    #[derive(Serialize)]
    struct ChecksRecord<'a> {
        total: usize,
        failed: usize,
        results: &'a [crate::checks::CheckResult],
    }
    write_report_json(
        &ChecksRecord {
            total: results.len(),
            failed,
            results: &results,
        },
        &report_file,
    )?;
    Ok(CommandOutcome {
        files: vec![report_file],
        lines,
        failed_checks: failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_accepts_the_documented_example() {
        let cfg = parse_config(
            r#"{"command":"path","seed":1,"T":1,"dt":0.001,"n0":64,
                "sigma":{"kind":"affine","intercept":1,"slope":1},"x0":0}"#,
        )
        .unwrap();
        assert_eq!(cfg.command, Command::Path);
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.n0, Some(64));
    }

    #[test]
    fn parse_rejects_laplace_for_large_p() {
        let err = parse_config(
            r#"{"command":"determinacy","seed":1,"T":10,"dt":0.01,"p":1.5,
                "lambda":[1],"num_paths":10,"method":"scheme"}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("lambda"), "{err}");

        // Disabling the comparison (no lambda) makes it valid.
        parse_config(
            r#"{"command":"determinacy","seed":1,"T":10,"dt":0.01,"p":1.5,
                "num_paths":10,"method":"scheme"}"#,
        )
        .unwrap();
    }

    #[test]
    fn parse_names_missing_and_unknown_keys() {
        let err = parse_config(r#"{"command":"path","T":1}"#).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");

        let err = parse_config(r#"{"command":"path","seed":1,"frobnicate":2}"#).unwrap_err();
        assert!(err.to_string().contains("frobnicate"), "{err}");

        let err = parse_config(
            r#"{"command":"path","seed":1,"T":1,"dt":0.001,
                "sigma":{"kind":"affine","intercept":1,"slope":1}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("n0"), "{err}");
    }

    #[test]
    fn series_csv_roundtrips_bit_exactly() {
        let dir = std::env::temp_dir().join(format!("loctime-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let sampler = BrownianSampler::new(5, 0.01, 1.0, 1).unwrap();
        let p = sampler.sample(3);
        let file = dir.join("series.csv");
        write_series_csv(&p, &file).unwrap();
        let back = read_series_csv(&file).unwrap();
        assert_eq!(p, back);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn solution_csv_roundtrips_and_checks_header() {
        let dir = std::env::temp_dir().join(format!("loctime-test-sol-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let sampler = BrownianSampler::new(6, 0.01, 1.0, 0).unwrap();
        let f = sampler.sample(0);
        let sigma = NoiseCoefficient::affine(1.0, 1.0).unwrap();
        let s = construct_by_hitting(&f, &sigma, 32, 0.0).unwrap();
        let file = dir.join("solution.csv");
        write_solution_csv(&s, &file).unwrap();
        let (x, l, y) = read_solution_csv(&file).unwrap();
        assert_eq!(l, s.local_time);
        for i in 0..x.num_knots() {
            assert_eq!(y.values()[i], x.values()[i] + l.values()[i]);
        }

        // Header mismatch is detected.
        fs::write(&file, "time,x,L,Y\n0,0,0,0\n").unwrap();
        assert!(read_solution_csv(&file).is_err());
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn scheme_and_reflected_tables_have_the_documented_headers() {
        let dir = std::env::temp_dir().join(format!("loctime-test-tab-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let sampler = BrownianSampler::new(12, 0.005, 1.0, 0).unwrap();
        let f = sampler.sample(0);
        let sigma = NoiseCoefficient::affine(1.0, 1.0).unwrap();
        let s = construct_by_hitting(&f, &sigma, 64, 0.0).unwrap();

        let sf = dir.join("scheme.csv");
        write_scheme_csv(&s, &sf).unwrap();
        let text = fs::read_to_string(&sf).unwrap();
        assert!(text.starts_with("t,x,L\n"));
        assert_eq!(text.lines().count(), s.local_time.num_knots() + 1);

        let rf = dir.join("reflected.csv");
        write_reflected_csv(&s, 0.05, 0.005, &rf).unwrap();
        let text = fs::read_to_string(&rf).unwrap();
        assert!(text.starts_with("t,Y,L,QV,Sigma2Int,Lambda0\n"));
        // Every numeric field parses and Y stays nonnegative.
        for line in text.lines().skip(1) {
            let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(vals.len(), 6);
            assert!(vals[1] >= -1e-9);
        }
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn checks_command_passes_on_a_correct_build() {
        let dir = std::env::temp_dir().join(format!("loctime-test-chk-{}", std::process::id()));
        let cfg = parse_config(r#"{"command":"checks","seed":1}"#).unwrap();
        let outcome = run_command(&cfg, &dir).unwrap();
        assert_eq!(outcome.failed_checks, 0);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn reports_are_byte_identical_across_worker_counts() {
        let dir = std::env::temp_dir().join(format!("loctime-test-rep-{}", std::process::id()));
        let mut bytes = Vec::new();
        for workers in [1usize, 4] {
            let cfg = parse_config(&format!(
                r#"{{"command":"determinacy","seed":11,"T":5,"dt":0.01,"refine_depth":1,
                    "p":0.0,"lambda":[0.5,1.0],"num_paths":64,"num_workers":{workers}}}"#
            ))
            .unwrap();
            let out = dir.join(format!("w{workers}"));
            run_command(&cfg, &out).unwrap();
            bytes.push((
                fs::read(out.join("taus.csv")).unwrap(),
                fs::read(out.join("report.json")).unwrap(),
            ));
        }
        assert_eq!(bytes[0].0, bytes[1].0);
        assert_eq!(bytes[0].1, bytes[1].1);
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn report_contains_master_seed() {
        let dir = std::env::temp_dir().join(format!("loctime-test-seed-{}", std::process::id()));
        let cfg = parse_config(
            r#"{"command":"determinacy","seed":777,"T":5,"dt":0.01,
                "p":0.0,"num_paths":8}"#,
        )
        .unwrap();
        run_command(&cfg, &dir).unwrap();
        let text = fs::read_to_string(dir.join("report.json")).unwrap();
        assert!(text.contains("\"master_seed\": 777"));
        fs::remove_dir_all(&dir).ok();
    }
}
