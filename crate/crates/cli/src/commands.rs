//! Argument parsing and the subcommands.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use stargraph::rootfinder::{
    find_roots_in_windows, real_roots, solve_windows, special_p0_root, ComplexRoot,
    SearchOptions, G_RESIDUAL_BOUND, ORACLE_BOUND,
};
use stargraph::secular::oracle_residual;
use stargraph::StarModel;

use crate::config::{self, CommonValues, Effective, Format};
use crate::report::{ModelInfo, RootEntry, RootReport};
use crate::svg::{self, Overlay};
use crate::trajectory::{Trajectory, DEFAULT_JUMP_THRESHOLD};
use crate::verify::{self, Suite};
use crate::{CliError, Outcome, Result, EXIT_SUCCESS};

/// Contour and branch roots must coincide to this distance in κ.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

const ORIGIN_NOTE: &str =
    "kappa = 0 is a zero of order p of the reduced function and is excluded from every report";

#[derive(Debug, Parser)]
#[command(
    name = "stargraph",
    version,
    about = "Spectra of q-edge star graphs with rotating complex Robin couplings"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Number of edges.
    #[arg(long, global = true)]
    pub q: Option<usize>,
    /// Edge length L (default 1).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub length: Option<f64>,
    /// Real part of the coupling α.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha_re: Option<f64>,
    /// Imaginary part of the coupling α (default 0).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha_im: Option<f64>,
    /// Dimensionless coupling β = αL; shorthand for --alpha-re with L = 1.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Newton step tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Drop complex roots with |Im κ| above this bound.
    #[arg(long, global = true)]
    pub im_bound: Option<f64>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Flat `key = value` config file (default: $STARGRAPH_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for sampled checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    fn values(&self) -> CommonValues {
        CommonValues {
            q: self.q,
            length: self.length,
            alpha_re: self.alpha_re,
            alpha_im: self.alpha_im,
            beta: self.beta,
            tol: self.tol,
            im_bound: self.im_bound,
            out: self.out.clone(),
            format: self.format,
            threads: self.threads,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Contour,
    Branch,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The β-independent real roots κ = nπ/2, n = 1..=count.
    Real {
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Complex roots in the windows around (2M+1)π/2 for M in [m-min, m-max].
    Complex {
        #[arg(long, default_value_t = 3)]
        m_min: u64,
        #[arg(long, default_value_t = 30)]
        m_max: u64,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
    },
    /// The single β-dependent root κ = β of the two-edge star.
    SpecialP0,
    /// Track complex roots while β moves linearly between two values.
    Scan {
        #[arg(long, allow_negative_numbers = true)]
        beta_from: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta_to: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta_from_im: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta_to_im: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 5)]
        m_min: u64,
        #[arg(long, default_value_t = 5)]
        m_max: u64,
        /// Continuation steps longer than this are recorded as breaks.
        #[arg(long, default_value_t = DEFAULT_JUMP_THRESHOLD)]
        jump_threshold: f64,
        /// Also write an SVG of the paths.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run an invariant suite; exits 0 only if every check passes.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
    /// Render a JSON root report as an SVG of the κ-plane.
    Plot {
        /// Report produced by `real`, `complex` or `special-p0` with --format json.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Overlay::None)]
        overlay: Overlay,
    },
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (including the program name), runs the command and writes
/// any output files.
pub fn run<I, T>(args: I) -> RunResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            return if e.use_stderr() {
                RunResult { exit_code: code, stdout: String::new(), stderr: text }
            } else {
                RunResult { exit_code: code, stdout: text, stderr: String::new() }
            };
        }
    };
    match execute(&cli).and_then(|(outcome, out)| deliver(outcome, out)) {
        Ok(r) => r,
        Err(e) => RunResult {
            exit_code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn deliver(outcome: Outcome, out: Option<PathBuf>) -> Result<RunResult> {
    for (path, contents) in &outcome.side_files {
        std::fs::write(path, contents)?;
    }
    let stdout = match out {
        Some(path) => {
            std::fs::write(&path, &outcome.output)?;
            String::new()
        }
        None => outcome.output.clone(),
    };
    let stderr = if outcome.exit_code == EXIT_SUCCESS {
        String::new()
    } else {
        "error: verification failed; see diagnostics in the output\n".to_string()
    };
    Ok(RunResult { exit_code: outcome.exit_code, stdout, stderr })
}

/// Runs a parsed command; returns its outcome and the main output path.
pub fn execute(cli: &Cli) -> Result<(Outcome, Option<PathBuf>)> {
    if let Command::Plot { input, overlay } = &cli.command {
        let text = std::fs::read_to_string(input)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input.display())))?;
        let report = RootReport::from_json(&text)?;
        let svg = svg::render_report(&report, *overlay);
        return Ok((Outcome::new(svg, true), cli.common.out.clone()));
    }

    let mut values = cli.common.values();
    if let Command::Scan { beta_from, beta_from_im, .. } = &cli.command {
        // The sweep defines the coupling; its start fills in the model.
        if values.beta.is_none() && values.alpha_re.is_none() {
            match values.length {
                Some(l) => values.alpha_re = Some(beta_from / l),
                None => values.beta = Some(*beta_from),
            }
            values.alpha_im = Some(beta_from_im / values.length.unwrap_or(1.0));
        }
    }
    let format_given = values.format.is_some();
    let eff = config::resolve(values, cli.common.config.as_deref())?;
    let out = eff.out.clone();

    let outcome = match eff.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| dispatch(&cli.command, &eff, format_given))?
        }
        None => dispatch(&cli.command, &eff, format_given)?,
    };
    Ok((outcome, out))
}

fn dispatch(command: &Command, eff: &Effective, format_given: bool) -> Result<Outcome> {
    match command {
        Command::Real { count } => cmd_real(eff, *count),
        Command::Complex { m_min, m_max, method } => cmd_complex(eff, *m_min, *m_max, *method),
        Command::SpecialP0 => cmd_special_p0(eff),
        Command::Scan {
            beta_from,
            beta_to,
            beta_from_im,
            beta_to_im,
            steps,
            m_min,
            m_max,
            jump_threshold,
            svg,
        } => {
            let params = ScanParams {
                from: Complex64::new(*beta_from, *beta_from_im),
                to: Complex64::new(*beta_to, *beta_to_im),
                steps: *steps,
                m_range: (*m_min, *m_max),
                threshold: *jump_threshold,
            };
            let format = if format_given { eff.format } else { Format::Csv };
            cmd_scan(eff, &params, format, svg.clone())
        }
        Command::Verify { suite } => cmd_verify(eff, *suite),
        Command::Plot { .. } => unreachable!("plot is handled before model resolution"),
    }
}

fn settings(eff: &Effective, command: &str, extra: &[(&str, Value)]) -> BTreeMap<String, Value> {
    let mut map = eff.to_map();
    map.insert("command".into(), json!(command));
    for (k, v) in extra {
        map.insert((*k).to_string(), v.clone());
    }
    map
}

fn emit(report: &RootReport, format: Format, ok: bool) -> Result<Outcome> {
    let text = match format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv()?,
    };
    Ok(Outcome::new(text, ok))
}

pub fn cmd_real(eff: &Effective, count: usize) -> Result<Outcome> {
    let model = eff.model()?;
    let oracle_bound = ORACLE_BOUND;
    let points = real_roots(&model, count)?;
    let mut diagnostics = Vec::new();
    let entries: Vec<RootEntry> = points
        .par_iter()
        .enumerate()
        .map(|(i, pt)| RootEntry::real(i as u64 + 1, *pt, oracle_residual(&model, pt.kappa)))
        .collect();
    let mut ok = true;
    for e in &entries {
        if !(e.residual_oracle < oracle_bound) {
            ok = false;
            diagnostics.push(format!(
                "n={}: oracle residual {:e} exceeds {oracle_bound:e}",
                e.n.unwrap_or(0),
                e.residual_oracle
            ));
        }
    }
    let report = RootReport::new(
        &model,
        entries,
        diagnostics,
        settings(eff, "real", &[("count", json!(count))]),
    );
    emit(&report, eff.format, ok)
}

fn require_windows(model: &StarModel) -> Result<()> {
    if model.q() == 2 {
        return Err(CliError::Usage(
            "the window solvers need p = q - 2 >= 1; for q = 2 use `special-p0`".into(),
        ));
    }
    model.require_branches()?;
    Ok(())
}

fn describe(k: Complex64) -> String {
    format!("{}{:+}i", k.re, k.im)
}

/// Pairs branch roots with contour roots window by window; returns discrepancy lines.
fn cross_check(
    contour: &BTreeMap<u64, Vec<ComplexRoot>>,
    branch: &BTreeMap<u64, Vec<ComplexRoot>>,
) -> Vec<String> {
    let mut table = Vec::new();
    for (m, broots) in branch {
        let croots = contour.get(m).map(Vec::as_slice).unwrap_or(&[]);
        if croots.len() != broots.len() {
            table.push(format!(
                "discrepancy M={m}: {} branch roots vs {} contour roots",
                broots.len(),
                croots.len()
            ));
        }
        for b in broots {
            let nearest = croots
                .iter()
                .map(|c| ((c.kappa - b.kappa).norm(), c))
                .min_by(|x, y| x.0.total_cmp(&y.0));
            match nearest {
                Some((d, c)) if d <= CROSS_CHECK_TOL => {
                    if c.n != b.n {
                        table.push(format!(
                            "discrepancy M={m} n={:?}: contour labels the same root n={:?}",
                            b.n, c.n
                        ));
                    }
                }
                Some((d, c)) => table.push(format!(
                    "discrepancy M={m} n={:?}: branch {} contour {} distance {d:e}",
                    b.n,
                    describe(b.kappa),
                    describe(c.kappa)
                )),
                None => table.push(format!(
                    "discrepancy M={m} n={:?}: branch {} has no contour partner",
                    b.n,
                    describe(b.kappa)
                )),
            }
        }
    }
    table
}

pub fn cmd_complex(eff: &Effective, m_min: u64, m_max: u64, method: MethodArg) -> Result<Outcome> {
    if m_min > m_max {
        return Err(CliError::Usage(format!("--m-min {m_min} exceeds --m-max {m_max}")));
    }
    let model = eff.model()?;
    require_windows(&model)?;
    let mut diagnostics = vec![ORIGIN_NOTE.to_string()];
    let mut ok = true;

    let contour = if matches!(method, MethodArg::Contour | MethodArg::Both) {
        let opts = SearchOptions { tol: eff.tol, traversal_seed: None };
        let mut by_window = BTreeMap::new();
        for (m, result) in find_roots_in_windows(&model, m_min, m_max, &opts) {
            match result {
                Ok(search) => {
                    diagnostics.extend(search.diagnostics.iter().map(|d| format!("M={m}: {d}")));
                    if !search.unresolved.is_empty() {
                        ok = false;
                        diagnostics.push(format!(
                            "M={m}: {} sub-regions could not be resolved",
                            search.unresolved.len()
                        ));
                    }
                    if search.roots.len() as i64 != search.winding {
                        ok = false;
                        diagnostics.push(format!(
                            "M={m}: found {} roots for winding number {}",
                            search.roots.len(),
                            search.winding
                        ));
                    }
                    by_window.insert(m, search.roots);
                }
                Err(e) => {
                    ok = false;
                    diagnostics.push(format!("M={m}: contour search failed: {e}"));
                }
            }
        }
        Some(by_window)
    } else {
        None
    };

    let branch = if matches!(method, MethodArg::Branch | MethodArg::Both) {
        let mut by_window: BTreeMap<u64, Vec<ComplexRoot>> = BTreeMap::new();
        for ((m, n), result) in solve_windows(&model, m_min, m_max, eff.tol) {
            match result {
                Ok(root) => by_window.entry(m).or_default().push(root),
                Err(e) => {
                    ok = false;
                    diagnostics.push(format!("M={m} n={n}: branch solve failed: {e}"));
                }
            }
        }
        Some(by_window)
    } else {
        None
    };

    if let (Some(c), Some(b)) = (&contour, &branch) {
        let table = cross_check(c, b);
        if table.is_empty() {
            diagnostics.push(format!(
                "contour and branch root sets agree to {CROSS_CHECK_TOL:e} in every window"
            ));
        } else {
            ok = false;
            diagnostics.extend(table);
        }
    }

    let roots: Vec<ComplexRoot> = branch
        .or(contour)
        .unwrap_or_default()
        .into_values()
        .flatten()
        .collect();
    let mut entries = Vec::with_capacity(roots.len());
    for r in &roots {
        if r.kappa.im.abs() > eff.im_bound {
            diagnostics.push(format!(
                "M={:?} n={:?}: |Im kappa| = {:e} exceeds --im-bound, dropped",
                r.m,
                r.n,
                r.kappa.im.abs()
            ));
            continue;
        }
        if !r.is_certified() {
            ok = false;
            diagnostics.push(format!(
                "M={:?} n={:?}: not certified (residual_g {:e}, residual_oracle {:e})",
                r.m, r.n, r.residual_g, r.residual_oracle
            ));
        }
        if !r.flags.is_empty() {
            diagnostics.push(format!("M={:?} n={:?}: flags {:?}", r.m, r.n, r.flags));
        }
        entries.push(RootEntry::complex(&model, r));
    }

    let method_name = match method {
        MethodArg::Contour => "contour",
        MethodArg::Branch => "branch",
        MethodArg::Both => "both",
    };
    let report = RootReport::new(
        &model,
        entries,
        diagnostics,
        settings(
            eff,
            "complex",
            &[
                ("m_min", json!(m_min)),
                ("m_max", json!(m_max)),
                ("method", json!(method_name)),
            ],
        ),
    );
    emit(&report, eff.format, ok)
}

pub fn cmd_special_p0(eff: &Effective) -> Result<Outcome> {
    let model = eff.model()?;
    let root = special_p0_root(&model)?;
    let ok = root.residual_oracle < ORACLE_BOUND && root.residual_g < G_RESIDUAL_BOUND;
    let mut diagnostics = vec![ORIGIN_NOTE.to_string()];
    if !ok {
        diagnostics.push(format!(
            "not certified (residual_g {:e}, residual_oracle {:e})",
            root.residual_g, root.residual_oracle
        ));
    }
    let report = RootReport::new(
        &model,
        vec![RootEntry::complex(&model, &root)],
        diagnostics,
        settings(eff, "special-p0", &[]),
    );
    emit(&report, eff.format, ok)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanParams {
    pub from: Complex64,
    pub to: Complex64,
    pub steps: usize,
    pub m_range: (u64, u64),
    pub threshold: f64,
}

impl ScanParams {
    pub fn samples(&self) -> Vec<Complex64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                let t = i as f64 / last;
                self.from * (1.0 - t) + self.to * t
            })
            .collect()
    }
}

/// Sweeps β and links the roots of successive samples into paths.
pub fn scan(eff: &Effective, params: &ScanParams) -> Result<Trajectory> {
    if params.steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    if params.m_range.0 > params.m_range.1 {
        return Err(CliError::Usage("--m-min exceeds --m-max".into()));
    }
    if !(params.threshold > 0.0) {
        return Err(CliError::Usage("--jump-threshold must be positive".into()));
    }
    let base = eff.model()?;
    require_windows(&base)?;
    let betas = params.samples();
    let opts = SearchOptions { tol: eff.tol, traversal_seed: None };
    let solved: Vec<(Vec<Complex64>, Vec<String>)> = betas
        .par_iter()
        .enumerate()
        .map(|(i, beta)| {
            let mut notes = Vec::new();
            let model = match StarModel::new(base.q(), base.length(), beta / base.length()) {
                Ok(m) => m,
                Err(e) => return (Vec::new(), vec![format!("sample {i}: {e}")]),
            };
            let mut roots = Vec::new();
            for (m, result) in find_roots_in_windows(&model, params.m_range.0, params.m_range.1, &opts) {
                match result {
                    Ok(s) => {
                        if !s.unresolved.is_empty() || s.roots.len() as i64 != s.winding {
                            notes.push(format!("sample {i} M={m}: incomplete window search"));
                        }
                        roots.extend(s.roots.iter().map(|r| r.kappa));
                    }
                    Err(e) => notes.push(format!("sample {i} M={m}: {e}")),
                }
            }
            roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            (roots, notes)
        })
        .collect();
    let mut diagnostics = Vec::new();
    let mut snapshots = Vec::with_capacity(solved.len());
    for (roots, notes) in solved {
        snapshots.push(roots);
        diagnostics.extend(notes);
    }
    Ok(Trajectory::new(
        ModelInfo::of(&base),
        &betas,
        &snapshots,
        params.threshold,
        diagnostics,
    ))
}

pub fn cmd_scan(eff: &Effective, params: &ScanParams, format: Format, svg_path: Option<PathBuf>) -> Result<Outcome> {
    let traj = scan(eff, params)?;
    let ok = traj.diagnostics.is_empty();
    let text = match format {
        Format::Json => traj.to_json()?,
        Format::Csv => traj.to_csv()?,
    };
    let mut outcome = Outcome::new(text, ok);
    if let Some(path) = svg_path {
        outcome.side_files.push((path, svg::render_trajectory(&traj)));
    }
    Ok(outcome)
}

pub fn cmd_verify(eff: &Effective, suite: Suite) -> Result<Outcome> {
    let model = eff.model()?;
    let suite_name = serde_json::to_value(suite)?;
    let report = verify::run_suite(
        &model,
        suite,
        eff.seed,
        eff.tol,
        settings(eff, "verify", &[("suite", suite_name)]),
    )?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    Ok(Outcome::new(text, report.passed))
}
