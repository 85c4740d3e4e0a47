//! Command line front end.
//!
//! Settings are layered: built-in defaults, then `--config FILE`, then flags.
//! Exit codes: 0 success, 1 invalid input or configuration, 2 internal
//! failure.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use jumpvol_core::estimator::{
    estimate_g_on, estimate_sigma2_on, AdaptiveResult, GridConfig, Penalty, PenaltyKind,
    TruncationRule,
};
use jumpvol_core::{estimate_xi2, plugin_bounds, simulate, Bounds, Path, SimConfig};

use crate::config::{BoundsChoice, Command, Format, RunConfig, SigmaPenalty, TargetChoice};
use crate::defaults::FIGURE_GRID_POINTS;
use crate::experiment::{calibration_sweep, figure_data, run_cell, ExperimentError, Target};
use crate::output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "jumpvol", version, about = "Adaptive estimation of diffusion and jump coefficients from discretely sampled jump diffusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<SubCmd>,
    #[command(flatten)]
    pub opts: Overrides,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SubCmd {
    /// Simulate one path and write it as `t,x` CSV.
    Simulate,
    /// Estimate g, sigma^2 and xi^2 from one simulated or supplied path.
    Estimate,
    /// Monte Carlo risk table over the configured `delta:n` cells.
    Table,
    /// Estimated curves of several replications against the truth.
    Figure,
    /// Risk and selected dimension as functions of the penalty constant.
    Calibrate,
}

impl From<SubCmd> for Command {
    fn from(c: SubCmd) -> Self {
        match c {
            SubCmd::Simulate => Command::Simulate,
            SubCmd::Estimate => Command::Estimate,
            SubCmd::Table => Command::Table,
            SubCmd::Figure => Command::Figure,
            SubCmd::Calibrate => Command::Calibrate,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    /// Model id 1-4.
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo replications.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Table cells as `delta:n,delta:n,...`.
    #[arg(long, global = true)]
    pub cells: Option<String>,
    /// Estimation interval `lo,hi`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    pub interval: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub kappa_g: Option<f64>,
    #[arg(long, global = true)]
    pub kappa_sigma: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub sigma_penalty: Option<SigmaPenalty>,
    #[arg(long, global = true, value_enum)]
    pub bounds: Option<BoundsChoice>,
    #[arg(long, global = true, value_enum)]
    pub target: Option<TargetChoice>,
    /// Clip the xi^2 estimate at zero.
    #[arg(long, global = true)]
    pub clip_xi2: bool,
    /// Penalty constants for `calibrate`, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub kappas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub laplace_lambda: Option<f64>,
    #[arg(long, global = true)]
    pub atom_levels: Option<u32>,
    /// Path CSV (`t,x`) for `estimate`.
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Output directory.
    #[arg(long = "out", global = true)]
    pub out_dir: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Error with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn user(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_USER,
            error: error.into(),
        }
    }

    fn internal(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            error: error.into(),
        }
    }
}

fn core_failure(e: jumpvol_core::Error) -> Failure {
    use jumpvol_core::Error as E;
    match e {
        E::NonFiniteState { .. } | E::AllSingular | E::LengthMismatch { .. } => Failure::internal(e),
        _ => Failure::user(e),
    }
}

fn experiment_failure(e: ExperimentError) -> Failure {
    match e {
        ExperimentError::InvalidCell(_) => Failure::user(e),
        ExperimentError::Core(inner) => core_failure(inner),
        ExperimentError::Replication { index, source } => {
            let mut f = core_failure(source);
            f.error = f.error.context(format!("replication {index}"));
            f
        }
    }
}

/// Parses `args`, runs the command and returns the exit code. Messages go to
/// `stdout` and errors to `stderr`.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match run(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {:#}", f.error);
            f.code
        }
    }
}

/// Effective configuration: defaults, then the file, then the flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.opts.config {
        Some(file) => {
            let text = fs::read_to_string(file)
                .with_context(|| format!("reading config {}", file.display()))
                .map_err(Failure::user)?;
            RunConfig::from_json(&text)
                .with_context(|| format!("config {}", file.display()))
                .map_err(Failure::user)?
        }
        None => RunConfig::default(),
    };
    let o = &cli.opts;
    if let Some(c) = cli.command {
        cfg.subcommand = c.into();
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = &o.$field { cfg.$field = v.clone(); } )* };
    }
    set!(model, n, delta, seed, reps, cells, kappa_g, kappa_sigma, sigma_penalty, bounds, target, kappas, out_dir, format);
    if let Some(v) = &o.interval {
        cfg.interval = Some([v[0], v[1]]);
    }
    if o.clip_xi2 {
        cfg.clip_xi2 = true;
    }
    if o.laplace_lambda.is_some() {
        cfg.laplace_lambda = o.laplace_lambda;
    }
    if o.atom_levels.is_some() {
        cfg.atom_levels = o.atom_levels;
    }
    if o.input.is_some() {
        cfg.input = o.input.clone();
    }
    if o.threads.is_some() {
        cfg.threads = o.threads;
    }
    cfg.validate().map_err(Failure::user)?;
    Ok(cfg)
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    let cfg = resolve(&cli)?;
    if cli.opts.dump_config {
        writeln!(stdout, "{}", cfg.to_json()).map_err(Failure::internal)?;
        return Ok(());
    }
    if let Some(threads) = cfg.threads {
        // a second build in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let out_dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .map_err(Failure::user)?;
    let written = match cfg.subcommand {
        Command::Simulate => cmd_simulate(&cfg, &out_dir)?,
        Command::Estimate => cmd_estimate(&cfg, &out_dir, stdout)?,
        Command::Table => cmd_table(&cfg, &out_dir)?,
        Command::Figure => cmd_figure(&cfg, &out_dir)?,
        Command::Calibrate => cmd_calibrate(&cfg, &out_dir)?,
    };
    for file in written {
        writeln!(stdout, "wrote {}", file.display()).map_err(Failure::internal)?;
    }
    Ok(())
}

fn stem(cfg: &RunConfig) -> Result<String, Failure> {
    Ok(format!("model{}", cfg.model_id().map_err(Failure::user)?))
}

fn create(path: &FsPath) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map(BufWriter::new)
        .map_err(Failure::internal)
}

fn write_text(path: &FsPath, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::internal)
}

fn cmd_simulate(cfg: &RunConfig, dir: &FsPath) -> Result<Vec<PathBuf>, Failure> {
    let cell = cfg.cell(cfg.delta, cfg.n).map_err(Failure::user)?;
    let model = cell.model().map_err(experiment_failure)?;
    let path = simulate(&model, &SimConfig::new(cfg.n, cfg.delta, cfg.seed)).map_err(core_failure)?;
    let stem = stem(cfg)?;
    let csv = dir.join(format!("{stem}_path.csv"));
    output::write_path_csv(&path, create(&csv)?).map_err(Failure::internal)?;
    let mut written = vec![csv];
    if cfg.format == Format::Svg {
        let svg = dir.join(format!("{stem}_path.svg"));
        let chart = output::svg_line_chart(
            &format!("{stem} path, n = {}, delta = {}", cfg.n, cfg.delta),
            &path.times().collect::<Vec<_>>(),
            &[("x".to_string(), path.values.clone())],
        );
        write_text(&svg, &chart)?;
        written.push(svg);
    }
    Ok(written)
}

#[derive(Debug, Serialize)]
struct FitSummary {
    target: &'static str,
    m: u32,
    r: u32,
    dim: usize,
    dim_cap: f64,
    contrast: f64,
    penalty: f64,
    criterion: f64,
    n_in_interval: usize,
    condition: f64,
    grid_size: usize,
}

impl FitSummary {
    fn new(target: &'static str, result: &AdaptiveResult, n: usize, delta: f64) -> Self {
        let chosen = &result.fits[result.selected];
        FitSummary {
            target,
            m: chosen.fit.level(),
            r: chosen.fit.order(),
            dim: chosen.fit.dim(),
            dim_cap: (n as f64 * delta).sqrt(),
            contrast: chosen.fit.contrast,
            penalty: chosen.penalty,
            criterion: chosen.criterion(),
            n_in_interval: chosen.fit.n_in_a,
            condition: chosen.fit.condition,
            grid_size: result.fits.len(),
        }
    }
}

#[derive(Debug, Serialize)]
struct EstimateSummary {
    model: String,
    source: String,
    n: usize,
    delta: f64,
    interval: [f64; 2],
    bounds: &'static str,
    sigma0_sq: f64,
    xi0_sq: f64,
    truncation_threshold: f64,
    fits: Vec<FitSummary>,
}

fn cmd_estimate(cfg: &RunConfig, dir: &FsPath, stdout: &mut dyn Write) -> Result<Vec<PathBuf>, Failure> {
    let cell = cfg.cell(cfg.delta, cfg.n).map_err(Failure::user)?;
    let model = cell.model().map_err(experiment_failure)?;
    let interval = cell.interval().map_err(experiment_failure)?;
    let (path, source): (Path, String) = match &cfg.input {
        Some(file) => {
            let reader = File::open(file)
                .with_context(|| format!("opening {file}"))
                .map_err(Failure::user)?;
            let path = output::read_path_csv(BufReader::new(reader))
                .with_context(|| format!("reading {file}"))
                .map_err(Failure::user)?;
            (path, file.clone())
        }
        None => {
            let path = simulate(&model, &SimConfig::new(cfg.n, cfg.delta, cfg.seed)).map_err(core_failure)?;
            (path, format!("simulated, seed {}", cfg.seed))
        }
    };
    let bounds = match cfg.bounds {
        BoundsChoice::Known => Bounds::from_model(&model, &interval),
        BoundsChoice::Plugin => plugin_bounds(&path),
    }
    .map_err(core_failure)?;
    let grid = GridConfig::for_sample(path.n(), path.delta);
    let rule = TruncationRule::from_bounds(&bounds, path.n(), path.delta);
    let want_g = cfg.target != TargetChoice::Sigma2;
    let want_s = cfg.target != TargetChoice::G;
    let g = want_g
        .then(|| estimate_g_on(&path, &interval, &Penalty::g(cfg.kappa_g, bounds), &grid))
        .transpose()
        .map_err(core_failure)?;
    let sigma_penalty = Penalty {
        kind: match cfg.sigma_penalty {
            SigmaPenalty::Dim => PenaltyKind::Sigma,
            SigmaPenalty::Literal => PenaltyKind::SigmaLiteral,
        },
        kappa: cfg.kappa_sigma,
        bounds,
    };
    let s = want_s
        .then(|| estimate_sigma2_on(&path, &interval, &sigma_penalty, &grid, &rule))
        .transpose()
        .map_err(core_failure)?;

    let stem = stem(cfg)?;
    let xs: Vec<f64> = interval
        .grid(FIGURE_GRID_POINTS + 1)
        .into_iter()
        .take(FIGURE_GRID_POINTS)
        .collect();
    let mut written = Vec::new();
    let mut fits = Vec::new();
    for (target, result) in [(Target::G, &g), (Target::Sigma2, &s)] {
        let Some(result) = result else { continue };
        let file = dir.join(format!("{stem}_{}_fit.csv", target.label()));
        let estimate: Vec<f64> = xs.iter().map(|&x| result.function().eval(x)).collect();
        let truth: Vec<f64> = xs.iter().map(|&x| target.truth(&model, x)).collect();
        output::write_columns_csv(
            &xs,
            &[("estimate".into(), estimate), ("truth".into(), truth)],
            create(&file)?,
        )
        .map_err(Failure::internal)?;
        written.push(file);
        fits.push(FitSummary::new(target.label(), result, path.n(), path.delta));
    }
    if let (Some(g), Some(s)) = (&g, &s) {
        let xi2 = estimate_xi2(g, s, cfg.clip_xi2);
        let file = dir.join(format!("{stem}_xi2_fit.csv"));
        let estimate: Vec<f64> = xs.iter().map(|&x| xi2.eval(x)).collect();
        let truth: Vec<f64> = xs.iter().map(|&x| model.xi2(x)).collect();
        output::write_columns_csv(
            &xs,
            &[("estimate".into(), estimate), ("truth".into(), truth)],
            create(&file)?,
        )
        .map_err(Failure::internal)?;
        written.push(file);
    }

    for f in &fits {
        writeln!(
            stdout,
            "{}: m = {}, r = {}, D = {} (cap {:.3}), contrast = {:.6e}, penalty = {:.6e}",
            f.target, f.m, f.r, f.dim, f.dim_cap, f.contrast, f.penalty
        )
        .map_err(Failure::internal)?;
    }
    let summary = EstimateSummary {
        model: stem.clone(),
        source,
        n: path.n(),
        delta: path.delta,
        interval: [interval.lo(), interval.hi()],
        bounds: match cfg.bounds {
            BoundsChoice::Known => "known",
            BoundsChoice::Plugin => "plugin",
        },
        sigma0_sq: bounds.sigma0_sq,
        xi0_sq: bounds.xi0_sq,
        truncation_threshold: rule.threshold,
        fits,
    };
    let file = dir.join(format!("{stem}_summary.json"));
    let json = serde_json::to_string_pretty(&summary).map_err(Failure::internal)?;
    write_text(&file, &(json + "\n"))?;
    written.push(file);
    Ok(written)
}

fn cmd_table(cfg: &RunConfig, dir: &FsPath) -> Result<Vec<PathBuf>, Failure> {
    let cells = cfg.parsed_cells().map_err(Failure::user)?;
    let mut rows = Vec::with_capacity(cells.len());
    for (delta, n) in cells {
        let cell = cfg.cell(delta, n).map_err(Failure::user)?;
        let reports = run_cell(&cell)
            .map_err(experiment_failure)
            .map_err(|mut f| {
                f.error = f.error.context(format!("cell delta = {delta}, n = {n}"));
                f
            })?;
        rows.push((delta, n, reports));
    }
    let file = dir.join(format!("{}_table.csv", stem(cfg)?));
    output::write_table_csv(&rows, create(&file)?).map_err(Failure::internal)?;
    Ok(vec![file])
}

fn cmd_figure(cfg: &RunConfig, dir: &FsPath) -> Result<Vec<PathBuf>, Failure> {
    let cell = cfg.cell(cfg.delta, cfg.n).map_err(Failure::user)?;
    let data = figure_data(&cell).map_err(experiment_failure)?;
    let stem = stem(cfg)?;
    let mut written = Vec::new();
    for fig in data.iter().filter(|f| match cfg.target {
        TargetChoice::Both => true,
        TargetChoice::G => f.target == Target::G,
        TargetChoice::Sigma2 => f.target == Target::Sigma2,
    }) {
        let base = format!("{stem}_figure_{}", fig.target.label());
        match cfg.format {
            Format::Csv => {
                let file = dir.join(format!("{base}.csv"));
                output::write_figure_csv(fig, create(&file)?).map_err(Failure::internal)?;
                written.push(file);
            }
            Format::Svg => {
                let mut series = vec![("truth".to_string(), fig.truth.clone())];
                for (i, curve) in fig.estimates.iter().enumerate() {
                    series.push((format!("estimate {}", i + 1), curve.clone()));
                }
                let title = format!(
                    "{stem}: {} on [{}, {}), n = {}, delta = {}",
                    fig.target,
                    fmt_end(fig.xs.first()),
                    fmt_end(cell.interval().ok().map(|a| a.hi()).as_ref()),
                    cfg.n,
                    cfg.delta
                );
                let file = dir.join(format!("{base}.svg"));
                write_text(&file, &output::svg_line_chart(&title, &fig.xs, &series))?;
                written.push(file);
            }
        }
    }
    Ok(written)
}

fn fmt_end(v: Option<&f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

fn cmd_calibrate(cfg: &RunConfig, dir: &FsPath) -> Result<Vec<PathBuf>, Failure> {
    let cell = cfg.cell(cfg.delta, cfg.n).map_err(Failure::user)?;
    let rows = calibration_sweep(&cell, &cfg.kappas).map_err(experiment_failure)?;
    let stem = stem(cfg)?;
    let file = dir.join(format!("{stem}_calibration.csv"));
    output::write_calibration_csv(&rows, create(&file)?).map_err(Failure::internal)?;
    let mut written = vec![file];
    if cfg.format == Format::Svg {
        let xs: Vec<f64> = rows.iter().map(|r| r.kappa).collect();
        let chart = output::svg_line_chart(
            &format!("{stem}: risk against kappa, n = {}, delta = {}", cfg.n, cfg.delta),
            &xs,
            &[
                ("risk g".to_string(), rows.iter().map(|r| r.risk_g).collect()),
                ("risk sigma2".to_string(), rows.iter().map(|r| r.risk_sigma2).collect()),
            ],
        );
        let file = dir.join(format!("{stem}_calibration.svg"));
        write_text(&file, &chart)?;
        written.push(file);
    }
    Ok(written)
}
