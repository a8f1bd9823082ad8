//! `twpa spectrum|sweep|optimize` front end.
//!
//! Each command reads a [`RunConfig`], delegates to the library, and writes
//! CSV (with the resolved config echoed as `#` comment lines), SVG plots (the
//! config goes into `<desc>`), or a JSON report. Floats are written with 12
//! significant digits so identical configs give byte-identical files.

pub mod config;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::optimize::{optimize, pareto_scan, OptimizeError, Stage};
use crate::sweep::{loss_sweep, spectrum, sweep_2d, Metric, SpectrumResult, SweepError, SweepGrid2D};

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible cell: {0}")]
    Infeasible(String),
    #[error("no feasible point: {0}")]
    NoFeasiblePoint(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::NoFeasiblePoint(_) => 4,
            CliError::Io { .. } | CliError::Other(_) => 1,
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(err: OptimizeError) -> Self {
        match err {
            OptimizeError::NoFeasiblePoint => CliError::NoFeasiblePoint(err.to_string()),
            OptimizeError::InvalidSpace(_) => CliError::Config(err.to_string()),
            OptimizeError::InvalidCell(_) | OptimizeError::Undefined { .. } => {
                CliError::Infeasible(err.to_string())
            }
        }
    }
}

impl From<SweepError> for CliError {
    fn from(err: SweepError) -> Self {
        match err {
            SweepError::InvalidCell(_) | SweepError::InconsistentCell(_) => {
                CliError::Infeasible(err.to_string())
            }
            SweepError::InvalidGrid(_) | SweepError::EmptyBand { .. } => {
                CliError::Config(err.to_string())
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "twpa", version, about = "RPM JTWPA gain, squeezing and resonator design sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gain and squeezing spectra of one resonator design.
    Spectrum(CommonArgs),
    /// 2D maps over (C_c, C_r).
    Sweep(CommonArgs),
    /// Grid search plus simplex refinement over (C_c, C_r).
    Optimize(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (falls back to TWPA_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Comma-separated output formats, overriding `output.formats`.
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<String>>,
}

/// Where and what to write.
#[derive(Debug, Clone)]
pub struct OutputTarget {
    pub dir: PathBuf,
    pub csv: bool,
    pub svg: bool,
}

impl OutputTarget {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.dir).map_err(|source| CliError::Io {
            path: self.dir.clone(),
            source,
        })?;
        let path = self.path(name);
        fs::write(&path, contents).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

/// `{:.11e}`: 12 significant digits.
pub fn format_float(value: f64) -> String {
    format!("{value:.11e}")
}

fn format_option(value: Option<f64>) -> String {
    value.map(format_float).unwrap_or_default()
}

fn round12(value: f64) -> f64 {
    format_float(value).parse().unwrap_or(value)
}

fn csv_bytes(echo: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    for line in echo.lines() {
        out.extend_from_slice(b"# ");
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    let mut writer = csv::Writer::from_writer(out);
    let csv_error = |e: csv::Error| CliError::Other(format!("csv: {e}"));
    writer.write_record(header).map_err(csv_error)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_error)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Other(format!("csv: {e}")))
}

fn spectrum_rows(s: &SpectrumResult) -> Vec<Vec<String>> {
    let abs = s.abs_squeeze_db();
    (0..s.len())
        .map(|i| {
            vec![
                format_float(s.frequencies[i]),
                format_option(s.gain_db[i]),
                format_option(s.lossy_gain_db[i]),
                format_option(s.squeeze_min_db[i]),
                format_option(s.squeeze_max_db[i]),
                format_option(abs[i]),
                s.flags[i].label().to_string(),
            ]
        })
        .collect()
}

fn ghz(frequencies: &[f64]) -> Vec<f64> {
    frequencies.iter().map(|f| f / 1e9).collect()
}

pub fn run_spectrum(config: &RunConfig, target: &OutputTarget) -> Result<Vec<PathBuf>, CliError> {
    let design = config.design()?;
    let (cc, cr) = config.resonator_point()?;
    let resonator = design
        .cell(cc, cr)
        .map_err(|e| CliError::Infeasible(e.to_string()))?;
    let loss = config.loss_model()?;
    let grid = config.frequency_grid()?;
    let result = spectrum(&design.device, &resonator, &design.pump, &loss, &grid)?;
    let echo = config.echo();
    let mut written = Vec::new();

    if target.csv {
        let bytes = csv_bytes(
            &echo,
            &[
                "frequency_hz",
                "gain_db",
                "lossy_gain_db",
                "squeeze_min_db",
                "squeeze_max_db",
                "abs_squeeze_db",
                "flag",
            ],
            spectrum_rows(&result),
        )?;
        written.push(target.write("spectrum.csv", &bytes)?);
    }
    if target.svg {
        let x = ghz(&result.frequencies);
        let gain = result.lossy_gain_db.clone();
        let abs = result.abs_squeeze_db();
        let title = format!(
            "C_c = {} fF, C_r = {} pF, eta = {}",
            config.resonator.as_ref().map_or(0.0, |r| r.cc_ff),
            config.resonator.as_ref().map_or(0.0, |r| r.cr_pf),
            loss.eta()
        );
        let svg = svg::LinePlot {
            title: &title,
            x_label: "signal frequency (GHz)",
            y_label: "dB",
            series: vec![
                svg::Series { label: "gain", color: "#d4a017", x: &x, y: &gain },
                svg::Series { label: "|squeezing|", color: "#222222", x: &x, y: &abs },
            ],
            description: &echo,
        }
        .render();
        written.push(target.write("spectrum.svg", svg.as_bytes())?);
    }

    if let Some(etas) = config.loss_models()? {
        let sweep = loss_sweep(&design.device, &resonator, &design.pump, &etas, &grid)?;
        if target.csv {
            let rows = sweep.spectra.iter().flat_map(|s| {
                let abs = s.abs_squeeze_db();
                (0..s.len())
                    .map(|i| {
                        vec![
                            format_float(s.eta),
                            format_float(s.frequencies[i]),
                            format_option(s.lossy_gain_db[i]),
                            format_option(s.squeeze_min_db[i]),
                            format_option(abs[i]),
                            s.flags[i].label().to_string(),
                        ]
                    })
                    .collect::<Vec<_>>()
            });
            let bytes = csv_bytes(
                &echo,
                &["eta", "frequency_hz", "lossy_gain_db", "squeeze_min_db", "abs_squeeze_db", "flag"],
                rows,
            )?;
            written.push(target.write("loss_sweep.csv", &bytes)?);
        }
        if target.svg {
            let x = ghz(&result.frequencies);
            let labels: Vec<String> = sweep.spectra.iter().map(|s| format!("eta = {}", s.eta)).collect();
            let abs: Vec<Vec<Option<f64>>> = sweep.spectra.iter().map(|s| s.abs_squeeze_db()).collect();
            let palette = ["#222222", "#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
            for (name, quantity, values) in [
                ("loss_sweep_gain.svg", "gain (dB)", sweep.spectra.iter().map(|s| s.lossy_gain_db.clone()).collect::<Vec<_>>()),
                ("loss_sweep_squeezing.svg", "|squeezing| (dB)", abs),
            ] {
                let series = values
                    .iter()
                    .enumerate()
                    .map(|(i, y)| svg::Series {
                        label: &labels[i],
                        color: palette[i % palette.len()],
                        x: &x,
                        y,
                    })
                    .collect();
                let svg = svg::LinePlot {
                    title: "loss sweep",
                    x_label: "signal frequency (GHz)",
                    y_label: quantity,
                    series,
                    description: &echo,
                }
                .render();
                written.push(target.write(name, svg.as_bytes())?);
            }
        }
    }
    Ok(written)
}

/// Bandwidth maps are reported in GHz; point metrics in dB.
fn output_scale(metric: &Metric) -> (f64, &'static str) {
    match metric {
        Metric::Bandwidth { .. } => (1e-9, "GHz"),
        _ => (1.0, "dB"),
    }
}

fn sweep_rows(grid: &SweepGrid2D, scale: f64) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (r, &cr) in grid.cr_values.iter().enumerate() {
        for (c, &cc) in grid.cc_values.iter().enumerate() {
            rows.push(vec![
                format_float(cc),
                format_float(cr),
                format_option(grid.field[r][c].map(|v| v * scale)),
                grid.flags[r][c].label().to_string(),
            ]);
        }
    }
    rows
}

pub fn run_sweep(config: &RunConfig, target: &OutputTarget) -> Result<Vec<PathBuf>, CliError> {
    let design = config.design()?;
    let (cc_values, cr_values) = config.search_axes()?;
    let loss = config.loss_model()?;
    let echo = config.echo();
    let mut written = Vec::new();

    for metric in config.metrics()? {
        let grid = sweep_2d(&design, &loss, &cc_values, &cr_values, &metric);
        let (scale, unit) = output_scale(&metric);
        if target.csv {
            let echo = format!("{echo}\nmetric = \"{}\"\nunit = \"{unit}\"", grid.metric_name);
            let bytes = csv_bytes(&echo, &["cc_f", "cr_f", "value", "flag"], sweep_rows(&grid, scale))?;
            written.push(target.write(&format!("sweep2d_{}.csv", grid.metric_name), &bytes)?);
        }
        if target.svg {
            let x: Vec<f64> = grid.cc_values.iter().map(|c| c / 1e-15).collect();
            let y: Vec<f64> = grid.cr_values.iter().map(|c| c / 1e-12).collect();
            let values: Vec<Vec<Option<f64>>> = grid
                .field
                .iter()
                .map(|row| row.iter().map(|v| v.map(|v| v * scale)).collect())
                .collect();
            let title = format!("{} (eta = {})", grid.metric_name, loss.eta());
            let svg = svg::Heatmap {
                title: &title,
                x_label: "C_c (fF)",
                y_label: "C_r (pF)",
                value_label: unit,
                x: &x,
                y: &y,
                values: &values,
                description: &echo,
            }
            .render();
            written.push(target.write(&format!("sweep2d_{}.svg", grid.metric_name), svg.as_bytes())?);
        }
    }
    Ok(written)
}

pub fn run_optimize(config: &RunConfig, target: &OutputTarget) -> Result<Vec<PathBuf>, CliError> {
    let design = config.design()?;
    let space = config.search_space(&design)?;
    let (objective, partner) = config.objectives()?;
    let report = optimize(&design, &objective, &space)?;
    let echo = config.echo();
    let mut written = Vec::new();

    let cell = report.derived_cell;
    let trace: Vec<_> = report
        .trace
        .iter()
        .map(|e| {
            json!({
                "cc_f": round12(e.cc),
                "cr_f": round12(e.cr),
                "value": e.value.map(round12),
                "stage": match e.stage { Stage::Grid => "grid", Stage::Refine => "refine" },
            })
        })
        .collect();
    let document = json!({
        "objective": objective.name(),
        "best_point": { "cc_f": round12(report.best_point.0), "cr_f": round12(report.best_point.1) },
        "best_value": round12(report.best_value),
        "best_grid_value": round12(report.best_grid_value),
        "derived_cell": {
            "c_ground_f": round12(cell.c_ground()),
            "c_coupling_f": round12(cell.c_coupling()),
            "c_resonator_f": round12(cell.c_resonator()),
            "l_resonator_h": round12(cell.l_resonator()),
            "resonance_hz": round12(cell.resonance_frequency() / (2.0 * std::f64::consts::PI)),
        },
        "n_evaluations": report.n_evaluations,
        "trace": trace,
        "config": echo,
    });
    let mut text = serde_json::to_string_pretty(&document).map_err(|e| CliError::Other(e.to_string()))?;
    text.push('\n');
    written.push(target.write("report.json", text.as_bytes())?);

    if let Some(partner) = partner {
        let front = pareto_scan(&design, (&objective, &partner), &space)?;
        let echo = format!(
            "{echo}\nvalue_1 = \"{}\"\nvalue_2 = \"{}\"",
            objective.name(),
            partner.name()
        );
        let rows = front.iter().map(|p| {
            vec![
                format_float(p.cc),
                format_float(p.cr),
                format_float(p.values.0),
                format_float(p.values.1),
            ]
        });
        let bytes = csv_bytes(&echo, &["cc_f", "cr_f", "value_1", "value_2"], rows)?;
        written.push(target.write("front.csv", &bytes)?);
    }
    Ok(written)
}

fn thread_count(cli: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = cli {
        return Ok(Some(n));
    }
    match std::env::var("TWPA_THREADS") {
        Ok(value) => value
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("TWPA_THREADS: not a thread count (`{value}`)"))),
        Err(_) => Ok(None),
    }
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::parse(&text)
}

pub fn execute(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let (args, runner): (&CommonArgs, fn(&RunConfig, &OutputTarget) -> Result<Vec<PathBuf>, CliError>) =
        match &cli.command {
            Command::Spectrum(a) => (a, run_spectrum),
            Command::Sweep(a) => (a, run_sweep),
            Command::Optimize(a) => (a, run_optimize),
        };
    let mut config = load(&args.config)?;
    if let Some(formats) = &args.format {
        config.output.formats = formats.iter().map(|f| f.trim().to_string()).collect();
        config.validate()?;
    }
    let target = OutputTarget {
        dir: args.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir)),
        csv: config.output.formats.iter().any(|f| f == "csv"),
        svg: config.output.formats.iter().any(|f| f == "svg"),
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(args.threads)? {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Other(e.to_string()))?;
    pool.install(|| runner(&config, &target))
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(paths) => {
            for path in paths {
                println!("{}", path.display());
            }
            0
        }
        Err(err) => {
            eprintln!("twpa: {err}");
            err.exit_code()
        }
    }
}
