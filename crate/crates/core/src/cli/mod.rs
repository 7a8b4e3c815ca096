//! Command-line frontend: `simulate`, `sweep`, `optimize`, `link`, `presets list`.

pub mod config;
pub mod output;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, Direction, EfficiencyReport, ProtocolParams};
use crate::comb::CombParams;
use crate::dynamics::{self, GridSpec};
use crate::error::{Error, Result};
use crate::link::{self, FeasibilityReport, LinkReport};
use crate::optimize::{self, CurveRow, Objective, OptimizationResult};

pub use config::{Overrides, OutputFormat, RunConfig};
pub use output::canonical_json;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "AFC_RAMAN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "afc-raman", version, about = "Photon-pair source from Raman emission in a frequency-comb crystal")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write, herald and read on the ensemble grid; compare with closed forms.
    Simulate(RunArgs),
    /// Closed-form report over a Cartesian (alpha_L, F, theta0^2) grid.
    Sweep(RunArgs),
    /// Finesse maximizing a readout or memory efficiency.
    Optimize(OptimizeArgs),
    /// Entanglement time and fidelity of a two-crystal link.
    Link(RunArgs),
    /// Bundled material presets.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetsAction {
    List,
}

#[derive(Debug, Args)]
pub struct OverrideArgs {
    #[arg(long = "theta0-sq")]
    pub theta0_sq: Option<f64>,
    #[arg(long = "alpha-l")]
    pub alpha_l: Option<f64>,
    /// Sets gamma = delta0 / F.
    #[arg(long)]
    pub finesse: Option<f64>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            theta0_sq: self.theta0_sq,
            alpha_l: self.alpha_l,
            finesse: self.finesse,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(short, long)]
    pub config: PathBuf,
    /// Overrides `output.path`.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long = "alpha-l")]
    pub alpha_l: Option<f64>,
    #[arg(long)]
    pub objective: Option<Objective>,
}

/// Sizes the global rayon pool from [`THREADS_ENV`]; unset or `0` keeps the default.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")))?;
    if n > 0 {
        // a pool built earlier in the process wins; that is harmless here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&load(a)?, stdout),
        Command::Sweep(a) => cmd_sweep(&load(a)?, stdout),
        Command::Link(a) => cmd_link(&load(a)?, stdout),
        Command::Optimize(a) => {
            let mut cfg = match &a.config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(p) = &a.out {
                cfg.output.path = Some(p.clone());
            }
            let opt = cfg.optimize.get_or_insert(config::OptimizeOptions {
                alpha_l: f64::NAN,
                objective: Objective::RamanBackward,
                f_min: None,
                curve: None,
            });
            if let Some(al) = a.alpha_l {
                opt.alpha_l = al;
            }
            if let Some(o) = a.objective {
                opt.objective = o;
            }
            if opt.alpha_l.is_nan() {
                return Err(Error::Config("missing key `optimize.alpha_L` (or --alpha-l)".into()));
            }
            cmd_optimize(&cfg, stdout)
        }
        Command::Presets { action: PresetsAction::List } => {
            stdout.write_all(canonical_json(&link::builtin_presets())?.as_bytes())?;
            Ok(())
        }
    }
}

fn load(a: &RunArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&a.config)?;
    cfg.apply(&a.overrides.overrides());
    if let Some(p) = &a.out {
        cfg.output.path = Some(p.clone());
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSummary {
    pub direction: Direction,
    /// Photons per mode at the located revival.
    pub eta_readout: f64,
    pub window_counts: f64,
    pub stokes_per_mode: f64,
    pub noise_per_mode: f64,
    pub peak_time: f64,
    pub time_step: f64,
    pub n_cells: usize,
}

/// Relative differences `(dynamics - analytic) / analytic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deltas {
    pub eta_readout_rel: f64,
    pub stokes_rel: f64,
    pub noise_rel: f64,
    /// Located minus predicted revival, in time steps.
    pub peak_offset_steps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultimodeSummary {
    pub detections: Vec<f64>,
    pub multiplicity: Vec<u32>,
    pub predicted: Vec<f64>,
    pub located: Vec<f64>,
    pub peak_counts: Vec<f64>,
    pub max_offset_steps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationReport {
    pub comb: CombParams,
    pub protocol: ProtocolParams,
    pub grid: GridSpec,
    pub analytic: EfficiencyReport,
    pub dynamics: DynamicsSummary,
    pub deltas: Deltas,
    pub multimode: Option<MultimodeSummary>,
}

fn rel(num: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if num == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        (num - reference) / reference
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<(SimulationReport, dynamics::FieldTrace)> {
    let c = cfg.comb()?;
    let p = cfg.protocol()?;
    let analytic = analytic::full_report(&c, &p)?;
    let direction = cfg.simulate.direction;

    let grid = dynamics::build_grid(&c, &cfg.grid)?;
    let state = dynamics::write_step(&grid, &p)?;
    let trace = match direction {
        Direction::Backward => dynamics::heralded_readout(&state, &grid, &p)?,
        Direction::Forward => dynamics::forward_readout(&state, &grid, &p)?,
    };
    let stokes = dynamics::stokes_count(&state, &grid, p.t_d);
    let noise = dynamics::noise_flux(&grid, &p)?;
    let eta_ref = match direction {
        Direction::Backward => analytic.eta_readout,
        Direction::Forward => analytic.eta_readout_forward,
    };
    let predicted_peak = p.tau + grid.comb().revival_time();

    let multimode = if cfg.simulate.detection_times.is_empty() {
        None
    } else {
        let mut times = vec![p.t_d];
        times.extend(&cfg.simulate.detection_times);
        let m = dynamics::multimode_rephasing(&times, p.tau, &grid, &p)?;
        Some(MultimodeSummary {
            max_offset_steps: m.max_offset_steps(),
            detections: m.detections,
            multiplicity: m.multiplicity,
            predicted: m.predicted,
            located: m.located,
            peak_counts: m.peak_counts,
        })
    };

    let report = SimulationReport {
        deltas: Deltas {
            eta_readout_rel: rel(trace.mode_integrated_counts, eta_ref),
            stokes_rel: rel(stokes, analytic.p_stokes),
            noise_rel: rel(noise, analytic.noise_per_mode),
            peak_offset_steps: (trace.peak_time - predicted_peak) / grid.time_step,
        },
        dynamics: DynamicsSummary {
            direction,
            eta_readout: trace.mode_integrated_counts,
            window_counts: trace.window_counts,
            stokes_per_mode: stokes,
            noise_per_mode: noise,
            peak_time: trace.peak_time,
            time_step: grid.time_step,
            n_cells: grid.n_cells(),
        },
        comb: c,
        protocol: p,
        grid: cfg.grid,
        analytic,
        multimode,
    };
    Ok((report, trace))
}

fn cmd_simulate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let (report, trace) = simulate(cfg)?;
    let json = canonical_json(&report)?;
    if let Some(dir) = &cfg.output.path {
        fs::create_dir_all(dir)?;
        match cfg.output.format {
            OutputFormat::Csv => trace.write_csv(fs::File::create(dir.join("trace.csv"))?)?,
            OutputFormat::Json => fs::write(dir.join("trace.json"), canonical_json(&trace)?)?,
        }
        fs::write(dir.join("report.json"), &json)?;
    }
    stdout.write_all(json.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "alpha_L")]
    pub alpha_l: f64,
    pub theta0_sq: f64,
    pub gamma_fwhm: f64,
    pub report: EfficiencyReport,
    /// Oracle readout efficiency, when requested.
    pub eta_dynamics: Option<f64>,
}

pub const SWEEP_COLUMNS: [&str; 18] = [
    "alpha_L",
    "finesse",
    "theta0_sq",
    "gamma_fwhm",
    "effective_depth",
    "p_stokes",
    "photons_per_write_attempt",
    "eta_readout",
    "eta_readout_forward",
    "eta_memory_backward",
    "eta_memory_forward",
    "noise_per_mode",
    "snr_lower_bound",
    "snr_asymptotic",
    "echo_time",
    "mode_capacity",
    "eta_dynamics",
    "warnings",
];

impl SweepRow {
    fn record(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:?}");
        let o = |x: Option<f64>| x.map(f).unwrap_or_default();
        let r = &self.report;
        vec![
            f(self.alpha_l),
            f(r.finesse),
            f(self.theta0_sq),
            f(self.gamma_fwhm),
            f(r.effective_depth),
            f(r.p_stokes),
            f(r.photons_per_write_attempt),
            f(r.eta_readout),
            f(r.eta_readout_forward),
            f(r.eta_memory_backward),
            f(r.eta_memory_forward),
            f(r.noise_per_mode),
            o(r.snr_lower_bound),
            o(r.snr_asymptotic),
            f(r.echo_time),
            r.mode_capacity.to_string(),
            o(self.eta_dynamics),
            r.warnings.join("; "),
        ]
    }
}

/// Rows ordered alpha_L-major, then finesse, then theta0^2.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let opts = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing key `sweep`".into()))?;
    let base = cfg.comb()?;
    let proto = cfg.protocol()?;
    let alphas = opts.alpha_l.values("alpha_L")?;
    let finesses = opts.finesse.values("finesse")?;
    let thetas = opts.theta0_sq.values("theta0_sq")?;
    let mut points = Vec::with_capacity(alphas.len() * finesses.len() * thetas.len());
    for &a in &alphas {
        for &f in &finesses {
            for &t in &thetas {
                points.push((a, f, t));
            }
        }
    }
    points
        .par_iter()
        .map(|&(a, f, t)| {
            let c = CombParams {
                gamma_fwhm: base.delta0 / f,
                alpha_l: a,
                ..base
            };
            c.validate()?;
            let p = ProtocolParams { theta0_sq: t, ..proto };
            let report = analytic::full_report(&c, &p)?;
            let eta_dynamics = if opts.dynamics {
                Some(dynamics::oracle_summary(&c, &p, &cfg.grid)?.eta_readout)
            } else {
                None
            };
            Ok(SweepRow {
                alpha_l: a,
                theta0_sq: t,
                gamma_fwhm: c.gamma_fwhm,
                report,
                eta_dynamics,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

fn emit(cfg: &RunConfig, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match &cfg.output.path {
        Some(p) => write_file(p, bytes),
        None => Ok(stdout.write_all(bytes)?),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(fs::write(path, bytes)?)
}

fn cmd_sweep(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let rows = sweep(cfg)?;
    let bytes = match cfg.output.format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            buf
        }
        OutputFormat::Json => canonical_json(&rows)?.into_bytes(),
    };
    emit(cfg, stdout, &bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeOutput {
    pub result: OptimizationResult,
    pub curve: Option<Vec<CurveRow>>,
}

fn cmd_optimize(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let opts = cfg.optimize.as_ref().expect("filled by caller");
    let result = match opts.f_min {
        Some(f_min) => optimize::optimize_finesse_bounded(opts.alpha_l, opts.objective, f_min)?,
        None => optimize::optimize_finesse(opts.alpha_l, opts.objective)?,
    };
    let curve = opts
        .curve
        .as_deref()
        .map(|grid| optimize::efficiency_curve(opts.objective, grid))
        .transpose()?;
    // a curve destined for CSV goes to the output file, the optimum to stdout
    if let (Some(rows), Some(path), OutputFormat::Csv) = (&curve, &cfg.output.path, cfg.output.format) {
        let mut buf = Vec::new();
        optimize::write_curve_csv(rows, &mut buf)?;
        write_file(path, &buf)?;
        let json = canonical_json(&OptimizeOutput { result, curve: None })?;
        stdout.write_all(json.as_bytes())?;
        return Ok(());
    }
    emit(cfg, stdout, canonical_json(&OptimizeOutput { result, curve })?.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LinkOutput {
    Feasibility(Box<FeasibilityReport>),
    Link(LinkReport),
}

pub fn link(cfg: &RunConfig) -> Result<LinkOutput> {
    let opts = cfg
        .link
        .as_ref()
        .ok_or_else(|| Error::Config("missing key `link`".into()))?;
    let Some(name) = &opts.preset else {
        return Ok(LinkOutput::Link(link::link_report(&opts.params)?));
    };
    let preset = link::find_preset(name)?;
    let finesse = opts
        .finesse
        .ok_or_else(|| Error::Config("missing key `link.finesse` (required with a preset)".into()))?;
    let proto = cfg.protocol()?;
    let report = link::feasibility_report(
        &preset,
        finesse,
        &opts.params,
        opts.p_from_comb,
        &proto,
        opts.heralds_needed.unwrap_or(link::DEFAULT_HERALDS),
    )?;
    Ok(LinkOutput::Feasibility(Box::new(report)))
}

fn cmd_link(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let out = link(cfg)?;
    emit(cfg, stdout, canonical_json(&out)?.as_bytes())
}
