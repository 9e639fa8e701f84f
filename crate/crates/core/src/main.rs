use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qfi_quench::cli::{
    parse_grid, run_bounds, run_qscan, run_scan, run_trace, BoundsConfig, OpChoice, QscanConfig,
    RunParams, ScanConfig, TmaxRule, TraceConfig,
};
use qfi_quench::model::{Boundary, StaggeredKind};
use qfi_quench::Error;

/// Quantum Fisher information of Fermi-Hubbard thermal states from quench
/// dynamics, with mode-entanglement certification.
#[derive(Parser)]
#[command(name = "qfi-quench", version, about)]
struct CliArgs {
    /// Optional TOML file with per-subcommand key/value defaults; explicit
    /// flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// QFI over a (U, T) grid with certification thresholds.
    Scan(ScanArgs),
    /// Protocol time series at one interaction value.
    Trace(TraceArgs),
    /// Estimator error against the quench amplitude.
    Qscan(QscanArgs),
    /// k-producibility bound table.
    Bounds(BoundsArgs),
}

#[derive(Args, serde::Deserialize, Default)]
struct CommonArgs {
    /// Chain length.
    #[arg(long = "L")]
    sites: Option<usize>,
    /// open or periodic.
    #[arg(long)]
    boundary: Option<String>,
    /// Up-spin occupation (default half filling).
    #[arg(long)]
    n_up: Option<usize>,
    /// Down-spin occupation (default half filling).
    #[arg(long)]
    n_down: Option<usize>,
    /// Quench amplitude in units of J.
    #[arg(long)]
    q: Option<f64>,
    /// Time step in units of 1/J.
    #[arg(long)]
    dt: Option<f64>,
    /// Grid end rule: pit:<c> (t_max = c/(pi T)) or fixed:<t>.
    #[arg(long = "tmax-rule")]
    tmax_rule: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// RNG seed for stochastic subcommands.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn merge(self, file: Option<&Self>) -> Self {
        match file {
            None => self,
            Some(f) => CommonArgs {
                sites: self.sites.or(f.sites),
                boundary: self.boundary.or_else(|| f.boundary.clone()),
                n_up: self.n_up.or(f.n_up),
                n_down: self.n_down.or(f.n_down),
                q: self.q.or(f.q),
                dt: self.dt.or(f.dt),
                tmax_rule: self.tmax_rule.or_else(|| f.tmax_rule.clone()),
                jobs: self.jobs.or(f.jobs),
                seed: self.seed.or(f.seed),
                out: self.out.or_else(|| f.out.clone()),
            },
        }
    }

    fn into_params(self, default_sites: usize) -> Result<(RunParams, PathBuf), Error> {
        let sites = self.sites.unwrap_or(default_sites);
        let mut p = RunParams::defaults(sites);
        if let Some(b) = &self.boundary {
            p.boundary = match b.as_str() {
                "open" => Boundary::Open,
                "periodic" => Boundary::Periodic,
                other => return Err(Error::Config(format!("unknown boundary {other}"))),
            };
        }
        if let Some(n) = self.n_up {
            p.n_up = n;
        }
        if let Some(n) = self.n_down {
            p.n_down = n;
        }
        if let Some(q) = self.q {
            p.q = q;
        }
        if let Some(dt) = self.dt {
            p.dt = dt;
        }
        if let Some(rule) = &self.tmax_rule {
            p.tmax_rule = TmaxRule::parse(rule)?;
        }
        if let Some(j) = self.jobs {
            p.jobs = j;
        }
        if let Some(s) = self.seed {
            p.seed = s;
        }
        let out = self.out.unwrap_or_else(|| PathBuf::from("out"));
        Ok((p, out))
    }
}

#[derive(Args, serde::Deserialize, Default)]
struct ScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    /// Interaction grid: comma list or lo:hi:n.
    #[arg(long = "U-grid", allow_hyphen_values = true)]
    u_grid: Option<String>,
    /// Temperature grid: comma list or lo:hi:n.
    #[arg(long = "T-grid", allow_hyphen_values = true)]
    t_grid: Option<String>,
    /// plus, minus, or max.
    #[arg(long)]
    op: Option<String>,
}

#[derive(Args, serde::Deserialize, Default)]
struct TraceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    /// Interaction value U/J.
    #[arg(long = "U", allow_hyphen_values = true)]
    u: Option<f64>,
    /// Temperatures (comma list).
    #[arg(long = "T-grid", allow_hyphen_values = true)]
    t_grid: Option<String>,
    /// plus or minus.
    #[arg(long)]
    op: Option<String>,
}

#[derive(Args, serde::Deserialize, Default)]
struct QscanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    /// Interaction value U/J.
    #[arg(long = "U", allow_hyphen_values = true)]
    u: Option<f64>,
    /// Temperature T/J.
    #[arg(long = "T")]
    temperature: Option<f64>,
    /// Quench amplitudes to test (comma list).
    #[arg(long = "q-grid")]
    q_grid: Option<String>,
    /// plus or minus.
    #[arg(long)]
    op: Option<String>,
}

#[derive(Args, serde::Deserialize, Default)]
struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    /// Explicit mode weights (comma list); default staggered weights of L.
    #[arg(long, allow_hyphen_values = true)]
    weights: Option<String>,
    /// Total particle number for the fixed-N bounds.
    #[arg(long = "N")]
    n_particles: Option<usize>,
    /// plus or minus staggered weights when --weights is absent.
    #[arg(long)]
    op: Option<String>,
    /// Add exhaustive-search columns (|M| <= 8).
    #[arg(long, default_value_t = false)]
    #[serde(default)]
    brute_force: bool,
}

fn parse_staggered(op: Option<&str>, default: StaggeredKind) -> Result<StaggeredKind, Error> {
    match op {
        None => Ok(default),
        Some("plus") => Ok(StaggeredKind::Plus),
        Some("minus") => Ok(StaggeredKind::Minus),
        Some(other) => Err(Error::Config(format!("unknown operator {other}"))),
    }
}

fn load_file_section<A: serde::de::DeserializeOwned>(
    path: Option<&PathBuf>,
    section: &str,
) -> Result<Option<A>, Error> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("config file: {e}")))?;
    match table.get(section) {
        None => Ok(None),
        Some(v) => v
            .clone()
            .try_into()
            .map(Some)
            .map_err(|e| Error::Config(format!("config section [{section}]: {e}"))),
    }
}

fn dispatch(args: CliArgs) -> Result<(), Error> {
    match args.command {
        Command::Scan(a) => {
            let file: Option<ScanArgs> = load_file_section(args.config.as_ref(), "scan")?;
            let common = a.common.merge(file.as_ref().map(|f| &f.common));
            let u_grid = a
                .u_grid
                .or_else(|| file.as_ref().and_then(|f| f.u_grid.clone()))
                .unwrap_or_else(|| "-10:10:11".into());
            let t_grid = a
                .t_grid
                .or_else(|| file.as_ref().and_then(|f| f.t_grid.clone()))
                .unwrap_or_else(|| "0.1:1:10".into());
            let op = a.op.or_else(|| file.as_ref().and_then(|f| f.op.clone()));
            let (params, out) = common.into_params(8)?;
            let op = match op.as_deref() {
                None | Some("max") => OpChoice::Max,
                Some("plus") => OpChoice::Plus,
                Some("minus") => OpChoice::Minus,
                Some(other) => return Err(Error::Config(format!("unknown operator {other}"))),
            };
            run_scan(&ScanConfig {
                params,
                u_grid: parse_grid(&u_grid)?,
                t_grid: parse_grid(&t_grid)?,
                op,
                out,
            })
        }
        Command::Trace(a) => {
            let file: Option<TraceArgs> = load_file_section(args.config.as_ref(), "trace")?;
            let common = a.common.merge(file.as_ref().map(|f| &f.common));
            let u = a.u.or_else(|| file.as_ref().and_then(|f| f.u)).unwrap_or(4.0);
            let t_grid = a
                .t_grid
                .or_else(|| file.as_ref().and_then(|f| f.t_grid.clone()))
                .unwrap_or_else(|| "0.2,0.4,0.8".into());
            let op = a.op.or_else(|| file.as_ref().and_then(|f| f.op.clone()));
            let (params, out) = common.into_params(8)?;
            run_trace(&TraceConfig {
                params,
                u,
                t_values: parse_grid(&t_grid)?,
                op: parse_staggered(op.as_deref(), StaggeredKind::Plus)?,
                out,
            })
        }
        Command::Qscan(a) => {
            let file: Option<QscanArgs> = load_file_section(args.config.as_ref(), "qscan")?;
            let common = a.common.merge(file.as_ref().map(|f| &f.common));
            let u = a.u.or_else(|| file.as_ref().and_then(|f| f.u)).unwrap_or(4.0);
            let temperature = a
                .temperature
                .or_else(|| file.as_ref().and_then(|f| f.temperature))
                .unwrap_or(0.4);
            let q_grid = a
                .q_grid
                .or_else(|| file.as_ref().and_then(|f| f.q_grid.clone()))
                .unwrap_or_else(|| "1e-3,3e-3,1e-2,3e-2,1e-1".into());
            let op = a.op.or_else(|| file.as_ref().and_then(|f| f.op.clone()));
            let (params, out) = common.into_params(4)?;
            run_qscan(&QscanConfig {
                params,
                u,
                temperature,
                q_values: parse_grid(&q_grid)?,
                op: parse_staggered(op.as_deref(), StaggeredKind::Plus)?,
                out,
            })
        }
        Command::Bounds(a) => {
            let file: Option<BoundsArgs> = load_file_section(args.config.as_ref(), "bounds")?;
            let brute_force =
                a.brute_force || file.as_ref().map(|f| f.brute_force).unwrap_or(false);
            let weights = a
                .weights
                .or_else(|| file.as_ref().and_then(|f| f.weights.clone()));
            let n_particles = a
                .n_particles
                .or_else(|| file.as_ref().and_then(|f| f.n_particles));
            let op = a.op.or_else(|| file.as_ref().and_then(|f| f.op.clone()));
            let common = a.common.merge(file.as_ref().map(|f| &f.common));
            let (params, out) = common.into_params(8)?;
            run_bounds(&BoundsConfig {
                weights: weights.map(|w| parse_grid(&w)).transpose()?.unwrap_or_default(),
                sites: params.sites,
                op: parse_staggered(op.as_deref(), StaggeredKind::Plus)?,
                n_particles,
                brute_force,
                out,
            })
        }
    }
}

fn main() -> ExitCode {
    let args = CliArgs::parse();
    match dispatch(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
