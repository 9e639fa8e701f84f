//! Command-line driver: parameter scans, protocol traces, quench-amplitude
//! studies, and bound tables, emitted as deterministic CSV with a JSON
//! metadata sidecar per run.
//!
//! Every CSV starts with a `# schema=<name>` line followed by the column
//! header row; floats are printed with 12 significant digits so identical
//! configs produce byte-identical tables.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_fixed_n, bound_generic, brute_force_bound_fixed_n,
    brute_force_bound_generic, certify_depth};
use crate::fock::{build_sector_basis, SectorBasis, SparseOperator};
use crate::kernel::{kappa_step, qfi_cutoff_series, qfi_from_quench};
use crate::model::{build_hubbard, staggered_operator, staggered_weights, Boundary,
    HubbardParams, StaggeredKind};
use crate::protocol::{xi_symmetrized, QuenchPropagator};
use crate::spectral::{diagonalize, qfi_exact, thermal_state, Spectrum, TimeGrid, TimeSeries};
use crate::{Error, Result};

/// Operator selection for scans: one staggered operator or the max of both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpChoice {
    Plus,
    Minus,
    Max,
}

impl OpChoice {
    fn kinds(self) -> Vec<StaggeredKind> {
        match self {
            OpChoice::Plus => vec![StaggeredKind::Plus],
            OpChoice::Minus => vec![StaggeredKind::Minus],
            OpChoice::Max => vec![StaggeredKind::Plus, StaggeredKind::Minus],
        }
    }
}

/// Rule fixing the trailing end of the simulation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "lowercase")]
pub enum TmaxRule {
    /// `t_max = c / (pi T)`; the kernel tail is then `~e^{-c}`.
    PiT(f64),
    /// Fixed `t_max` in units of `1/J`.
    Fixed(f64),
}

impl Default for TmaxRule {
    fn default() -> Self {
        TmaxRule::PiT(14.0)
    }
}

impl TmaxRule {
    pub fn grid(&self, dt: f64, temperature: f64) -> TimeGrid<f64> {
        match *self {
            TmaxRule::PiT(c) => TimeGrid::for_temperature(dt, temperature, c),
            TmaxRule::Fixed(t_max) => TimeGrid::to(dt, t_max),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if let Some(v) = s.strip_prefix("pit:") {
            let c: f64 = v.parse().map_err(|_| Error::Config(format!("bad tmax rule {s}")))?;
            if c <= 0.0 {
                return Err(Error::Config("tmax rule constant must be positive".into()));
            }
            return Ok(TmaxRule::PiT(c));
        }
        if let Some(v) = s.strip_prefix("fixed:") {
            let t: f64 = v.parse().map_err(|_| Error::Config(format!("bad tmax rule {s}")))?;
            if t <= 0.0 {
                return Err(Error::Config("fixed tmax must be positive".into()));
            }
            return Ok(TmaxRule::Fixed(t));
        }
        Err(Error::Config(format!(
            "tmax rule must be pit:<c> or fixed:<t>, got {s}"
        )))
    }
}

/// Shared model/protocol parameters of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunParams {
    pub sites: usize,
    pub boundary: Boundary,
    pub n_up: usize,
    pub n_down: usize,
    pub q: f64,
    pub dt: f64,
    pub tmax_rule: TmaxRule,
    pub jobs: usize,
    pub seed: u64,
}

impl RunParams {
    pub fn defaults(sites: usize) -> Self {
        RunParams {
            sites,
            boundary: Boundary::Open,
            n_up: sites / 2,
            n_down: sites / 2,
            q: 1e-3,
            dt: 0.02,
            tmax_rule: TmaxRule::default(),
            jobs: 0,
            seed: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::Config("need at least 2 sites".into()));
        }
        if self.n_up > self.sites || self.n_down > self.sites {
            return Err(Error::Config("sector occupations exceed the chain length".into()));
        }
        if self.q == 0.0 {
            return Err(Error::Config("quench amplitude must be nonzero".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return Err(Error::Config(format!(
                "dt must lie in (0, 0.1], got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    pub params: RunParams,
    pub u_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub op: OpChoice,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceConfig {
    pub params: RunParams,
    pub u: f64,
    pub t_values: Vec<f64>,
    pub op: StaggeredKind,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QscanConfig {
    pub params: RunParams,
    pub u: f64,
    pub temperature: f64,
    pub q_values: Vec<f64>,
    pub op: StaggeredKind,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsConfig {
    /// Explicit weights; when empty, the staggered weights of `sites` sites
    /// with the chosen operator kind are used.
    pub weights: Vec<f64>,
    pub sites: usize,
    pub op: StaggeredKind,
    /// Total particle number for the fixed-N family (half filling default).
    pub n_particles: Option<usize>,
    pub brute_force: bool,
    pub out: PathBuf,
}

/// Format a float with 12 significant digits (fixed across platforms).
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    format!("{v:.11e}")
}

fn write_csv(path: &Path, schema: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# schema={schema}\n"));
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

fn write_meta<C: Serialize>(path: &Path, schema: &str, config: &C, wall_time_s: f64) -> Result<()> {
    let meta = serde_json::json!({
        "schema": schema,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "wall_time_s": wall_time_s,
    });
    let mut f = std::fs::File::create(path)?;
    f.write_all(serde_json::to_string_pretty(&meta).expect("serializable").as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Hamiltonian, spectrum, and staggered operators of one interaction value.
struct SectorComputation {
    basis: Arc<SectorBasis>,
    h0: SparseOperator<f64>,
    spectrum: Spectrum<f64>,
}

impl SectorComputation {
    fn new(params: &RunParams, u: f64) -> Result<Self> {
        let basis = build_sector_basis(params.sites, params.n_up, params.n_down)?;
        let hp = HubbardParams::new(params.sites, u, params.boundary)
            .map_err(|e| Error::Config(e.to_string()))?;
        let h0 = build_hubbard(&hp, &basis)?;
        let spectrum = diagonalize(&h0)?;
        Ok(SectorComputation { basis, h0, spectrum })
    }

    fn operator(&self, kind: StaggeredKind, sites: usize) -> Result<SparseOperator<f64>> {
        staggered_operator(kind, sites, &self.basis)
    }
}

#[derive(Debug, Clone)]
struct ScanRow {
    u: f64,
    temperature: f64,
    fq_plus: Option<f64>,
    fq_minus: Option<f64>,
    fq_max: f64,
    fq_exact: f64,
    depth: usize,
}

fn scan_one_u(cfg: &ScanConfig, u: f64) -> Result<Vec<ScanRow>> {
    let params = &cfg.params;
    let comp = SectorComputation::new(params, u)?;
    let kinds = cfg.op.kinds();
    let n_particles = params.n_up + params.n_down;
    let weights = staggered_weights::<f64>(StaggeredKind::Plus, params.sites);

    // per (kind, T) protocol values; propagators are prepared once per kind
    // and reused across temperatures
    let mut fq = vec![vec![0.0f64; cfg.t_grid.len()]; kinds.len()];
    let mut fq_ex = vec![vec![0.0f64; cfg.t_grid.len()]; kinds.len()];
    for (ki, &kind) in kinds.iter().enumerate() {
        let o = comp.operator(kind, params.sites)?;
        let plus = QuenchPropagator::prepare(&comp.h0, &comp.spectrum, &o, params.q, kind.label())?;
        let minus =
            QuenchPropagator::prepare(&comp.h0, &comp.spectrum, &o, -params.q, kind.label())?;
        for (ti, &temperature) in cfg.t_grid.iter().enumerate() {
            let state = thermal_state(&comp.spectrum, temperature)?;
            let grid = params.tmax_rule.grid(params.dt, temperature);
            let run_p = plus.run(&comp.spectrum, &state, &o, &grid)?;
            let run_m = minus.run(&comp.spectrum, &state, &o, &grid)?;
            let xi = xi_symmetrized(&run_p, &run_m)?;
            fq[ki][ti] = qfi_from_quench(&xi, temperature, grid.t_max())?.value;
            fq_ex[ki][ti] = qfi_exact(&comp.spectrum, &state, &o)?;
        }
    }

    let mut rows = Vec::with_capacity(cfg.t_grid.len());
    for (ti, &temperature) in cfg.t_grid.iter().enumerate() {
        let mut fq_plus = None;
        let mut fq_minus = None;
        for (ki, &kind) in kinds.iter().enumerate() {
            match kind {
                StaggeredKind::Plus => fq_plus = Some(fq[ki][ti]),
                StaggeredKind::Minus => fq_minus = Some(fq[ki][ti]),
            }
        }
        let fq_max = fq.iter().map(|v| v[ti]).fold(f64::NEG_INFINITY, f64::max);
        let fq_exact = fq_ex.iter().map(|v| v[ti]).fold(f64::NEG_INFINITY, f64::max);
        let cert = certify_depth(fq_max.max(0.0), &weights, Some(n_particles))?;
        rows.push(ScanRow {
            u,
            temperature,
            fq_plus,
            fq_minus,
            fq_max,
            fq_exact,
            depth: cert.depth,
        });
    }
    Ok(rows)
}

/// Grid scan over `(U, T)`: protocol and exact QFI per operator, the larger
/// value, both density normalizations, and the certified depth.
pub fn run_scan(cfg: &ScanConfig) -> Result<()> {
    cfg.params.validate()?;
    if cfg.u_grid.is_empty() || cfg.t_grid.is_empty() {
        return Err(Error::Config("U and T grids must be non-empty".into()));
    }
    if cfg.t_grid.iter().any(|&t| t <= 0.0) {
        return Err(Error::Config("temperatures must be positive".into()));
    }
    let start = Instant::now();
    ensure_out_dir(&cfg.out)?;
    let pool = thread_pool(cfg.params.jobs)?;
    let results: Vec<Result<Vec<ScanRow>>> = pool.install(|| {
        cfg.u_grid
            .par_iter()
            .map(|&u| scan_one_u(cfg, u))
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let sites = cfg.params.sites as f64;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.u),
                fmt_float(r.temperature),
                r.fq_plus.map(fmt_float).unwrap_or_default(),
                r.fq_minus.map(fmt_float).unwrap_or_default(),
                fmt_float(r.fq_max),
                fmt_float(r.fq_exact),
                r.depth.to_string(),
                fmt_float(r.fq_max / sites),
                fmt_float(r.fq_max / (2.0 * sites)),
            ]
        })
        .collect();
    write_csv(
        &cfg.out.join("scan.csv"),
        "qfi-quench/scan.v1",
        &[
            "U_over_J",
            "T_over_J",
            "fq_plus",
            "fq_minus",
            "fq_max",
            "fq_exact",
            "depth",
            "fq_density_per_site",
            "fq_density_per_mode",
        ],
        &table,
    )?;
    write_meta(
        &cfg.out.join("scan.meta.json"),
        "qfi-quench/scan.meta.v1",
        cfg,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(())
}

/// Protocol trace at one interaction: `xi(t,T)`, `kappa(t,T)`,
/// `F_Q(t_cutoff)`, and the log residual against the exact value, with one
/// column per temperature on a shared grid.
pub fn run_trace(cfg: &TraceConfig) -> Result<()> {
    cfg.params.validate()?;
    if cfg.t_values.is_empty() {
        return Err(Error::Config("need at least one temperature".into()));
    }
    if cfg.t_values.iter().any(|&t| t <= 0.0) {
        return Err(Error::Config("temperatures must be positive".into()));
    }
    let start = Instant::now();
    ensure_out_dir(&cfg.out)?;
    let params = &cfg.params;
    // shared grid long enough for the lowest temperature
    let grid = cfg
        .t_values
        .iter()
        .map(|&t| params.tmax_rule.grid(params.dt, t))
        .max_by_key(|g| g.len)
        .expect("non-empty");
    let comp = SectorComputation::new(params, cfg.u)?;
    let o = comp.operator(cfg.op, params.sites)?;
    let plus = QuenchPropagator::prepare(&comp.h0, &comp.spectrum, &o, params.q, cfg.op.label())?;
    let minus = QuenchPropagator::prepare(&comp.h0, &comp.spectrum, &o, -params.q, cfg.op.label())?;

    let mut xi_cols = Vec::new();
    let mut kappa_cols = Vec::new();
    let mut fq_cols = Vec::new();
    let mut resid_cols = Vec::new();
    for &temperature in &cfg.t_values {
        let state = thermal_state(&comp.spectrum, temperature)?;
        let run_p = plus.run(&comp.spectrum, &state, &o, &grid)?;
        let run_m = minus.run(&comp.spectrum, &state, &o, &grid)?;
        let xi = xi_symmetrized(&run_p, &run_m)?;
        let kappa: Vec<f64> = (0..grid.len)
            .map(|i| {
                if i == 0 {
                    f64::NAN
                } else {
                    kappa_step(grid.dt * i as f64, temperature).unwrap_or(f64::NAN)
                }
            })
            .collect();
        let partial = qfi_cutoff_series(&xi, temperature)?;
        let f_exact = qfi_exact(&comp.spectrum, &state, &o)?;
        let resid: Vec<f64> = partial
            .values
            .iter()
            .map(|&f| (f_exact - f).abs().max(1e-300).log10())
            .collect();
        xi_cols.push(xi.values);
        kappa_cols.push(kappa);
        fq_cols.push(partial.values);
        resid_cols.push(resid);
    }

    let t_label = |t: f64| format!("T{t}");
    let mut columns = vec!["t".to_string()];
    columns.extend(cfg.t_values.iter().map(|&t| t_label(t)));
    let col_refs: Vec<&str> = columns.iter().map(String::as_str).collect();

    let emit = |name: &str, schema: &str, dt_scale: f64, cols: &[Vec<f64>]| -> Result<()> {
        let n = cols.iter().map(Vec::len).min().unwrap_or(0);
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                let mut row = vec![fmt_float(i as f64 * params.dt * dt_scale)];
                row.extend(cols.iter().map(|c| fmt_float(c[i])));
                row
            })
            .collect();
        write_csv(&cfg.out.join(name), schema, &col_refs, &rows)
    };
    emit("trace_xi.csv", "qfi-quench/trace-xi.v1", 1.0, &xi_cols)?;
    emit("trace_kappa.csv", "qfi-quench/trace-kappa.v1", 1.0, &kappa_cols)?;
    emit("trace_fq_cutoff.csv", "qfi-quench/trace-fq.v1", 2.0, &fq_cols)?;
    emit("trace_residual.csv", "qfi-quench/trace-residual.v1", 2.0, &resid_cols)?;
    write_meta(
        &cfg.out.join("trace.meta.json"),
        "qfi-quench/trace.meta.v1",
        cfg,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(())
}

/// Error of the plain and symmetrized protocol estimators against the exact
/// QFI as a function of the quench amplitude, with log-log slopes.
pub fn run_qscan(cfg: &QscanConfig) -> Result<()> {
    cfg.params.validate()?;
    if cfg.q_values.is_empty() {
        return Err(Error::Config("need at least one quench amplitude".into()));
    }
    if cfg.q_values.iter().any(|&q| q <= 0.0) {
        return Err(Error::Config("quench amplitudes must be positive".into()));
    }
    let start = Instant::now();
    ensure_out_dir(&cfg.out)?;
    let mut qs: Vec<f64> = cfg.q_values.clone();
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    qs.dedup();
    if qs.len() != cfg.q_values.len() {
        eprintln!(
            "warning: {} duplicate quench amplitudes removed",
            cfg.q_values.len() - qs.len()
        );
    }
    let params = &cfg.params;
    let comp = SectorComputation::new(params, cfg.u)?;
    let o = comp.operator(cfg.op, params.sites)?;
    let state = thermal_state(&comp.spectrum, cfg.temperature)?;
    let grid = params.tmax_rule.grid(params.dt, cfg.temperature);
    let f_exact = qfi_exact(&comp.spectrum, &state, &o)?;

    let mut rows = Vec::new();
    let mut log_q = Vec::new();
    let mut log_plain = Vec::new();
    let mut log_sym = Vec::new();
    for &q in &qs {
        let run_p = QuenchPropagator::prepare(&comp.h0, &comp.spectrum, &o, q, cfg.op.label())?
            .run(&comp.spectrum, &state, &o, &grid)?;
        let run_m = QuenchPropagator::prepare(&comp.h0, &comp.spectrum, &o, -q, cfg.op.label())?
            .run(&comp.spectrum, &state, &o, &grid)?;
        let plain = TimeSeries::new(
            0.0,
            grid.dt,
            run_p.delta_o.values.iter().map(|v| v / q).collect(),
        );
        let f_plain = qfi_from_quench(&plain, cfg.temperature, grid.t_max())?.value;
        let xi = xi_symmetrized(&run_p, &run_m)?;
        let f_sym = qfi_from_quench(&xi, cfg.temperature, grid.t_max())?.value;
        let err_plain = ((f_plain - f_exact) / f_exact).abs();
        let err_sym = ((f_sym - f_exact) / f_exact).abs();
        rows.push(vec![fmt_float(q), fmt_float(err_plain), fmt_float(err_sym)]);
        log_q.push(q.ln());
        log_plain.push(err_plain.max(1e-300).ln());
        log_sym.push(err_sym.max(1e-300).ln());
    }
    let slope = |ys: &[f64]| -> f64 {
        if log_q.len() < 2 {
            return f64::NAN;
        }
        let n = log_q.len() as f64;
        let sx: f64 = log_q.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = log_q.iter().map(|x| x * x).sum();
        let sxy: f64 = log_q.iter().zip(ys).map(|(x, y)| x * y).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    write_csv(
        &cfg.out.join("qscan.csv"),
        "qfi-quench/qscan.v1",
        &["q", "rel_err_plain", "rel_err_symmetrized"],
        &rows,
    )?;
    let meta_extra = serde_json::json!({
        "schema": "qfi-quench/qscan.meta.v1",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "fq_exact": f_exact,
        "loglog_slope_plain": slope(&log_plain),
        "loglog_slope_symmetrized": slope(&log_sym),
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let mut f = std::fs::File::create(cfg.out.join("qscan.meta.json"))?;
    f.write_all(serde_json::to_string_pretty(&meta_extra).expect("serializable").as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

fn format_partition(blocks: &[Vec<usize>]) -> String {
    blocks
        .iter()
        .map(|b| b.iter().map(usize::to_string).collect::<Vec<_>>().join("+"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Threshold table: per `k`, the generic and fixed-N bounds with closed
/// forms, the achieving partition/occupations, and optionally the
/// brute-force maxima (|M| <= 8).
pub fn run_bounds(cfg: &BoundsConfig) -> Result<()> {
    let start = Instant::now();
    let weights = if cfg.weights.is_empty() {
        if cfg.sites < 1 {
            return Err(Error::Config("need sites >= 1 or explicit weights".into()));
        }
        staggered_weights::<f64>(cfg.op, cfg.sites)
    } else {
        cfg.weights.clone()
    };
    let n_modes = weights.len();
    let n_particles = cfg.n_particles.unwrap_or(n_modes / 2);
    if n_particles > n_modes {
        return Err(Error::Config(format!(
            "{n_particles} particles exceed {n_modes} modes"
        )));
    }
    if cfg.brute_force && n_modes > 8 {
        return Err(Error::Config(
            "brute force is limited to 8 modes".into(),
        ));
    }
    ensure_out_dir(&cfg.out)?;
    let mut rows = Vec::new();
    for k in 1..=n_modes {
        let g = bound_generic(&weights, k);
        let f = bound_fixed_n(&weights, k, n_particles)?;
        let mut row = vec![
            k.to_string(),
            fmt_float(g.value),
            fmt_float(g.closed_form),
            fmt_float(f.value),
            fmt_float(f.closed_form),
            format_partition(&f.partition.blocks),
            f.occupations
                .as_ref()
                .map(|o| o.iter().map(usize::to_string).collect::<Vec<_>>().join(";"))
                .unwrap_or_default(),
        ];
        if cfg.brute_force {
            row.push(fmt_float(brute_force_bound_generic(&weights, k)));
            row.push(fmt_float(brute_force_bound_fixed_n(&weights, k, n_particles)));
        }
        rows.push(row);
    }
    let mut columns = vec![
        "k",
        "generic_bound",
        "generic_closed_form",
        "fixed_n_bound",
        "fixed_n_closed_form",
        "fixed_n_partition",
        "fixed_n_occupations",
    ];
    if cfg.brute_force {
        columns.push("brute_force_generic");
        columns.push("brute_force_fixed_n");
    }
    write_csv(&cfg.out.join("bounds.csv"), "qfi-quench/bounds.v1", &columns, &rows)?;
    write_meta(
        &cfg.out.join("bounds.meta.json"),
        "qfi-quench/bounds.meta.v1",
        cfg,
        start.elapsed().as_secs_f64(),
    )?;
    Ok(())
}

/// Parse `lo:hi:n` as a uniform grid or a comma list of values.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("grid must be lo:hi:n, got {s}")));
        }
        let lo: f64 = parts[0].parse().map_err(|_| Error::Config(format!("bad grid {s}")))?;
        let hi: f64 = parts[1].parse().map_err(|_| Error::Config(format!("bad grid {s}")))?;
        let n: usize = parts[2].parse().map_err(|_| Error::Config(format!("bad grid {s}")))?;
        if n == 0 {
            return Err(Error::Config("grid needs at least one point".into()));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let step = (hi - lo) / (n - 1) as f64;
        return Ok((0..n).map(|i| lo + step * i as f64).collect());
    }
    s.split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad grid value {p}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1,2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn tmax_rule_parsing() {
        assert_eq!(TmaxRule::parse("pit:14").unwrap(), TmaxRule::PiT(14.0));
        assert_eq!(TmaxRule::parse("fixed:30").unwrap(), TmaxRule::Fixed(30.0));
        assert!(TmaxRule::parse("pit:-1").is_err());
        assert!(TmaxRule::parse("whenever").is_err());
    }

    #[test]
    fn float_formatting_is_stable() {
        assert_eq!(fmt_float(1.0), "1.00000000000e0");
        assert_eq!(fmt_float(-0.25), "-2.50000000000e-1");
        assert_eq!(fmt_float(f64::NAN), "nan");
    }

    #[test]
    fn run_params_validation() {
        let mut p = RunParams::defaults(4);
        p.validate().unwrap();
        p.q = 0.0;
        assert!(p.validate().is_err());
        let mut p = RunParams::defaults(4);
        p.dt = 0.5;
        assert!(p.validate().is_err());
        let mut p = RunParams::defaults(1);
        p.sites = 1;
        assert!(p.validate().is_err());
    }
}
