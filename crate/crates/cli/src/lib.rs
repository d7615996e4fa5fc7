//! The `ctxldp` command line.
//!
//! Exit codes: 0 on success, 1 when a check fails or a request is
//! infeasible, 2 on usage or input-parse errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use ctxldp::audit::verify_eldp;
use ctxldp::ingest::{geo_partition, grid_empirical, load_checkins, parse_checkins, Grid, SYNTHETIC_CHECKINS};
use ctxldp::lowerbound::{
    bs_chi_bound, bs_packing, check_bs_chi_bound, check_claim1, chi_square, chi_square_sampled, hl_packing,
    sample_complexity_floor, ChiSquareReport, PackingFamily, ENUMERATION_CAP_LOG2,
};
use ctxldp::mechanisms::{
    binary_optimal_channel, bsldp_hr_channel, hlldp_hr_channel, mangat, warner, BinaryMechanismParams,
};
use ctxldp::sim::{mean_std, run_settings, run_sweep, summarize, write_csv, ExperimentConfig, Pipeline, Setting};
use ctxldp::{Budget, Channel, Partition, PrivacyMatrix, SensitiveSet};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Lib(#[from] ctxldp::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
            CliError::Lib(e) => match e {
                ctxldp::Error::Json(_) | ctxldp::Error::Io { .. } => 2,
                _ => 1,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "ctxldp",
    version,
    about = "Context-aware LDP mechanisms, audits and experiments"
)]
pub struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a channel against a privacy matrix.
    Audit(AuditArgs),
    /// Run a synthetic estimation sweep from a JSON config.
    Synth(SynthArgs),
    /// Estimate a gridded check-in distribution under block models.
    Geo(GeoArgs),
    /// Evaluate packing-family diagnostics for a model.
    Lowerbound(LowerboundArgs),
    /// Emit a mechanism's channel as JSON.
    Channel(ChannelArgs),
}

#[derive(Args, Debug, Serialize)]
struct AuditArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    eps_matrix: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct GeoArgs {
    /// Tab-separated check-ins; the bundled synthetic corpus if omitted.
    #[arg(long)]
    checkins: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [5, 25, 25])]
    m1: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [7, 35, 70])]
    m2: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Draws per trial; defaults to the number of in-box records.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0.2)]
    cell: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum LbModel {
    Hl,
    Bs,
}

#[derive(Args, Debug, Serialize)]
struct LowerboundArgs {
    #[arg(long, value_enum)]
    model: LbModel,
    /// Domain size (high-low model).
    #[arg(long)]
    k: Option<usize>,
    /// Number of sensitive symbols (high-low model).
    #[arg(long)]
    s: Option<usize>,
    /// Block sizes (block model).
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    eps: f64,
    /// Sample this many members instead of enumerating.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ChannelKind {
    Warner,
    Mangat,
    Binary,
    Hl,
    Bs,
}

#[derive(Args, Debug, Serialize)]
struct ChannelArgs {
    #[arg(long, value_enum)]
    kind: ChannelKind,
    #[arg(long)]
    eps: Option<f64>,
    /// Budget from symbol 0 to symbol 1 (binary kind; "inf" allowed).
    #[arg(long)]
    eps12: Option<String>,
    /// Budget from symbol 1 to symbol 0 (binary kind; "inf" allowed).
    #[arg(long)]
    eps21: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Also write the intended privacy matrix here.
    #[arg(long)]
    matrix_out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    let (body, ok) = match &cli.command {
        Command::Audit(a) => cmd_audit(cli, a)?,
        Command::Synth(a) => cmd_synth(cli, a)?,
        Command::Geo(a) => cmd_geo(cli, a)?,
        Command::Lowerbound(a) => cmd_lowerbound(cli, a)?,
        Command::Channel(a) => cmd_channel(cli, a)?,
    };
    match &cli.out {
        Some(path) => write_file(path, body.as_bytes())?,
        None => stdout
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Failed(format!("writing output: {e}")))?,
    }
    Ok(if ok { 0 } else { 1 })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(ctxldp::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn csv_string<T: Serialize>(config: &serde_json::Value, rows: &[T]) -> CliResult<String> {
    let mut buf = format!("# config: {config}\n").into_bytes();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn cmd_audit(cli: &Cli, a: &AuditArgs) -> CliResult<(String, bool)> {
    let q: Channel = read_json(&a.channel)?;
    let e: PrivacyMatrix = read_json(&a.eps_matrix)?;
    let report = verify_eldp(&q, &e).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = json!({ "command": "audit", "args": a });
    let body = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&json!({ "config": config, "report": report }))?,
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                ok: bool,
                slack: String,
                worst_x: Option<usize>,
                worst_xp: Option<usize>,
                worst_y: Option<usize>,
            }
            let w = report.worst_pair;
            csv_string(
                &config,
                &[Row {
                    ok: report.ok,
                    slack: fmt_extended(report.slack),
                    worst_x: w.map(|w| w.0),
                    worst_xp: w.map(|w| w.1),
                    worst_y: w.map(|w| w.2),
                }],
            )?
        }
    };
    Ok((body, report.ok))
}

fn fmt_extended(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> CliResult<(String, bool)> {
    let mut config: ExperimentConfig = read_json(&a.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    let rows = run_sweep(&config)?;
    let summary = summarize(&rows, config.project);
    let echo = json!({ "command": "synth", "experiment": config });
    let body = match cli.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&json!({ "config": echo, "rows": rows, "summary": summary }))?,
        Format::Csv => {
            let out = cli.out.clone().or_else(|| config.output.clone());
            if let Some(path) = &out {
                let mut side = path.clone().into_os_string();
                side.push(".summary.json");
                write_file(
                    Path::new(&side),
                    to_json(&json!({ "config": echo, "summary": summary }))?.as_bytes(),
                )?;
            }
            let text = csv_string(&echo, &rows)?;
            if cli.out.is_none() {
                if let Some(path) = &config.output {
                    write_file(path, text.as_bytes())?;
                    return Ok((String::new(), true));
                }
            }
            text
        }
    };
    Ok((body, true))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeoSummary {
    pub setting: String,
    pub m1: usize,
    pub m2: usize,
    pub blocks: usize,
    pub sum_sq_sizes: usize,
    pub n: usize,
    pub reps: usize,
    pub mean_tv: f64,
    pub std_tv: f64,
    pub mean_tv_proj: f64,
    pub std_tv_proj: f64,
}

fn cmd_geo(cli: &Cli, a: &GeoArgs) -> CliResult<(String, bool)> {
    if a.m1.iter().chain(&a.m2).any(|&m| m == 0) {
        return Err(CliError::Usage("--m1 and --m2 entries must be at least 1".into()));
    }
    if a.m1.len() != a.m2.len() {
        return Err(CliError::Usage("--m1 and --m2 need the same number of entries".into()));
    }
    if a.reps == 0 || a.n == Some(0) {
        return Err(CliError::Usage("--reps and --n must be at least 1".into()));
    }
    if !(a.eps.is_finite() && a.eps > 0.0) {
        return Err(CliError::Usage(format!(
            "--eps must be positive and finite, got {}",
            a.eps
        )));
    }
    let load = match &a.checkins {
        Some(path) => load_checkins(path)?,
        None => parse_checkins(SYNTHETIC_CHECKINS.as_bytes())?,
    };
    let grid = Grid::new(25.0, 50.0, -130.0, -60.0, a.cell).map_err(|e| CliError::Usage(e.to_string()))?;
    let (p, occupancy) = grid_empirical(&load.records, &grid)?;
    let n = a.n.unwrap_or(occupancy.kept);

    let mut pairs = vec![(1, 1)];
    pairs.extend(
        a.m1.iter()
            .copied()
            .zip(a.m2.iter().copied())
            .filter(|&pair| pair != (1, 1)),
    );
    let mut settings = Vec::new();
    let mut partitions = Vec::new();
    for &(m1, m2) in &pairs {
        let part = geo_partition(&grid, m1, m2).map_err(|e| CliError::Usage(e.to_string()))?;
        let (model, s_or_m) = if (m1, m2) == (1, 1) {
            ("ldp", 1)
        } else {
            ("bsldp", part.num_blocks())
        };
        settings.push(Setting {
            model: model.into(),
            s_or_m,
            pipeline: Pipeline::block(&part, a.eps)?,
        });
        partitions.push(part);
    }
    let seed = cli.seed.unwrap_or(0);
    let rows = run_settings(&p, &settings, a.eps, &[n], a.reps, seed)?;
    let summary: Vec<GeoSummary> = pairs
        .iter()
        .zip(&partitions)
        .enumerate()
        .map(|(i, (&(m1, m2), part))| {
            let tv: Vec<f64> = rows.iter().filter(|r| r.setting == i).map(|r| r.tv).collect();
            let tv_proj: Vec<f64> = rows.iter().filter(|r| r.setting == i).map(|r| r.tv_proj).collect();
            let (mean_tv, std_tv) = mean_std(&tv);
            let (mean_tv_proj, std_tv_proj) = mean_std(&tv_proj);
            GeoSummary {
                setting: settings[i].model.clone(),
                m1,
                m2,
                blocks: part.num_blocks(),
                sum_sq_sizes: part.sum_sq_sizes(),
                n,
                reps: a.reps,
                mean_tv,
                std_tv,
                mean_tv_proj,
                std_tv_proj,
            }
        })
        .collect();
    let echo = json!({
        "command": "geo",
        "args": a,
        "seed": seed,
        "grid": grid.descriptor(None),
        "records": { "lines": load.lines, "malformed": load.malformed, "kept": occupancy.kept,
                     "dropped": occupancy.dropped, "occupied_cells": occupancy.counts.len() },
    });
    let body = match cli.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&json!({ "config": echo, "summary": summary }))?,
        Format::Csv => csv_string(&echo, &summary)?,
    };
    Ok((body, true))
}

#[derive(Serialize)]
struct FamilySummary {
    bits: usize,
    log2_size: f64,
    c_alpha_log2: f64,
    rejected: f64,
}

#[derive(Serialize)]
struct ChiSummary {
    value: f64,
    members: u64,
    rejected: u64,
    std_err: Option<f64>,
    unreachable_mass: bool,
    bound: f64,
    slack: f64,
}

fn chi_for(q: &Channel, fam: &PackingFamily, samples: Option<usize>, seed: u64) -> CliResult<ChiSquareReport> {
    Ok(match samples {
        Some(n) => chi_square_sampled(q, fam, n, seed)?,
        None if fam.bits() as u32 > ENUMERATION_CAP_LOG2 => {
            return Err(CliError::Failed(format!(
                "family has 2^{} members; pass --samples to estimate by sampling",
                fam.bits()
            )))
        }
        None => chi_square(q, fam)?,
    })
}

fn cmd_lowerbound(cli: &Cli, a: &LowerboundArgs) -> CliResult<(String, bool)> {
    let seed = cli.seed.unwrap_or(0);
    let (family, chi, check, bound, ok) = match a.model {
        LbModel::Hl => {
            let (k, s) = match (a.k, a.s) {
                (Some(k), Some(s)) => (k, s),
                _ => return Err(CliError::Usage("the hl model needs --k and --s".into())),
            };
            let set = SensitiveSet::new(k, s).map_err(|e| CliError::Usage(e.to_string()))?;
            let fam = hl_packing(&set, a.alpha).map_err(infeasible)?;
            let q = hlldp_hr_channel(&set, a.eps)?;
            let claim = check_claim1(&q, s, a.eps)?;
            let report = chi_for(&q, &fam, a.samples, seed)?;
            // Holds for every channel in the class, not just this one.
            let bound = 4.0 * a.alpha * a.alpha / k as f64 * claim.bound;
            let ok = claim.ok && report.value <= bound;
            (
                fam,
                report,
                serde_json::to_value(&claim).map_err(ctxldp::Error::from)?,
                bound,
                ok,
            )
        }
        LbModel::Bs => {
            if a.sizes.is_empty() {
                return Err(CliError::Usage("the bs model needs --sizes".into()));
            }
            let part = Partition::from_sizes(&a.sizes).map_err(|e| CliError::Usage(e.to_string()))?;
            let fam = bs_packing(&part, a.alpha).map_err(infeasible)?;
            let q = bsldp_hr_channel(&part, a.eps)?;
            let bound = bs_chi_bound(&part, a.alpha, a.eps);
            let report = chi_for(&q, &fam, a.samples, seed)?;
            let check = match a.samples {
                None => serde_json::to_value(check_bs_chi_bound(&q, &part, a.alpha, a.eps)?),
                Some(_) => serde_json::to_value(json!({ "chi": report.value, "bound": bound })),
            }
            .map_err(ctxldp::Error::from)?;
            let ok = report.value <= bound;
            (fam, report, check, bound, ok)
        }
    };
    let floor_at_bound = sample_complexity_floor(&family, bound).ok();
    let floor_at_channel = sample_complexity_floor(&family, chi.value).ok();
    let body = json!({
        "config": { "command": "lowerbound", "args": a, "seed": seed },
        "family": FamilySummary {
            bits: family.bits(),
            log2_size: family.log2_size(),
            c_alpha_log2: family.c_alpha_log2(),
            rejected: family.rejected(),
        },
        "chi_square": ChiSummary {
            value: chi.value,
            members: chi.members,
            rejected: chi.rejected,
            std_err: chi.std_err,
            unreachable_mass: chi.unreachable_mass,
            bound,
            slack: bound - chi.value,
        },
        "check": check,
        "sample_floor_at_bound": floor_at_bound,
        "sample_floor_at_channel": floor_at_channel,
        "ok": ok,
    });
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&body)?,
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                model: LbModel,
                alpha: f64,
                eps: f64,
                chi: f64,
                bound: f64,
                ok: bool,
            }
            csv_string(
                &body["config"],
                &[Row {
                    model: a.model,
                    alpha: a.alpha,
                    eps: a.eps,
                    chi: chi.value,
                    bound,
                    ok,
                }],
            )?
        }
    };
    Ok((text, ok))
}

fn infeasible(e: ctxldp::Error) -> CliError {
    match e {
        ctxldp::Error::InfeasiblePacking(msg) => CliError::Failed(format!("infeasible packing: {msg}")),
        other => CliError::Usage(other.to_string()),
    }
}

fn parse_budget(text: &Option<String>, name: &str) -> CliResult<Budget> {
    let text = text
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("--{name} is required")))?;
    match text {
        "inf" | "infinity" => Ok(Budget::Unbounded),
        t => {
            let v: f64 = t
                .parse()
                .map_err(|_| CliError::Usage(format!("--{name}: not a number: {t}")))?;
            Budget::new(v).map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

fn cmd_channel(cli: &Cli, a: &ChannelArgs) -> CliResult<(String, bool)> {
    let need_eps = || a.eps.ok_or_else(|| CliError::Usage("--eps is required".into()));
    let (q, e) = match a.kind {
        ChannelKind::Warner => {
            let eps = need_eps()?;
            (warner(eps)?, PrivacyMatrix::uniform(2, eps)?)
        }
        ChannelKind::Mangat => {
            let eps = need_eps()?;
            let e = PrivacyMatrix::from_rows(vec![
                vec![Budget::ZERO, Budget::Unbounded],
                vec![Budget::Finite(eps), Budget::ZERO],
            ])?;
            (mangat(eps)?, e)
        }
        ChannelKind::Binary => {
            let e12 = parse_budget(&a.eps12, "eps12")?;
            let e21 = parse_budget(&a.eps21, "eps21")?;
            let e = PrivacyMatrix::from_rows(vec![vec![Budget::ZERO, e12], vec![e21, Budget::ZERO]])?;
            (binary_optimal_channel(BinaryMechanismParams::new(e12, e21)?)?, e)
        }
        ChannelKind::Hl => {
            let eps = need_eps()?;
            let (k, s) =
                a.k.zip(a.s)
                    .ok_or_else(|| CliError::Usage("the hl kind needs --k and --s".into()))?;
            let set = SensitiveSet::new(k, s)?;
            (hlldp_hr_channel(&set, eps)?, PrivacyMatrix::high_low(&set, eps)?)
        }
        ChannelKind::Bs => {
            let eps = need_eps()?;
            if a.sizes.is_empty() {
                return Err(CliError::Usage("the bs kind needs --sizes".into()));
            }
            let part = Partition::from_sizes(&a.sizes)?;
            (
                bsldp_hr_channel(&part, eps)?,
                PrivacyMatrix::block_structured(&part, eps)?,
            )
        }
    };
    if let Some(path) = &a.matrix_out {
        write_file(path, to_json(&e)?.as_bytes())?;
    }
    if cli.format == Some(Format::Csv) {
        return Err(CliError::Usage("the channel command only writes json".into()));
    }
    Ok((to_json(&q)?, true))
}
