//! Command-line front end: `bench`, `collect`, `analyze`, `simulate`, `profiles`.
//!
//! Settings resolve as command-line flag, then `--config` file, then built-in
//! default. The config file is TOML: top-level keys mirror the long flag names
//! (with `_` for `-`), and every table is a chip profile section.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::bench::{self, CancelToken, CollectOptions, CollectStatus, SweepConfig, SweepError};
use crate::device::{BackendSpec, Device, ProfileSet};
use crate::quality::{self, report, QualityError};
use crate::wire::{self, GetRandomResponse};

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DEVICE: i32 = 2;
    pub const ABORTED: i32 = 3;
    pub const QUALITY_FAIL: i32 = 4;
}

/// Largest request the GetRandom command is specified to accept.
pub const DEFAULT_REQUEST_SIZE: usize = 2048;

#[derive(Debug, Parser)]
#[command(
    name = "trngbench",
    version,
    about = "Benchmark and score TPM-style random number generators"
)]
pub struct Cli {
    /// TOML file with run defaults and chip profile overrides
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep request sizes and write per-size mean latency and throughput as CSV
    Bench(BenchArgs),
    /// Collect random bytes into a raw binary file
    Collect(CollectArgs),
    /// Run the entropy/chi-square/mean/Monte Carlo pi/serial correlation battery on a file
    Analyze(AnalyzeArgs),
    /// Push a raw hex command buffer through a device and decode the response
    Simulate(SimulateArgs),
    /// List the available chip profiles
    Profiles,
}

#[derive(Debug, Args, Default)]
pub struct SourceArgs {
    /// Profile name, `os`, or `file:<path>`
    #[arg(long)]
    pub backend: Option<String>,
    /// Generator seed for simulated chips
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skew simulated output: byte v drawn with weight 1 + bias*v
    #[arg(long, value_name = "EPSILON")]
    pub bias: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// CSV destination (standard output when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub min: Option<usize>,
    #[arg(long)]
    pub max: Option<usize>,
    #[arg(long)]
    pub step: Option<usize>,
    /// Calls per request size
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bytes to collect
    #[arg(long)]
    pub total: Option<u64>,
    /// Bytes asked for per call
    #[arg(long)]
    pub request_size: Option<usize>,
    /// Print the running average speed every N calls
    #[arg(long, value_name = "N")]
    pub progress_every: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub file: PathBuf,
    /// Also report this many contiguous equal-size pieces
    #[arg(long)]
    pub pieces: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Report destination (standard output when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Command buffer as hex; spaces and colons are ignored
    pub raw_hex: String,
    #[command(flatten)]
    pub source: SourceArgs,
}

/// Run settings read from `--config`.
#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    pub backend: Option<String>,
    pub seed: Option<u64>,
    pub bias: Option<f64>,
    pub out: Option<PathBuf>,
    pub total: Option<u64>,
    pub request_size: Option<usize>,
    pub progress_every: Option<u64>,
    pub min: Option<usize>,
    pub max: Option<usize>,
    pub step: Option<usize>,
    pub reps: Option<usize>,
    pub pieces: Option<usize>,
    pub format: Option<Format>,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: BackendSpec,
    pub seed: u64,
    pub bias: Option<f64>,
    pub out: Option<PathBuf>,
    pub request_size: usize,
    pub total: Option<u64>,
    pub progress_every: u64,
    pub sweep: SweepConfig,
    pub pieces: usize,
    pub format: Format,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: exit::USAGE,
            message: message.into(),
        }
    }

    fn device(message: impl Into<String>) -> Self {
        Self {
            code: exit::DEVICE,
            message: message.into(),
        }
    }
}

struct Context {
    file: FileConfig,
    profiles: ProfileSet,
}

impl Context {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut profiles = ProfileSet::builtin();
        let Some(path) = path else {
            return Ok(Self {
                file: FileConfig::default(),
                profiles,
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::usage(format!("malformed config {}: {e}", path.display())))?;
        let scalars: toml::Table = table
            .iter()
            .filter(|(_, v)| !v.is_table())
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let file: FileConfig = scalars
            .try_into()
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        profiles
            .load_table(&table)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        Ok(Self { file, profiles })
    }

    fn source(&self, args: &SourceArgs) -> Result<(BackendSpec, u64, Option<f64>), CliError> {
        let selector = args
            .backend
            .clone()
            .or_else(|| self.file.backend.clone())
            .ok_or_else(|| {
                CliError::usage(format!(
                    "no backend given; use --backend with one of: {}, os, file:<path>",
                    self.profiles.names().join(", ")
                ))
            })?;
        let backend: BackendSpec = selector.parse().map_err(CliError::usage)?;
        if let BackendSpec::Profile(name) = &backend {
            self.profiles.get(name).map_err(|_| {
                CliError::usage(format!(
                    "unknown backend `{name}`; valid backends: {}, os, file:<path>",
                    self.profiles.names().join(", ")
                ))
            })?;
        }
        let seed = args.seed.or(self.file.seed).unwrap_or(0);
        Ok((backend, seed, args.bias.or(self.file.bias)))
    }

    fn open(&self, backend: &BackendSpec, seed: u64, bias: Option<f64>) -> Result<Device, CliError> {
        Device::open(backend, &self.profiles, seed, bias).map_err(|e| CliError::device(e.to_string()))
    }

    fn base(&self, backend: BackendSpec, seed: u64, bias: Option<f64>) -> RunConfig {
        let d = SweepConfig::default();
        RunConfig {
            backend,
            seed,
            bias,
            out: self.file.out.clone(),
            request_size: self.file.request_size.unwrap_or(DEFAULT_REQUEST_SIZE),
            total: self.file.total,
            progress_every: self.file.progress_every.unwrap_or(100),
            sweep: SweepConfig {
                min_size: self.file.min.unwrap_or(d.min_size),
                max_size: self.file.max.unwrap_or(d.max_size),
                step: self.file.step.unwrap_or(d.step),
                repetitions: self.file.reps.unwrap_or(d.repetitions),
            },
            pieces: self.file.pieces.unwrap_or(1),
            format: self.file.format.unwrap_or_default(),
        }
    }
}

fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(|f| BufWriter::with_capacity(1 << 20, f))
        .map_err(|e| CliError::device(format!("cannot create {}: {e}", path.display())))
}

fn io_fail(e: io::Error) -> CliError {
    CliError::device(format!("write failed: {e}"))
}

pub fn cmd_bench(
    cfg: &RunConfig,
    device: &mut Device,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    cfg.sweep.validate().map_err(CliError::usage)?;
    let records = match bench::sweep(device, &cfg.sweep) {
        Ok(r) => r,
        Err(SweepError::Config(m)) => return Err(CliError::usage(m)),
        Err(e @ SweepError::Device { .. }) => return Err(CliError::device(e.to_string())),
    };
    let summary_sink: &mut dyn Write = match &cfg.out {
        Some(path) => {
            let mut f = create_output(path)?;
            bench::write_csv(&records, &mut f).map_err(io_fail)?;
            f.flush().map_err(io_fail)?;
            stdout
        }
        None => {
            bench::write_csv(&records, &mut *stdout).map_err(io_fail)?;
            stderr
        }
    };
    let peak = bench::peak(&records).expect("sweep yields at least one record");
    writeln!(
        summary_sink,
        "{}: {} request sizes, peak throughput {:.2} B/s at request size {} ({} bytes returned){}",
        device.describe(),
        records.len(),
        peak.throughput_bps,
        peak.request_size,
        peak.returned_size,
        if device.is_virtual_time() { ", virtual time" } else { "" }
    )
    .map_err(io_fail)?;
    Ok(exit::SUCCESS)
}

pub fn cmd_collect(
    cfg: &RunConfig,
    device: &mut Device,
    cancel: &CancelToken,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    let total = cfg.total.ok_or_else(|| CliError::usage("collect needs --total"))?;
    let out = cfg.out.as_ref().ok_or_else(|| CliError::usage("collect needs --out"))?;
    if total < 1 {
        return Err(CliError::usage("--total must be at least 1"));
    }
    if cfg.request_size < 1 {
        return Err(CliError::usage("--request-size must be at least 1"));
    }
    if let Some(cap) = device.max_request().filter(|&cap| cap < cfg.request_size) {
        let _ = writeln!(
            stderr,
            "warning: {} returns at most {cap} bytes per call; requests for {} bytes will be truncated \
             and only the bytes the device reports are kept",
            device.describe(),
            cfg.request_size
        );
    }
    let sink = create_output(out)?;
    let opts = CollectOptions {
        total,
        request_size: cfg.request_size,
        progress_every: cfg.progress_every.max(1),
    };
    let result = bench::collect(
        device,
        &opts,
        sink,
        |p| {
            let _ = writeln!(
                stderr,
                "collected {} / {} bytes, average speed {:.2} B/s",
                p.bytes_written, p.total, p.mean_throughput_bps
            );
        },
        cancel,
    );
    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            return Err(CliError::device(format!(
                "collection stopped after writing {} bytes to {}: {e}",
                e.bytes_written(),
                out.display()
            )))
        }
    };
    let status = match summary.status {
        CollectStatus::Completed => "completed",
        CollectStatus::Aborted => "aborted",
    };
    writeln!(
        stdout,
        "{status}: {} of {total} bytes written to {} in {} calls ({} truncated), average speed {:.2} B/s",
        summary.bytes_written,
        out.display(),
        summary.calls,
        summary.truncated_calls,
        summary.mean_throughput_bps
    )
    .map_err(io_fail)?;
    Ok(match summary.status {
        CollectStatus::Completed => exit::SUCCESS,
        CollectStatus::Aborted => exit::ABORTED,
    })
}

pub fn cmd_analyze(cfg: &RunConfig, file: &Path, stdout: &mut dyn Write) -> Result<i32, CliError> {
    if cfg.pieces < 1 {
        return Err(CliError::usage("--pieces must be at least 1"));
    }
    let analysis = quality::analyze_file(file, cfg.pieces).map_err(|e| match e {
        QualityError::Io { .. } => CliError::device(e.to_string()),
        other => CliError::usage(format!("{}: {other}", file.display())),
    })?;
    let mut blocks = vec![(report::Piece::Whole, &analysis.whole)];
    if cfg.pieces > 1 {
        blocks.extend(
            analysis
                .pieces
                .iter()
                .enumerate()
                .map(|(i, r)| (report::Piece::Segment(i + 1), r)),
        );
    }
    let mut text = String::new();
    match cfg.format {
        Format::Text => {
            for (i, (piece, r)) in blocks.iter().enumerate() {
                if i > 0 {
                    text.push('\n');
                }
                text.push_str(&report::render_text(r, *piece, cfg.pieces));
            }
        }
        Format::Csv => {
            text.push_str(report::CSV_HEADER);
            text.push('\n');
            for (piece, r) in &blocks {
                text.push_str(&report::render_csv_rows(r, *piece));
            }
        }
    }
    match &cfg.out {
        Some(path) => {
            let mut f = create_output(path)?;
            f.write_all(text.as_bytes()).map_err(io_fail)?;
            f.flush().map_err(io_fail)?;
        }
        None => stdout.write_all(text.as_bytes()).map_err(io_fail)?,
    }
    let failed = blocks.iter().any(|(_, r)| r.has_failure());
    Ok(if failed { exit::QUALITY_FAIL } else { exit::SUCCESS })
}

pub fn parse_hex(raw: &str) -> Result<Vec<u8>, String> {
    let cleaned: String = raw
        .trim()
        .trim_start_matches("0x")
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ':')
        .collect();
    hex::decode(&cleaned).map_err(|e| format!("invalid hex command buffer: {e}"))
}

pub fn cmd_simulate(raw_hex: &str, device: &mut Device, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let raw = parse_hex(raw_hex).map_err(CliError::usage)?;
    let response = device.submit_command(&raw);
    let decoded: GetRandomResponse = wire::decode_response(&response)
        .map_err(|e| CliError::device(format!("device produced a bad response: {e}")))?;
    let outcome = if decoded.is_success() { "success" } else { "failure" };
    let mut out = String::new();
    out.push_str(&format!("request            {}\n", hex::encode(&raw)));
    match wire::decode_request(&raw) {
        Ok(req) => out.push_str(&format!("bytes_requested    {}\n", req.bytes_requested)),
        Err(e) => out.push_str(&format!("request_error      {e}\n")),
    }
    out.push_str(&format!("tag                {:#06x}\n", decoded.tag));
    out.push_str(&format!("param_size         {}\n", decoded.param_size));
    out.push_str(&format!("return_code        {} ({outcome})\n", decoded.return_code));
    out.push_str(&format!("random_bytes_size  {}\n", decoded.random_bytes_size));
    out.push_str(&format!("random_bytes       {}\n", hex::encode(&decoded.random_bytes)));
    stdout.write_all(out.as_bytes()).map_err(io_fail)?;
    Ok(exit::SUCCESS)
}

fn cmd_profiles(ctx: &Context, stdout: &mut dyn Write) -> Result<i32, CliError> {
    writeln!(
        stdout,
        "{:<10} {:>11} {:>10} {:>12} {:>10} {:>11} {:>7} {:>10} {:>12}",
        "name", "max_request", "chunk_size", "base_us", "byte_us", "chunk_us", "reseed", "penalty_us", "peak_bps"
    )
    .map_err(io_fail)?;
    for name in ctx.profiles.names() {
        let p = ctx.profiles.get(&name).expect("listed");
        let (_, peak) = p.peak_throughput();
        writeln!(
            stdout,
            "{:<10} {:>11} {:>10} {:>12} {:>10} {:>11} {:>7} {:>10} {:>12.2}",
            p.name,
            p.max_request,
            p.chunk_size,
            p.base_latency,
            p.per_byte_latency,
            p.per_chunk_latency,
            p.reseed_period.to_string(),
            p.reseed_penalty,
            peak
        )
        .map_err(io_fail)?;
    }
    Ok(exit::SUCCESS)
}

static INTERRUPT: OnceLock<CancelToken> = OnceLock::new();

/// Process-wide token raised by the interrupt signal. The handler is installed on
/// first use.
pub fn interrupt_token() -> CancelToken {
    INTERRUPT
        .get_or_init(|| {
            let token = CancelToken::new();
            let handler_token = token.clone();
            // Failing to install (e.g. another handler already present) leaves
            // collection uninterruptible but otherwise functional.
            let _ = ctrlc::set_handler(move || handler_token.cancel());
            token
        })
        .clone()
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let ctx = Context::load(cli.config.as_deref())?;
    match cli.command {
        Command::Bench(args) => {
            let (backend, seed, bias) = ctx.source(&args.source)?;
            let mut cfg = ctx.base(backend, seed, bias);
            cfg.out = args.out.or(cfg.out);
            cfg.sweep.min_size = args.min.unwrap_or(cfg.sweep.min_size);
            cfg.sweep.max_size = args.max.unwrap_or(cfg.sweep.max_size);
            cfg.sweep.step = args.step.unwrap_or(cfg.sweep.step);
            cfg.sweep.repetitions = args.reps.unwrap_or(cfg.sweep.repetitions);
            cfg.sweep.validate().map_err(CliError::usage)?;
            let mut device = ctx.open(&cfg.backend, cfg.seed, cfg.bias)?;
            cmd_bench(&cfg, &mut device, stdout, stderr)
        }
        Command::Collect(args) => {
            let (backend, seed, bias) = ctx.source(&args.source)?;
            let mut cfg = ctx.base(backend, seed, bias);
            cfg.out = args.out.or(cfg.out);
            cfg.total = args.total.or(cfg.total);
            cfg.request_size = args.request_size.unwrap_or(cfg.request_size);
            cfg.progress_every = args.progress_every.unwrap_or(cfg.progress_every);
            if cfg.total.is_none() || cfg.out.is_none() {
                return Err(CliError::usage("collect needs --total and --out"));
            }
            let mut device = ctx.open(&cfg.backend, cfg.seed, cfg.bias)?;
            let cancel = interrupt_token();
            cmd_collect(&cfg, &mut device, &cancel, stdout, stderr)
        }
        Command::Analyze(args) => {
            // analysis reads a file; the backend slot is unused
            let mut cfg = ctx.base(BackendSpec::Os, 0, None);
            cfg.out = args.out.or(cfg.out);
            cfg.pieces = args.pieces.unwrap_or(cfg.pieces);
            cfg.format = args.format.unwrap_or(cfg.format);
            cmd_analyze(&cfg, &args.file, stdout)
        }
        Command::Simulate(args) => {
            let (backend, seed, bias) = ctx.source(&args.source)?;
            let mut device = ctx.open(&backend, seed, bias)?;
            cmd_simulate(&args.raw_hex, &mut device, stdout)
        }
        Command::Profiles => cmd_profiles(&ctx, stdout),
    }
}

/// Parses `args` (including the program name) and runs the selected command,
/// returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}
