//! `sbc`: encoder, decoder and evaluation front end.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sbc_core::eval::{bd_rate_all, emit_report, psnr_report, sweep, SWEEP_QPS};
use sbc_core::yuv::{frames_in_len, read_yuv, write_yuv};
use sbc_core::{decode_stream, encode_sequence, EncoderConfig, Error, Frame, RdCurve};

#[derive(Parser)]
#[command(name = "sbc", version, about = "Super-block video codec tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a raw I420 file.
    Encode {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output stream.
        #[arg(short, long)]
        output: PathBuf,
        /// Write the encoder reconstruction as I420.
        #[arg(long)]
        recon: Option<PathBuf>,
        /// Per-frame statistics CSV; printed to stdout when omitted.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Decode a stream to raw I420.
    Decode {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Per-frame and pooled PSNR of two raw files.
    Psnr {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[arg(long, default_value_t = 8)]
        bit_depth: u8,
        /// Frames to compare; defaults to every whole frame of the reference.
        #[arg(long)]
        frames: Option<usize>,
        /// CSV output; printed to stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// BD-rate of a test curve against an anchor, per component.
    Bdrate {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Encode at several QPs and write the rate/PSNR curve.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = SWEEP_QPS)]
        qps: Vec<u8>,
        /// Curve CSV; printed to stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Raw planar I420 input; 10-bit samples are 16-bit little-endian.
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    /// Frames to read; defaults to every whole frame in the file.
    #[arg(long)]
    frames: Option<usize>,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key=value` file using the configuration field names; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, alias = "max-scu-width")]
    scu: Option<usize>,
    #[arg(long, alias = "max-partition-depth")]
    depth: Option<u32>,
    #[arg(long, alias = "max-direct-partition-depth")]
    direct_depth: Option<u32>,
    #[arg(long)]
    qp: Option<u8>,
    #[arg(long)]
    intra_period: Option<usize>,
    #[arg(long)]
    search_range: Option<usize>,
    /// off, fixed or adaptive.
    #[arg(long, alias = "sao-mode")]
    sao: Option<String>,
    #[arg(long, alias = "sao-block-size")]
    sao_block: Option<usize>,
    /// on or off.
    #[arg(long, alias = "alf-enabled")]
    alf: Option<String>,
    #[arg(long)]
    bit_depth: Option<u8>,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

impl ConfigArgs {
    fn build(&self) -> Result<EncoderConfig, CliError> {
        let mut cfg = EncoderConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            cfg.apply_text(&text)?;
        }
        if let Some(scu) = self.scu {
            cfg.max_scu_width = scu;
            cfg.max_scu_height = scu;
        }
        let fields: [(&str, Option<String>); 9] = [
            ("maxPartitionDepth", self.depth.map(|v| v.to_string())),
            ("maxDirectPartitionDepth", self.direct_depth.map(|v| v.to_string())),
            ("qp", self.qp.map(|v| v.to_string())),
            ("intraPeriod", self.intra_period.map(|v| v.to_string())),
            ("searchRange", self.search_range.map(|v| v.to_string())),
            ("saoMode", self.sao.clone()),
            ("saoBlockSize", self.sao_block.map(|v| v.to_string())),
            ("alfEnabled", self.alf.clone()),
            ("bitDepth", self.bit_depth.map(|v| v.to_string())),
        ];
        for (key, value) in fields {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn echo(out: &mut impl Write, command: &str, lines: &[String]) -> io::Result<()> {
    writeln!(out, "# sbc {command}")?;
    for l in lines {
        writeln!(out, "# {l}")?;
    }
    Ok(())
}

fn config_lines(cfg: &EncoderConfig) -> Vec<String> {
    cfg.to_text().lines().map(str::to_owned).collect()
}

fn load_frames(
    path: &Path,
    width: usize,
    height: usize,
    bit_depth: u8,
    frames: Option<usize>,
) -> Result<Vec<Frame>, CliError> {
    if width == 0 || height == 0 {
        return Err(CliError::Usage("width and height must be positive".into()));
    }
    let len = fs::metadata(path).map_err(|e| io_error(path, e))?.len();
    let count = frames.unwrap_or_else(|| frames_in_len(len, width, height, bit_depth));
    if count == 0 {
        return Err(CliError::Data(format!("{}: no whole {width}x{height} frame", path.display())));
    }
    Ok(read_yuv(path, width, height, bit_depth, count)?)
}

fn write_output(path: Option<&Path>, body: &[u8], out: &mut impl Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| io_error(p, e)),
        None => out.write_all(body).map_err(|e| CliError::Data(e.to_string())),
    }
}

fn run(command: Command, out: &mut impl Write) -> Result<(), CliError> {
    let stdout_err = |e: io::Error| CliError::Data(e.to_string());
    match command {
        Command::Encode { input, config, output, recon, stats } => {
            let cfg = config.build()?;
            echo(out, "encode", &config_lines(&cfg)).map_err(stdout_err)?;
            let frames = load_frames(&input.input, input.width, input.height, cfg.bit_depth, input.frames)?;
            let seq = encode_sequence(&frames, &cfg)?;
            fs::write(&output, &seq.stream).map_err(|e| io_error(&output, e))?;
            if let Some(p) = &recon {
                write_yuv(&seq.recon(), p)?;
            }
            let mut csv = Vec::new();
            emit_report(&seq.stats(), &mut csv)?;
            write_output(stats.as_deref(), &csv, out)?;
            writeln!(out, "# frames={} bits={}", frames.len(), seq.total_bits()).map_err(stdout_err)?;
        }
        Command::Decode { input, output } => {
            let data = fs::read(&input).map_err(|e| io_error(&input, e))?;
            let seq = decode_stream(&data)?;
            let h = &seq.header;
            let mut lines =
                vec![format!("width={}", h.width), format!("height={}", h.height), format!("frames={}", h.frame_count)];
            lines.extend(config_lines(&h.config));
            echo(out, "decode", &lines).map_err(stdout_err)?;
            write_yuv(&seq.frames, &output)?;
        }
        Command::Psnr { reference, test, width, height, bit_depth, frames, output } => {
            let lines = [format!("width={width}"), format!("height={height}"), format!("bitDepth={bit_depth}")];
            echo(out, "psnr", &lines).map_err(stdout_err)?;
            let a = load_frames(&reference, width, height, bit_depth, frames)?;
            let b = load_frames(&test, width, height, bit_depth, Some(a.len()))?;
            let mut csv = Vec::new();
            psnr_report(&a, &b, &mut csv)?;
            write_output(output.as_deref(), &csv, out)?;
        }
        Command::Bdrate { anchor, test } => {
            echo(out, "bdrate", &[]).map_err(stdout_err)?;
            let load = |p: &Path| -> Result<RdCurve, CliError> {
                let file = fs::File::open(p).map_err(|e| io_error(p, e))?;
                RdCurve::from_csv(file).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
            };
            let bd = bd_rate_all(&load(&anchor)?, &load(&test)?)?;
            writeln!(out, "component,bd_rate_pct").map_err(stdout_err)?;
            for (name, v) in ["Y", "U", "V"].iter().zip(bd) {
                writeln!(out, "{name},{v:.4}").map_err(stdout_err)?;
            }
        }
        Command::Sweep { input, config, qps, output } => {
            let cfg = config.build()?;
            if qps.is_empty() || qps.iter().any(|&q| q > 51) {
                return Err(CliError::Usage("--qps takes values in 0..=51".into()));
            }
            let mut lines = config_lines(&cfg);
            lines.retain(|l| !l.starts_with("qp="));
            lines.push(format!("qps={}", qps.iter().map(u8::to_string).collect::<Vec<_>>().join(",")));
            echo(out, "sweep", &lines).map_err(stdout_err)?;
            let frames = load_frames(&input.input, input.width, input.height, cfg.bit_depth, input.frames)?;
            let curve = sweep(&frames, &cfg, &qps)?;
            write_output(output.as_deref(), curve.to_csv().as_bytes(), out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
