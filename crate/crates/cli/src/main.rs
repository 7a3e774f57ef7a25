//! `pipesim`: run programs on the pipeline model, check it against the
//! reference model, and sweep the bundled benchmarks.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pipesim_core::funcsim::format_log;
use pipesim_core::harness::{self, corpus, emit_report, lockstep, run_matrix, ReportFormat, SimConfig, PROCESSOR_PRESETS};
use pipesim_core::MemImage;

#[derive(Parser)]
#[command(name = "pipesim", version, about = "Cycle-accurate RV32I five-stage pipeline simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Kv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Kv => ReportFormat::Kv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one program on the pipeline and print its statistics.
    Run {
        /// Preset name or comma-separated key=value flags.
        #[arg(long, default_value = "rvp-simple")]
        config: String,
        /// Instruction image: hex text, or raw little-endian with a .bin extension.
        #[arg(long)]
        imem: PathBuf,
        #[arg(long)]
        dmem: Option<PathBuf>,
        /// Write the per-cycle trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the commit log here.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        max_cycles: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        report: Format,
        /// Do not copy console output to stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// Lockstep-check the pipeline against the reference model.
    Verify {
        /// Configurations to check; defaults to the four processor presets.
        #[arg(long)]
        config: Vec<String>,
        /// Check this program instead of the bundled corpus.
        #[arg(long)]
        imem: Option<PathBuf>,
        #[arg(long, requires = "imem")]
        dmem: Option<PathBuf>,
    },
    /// Run every bundled benchmark under every configuration and report.
    Bench {
        #[arg(long)]
        config: Vec<String>,
        #[arg(long, value_enum, default_value = "text")]
        report: Format,
    },
    /// Write the bundled benchmarks as hex images.
    Corpus {
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_configs(specs: &[String]) -> Result<Vec<SimConfig>> {
    if specs.is_empty() {
        return Ok(PROCESSOR_PRESETS.iter().map(|p| SimConfig::preset(p).expect("builtin preset")).collect());
    }
    specs.iter().map(|s| s.parse::<SimConfig>().with_context(|| format!("--config {s}"))).collect()
}

fn load_image(path: &Path) -> Result<MemImage> {
    MemImage::load(path).with_context(|| format!("reading {}", path.display()))
}

fn load_pair(imem: &Path, dmem: Option<&Path>) -> Result<(MemImage, MemImage)> {
    let d = match dmem {
        Some(p) => load_image(p)?,
        None => MemImage::default(),
    };
    Ok((load_image(imem)?, d))
}

/// Ok(true) when everything passed; errors are usage or I/O problems.
fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run { config, imem, dmem, trace, log, max_cycles, report, quiet } => {
            let mut cfg: SimConfig = config.parse().with_context(|| format!("--config {config}"))?;
            if let Some(n) = max_cycles {
                anyhow::ensure!(n > 0, "--max-cycles must be positive");
                cfg.max_cycles = n;
            }
            cfg.trace |= trace.is_some();
            let (i, d) = load_pair(&imem, dmem.as_deref())?;
            let r = harness::run_with_echo(&cfg, &i, &d, !quiet)?;
            if let Some(path) = trace {
                let text: String = r.trace.iter().map(|e| format!("{e}\n")).collect();
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = log {
                fs::write(&path, format_log(&r.log)).with_context(|| format!("writing {}", path.display()))?;
            }
            let stem = imem.file_stem().map_or("program".into(), |s| s.to_string_lossy().into_owned());
            let name = stem.strip_suffix(".imem").unwrap_or(&stem);
            print!("{}", emit_report(&[r.entry(&cfg.label(), name)], report.into()));
            println!("exit: {}", r.exit);
            Ok(r.exit.is_halted())
        }
        Command::Verify { config, imem, dmem } => {
            let configs = parse_configs(&config)?;
            let mut ok = true;
            match imem {
                Some(path) => {
                    let (i, d) = load_pair(&path, dmem.as_deref())?;
                    for cfg in &configs {
                        let r = lockstep(cfg, &i, &d)?;
                        let pass = r.passed() && r.exit.is_halted();
                        ok &= pass;
                        match &r.divergence {
                            Some(div) => println!("FAIL {} {}: {div}", cfg.label(), path.display()),
                            None if !pass => println!("FAIL {} {}: {}", cfg.label(), path.display(), r.exit),
                            None => println!("PASS {} {}: {} records", cfg.label(), path.display(), r.records),
                        }
                    }
                }
                None => {
                    let mut benches = corpus::all();
                    benches.push(corpus::empty());
                    for c in run_matrix(&configs, &benches)? {
                        ok &= c.ok();
                        match &c.lockstep.divergence {
                            Some(div) => println!("FAIL {} {}: {div}", c.config, c.benchmark),
                            None if !c.ok() => println!("FAIL {} {}: {}", c.config, c.benchmark, c.lockstep.exit),
                            None => println!("PASS {} {}: {} records", c.config, c.benchmark, c.lockstep.records),
                        }
                    }
                }
            }
            Ok(ok)
        }
        Command::Bench { config, report } => {
            let mut configs = parse_configs(&config)?;
            if config.is_empty() {
                configs.push(SimConfig::preset("nobp").expect("builtin preset"));
            }
            let cells = run_matrix(&configs, &corpus::all())?;
            let ok = cells.iter().all(|c| c.ok());
            for c in cells.iter().filter(|c| !c.ok()) {
                eprintln!("lockstep failure: {} {}", c.config, c.benchmark);
            }
            let entries: Vec<_> = cells.iter().map(|c| c.entry()).collect();
            print!("{}", emit_report(&entries, report.into()));
            Ok(ok)
        }
        Command::Corpus { out } => {
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut stdout = std::io::stdout().lock();
            for b in corpus::all() {
                for (suffix, img) in [("imem", &b.imem), ("dmem", &b.dmem)] {
                    let path = out.join(format!("{}.{suffix}.hex", b.name));
                    fs::write(&path, img.to_hex()).with_context(|| format!("writing {}", path.display()))?;
                    writeln!(stdout, "{}", path.display())?;
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
