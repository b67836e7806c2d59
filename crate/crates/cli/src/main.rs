use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use pim_core::bench::run_traced;
use pim_core::driver::asm::parse_program;
use pim_core::driver::budget_table;
use pim_core::microop::{parse_trace, write_trace};
use pim_core::{encode, ArchConfig, BenchReport, Driver, MemoryState};

/// Every benchmark run by `pim bench all`.
const SUITE: &[&str] = &[
    "arith/int32/add",
    "arith/int32/sub",
    "arith/int32/mul",
    "arith/int32/div",
    "arith/float32/add",
    "arith/float32/sub",
    "arith/float32/mul",
    "arith/float32/div",
    "compare/int32/lt",
    "compare/float32/lt",
    "compare/float32/eq",
    "cordic",
    "reduce/int32/sum",
    "reduce/float32/sum",
    "sort/float32",
];

#[derive(Parser)]
#[command(name = "pim", version, about = "Memristive processing-in-memory simulator and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run benchmarks and check them against host oracles.
    Bench {
        /// e.g. `arith/float32/mul`, `compare`, `cordic`, `reduce`, `sort/int32`, or `all`
        #[arg(required = true)]
        names: Vec<String>,
        /// key=value architecture file; defaults apply to unset keys
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        elements: Option<usize>,
        /// append one CSV row per benchmark (header written for new files)
        #[arg(long)]
        csv: Option<PathBuf>,
        /// dump every issued micro-op (one benchmark only)
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Lower a macro-instruction listing to a micro-op trace.
    Lower {
        /// listing with one instruction per line
        input: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// trace output path; defaults to the input with a `.trace` extension
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// print the per-routine micro-op budgets
        #[arg(long)]
        budgets: bool,
    },
    /// Execute a trace file on a fresh memory and print reads and cycles.
    Run {
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<ArchConfig> {
    match path {
        Some(p) => ArchConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ArchConfig::default()),
    }
}

fn bench(
    names: &[String],
    cfg: &ArchConfig,
    seed: u64,
    elements: Option<usize>,
    csv: Option<&Path>,
    trace: Option<&Path>,
) -> Result<bool> {
    let names: Vec<String> = if names.iter().any(|n| n == "all") {
        SUITE.iter().map(|s| s.to_string()).collect()
    } else {
        names.to_vec()
    };
    if trace.is_some() && names.len() != 1 {
        bail!("--trace takes a single benchmark");
    }
    let mut rows = Vec::new();
    let mut all_pass = true;
    for name in &names {
        let (report, ops) = run_traced(name, cfg, seed, elements, trace.is_some()).with_context(|| name.clone())?;
        println!("{report}\n");
        all_pass &= report.pass;
        if let Some(path) = trace {
            let words = ops.iter().map(|op| encode(op, cfg)).collect::<Result<Vec<u64>, _>>()?;
            fs::write(path, write_trace(&words)).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} micro-ops to {}", words.len(), path.display());
        }
        rows.push(report.csv_row());
    }
    if let Some(path) = csv {
        let mut text = if path.exists() {
            fs::read_to_string(path)?
        } else {
            format!("{}\n", BenchReport::csv_header())
        };
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(all_pass)
}

fn lower(input: Option<&Path>, cfg: &ArchConfig, out: Option<&Path>, budgets: bool) -> Result<()> {
    if budgets {
        for b in budget_table(cfg.word_n) {
            println!("{b}");
        }
    }
    let Some(input) = input else {
        if !budgets {
            bail!("nothing to do: give an input listing or --budgets");
        }
        return Ok(());
    };
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let program = parse_program(&text)?;
    let driver = Driver::new(cfg);
    let mut words = Vec::new();
    for (i, instr) in program.iter().enumerate() {
        let ops = driver.lower(instr).with_context(|| format!("instruction {}: {instr}", i + 1))?;
        for op in &ops {
            words.push(encode(op, cfg)?);
        }
    }
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| input.with_extension("trace"));
    fs::write(&out, write_trace(&words)).with_context(|| format!("writing {}", out.display()))?;
    println!("{} instructions -> {} micro-ops, wrote {}", program.len(), words.len(), out.display());
    Ok(())
}

fn run(trace: &Path, cfg: &ArchConfig) -> Result<()> {
    let text = fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
    let words = parse_trace(&text)?;
    let mut mem = MemoryState::new(cfg);
    let (reads, counters) = mem.run_trace(&words)?;
    for (i, r) in reads.iter().enumerate() {
        println!("read {i}: {r:#010x}");
    }
    print!("{counters}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Bench { names, config, seed, elements, csv, trace } => load_config(config.as_deref())
            .and_then(|cfg| bench(names, &cfg, *seed, *elements, csv.as_deref(), trace.as_deref())),
        Command::Lower { input, config, out, budgets } => load_config(config.as_deref())
            .and_then(|cfg| lower(input.as_deref(), &cfg, out.as_deref(), *budgets))
            .map(|()| true),
        Command::Run { trace, config } => load_config(config.as_deref()).and_then(|cfg| run(trace, &cfg)).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("oracle mismatch");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
