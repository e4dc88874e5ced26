use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrepeater::experiment::{self, RunSummary, SweepRow, SweepSpec};
use qrepeater::protocol::{self, PatchMode, Protocol, ProtocolConfig};
use qrepeater::validate::{self, ValidationOptions};
use qrepeater::Error;

#[derive(Parser)]
#[command(name = "qrepeater", version, about = "Quantum repeater chain simulator")]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "QREPEATER_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one configuration and report its statistics.
    Run(RunArgs),
    /// Run every point of a sweep spec and write a CSV table.
    Sweep(SweepArgs),
    /// Check the noise engine and samplers against the exact references.
    Validate(ValidateArgs),
    /// Write the operation trace of a single sample as JSON.
    EmitTrace(EmitArgs),
}

/// Overrides applied on top of a JSON config file.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    protocol: Option<Protocol>,
    #[arg(long)]
    levels: Option<u32>,
    #[arg(long)]
    total_distance_km: Option<f64>,
    #[arg(long)]
    dephasing_time_s: Option<f64>,
    #[arg(long)]
    merge_probability: Option<f64>,
    #[arg(long)]
    generation_probability: Option<f64>,
    #[arg(long)]
    growth_limit: Option<u32>,
    #[arg(long, value_parser = parse_patch_mode)]
    patching: Option<PatchMode>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ProtocolConfig) {
        if let Some(v) = self.protocol {
            cfg.protocol = v;
        }
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.total_distance_km {
            cfg.total_distance_km = Some(v);
            cfg.segment_length_km = None;
        }
        if let Some(v) = self.dephasing_time_s {
            cfg.dephasing_time_s = v;
        }
        if let Some(v) = self.merge_probability {
            cfg.merge_probability = v;
        }
        if let Some(v) = self.generation_probability {
            cfg.generation_probability = Some(v);
        }
        if let Some(v) = self.growth_limit {
            cfg.growth_limit = v;
        }
        if let Some(v) = self.patching {
            cfg.patching = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
    }
}

fn parse_patch_mode(s: &str) -> Result<PatchMode, String> {
    match s {
        "limited" => Ok(PatchMode::Limited),
        "unlimited" => Ok(PatchMode::Unlimited),
        _ => Err(format!("`{s}` is neither `limited` nor `unlimited`")),
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Append the result as a CSV row (header written for new files).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write a JSON summary.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep spec.
    #[arg(long, short)]
    spec: PathBuf,
    /// Output CSV (stdout if omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Override the sample count of every point.
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 200)]
    random_traces: usize,
    #[arg(long, default_value_t = 40)]
    protocol_traces: usize,
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EmitArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    /// Sample index within the seed's streams.
    #[arg(long, default_value_t = 0)]
    index: u64,
    /// Output file (stdout if omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the storage times (rounds) of every qubit.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ProtocolConfig, Error> {
    let mut cfg = match path {
        Some(p) => serde_json::from_reader(File::open(p)?)?,
        None => ProtocolConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(args: RunArgs) -> Result<ExitCode, Error> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    let stats = experiment::run(&cfg)?;
    let row = SweepRow::new("none", 0.0, &cfg, &stats);
    println!(
        "{} k={} L_T={} km: rounds {:.4} ± {:.4}, e_x {:.5}, e_z {:.5}, R {:.6e} Hz, r {:.5}, S {:.6e} ± {:.2e} Hz",
        cfg.protocol.as_str(),
        cfg.levels,
        cfg.total_distance_km(),
        stats.mean_rounds,
        stats.se_rounds,
        stats.mean_e_x,
        stats.mean_e_z,
        stats.raw_rate,
        stats.secret_key_fraction,
        stats.secret_key_rate,
        stats.se_secret_key_rate
    );
    if let Some(path) = &args.csv {
        let mut rows = if path.exists() {
            experiment::read_csv(File::open(path)?)?
        } else {
            Vec::new()
        };
        rows.push(row);
        experiment::write_csv(&rows, BufWriter::new(File::create(path)?))?;
    }
    if let Some(path) = &args.json {
        let summary = RunSummary {
            config: cfg,
            statistics: stats,
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &summary)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: SweepArgs) -> Result<ExitCode, Error> {
    let mut spec: SweepSpec = serde_json::from_reader(File::open(&args.spec)?)?;
    if let Some(n) = args.samples {
        spec.fixed.samples = n;
    }
    let rows = experiment::sweep_with(&spec, |row| {
        eprintln!(
            "{}={} {} g_l={} {}: S = {:.4e} Hz",
            row.axis, row.axis_value, row.protocol, row.g_l, row.patch_mode, row.secret_key_rate
        );
    })?;
    experiment::write_csv(&rows, output(args.out.as_deref())?)?;
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode, Error> {
    let options = ValidationOptions {
        random_traces: args.random_traces,
        protocol_traces: args.protocol_traces,
        samples: args.samples,
        seed: args.seed,
        ..ValidationOptions::default()
    };
    let report = validate::validate(&options)?;
    print!("{report}");
    if let Some(path) = &args.json {
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &report)?;
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} check(s) failed", report.failures().count());
        ExitCode::FAILURE
    })
}

fn emit_trace(args: EmitArgs) -> Result<ExitCode, Error> {
    let cfg = load_config(args.config.as_deref(), &args.overrides)?;
    let params = cfg.sampler_params()?;
    let outcome = protocol::sample(cfg.protocol, cfg.segments(), &params, cfg.seed, args.index)?;
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "{}", outcome.trace.to_json()?)?;
    if let Some(path) = &args.ledger {
        serde_json::to_writer(BufWriter::new(File::create(path)?), &outcome.ledger)?;
    }
    eprintln!(
        "{} rounds, {} qubits, {} events",
        outcome.rounds,
        outcome.trace.qubit_count(),
        outcome.trace.events.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Validate(a) => validate(a),
        Command::EmitTrace(a) => emit_trace(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
