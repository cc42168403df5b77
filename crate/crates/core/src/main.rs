//! Command-line front end: build canned pulse programs, run them, and sweep
//! their free parameters into CSV tables.
//!
//! Exit codes: 0 on success, 1 for usage or parse errors, 2 for runtime
//! errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bicavity::analysis;
use bicavity::measurement::{sweep_signal, SweepAxis, SweepMode};
use bicavity::sequences;
use bicavity::{Bindings, PulseProgram, SimError, SystemConfig};

#[derive(Parser)]
#[command(
    name = "bicavity",
    version,
    about = "Simulate Rydberg-atom chains crossing a bimodal microwave cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Protocol {
    /// GHZ-state generation for an N-atom chain
    Ghz,
    /// W-state generation for an N-atom chain
    W,
    /// GHZ transversal detection (free parameters phi, T)
    DetectGhz,
    /// W detection with post-selection (free parameters T1, T2)
    DetectW,
    /// Collapse the modes to a Bell pair, map onto atoms, analyze (free phi)
    BellPair,
    /// Collapse the modes to a Bell pair and probe after a delay (free T)
    BellPairProbe,
}

#[derive(Subcommand)]
enum Command {
    /// Write a canned pulse program to a file
    Build {
        #[arg(value_enum)]
        protocol: Protocol,
        /// Chain length for ghz/w protocols (default 4)
        #[arg(long)]
        n: Option<usize>,
        /// Output path (defaults to <protocol><n>.pp)
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a program: print the pre-detection branch table, the sampled
    /// measurement record, and optionally a fidelity against a target
    Run {
        program: PathBuf,
        /// Bind a parameter, e.g. --set phi=0.5 (repeatable)
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        /// RNG seed for sampled measurement outcomes
        #[arg(long)]
        seed: Option<u64>,
        /// Override physical constants, e.g. omega=2.9e5,delta=8.1e5,n_max=2
        #[arg(long, value_name = "KEY=VALUE,...")]
        config: Option<String>,
        /// Compare the pre-detection chain state against a target
        #[arg(long, value_name = "ghz|w")]
        target: Option<String>,
    },
    /// Sweep one or two free parameters and emit a CSV signal table
    Sweep {
        program: PathBuf,
        /// Swept axis, e.g. --sweep phi=0:6.2832:128 (repeatable, max 2)
        #[arg(long = "sweep", value_name = "NAME=START:STOP:STEPS", required = true)]
        sweep: Vec<String>,
        /// Fix a non-swept parameter, e.g. --set T=0 (repeatable)
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        /// exact (enumerate branches) or sample:K (K trajectories per point)
        #[arg(long, default_value = "exact")]
        mode: String,
        /// RNG seed for sampled mode
        #[arg(long)]
        seed: Option<u64>,
        /// Override physical constants, e.g. omega=2.9e5,delta=8.1e5
        #[arg(long, value_name = "KEY=VALUE,...")]
        config: Option<String>,
        /// Output CSV path (stdout when omitted)
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &SimError) -> u8 {
    match err {
        SimError::Parse(_)
        | SimError::UnboundParameter(_)
        | SimError::UnknownParameter(_)
        | SimError::InvalidArgument(_)
        | SimError::InvalidConfig(_)
        | SimError::InvalidProgram(_) => 1,
        _ => 2,
    }
}

fn dispatch(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Build { protocol, n, out } => build(protocol, n, out),
        Command::Run {
            program,
            set,
            seed,
            config,
            target,
        } => run(program, set, seed, config, target),
        Command::Sweep {
            program,
            sweep,
            set,
            mode,
            seed,
            config,
            out,
        } => sweep_cmd(program, sweep, set, mode, seed, config, out),
    }
}

fn build(protocol: Protocol, n: Option<usize>, out: Option<PathBuf>) -> Result<(), SimError> {
    let (program, default_name) = match protocol {
        Protocol::Ghz => {
            let n = n.unwrap_or(4);
            (sequences::ghz_program(n)?, format!("ghz{n}.pp"))
        }
        Protocol::W => {
            let n = n.unwrap_or(4);
            (sequences::w_program(n)?, format!("w{n}.pp"))
        }
        other => {
            if n.is_some() {
                return Err(SimError::InvalidArgument(
                    "--n applies only to the ghz and w protocols".into(),
                ));
            }
            match other {
                Protocol::DetectGhz => (sequences::ghz_detection_program(), "detect_ghz.pp".into()),
                Protocol::DetectW => (sequences::w_detection_program(), "detect_w.pp".into()),
                Protocol::BellPair => (sequences::bell_pair_map_program(), "bell_pair.pp".into()),
                Protocol::BellPairProbe => (
                    sequences::bell_pair_probe_program(),
                    "bell_pair_probe.pp".into(),
                ),
                Protocol::Ghz | Protocol::W => unreachable!(),
            }
        }
    };
    let path = out.unwrap_or_else(|| PathBuf::from(default_name));
    fs::write(&path, program.serialize())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn parse_bindings(set: &[String]) -> Result<Bindings, SimError> {
    let mut bindings = Bindings::new();
    for entry in set {
        let (name, value) = entry.split_once('=').ok_or_else(|| {
            SimError::InvalidArgument(format!("--set expects NAME=VALUE, got `{entry}`"))
        })?;
        let value: f64 = value.parse().map_err(|_| {
            SimError::InvalidArgument(format!("`{value}` is not a number in `--set {entry}`"))
        })?;
        bindings.insert(name.to_string(), value);
    }
    Ok(bindings)
}

/// Assembled config plus whether n_max was given explicitly (an explicit
/// value shadows any `modes` line in the program file).
fn parse_config(
    spec: Option<&str>,
    seed: Option<u64>,
) -> Result<(SystemConfig, Option<u32>), SimError> {
    let mut config = SystemConfig::default();
    let mut explicit_n_max = None;
    if let Some(spec) = spec {
        for entry in spec.split(',') {
            let (key, value) = entry.split_once('=').ok_or_else(|| {
                SimError::InvalidConfig(format!("--config expects KEY=VALUE, got `{entry}`"))
            })?;
            match key {
                "omega" => {
                    config.omega_rabi = value.parse().map_err(|_| {
                        SimError::InvalidConfig(format!("bad omega value `{value}`"))
                    })?
                }
                "delta" => {
                    config.delta = value.parse().map_err(|_| {
                        SimError::InvalidConfig(format!("bad delta value `{value}`"))
                    })?
                }
                "n_max" => {
                    let n = value.parse().map_err(|_| {
                        SimError::InvalidConfig(format!("bad n_max value `{value}`"))
                    })?;
                    config.n_max = n;
                    explicit_n_max = Some(n);
                }
                other => {
                    return Err(SimError::InvalidConfig(format!(
                        "unknown config key `{other}` (omega, delta, n_max)"
                    )))
                }
            }
        }
    }
    if let Some(seed) = seed {
        config.rng_seed = seed;
    }
    // Re-validate the assembled values.
    let config =
        SystemConfig::new(config.omega_rabi, config.delta, config.n_max, config.rng_seed)?;
    Ok((config, explicit_n_max))
}

fn apply_n_max(program: PulseProgram, explicit: Option<u32>) -> PulseProgram {
    match explicit {
        Some(n) => program.with_n_max(n),
        None => program,
    }
}

fn load_program(path: &PathBuf) -> Result<PulseProgram, SimError> {
    let text = fs::read_to_string(path)?;
    PulseProgram::parse(&text).map_err(SimError::from)
}

fn run(
    path: PathBuf,
    set: Vec<String>,
    seed: Option<u64>,
    config: Option<String>,
    target: Option<String>,
) -> Result<(), SimError> {
    let bindings = parse_bindings(&set)?;
    let (config, explicit_n_max) = parse_config(config.as_deref(), seed)?;
    let program = apply_n_max(load_program(&path)?, explicit_n_max);

    let unitary_part = program.without_measurements();
    let (state, _) = unitary_part.run(&bindings, &config, config.rng_seed)?;
    let layout = state.layout().clone();

    println!("program: {}", path.display());
    println!("state before detection:");
    println!("  {:<24} {:>12} {:>12}", "basis state", "modulus", "phase");
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm() > 1e-9 {
            let label = layout.format_label(&layout.label_of(idx));
            println!("  |{label}> {:>17.9} {:>12.6}", amp.norm(), amp.arg());
        }
    }

    if !program.measured_atoms().is_empty() {
        let (_, record) = program.run(&bindings, &config, config.rng_seed)?;
        println!("measurement record (seed {}):", record.seed);
        for outcome in &record.outcomes {
            println!(
                "  {} -> {}   p = {:.9}",
                outcome.atom, outcome.level, outcome.probability
            );
        }
        println!(
            "postselect: {}",
            if record.postselect_pass { "pass" } else { "rejected" }
        );
    }

    if let Some(target) = target {
        let chain: Vec<String> = program.measured_atoms();
        let chain_refs: Vec<&str> = chain.iter().map(String::as_str).collect();
        let target_state = match target.as_str() {
            "ghz" => analysis::target_ghz(chain.len(), &config)?,
            "w" => analysis::target_w(chain.len(), &config)?,
            other => {
                return Err(SimError::InvalidArgument(format!(
                    "unknown target `{other}` (ghz or w)"
                )))
            }
        };
        let fidelity = analysis::chain_fidelity(&state, &target_state, &chain_refs)?;
        println!("fidelity vs {target} target ({} atoms): {fidelity:.9}", chain.len());
    }
    Ok(())
}

fn sweep_cmd(
    path: PathBuf,
    sweep: Vec<String>,
    set: Vec<String>,
    mode: String,
    seed: Option<u64>,
    config: Option<String>,
    out: Option<PathBuf>,
) -> Result<(), SimError> {
    let axes: Vec<SweepAxis> = sweep
        .iter()
        .map(|s| SweepAxis::parse(s))
        .collect::<Result<_, _>>()?;
    let fixed = parse_bindings(&set)?;
    let (config, explicit_n_max) = parse_config(config.as_deref(), seed)?;
    let program = apply_n_max(load_program(&path)?, explicit_n_max);
    let mode = match mode.as_str() {
        "exact" => SweepMode::Exact,
        other => match other.strip_prefix("sample:") {
            Some(k) => SweepMode::Sampled(k.parse().map_err(|_| {
                SimError::InvalidArgument(format!("bad sample count in `--mode {other}`"))
            })?),
            None => {
                return Err(SimError::InvalidArgument(format!(
                    "--mode must be `exact` or `sample:K`, got `{other}`"
                )))
            }
        },
    };

    let result = sweep_signal(&program, &axes, &fixed, &config, mode)?;
    match out {
        Some(path) => {
            let mut file = fs::File::create(&path)?;
            result.write_csv(&mut file)?;
            file.flush()?;
            println!("wrote {} rows to {}", result.grid.len(), path.display());
        }
        None => {
            result.write_csv(std::io::stdout().lock())?;
        }
    }
    Ok(())
}
