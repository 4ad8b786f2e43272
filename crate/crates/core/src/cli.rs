//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::channel::{self, export, generate_fading_trace, ChannelError, TapProfile};
use crate::engine::{self, run_simulation, EngineError, FadingPair};
use crate::linkphy::BlerCurve;
use crate::metrics::{self, MetricsError, MetricsReport, RunSummary};
use crate::mobility::{self, MobilityError, NodeClass};
use crate::rng::{SeedStreams, Stream};
use crate::scenario::{validate_config, ConfigError, DeliveryMode, NetworkMode, ScenarioConfig, ValidatedConfig};

#[derive(Debug, Parser)]
#[command(name = "v2psim", version, about = "Cellular V2P latency and delivery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write per-packet latencies, drops and a summary.
    Run {
        /// Scenario file (`key = value` lines); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// conventional | mec
        #[arg(long)]
        mode: Option<NetworkMode>,
        /// broadcast | nearest_k(K)
        #[arg(long)]
        delivery: Option<DeliveryMode>,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean latency against vehicle count for both network modes.
    SweepDensity {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// First vehicle count.
        #[arg(long, default_value_t = 10)]
        from: usize,
        /// Last vehicle count (inclusive).
        #[arg(long, default_value_t = 90)]
        to: usize,
        #[arg(long, default_value_t = 10)]
        step: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Restrict to one network mode; both by default.
        #[arg(long)]
        mode: Option<NetworkMode>,
        #[arg(long)]
        delivery: Option<DeliveryMode>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write whitespace-separated plot data here.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Raw single-attempt PDR against effective SNR.
    SweepSnr {
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 100_000)]
        packets: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Generate a mobility trace in movement-script format.
    GenMobility {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Generator::Intersection)]
        generator: Generator,
        /// Minimum headway for the hard-core placement, meters.
        #[arg(long, default_value_t = 10.0)]
        repulsion: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a fading trace; a `.meta` sidecar is written next to it.
    GenFading {
        #[arg(long, value_enum, default_value_t = Model::Eva)]
        model: Model,
        /// Speed in km/h setting the Doppler shift.
        #[arg(long, default_value_t = 80.0)]
        speed: f64,
        /// Seconds.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[arg(long, default_value_t = 50)]
        rbs: usize,
        #[arg(long, default_value_t = 10.0)]
        bandwidth: f64,
        /// Carrier in GHz.
        #[arg(long, default_value_t = 5.9)]
        carrier: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a movement script and print a summary.
    ParseTrace {
        #[arg(long)]
        input: PathBuf,
        /// Re-serialize the parsed trace here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Generator {
    Intersection,
    Matern,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Eva,
    Epa,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {}", .0.name(), .0)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("IoError: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Config(e) => e.name(),
            CliError::Engine(e) => e.name(),
            CliError::Metrics(e) => e.name(),
            CliError::Mobility(e) => e.name(),
            CliError::Channel(e) => e.name(),
            CliError::Io { .. } => "IoError",
        }
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, seed, mode, delivery, out } => {
            let cfg = load_config(config.as_deref(), seed, mode, delivery)?;
            run_one(&cfg, &out)
        }
        Command::SweepDensity { config, seed, from, to, step, runs, mode, delivery, jobs, out, gnuplot } => {
            let cfg = load_config(config.as_deref(), seed, None, delivery)?;
            if step == 0 || from > to {
                return Err(MetricsError::InvalidArgument("need from <= to and step >= 1".into()).into());
            }
            let counts: Vec<usize> = (from..=to).step_by(step).collect();
            let modes = match mode {
                Some(m) => vec![m],
                None => vec![NetworkMode::Conventional, NetworkMode::Mec],
            };
            let rows = metrics::sweep_density(&cfg, &counts, &modes, runs, jobs.max(1))?;
            emit(out.as_deref(), &metrics::density_csv(&rows))?;
            if let Some(path) = gnuplot {
                write_file(&path, metrics::density_gnuplot(&rows).as_bytes())?;
            }
            Ok(())
        }
        Command::SweepSnr { from, to, step, packets, seed, out, gnuplot } => {
            if !(step > 0.0) || from > to {
                return Err(MetricsError::InvalidArgument("need from <= to and step > 0".into()).into());
            }
            let n = ((to - from) / step + 1e-9).floor() as usize;
            let points: Vec<f64> = (0..=n).map(|i| from + i as f64 * step).collect();
            let rows = metrics::sweep_pdr_snr(&points, packets, &BlerCurve::default(), seed)?;
            emit(out.as_deref(), &metrics::pdr_csv(&rows))?;
            if let Some(path) = gnuplot {
                write_file(&path, metrics::pdr_gnuplot(&rows).as_bytes())?;
            }
            Ok(())
        }
        Command::GenMobility { config, seed, generator, repulsion, out } => {
            let cfg = load_config(config.as_deref(), seed, None, None)?;
            let mut rng = SeedStreams::new(cfg.seed).rng(Stream::Mobility, 0);
            let trace = match generator {
                Generator::Intersection => mobility::generate_intersection_traffic(&cfg, &mut rng)?,
                Generator::Matern => mobility::generate_matern_placement(&cfg, repulsion, &mut rng)?,
            };
            emit(out.as_deref(), &mobility::write_movement_trace(&trace))
        }
        Command::GenFading { model, speed, duration, rbs, bandwidth, carrier, seed, format, out } => {
            let profile = match model {
                Model::Eva => TapProfile::eva(),
                Model::Epa => TapProfile::epa(),
            };
            let doppler = channel::doppler_frequency(speed, carrier)?;
            let mut rng = SeedStreams::new(seed).rng(Stream::Fading, 0);
            let trace = generate_fading_trace(&profile, doppler, duration, rbs, bandwidth, &mut rng)?;
            let mut bytes = Vec::new();
            match format {
                Format::Csv => export::write_csv(&trace, &mut bytes)?,
                Format::Bin => export::write_binary(&trace, &mut bytes)?,
            }
            write_file(&out, &bytes)?;
            write_file(&sidecar(&out), export::metadata(&trace, seed).as_bytes())
        }
        Command::ParseTrace { input, out } => {
            let text = fs::read_to_string(&input).map_err(|source| CliError::Io { path: input.clone(), source })?;
            let trace = mobility::parse_movement_trace(&text)?;
            println!(
                "nodes={} vehicles={} vrus={} enbs={} duration_s={}",
                trace.nodes().len(),
                trace.count_of(NodeClass::Vehicle),
                trace.count_of(NodeClass::Vru),
                trace.count_of(NodeClass::Enb),
                trace.duration_s()
            );
            if let Some(path) = out {
                write_file(&path, mobility::write_movement_trace(&trace).as_bytes())?;
            }
            Ok(())
        }
    }
}

fn load_config(
    path: Option<&Path>,
    seed: Option<u64>,
    mode: Option<NetworkMode>,
    delivery: Option<DeliveryMode>,
) -> Result<ValidatedConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
            ScenarioConfig::parse(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = mode {
        cfg.network_mode = m;
    }
    if let Some(d) = delivery {
        cfg.delivery_mode = d;
    }
    Ok(validate_config(cfg)?)
}

fn run_one(cfg: &ValidatedConfig, out: &Path) -> Result<(), CliError> {
    let streams = SeedStreams::new(cfg.seed);
    let trace = mobility::generate_intersection_traffic(cfg, &mut streams.rng(Stream::Mobility, 0))?;
    let fading = FadingPair::generate(cfg, &streams)?;
    let records = run_simulation(cfg, &trace, &fading, &streams, 0)?;
    fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.to_path_buf(), source })?;
    write_file(&out.join("packets.csv"), engine::latency_csv(&records).as_bytes())?;
    write_file(&out.join("drops.csv"), engine::drop_log_csv(&records).as_bytes())?;
    let report = MetricsReport::aggregate(&[RunSummary::from_records(&records)])?;
    let row = metrics::DensityRow {
        vehicles: trace.count_of(NodeClass::Vehicle),
        density: cfg.vehicle_density,
        mode: cfg.network_mode,
        delivery_mode: cfg.delivery_mode,
        report,
    };
    write_file(&out.join("report.csv"), metrics::density_csv(&[row]).as_bytes())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text.as_bytes()),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
    }
}
