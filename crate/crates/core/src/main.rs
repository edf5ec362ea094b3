use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dmim3d::config::Setup;
use dmim3d::harness::{
    bench_runtime, emit_bench_csv, emit_ber_csv, run_ber_sweep, run_training_job, snr_range, Detector,
    DetectorKind, SweepOptions,
};
use dmim3d::nn::{load_checkpoint, NetDims, TrainingSchedule};
use dmim3d::Error;

#[derive(Parser)]
#[command(name = "dmim3d", version, about = "DM-IM-3D-OFDM link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER sweep.
    Simulate(SimulateArgs),
    /// Train the neural detector.
    Train(TrainArgs),
    /// Time detection of the ML and neural detectors.
    Bench(BenchArgs),
    /// Check a configuration file.
    Validate(ConfigArg),
}

#[derive(Args)]
struct ConfigArg {
    /// TOML system configuration; defaults to (n, k, c_A, c_B) = (4, 2, 2, 2).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, value_enum, default_value_t = DetectorKind::Ml)]
    detector: DetectorKind,
    /// Checkpoint for the dnn detector.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    snr_start: f64,
    #[arg(long, default_value_t = 25.0, allow_hyphen_values = true)]
    snr_stop: f64,
    #[arg(long, default_value_t = 1.0)]
    snr_step: f64,
    /// Sub-blocks per SNR point.
    #[arg(long, default_value_t = 100_000)]
    blocks: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Disable the noise generator (diagnostic).
    #[arg(long)]
    noiseless: bool,
    /// Also print index-bit and symbol-bit BER separately.
    #[arg(long)]
    split_ber: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 50_000)]
    samples_per_epoch: usize,
    #[arg(long, default_value_t = 100)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Training SNR of even epochs, dB.
    #[arg(long, default_value_t = 7.0, allow_hyphen_values = true)]
    snr1: f64,
    /// Training SNR of odd epochs, dB.
    #[arg(long, default_value_t = 15.0, allow_hyphen_values = true)]
    snr2: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Loss CSV path; defaults to the checkpoint path with `.loss.csv` appended.
    #[arg(long)]
    loss_out: Option<PathBuf>,
    /// Width of the first hidden layer of both branches.
    #[arg(long, default_value_t = 512)]
    hidden1: usize,
    /// Width of the second hidden layer of both branches.
    #[arg(long, default_value_t = 256)]
    hidden2: usize,
    /// Width of the hidden layer of the output head.
    #[arg(long, default_value_t = 256)]
    head: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Checkpoint for the dnn detector; ML only when omitted.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    blocks: u64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// SNR of the benchmark data, dB.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load_setup(arg: &ConfigArg) -> Result<Setup, Failure> {
    let setup = match &arg.config {
        Some(path) => Setup::from_file(path).map_err(|e| match e {
            Error::Io(_) => Failure::Runtime(e),
            e => Failure::Config(e),
        })?,
        None => Setup::with_defaults(4, 2, 2, 2).map_err(Failure::Config)?,
    };
    setup.validate().map_err(Failure::Config)?;
    Ok(setup)
}

fn load_model(path: Option<&Path>, setup: &Setup) -> Result<dmim3d::nn::MlpModel, Failure> {
    let path = path.ok_or_else(|| Failure::Usage("--checkpoint is required for the dnn detector".into()))?;
    let model = load_checkpoint(path)?;
    model.dims.check_for(&setup.system)?;
    Ok(model)
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let setup = load_setup(&args.config)?;
    let snrs = snr_range(args.snr_start, args.snr_stop, args.snr_step).map_err(|e| Failure::Usage(e.to_string()))?;
    if args.blocks == 0 || args.workers == Some(0) {
        return Err(Failure::Usage("--blocks and --workers must be positive".into()));
    }
    let model = match args.detector {
        DetectorKind::Dnn => Some(load_model(args.checkpoint.as_deref(), &setup)?),
        DetectorKind::Ml => None,
    };
    let detector = model.as_ref().map_or(Detector::Ml, Detector::Dnn);
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let records = run_ber_sweep(
        &setup,
        &detector,
        &snrs,
        args.blocks,
        args.seed,
        workers,
        SweepOptions { noiseless: args.noiseless },
    )?;
    for r in &records {
        if args.split_ber {
            println!(
                "{:>6} dB  {}  ber {:.6e}  index {:.6e}  symbol {:.6e}",
                r.snr_db,
                r.detector,
                r.ber,
                r.index_ber(setup.system.index_bits),
                r.symbol_ber(setup.system.symbol_bits)
            );
        } else {
            println!("{:>6} dB  {}  ber {:.6e}", r.snr_db, r.detector, r.ber);
        }
    }
    emit_ber_csv(&records, &args.out)?;
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), Failure> {
    let setup = load_setup(&args.config)?;
    let schedule = TrainingSchedule {
        epochs: args.epochs,
        batch_size: args.batch,
        samples_per_epoch: args.samples_per_epoch,
        snr_pair: (args.snr1, args.snr2),
        learning_rate: args.lr,
        master_seed: args.seed,
    };
    schedule.check().map_err(|e| Failure::Usage(e.to_string()))?;
    if args.hidden1 == 0 || args.hidden2 == 0 || args.head == 0 {
        return Err(Failure::Usage("layer widths must be positive".into()));
    }
    let dims = NetDims::with_hidden(&setup.system, args.hidden1, args.hidden2, args.head);
    let loss_out = args.loss_out.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".loss.csv");
        p.into()
    });
    let trained = run_training_job(&setup, dims, &schedule, &args.out, &loss_out)?;
    if let (Some(first), Some(last)) = (trained.log.first(), trained.log.last()) {
        println!("loss {:.6} -> {:.6} over {} epochs", first.mean_loss, last.mean_loss, trained.log.len());
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let setup = load_setup(&args.config)?;
    if args.blocks == 0 || args.reps == 0 {
        return Err(Failure::Usage("--blocks and --reps must be positive".into()));
    }
    let model = match &args.checkpoint {
        Some(p) => Some(load_model(Some(p), &setup)?),
        None => None,
    };
    let records = bench_runtime(&setup, model.as_ref(), args.blocks, args.reps, args.snr, args.seed)?;
    for r in &records {
        println!("{:>4}  {:.3e} s/block", r.detector, r.seconds_per_block);
    }
    emit_bench_csv(&records, &args.out)?;
    Ok(())
}

fn validate(args: ConfigArg) -> Result<(), Failure> {
    let setup = load_setup(&args)?;
    let s = &setup.system;
    println!(
        "ok: n={} k={} c_A={} c_B={} p1={} p2={} p={}",
        s.n, s.k, s.c_a, s.c_b, s.index_bits, s.symbol_bits, s.bits_per_block
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train(a),
        Command::Bench(a) => bench(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
