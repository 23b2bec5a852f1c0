use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use curvquant::io::{parse_grid, run, write_report, Command, Format, RunOptions};
use curvquant::quantization::Scheme;

/// Standard and modified geometric quantization on Riemannian charts.
#[derive(Parser)]
#[command(name = "curvquant", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Christoffel symbols, volume density and scalar curvature.
    Curvature(Common),
    /// Quantum operator of an observable, or the energy operator.
    Quantize(Common),
    /// Symbolic verification of commutation, symmetry and curvature claims.
    Verify(Common),
    /// Low eigenvalues of the discretized energy operator or an observable.
    Spectrum(Common),
    /// Spectral shift between the k = 1/12 and k = 0 energy operators.
    Shift(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Args)]
struct Common {
    /// Manifest file (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// std, mod or k=<rational>.
    #[arg(long, default_value = "std", value_parser = parse_scheme)]
    scheme: Scheme,
    /// Observable affine in the momenta, e.g. "q2*p1 - q1*p2".
    #[arg(long)]
    observable: Option<String>,
    /// Overrides the manifest's hbar.
    #[arg(long)]
    hbar: Option<f64>,
    /// Grid sizes N or N,M.
    #[arg(long, value_parser = parse_grid)]
    // The qualified path keeps clap from treating this as a multi-value flag.
    grid: Option<::std::vec::Vec<usize>>,
    /// Number of eigenvalues.
    #[arg(long, default_value_t = curvquant::io::run::DEFAULT_EIGS)]
    eigs: usize,
    #[arg(long, default_value_t = curvquant::io::run::DEFAULT_SEED)]
    seed: u64,
    /// Output file, or - for standard output.
    #[arg(long, default_value = "-")]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Record wall-clock time in the report (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: curvquant::quantization::QuantizationError| e.to_string())
}

fn main() -> ExitCode {
    // Single-threaded linear algebra keeps floating-point results bit-stable.
    faer::set_global_parallelism(faer::Parallelism::None);
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let (command, args) = match cli.command {
        Sub::Curvature(a) => (Command::Curvature, a),
        Sub::Quantize(a) => (Command::Quantize, a),
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Spectrum(a) => (Command::Spectrum, a),
        Sub::Shift(a) => (Command::Shift, a),
    };
    let opts = RunOptions {
        command,
        manifest: args.manifest,
        scheme: args.scheme,
        observable: args.observable,
        hbar: args.hbar,
        grid: args.grid,
        eigs: args.eigs,
        seed: args.seed,
        timing: args.timing,
    };
    let report = match run(&opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("curvquant: {e}");
            return ExitCode::from(2);
        }
    };
    let format = match args.format {
        FormatArg::Json => Format::Json,
        FormatArg::Text => Format::Text,
    };
    if let Err(e) = write_report(&report, &args.output, format) {
        eprintln!("curvquant: cannot write {}: {e}", args.output.display());
        return ExitCode::from(2);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
