//! `bench`: timing sweeps and ratio reports for the recursive TRMM/TRSM.
//!
//! Exit codes: 0 on success, 1 when a residual check fails, 2 on usage or
//! I/O errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rectri::bench::{crossover_scan, ratio_report, run_sweep, BenchConfig, BenchError, BenchRecord, Fault, MMode};
use rectri::{Backend, Diag, ElemKind, OpKind, Side, Threshold, Trans, TriangularSpec, Uplo};

#[derive(Parser)]
#[command(name = "bench", about = "Benchmark recursive TRMM/TRSM and compare runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time one variant over a list of sizes and write a CSV.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 256)]
        threshold: usize,
        /// CSV output path; records go to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Corrupt every result before validation (checks the gate).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Compare two sweep CSVs: ratio = 100 * baseline / candidate.
    Ratio {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time every (size, threshold) pair to pick a threshold.
    Crossover {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        thresholds: Vec<usize>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long)]
    op: OpKind,
    #[arg(long, default_value = "left")]
    side: Side,
    #[arg(long, default_value = "lower")]
    uplo: Uplo,
    #[arg(long, default_value = "n")]
    trans: Trans,
    #[arg(long, default_value = "nonunit")]
    diag: Diag,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// `fixed:K` for B with K lanes, `square` for m = n.
    #[arg(long, default_value = "fixed:256")]
    m: MMode,
    #[arg(long, default_value = "par")]
    backend: Backend,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(long, default_value = "f64")]
    elem: ElemKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ProblemArgs {
    fn config(self) -> BenchConfig {
        let spec = TriangularSpec::new(self.side, self.uplo, self.trans, self.diag).with_alpha(self.alpha);
        let mut config = BenchConfig::new(self.op, spec, self.sizes);
        config.m_mode = self.m;
        config.backend = self.backend;
        config.reps = self.reps;
        config.warmup = self.warmup;
        config.elem = self.elem;
        config.seed = self.seed;
        config
    }
}

fn print_records(records: &[BenchRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    let csv_err = |source| BenchError::Csv {
        path: PathBuf::from("<stdout>"),
        source,
    };
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Sweep {
            problem,
            threshold,
            out,
            inject_fault,
        } => {
            let mut config = problem.config();
            config.threshold = Threshold::new(threshold)?;
            config.out = out.clone();
            if inject_fault {
                config.fault = Fault::PerturbOutput;
            }
            let records = run_sweep(&config)?;
            match out {
                Some(path) => {
                    for r in &records {
                        eprintln!(
                            "{} {} n={} m={} median={:.6}s gflops={:.3}",
                            r.op, r.variant, r.n, r.m, r.median_time_s, r.gflops
                        );
                    }
                    eprintln!("wrote {}", path.display());
                }
                None => print_records(&records)?,
            }
        }
        Command::Ratio {
            baseline,
            candidate,
            out,
        } => {
            let records = ratio_report(&baseline, &candidate, out.as_deref())?;
            for r in &records {
                println!(
                    "{} {} n={} m={} ratio={:.1}%",
                    r.op, r.variant, r.n, r.m, r.ratio_percent
                );
            }
        }
        Command::Crossover { problem, thresholds } => {
            let config = problem.config();
            let rows = crossover_scan(&config, &thresholds)?;
            let mut stdout = std::io::stdout().lock();
            let io_err = |source| BenchError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            };
            writeln!(stdout, "n,threshold,median_time_s").map_err(io_err)?;
            for row in rows {
                writeln!(stdout, "{},{},{}", row.n, row.threshold, row.median_time_s).map_err(io_err)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("bench: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
