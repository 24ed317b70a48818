//! Command-line front end: spiked-model simulation, single-estimator runs,
//! benchmark grids, and rate diagnostics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spca_core::estimators::{
    aggregate_estimator, regular_pca, reduce_with_split, split_samples, AggregationConfig,
    DiagThreshConfig,
};
use spca_core::frame::leading_eigvecs_of_projection_sum;
use spca_core::regression::PenaltyConfig;
use spca_core::rng::derive_seed;
use spca_core::sparsity::SparsityClass;
use spca_core::Matrix;

use spca_harness::error::{exit_code, HarnessError, Result};
use spca_harness::report::{records_csv, rates_text, summarize, summary_csv, table_text};
use spca_harness::spec::{EstimatorKind, ExperimentSpec};
use spca_harness::truth::build_truth;
use spca_harness::{run_grid, trial_seed};

#[derive(Parser)]
#[command(
    name = "spca",
    about = "Sparse principal subspace estimation: simulation, estimators, benchmarks, rates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sparse spiked-model truth and a data matrix; writes v.txt and
    /// x.txt in the matrix text format.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 20.0)]
        lambda_top: f64,
        #[arg(long, default_value_t = 10.0)]
        lambda_bottom: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one estimator on a data matrix; writes v_hat.txt and, for
    /// regspca, an artifacts/ directory with every pipeline intermediate.
    Estimate {
        #[arg(long)]
        method: String,
        #[arg(long)]
        r: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.1)]
        beta: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Support size for the aggregation estimator.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark grid from a key=value config file; writes
    /// records.csv, summary.csv and table.txt.
    Benchmark {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the rate diagnostics for a design.
    Rates {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            n,
            p,
            r,
            s,
            lambda_top,
            lambda_bottom,
            sigma,
            seed,
            out,
        } => {
            let spec = ExperimentSpec {
                n,
                p,
                r_values: vec![r],
                s_values: vec![s],
                lambda_top,
                lambda_bottom,
                sigma,
                reps: 1,
                ..ExperimentSpec::benchmark_default()
            };
            spec.validate()?;
            let cell_seed = trial_seed(spec.master_seed ^ seed, 0, 0, 0, 0);
            let (model, _) = build_truth(&spec, r, s, derive_seed(cell_seed, &[0]))?;
            let data = model.generate(n, derive_seed(cell_seed, &[1]), false)?;
            std::fs::create_dir_all(&out)?;
            model.frame().basis().write_file(&out.join("v.txt"))?;
            data.x.write_file(&out.join("x.txt"))?;
            println!(
                "wrote {} and {}",
                out.join("v.txt").display(),
                out.join("x.txt").display()
            );
            Ok(())
        }
        Command::Estimate {
            method,
            r,
            input,
            alpha,
            beta,
            delta,
            k,
            seed,
            out,
        } => {
            let method: EstimatorKind = method.parse()?;
            let x = Matrix::read_file(&input).map_err(HarnessError::Core)?;
            std::fs::create_dir_all(&out)?;
            let pen = PenaltyConfig::new(beta, delta).map_err(HarnessError::Core)?;
            let frame = match method {
                EstimatorKind::RegularPca => regular_pca(&x, r)?,
                EstimatorKind::Aggregate => {
                    let k = k.ok_or_else(|| {
                        HarnessError::Config("--k is required for the aggregate method".into())
                    })?;
                    let mut cfg = AggregationConfig::new(k);
                    cfg.split_seed = None;
                    aggregate_estimator(&x, r, &cfg)?
                }
                EstimatorKind::Regspca => {
                    let cfg = DiagThreshConfig::new(r).with_alpha(alpha);
                    let (x0, x1) = split_samples(&x, seed);
                    let art_forward = reduce_with_split(&x0, &x1, &cfg, &pen)?;
                    let art_swapped = reduce_with_split(&x1, &x0, &cfg, &pen)?;
                    let fused = leading_eigvecs_of_projection_sum(
                        &[&art_forward.v_hat, &art_swapped.v_hat],
                        r,
                    )?;
                    // Introspection artifacts come from the forward pass.
                    art_forward.write_dir(&out.join("artifacts"))?;
                    fused
                }
            };
            frame.basis().write_file(&out.join("v_hat.txt"))?;
            println!("wrote {}", out.join("v_hat.txt").display());
            Ok(())
        }
        Command::Benchmark { spec, out } => {
            let text = std::fs::read_to_string(&spec)?;
            let spec = ExperimentSpec::from_key_values(&text)?;
            let records = run_grid(&spec)?;
            let cells = summarize(&records);
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("records.csv"), records_csv(&records))?;
            std::fs::write(out.join("summary.csv"), summary_csv(&cells))?;
            let table = table_text(&cells);
            std::fs::write(out.join("table.txt"), &table)?;
            print!("{table}");
            Ok(())
        }
        Command::Rates {
            q,
            s,
            r,
            p,
            lambda,
            n,
        } => {
            let cls = SparsityClass::new(q, s, p, r, lambda, 1.0).map_err(HarnessError::Core)?;
            print!("{}", rates_text(&cls, n)?);
            Ok(())
        }
    }
}
