use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use skelkit::bench::{self, Experiment, Geometry, RunConfig};
use skelkit::skel::Mode;

/// Recursive skeletonization experiments.
///
/// Set SKELKIT_THREADS to cap the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "skelkit", version)]
struct Cli {
    /// apply_bench, solve_bench, scatter_demo or sweep.
    experiment: Experiment,
    /// circle, square, sphere, cube, ellipse[:a,b] or trefoil_scatterers[:delta].
    #[arg(long, default_value = "circle")]
    geometry: Geometry,
    /// Comma-separated problem sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    /// laplace2d, laplace3d, helmholtz2d or helmholtz3d, optionally with a
    /// layer suffix such as helmholtz2d:double.
    #[arg(long, default_value = "laplace2d")]
    kernel: String,
    /// Size in wavelengths (Helmholtz only).
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the sparse embedding in Matrix Market format.
    #[arg(long)]
    export_mm: Option<PathBuf>,
    #[arg(long, default_value = "proxy")]
    mode: Mode,
    /// Diagonal shift added to the finest-level blocks before inversion.
    #[arg(long)]
    regularize: Option<f64>,
    #[arg(long, default_value_t = 64)]
    leaf_size: usize,
    /// GMRES relative residual tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    if let Ok(s) = std::env::var("SKELKIT_THREADS") {
        match s.parse::<usize>() {
            Ok(t) if t > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => {
                eprintln!("error: SKELKIT_THREADS must be a positive integer, got {s:?}");
                return ExitCode::from(2);
            }
        }
    }

    let config = RunConfig {
        experiment: cli.experiment,
        geometry: cli.geometry,
        ns: cli.n,
        eps: cli.eps,
        kernel: cli.kernel,
        omega: cli.omega,
        seed: cli.seed,
        mode: cli.mode,
        regularize: cli.regularize,
        leaf_size: cli.leaf_size,
        tol: cli.tol,
        out: cli.out,
        export_mm: cli.export_mm,
    };

    match bench::run(&config) {
        Ok(records) => {
            if config.out.is_none() {
                if let Err(e) = bench::write_csv(&records, std::io::stdout().lock()) {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
            if records.len() >= 4 {
                match bench::fit_compression_exponent(&records) {
                    Ok(p) => log::info!("compression time grows like N^{p:.2}"),
                    Err(e) => log::warn!("{e}"),
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
