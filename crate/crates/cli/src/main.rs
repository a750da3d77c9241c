use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use spotvol::experiment::{
    read_summary_csv, render_table, run_experiment, timing_report, write_outputs, write_rows,
    ExperimentSpec, Replications,
};
use spotvol::io::{read_path_csv, write_path_csv, write_series_csv, write_truth_csv};
use spotvol::sim::simulate_heston;
use spotvol::{Error, MethodSpec};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "spotvol", version, about = "Spot volatility matrix eigenvalue estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Experiment spec (TOML).
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    /// Bundled spec, used when --spec is absent.
    #[arg(long, default_value = "benchmark-heston")]
    preset: String,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and its ground truth.
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        /// Grid size; defaults to the first grid size of the spec.
        #[arg(long)]
        n0: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Estimate the spot matrix and its spectrum from a path CSV.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Method label, e.g. QV, BP, F1-FS3, F2C-FS.
        #[arg(long, default_value = "QV")]
        method: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a Monte-Carlo study and write summary tables.
    Experiment {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        workers: Option<usize>,
        /// Restrict to these grid sizes (replication counts are kept per size).
        #[arg(long, value_delimiter = ',')]
        n0: Vec<usize>,
        /// Restrict to these method labels.
        #[arg(long, value_delimiter = ',')]
        method: Vec<String>,
        /// Also write a median-of-3 timing table.
        #[arg(long)]
        timing: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render a summary CSV as a table.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn load_spec(args: &SpecArgs) -> spotvol::Result<ExperimentSpec> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            ExperimentSpec::from_toml(&text)?
        }
        None => ExperimentSpec::preset(&args.preset)?,
    };
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn restrict(spec: &mut ExperimentSpec, n0: &[usize], methods: &[String]) -> spotvol::Result<()> {
    if !n0.is_empty() {
        let counts: Vec<usize> = (0..spec.grid_sizes.len()).map(|i| spec.replications_for(i)).collect();
        let mut sizes = Vec::new();
        let mut reps = Vec::new();
        for &n in n0 {
            let r = spec
                .grid_sizes
                .iter()
                .position(|&g| g == n)
                .map_or(counts[0], |i| counts[i]);
            sizes.push(n);
            reps.push(r);
        }
        spec.grid_sizes = sizes;
        spec.replications = Replications::PerGrid(reps);
    }
    if !methods.is_empty() {
        spec.methods = methods
            .iter()
            .map(|m| m.parse::<MethodSpec>())
            .collect::<spotvol::Result<_>>()?;
    }
    spec.validate()
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { spec, n0, out } => {
            let spec = load_spec(&spec)?;
            let n0 = n0.unwrap_or(spec.grid_sizes[0]);
            let model = spec.model.spec_for(n0)?;
            let (path, truth) = simulate_heston(&model, spec.jumps.as_ref(), spec.seed)?;
            std::fs::create_dir_all(&out)?;
            write_path_csv(&path, create(&out.join("path.csv"))?)?;
            write_truth_csv(&truth, create(&out.join("variance.csv"))?)?;
            write_series_csv(
                &truth.sigma,
                create(&out.join("truth_sigma.csv"))?,
                create(&out.join("truth_spectrum.csv"))?,
            )?;
            eprintln!("wrote path and ground truth for N0={n0} to {}", out.display());
        }
        Command::Estimate { input, method, out } => {
            let method: MethodSpec = method.parse()?;
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let path = read_path_csv(file)?;
            let series = spotvol::estimate_path(&path, &method, None)?;
            std::fs::create_dir_all(&out)?;
            write_series_csv(
                &series,
                create(&out.join("sigma.csv"))?,
                create(&out.join("spectrum.csv"))?,
            )?;
            eprintln!("{}: {} estimates written to {}", method, series.len(), out.display());
        }
        Command::Experiment {
            spec,
            workers,
            n0,
            method,
            timing,
            out,
        } => {
            let mut spec = load_spec(&spec)?;
            if workers.is_some() {
                spec.workers = workers;
            }
            restrict(&mut spec, &n0, &method)?;
            let result = run_experiment(&spec)?;
            write_outputs(&spec, &result, &out)?;
            print!("{}", render_table(&result.summary));
            for r in result.summary.iter().filter(|r| r.failures > 0) {
                let msg = result
                    .records_for(&r.method, r.n0)
                    .find(|x| x.failed())
                    .map(|x| x.error.clone())
                    .unwrap_or_default();
                eprintln!("{} at N0={}: {} failed replications ({msg})", r.method, r.n0, r.failures);
            }
            if timing {
                let rows = timing_report(&spec)?;
                write_rows(&rows, create(&out.join("timing.csv"))?)?;
                for r in &rows {
                    println!("{:<12} N0={:<6} {:>10.3} ms", r.method, r.n0, r.median_ms);
                }
            }
        }
        Command::Report { input } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let rows = read_summary_csv(file)?;
            print!("{}", render_table(&rows));
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_)) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
