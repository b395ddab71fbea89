use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ipmm::harness::{self, Method, RunConfig, Suite};
use ipmm::mmesh::ProjectionKind;
use ipmm::sim::{Benchmark, ValidationMode};

#[derive(Parser)]
#[command(name = "ipmm", version, about = "Interface preserving moving mesh benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one benchmark.
    Run(RunArgs),
    /// Run a benchmark at several resolutions in parallel.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma separated list of spacings.
        #[arg(long, value_delimiter = ',', required = true)]
        dxs: Vec<f64>,
    },
    /// Randomized correctness checks.
    Verify {
        suite: Suite,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, value_enum)]
    benchmark: Option<Benchmark>,
    /// Target edge length of the initial mesh.
    #[arg(long)]
    dx: Option<f64>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long)]
    t_end: Option<f64>,
    /// Transport solver(s) for circadv.
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Data transfer used by remeshing.
    #[arg(long, value_enum)]
    projection: Option<Projection>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write VTK snapshots every N steps.
    #[arg(long)]
    snapshot_every: Option<u64>,
    #[arg(long, value_enum)]
    validate: Option<ValidationMode>,
    /// Seed of the mesh jitter.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON run configuration; command line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Projection {
    Average,
    L2,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, String> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => RunConfig::for_benchmark(self.benchmark.unwrap_or(Benchmark::Star2d)),
        };
        if let Some(b) = self.benchmark {
            if self.config.is_some() && b != c.benchmark {
                let base = RunConfig::for_benchmark(b);
                c.dt = base.dt;
                c.t_end = base.t_end;
                c.dx = base.dx;
            }
            c.benchmark = b;
        }
        if let Some(v) = self.dx {
            c.dx = v;
        }
        if let Some(v) = self.dt {
            c.dt = v;
        }
        if let Some(v) = self.t_end {
            c.t_end = v;
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        if let Some(p) = self.projection {
            c.projection = match p {
                Projection::Average => ProjectionKind::LocalAverage,
                Projection::L2 => ProjectionKind::L2Projection,
            };
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.snapshot_every {
            c.snapshot_every = v;
        }
        if let Some(v) = self.validate {
            c.validate = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.check().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cmd: Command) -> Result<ExitCode, String> {
    match cmd {
        Command::Run(args) => {
            let config = args.resolve()?;
            let s = harness::run(&config).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string_pretty(&s).map_err(|e| e.to_string())?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { run, dxs } => {
            let base = run.resolve()?;
            let configs: Vec<RunConfig> = dxs
                .iter()
                .enumerate()
                .map(|(k, &dx)| RunConfig {
                    dx,
                    out: base.out.join(format!("run_{k:02}")),
                    ..base.clone()
                })
                .collect();
            let summaries = harness::sweep(&configs, &base.out).map_err(|e| e.to_string())?;
            for (c, s) in configs.iter().zip(&summaries) {
                println!(
                    "dx={} steps={} cells={} length={} wall={:.3}s",
                    c.dx, s.steps, s.cells_final, s.length_final, s.wall_seconds
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, trials, seed } => {
            let r = harness::verify(suite, trials, seed);
            println!("{}", serde_json::to_string(&r).map_err(|e| e.to_string())?);
            Ok(if r.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
