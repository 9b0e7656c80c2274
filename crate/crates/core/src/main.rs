use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opgeom::cli::{run, ConfigOverrides, Experiment, ExperimentConfig};
use opgeom::operators::Family;

#[derive(Parser)]
#[command(name = "opgeom", version, about = "Iterates and geometric series of positive linear operators on C_psi[0,1]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ‖L^k f − B₁f‖_ψ against the envelope b^k‖f − B₁f‖_ψ
    Iterates(Flags),
    /// ‖α_n G_n(ψf) − 2F(f)‖_ψ
    Geom(Flags),
    /// ‖(1/ν_n)(L_n f − f) − ½f″ψ‖_ψ
    Voronovskaya(Flags),
    /// Premise and reconstruction checks of the inverse theorem
    InverseVoronovskaya(Flags),
    /// M⁴/M², η_n and the fourth-moment condition per n
    Conditions(Flags),
    /// Invariant suite; exits nonzero if any row fails
    Invariants(Flags),
}

#[derive(Args)]
struct Flags {
    /// bernstein | durrmeyer | mkz | mkz-reflected | mkz-symmetric
    #[arg(long)]
    family: Option<Family>,
    /// Comma-separated increasing orders, e.g. 4,8,16
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<u32>>,
    #[arg(long)]
    rho: Option<f64>,
    /// Registry name: e0..e4, psi, sin_pi, exp, abs_half, osc
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// MKZ point-evaluation tolerance
    #[arg(long)]
    truncation_eps: Option<f64>,
    /// Largest iterate index
    #[arg(long)]
    k_max: Option<u32>,
    /// JSON file with the same keys; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV path; `<output>.meta.json` is written beside it. Stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

impl Flags {
    fn overrides(self, experiment: Experiment) -> opgeom::Result<ConfigOverrides> {
        let file = match &self.config {
            Some(p) => ConfigOverrides::from_json_file(p)?,
            None => ConfigOverrides::default(),
        };
        let flags = ConfigOverrides {
            experiment: Some(experiment),
            family: self.family,
            n_list: self.n_list,
            rho: self.rho,
            function: self.function,
            grid_size: self.grid_size,
            eps: self.eps,
            output_path: self.output,
            truncation_eps: self.truncation_eps,
            k_max: self.k_max,
            jobs: self.jobs,
        };
        Ok(file.overlay(flags))
    }
}

fn execute(cli: Cli) -> opgeom::Result<bool> {
    let (experiment, flags) = match cli.command {
        Command::Iterates(f) => (Experiment::Iterates, f),
        Command::Geom(f) => (Experiment::Geom, f),
        Command::Voronovskaya(f) => (Experiment::Voronovskaya, f),
        Command::InverseVoronovskaya(f) => (Experiment::InverseVoronovskaya, f),
        Command::Conditions(f) => (Experiment::Conditions, f),
        Command::Invariants(f) => (Experiment::Invariants, f),
    };
    let config = ExperimentConfig::resolve(flags.overrides(experiment)?)?;
    let report = run(&config)?;
    match &config.output_path {
        Some(path) => {
            let meta = report.save(path)?;
            eprintln!("wrote {} and {} ({:.2}s)", path.display(), meta.display(), report.wall_seconds);
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("invariant suite: failures recorded");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
