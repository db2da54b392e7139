use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fraclap::cli::{self, RunConfig};
use fraclap::fracquad::Scheme;
use fraclap::mesh::Mesh;
use fraclap::Result;

#[derive(Parser)]
#[command(name = "fraclap", version, about = "Fractional Laplacians through the heat semigroup")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply the discrete fractional Laplacian to an input datum.
    Apply(RunArgs),
    /// Run an h-refinement convergence study against exact eigenfunctions.
    Convergence(RunArgs),
    /// Integrate the fractional porous-medium equation.
    Pme(RunArgs),
    /// Print mesh statistics.
    MeshInfo(MeshArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Quadrature scheme, overriding the configuration.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
}

#[derive(Args)]
struct MeshArgs {
    /// JSON run configuration providing `domain` and `h`.
    #[arg(long, conflicts_with = "mesh", required_unless_present = "mesh")]
    config: Option<PathBuf>,
    /// Mesh file in the flm text format.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Write the mesh to this flm file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: fraclap::Error| e.to_string())
}

fn run(cli: Cli) -> Result<()> {
    let max_nt = cli::max_nt_from_env()?;
    match cli.command {
        Command::Apply(a) => {
            let cfg = RunConfig::load(&a.config)?;
            for path in cli::cmd_apply(&cfg, &a.out, a.scheme, max_nt)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Convergence(a) => {
            let cfg = RunConfig::load(&a.config)?;
            for (path, report) in cli::cmd_convergence(&cfg, &a.out, a.scheme, max_nt)? {
                println!("{}: slope={:.4} monotone={}", report.bc, report.fitted_slope, report.monotone);
                for w in &report.warnings {
                    println!("warning: {w}");
                }
                println!("wrote {}", path.display());
            }
        }
        Command::Pme(a) => {
            if a.scheme.is_some() {
                return Err(fraclap::Error::InvalidArgument("--scheme is not used by pme".into()));
            }
            let cfg = RunConfig::load(&a.config)?;
            for path in cli::cmd_pme(&cfg, &a.out, max_nt)? {
                println!("wrote {}", path.display());
            }
        }
        Command::MeshInfo(a) => {
            let mesh = match (&a.config, &a.mesh) {
                (Some(c), _) => cli::config_mesh(&RunConfig::load(c)?)?,
                (None, Some(m)) => std::sync::Arc::new(Mesh::from_flm_str(&fs::read_to_string(m)?)?),
                (None, None) => unreachable!("clap enforces one source"),
            };
            print!("{}", cli::mesh_info(&mesh));
            if let Some(out) = &a.out {
                fs::write(out, mesh.to_flm_string())?;
            }
        }
    }
    Ok(())
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", one_line(first.trim_start_matches("error:")));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
