use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gpe_cli::commands::print_compare;
use gpe_cli::{cmd_compare, cmd_evolve, cmd_kernel, cmd_verify, cmd_wavepacket, CliError, ScenarioSource};

#[derive(Parser)]
#[command(name = "gpe-sc", version, about = "Semiclassical Gross-Pitaevskii scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file (flat `section.key = value`)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named preset applied before the config file
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Override one key, e.g. --set params.g=0.1 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    kernel_form: Option<FormArg>,
    /// Relative tolerance of the packet integrator
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Derived,
    Printed,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the packet equations and write the trajectory
    Evolve,
    /// Evaluate the packet wavefunction at the output times
    Wavepacket,
    /// Assemble the propagator matrix
    Kernel,
    /// Hydrodynamic residuals, short-time limit and completeness checks
    Verify,
    /// Errors against the split-step reference
    Compare,
    /// Print the resolved configuration
    Config,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let source = ScenarioSource {
        preset: cli.preset,
        config: cli.config,
        sets: cli.sets,
        out: cli.out,
        kernel_form: cli.kernel_form.map(|f| match f {
            FormArg::Derived => "derived".to_string(),
            FormArg::Printed => "printed".to_string(),
        }),
        tol: cli.tol,
    };
    let sc = source.load()?;
    match cli.command {
        Command::Evolve => println!("{}", cmd_evolve(&sc)?),
        Command::Wavepacket => {
            for r in cmd_wavepacket(&sc)? {
                println!(
                    "t = {:<8.4} norm = {:.12}  |psi(q)| = {:.12} (expected {:.12})  {}",
                    r.t,
                    r.norm,
                    r.center_modulus,
                    r.expected_center_modulus,
                    r.path.display()
                );
            }
        }
        Command::Kernel => println!("{}", cmd_kernel(&sc)?),
        Command::Verify => println!("{}", cmd_verify(&sc)?),
        Command::Compare => {
            let (rows, path) = cmd_compare(&sc)?;
            println!("{}", print_compare(&rows, &path));
        }
        Command::Config => print!("{}", sc.resolved()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
