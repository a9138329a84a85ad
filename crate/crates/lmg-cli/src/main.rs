//! The `lmg` binary: parse flags, resolve the sweep, run it, write the
//! table, and print the summary. Exit codes: 0 success, 2 configuration
//! error, 3 numerical failure, 4 IO error.

use clap::{Parser, Subcommand};
use lmg_cli::commands;
use lmg_cli::config::{self, RawArgs};
use lmg_cli::CliError;

const ABOUT: &str = "Exact diagonalization laboratory for the LMG model: spectra, \
quantum Fisher information across the excited-state transition, and the two \
critical-magnetometry protocols built on it.";

const KEY_HELP: &str = "\
CONFIG KEYS (file lines `key = value`; flags override the file):
  n               system sizes, comma separated
  h               single field value (one-point grid)
  h-start/h-stop/h-count
                  inclusive uniform field grid
  fractions       eigenstate index fractions, k = floor(f*N)
  bits            phase register size d
  exact           true for the infinite-register limit
  dt              time step, a float or the literal `pi`
  shots           phase estimation repetitions per size
  trials          independently seeded repetitions
  seed            base RNG seed (required for protocol2)
  beta            Gibbs inverse temperature (default 0.1/N)
  source          probe preparation, alldown or gibbs
  parity          sector selection, even, odd, or both
  bins            histogram bin count
  out             output file path
  format          csv or json
  jobs            worker threads (never changes the results)
  upsilon/window/background/contrast
                  noise profile exponents
  gamma/mu/nu     reference scaling exponents for predictions
  pert            builtin perturbation: sz, sx, sx2, plaw:<alpha>
  strength        perturbation strength g
  pert-file       dense symmetric (N+1)^2 matrix, whitespace separated,
                  row major over the ascending-m basis m = -N/2..N/2
  pert-file-next  companion matrix for size N+1 (enables the ratio)
";

#[derive(Parser)]
#[command(name = "lmg", version, about = ABOUT, after_help = KEY_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue dump over sizes, sectors, and fields.
    Spectrum(RawArgs),
    /// Density of states histogram at one size and field.
    Dos(RawArgs),
    /// QFI of selected eigenstates over the field grid.
    QfiSweep(RawArgs),
    /// QFI across the whole spectrum at fixed fields.
    QfiEnergy(RawArgs),
    /// Finite-size scaling exponents of the full suite.
    Exponents(RawArgs),
    /// Magnetization-protocol variance against the quantum limit.
    Protocol1(RawArgs),
    /// Phase-difference protocol Monte Carlo.
    Protocol2(RawArgs),
    /// Register sizes beating the reference accuracies.
    Thresholds(RawArgs),
    /// Noise scaling and Hamiltonian-perturbation checks.
    Robustness(RawArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &RawArgs) {
        match self {
            Command::Spectrum(raw) => ("spectrum", raw),
            Command::Dos(raw) => ("dos", raw),
            Command::QfiSweep(raw) => ("qfi-sweep", raw),
            Command::QfiEnergy(raw) => ("qfi-energy", raw),
            Command::Exponents(raw) => ("exponents", raw),
            Command::Protocol1(raw) => ("protocol1", raw),
            Command::Protocol2(raw) => ("protocol2", raw),
            Command::Thresholds(raw) => ("thresholds", raw),
            Command::Robustness(raw) => ("robustness", raw),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let (name, raw) = cli.command.parts();
    if let Err(err) = execute(name, raw) {
        eprintln!("lmg: {err}");
        std::process::exit(err.exit_code());
    }
}

fn execute(name: &str, raw: &RawArgs) -> Result<(), CliError> {
    let config = config::resolve(name, raw)?;
    let output = match config.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|err| CliError::config(format!("jobs: {err}")))?;
            pool.install(|| commands::run(&config))?
        }
        None => commands::run(&config)?,
    };
    let mut path = config.output.clone();
    if path.extension().is_none() {
        path.set_extension(config.format.extension());
    }
    // Render fully before touching the filesystem; a failing sweep must
    // not leave a partial file behind.
    let text = output.table.render(config.format);
    std::fs::write(&path, text)?;
    eprintln!("wrote {}", path.display());
    for line in output.summary {
        println!("{line}");
    }
    Ok(())
}
