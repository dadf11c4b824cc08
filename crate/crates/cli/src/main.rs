mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rainbow_core::geometry::PerturbationKind;

use config::{Method, Normalize};

/// Resonant spectra, robustness studies and filter-bank transforms for
/// graded arrays of subwavelength resonators.
#[derive(Debug, Parser)]
#[command(name = "rainbow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config with `material`, `array` and optional `run` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Primary output file; side outputs are written next to it. Defaults
    /// to stdout (side outputs skipped).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Solver {
    /// Capacitance model.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Icosphere refinement level for the boundary-element method.
    #[arg(long)]
    pub refine: Option<u32>,
    /// Richardson-extrapolate the boundary-element matrix over two levels.
    #[arg(long)]
    pub extrapolate: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Resonant frequencies `ω_n` of an array.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
    },
    /// Generalized capacitance matrix, with `C` and `V` as side outputs.
    Cap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
    },
    /// Seeded Monte Carlo sweep of random perturbations (dilute model).
    Perturb {
        #[command(flatten)]
        common: Common,
        /// Perturbation kind: size, position or removal.
        #[arg(long)]
        mode: Option<PerturbationKind>,
        /// Standard deviations, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sigma: Option<Vec<f64>>,
        /// Trials per standard deviation.
        #[arg(long)]
        trials: Option<usize>,
        /// RNG seed; equal seeds give byte-identical tables.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Removes resonators and checks eigenvalue interlacing.
    Remove {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        /// 1-based resonator positions, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        indices: Option<Vec<usize>>,
    },
    /// Eigenvalue bounds for large arrays of identical spheres with `ε = c/N`.
    Scale {
        #[command(flatten)]
        common: Common,
        /// Array sizes `N`, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sizes: Option<Vec<usize>>,
        /// Scaling constant in `ε = c/N`.
        #[arg(long)]
        c: Option<f64>,
        /// Radius of every sphere.
        #[arg(long)]
        radius: Option<f64>,
        /// Anchor spacing `|z_{j+1} - z_j|`.
        #[arg(long)]
        spacing: Option<f64>,
    },
    /// Filter-bank outputs, frequency responses and response gaps.
    Filter {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        /// Spectrum CSV written by `rainbow spectrum`, used instead of the array.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Signal file (`sample_rate_hz=<value>` then one sample per line).
        #[arg(long)]
        signal: Option<PathBuf>,
        /// Use a unit impulse of this many samples as the signal.
        #[arg(long)]
        impulse: Option<usize>,
        /// Sample rate in Hz; must match the signal file when both are given.
        #[arg(long)]
        sample_rate: Option<f64>,
        /// Kernel truncation: envelope threshold relative to its peak.
        #[arg(long)]
        trunc_tol: Option<f64>,
        /// Kernel amplitude convention.
        #[arg(long, value_enum)]
        normalize: Option<Normalize>,
        /// Resonator labels to drop before building the kernels. With
        /// `--spectrum`, modes peaking on these resonators are dropped.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        indices: Option<Vec<usize>>,
    },
    /// Leading-order mode field `Σ_i (V v_n)_i S[ψ_i]` along a segment.
    ModeField {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: Solver,
        /// Mode index `n` (1-based, ascending frequency).
        #[arg(long)]
        mode_index: Option<usize>,
        /// Segment start `x,y,z`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        from: Option<[f64; 3]>,
        /// Segment end `x,y,z`.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        to: Option<[f64; 3]>,
        /// Number of evaluation points.
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn parse_point(text: &str) -> Result<[f64; 3], String> {
    let parts = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|p| format!("expected x,y,z, got {} values", p.len()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum { common, solver } => commands::spectrum(&common, &solver),
        Command::Cap { common, solver } => commands::cap(&common, &solver),
        Command::Perturb {
            common,
            mode,
            sigma,
            trials,
            seed,
        } => commands::perturb(&common, mode, sigma, trials, seed),
        Command::Remove {
            common,
            solver,
            indices,
        } => commands::remove(&common, &solver, indices),
        Command::Scale {
            common,
            sizes,
            c,
            radius,
            spacing,
        } => commands::scale(&common, sizes, c, radius, spacing),
        Command::Filter {
            common,
            solver,
            spectrum,
            signal,
            impulse,
            sample_rate,
            trunc_tol,
            normalize,
            indices,
        } => commands::filter(
            &common,
            &solver,
            commands::FilterFlags {
                spectrum,
                signal,
                impulse,
                sample_rate,
                trunc_tol,
                normalize,
                indices,
            },
        ),
        Command::ModeField {
            common,
            solver,
            mode_index,
            from,
            to,
            samples,
        } => commands::mode_field(&common, &solver, mode_index, from, to, samples),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
