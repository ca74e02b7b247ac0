use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hva_lab::config::{self, Experiment};
use hva_lab::RunOptions;

/// Hamiltonian variational ansatz experiments.
///
/// Every subcommand reads an optional flat TOML file and then `--key value`
/// overrides (dashes or underscores). Run `hva-lab keys <subcommand>` to list
/// the keys a subcommand accepts.
#[derive(Parser)]
#[command(name = "hva-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key-value TOML file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Results directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Also write SVG line plots of the summary tables.
    #[arg(long)]
    emit_plots: bool,
    /// Full-scale defaults: more samples and larger systems.
    #[arg(long)]
    heavy: bool,
    /// Configuration overrides as `--key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One VQE run with trace and fidelity against the exact ground state.
    Optimize(Common),
    /// Averaged entanglement spectra of random-parameter circuits.
    SpectrumSample(Common),
    /// Entanglement spectrum at milestones of one optimization.
    SpectrumDynamics(Common),
    /// Entropy after every layer during one optimization.
    EntropyDynamics(Common),
    /// Convergence ratio and iteration counts versus depth.
    Overparam(Common),
    /// Single-term gradient variance versus system size.
    GradVariance(Common),
    /// Depth N/2 infidelity across order-parameter values.
    SweepOrder(Common),
    /// Modified Haldane-Shastry chain at depth N.
    Mhs(Common),
    /// List the configuration keys a subcommand accepts.
    Keys { experiment: String },
}

/// Moves `--out`, `--config`, `--emit-plots` and `--heavy` that appear after
/// the first override out of the trailing list, so flag order does not matter.
fn hoist_flags(c: &mut Common) {
    let mut rest = Vec::new();
    let mut args = std::mem::take(&mut c.overrides).into_iter();
    while let Some(a) = args.next() {
        let (flag, inline) = match a.split_once('=') {
            Some((f, v)) => (f.to_string(), Some(v.to_string())),
            None => (a.clone(), None),
        };
        match flag.as_str() {
            "--emit-plots" if inline.is_none() => c.emit_plots = true,
            "--heavy" if inline.is_none() => c.heavy = true,
            "--out" | "--config" => match inline.or_else(|| args.next()) {
                Some(v) if flag == "--out" => c.out = PathBuf::from(v),
                Some(v) => c.config = Some(PathBuf::from(v)),
                None => rest.push(a),
            },
            _ => rest.push(a),
        }
    }
    c.overrides = rest;
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::Keys { experiment } => {
            return match experiment.parse::<Experiment>() {
                Ok(e) => {
                    println!("{}", e.keys().join("\n"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            };
        }
        Command::Optimize(c) => (Experiment::Optimize, c),
        Command::SpectrumSample(c) => (Experiment::SpectrumSample, c),
        Command::SpectrumDynamics(c) => (Experiment::SpectrumDynamics, c),
        Command::EntropyDynamics(c) => (Experiment::EntropyDynamics, c),
        Command::Overparam(c) => (Experiment::Overparam, c),
        Command::GradVariance(c) => (Experiment::GradVariance, c),
        Command::SweepOrder(c) => (Experiment::SweepOrder, c),
        Command::Mhs(c) => (Experiment::Mhs, c),
    };
    let mut common = common;
    hoist_flags(&mut common);
    let cfg = match config::load(experiment, common.config.as_deref(), &common.overrides)
        .and_then(|c| hva_lab::resolve(experiment, &c, common.heavy).map(|_| c))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!(
                "usage: hva-lab {experiment} [--config FILE] [--out DIR] [--emit-plots] [--heavy] [--KEY VALUE ...]"
            );
            eprintln!("accepted keys: {}", experiment.keys().join(", "));
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        out: Some(common.out.clone()),
        emit_plots: common.emit_plots,
        heavy: common.heavy,
    };
    match hva_lab::run(experiment, &cfg, &opts) {
        Ok(m) => {
            log::info!(
                "{experiment} finished in {:.1} s; {} files in {}",
                m.wall_clock_seconds,
                m.outputs.len(),
                common.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
