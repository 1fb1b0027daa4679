use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vilenkin_cli::commands::{execute, CliError};
use vilenkin_cli::config::{parse_config_text, RunConfig};

/// Vilenkin-Fourier analysis: transforms, kernels, Lebesgue constants,
/// p-atoms, counterexample martingales and experiment scans.
///
/// Settings come from `--config` (a key=value file, or any artifact written
/// earlier), then from flags. Every artifact starts with the resolved
/// settings, so `vilenkin --config ARTIFACT` reproduces it.
///
/// Exit status: 0 on success, 1 when a check fails or a scan reports a
/// violated verdict, 2 on usage or input errors.
#[derive(Parser, Debug)]
#[command(name = "vilenkin", version)]
struct Cli {
    /// Settings file, or an artifact whose embedded settings should be reused.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Generator sequence: `2^`, `(2,3)^`, `2,3,4` (last entry repeated) or `[2,3,4]`.
    #[arg(long, global = true, value_name = "GENERATORS")]
    m: Option<String>,

    /// Resolution; scans accept a comma-separated list.
    #[arg(long = "N", global = true, value_name = "N[,N...]")]
    resolution: Option<String>,

    /// Kernel index for `dirichlet`.
    #[arg(long, global = true)]
    n: Option<u64>,

    /// Exponent of the quasi-norms and atoms.
    #[arg(long, global = true)]
    p: Option<f64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, env = "VILENKIN_OUT", value_name = "DIR")]
    out: Option<PathBuf>,

    /// Artifact formats: csv, json, svg, bin (comma-separated).
    #[arg(long, global = true, value_name = "FORMAT[,FORMAT...]")]
    format: Option<String>,

    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Forward or inverse transform of a function file (CSV or binary).
    Transform {
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// Treat the input as a spectrum and synthesise the function.
        #[arg(long)]
        inverse: bool,
    },
    /// Emit D_n and check the closed form and, for n = M_k, the indicator identity.
    Dirichlet,
    /// Exact Lebesgue constants with their two-sided bounds.
    Lebesgue {
        /// Only n below this bound.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Generate a random p-atom, or validate one given with --input.
    Atom {
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// Rank r of the support I_r(x).
        #[arg(long)]
        rank: Option<usize>,
        /// Index of a point x of the support.
        #[arg(long)]
        representative: Option<usize>,
        /// Random values on `leaves` (rank-N cells) or `children` (rank-(r+1) cells).
        #[arg(long)]
        cells: Option<String>,
    },
    /// Build a counterexample martingale and emit its coefficients.
    Counterexample {
        /// Indices alpha_k (comma-separated); default M_{2^k} + 1.
        #[arg(long)]
        alphas: Option<String>,
        /// divergence, modulus_sharpness or explicit.
        #[arg(long)]
        rule: Option<String>,
        /// Weights for --rule explicit (comma-separated).
        #[arg(long)]
        lambdas: Option<String>,
        /// Growth function: log, const:C or pow:E.
        #[arg(long)]
        phi: Option<String>,
    },
    /// Run an experiment scan by name.
    Scan(ScanArgs),
    /// Run the built-in checks of small closed-form examples.
    Selftest,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// atom-ratio, divergence, boundedness, simon, modulus, supp-measure,
    /// kernel-identity, kernel-lower, kernel-upper or lebesgue.
    name: String,
    #[arg(long)]
    trials: Option<usize>,
    /// Index or function variant of the scan.
    #[arg(long)]
    variant: Option<String>,
    /// `alphas` or `mn` (modulus scan).
    #[arg(long)]
    indices: Option<String>,
    #[arg(long)]
    cells: Option<String>,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    stability_factor: Option<f64>,
    #[arg(long)]
    growth_run: Option<usize>,
    #[arg(long)]
    growth_total: Option<f64>,
    #[arg(long)]
    record_increases: Option<usize>,
    #[arg(long)]
    max_cells: Option<u64>,
}

fn set<T: ToString>(pairs: &mut BTreeMap<String, String>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        pairs.insert(key.to_string(), v.to_string());
    }
}

fn set_path(pairs: &mut BTreeMap<String, String>, key: &str, value: Option<PathBuf>) {
    set(pairs, key, value.map(|p| p.display().to_string()));
}

fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let mut pairs = match &cli.config {
        Some(path) => {
            let text = fs::read(path)
                .map_err(|e| CliError(format!("cannot read {}: {e}", path.display())))?;
            let text = String::from_utf8(text).map_err(|_| {
                CliError(format!(
                    "{} is not a text config or artifact",
                    path.display()
                ))
            })?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    if let Some(cmd) = cli.command {
        let name = match &cmd {
            Cmd::Transform { .. } => "transform",
            Cmd::Dirichlet => "dirichlet",
            Cmd::Lebesgue { .. } => "lebesgue",
            Cmd::Atom { .. } => "atom",
            Cmd::Counterexample { .. } => "counterexample",
            Cmd::Scan(_) => "scan",
            Cmd::Selftest => "selftest",
        };
        if pairs.get("command").is_some_and(|c| c != name) {
            return Err(CliError(format!(
                "the config file is for {}, not {name}",
                pairs["command"]
            )));
        }
        pairs.insert("command".into(), name.into());
        match cmd {
            Cmd::Transform { input, inverse } => {
                set_path(&mut pairs, "input", input);
                set(&mut pairs, "inverse", inverse.then_some(true));
            }
            Cmd::Dirichlet | Cmd::Selftest => {}
            Cmd::Lebesgue { limit } => set(&mut pairs, "limit", limit),
            Cmd::Atom {
                input,
                rank,
                representative,
                cells,
            } => {
                set_path(&mut pairs, "input", input);
                set(&mut pairs, "rank", rank);
                set(&mut pairs, "representative", representative);
                set(&mut pairs, "cells", cells);
            }
            Cmd::Counterexample {
                alphas,
                rule,
                lambdas,
                phi,
            } => {
                set(&mut pairs, "alphas", alphas);
                set(&mut pairs, "rule", rule);
                set(&mut pairs, "lambdas", lambdas);
                set(&mut pairs, "phi", phi);
            }
            Cmd::Scan(a) => {
                pairs.insert("scan".into(), a.name);
                set(&mut pairs, "trials", a.trials);
                set(&mut pairs, "variant", a.variant);
                set(&mut pairs, "indices", a.indices);
                set(&mut pairs, "cells", a.cells);
                set(&mut pairs, "limit", a.limit);
                set(&mut pairs, "alphas", a.alphas);
                set(&mut pairs, "phi", a.phi);
                set(&mut pairs, "stability_factor", a.stability_factor);
                set(&mut pairs, "growth_run", a.growth_run);
                set(&mut pairs, "growth_total", a.growth_total);
                set(&mut pairs, "record_increases", a.record_increases);
                set(&mut pairs, "max_cells", a.max_cells);
            }
        }
    }
    set(&mut pairs, "m", cli.m);
    set(&mut pairs, "N", cli.resolution);
    set(&mut pairs, "n", cli.n);
    set(&mut pairs, "p", cli.p);
    set(&mut pairs, "seed", cli.seed);
    set_path(&mut pairs, "out", cli.out);
    set(&mut pairs, "format", cli.format);
    Ok(RunConfig::from_pairs(&pairs)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = resolve(cli).and_then(|cfg| execute(&cfg));
    match outcome {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for path in &report.artifacts {
                println!("wrote {}", path.display());
            }
            if report.violated {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
