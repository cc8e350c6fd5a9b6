use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lookahead_traffic::harness::{self, parse_config_with, Preset};
use lookahead_traffic::lattice::{LatticeState, ModelParams};
use lookahead_traffic::oracle::{self, Distribution};
use lookahead_traffic::{Error, Result};

#[derive(Parser)]
#[command(
    version,
    about = "Look-ahead cellular-automaton traffic: stochastic, mesoscopic and continuum models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Run a named preset, overriding keys with `--key value`.
    Preset {
        name: String,
        /// Use paper-scale defaults (N = 700, n = 5000) instead of desk scale.
        #[arg(long)]
        paper_scale: bool,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
        overrides: Vec<String>,
    },
    /// Print exact small-ring reference values as CSV.
    Oracle {
        /// one-step, two-step, continuous or jump
        name: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => harness::run_config_file(&config).map(|(_, _, files)| files),
        Command::Preset {
            name,
            paper_scale,
            overrides,
        } => run_preset(&name, paper_scale, &overrides),
        Command::Oracle { name } => {
            return match oracle_table(&name) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    };
    match result {
        Ok(files) => {
            for p in files.paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn run_preset(name: &str, paper_scale: bool, overrides: &[String]) -> Result<harness::OutputFiles> {
    let preset: Preset = name.parse().map_err(|m: String| Error::Config {
        key: "preset".into(),
        line: 0,
        message: m,
    })?;
    let text = overrides_to_doc(overrides, paper_scale)?;
    let spec = parse_config_with(&text, Some(preset))?;
    harness::run_experiment(&spec).map(|(_, files)| files)
}

/// Turn `--key value` / `--key=value` pairs into a config document, one key per line.
fn overrides_to_doc(args: &[String], paper_scale: bool) -> Result<String> {
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(Error::ConfigSyntax(format!("expected --key, found {arg:?}")));
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::ConfigSyntax(format!("missing value for --{flag}")))?;
                (flag.to_string(), v.clone())
            }
        };
        pairs.push((key, value));
    }
    let mut doc = String::new();
    if !paper_scale && !pairs.iter().any(|(k, _)| k == "scale") {
        doc.push_str("scale = \"desk\"\n");
    }
    for (key, value) in pairs {
        doc.push_str(&format!("{key} = {}\n", toml_value(&value)));
    }
    Ok(doc)
}

/// Bare words become strings; anything that already parses as a value is kept.
fn toml_value(raw: &str) -> String {
    let probe = format!("v = {raw}");
    if probe.parse::<toml::Table>().is_ok() {
        raw.to_string()
    } else {
        format!("{raw:?}")
    }
}

fn oracle_table(name: &str) -> Result<String> {
    let params = ModelParams::new(6, 2, 2.0, 1.0, 1.0, 0.5)?;
    let ic = LatticeState::new(vec![1, 1, 0, 1, 0, 0])?;
    let start = Distribution::point(&ic)?;
    let values = match name {
        "one-step" => oracle::propagate_metropolis(&start, &params, 1).mean_density(),
        "two-step" => oracle::propagate_metropolis(&start, &params, 2).mean_density(),
        "continuous" => oracle::propagate_continuous(&start, &params, 1.0).mean_density(),
        "jump" => oracle::jump_probabilities(&ic, &params),
        _ => {
            return Err(Error::InvalidParams(format!(
                "unknown oracle {name:?}; expected one-step, two-step, continuous or jump"
            )))
        }
    };
    let mut out = String::from("# N = 6, M = 2, beta = 2, c0 = 1, dt = 0.5, initial cells 110100\ncell,value\n");
    for (k, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{v:?}\n", k + 1));
    }
    Ok(out)
}
