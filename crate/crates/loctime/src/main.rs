use std::path::PathBuf;
use std::process::ExitCode;

use loctime::cli::{self, Command};

const USAGE: &str = "\
usage: loctime <command> --config <file> [--out <dir>]

commands:
  path         sample one driver and emit driver.csv + solution.csv
  converge     n-doubling convergence study, emits convergence.json
  determinacy  Monte Carlo of the time of determinacy, emits taus.csv + report.json
  checks       run the invariant battery (nonzero exit on failure)

The config is a flat JSON file; the command given here must match its
\"command\" field. --out defaults to the config's output_dir, then `.`.";

fn run() -> Result<u8, String> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" {
        println!("{USAGE}");
        return Ok(0);
    }
    let command = args[0].parse::<Command>().map_err(|e| e.to_string())?;
    let mut config_path: Option<PathBuf> = None;
    let mut out_dir: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        match args[i].as_str() {
            "--config" => {
                i += 1;
                config_path = Some(PathBuf::from(args.get(i).ok_or("--config needs a path")?));
            }
            "--out" => {
                i += 1;
                out_dir = Some(PathBuf::from(args.get(i).ok_or("--out needs a path")?));
            }
            other => return Err(format!("unknown argument `{other}`\n{USAGE}")),
        }
        i += 1;
    }
    let config_path = config_path.ok_or(format!("--config is required\n{USAGE}"))?;
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| format!("{}: {e}", config_path.display()))?;
    let cfg = cli::parse_config(&text).map_err(|e| e.to_string())?;
    if cfg.command != command {
        return Err(format!(
            "command `{}` does not match the config's command `{}`",
            command.as_str(),
            cfg.command.as_str()
        ));
    }
    let out = out_dir
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let outcome = cli::run_command(&cfg, &out).map_err(|e| e.to_string())?;
    for line in &outcome.lines {
        println!("{line}");
    }
    for file in &outcome.files {
        println!("wrote {}", file.display());
    }
    Ok(if outcome.failed_checks > 0 { 1 } else { 0 })
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
