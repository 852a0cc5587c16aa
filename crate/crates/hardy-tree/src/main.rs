use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hardy_tree::{run, Command, Format, RunConfig};

/// Hardy-type operators on weighted metric trees: norms, approximation numbers,
/// partition counts and the acceptance suite.
#[derive(Debug, Parser)]
#[command(name = "hardy-tree", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Tree JSON file, or `fixture:<name>` for a bundled tree.
    #[arg(long)]
    input: Option<String>,
    /// Exponent in [1, inf]; `inf` is accepted.
    #[arg(long, default_value = "2", value_parser = parse_p)]
    p: f64,
    /// Quadrature cells per discretized subtree.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[arg(long, default_value_t = 0.2)]
    eps_start: f64,
    #[arg(long, default_value_t = 0.5)]
    eps_factor: f64,
    #[arg(long, default_value_t = 5)]
    eps_count: usize,
    /// Number of approximation numbers.
    #[arg(long, default_value_t = 20)]
    n_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write an SVG plot next to `--out`.
    #[arg(long)]
    svg: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_p(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|e| format!("{e}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = RunConfig::new(
        cli.command,
        cli.input.as_deref(),
        cli.p,
        cli.grid,
        (cli.eps_start, cli.eps_factor, cli.eps_count),
        cli.n_max,
        cli.out,
        cli.format,
        cli.svg,
        cli.seed,
    );
    let result = cfg.and_then(|cfg| {
        let out = run(&cfg)?;
        if cfg.out.is_none() {
            print!("{}", out.text);
        }
        for w in &out.warnings {
            eprintln!("warning: {w}");
        }
        out.check()
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
