//! File formats, output and the command-line front end for [`hardy_tree_core`].

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod output;
pub mod plot;

pub use config::{Command, Format, Input, RunConfig};
pub use error::CliError;
pub use output::Report;

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// The rendered output; written to `--out` when given.
    pub text: String,
    pub warnings: Vec<String>,
}

impl Outcome {
    /// [`CliError::Assertion`] when any check in the report failed.
    pub fn check(&self) -> Result<(), CliError> {
        if self.report.failures.is_empty() {
            Ok(())
        } else {
            Err(CliError::Assertion(self.report.failures.join("; ")))
        }
    }
}

/// Runs one command and writes its artifacts, including when assertions failed.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let report = commands::dispatch(cfg)?;
    let text = output::render(cfg, &report);
    let mut warnings = Vec::new();
    if let Some(path) = &cfg.out {
        write(path, &text)?;
        if cfg.svg {
            match report.plot.as_ref().and_then(plot::render_svg) {
                Some(svg) => write(&path.with_extension("svg"), &svg)?,
                None => warnings.push(format!("`{}` has nothing to plot; no SVG written", cfg.command.name())),
            }
        }
    }
    Ok(Outcome { report, text, warnings })
}

fn write(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}
