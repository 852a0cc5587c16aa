//! Run configuration shared by all subcommands.

use std::fmt::Write as _;
use std::path::PathBuf;

use hardy_tree_core::partition::geometric_schedule;
use hardy_tree_core::{NormOptions, PNorm, Resolution};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::fixtures;
use crate::format::{self, LoadedTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Norm,
    Afun,
    Approx,
    Partition,
    Scan,
    Sigma,
    Bounds,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Norm => "norm",
            Command::Afun => "afun",
            Command::Approx => "approx",
            Command::Partition => "partition",
            Command::Scan => "scan",
            Command::Sigma => "sigma",
            Command::Bounds => "bounds",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Where the tree comes from: a file, or a bundled fixture written `fixture:<name>`.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    File(PathBuf),
    Fixture(&'static str),
}

impl Input {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.strip_prefix("fixture:") {
            Some(name) => fixtures::find(name)
                .map(|f| Input::Fixture(f.name))
                .ok_or_else(|| CliError::Usage(format!("unknown fixture `{name}`"))),
            None => Ok(Input::File(PathBuf::from(s))),
        }
    }

    pub fn load(&self) -> Result<LoadedTree, CliError> {
        match self {
            Input::File(path) => format::load(path),
            Input::Fixture(name) => fixtures::find(name).expect("checked when parsed").load(),
        }
    }

    fn describe(&self) -> String {
        match self {
            Input::File(path) => path.display().to_string(),
            Input::Fixture(name) => format!("fixture:{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<Input>,
    pub p: PNorm,
    pub grid: Resolution,
    pub eps_start: f64,
    pub eps_factor: f64,
    pub eps_count: usize,
    pub n_max: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub svg: bool,
    pub seed: u64,
}

pub const MIN_GRID: usize = 64;

impl RunConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        command: Command,
        input: Option<&str>,
        p: f64,
        grid: usize,
        eps: (f64, f64, usize),
        n_max: usize,
        out: Option<PathBuf>,
        format: Format,
        svg: bool,
        seed: u64,
    ) -> Result<Self, CliError> {
        let usage = |e: hardy_tree_core::Error| CliError::Usage(e.to_string());
        let p = PNorm::new(p).map_err(usage)?;
        if grid < MIN_GRID {
            return Err(CliError::Usage(format!("--grid must be at least {MIN_GRID}, got {grid}")));
        }
        let (eps_start, eps_factor, eps_count) = eps;
        if eps_count == 0 {
            return Err(CliError::Usage("--eps-count must be positive".into()));
        }
        geometric_schedule(eps_start, eps_factor, eps_count).map_err(usage)?;
        if n_max == 0 {
            return Err(CliError::Usage("--n-max must be positive".into()));
        }
        if svg && out.is_none() {
            return Err(CliError::Usage("--svg needs --out".into()));
        }
        let input = input.map(Input::parse).transpose()?;
        if input.is_none() && command != Command::Verify {
            return Err(CliError::Usage(format!("`{}` needs --input", command.name())));
        }
        Ok(Self {
            command,
            input,
            p,
            grid: Resolution::new(grid).map_err(usage)?,
            eps_start,
            eps_factor,
            eps_count,
            n_max,
            out,
            format,
            svg,
            seed,
        })
    }

    pub fn schedule(&self) -> Vec<f64> {
        geometric_schedule(self.eps_start, self.eps_factor, self.eps_count).expect("validated")
    }

    pub fn norm_options(&self) -> NormOptions {
        NormOptions { seed: self.seed, ..NormOptions::default() }
    }

    /// Everything that affects the numbers, one `key=value` per line.
    /// Output paths and the format are left out.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let input = self.input.as_ref().map(Input::describe).unwrap_or_default();
        let _ = writeln!(s, "command={}", self.command.name());
        let _ = writeln!(s, "input={input}");
        let _ = writeln!(s, "p={}", self.p.p());
        let _ = writeln!(s, "grid={}", self.grid.cells());
        let _ = writeln!(s, "eps={},{},{}", self.eps_start, self.eps_factor, self.eps_count);
        let _ = writeln!(s, "n_max={}", self.n_max);
        let _ = writeln!(s, "seed={}", self.seed);
        s
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn input_name(&self) -> String {
        self.input.as_ref().map(Input::describe).unwrap_or_else(|| "-".into())
    }
}
