//! Run configuration: command-line flags merged over an optional flat JSON
//! file with the same keys, then validated into a [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use casimir::{Boundary, FieldSpec};
use clap::{Parser, ValueEnum};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    FreeEnergy,
    VacuumEnergy,
    ThermalPart,
    Force,
    Pfa,
    Asymptotic,
    Table1,
    Table2,
    Scan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FreeEnergy => "free-energy",
            Command::VacuumEnergy => "vacuum-energy",
            Command::ThermalPart => "thermal-part",
            Command::Force => "force",
            Command::Pfa => "pfa",
            Command::Asymptotic => "asymptotic",
            Command::Table1 => "table1",
            Command::Table2 => "table2",
            Command::Scan => "scan",
        }
    }

    fn is_table(self) -> bool {
        matches!(self, Command::Table1 | Command::Table2)
    }
}

/// Field and boundary conditions, written `scalar-<sphere>-<plane>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum Field {
    #[value(name = "scalar-d-d")]
    #[serde(rename = "scalar-d-d")]
    ScalarDD,
    #[value(name = "scalar-d-n")]
    #[serde(rename = "scalar-d-n")]
    ScalarDN,
    #[value(name = "scalar-n-d")]
    #[serde(rename = "scalar-n-d")]
    ScalarND,
    #[value(name = "scalar-n-n")]
    #[serde(rename = "scalar-n-n")]
    ScalarNN,
    #[value(name = "em")]
    #[serde(rename = "em")]
    Em,
}

impl Field {
    pub fn spec(self) -> FieldSpec {
        use Boundary::{Dirichlet as D, Neumann as N};
        match self {
            Field::ScalarDD => FieldSpec::scalar(D, D),
            Field::ScalarDN => FieldSpec::scalar(D, N),
            Field::ScalarND => FieldSpec::scalar(N, D),
            Field::ScalarNN => FieldSpec::scalar(N, N),
            Field::Em => FieldSpec::electromagnetic(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::ScalarDD => "scalar-d-d",
            Field::ScalarDN => "scalar-d-n",
            Field::ScalarND => "scalar-n-d",
            Field::ScalarNN => "scalar-n-n",
            Field::Em => "em",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum ScanAxis {
    #[value(name = "R")]
    #[serde(rename = "R")]
    R,
    #[value(name = "d")]
    #[serde(rename = "d")]
    D,
    #[value(name = "T")]
    #[serde(rename = "T")]
    T,
}

/// Command-line flags. Every flag is optional here so that a config file
/// can supply it; requirements are checked after merging.
#[derive(Debug, Default, Parser)]
#[command(name = "casimir", version, about = "Casimir free energy and force between a sphere and a plane")]
pub struct Args {
    /// What to compute.
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    /// Flat JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sphere radius.
    #[arg(long = "R")]
    pub r: Option<f64>,
    /// Surface-to-plane distance (0 is contact).
    #[arg(long, conflicts_with = "epsilon")]
    pub d: Option<f64>,
    /// Separation in units of the radius, d/R.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Temperature.
    #[arg(long = "T")]
    pub t: Option<f64>,
    /// Field and boundary conditions (sphere first, then plane).
    #[arg(long, value_enum)]
    pub field: Option<Field>,
    /// Fixed multipole cutoff instead of the adaptive one.
    #[arg(long)]
    pub lmax: Option<u32>,
    /// Relative tolerance of the exact evaluators.
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<f64>,
    /// Number of plate modes in the proximity approximation (1 or 2).
    #[arg(long = "mode-count")]
    pub mode_count: Option<u8>,
    /// CSV output path; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Swept parameter.
    #[arg(long = "scan-axis", value_enum)]
    pub scan_axis: Option<ScanAxis>,
    /// Sweep grid `start:stop:count`, evenly spaced and increasing.
    #[arg(long = "scan-grid")]
    pub scan_grid: Option<String>,
    /// Single-point command evaluated at every sweep point.
    #[arg(long = "scan-command", value_enum)]
    pub scan_command: Option<Command>,
}

/// Config file contents; keys match the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub d: Option<f64>,
    pub epsilon: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub field: Option<Field>,
    pub lmax: Option<u32>,
    #[serde(rename = "rel-tol", alias = "rel_tol")]
    pub rel_tol: Option<f64>,
    #[serde(rename = "mode-count", alias = "mode_count")]
    pub mode_count: Option<u8>,
    pub out: Option<PathBuf>,
    #[serde(rename = "scan-axis", alias = "scan_axis")]
    pub scan_axis: Option<ScanAxis>,
    #[serde(rename = "scan-grid", alias = "scan_grid")]
    pub scan_grid: Option<String>,
    #[serde(rename = "scan-command", alias = "scan_command")]
    pub scan_command: Option<Command>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Separation {
    Distance(f64),
    Epsilon(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl ScanGrid {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("scan grid must be start:stop:count, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if !(start.is_finite() && stop.is_finite()) || count < 2 || !(start < stop) {
            return Err(CliError::Config(format!(
                "scan grid must be strictly increasing with at least 2 points, got {s:?}"
            )));
        }
        Ok(ScanGrid { start, stop, count })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..=n)
            .map(|k| match k {
                0 => self.start,
                k if k == n => self.stop,
                k => (self.start * (n - k) as f64 + self.stop * k as f64) / n as f64,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scan {
    pub axis: ScanAxis,
    pub grid: ScanGrid,
    pub command: Command,
}

/// A validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub r: Option<f64>,
    pub separation: Option<Separation>,
    pub t: Option<f64>,
    pub field: Field,
    pub l_max: Option<u32>,
    pub rel_tol: f64,
    pub mode_count: Option<u8>,
    pub out: Option<PathBuf>,
    pub scan: Option<Scan>,
}

pub const DEFAULT_REL_TOL: f64 = 1e-3;

impl RunConfig {
    /// Parses command-line arguments (including the program name).
    pub fn from_args<I, T>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let args = Args::try_parse_from(args)?;
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::merge(args, file)
    }

    /// Flags override the file key by key; d and epsilon count as one key.
    pub fn merge(args: Args, file: FileConfig) -> Result<Self, CliError> {
        if file.d.is_some() && file.epsilon.is_some() {
            return Err(CliError::Config("config file sets both d and epsilon".into()));
        }
        let separation = match (args.d, args.epsilon, file.d, file.epsilon) {
            (Some(d), _, _, _) => Some(Separation::Distance(d)),
            (_, Some(e), _, _) => Some(Separation::Epsilon(e)),
            (_, _, Some(d), _) => Some(Separation::Distance(d)),
            (_, _, _, Some(e)) => Some(Separation::Epsilon(e)),
            _ => None,
        };
        let command = args
            .command
            .or(file.command)
            .ok_or_else(|| CliError::Config("no command given (use --command)".into()))?;
        let scan_axis = args.scan_axis.or(file.scan_axis);
        let scan_grid = args.scan_grid.or(file.scan_grid);
        let scan_command = args.scan_command.or(file.scan_command);
        let config = RunConfig {
            command,
            r: args.r.or(file.r),
            separation,
            t: args.t.or(file.t),
            field: args.field.or(file.field).unwrap_or(Field::ScalarDD),
            l_max: args.lmax.or(file.lmax),
            rel_tol: args.rel_tol.or(file.rel_tol).unwrap_or(DEFAULT_REL_TOL),
            mode_count: args.mode_count.or(file.mode_count),
            out: args.out.or(file.out),
            scan: None,
        };
        config.with_scan(scan_axis, scan_grid, scan_command)?.validated()
    }

    fn with_scan(
        mut self,
        axis: Option<ScanAxis>,
        grid: Option<String>,
        command: Option<Command>,
    ) -> Result<Self, CliError> {
        if self.command != Command::Scan {
            if axis.is_some() || grid.is_some() || command.is_some() {
                return Err(CliError::Config(format!("scan options given with command {}", self.command.name())));
            }
            return Ok(self);
        }
        let axis = axis.ok_or_else(|| CliError::Config("scan needs --scan-axis".into()))?;
        let grid = ScanGrid::parse(&grid.ok_or_else(|| CliError::Config("scan needs --scan-grid".into()))?)?;
        let command = command.unwrap_or(Command::ThermalPart);
        if matches!(command, Command::Scan) || command.is_table() {
            return Err(CliError::Config(format!("cannot scan command {}", command.name())));
        }
        self.scan = Some(Scan { axis, grid, command });
        Ok(self)
    }

    fn validated(self) -> Result<Self, CliError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be non-negative, got {v}")))
            }
        };
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(CliError::Config(format!("rel-tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if let Some(m) = self.mode_count {
            if !(1..=2).contains(&m) {
                return Err(CliError::Config(format!("mode-count must be 1 or 2, got {m}")));
            }
        }
        if let Some(l) = self.l_max {
            if l < self.field.spec().l_min() {
                return Err(CliError::Config(format!("lmax {l} is below the field's lowest multipole")));
            }
        }
        if self.command.is_table() {
            if self.r.is_some() || self.separation.is_some() || self.t.is_some() {
                return Err(CliError::Config(format!("{} uses a fixed grid; drop R, d, epsilon and T", self.command.name())));
            }
            return Ok(self);
        }
        let scanned = self.scan.map(|s| s.axis);
        if let Some(scan) = self.scan {
            let first = scan.grid.start;
            match scan.axis {
                ScanAxis::R => positive("scanned R", first)?,
                ScanAxis::D => {
                    if matches!(self.separation, Some(Separation::Epsilon(_))) {
                        return Err(CliError::Config("scanning d conflicts with a fixed epsilon".into()));
                    }
                    non_negative("scanned d", first)?
                }
                ScanAxis::T => non_negative("scanned T", first)?,
            }
        }
        match (self.r, scanned) {
            (Some(r), _) => positive("R", r)?,
            (None, Some(ScanAxis::R)) => {}
            (None, _) => return Err(CliError::Config("missing R (use --R)".into())),
        }
        match (self.separation, scanned) {
            (Some(Separation::Distance(d)), _) => non_negative("d", d)?,
            (Some(Separation::Epsilon(e)), _) => non_negative("epsilon", e)?,
            (None, Some(ScanAxis::D)) => {}
            (None, _) => return Err(CliError::Config("missing separation (use --d or --epsilon)".into())),
        }
        let evaluated = self.scan.map_or(self.command, |s| s.command);
        match (self.t, scanned) {
            (Some(t), _) => non_negative("T", t)?,
            (None, Some(ScanAxis::T)) => {}
            (None, _) if evaluated == Command::VacuumEnergy => {}
            (None, _) => return Err(CliError::Config(format!("{} needs a temperature (use --T)", evaluated.name()))),
        }
        Ok(self)
    }
}
