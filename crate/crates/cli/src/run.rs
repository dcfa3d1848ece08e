//! Evaluation of a [`RunConfig`] into CSV rows.

use std::fs;
use std::io::Write;

use casimir::asympt::{high_t_f0, low_t_thermal, small_sep_medium_t};
use casimir::pfa::{pfa_force, pfa_free_energy};
use casimir::{
    force, matsubara_free_energy, thermal_part, vacuum_energy, EnergyResult, Error, FieldSpec, ForceTarget, Geometry,
    Truncation,
};

use crate::config::{Command, RunConfig, ScanAxis, Separation};
use crate::CliError;

/// Grid of the table commands: separation ε = d/R and the radii, at T = 1.
pub const TABLE1: (f64, [f64; 3]) = (0.01, [0.5, 1.0, 3.0]);
pub const TABLE2: (f64, [f64; 3]) = (0.1, [0.5, 1.0, 6.0]);
pub const TABLE_TEMPERATURE: f64 = 1.0;

const POINT_HEADER: [&str; 13] = [
    "command",
    "quantity",
    "field",
    "R",
    "d",
    "epsilon",
    "T",
    "mode_count",
    "value",
    "error_estimate",
    "l_max_used",
    "converged",
    "notes",
];

const TABLE_HEADER: [&str; 15] = [
    "command",
    "field",
    "R",
    "d",
    "epsilon",
    "T",
    "mode_count",
    "exact",
    "error_estimate",
    "pfa",
    "relative_deviation",
    "r_abs_exact",
    "r_abs_pfa",
    "l_max_used",
    "converged",
];

/// The CSV text of a run and whether every row converged.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub csv: String,
    pub converged: bool,
}

/// One evaluation point.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Point {
    r: f64,
    d: f64,
    t: Option<f64>,
}

impl Point {
    fn geometry(&self) -> Result<Geometry, Error> {
        if self.d == 0.0 {
            Geometry::contact(self.r)
        } else {
            Geometry::new(self.r, self.d)
        }
    }
}

struct Row {
    quantity: &'static str,
    value: f64,
    error_estimate: Option<f64>,
    l_max_used: Option<u32>,
    converged: bool,
    notes: String,
}

impl Row {
    fn exact(quantity: &'static str, r: EnergyResult) -> Self {
        Row {
            quantity,
            value: r.value,
            error_estimate: Some(r.error_estimate),
            l_max_used: Some(r.diagnostics.l_max_used),
            converged: r.diagnostics.converged,
            notes: r.diagnostics.notes.join("; "),
        }
    }

    fn closed_form(quantity: &'static str, value: f64, notes: String) -> Self {
        Row { quantity, value, error_estimate: None, l_max_used: None, converged: true, notes }
    }

    fn failed(quantity: &'static str, e: &Error) -> Self {
        Row {
            quantity,
            value: f64::NAN,
            error_estimate: None,
            l_max_used: None,
            converged: false,
            notes: e.to_string(),
        }
    }
}

/// Invalid inputs end the run; numerical failures become non-converged rows.
fn row_or_fail<T>(quantity: &'static str, r: Result<T, Error>, make: impl FnOnce(T) -> Row) -> Result<Row, CliError> {
    match r {
        Ok(v) => Ok(make(v)),
        Err(e @ (Error::Domain(_) | Error::Unsupported(_))) => Err(CliError::Config(format!("{quantity}: {e}"))),
        Err(e) => Ok(Row::failed(quantity, &e)),
    }
}

fn invalid(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn input(v: f64) -> String {
    format!("{v}")
}

fn truncation(config: &RunConfig) -> Truncation {
    Truncation { l_max: config.l_max, rel_tol: config.rel_tol, ..Truncation::default() }
}

/// Mode count of the proximity approximation: as configured, otherwise
/// two for the electromagnetic field and one for a scalar field.
fn mode_count(config: &RunConfig, spec: &FieldSpec) -> u8 {
    config.mode_count.unwrap_or(if spec.is_em() { 2 } else { 1 })
}

fn require_t(command: Command, p: &Point) -> Result<f64, CliError> {
    p.t.ok_or_else(|| CliError::Config(format!("{} needs a temperature", command.name())))
}

fn evaluate(command: Command, p: &Point, config: &RunConfig) -> Result<Vec<Row>, CliError> {
    let geom = p.geometry().map_err(invalid)?;
    let spec = config.field.spec();
    let trunc = truncation(config);
    let rows = match command {
        Command::FreeEnergy => {
            let t = require_t(command, p)?;
            vec![row_or_fail("free_energy", matsubara_free_energy(&geom, &spec, t, &trunc), |r| Row::exact("free_energy", r))?]
        }
        Command::VacuumEnergy => {
            vec![row_or_fail("vacuum_energy", vacuum_energy(&geom, &spec, &trunc), |r| Row::exact("vacuum_energy", r))?]
        }
        Command::ThermalPart => {
            let t = require_t(command, p)?;
            vec![row_or_fail("thermal_part", thermal_part(&geom, &spec, t, &trunc), |r| Row::exact("thermal_part", r))?]
        }
        Command::Force => {
            let t = require_t(command, p)?;
            let mut rows = vec![row_or_fail("force", force(&geom, &spec, t, &trunc, ForceTarget::Total), |r| {
                Row::exact("force", r)
            })?];
            if !spec.is_em() {
                let thermal = force(&geom, &spec, t, &trunc, ForceTarget::ThermalPart);
                rows.push(row_or_fail("force_thermal_part", thermal, |r| Row::exact("force_thermal_part", r))?);
            }
            rows
        }
        Command::Pfa => {
            let t = require_t(command, p)?;
            let modes = mode_count(config, &spec);
            vec![
                row_or_fail("pfa_free_energy", pfa_free_energy(&geom, t, modes), |v| {
                    Row::closed_form("pfa_free_energy", v, String::new())
                })?,
                row_or_fail("pfa_force", pfa_force(&geom, t, modes), |v| Row::closed_form("pfa_force", v, String::new()))?,
            ]
        }
        Command::Asymptotic => {
            let t = require_t(command, p)?;
            let mut rows = vec![row_or_fail("low_t_thermal", low_t_thermal(&geom, &spec, t), |r| {
                Row::closed_form("low_t_thermal", r.value, r.validity_note)
            })?];
            if !geom.is_contact() {
                rows.push(row_or_fail("high_t_f0", high_t_f0(&geom, &spec, &trunc), |r| Row::exact("high_t_f0", r))?);
                if spec.is_em() {
                    rows.push(row_or_fail("small_sep_medium_t", small_sep_medium_t(&geom, t), |v| {
                        Row::closed_form("small_sep_medium_t", v, String::new())
                    })?);
                }
            }
            rows
        }
        Command::Table1 | Command::Table2 | Command::Scan => unreachable!("not a single-point command"),
    };
    Ok(rows)
}

fn csv_error(e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("writing CSV: {e}"))
}

fn point_rows(config: &RunConfig) -> Result<Report, CliError> {
    let (command, points) = match config.scan {
        None => (config.command, vec![base_point(config, None)?]),
        Some(scan) => {
            let points = scan.grid.points().into_iter().map(|v| base_point(config, Some((scan.axis, v)))).collect::<Result<Vec<_>, _>>()?;
            (scan.command, points)
        }
    };
    let spec = config.field.spec();
    let modes = if command == Command::Pfa { input(f64::from(mode_count(config, &spec))) } else { String::new() };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(POINT_HEADER).map_err(csv_error)?;
    let mut converged = true;
    for p in &points {
        for row in evaluate(command, p, config)? {
            converged &= row.converged;
            w.write_record([
                config.command.name().to_string(),
                row.quantity.to_string(),
                config.field.name().to_string(),
                input(p.r),
                input(p.d),
                input(p.d / p.r),
                p.t.map_or(String::new(), input),
                modes.clone(),
                num(row.value),
                row.error_estimate.map_or(String::new(), num),
                row.l_max_used.map_or(String::new(), |l| l.to_string()),
                row.converged.to_string(),
                row.notes,
            ])
            .map_err(csv_error)?;
        }
    }
    finish(w, converged)
}

fn base_point(config: &RunConfig, scanned: Option<(ScanAxis, f64)>) -> Result<Point, CliError> {
    let mut r = config.r;
    let mut t = config.t;
    let mut d_fixed = None;
    match scanned {
        Some((ScanAxis::R, v)) => r = Some(v),
        Some((ScanAxis::T, v)) => t = Some(v),
        Some((ScanAxis::D, v)) => d_fixed = Some(v),
        None => {}
    }
    let r = r.ok_or_else(|| CliError::Config("missing R".into()))?;
    let d = match (d_fixed, config.separation) {
        (Some(d), _) | (None, Some(Separation::Distance(d))) => d,
        (None, Some(Separation::Epsilon(e))) => e * r,
        (None, None) => return Err(CliError::Config("missing separation".into())),
    };
    if !(r > 0.0 && r.is_finite()) || !(d >= 0.0 && d.is_finite()) {
        return Err(CliError::Config(format!("need R > 0 and d ≥ 0, got R = {r}, d = {d}")));
    }
    if let Some(t) = t {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!("T must be non-negative, got {t}")));
        }
    }
    Ok(Point { r, d, t })
}

fn table_rows(config: &RunConfig) -> Result<Report, CliError> {
    let (eps, radii) = if config.command == Command::Table1 { TABLE1 } else { TABLE2 };
    let t = TABLE_TEMPERATURE;
    let spec = config.field.spec();
    let modes = mode_count(config, &spec);
    let trunc = truncation(config);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER).map_err(csv_error)?;
    let mut converged = true;
    for r in radii {
        let geom = Geometry::from_epsilon(r, eps).map_err(invalid)?;
        let pfa = (|| Ok::<_, Error>(pfa_force(&geom, t, modes)? - pfa_force(&geom, 0.0, modes)?))().map_err(invalid)?;
        let exact = row_or_fail("exact thermal force", force(&geom, &spec, t, &trunc, ForceTarget::ThermalPart), |r| {
            Row::exact("force_thermal_part", r)
        })?;
        converged &= exact.converged;
        w.write_record([
            config.command.name().to_string(),
            config.field.name().to_string(),
            input(r),
            input(geom.d()),
            input(eps),
            input(t),
            modes.to_string(),
            num(exact.value),
            exact.error_estimate.map_or(String::new(), num),
            num(pfa),
            num((exact.value - pfa) / pfa),
            num(r * exact.value.abs()),
            num(r * pfa.abs()),
            exact.l_max_used.map_or(String::new(), |l| l.to_string()),
            exact.converged.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(w, converged)
}

fn finish(w: csv::Writer<Vec<u8>>, converged: bool) -> Result<Report, CliError> {
    let bytes = w.into_inner().map_err(csv_error)?;
    let csv = String::from_utf8(bytes).map_err(csv_error)?;
    Ok(Report { csv, converged })
}

/// Evaluates the configuration without writing anything.
pub fn execute(config: &RunConfig) -> Result<Report, CliError> {
    match config.command {
        Command::Table1 | Command::Table2 => table_rows(config),
        _ => point_rows(config),
    }
}

/// Evaluates the configuration and writes the CSV to the configured path
/// (or standard output). Rows are written even when some did not converge.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let report = execute(config)?;
    match &config.out {
        Some(path) => fs::write(path, &report.csv).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout().write_all(report.csv.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(report)
}
