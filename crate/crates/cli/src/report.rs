//! Report rows and their CSV/JSON/plot-series serializations.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::Format;

/// Bumped whenever the column set or order changes.
pub const REPORT_VERSION: u32 = 1;

/// Column order of every report; `report_version` leads each row.
pub const COLUMNS: [&str; 27] = [
    "report_version",
    "experiment",
    "source",
    "n",
    "param_kind",
    "param",
    "entropy_rate",
    "beta",
    "beta_rate",
    "beta_qubits",
    "high_prob_mass",
    "typical_mass",
    "typical_log2_dim_rate",
    "typical_bounds_ok",
    "rank_log2",
    "rate",
    "rate_qubits",
    "captured_mass",
    "fe",
    "fe_bound",
    "fbar_eigen",
    "f_output",
    "fs_lower",
    "fs_upper",
    "six_eta",
    "status",
    "reason",
];

/// Extra trailing column; excluded from determinism comparisons.
pub const WALL_TIME_COLUMN: &str = "wall_time_s";

/// Tolerance for the pre-write bound checks.
const BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Warning,
    Skipped,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Warning => "warning",
            Status::Skipped => "skipped",
            Status::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: &'static str,
    pub source: String,
    pub n: usize,
    /// `"epsilon"` or `"rate"`
    pub param_kind: &'static str,
    pub param: f64,
    pub entropy_rate: Option<f64>,
    pub beta: Option<f64>,
    pub beta_rate: Option<f64>,
    pub beta_qubits: Option<u64>,
    pub high_prob_mass: Option<f64>,
    pub typical_mass: Option<f64>,
    pub typical_log2_dim_rate: Option<f64>,
    pub typical_bounds_ok: Option<bool>,
    /// `log2(rank P)` of a compression scheme, or `log2 d` for sub-rate rows.
    pub rank_log2: Option<f64>,
    pub rate: Option<f64>,
    pub rate_qubits: Option<u64>,
    pub captured_mass: Option<f64>,
    pub fe: Option<f64>,
    pub fe_bound: Option<f64>,
    pub fbar_eigen: Option<f64>,
    pub f_output: Option<f64>,
    pub fs_lower: Option<f64>,
    pub fs_upper: Option<f64>,
    pub six_eta: Option<f64>,
    pub status: Status,
    /// Machine-readable code for skipped, warning and failed rows.
    pub reason: Option<String>,
    pub wall_time_s: f64,
}

impl ReportRow {
    pub fn new(experiment: &'static str, source: &str, n: usize, param_kind: &'static str, param: f64) -> Self {
        Self {
            experiment,
            source: source.to_string(),
            n,
            param_kind,
            param,
            entropy_rate: None,
            beta: None,
            beta_rate: None,
            beta_qubits: None,
            high_prob_mass: None,
            typical_mass: None,
            typical_log2_dim_rate: None,
            typical_bounds_ok: None,
            rank_log2: None,
            rate: None,
            rate_qubits: None,
            captured_mass: None,
            fe: None,
            fe_bound: None,
            fbar_eigen: None,
            f_output: None,
            fs_lower: None,
            fs_upper: None,
            six_eta: None,
            status: Status::Ok,
            reason: None,
            wall_time_s: 0.0,
        }
    }

    pub fn skipped(mut self, reason: &str) -> Self {
        self.status = Status::Skipped;
        self.reason = Some(reason.to_string());
        self
    }

    pub fn fail(&mut self, reason: &str) {
        self.status = Status::Fail;
        self.reason = Some(match self.reason.take() {
            Some(prev) if prev != reason => format!("{prev};{reason}"),
            _ => reason.to_string(),
        });
    }

    pub fn warn(&mut self, reason: &str) {
        if self.status == Status::Ok {
            self.status = Status::Warning;
            self.reason = Some(reason.to_string());
        }
    }

    /// Re-checks every fidelity against its range and the chain
    /// `F_e <= F_bar <= F(rho, E(rho))`; marks the row failed otherwise.
    pub fn verify_bounds(&mut self) {
        let unit = [
            self.fe,
            self.fbar_eigen,
            self.f_output,
            self.fs_lower,
            self.fs_upper,
            self.captured_mass,
            self.high_prob_mass,
            self.typical_mass,
        ];
        if unit
            .iter()
            .flatten()
            .any(|&v| !(-BOUND_TOL..=1.0 + BOUND_TOL).contains(&v))
        {
            self.fail("value_out_of_range");
        }
        if let Some(e) = self.six_eta {
            if !(-BOUND_TOL..=6.0 + BOUND_TOL).contains(&e) {
                self.fail("value_out_of_range");
            }
        }
        if let (Some(fe), Some(fbar)) = (self.fe, self.fbar_eigen) {
            if fe > fbar + BOUND_TOL {
                self.fail("fe_above_fbar");
            }
        }
        if let (Some(fbar), Some(f)) = (self.fbar_eigen, self.f_output) {
            if fbar > f + BOUND_TOL {
                self.fail("fbar_above_f");
            }
        }
    }

    fn cells(&self) -> Vec<Cell> {
        use Cell::*;
        let r = |v: Option<f64>| v.map_or(Null, Real);
        let u = |v: Option<u64>| v.map_or(Null, Int);
        vec![
            Int(REPORT_VERSION as u64),
            Text(self.experiment.to_string()),
            Text(self.source.clone()),
            Int(self.n as u64),
            Text(self.param_kind.to_string()),
            Real(self.param),
            r(self.entropy_rate),
            r(self.beta),
            r(self.beta_rate),
            u(self.beta_qubits),
            r(self.high_prob_mass),
            r(self.typical_mass),
            r(self.typical_log2_dim_rate),
            self.typical_bounds_ok.map_or(Null, Bool),
            r(self.rank_log2),
            r(self.rate),
            u(self.rate_qubits),
            r(self.captured_mass),
            r(self.fe),
            r(self.fe_bound),
            r(self.fbar_eigen),
            r(self.f_output),
            r(self.fs_lower),
            r(self.fs_upper),
            r(self.six_eta),
            Text(self.status.as_str().to_string()),
            self.reason.clone().map_or(Null, Text),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Cell {
    Null,
    Int(u64),
    Real(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_sig(*v, 12),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Null => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Real(v) if v.is_finite() => json!(v),
            Cell::Real(v) => json!(format_sig(*v, 12)),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

/// `x` with `digits` significant digits, fixed notation for moderate
/// exponents and scientific otherwise; trailing zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `rows` as `<dir>/<name>.csv` or `.json`; returns the path.
pub fn write_report(dir: &Path, name: &str, rows: &[ReportRow], format: Format) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    match format {
        Format::Csv => {
            let path = dir.join(format!("{name}.csv"));
            fs::write(&path, render_csv(rows)?)?;
            Ok(path)
        }
        Format::Json => {
            let path = dir.join(format!("{name}.json"));
            let text = serde_json::to_string_pretty(&render_json(name, rows)).map_err(io::Error::other)?;
            fs::write(&path, text + "\n")?;
            Ok(path)
        }
    }
}

pub fn render_csv(rows: &[ReportRow]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS.iter().copied().chain([WALL_TIME_COLUMN]))?;
    for row in rows {
        let mut rec: Vec<String> = row.cells().iter().map(Cell::csv).collect();
        rec.push(format!("{:.3}", row.wall_time_s));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

pub fn render_json(experiment: &str, rows: &[ReportRow]) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj: Map<String, Value> = COLUMNS
                .iter()
                .zip(row.cells())
                .map(|(k, c)| (k.to_string(), c.json()))
                .collect();
            obj.insert(WALL_TIME_COLUMN.into(), json!(row.wall_time_s));
            Value::Object(obj)
        })
        .collect();
    json!({
        "report_version": REPORT_VERSION,
        "experiment": experiment,
        "columns": COLUMNS.iter().copied().chain([WALL_TIME_COLUMN]).collect::<Vec<_>>(),
        "rows": rows,
    })
}

/// Two-column whitespace-separated series with a commented header.
pub fn write_series(
    dir: &Path,
    name: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.dat"));
    let mut text = format!("# {x_label} {y_label}\n");
    for (x, y) in points {
        text.push_str(&format!("{} {}\n", format_sig(*x, 12), format_sig(*y, 12)));
    }
    fs::write(&path, text)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(0.5315375890053131, 12), "0.531537589005");
        assert_eq!(format_sig(1234.5, 12), "1234.5");
        assert_eq!(format_sig(-2.5e-7, 12), "-2.5e-7");
        assert_eq!(format_sig(1.0 / 3.0 * 1e15, 12), "3.33333333333e14");
        assert_eq!(format_sig(f64::INFINITY, 12), "inf");
    }

    #[test]
    fn csv_has_versioned_header_and_empty_nulls() {
        let mut row = ReportRow::new("aep", "src", 4, "epsilon", 0.1);
        row.beta = Some(2.0);
        let text = String::from_utf8(render_csv(&[row]).unwrap()).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("report_version,experiment,"));
        assert!(header.ends_with(",wall_time_s"));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), COLUMNS.len() + 1);
        assert_eq!(fields[0], "1");
        assert_eq!(fields[7], "2");
        assert_eq!(fields[6], "");
    }

    #[test]
    fn bound_violations_fail_the_row() {
        let mut row = ReportRow::new("compress", "src", 4, "epsilon", 0.1);
        row.fe = Some(0.9);
        row.fbar_eigen = Some(0.8);
        row.f_output = Some(0.95);
        row.verify_bounds();
        assert_eq!(row.status, Status::Fail);
        assert_eq!(row.reason.as_deref(), Some("fe_above_fbar"));
    }
}
