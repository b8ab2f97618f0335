//! Run reports and the CSV tables derived from them.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::digitize::ResourceEstimate;
use crate::engine::IterationRecord;
use crate::error::{Error, Result};
use crate::pipeline::RunSettings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CdAdapt,
    AdaptFermionic,
    Dcqo,
    Fci,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::CdAdapt => "cd_adapt",
            Method::AdaptFermionic => "adapt_fermionic",
            Method::Dcqo => "dcqo",
            Method::Fci => "fci",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cd_adapt" => Method::CdAdapt,
            "adapt_fermionic" => Method::AdaptFermionic,
            "dcqo" => Method::Dcqo,
            "fci" => Method::Fci,
            _ => return Err(Error::InvalidArgument(format!("unknown method tag {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub molecule: String,
    pub distance: Option<f64>,
    pub n_qubits: usize,
    pub n_electrons: usize,
    pub settings: RunSettings,
    pub status: String,
    /// Total energies in Hartree, offset included.
    pub energy: f64,
    pub hf_energy: f64,
    pub fci_energy: Option<f64>,
    /// `|energy - fci_energy|`, present iff the FCI energy was computed.
    pub error: Option<f64>,
    pub pool_size: Option<usize>,
    pub iterations: Vec<IterationRecord>,
    pub resources: ResourceEstimate,
    pub ansatz: Vec<String>,
    pub parameters: Vec<f64>,
    pub gradient_check: Option<f64>,
    pub wall_time_s: f64,
    /// Seconds since the Unix epoch when the run finished.
    pub finished_at: f64,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn resource_row(&self) -> ResourceRow {
        ResourceRow {
            method: self.method.tag().to_string(),
            molecule: self.molecule.clone(),
            distance: self.distance,
            error: self.error,
            n_params: self.resources.parameter_count,
            n_cnots: self.resources.cnot_count,
        }
    }

    pub fn scan_row(&self) -> ScanRow {
        ScanRow {
            distance: self.distance,
            method: self.method.tag().to_string(),
            molecule: self.molecule.clone(),
            energy: self.energy,
            fci_energy: self.fci_energy,
            error: self.error,
            n_params: self.resources.parameter_count,
            n_cnots: self.resources.cnot_count,
            iterations: self.iterations.len(),
        }
    }
}

/// Resource table row, shared by `compare` and per-run CSVs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceRow {
    pub method: String,
    pub molecule: String,
    pub distance: Option<f64>,
    pub error: Option<f64>,
    pub n_params: usize,
    pub n_cnots: usize,
}

pub const RESOURCE_HEADER: [&str; 6] = ["method", "molecule", "distance", "error", "n_params", "n_cnots"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub distance: Option<f64>,
    pub method: String,
    pub molecule: String,
    pub energy: f64,
    pub fci_energy: Option<f64>,
    pub error: Option<f64>,
    pub n_params: usize,
    pub n_cnots: usize,
    pub iterations: usize,
}

pub const SCAN_HEADER: [&str; 9] = [
    "distance",
    "method",
    "molecule",
    "energy",
    "fci_energy",
    "error",
    "n_params",
    "n_cnots",
    "iterations",
];

/// Pool size table row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaRow {
    pub l: Option<usize>,
    pub t_prime: Option<f64>,
    pub eta: usize,
}

pub const ETA_HEADER: [&str; 3] = ["l", "t_prime", "eta"];

/// Writes rows with a header even when `rows` is empty.
pub fn write_csv<W: Write, R: Serialize>(out: W, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<R: Serialize>(header: &[&str], rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, header, rows)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// One row per method. Reports must describe the same molecule at the
/// same geometry; a repeated method keeps the most recent report.
pub fn compare(reports: &[RunReport]) -> Result<Vec<ResourceRow>> {
    let Some(first) = reports.first() else {
        return Ok(Vec::new());
    };
    for r in reports {
        if r.molecule != first.molecule || r.distance != first.distance {
            return Err(Error::Schema(format!(
                "cannot compare {} at {:?} with {} at {:?}",
                first.molecule, first.distance, r.molecule, r.distance
            )));
        }
    }
    let mut latest: BTreeMap<Method, &RunReport> = BTreeMap::new();
    for r in reports {
        if let Some(prev) = latest.get(&r.method) {
            log::warn!("duplicate {} report, keeping the latest", r.method);
            if prev.finished_at > r.finished_at {
                continue;
            }
        }
        latest.insert(r.method, r);
    }
    Ok(latest.values().map(|r| r.resource_row()).collect())
}

pub fn format_error(e: Option<f64>) -> String {
    e.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into())
}

/// Aligned text rendering of a comparison.
pub fn pretty_table(rows: &[ResourceRow]) -> String {
    let mut cells = vec![["method".to_string(), "error".into(), "n_params".into(), "n_cnots".into()]];
    for r in rows {
        cells.push([
            r.method.clone(),
            format_error(r.error),
            r.n_params.to_string(),
            r.n_cnots.to_string(),
        ]);
    }
    let widths: Vec<usize> = (0..4)
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (s, w))| if i == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(method: Method, molecule: &str, finished_at: f64, error: f64) -> RunReport {
        RunReport {
            method,
            molecule: molecule.into(),
            distance: Some(1.5),
            n_qubits: 4,
            n_electrons: 2,
            settings: RunSettings::default(),
            status: "converged".into(),
            energy: -1.0,
            hf_energy: -0.9,
            fci_energy: Some(-1.0 - error),
            error: Some(error),
            pool_size: None,
            iterations: Vec::new(),
            resources: ResourceEstimate::default(),
            ansatz: Vec::new(),
            parameters: Vec::new(),
            gradient_check: None,
            wall_time_s: 0.0,
            finished_at,
        }
    }

    #[test]
    fn method_tags_round_trip() {
        for m in [Method::CdAdapt, Method::AdaptFermionic, Method::Dcqo, Method::Fci] {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.tag()));
        }
    }

    #[test]
    fn compare_rules() {
        let one = compare(&[report(Method::Dcqo, "BeH2", 1.0, 1e-2)]).unwrap();
        assert_eq!(one.len(), 1);
        let dup = compare(&[
            report(Method::Dcqo, "BeH2", 2.0, 1e-2),
            report(Method::Dcqo, "BeH2", 1.0, 5e-2),
            report(Method::CdAdapt, "BeH2", 1.0, 1e-5),
        ])
        .unwrap();
        assert_eq!(dup.len(), 2);
        assert_eq!(dup[0].method, "cd_adapt");
        assert_eq!(dup[1].error, Some(1e-2));
        assert!(compare(&[report(Method::Dcqo, "BeH2", 1.0, 0.0), report(Method::Fci, "LiH", 1.0, 0.0)]).is_err());
    }

    #[test]
    fn empty_csv_keeps_header() {
        let s = csv_string::<ScanRow>(&SCAN_HEADER, &[]).unwrap();
        assert_eq!(s, "distance,method,molecule,energy,fci_energy,error,n_params,n_cnots,iterations\n");
    }

    #[test]
    fn table_layout() {
        let rows = compare(&[report(Method::Fci, "H2", 0.0, 0.0)]).unwrap();
        let t = pretty_table(&rows);
        assert_eq!(t.lines().count(), 2);
        assert!(t.starts_with("method"));
    }
}
