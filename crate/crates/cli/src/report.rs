use std::io::Write;

use serde::{Deserialize, Serialize};
use torusspec::asymptotics::{LogFit, UEstimate, KERNEL_READING, SECTOR_CONVENTION};
use torusspec::birman_schwinger::CountResult;
use torusspec::friedrichs::{BandSet, BranchEndpoints, Classification, CriticalConstants};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mu: f64,
    pub gamma: f64,
    pub grid: usize,
    pub kgrid: usize,
    pub tol: f64,
    pub measure: String,
    pub kernel_reading: String,
    pub sector_convention: String,
    pub side: Option<String>,
    pub z: Option<f64>,
    pub r_list: Option<Vec<f64>>,
}

impl Params {
    pub fn new(mu: f64, gamma: f64, grid: usize, kgrid: usize, tol: f64, measure: &str) -> Self {
        Self {
            mu,
            gamma,
            grid,
            kgrid,
            tol,
            measure: measure.to_string(),
            kernel_reading: KERNEL_READING.to_string(),
            sector_convention: SECTOR_CONVENTION.to_string(),
            side: None,
            z: None,
            r_list: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edges {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    /// Fiber edges `(m(k), M(k))` at `k = 0` and `k = pi`.
    pub at_zero: [f64; 2],
    pub at_pi: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub command: String,
    pub params: Params,
    pub edges: Option<Edges>,
    pub bands: Option<BandSet>,
    pub branch: Option<BranchEndpoints>,
    pub constants: Option<CriticalConstants>,
    pub classification: Option<Classification>,
    pub counts: Vec<CountResult>,
    pub eigenvalues: Vec<f64>,
    pub u_estimates: Vec<UEstimate>,
    pub fits: Vec<LogFit>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

impl SpectralReport {
    pub fn new(command: &str, params: Params, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            params,
            edges: None,
            bands: None,
            branch: None,
            constants: None,
            classification: None,
            counts: Vec::new(),
            eigenvalues: Vec::new(),
            u_estimates: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            provenance: Provenance { version: env!("CARGO_PKG_VERSION").to_string(), seed, elapsed_seconds: None },
        }
    }

    /// Key-sorted pretty JSON with a trailing newline.
    pub fn to_json(&self) -> serde_json::Result<String> {
        // serde_json's map is a BTreeMap, so going through Value sorts keys
        let v = serde_json::to_value(self)?;
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// A plot-ready table with a header row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub fn emit_report<W: Write>(report: &SpectralReport, table: &Table, format: Format, mut sink: W) -> std::io::Result<()> {
    let text = match format {
        Format::Json => report.to_json().map_err(std::io::Error::other)?,
        Format::Csv => table.to_csv(),
    };
    sink.write_all(text.as_bytes())?;
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use torusspec::birman_schwinger::CountSide;

    fn sample() -> SpectralReport {
        let mut r = SpectralReport::new("count", Params::new(0.35, 6.0, 64, 16, 1e-6, "lebesgue"), 3);
        r.bands = Some(BandSet::three_particle());
        r.counts.push(CountResult { z: -0.1, side: CountSide::Below, count: 2, grid_n: 64 });
        r.eigenvalues = vec![-1.0 / 3.0, -2.5e-17];
        r.provenance.elapsed_seconds = Some(0.25);
        r
    }

    #[test]
    fn json_round_trip_is_a_fixed_point() {
        let a = sample().to_json().unwrap();
        let back = SpectralReport::from_json(&a).unwrap();
        assert_eq!(back, sample());
        assert_eq!(back.to_json().unwrap(), a);
    }

    #[test]
    fn keys_sorted() {
        let s = sample().to_json().unwrap();
        let top: Vec<&str> = s
            .lines()
            .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = top.clone();
        sorted.sort();
        assert_eq!(top, sorted);
    }

    #[test]
    fn timing_omitted_when_absent() {
        let mut r = sample();
        r.provenance.elapsed_seconds = None;
        assert!(!r.to_json().unwrap().contains("elapsed"));
    }

    #[test]
    fn csv_header() {
        let mut t = Table::new(&["z", "N", "log_abs"]);
        t.push(["-0.01".to_string(), "1".into(), "4.6".into()]);
        assert_eq!(t.to_csv(), "z,N,log_abs\n-0.01,1,4.6\n");
    }
}
