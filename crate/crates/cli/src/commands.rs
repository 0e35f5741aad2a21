use std::path::PathBuf;

use torusspec::asymptotics::{count_table_csv, fit_log_asymptotics, u_estimate};
use torusspec::birman_schwinger::{count_discrete, locate_eigenvalues, CountResult, CountSide};
use torusspec::friedrichs::{
    classify_bands, critical_constants, critical_mu_with, two_particle_branch, BandSet, Side,
};
use torusspec::lattice::{band_edges_for_k, global_band_edges, CouplingParams, SearchSpec, TorusPoint};
use torusspec::oracle::{build_direct_matrix, direct_counts, direct_spectrum, dump};
use torusspec::quadrature::{Measure, QuadratureSpec, TorusGrid};

use crate::report::{Edges, Format, Params, SpectralReport, Table};
use crate::selftest;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Global band edges m, M and the fiber edges at the corners
    Edges,
    /// The two-particle branch of the essential spectrum
    Branch,
    /// The essential spectrum as a union of closed intervals
    Spectrum,
    /// Band structure at the critical coupling of --side, checked against the regime map
    Classify,
    /// gamma0, gamma1, mu0 and the critical couplings at --gamma
    Critical,
    /// Discrete eigenvalues below --z < 0 or above --z > 18 on the --grid discretization
    Count,
    /// Locate discrete eigenvalues inside --window
    Eigs,
    /// Direct finite-section matrix: counts at --z or the spectrum outside the bands
    Oracle,
    /// U(1) from --r-list; with --fit, log fits of counts at both thresholds
    Asymp,
    /// Run the invariant suites
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Edges => "edges",
            Command::Branch => "branch",
            Command::Spectrum => "spectrum",
            Command::Classify => "classify",
            Command::Critical => "critical",
            Command::Count => "count",
            Command::Eigs => "eigs",
            Command::Oracle => "oracle",
            Command::Asymp => "asymp",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub gamma: f64,
    pub mu: f64,
    pub grid: usize,
    pub kgrid: usize,
    pub z: Option<f64>,
    pub side: Option<String>,
    pub tol: f64,
    pub r_list: Vec<f64>,
    pub window: (f64, f64),
    pub max_count: usize,
    pub out: Format,
    pub output: Option<PathBuf>,
    pub measure: Measure,
    pub seed: u64,
    pub timing: bool,
    pub dump: Option<PathBuf>,
    pub fit: bool,
}

impl Settings {
    fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec { tol: self.tol, measure: self.measure, ..QuadratureSpec::with_n(self.grid) }
    }

    fn params(&self) -> Result<CouplingParams, CliError> {
        Ok(CouplingParams::new(self.mu, self.gamma)?)
    }

    fn report_params(&self) -> Params {
        let mut p = Params::new(self.mu, self.gamma, self.grid, self.kgrid, self.tol, self.measure.label());
        p.z = self.z;
        p.side = self.side.clone();
        p
    }

    fn z(&self) -> Result<f64, CliError> {
        self.z.ok_or_else(|| CliError::Usage("this command needs --z".into()))
    }

    /// Parsed `--side below|above`, checked against `z`.
    fn count_side(&self, z: f64) -> Result<CountSide, CliError> {
        let from_z = CountSide::of(z)
            .ok_or_else(|| CliError::Core(torusspec::Error::Domain(format!("z = {z} lies in [0, 18]"))))?;
        if let Some(s) = &self.side {
            let s: CountSide = s.parse()?;
            if s != from_z {
                return Err(CliError::Usage(format!("--side {s:?} does not match z = {z}")));
            }
        }
        Ok(from_z)
    }
}

/// Warns when `z` is closer to a threshold than the grid resolves.
fn resolution_warning(z: f64, n: usize) -> Option<String> {
    let dist = z.abs().min((z - 18.0).abs());
    let res = (2.0 * std::f64::consts::PI / n as f64).powi(2);
    (dist < res).then(|| {
        format!("z = {z} is within {dist:e} of a threshold, finer than the grid resolution (2 pi / {n})^2 = {res:e}")
    })
}

fn interval_table(set: &BandSet) -> Table {
    let mut t = Table::new(&["lo", "hi"]);
    for iv in &set.intervals {
        t.push([iv[0].to_string(), iv[1].to_string()]);
    }
    t
}

pub fn run(cmd: Command, s: &Settings) -> Result<(SpectralReport, Table), CliError> {
    let mut rep = SpectralReport::new(cmd.name(), s.report_params(), s.seed);
    let table = match cmd {
        Command::Edges => {
            let (m, big_m) = global_band_edges()?;
            let search = SearchSpec::default();
            let e0 = band_edges_for_k(&TorusPoint::zero(), &search)?;
            let ep = band_edges_for_k(&TorusPoint::pi(), &search)?;
            rep.edges = Some(Edges { m, big_m, at_zero: [e0.min, e0.max], at_pi: [ep.min, ep.max] });
            let mut t = Table::new(&["quantity", "value"]);
            for (k, v) in [("m", m), ("M", big_m), ("m(0)", e0.min), ("M(0)", e0.max), ("m(pi)", ep.min), ("M(pi)", ep.max)] {
                t.push([k.to_string(), v.to_string()]);
            }
            t
        }
        Command::Branch | Command::Spectrum => {
            let (lambda, ends) = two_particle_branch(&s.params()?, s.kgrid, &s.quadrature())?;
            rep.branch = Some(ends);
            let set = if cmd == Command::Branch { lambda } else { BandSet::three_particle().union(&lambda) };
            let t = interval_table(&set);
            rep.bands = Some(set);
            t
        }
        Command::Classify => {
            let side: Side = s
                .side
                .as_deref()
                .ok_or_else(|| CliError::Usage("classify needs --side left|right".into()))?
                .parse()?;
            let spec = s.quadrature();
            let c = critical_constants(s.kgrid, &spec)?;
            let cl = classify_bands(s.gamma, side, &c, s.kgrid, &spec)?;
            rep.params.mu = cl.mu;
            rep.constants = Some(c);
            rep.bands = Some(cl.computed.clone());
            rep.branch = Some(cl.endpoints);
            let t = interval_table(&cl.computed);
            rep.classification = Some(cl);
            t
        }
        Command::Critical => {
            let c = critical_constants(s.kgrid, &s.quadrature())?;
            let mut t = Table::new(&["quantity", "value"]);
            for (k, v) in [("gamma0", c.gamma0), ("gamma1", c.gamma1), ("mu0", c.mu0), ("j0", c.j0)] {
                t.push([k.to_string(), v.to_string()]);
            }
            // with --side the coupling must exist; without it, report whichever does
            let only: Option<Side> = s.side.as_deref().map(str::parse).transpose()?;
            for (k, side) in [("mu_left", Side::Left), ("mu_right", Side::Right)] {
                if only.is_some_and(|o| o != side) {
                    continue;
                }
                match critical_mu_with(s.gamma, side, s.measure) {
                    Ok(v) => t.push([k.to_string(), v.to_string()]),
                    Err(e) if only.is_some() => return Err(e.into()),
                    Err(e) => rep.warnings.push(format!("{k}: {e}")),
                }
            }
            rep.constants = Some(c);
            t
        }
        Command::Count => {
            let z = s.z()?;
            s.count_side(z)?;
            rep.warnings.extend(resolution_warning(z, s.grid));
            let grid = TorusGrid::with_measure(s.grid, s.measure)?;
            let c = count_discrete(&s.params()?, z, &grid)?;
            rep.counts.push(c);
            let mut t = Table::new(&["z", "N"]);
            t.push([z.to_string(), c.count.to_string()]);
            t
        }
        Command::Eigs => {
            let grid = TorusGrid::with_measure(s.grid, s.measure)?;
            let ev = locate_eigenvalues(&s.params()?, s.window, s.max_count, &grid)?;
            let mut t = Table::new(&["index", "z"]);
            for (i, e) in ev.iter().enumerate() {
                t.push([i.to_string(), e.to_string()]);
            }
            rep.eigenvalues = ev;
            t
        }
        Command::Oracle => {
            let mat = build_direct_matrix(&s.params()?, s.grid)?;
            if let Some(path) = &s.dump {
                let f = std::fs::File::create(path).map_err(torusspec::Error::from)?;
                dump(&mat, std::io::BufWriter::new(f))?;
            }
            match s.z {
                Some(z) => {
                    let side = s.count_side(z)?;
                    let count = direct_counts(&mat, z, side)?;
                    rep.counts.push(CountResult { z, side, count, grid_n: s.grid });
                    let mut t = Table::new(&["z", "N"]);
                    t.push([z.to_string(), count.to_string()]);
                    t
                }
                None => {
                    let ev = direct_spectrum(&mat)?;
                    let (lo, hi) = (-mat.band_fuzz, 18.0 + mat.band_fuzz);
                    rep.eigenvalues = ev.into_iter().filter(|e| *e < lo || *e > hi).collect();
                    rep.warnings.push(format!("band cluster [{lo}, {hi}] excluded"));
                    let mut t = Table::new(&["index", "z"]);
                    for (i, e) in rep.eigenvalues.iter().enumerate() {
                        t.push([i.to_string(), e.to_string()]);
                    }
                    t
                }
            }
        }
        Command::Asymp => {
            rep.params.r_list = Some(s.r_list.clone());
            let u = u_estimate(1.0, &s.r_list)?;
            let mut t = Table::new(&["r", "count"]);
            for line in count_table_csv(&u.counts).lines().skip(1) {
                t.push(line.split(',').map(str::to_string));
            }
            rep.u_estimates.push(u);
            if s.fit {
                let p = s.params()?;
                let grid = TorusGrid::with_measure(s.grid, s.measure)?;
                t = Table::new(&["z", "N", "log_abs"]);
                for threshold in [0.0, 18.0] {
                    let dir = if threshold == 0.0 { -1.0 } else { 1.0 };
                    let mut samples = Vec::new();
                    for k in 2..=5 {
                        let z = threshold + dir * 10f64.powi(-k);
                        rep.warnings.extend(resolution_warning(z, s.grid));
                        let c = count_discrete(&p, z, &grid)?;
                        rep.counts.push(c);
                        samples.push((z, c.count));
                        t.push([z.to_string(), c.count.to_string(), (z - threshold).abs().ln().abs().to_string()]);
                    }
                    rep.fits.push(fit_log_asymptotics(&samples, threshold)?);
                }
            }
            t
        }
        Command::Selftest => {
            rep.checks = selftest::run(s.seed);
            let mut t = Table::new(&["suite", "check", "status"]);
            for c in &rep.checks {
                t.push([c.suite.clone(), c.name.clone(), if c.passed { "pass" } else { "FAIL" }.to_string()]);
            }
            t
        }
    };
    Ok((rep, table))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("bad number {v:?}: {e}"))))
        .collect()
}
