//! Result records and their CSV/JSON encodings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use qnet_core::dynamics::Trajectory;

/// One estimator run at one θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRecord {
    pub estimator: String,
    pub criterion: String,
    pub theta: f64,
    #[serde(rename = "M")]
    pub reps: usize,
    pub mean: f64,
    pub variance: f64,
    pub ci95: f64,
    /// `none` for estimators without a score term.
    pub psi_mode: String,
    pub ties_observed: usize,
    pub seed: u64,
    pub spec_hash: String,
}

/// Ground-truth values at one θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleRecord {
    /// `closed-form` or `mixture`.
    pub source: String,
    pub criterion: String,
    pub theta: f64,
    pub expected_f: f64,
    pub d_expected_f: f64,
    pub expected_ipa: f64,
    pub expected_g: f64,
    /// `|dE[F]/dθ − E[G]|`.
    pub residual: f64,
    /// Lattice points per coordinate; 0 for closed forms.
    pub grid_m: usize,
    pub spec_hash: String,
}

/// One timestamp of a simulated trajectory. Nodes and `k` are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryRow {
    pub node: usize,
    pub k: usize,
    /// `A` or `D`.
    pub event: char,
    pub value: f64,
    pub deriv: f64,
    /// Next node after a departure.
    pub route: Option<usize>,
}

pub trait CsvRecord {
    const HEADER: &'static str;
    fn write_row(&self, out: &mut String);
}

impl CsvRecord for EstimateRecord {
    const HEADER: &'static str = "estimator,criterion,theta,reps,mean,variance,ci95,psi_mode,ties,seed";

    fn write_row(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            self.estimator,
            self.criterion,
            self.theta,
            self.reps,
            self.mean,
            self.variance,
            self.ci95,
            self.psi_mode,
            self.ties_observed,
            self.seed
        );
    }
}

impl CsvRecord for OracleRecord {
    const HEADER: &'static str = "source,criterion,theta,expected_f,d_expected_f,expected_ipa,expected_g,residual,grid_m";

    fn write_row(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            self.source,
            self.criterion,
            self.theta,
            self.expected_f,
            self.d_expected_f,
            self.expected_ipa,
            self.expected_g,
            self.residual,
            self.grid_m
        );
    }
}

impl CsvRecord for TrajectoryRow {
    const HEADER: &'static str = "node,k,event,value,deriv,route";

    fn write_row(&self, out: &mut String) {
        let route = self.route.map(|r| r.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{}", self.node, self.k, self.event, self.value, self.deriv, route);
    }
}

pub fn to_csv<R: CsvRecord>(records: &[R]) -> String {
    let mut out = String::new();
    out.push_str(R::HEADER);
    out.push('\n');
    for r in records {
        r.write_row(&mut out);
    }
    out
}

/// Pretty JSON array with a trailing newline.
pub fn to_json<R: Serialize>(records: &[R]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records serialize");
    s.push('\n');
    s
}

/// Arrivals then departures per node, in node order.
pub fn trajectory_rows(traj: &Trajectory) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for (n, path) in traj.nodes.iter().enumerate() {
        for (k, a) in path.arrivals.iter().enumerate() {
            rows.push(TrajectoryRow { node: n + 1, k: k + 1, event: 'A', value: a.value, deriv: a.deriv, route: None });
        }
        for (k, d) in path.departures.iter().enumerate() {
            let route = path.routes.get(k).map(|r| r + 1);
            rows.push(TrajectoryRow { node: n + 1, k: k + 1, event: 'D', value: d.value, deriv: d.deriv, route });
        }
    }
    rows
}
