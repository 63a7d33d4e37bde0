//! Experiment reports: named claims with observed/expected values and
//! pass/fail flags, serialized to JSON plus CSV side files.
//!
//! Reports carry no timestamps or machine identifiers: a report is a pure
//! function of the effective config and the master seed, so reruns are
//! byte-identical.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One checked statement: an observed value against an expected value with
/// an explicit tolerance. `tolerance` is the half-width of the accepted
/// interval around `expected`; claims that are pure lower/upper bound checks
/// encode the bound in `expected`/`tolerance` and say so in `detail`.
#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub id: String,
    pub detail: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Claim {
    /// |observed - expected| <= tolerance.
    pub fn within(id: &str, detail: &str, observed: f64, expected: f64, tolerance: f64) -> Claim {
        Claim {
            id: id.to_string(),
            detail: detail.to_string(),
            observed,
            expected,
            tolerance,
            pass: (observed - expected).abs() <= tolerance && observed.is_finite(),
        }
    }

    /// observed <= bound.
    pub fn at_most(id: &str, detail: &str, observed: f64, bound: f64) -> Claim {
        Claim {
            id: id.to_string(),
            detail: detail.to_string(),
            observed,
            expected: bound,
            tolerance: 0.0,
            pass: observed <= bound,
        }
    }

    /// observed in [lo, hi].
    pub fn in_interval(id: &str, detail: &str, observed: f64, lo: f64, hi: f64) -> Claim {
        Claim {
            id: id.to_string(),
            detail: detail.to_string(),
            observed,
            expected: 0.5 * (lo + hi),
            tolerance: 0.5 * (hi - lo),
            pass: observed >= lo && observed <= hi,
        }
    }

    pub fn boolean(id: &str, detail: &str, pass: bool) -> Claim {
        Claim {
            id: id.to_string(),
            detail: detail.to_string(),
            observed: if pass { 1.0 } else { 0.0 },
            expected: 1.0,
            tolerance: 0.0,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: String,
    pub graph: String,
    pub seed: u64,
    /// Echo of the effective configuration, defaults filled in.
    pub config: serde_json::Value,
    pub claims: Vec<Claim>,
    /// Set when a runtime budget cut the experiment short.
    pub incomplete: bool,
    pub pass: bool,
}

impl Report {
    pub fn new(experiment: &str, graph: &str, seed: u64, config: serde_json::Value) -> Report {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: experiment.to_string(),
            graph: graph.to_string(),
            seed,
            config,
            claims: Vec::new(),
            incomplete: false,
            pass: true,
        }
    }

    pub fn push(&mut self, claim: Claim) {
        self.pass &= claim.pass;
        self.claims.push(claim);
    }

    pub fn mark_incomplete(&mut self) {
        self.incomplete = true;
        self.pass = false;
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// Claims as CSV: `id,observed,expected,tolerance,pass`.
    pub fn claims_csv(&self) -> String {
        let mut out = String::from("id,observed,expected,tolerance,pass\n");
        for c in &self.claims {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{}\n",
                c.id, c.observed, c.expected, c.tolerance, c.pass
            ));
        }
        out
    }

    pub fn write_claims_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.claims_csv())?;
        Ok(())
    }
}

/// Writes a rectangular CSV with the given header.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Trajectory export with the standard header.
pub fn write_trajectory_csv(path: &Path, samples: &[crate::engine::SampleRow]) -> Result<()> {
    let mut out = String::from("event,time,vertex,total_mass,crater_count\n");
    for s in samples {
        out.push_str(&format!(
            "{},{:.12e},{},{:.12e},{}\n",
            s.event_index, s.time, s.vertex, s.total_mass, s.crater_count
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_constructors() {
        assert!(Claim::within("a", "", 1.02, 1.0, 0.05).pass);
        assert!(!Claim::within("a", "", 1.06, 1.0, 0.05).pass);
        assert!(Claim::at_most("b", "", 0.3, 0.5).pass);
        assert!(Claim::in_interval("c", "", 1.64, 1.625, 1.667).pass);
        assert!(!Claim::in_interval("c", "", 1.7, 1.625, 1.667).pass);
        assert!(!Claim::within("d", "", f64::NAN, 1.0, 10.0).pass);
    }

    #[test]
    fn report_pass_tracks_claims() {
        let mut r = Report::new("x", "cycle:4", 1, serde_json::json!({}));
        r.push(Claim::boolean("ok", "", true));
        assert!(r.pass);
        r.push(Claim::boolean("bad", "", false));
        assert!(!r.pass);
        let json = r.to_json().unwrap();
        assert!(json.contains("\"experiment\": \"x\""));
        let csv = r.claims_csv();
        assert!(csv.lines().count() == 3);
    }
}
