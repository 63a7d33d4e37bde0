//! Scripted statistical reproductions, one per claim cluster.
//!
//! Each experiment is a pure function of its effective configuration and the
//! master seed. It returns a [`Report`] whose claims carry explicit expected
//! values and tolerances; the CLI exit status is 0 exactly when every claim
//! passes.

mod bound;
mod clt;
mod complete;
mod earthworm;
mod mixing;
mod moments;
mod oracle_tables;
mod region;
mod rim;
mod small_k;
mod spectrum;

pub use bound::{coupling_bound, f101_bound_check, BoundParams};
pub use clt::{clt_experiment, CltExperimentParams};
pub use complete::{complete_graph_limit, CompleteParams};
pub use earthworm::{earthworm_run, EarthwormParams};
pub use mixing::{mixing_decay_fit, MixingParams};
pub use moments::{estimate_moments, MomentsParams};
pub use oracle_tables::{oracle_tables, OracleTablesParams};
pub use region::{region_variance, RegionParams};
pub use rim::{rim_height, rim_height_ode, RimParams};
pub use small_k::{small_k_exact_check, SmallKParams};
pub use spectrum::{crater_spectrum, SpectrumParams};

use std::time::Instant;

use crate::cli::ExperimentConfig;
use crate::error::Result;
use crate::report::Report;

type Runner = fn(&ExperimentConfig) -> Result<Report>;

/// The closed experiment registry.
pub const REGISTRY: &[(&str, Runner)] = &[
    ("oracle-tables", oracle_tables::run),
    ("crater-spectrum", spectrum::run),
    ("moments", moments::run),
    ("rim-height", rim::run),
    ("mixing-decay", mixing::run),
    ("coupling-bound", bound::run),
    ("complete-graph", complete::run),
    ("small-k", small_k::run),
    ("clt", clt::run),
    ("earthworm", earthworm::run),
    ("region-variance", region::run),
];

/// Dispatches a validated config to its experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    crate::cli::validate(cfg)?;
    let runner = REGISTRY
        .iter()
        .find(|(name, _)| *name == cfg.experiment)
        .map(|(_, f)| *f)
        .expect("validate checked the name");
    runner(cfg)
}

/// Wall-clock budget; experiments poll it at replication boundaries and mark
/// the report incomplete when exceeded.
pub(crate) struct Budget {
    start: Instant,
    limit_seconds: Option<f64>,
}

impl Budget {
    pub(crate) fn new(limit_seconds: Option<f64>) -> Budget {
        Budget { start: Instant::now(), limit_seconds }
    }

    pub(crate) fn exceeded(&self) -> bool {
        match self.limit_seconds {
            Some(limit) => self.start.elapsed().as_secs_f64() > limit,
            None => false,
        }
    }
}

pub(crate) fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<&str> = REGISTRY.iter().map(|(n, _)| *n).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
    }

    #[test]
    fn pearson_of_identical_series_is_one() {
        let xs = [1.0, 2.0, 5.0, 3.0];
        assert!((pearson(&xs, &xs) - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg) + 1.0).abs() < 1e-12);
    }
}
