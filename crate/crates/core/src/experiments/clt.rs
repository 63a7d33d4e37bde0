//! Normal fluctuations of the crater count on a large cycle.
//!
//! Each replication runs an independent stream for a fixed event count
//! (rejecting the rare replication whose stream misses a vertex, which keeps
//! the rank permutation exactly uniform), counts craters, and standardizes
//! by the enumeration-exact mean and variance parameters.

use rayon::prelude::*;
use serde::Serialize;

use crate::cli::ExperimentConfig;
use crate::craters::detect_craters;
use crate::derive_seed;
use crate::engine::{EventStream, MassState, Simulator};
use crate::error::{Error, Result};
use crate::graph::{Graph, RedistributionMatrix};
use crate::oracle::{clt_params, PatternSpec};
use crate::report::{Claim, Report};
use crate::stats::Accumulator;

#[derive(Debug, Clone, Serialize)]
pub struct CltExperimentParams {
    pub k: u32,
    pub reps: u64,
    pub events_per_rep: Option<u64>,
    pub budget_seconds: Option<f64>,
}

impl Default for CltExperimentParams {
    fn default() -> Self {
        CltExperimentParams { k: 100_000, reps: 1_000, events_per_rep: None, budget_seconds: None }
    }
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let mut params = CltExperimentParams::default();
    if let Some(spec) = &cfg.graph {
        match spec {
            crate::cli::GraphSpec::Cycle { k } => params.k = *k,
            other => {
                return Err(Error::Config(format!("clt runs on cycles, got {}", other.label())))
            }
        }
    }
    if let Some(reps) = cfg.reps {
        params.reps = reps;
    }
    params.events_per_rep = cfg.burn_in_events;
    params.budget_seconds = cfg.budget_seconds;
    let report = clt_experiment(&params, cfg.seed)?;
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        report.write_json(&dir.join("clt.json"))?;
        report.write_claims_csv(&dir.join("clt-claims.csv"))?;
    }
    Ok(report)
}

/// Crater count of one replication, or `None` if some vertex was never hit.
fn one_rep(g: &Graph, p: &RedistributionMatrix, events: u64, seed: u64) -> Option<usize> {
    let mut stream = EventStream::for_graph(g, seed);
    let mut sim = Simulator::new(g, p, MassState::uniform(g)).expect("dimensions match");
    sim.run_events(&mut stream, events);
    if !sim.all_hit() {
        return None;
    }
    Some(detect_craters(sim.state(), g).len())
}

pub fn clt_experiment(params: &CltExperimentParams, seed: u64) -> Result<Report> {
    let g = Graph::cycle(params.k)?;
    let p = RedistributionMatrix::uniform(&g);
    let k = params.k as f64;
    let events = params
        .events_per_rep
        .unwrap_or_else(|| (k * (k.ln() + 9.2)).ceil() as u64);
    let budget = super::Budget::new(params.budget_seconds);

    let crater = PatternSpec::crater();
    let exact = clt_params(&crater)?;
    let mu = exact.mu; // 1/3
    let sigma = exact.sigma; // sqrt(2/45)

    let mut report = Report::new(
        "clt",
        &format!("cycle:{}", params.k),
        seed,
        serde_json::json!({
            "k": params.k,
            "reps": params.reps,
            "events_per_rep": events,
            "mu": mu,
            "sigma": sigma,
        }),
    );

    let chunk = 64usize;
    let mut z_acc = Accumulator::new();
    let mut count_acc = Accumulator::new();
    let mut rep = 0u64;
    let mut incomplete = false;
    while rep < params.reps {
        if budget.exceeded() {
            incomplete = true;
            break;
        }
        let batch = chunk.min((params.reps - rep) as usize);
        let counts: Vec<usize> = (0..batch)
            .into_par_iter()
            .map(|i| {
                let r = rep + i as u64;
                // rejection keeps the conditional law exact; a fresh seed per
                // attempt preserves determinism
                for attempt in 0..32u64 {
                    let s = derive_seed(seed, "clt-rep", r * 64 + attempt);
                    if let Some(c) = one_rep(&g, &p, events, s) {
                        return c;
                    }
                }
                panic!("coverage rejection failed 32 times; events_per_rep too small");
            })
            .collect();
        for c in counts {
            let z = (c as f64 - k * mu) / (sigma * k.sqrt());
            z_acc.push(z);
            count_acc.push(c as f64);
        }
        rep += batch as u64;
    }
    if incomplete {
        report.mark_incomplete();
    }

    report.push(Claim::within(
        "standardized-mean",
        "mean of (N - k mu)/(sigma sqrt k) over replications",
        z_acc.mean(),
        0.0,
        0.1,
    ));
    report.push(Claim::in_interval(
        "standardized-variance",
        "variance of the standardized crater count",
        z_acc.variance(),
        0.9,
        1.1,
    ));
    report.push(Claim::within(
        "raw-mean",
        "mean crater count vs k/3, 4 stderr",
        count_acc.mean(),
        k * mu,
        4.0 * count_acc.stderr().max(1e-12),
    ));
    Ok(report)
}
