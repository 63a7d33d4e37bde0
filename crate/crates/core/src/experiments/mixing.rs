//! Decay of the coupling distance on cycles of growing size.
//!
//! Two copies share one event stream (point mass at the origin vs uniform);
//! the L1 distance between them is nonincreasing along every run, and its
//! mean decays exponentially with a rate scaling like n^-2 on the n-cycle.

use rayon::prelude::*;
use serde::Serialize;

use crate::cli::ExperimentConfig;
use crate::derive_seed;
use crate::engine::{CoupledSim, EventStream, MassState};
use crate::error::{Error, Result};
use crate::graph::{Graph, RedistributionMatrix};
use crate::report::{Claim, Report};
use crate::stats::{linear_fit, Accumulator};

#[derive(Debug, Clone, Serialize)]
pub struct MixingParams {
    pub n_list: Vec<u32>,
    pub reps: u64,
    pub grid_points: usize,
    /// Horizon and fit window in units of n^2.
    pub horizon_factor: f64,
    pub fit_from_factor: f64,
}

impl Default for MixingParams {
    fn default() -> Self {
        MixingParams {
            n_list: vec![8, 16, 32],
            reps: 200,
            grid_points: 25,
            horizon_factor: 1.2,
            fit_from_factor: 0.2,
        }
    }
}

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let mut params = MixingParams::default();
    if let Some(reps) = cfg.reps {
        params.reps = reps;
    }
    let report = mixing_decay_fit(&params, cfg.seed)?;
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        report.write_json(&dir.join("mixing-decay.json"))?;
        report.write_claims_csv(&dir.join("mixing-decay-claims.csv"))?;
    }
    Ok(report)
}

/// `D` sampled at the grid times plus the largest single-step increase seen
/// along the run (should be zero up to float noise).
pub(super) fn coupled_d_at_grid(
    g: &Graph,
    p: &RedistributionMatrix,
    a: MassState,
    b: MassState,
    grid: &[f64],
    stream: &mut EventStream,
) -> Result<(Vec<f64>, f64)> {
    let mut coupled = CoupledSim::new(g, p, a, b)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut gi = 0;
    let mut max_increase: f64 = 0.0;
    let mut prev = coupled.distance();
    loop {
        let ev = stream.next_event();
        while gi < grid.len() && ev.time > grid[gi] {
            out.push(coupled.distance());
            gi += 1;
        }
        if gi == grid.len() {
            break;
        }
        coupled.step(ev);
        let d = coupled.distance();
        max_increase = max_increase.max(d - prev);
        prev = d;
    }
    Ok((out, max_increase))
}

pub fn mixing_decay_fit(params: &MixingParams, seed: u64) -> Result<Report> {
    if params.n_list.len() < 2 {
        return Err(Error::Validation("need at least two sizes to fit a scaling".into()));
    }
    let mut report = Report::new(
        "mixing-decay",
        &format!("cycle:{:?}", params.n_list),
        seed,
        serde_json::to_value(params)?,
    );

    let mut rates = Vec::new();
    let mut max_increase_overall: f64 = 0.0;
    for (ni, &n) in params.n_list.iter().enumerate() {
        let g = Graph::cycle(n)?;
        let p = RedistributionMatrix::uniform(&g);
        let horizon = params.horizon_factor * (n as f64) * (n as f64);
        let grid: Vec<f64> = (1..=params.grid_points)
            .map(|i| horizon * i as f64 / params.grid_points as f64)
            .collect();

        let runs: Vec<(Vec<f64>, f64)> = (0..params.reps)
            .into_par_iter()
            .map(|rep| {
                let mut stream =
                    EventStream::for_graph(&g, derive_seed(seed, "mixing", (ni as u64) << 32 | rep));
                let a = MassState::point_mass(&g, 0, n as f64).unwrap();
                let b = MassState::uniform(&g);
                coupled_d_at_grid(&g, &p, a, b, &grid, &mut stream).unwrap()
            })
            .collect();

        let mut accs = vec![Accumulator::new(); grid.len()];
        for (ds, inc) in &runs {
            max_increase_overall = max_increase_overall.max(*inc);
            for (acc, &d) in accs.iter_mut().zip(ds) {
                acc.push(d);
            }
        }
        // fit log E D over the late window where the decay is exponential
        let fit_from = params.fit_from_factor * (n as f64) * (n as f64);
        let mut ts = Vec::new();
        let mut logs = Vec::new();
        for (t, acc) in grid.iter().zip(&accs) {
            if *t >= fit_from && acc.mean() > 0.0 {
                ts.push(*t);
                logs.push(acc.mean().ln());
            }
        }
        if ts.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "only {} usable grid points for n = {n}",
                ts.len()
            )));
        }
        let (slope, _) = linear_fit(&ts, &logs);
        let rate = -slope;
        if !(rate > 0.0) {
            return Err(Error::InsufficientData(format!("nonpositive decay rate for n = {n}")));
        }
        rates.push((n, rate));
    }

    report.push(Claim::at_most(
        "d-nonincreasing",
        "largest single-event increase of D over every run and size",
        max_increase_overall,
        1e-9,
    ));

    let log_n: Vec<f64> = rates.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let log_r: Vec<f64> = rates.iter().map(|&(_, r)| r.ln()).collect();
    let (exponent, _) = linear_fit(&log_n, &log_r);
    report.push(Claim::in_interval(
        "rate-scaling-exponent",
        "slope of log rate vs log n; diffusive scaling predicts -2",
        exponent,
        -2.5,
        -1.5,
    ));

    for w in rates.windows(2) {
        let (n0, r0) = w[0];
        let (n1, r1) = w[1];
        if n1 == 2 * n0 {
            report.push(Claim::in_interval(
                &format!("rate-ratio-{n0}-{n1}"),
                "rate(2n)/rate(n) vs 1/4, within 30%",
                r1 / r0,
                0.25 * 0.7,
                0.25 * 1.3,
            ));
        }
    }
    Ok(report)
}
