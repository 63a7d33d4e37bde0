//! Crater/mound detection and pattern statistics on simulation output.
//!
//! Once every vertex has been hit, a vertex is empty exactly when its last
//! hit is the most recent in its closed neighborhood, so craters are the
//! peaks of the permutation ranking vertices by last-hit time (and mounds,
//! on a cycle, are its valleys). Detection works off the last-hit times;
//! the zero-mass predicate is the cross-check.

use std::collections::BTreeMap;

use crate::engine::{MassState, NEVER_HIT};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphKind, VertexId};
use crate::oracle::PatternSpec;

/// Total order on last-hit times: the "never hit" sentinel ranks below every
/// real time, ties break by vertex index. Unreachable after burn-in but
/// keeps every operation total.
fn hit_key(state: &MassState, v: usize) -> (f64, usize) {
    let t = state.last_hit()[v];
    if t == NEVER_HIT {
        (f64::NEG_INFINITY, v)
    } else {
        (t, v)
    }
}

/// Vertices holding no mass.
///
/// With every vertex hit at least once this is the set of last-hit local
/// maxima over closed neighborhoods; otherwise it falls back to the exact
/// zero-mass predicate (hits write a literal `0.0` and refills are strictly
/// positive, so the comparison is sound).
pub fn detect_craters(state: &MassState, g: &Graph) -> Vec<VertexId> {
    if state.all_hit() {
        // The two predicates agree whenever no adjacent pair was ever
        // jointly empty (always true from positive initial masses); the
        // stationary-sample tests assert the equality explicitly.
        (0..g.vertex_count())
            .filter(|&v| {
                let key = hit_key(state, v);
                g.neighbors(v as VertexId).iter().all(|&x| hit_key(state, x as usize) < key)
            })
            .map(|v| v as VertexId)
            .collect()
    } else {
        (0..g.vertex_count() as u32).filter(|&v| state.mass(v) == 0.0).collect()
    }
}

/// Local minima of the last-hit time around a cycle. Craters and mounds
/// strictly alternate, so both sets have the same size.
pub fn detect_mounds(state: &MassState, g: &Graph) -> Result<Vec<VertexId>> {
    let k = match g.kind() {
        GraphKind::Cycle { k } => k as usize,
        _ => return Err(Error::Unsupported("mounds are defined on cycles only".into())),
    };
    Ok((0..k)
        .filter(|&v| {
            let key = hit_key(state, v);
            let prev = hit_key(state, (v + k - 1) % k);
            let next = hit_key(state, (v + 1) % k);
            key < prev && key < next
        })
        .map(|v| v as VertexId)
        .collect())
}

/// The permutation of `0..k` ranking vertices by last-hit time:
/// `rank[j] < rank[m]` iff vertex `j` was hit before vertex `m`.
pub fn rank_permutation(state: &MassState) -> Vec<u32> {
    let k = state.vertex_count();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| hit_key(state, a).partial_cmp(&hit_key(state, b)).unwrap());
    let mut rank = vec![0u32; k];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r as u32;
    }
    rank
}

/// Crater/mound positions together with the last-hit rank permutation.
#[derive(Debug, Clone)]
pub struct CraterProfile {
    pub craters: Vec<VertexId>,
    /// Empty on non-cycle graphs.
    pub mounds: Vec<VertexId>,
    pub rank_perm: Vec<u32>,
    pub vertex_count: usize,
}

pub fn profile(state: &MassState, g: &Graph) -> CraterProfile {
    let craters = detect_craters(state, g);
    let mounds = detect_mounds(state, g).unwrap_or_default();
    CraterProfile {
        craters,
        mounds,
        rank_perm: rank_permutation(state),
        vertex_count: g.vertex_count(),
    }
}

/// Number of cyclic positions at which the pattern family occurs in the
/// last-hit ranking.
pub fn count_pattern_occurrences(profile: &CraterProfile, spec: &PatternSpec) -> usize {
    if spec.is_empty() {
        return 0;
    }
    let k = profile.vertex_count;
    let len = spec.max_len();
    if len > k {
        return 0;
    }
    let mut window = vec![0u32; len];
    (0..k)
        .filter(|&j| {
            for (i, w) in window.iter_mut().enumerate() {
                *w = profile.rank_perm[(j + i) % k];
            }
            spec.occurs_at(&window)
        })
        .count()
}

/// Aggregated run-length and gap histograms over stationary samples.
///
/// A "run" is a maximal stretch of non-crater sites between two craters
/// (cyclic, so every crater starts exactly one run). `a_events` counts
/// crater triples by their two gap lengths; `b_events` counts
/// crater-mound-crater configurations by the two plain-site stretch lengths.
#[derive(Debug, Clone, Default)]
pub struct GapSpectrum {
    pub run_lengths: BTreeMap<usize, u64>,
    pub a_events: BTreeMap<(usize, usize), u64>,
    pub b_events: BTreeMap<(usize, usize), u64>,
    /// Per occurrence of run length `n`: the 1-based mound position within
    /// the run.
    pub mound_positions: BTreeMap<usize, Vec<u32>>,
    pub total_craters: u64,
    pub total_sites: u64,
    pub n_samples: u64,
}

impl GapSpectrum {
    pub fn add_profile(&mut self, profile: &CraterProfile) -> Result<()> {
        let k = profile.vertex_count;
        let craters = &profile.craters;
        if craters.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "need at least 3 craters on the cycle, found {}",
                craters.len()
            )));
        }
        if profile.mounds.len() != craters.len() {
            return Err(Error::Validation(
                "craters and mounds must alternate on the cycle".into(),
            ));
        }
        self.n_samples += 1;
        self.total_sites += k as u64;
        self.total_craters += craters.len() as u64;
        let nc = craters.len();
        // mound strictly between consecutive craters, cyclically
        let mut mound_iter = profile.mounds.iter().copied().collect::<Vec<_>>();
        mound_iter.sort_unstable();
        for i in 0..nc {
            let c0 = craters[i] as usize;
            let c1 = craters[(i + 1) % nc] as usize;
            let gap = (c1 + k - c0) % k; // distance along the cycle
            let run = gap - 1; // non-crater sites strictly between
            *self.run_lengths.entry(run).or_insert(0) += 1;
            let c2 = craters[(i + 2) % nc] as usize;
            let gap2 = (c2 + k - c1) % k;
            *self.a_events.entry((run, gap2 - 1)).or_insert(0) += 1;

            // unique mound in (c0, c1)
            let mound = mound_in_arc(&mound_iter, c0, c1, k)?;
            let pos = (mound + k - c0) % k; // 1-based position within the run
            *self.b_events.entry((pos - 1, run - pos)).or_insert(0) += 1;
            self.mound_positions.entry(run).or_default().push(pos as u32);
        }
        Ok(())
    }

    /// Empirical per-site frequency of "crater here".
    pub fn crater_frequency(&self) -> f64 {
        self.total_craters as f64 / self.total_sites as f64
    }

    /// Empirical per-site frequency of "crater here followed by a maximal
    /// run of exactly `n` sites".
    pub fn run_length_frequency(&self, n: usize) -> f64 {
        *self.run_lengths.get(&n).unwrap_or(&0) as f64 / self.total_sites as f64
    }

    /// Empirical per-site frequency of the crater-gap pair `(i, j)`.
    pub fn a_event_frequency(&self, i: usize, j: usize) -> f64 {
        *self.a_events.get(&(i, j)).unwrap_or(&0) as f64 / self.total_sites as f64
    }

    /// Empirical per-site frequency of the crater-mound-crater split `(i, j)`.
    pub fn b_event_frequency(&self, i: usize, j: usize) -> f64 {
        *self.b_events.get(&(i, j)).unwrap_or(&0) as f64 / self.total_sites as f64
    }
}

fn mound_in_arc(sorted_mounds: &[VertexId], c0: usize, c1: usize, k: usize) -> Result<usize> {
    // collect mounds strictly inside the cyclic arc (c0, c1)
    let inside = |m: usize| -> bool {
        if c0 < c1 {
            m > c0 && m < c1
        } else {
            m > c0 || m < c1
        }
    };
    let mut found = None;
    for &m in sorted_mounds {
        if inside(m as usize) {
            if found.is_some() {
                return Err(Error::Validation("two mounds between consecutive craters".into()));
            }
            found = Some(m as usize);
        }
    }
    found.ok_or_else(|| Error::Validation("no mound between consecutive craters".into()))
}

/// Builds a spectrum from a stream of profiles.
pub fn gap_spectrum<'a, I: IntoIterator<Item = &'a CraterProfile>>(profiles: I) -> Result<GapSpectrum> {
    let mut spectrum = GapSpectrum::default();
    for p in profiles {
        spectrum.add_profile(p)?;
    }
    Ok(spectrum)
}

#[derive(Debug, Clone, Copy)]
pub struct TailEstimate {
    pub frequency: f64,
    pub ci: (f64, f64),
    pub occurrences: u64,
    pub mean_relative_position: f64,
}

/// Conditional tail P(|R/n - 1/2| > eps | run length n) where `R` is the
/// mound position within a run.
pub fn mound_position_check(spectrum: &GapSpectrum, n: usize, eps: f64) -> Result<TailEstimate> {
    let positions = spectrum
        .mound_positions
        .get(&n)
        .ok_or_else(|| Error::InsufficientData(format!("no runs of length {n} observed")))?;
    let total = positions.len() as u64;
    if total < 20 {
        return Err(Error::InsufficientData(format!(
            "only {total} runs of length {n}; need at least 20"
        )));
    }
    let tail = positions
        .iter()
        .filter(|&&r| (r as f64 / n as f64 - 0.5).abs() > eps)
        .count() as u64;
    let mean_rel =
        positions.iter().map(|&r| r as f64 / n as f64).sum::<f64>() / total as f64;
    Ok(TailEstimate {
        frequency: tail as f64 / total as f64,
        ci: crate::stats::wilson_interval(tail, total, 1.96),
        occurrences: total,
        mean_relative_position: mean_rel,
    })
}

/// Age of the oldest exposed soil: the clock minus the minimum over vertices
/// of the most recent hit in the closed neighborhood.
pub fn oldest_soil_statistic(state: &MassState, g: &Graph) -> Result<f64> {
    let k = match g.kind() {
        GraphKind::Cycle { k } => k as usize,
        _ => return Err(Error::Unsupported("oldest-soil statistic is cycle-only".into())),
    };
    if !state.all_hit() {
        return Err(Error::InsufficientData("some vertex was never hit".into()));
    }
    let t = state.last_hit();
    let mut youngest_cover = f64::INFINITY;
    for v in 0..k {
        let cover = t[v].max(t[(v + 1) % k]).max(t[(v + k - 1) % k]);
        youngest_cover = youngest_cover.min(cover);
    }
    Ok(state.clock() - youngest_cover)
}
