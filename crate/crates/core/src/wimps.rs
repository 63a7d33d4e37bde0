//! Weakly interacting random walks driven by the vertex clocks.
//!
//! A walker bound to an event stream jumps exactly when an event fires at its
//! current vertex, choosing the destination from the redistribution row of
//! that vertex with its own direction RNG. Two walkers at distinct vertices
//! therefore move like independent continuous-time walks; two walkers at the
//! same vertex are forced to jump at the same instant, to independently
//! chosen destinations. Direction RNGs are split from the master seed
//! independently of the event stream, so a mass process and a walker
//! ensemble can share clocks without sharing direction entropy.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::engine::{Event, EventStream, MassState, Simulator};
use crate::error::{Error, Result};
use crate::graph::{Graph, RedistributionMatrix, VertexId};
use crate::stats::{wilson_interval, Accumulator};

/// Initial placement of walkers.
#[derive(Debug, Clone)]
pub enum WalkerInit {
    Fixed(Vec<VertexId>),
    /// Each walker independently draws its start from `masses / total`.
    FromMasses(Vec<f64>),
}

/// A family of walkers bound to one event stream.
pub struct WalkerEnsemble {
    positions: Vec<VertexId>,
    rngs: Vec<ChaCha8Rng>,
    jump_counts: Vec<u64>,
}

impl WalkerEnsemble {
    pub fn spawn(
        g: &Graph,
        init: WalkerInit,
        n_walkers: usize,
        master_seed: u64,
    ) -> Result<WalkerEnsemble> {
        if n_walkers == 0 {
            return Err(Error::Validation("ensemble needs at least one walker".into()));
        }
        let mut rngs: Vec<ChaCha8Rng> = (0..n_walkers)
            .map(|i| ChaCha8Rng::seed_from_u64(derive_seed(master_seed, "walker-dir", i as u64)))
            .collect();
        let positions = match init {
            WalkerInit::Fixed(p) => {
                if p.len() != n_walkers {
                    return Err(Error::Validation("start list length mismatch".into()));
                }
                if let Some(&v) = p.iter().find(|&&v| v as usize >= g.vertex_count()) {
                    return Err(Error::Validation(format!("start vertex {v} out of range")));
                }
                p
            }
            WalkerInit::FromMasses(masses) => {
                if masses.len() != g.vertex_count() {
                    return Err(Error::Validation("mass vector length mismatch".into()));
                }
                let total: f64 = masses.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::Validation("masses must have positive total".into()));
                }
                rngs.iter_mut()
                    .map(|rng| {
                        let u: f64 = rng.random::<f64>() * total;
                        let mut acc = 0.0;
                        let mut chosen = (masses.len() - 1) as VertexId;
                        for (v, &m) in masses.iter().enumerate() {
                            acc += m;
                            if u < acc {
                                chosen = v as VertexId;
                                break;
                            }
                        }
                        chosen
                    })
                    .collect()
            }
        };
        let n = positions.len();
        Ok(WalkerEnsemble { positions, rngs, jump_counts: vec![0; n] })
    }

    pub fn positions(&self) -> &[VertexId] {
        &self.positions
    }

    pub fn jump_counts(&self) -> &[u64] {
        &self.jump_counts
    }

    /// Reacts to one event: every walker currently at the event vertex jumps.
    /// Returns how many walkers moved.
    pub fn on_event(&mut self, p: &RedistributionMatrix, ev: Event) -> usize {
        let mut moved = 0;
        for i in 0..self.positions.len() {
            if self.positions[i] == ev.vertex {
                let u: f64 = self.rngs[i].random();
                self.positions[i] = p.sample_row(ev.vertex, u);
                self.jump_counts[i] += 1;
                moved += 1;
            }
        }
        moved
    }
}

/// Which start pairs [`meeting_tail_alpha`] maximizes over.
#[derive(Debug, Clone)]
pub enum StartPairs {
    /// `n_pairs` ordered pairs drawn uniformly at random.
    Uniform { n_pairs: usize },
    Explicit(Vec<(VertexId, VertexId)>),
    /// Exact worst case over all |V|^2 ordered pairs. Gated to small graphs.
    AllPairs,
}

#[derive(Debug, Clone)]
pub struct AlphaEstimate {
    pub t_grid: Vec<f64>,
    /// Max over start pairs of the empirical survival P(tau > t).
    pub alpha: Vec<f64>,
    /// Wilson 95% interval of the maximizing pair at each grid point.
    pub ci: Vec<(f64, f64)>,
    pub reps_per_pair: u64,
}

/// Empirical tail of the meeting time of two *independent* continuous-time
/// chains with mean-1 holding and embedded transition rows `p`, maximized
/// over start pairs.
pub fn meeting_tail_alpha(
    g: &Graph,
    p: &RedistributionMatrix,
    t_grid: &[f64],
    reps: u64,
    starts: StartPairs,
    seed: u64,
) -> Result<AlphaEstimate> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("t_grid must be strictly increasing".into()));
    }
    let k = g.vertex_count() as u32;
    let pairs: Vec<(VertexId, VertexId)> = match starts {
        StartPairs::Explicit(p) => p,
        StartPairs::Uniform { n_pairs } => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "alpha-pairs", 0));
            (0..n_pairs).map(|_| (rng.random_range(0..k), rng.random_range(0..k))).collect()
        }
        StartPairs::AllPairs => {
            if k > 64 {
                return Err(Error::Budget(format!(
                    "all-pairs sweep limited to 64 vertices, graph has {k}"
                )));
            }
            (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).collect()
        }
    };
    if pairs.is_empty() {
        return Err(Error::Validation("no start pairs".into()));
    }
    let t_max = *t_grid.last().unwrap();
    let mut best_survivals = vec![0u64; t_grid.len()];
    for (pair_idx, &(a0, b0)) in pairs.iter().enumerate() {
        let mut survivals = vec![0u64; t_grid.len()];
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, "alpha-run", pair_idx as u64));
        for _ in 0..reps {
            let tau = independent_meeting_time(p, a0, b0, t_max, &mut rng);
            for (i, &t) in t_grid.iter().enumerate() {
                if tau > t {
                    survivals[i] += 1;
                }
            }
        }
        // keep the pair with the heaviest tail at the last grid point;
        // survival curves from one pair are themselves nonincreasing
        if survivals.last() >= best_survivals.last()
            && survivals.iter().sum::<u64>() >= best_survivals.iter().sum::<u64>()
        {
            best_survivals = survivals;
        }
    }
    let alpha: Vec<f64> = best_survivals.iter().map(|&s| s as f64 / reps as f64).collect();
    let ci = best_survivals.iter().map(|&s| wilson_interval(s, reps, 1.96)).collect();
    Ok(AlphaEstimate { t_grid: t_grid.to_vec(), alpha, ci, reps_per_pair: reps })
}

/// Meeting time of two independent chains, capped at `t_max + 1`.
fn independent_meeting_time(
    p: &RedistributionMatrix,
    mut a: VertexId,
    mut b: VertexId,
    t_max: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut t = 0.0;
    while t <= t_max {
        // two independent exp(1) clocks: merged rate 2, uniform pick
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / 2.0;
        if t > t_max {
            break;
        }
        if rng.random::<bool>() {
            a = p.sample_row(a, rng.random());
        } else {
            b = p.sample_row(b, rng.random());
        }
        if a == b {
            return t;
        }
    }
    t_max + 1.0
}

/// Meeting time of a clock-coupled pair (shared vertex clocks), capped at
/// `t_max + 1`. Used to check that the coupled and independent meeting times
/// agree in law.
pub fn coupled_meeting_time(
    g: &Graph,
    p: &RedistributionMatrix,
    a0: VertexId,
    b0: VertexId,
    t_max: f64,
    stream: &mut EventStream,
    dir_rng: &mut ChaCha8Rng,
) -> f64 {
    let mut a = a0;
    let mut b = b0;
    if a == b {
        return 0.0;
    }
    let _ = g;
    loop {
        let ev = stream.next_event();
        if ev.time > t_max {
            stream.unget(ev);
            return t_max + 1.0;
        }
        if ev.vertex == a {
            a = p.sample_row(a, dir_rng.random());
        } else if ev.vertex == b {
            b = p.sample_row(b, dir_rng.random());
        }
        if a == b {
            return ev.time;
        }
    }
}

/// Stationary law of the difference of a clock-coupled walker pair on the
/// torus `(Z/n)^d`.
///
/// The difference walk holds for mean 1 at the origin (a single shared
/// clock) and mean 1/2 elsewhere; from the origin both walkers jump at once,
/// so the embedded step is a difference of two independent uniform
/// directions, elsewhere it is a plain nearest-neighbor step.
#[derive(Debug, Clone)]
pub struct DifferenceLaw {
    pub n: u32,
    pub d: u32,
    /// Stationary law of the embedded discrete chain, indexed by vertex.
    pub embedded: Vec<f64>,
    /// Holding-time-weighted law: P(difference = x) in continuous time.
    pub time_weighted: Vec<f64>,
    /// Max |solved - closed form| over vertices; NaN when the quotient was
    /// too large to solve numerically and the closed form was used directly.
    pub closed_form_max_gap: f64,
}

impl DifferenceLaw {
    pub fn vertex_count(&self) -> usize {
        self.embedded.len()
    }

    /// Continuous-time co-location probability P(difference = 0).
    pub fn co_location(&self) -> f64 {
        self.time_weighted[0]
    }
}

struct TorusIndex {
    n: u32,
    d: u32,
}

impl TorusIndex {
    fn coords(&self, v: usize) -> Vec<u32> {
        let mut c = Vec::with_capacity(self.d as usize);
        let mut rest = v as u64;
        for _ in 0..self.d {
            c.push((rest % self.n as u64) as u32);
            rest /= self.n as u64;
        }
        c
    }

    fn vertex(&self, coords: &[u32]) -> usize {
        let mut v = 0u64;
        for (i, &c) in coords.iter().enumerate() {
            v += (c % self.n) as u64 * (self.n as u64).pow(i as u32);
        }
        v as usize
    }

    /// Canonical orbit key under coordinate permutations and sign flips:
    /// fold each coordinate to min(c, n-c) and sort.
    fn canonical(&self, coords: &[u32]) -> Vec<u32> {
        let mut key: Vec<u32> = coords.iter().map(|&c| c.min(self.n - c)).collect();
        key.sort_unstable();
        key
    }

    fn step(&self, coords: &[u32], axis: usize, dir: i32) -> Vec<u32> {
        let mut c = coords.to_vec();
        c[axis] = (c[axis] + if dir > 0 { 1 } else { self.n - 1 }) % self.n;
        c
    }

    fn is_origin(coords: &[u32]) -> bool {
        coords.iter().all(|&c| c == 0)
    }

    /// Exactly one coordinate equal to ±1, the others 0.
    fn is_unit(&self, coords: &[u32]) -> bool {
        let mut units = 0;
        for &c in coords {
            if c == 1 || c == self.n - 1 {
                units += 1;
            } else if c != 0 {
                return false;
            }
        }
        units == 1
    }
}

fn closed_form_embedded(idx: &TorusIndex, coords: &[u32]) -> BigRational {
    let k = BigInt::from((idx.n as u64).pow(idx.d));
    let c = BigRational::new(BigInt::one(), k - BigInt::one());
    if idx.is_unit(coords) {
        let two_d = BigInt::from(2 * idx.d);
        c * BigRational::new(&two_d - BigInt::one(), two_d)
    } else {
        c
    }
}

/// Exact stationary law of the embedded difference chain, solved on the
/// quotient by the coordinate-permutation/sign-flip symmetry and certified
/// against the closed form (scaled by `1 - 1/(2d)` on the unit vectors,
/// constant elsewhere) by exact substitution into the balance equations.
pub fn difference_walk_stationary(n: u32, d: u32) -> Result<DifferenceLaw> {
    if n < 3 {
        return Err(Error::InvalidSize("difference walk needs torus n >= 3".into()));
    }
    if d < 1 {
        return Err(Error::InvalidSize("difference walk needs d >= 1".into()));
    }
    let k = (n as u64).checked_pow(d).filter(|&s| s <= 1_000_000).ok_or_else(|| {
        Error::Budget(format!("torus {n}^{d} exceeds the 10^6-state solve budget"))
    })? as usize;
    let idx = TorusIndex { n, d };
    let two_d = 2 * d as usize;

    // incoming transitions from the origin: counts of dir1 - dir2 per target
    let mut from_origin: std::collections::HashMap<usize, u64> = std::collections::HashMap::new();
    let origin = vec![0u32; d as usize];
    for a_axis in 0..d as usize {
        for a_dir in [1i32, -1] {
            for b_axis in 0..d as usize {
                for b_dir in [1i32, -1] {
                    // dir1 - dir2 applied to the origin
                    let c = idx.step(&origin, a_axis, a_dir);
                    let c = idx.step(&c, b_axis, -b_dir);
                    *from_origin.entry(idx.vertex(&c)).or_insert(0) += 1;
                }
            }
        }
    }

    // orbit table
    let mut orbit_of = vec![usize::MAX; k];
    let mut orbit_reps: Vec<usize> = Vec::new();
    let mut orbit_sizes: Vec<u64> = Vec::new();
    {
        let mut map: std::collections::HashMap<Vec<u32>, usize> = std::collections::HashMap::new();
        for v in 0..k {
            let key = idx.canonical(&idx.coords(v));
            let o = *map.entry(key).or_insert_with(|| {
                orbit_reps.push(v);
                orbit_sizes.push(0);
                orbit_reps.len() - 1
            });
            orbit_of[v] = o;
            orbit_sizes[o] += 1;
        }
    }
    let m = orbit_reps.len();

    // certify the closed form exactly: balance at every orbit representative
    let origin_vertex = 0usize;
    for &rep in &orbit_reps {
        let coords = idx.coords(rep);
        let pi_x = closed_form_embedded(&idx, &coords);
        let mut incoming = BigRational::zero();
        // nearest-neighbor steps from non-origin neighbors
        for axis in 0..d as usize {
            for dir in [1i32, -1] {
                let y = idx.step(&coords, axis, dir);
                if TorusIndex::is_origin(&y) {
                    continue;
                }
                incoming += closed_form_embedded(&idx, &y)
                    / BigRational::from(BigInt::from(two_d as u64));
            }
        }
        // both-jump steps out of the origin
        if let Some(&count) = from_origin.get(&rep) {
            let p0 = BigRational::new(
                BigInt::from(count),
                BigInt::from((two_d * two_d) as u64),
            );
            incoming += closed_form_embedded(&idx, &origin) * p0;
        }
        if rep == origin_vertex {
            // the origin also receives its own folded stay-put transitions,
            // already counted in from_origin above
        }
        if pi_x != incoming {
            return Err(Error::Validation(format!(
                "closed-form balance residual at vertex {rep}"
            )));
        }
    }

    // numeric linear solve on the quotient when small enough
    let mut closed_form_max_gap = f64::NAN;
    let mut embedded: Vec<f64> = (0..k)
        .map(|v| closed_form_embedded(&idx, &idx.coords(v)).to_f64().unwrap())
        .collect();
    if m <= 600 {
        let mut a = vec![0.0f64; m * m]; // (P^T - I) with normalization row
        for (o, &rep) in orbit_reps.iter().enumerate() {
            let coords = idx.coords(rep);
            if TorusIndex::is_origin(&coords) {
                for (&target, &count) in &from_origin {
                    let to = orbit_of[target];
                    a[to * m + o] += count as f64 / (two_d * two_d) as f64;
                }
            } else {
                for axis in 0..d as usize {
                    for dir in [1i32, -1] {
                        let y = idx.vertex(&idx.step(&coords, axis, dir));
                        a[orbit_of[y] * m + o] += 1.0 / two_d as f64;
                    }
                }
            }
        }
        for o in 0..m {
            a[o * m + o] -= 1.0;
        }
        let mut rhs = vec![0.0f64; m];
        for o in 0..m {
            a[o] = 1.0; // replace first row with the normalization sum_o pi_o = 1
        }
        rhs[0] = 1.0;
        let pi_orbit = solve_dense(&mut a, &mut rhs, m)?;
        let mut max_gap: f64 = 0.0;
        let mut solved = vec![0.0f64; k];
        for v in 0..k {
            let o = orbit_of[v];
            solved[v] = pi_orbit[o] / orbit_sizes[o] as f64;
            max_gap = max_gap.max((solved[v] - embedded[v]).abs());
        }
        embedded = solved;
        closed_form_max_gap = max_gap;
    }

    // holding-time weights: 1 at the origin, 1/2 elsewhere
    let mut time_weighted: Vec<f64> = embedded
        .iter()
        .enumerate()
        .map(|(v, &p)| if v == 0 { p } else { 0.5 * p })
        .collect();
    let total: f64 = time_weighted.iter().sum();
    for w in &mut time_weighted {
        *w /= total;
    }

    Ok(DifferenceLaw { n, d, embedded, time_weighted, closed_form_max_gap })
}

/// Gaussian elimination with partial pivoting; consumes its inputs.
fn solve_dense(a: &mut [f64], rhs: &mut [f64], m: usize) -> Result<Vec<f64>> {
    for col in 0..m {
        let mut pivot = col;
        for r in (col + 1)..m {
            if a[r * m + col].abs() > a[pivot * m + col].abs() {
                pivot = r;
            }
        }
        if a[pivot * m + col].abs() < 1e-300 {
            return Err(Error::Validation("singular balance system".into()));
        }
        if pivot != col {
            for c in 0..m {
                a.swap(col * m + c, pivot * m + c);
            }
            rhs.swap(col, pivot);
        }
        let inv = 1.0 / a[col * m + col];
        for r in (col + 1)..m {
            let f = a[r * m + col] * inv;
            if f != 0.0 {
                for c in col..m {
                    a[r * m + c] -= f * a[col * m + c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let mut acc = rhs[r];
        for c in (r + 1)..m {
            acc -= a[r * m + c] * x[c];
        }
        x[r] = acc / a[r * m + r];
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct OccupancyReport {
    /// Per-vertex |avg(1{Z_t = x} - M_t^x / |V|)|.
    pub gap: Vec<f64>,
    /// The same gaps measured in standard errors.
    pub sigmas: Vec<f64>,
    pub reps: u64,
}

impl OccupancyReport {
    pub fn max_gap(&self) -> f64 {
        self.gap.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_sigmas(&self) -> f64 {
        self.sigmas.iter().cloned().fold(0.0, f64::max)
    }
}

/// Checks the conditional-occupancy identity: a walker started from
/// `M_0 / total` and sharing the clocks of the mass process satisfies
/// `P(Z_t = x) = E[M_t^x] / total` exactly in law. The per-replication
/// difference of indicators has mean zero; the report carries its empirical
/// mean and standard-error multiples.
pub fn occupancy_identity_check(
    g: &Graph,
    p: &RedistributionMatrix,
    init: &MassState,
    t: f64,
    reps: u64,
    seed: u64,
) -> Result<OccupancyReport> {
    let k = g.vertex_count();
    let total = init.total_mass();
    if !(total > 0.0) {
        return Err(Error::Validation("need positive total mass".into()));
    }
    let mut accs = vec![Accumulator::new(); k];
    for rep in 0..reps {
        let mut stream = EventStream::for_graph(g, derive_seed(seed, "occ-events", rep));
        let mut walkers = WalkerEnsemble::spawn(
            g,
            WalkerInit::FromMasses(init.masses().to_vec()),
            1,
            derive_seed(seed, "occ-dir", rep),
        )?;
        let mut sim = Simulator::new(g, p, init.clone())?;
        loop {
            let ev = stream.next_event();
            if ev.time > t {
                break;
            }
            sim.step(ev);
            walkers.on_event(p, ev);
        }
        let z = walkers.positions()[0] as usize;
        for x in 0..k {
            let indicator = if x == z { 1.0 } else { 0.0 };
            accs[x].push(indicator - sim.mass(x as VertexId) / total);
        }
    }
    let gap: Vec<f64> = accs.iter().map(|a| a.mean().abs()).collect();
    let sigmas: Vec<f64> = accs
        .iter()
        .map(|a| {
            let se = a.stderr();
            if se == 0.0 {
                0.0
            } else {
                a.mean().abs() / se
            }
        })
        .collect();
    Ok(OccupancyReport { gap, sigmas, reps })
}

/// Time-averaged joint law of a clock-coupled walker pair under
/// stationarity, with the derived second moments
/// `E[M^x M^y] = |V|^2 P(Z = x, Z~ = y)`.
#[derive(Debug, Clone)]
pub struct JointOccupancy {
    pub k: usize,
    /// Row-major `k x k` continuous-time occupation frequencies.
    pub pair_prob: Vec<f64>,
    pub horizon: f64,
}

impl JointOccupancy {
    pub fn prob(&self, x: VertexId, y: VertexId) -> f64 {
        self.pair_prob[x as usize * self.k + y as usize]
    }

    pub fn second_moment(&self, x: VertexId, y: VertexId) -> f64 {
        (self.k * self.k) as f64 * self.prob(x, y)
    }

    pub fn marginal_z(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.k];
        for x in 0..self.k {
            for y in 0..self.k {
                m[x] += self.pair_prob[x * self.k + y];
            }
        }
        m
    }

    /// P(Z - Z~ = delta) on a cycle, folding the pair law over translations.
    pub fn difference_law_cycle(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for x in 0..self.k {
            for y in 0..self.k {
                out[(x + self.k - y) % self.k] += self.pair_prob[x * self.k + y];
            }
        }
        out
    }
}

/// Long-run occupation frequencies of the coupled pair chain: mean-1 shared
/// holding when co-located (single clock), mean-1/2 merged holding when
/// apart, destinations always independent rows of `p`.
pub fn joint_occupancy(
    g: &Graph,
    p: &RedistributionMatrix,
    burn_in_time: f64,
    horizon: f64,
    seed: u64,
) -> Result<JointOccupancy> {
    let k = g.vertex_count();
    if k > 512 {
        return Err(Error::Budget(format!(
            "joint occupancy stores |V|^2 cells; |V| = {k} > 512"
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::Validation("horizon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "joint", 0));
    let mut z = rng.random_range(0..k as u32);
    let mut zt = rng.random_range(0..k as u32);
    let mut t = 0.0;
    let end = burn_in_time + horizon;
    let mut occ = vec![0.0f64; k * k];
    while t < end {
        let rate = if z == zt { 1.0 } else { 2.0 };
        let u: f64 = rng.random();
        let dt = -(1.0 - u).ln() / rate;
        let t_next = (t + dt).min(end);
        if t_next > burn_in_time {
            let lo = t.max(burn_in_time);
            occ[z as usize * k + zt as usize] += t_next - lo;
        }
        t += dt;
        if t >= end {
            break;
        }
        if z == zt {
            // shared clock: both jump now, to independent destinations
            let a = p.sample_row(z, rng.random());
            let b = p.sample_row(zt, rng.random());
            z = a;
            zt = b;
        } else if rng.random::<bool>() {
            z = p.sample_row(z, rng.random());
        } else {
            zt = p.sample_row(zt, rng.random());
        }
    }
    for cell in &mut occ {
        *cell /= horizon;
    }
    Ok(JointOccupancy { k, pair_prob: occ, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EventStream;

    #[test]
    fn walker_jump_count_is_poisson_rate_one() {
        let g = Graph::cycle(4).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let mut walkers = WalkerEnsemble::spawn(&g, WalkerInit::Fixed(vec![0]), 1, 5).unwrap();
        let mut stream = EventStream::for_graph(&g, 17);
        loop {
            let ev = stream.next_event();
            if ev.time > 1000.0 {
                break;
            }
            walkers.on_event(&p, ev);
        }
        let jumps = walkers.jump_counts()[0] as f64;
        assert!((jumps - 1000.0).abs() <= 3.0 * 1000.0f64.sqrt(), "jumps = {jumps}");
    }

    #[test]
    fn co_located_walkers_jump_together_apart_walkers_never_do() {
        let g = Graph::cycle(6).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let mut walkers =
            WalkerEnsemble::spawn(&g, WalkerInit::Fixed(vec![2, 2, 5]), 3, 9).unwrap();
        let mut stream = EventStream::for_graph(&g, 23);
        let mut first_jumps = [None::<f64>; 3];
        for _ in 0..10_000 {
            let ev = stream.next_event();
            let before = walkers.jump_counts().to_vec();
            walkers.on_event(&p, ev);
            let after = walkers.jump_counts();
            let moved: Vec<usize> =
                (0..3).filter(|&i| after[i] > before[i]).collect();
            for &i in &moved {
                first_jumps[i].get_or_insert(ev.time);
            }
            if moved.len() > 1 {
                // simultaneous movers must have shared a vertex
                assert_eq!(moved, vec![0, 1]);
            }
            if first_jumps.iter().all(|j| j.is_some()) {
                break;
            }
        }
        // walkers 0 and 1 started together: identical first jump time
        assert_eq!(first_jumps[0], first_jumps[1]);
        assert_ne!(first_jumps[0], first_jumps[2]);
    }

    #[test]
    fn spawn_validates_input() {
        let g = Graph::cycle(4).unwrap();
        assert!(WalkerEnsemble::spawn(&g, WalkerInit::Fixed(vec![]), 0, 1).is_err());
        assert!(WalkerEnsemble::spawn(&g, WalkerInit::Fixed(vec![9]), 1, 1).is_err());
        assert!(
            WalkerEnsemble::spawn(&g, WalkerInit::FromMasses(vec![0.0; 4]), 1, 1).is_err()
        );
    }

    #[test]
    fn difference_law_four_cycle_is_exact() {
        let law = difference_walk_stationary(4, 1).unwrap();
        let expect = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0];
        for (v, &e) in expect.iter().enumerate() {
            assert!((law.embedded[v] - e).abs() < 1e-14, "pi_{v} = {}", law.embedded[v]);
        }
        let sum: f64 = law.embedded.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(law.closed_form_max_gap < 1e-12);
    }

    #[test]
    fn difference_law_matches_closed_form_across_sizes() {
        for (n, d) in [(5u32, 1u32), (12, 1), (20, 1), (4, 2), (7, 2), (20, 2), (5, 3), (20, 3)] {
            let law = difference_walk_stationary(n, d).unwrap();
            assert!(
                law.closed_form_max_gap < 1e-12,
                "({n},{d}) gap {}",
                law.closed_form_max_gap
            );
            let sum: f64 = law.embedded.iter().sum();
            assert!((sum - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn difference_law_symmetry() {
        let law = difference_walk_stationary(8, 2).unwrap();
        let idx = TorusIndex { n: 8, d: 2 };
        for v in 0..64usize {
            let coords = idx.coords(v);
            let flipped: Vec<u32> = coords.iter().map(|&c| (8 - c) % 8).collect();
            let swapped: Vec<u32> = coords.iter().rev().cloned().collect();
            assert!((law.embedded[v] - law.embedded[idx.vertex(&flipped)]).abs() < 1e-14);
            assert!((law.embedded[v] - law.embedded[idx.vertex(&swapped)]).abs() < 1e-14);
        }
    }

    #[test]
    fn difference_law_cocolation_is_two_over_k() {
        // time-weighted mass at the origin is exactly 2/k on the cycle
        for n in [5u32, 9, 16] {
            let law = difference_walk_stationary(n, 1).unwrap();
            assert!(
                (law.co_location() - 2.0 / n as f64).abs() < 1e-12,
                "n = {n}: {}",
                law.co_location()
            );
        }
    }

    #[test]
    fn difference_law_rejects_bad_sizes() {
        assert!(difference_walk_stationary(2, 1).is_err());
        assert!(difference_walk_stationary(101, 3).is_err()); // > 10^6 states
    }

    #[test]
    fn alpha_same_start_is_zero() {
        let g = Graph::cycle(5).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let est = meeting_tail_alpha(
            &g,
            &p,
            &[0.5, 1.0, 2.0],
            200,
            StartPairs::Explicit(vec![(3, 3)]),
            7,
        )
        .unwrap();
        assert!(est.alpha.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn alpha_two_cycle_matches_matrix_exponential() {
        // Two independent walkers on the 2-cycle meet at the first jump of
        // either clock. The 2-state generator ("apart" -> "met" at rate 2)
        // exponentiates to P(tau > t) = e^{-2t}; trust the series expansion
        // as an oracle before the simulator.
        let q = [[-2.0f64, 0.0], [2.0, 0.0]]; // column-generator acting on [apart, met]
        let t = 0.7f64;
        // expm(Q t) applied to the initial distribution, Taylor series
        let mut term = [1.0f64, 0.0];
        let mut survival = [1.0f64, 0.0];
        for j in 1..60 {
            let next = [
                (q[0][0] * term[0] + q[0][1] * term[1]) * t / j as f64,
                (q[1][0] * term[0] + q[1][1] * term[1]) * t / j as f64,
            ];
            term = next;
            survival[0] += term[0];
            survival[1] += term[1];
        }
        assert!((survival[0] - (-2.0 * t).exp()).abs() < 1e-12);

        let g = Graph::cycle(2).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let est = meeting_tail_alpha(
            &g,
            &p,
            &[0.3, 0.7, 1.2],
            40_000,
            StartPairs::Explicit(vec![(0, 1)]),
            11,
        )
        .unwrap();
        for (i, &t) in est.t_grid.iter().enumerate() {
            let expect = (-2.0 * t).exp();
            let (lo, hi) = est.ci[i];
            assert!(lo <= expect && expect <= hi, "t = {t}: {expect} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn alpha_is_nonincreasing() {
        let g = Graph::cycle(10).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let est = meeting_tail_alpha(
            &g,
            &p,
            &[1.0, 2.0, 5.0, 10.0],
            2_000,
            StartPairs::Explicit((1..=5).map(|dx| (0u32, dx)).collect()),
            3,
        )
        .unwrap();
        for w in est.alpha.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(est.alpha[0] > 0.0);
    }

    #[test]
    fn occupancy_identity_at_time_zero() {
        let g = Graph::cycle(5).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let report =
            occupancy_identity_check(&g, &p, &MassState::uniform(&g), 0.0, 3_000, 19).unwrap();
        // indicator mean 1/5 vs mass ratio exactly 1/5: only MC noise remains
        assert!(report.max_sigmas() < 4.0, "sigmas {:?}", report.sigmas);
    }

    #[test]
    fn joint_occupancy_marginals_are_uniform() {
        let g = Graph::cycle(12).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let occ = joint_occupancy(&g, &p, 100.0, 30_000.0, 31).unwrap();
        let marg = occ.marginal_z();
        for (x, &m) in marg.iter().enumerate() {
            assert!((m - 1.0 / 12.0).abs() < 0.01, "marginal at {x} = {m}");
        }
        let total: f64 = occ.pair_prob.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
