//! Event-driven simulation of the mass process.
//!
//! Meteor hits arrive as a single exponential clock with rate `|V|` plus a
//! uniform vertex choice, which is equivalent in law to independent rate-1
//! Poisson clocks per vertex and makes clock sharing between coupled
//! processes trivial. A hit at `v` moves all mass off `v` onto its neighbors
//! according to the redistribution row of `v` and records the hit time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, RedistributionMatrix, VertexId};

/// Sentinel last-hit time for vertices that were never hit.
pub const NEVER_HIT: f64 = -1.0;

/// Dense square matrices above this order are rejected.
pub const MAX_DENSE_VERTICES: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub vertex: VertexId,
}

/// Seeded, reproducible stream of `(time, vertex)` meteor hits.
///
/// Inter-event times are i.i.d. exponential with rate `|V|`, vertices i.i.d.
/// uniform; times are strictly increasing. The stream is the unit of clock
/// sharing: driving two processes from one stream couples them.
#[derive(Debug, Clone)]
pub struct EventStream {
    rng: ChaCha8Rng,
    n_vertices: u32,
    time: f64,
    cursor: u64,
    seed: u64,
    pending: Option<Event>,
}

impl EventStream {
    pub fn new(n_vertices: usize, seed: u64) -> EventStream {
        EventStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n_vertices: n_vertices as u32,
            time: 0.0,
            cursor: 0,
            seed,
            pending: None,
        }
    }

    pub fn for_graph(g: &Graph, seed: u64) -> EventStream {
        EventStream::new(g.vertex_count(), seed)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of events emitted so far.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn current_time(&self) -> f64 {
        self.time
    }

    pub fn next_event(&mut self) -> Event {
        if let Some(ev) = self.pending.take() {
            self.cursor += 1;
            return ev;
        }
        let rate = self.n_vertices as f64;
        let mut dt = 0.0;
        while dt <= 0.0 {
            let u: f64 = self.rng.random();
            dt = -(1.0 - u).ln() / rate;
        }
        self.time += dt;
        let vertex = self.rng.random_range(0..self.n_vertices);
        self.cursor += 1;
        Event { time: self.time, vertex }
    }

    /// Returns an unconsumed event to the stream (one level deep).
    pub fn unget(&mut self, ev: Event) {
        debug_assert!(self.pending.is_none());
        self.pending = Some(ev);
        self.cursor -= 1;
    }
}

/// Per-vertex nonnegative masses plus last-hit times and the current clock.
///
/// Total mass is conserved by the dynamics. A vertex that has been hit and
/// not refilled since holds mass exactly `0.0`: hits assign a literal zero
/// and refills add strictly positive amounts.
#[derive(Debug, Clone, PartialEq)]
pub struct MassState {
    masses: Vec<f64>,
    last_hit: Vec<f64>,
    clock: f64,
}

impl MassState {
    /// Validated state with clock 0 and no recorded hits.
    pub fn new(g: &Graph, masses: Vec<f64>) -> Result<MassState> {
        if masses.len() != g.vertex_count() {
            return Err(Error::Validation(format!(
                "expected {} masses, got {}",
                g.vertex_count(),
                masses.len()
            )));
        }
        if let Some((v, &m)) = masses.iter().enumerate().find(|(_, &m)| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::Validation(format!("mass {m} at vertex {v}")));
        }
        let n = masses.len();
        Ok(MassState { masses, last_hit: vec![NEVER_HIT; n], clock: 0.0 })
    }

    /// Uniform masses summing to `|V|`.
    pub fn uniform(g: &Graph) -> MassState {
        MassState::new(g, vec![1.0; g.vertex_count()]).unwrap()
    }

    /// Uniform masses summing to `total`.
    pub fn uniform_total(g: &Graph, total: f64) -> Result<MassState> {
        let n = g.vertex_count();
        MassState::new(g, vec![total / n as f64; n])
    }

    /// All mass concentrated at one vertex.
    pub fn point_mass(g: &Graph, v: VertexId, total: f64) -> Result<MassState> {
        let mut masses = vec![0.0; g.vertex_count()];
        masses[v as usize] = total;
        MassState::new(g, masses)
    }

    pub fn vertex_count(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, v: VertexId) -> f64 {
        self.masses[v as usize]
    }

    pub fn last_hit(&self) -> &[f64] {
        &self.last_hit
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn all_hit(&self) -> bool {
        self.last_hit.iter().all(|&t| t != NEVER_HIT)
    }

    /// Number of adjacent pairs with zero combined mass (each unordered pair
    /// counted once). Nonincreasing along any simulation.
    pub fn dead_pair_count(&self, g: &Graph) -> usize {
        let mut count = 0;
        for v in 0..self.masses.len() as u32 {
            for &x in g.neighbors(v) {
                if x > v && self.masses[v as usize] + self.masses[x as usize] == 0.0 {
                    count += 1;
                }
            }
        }
        count
    }
}

/// Applies one meteor hit at `v`: the mass at `v` is distributed over row
/// `v` of `p` and `v` is zeroed; `last_hit[v]` takes the current clock.
pub fn apply_hit(state: &mut MassState, v: VertexId, p: &RedistributionMatrix) {
    let m = state.masses[v as usize];
    state.masses[v as usize] = 0.0;
    if m > 0.0 {
        if let Some((targets, weights)) = p.sparse_row(v) {
            for (&x, &w) in targets.iter().zip(weights) {
                state.masses[x as usize] += w * m;
            }
        } else {
            let n = state.masses.len();
            let w = 1.0 / (n as f64 - 1.0);
            for x in 0..n {
                if x != v as usize {
                    state.masses[x] += w * m;
                }
            }
        }
    }
    state.last_hit[v as usize] = state.clock;
}

/// How long to run a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Until {
    Events(u64),
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub event_index: u64,
    pub time: f64,
    pub vertex: VertexId,
    pub total_mass: f64,
    pub crater_count: u32,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub final_state: MassState,
    pub events_applied: u64,
    pub event_log: Option<Vec<Event>>,
    pub samples: Vec<SampleRow>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulateOpts {
    pub log_events: bool,
    /// Sampling cadence in events; `None` disables observable sampling.
    pub sample_stride: Option<u64>,
    /// Rescale total mass back to its initial value every this many events.
    pub renormalize_every: Option<u64>,
}

/// The event loop. Wraps a state with its graph and redistribution rule;
/// for complete graphs with the uniform rule the all-but-one broadcast is
/// folded into a running offset so a hit costs O(1) instead of O(|V|).
pub struct Simulator<'a> {
    g: &'a Graph,
    p: &'a RedistributionMatrix,
    state: MassState,
    offset: f64,
    complete_fast_path: bool,
    unhit: usize,
    events_applied: u64,
    initial_total: f64,
    renormalize_every: Option<u64>,
}

impl<'a> Simulator<'a> {
    pub fn new(g: &'a Graph, p: &'a RedistributionMatrix, state: MassState) -> Result<Simulator<'a>> {
        if state.vertex_count() != g.vertex_count() || p.vertex_count() != g.vertex_count() {
            return Err(Error::Validation("graph/matrix/state dimension mismatch".into()));
        }
        let unhit = state.last_hit.iter().filter(|&&t| t == NEVER_HIT).count();
        let initial_total = state.total_mass();
        Ok(Simulator {
            g,
            p,
            complete_fast_path: p.is_complete_uniform(),
            state,
            offset: 0.0,
            unhit,
            events_applied: 0,
            initial_total,
            renormalize_every: None,
        })
    }

    pub fn with_renormalize_every(mut self, every: Option<u64>) -> Simulator<'a> {
        self.renormalize_every = every;
        self
    }

    pub fn graph(&self) -> &Graph {
        self.g
    }

    pub fn events_applied(&self) -> u64 {
        self.events_applied
    }

    pub fn clock(&self) -> f64 {
        self.state.clock
    }

    pub fn all_hit(&self) -> bool {
        self.unhit == 0
    }

    pub fn last_hit(&self, v: VertexId) -> f64 {
        self.state.last_hit[v as usize]
    }

    pub fn mass(&self, v: VertexId) -> f64 {
        self.state.masses[v as usize] + self.offset_for(v)
    }

    #[inline]
    fn offset_for(&self, _v: VertexId) -> f64 {
        self.offset
    }

    pub fn total_mass(&self) -> f64 {
        let n = self.state.masses.len() as f64;
        self.state.masses.iter().sum::<f64>() + self.offset * n
    }

    /// Applies one event. The clock must not run backwards.
    #[inline]
    pub fn step(&mut self, ev: Event) {
        let v = ev.vertex as usize;
        self.state.clock = ev.time;
        if self.complete_fast_path {
            let m = self.state.masses[v] + self.offset;
            if m > 0.0 {
                self.offset += m / (self.state.masses.len() as f64 - 1.0);
            }
            self.state.masses[v] = -self.offset;
        } else {
            let m = self.state.masses[v];
            self.state.masses[v] = 0.0;
            if m > 0.0 {
                let (targets, weights) = self.p.sparse_row(ev.vertex).expect("sparse rows");
                for (&x, &w) in targets.iter().zip(weights) {
                    self.state.masses[x as usize] += w * m;
                }
            }
        }
        if self.state.last_hit[v] == NEVER_HIT {
            self.unhit -= 1;
        }
        self.state.last_hit[v] = ev.time;
        self.events_applied += 1;
        if let Some(every) = self.renormalize_every {
            if self.events_applied % every == 0 {
                self.renormalize();
            }
        }
        if self.offset.abs() > 1.0 {
            self.rebase();
        }
    }

    /// Pulls the running offset back into the per-vertex masses. Craters
    /// stay exactly zero: their stored value is the exact negation of the
    /// offset.
    fn rebase(&mut self) {
        if self.offset != 0.0 {
            for m in &mut self.state.masses {
                *m += self.offset;
            }
            self.offset = 0.0;
        }
    }

    fn renormalize(&mut self) {
        self.rebase();
        let total = self.state.total_mass();
        if total > 0.0 {
            let scale = self.initial_total / total;
            for m in &mut self.state.masses {
                *m *= scale;
            }
        }
    }

    pub fn run_events(&mut self, stream: &mut EventStream, n: u64) {
        for _ in 0..n {
            let ev = stream.next_event();
            self.step(ev);
        }
    }

    /// Advances through events with time `<= t` and sets the clock to `t`.
    pub fn run_until_time(&mut self, stream: &mut EventStream, t: f64) {
        loop {
            let ev = stream.next_event();
            if ev.time > t {
                stream.unget(ev);
                break;
            }
            self.step(ev);
        }
        self.state.clock = t;
    }

    /// Runs until every vertex has been hit at least once.
    pub fn run_until_all_hit(&mut self, stream: &mut EventStream) {
        while self.unhit > 0 {
            let ev = stream.next_event();
            self.step(ev);
        }
    }

    /// Snapshot of the current state with offsets folded in.
    pub fn state(&mut self) -> &MassState {
        self.rebase();
        &self.state
    }

    pub fn into_state(mut self) -> MassState {
        self.rebase();
        self.state
    }
}

/// Runs `state` forward through `stream`, applying hits in order.
pub fn simulate(
    state: MassState,
    g: &Graph,
    p: &RedistributionMatrix,
    stream: &mut EventStream,
    until: Until,
    opts: SimulateOpts,
) -> Result<SimResult> {
    let mut sim = Simulator::new(g, p, state)?.with_renormalize_every(opts.renormalize_every);
    let mut log = if opts.log_events { Some(Vec::new()) } else { None };
    let mut samples = Vec::new();
    let mut applied = 0u64;
    let target_events = match until {
        Until::Events(n) => n,
        Until::Time(_) => u64::MAX,
    };
    let target_time = match until {
        Until::Time(t) => t,
        Until::Events(_) => f64::INFINITY,
    };
    while applied < target_events {
        let ev = stream.next_event();
        if ev.time > target_time {
            stream.unget(ev);
            break;
        }
        sim.step(ev);
        applied += 1;
        if let Some(log) = log.as_mut() {
            log.push(ev);
        }
        if let Some(stride) = opts.sample_stride {
            if applied % stride == 0 {
                sim.rebase();
                let craters = sim.state.masses.iter().filter(|&&m| m == 0.0).count() as u32;
                samples.push(SampleRow {
                    event_index: applied,
                    time: ev.time,
                    vertex: ev.vertex,
                    total_mass: sim.state.total_mass(),
                    crater_count: craters,
                });
            }
        }
    }
    if let Until::Time(t) = until {
        sim.state.clock = t;
    }
    let events_applied = applied;
    Ok(SimResult { final_state: sim.into_state(), events_applied, event_log: log, samples })
}

/// Burn-in policy for stationary sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BurnIn {
    /// `max(10^4, 50 * diam(G)^2)` events, motivated by the diffusive
    /// relaxation scale of tori. Heuristic on other graphs.
    Default,
    Events(u64),
    /// Run until every vertex has been hit, then a fixed further stretch of
    /// time. Appropriate for last-hit-rank statistics, whose law is already
    /// exact once every vertex has been hit at least once.
    AllHitPlus { margin_time: f64 },
}

/// Default burn-in event count: `max(10^4, 50 * diam(G)^2)`.
pub fn default_burn_in_events(g: &Graph) -> u64 {
    let d = g.diameter() as u64;
    (50 * d * d).max(10_000)
}

/// Decorrelation gap between successive stationary samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gap {
    Events(u64),
    /// Advance until every vertex has been hit again since the last sample;
    /// the rank permutation of the new sample is independent of the old one.
    AllHitRefresh,
}

/// Draws a sequence of approximately stationary states from one long run.
pub struct StationarySampler<'a> {
    sim: Simulator<'a>,
    stream: EventStream,
    gap: Gap,
    burned_in: bool,
    burn_in: BurnIn,
}

impl<'a> StationarySampler<'a> {
    pub fn new(
        g: &'a Graph,
        p: &'a RedistributionMatrix,
        init: MassState,
        seed: u64,
        burn_in: BurnIn,
        gap: Gap,
    ) -> Result<StationarySampler<'a>> {
        let stream = EventStream::for_graph(g, seed);
        let sim = Simulator::new(g, p, init)?;
        Ok(StationarySampler { sim, stream, gap, burned_in: false, burn_in })
    }

    fn burn_in(&mut self) {
        match self.burn_in {
            BurnIn::Default => {
                let n = default_burn_in_events(self.sim.g);
                self.sim.run_events(&mut self.stream, n);
            }
            BurnIn::Events(n) => self.sim.run_events(&mut self.stream, n),
            BurnIn::AllHitPlus { margin_time } => {
                self.sim.run_until_all_hit(&mut self.stream);
                let t = self.sim.clock() + margin_time;
                self.sim.run_until_time(&mut self.stream, t);
            }
        }
        self.burned_in = true;
    }

    /// Advances by the configured gap and returns the next sample.
    pub fn next_sample(&mut self) -> &MassState {
        if !self.burned_in {
            self.burn_in();
            return self.sim.state();
        }
        match self.gap {
            Gap::Events(n) => self.sim.run_events(&mut self.stream, n),
            Gap::AllHitRefresh => {
                let mark = self.sim.clock();
                let k = self.sim.state.vertex_count();
                let mut fresh = 0usize;
                while fresh < k {
                    let ev = self.stream.next_event();
                    if self.sim.state.last_hit[ev.vertex as usize] <= mark {
                        fresh += 1;
                    }
                    self.sim.step(ev);
                }
            }
        }
        self.sim.state()
    }

    pub fn events_applied(&self) -> u64 {
        self.sim.events_applied()
    }
}

/// One approximate draw from the stationary distribution, starting from the
/// uniform state with total mass `|V|`.
pub fn stationary_sample(
    g: &Graph,
    p: &RedistributionMatrix,
    burn_in_events: u64,
    stream: &mut EventStream,
) -> Result<MassState> {
    let mut sim = Simulator::new(g, p, MassState::uniform(g))?;
    sim.run_events(stream, burn_in_events);
    Ok(sim.into_state())
}

/// Two copies of the process driven by the identical event stream, with the
/// L1 coupling distance `D_t = sum_v |M_t^v - M~_t^v|` tracked after every
/// event. `D` is maintained incrementally and recomputed periodically to
/// shed float drift.
pub struct CoupledSim<'a> {
    pub a: Simulator<'a>,
    pub b: Simulator<'a>,
    d: f64,
    steps_since_resync: u64,
}

impl<'a> CoupledSim<'a> {
    pub fn new(
        g: &'a Graph,
        p: &'a RedistributionMatrix,
        state_a: MassState,
        state_b: MassState,
    ) -> Result<CoupledSim<'a>> {
        let (ta, tb) = (state_a.total_mass(), state_b.total_mass());
        if (ta - tb).abs() > 1e-9 * ta.abs().max(tb.abs()).max(1.0) {
            return Err(Error::Validation(format!(
                "coupled runs need equal total mass: {ta} vs {tb}"
            )));
        }
        let a = Simulator::new(g, p, state_a)?;
        let b = Simulator::new(g, p, state_b)?;
        let mut coupled = CoupledSim { a, b, d: 0.0, steps_since_resync: 0 };
        coupled.d = coupled.recompute_distance();
        Ok(coupled)
    }

    pub fn distance(&self) -> f64 {
        self.d
    }

    fn recompute_distance(&self) -> f64 {
        let k = self.a.state.vertex_count();
        (0..k as u32).map(|v| (self.a.mass(v) - self.b.mass(v)).abs()).sum()
    }

    /// Applies one shared event to both copies and updates `D`.
    pub fn step(&mut self, ev: Event) {
        let use_incremental = !self.a.complete_fast_path;
        if use_incremental {
            let v = ev.vertex;
            let ma = self.a.state.masses[v as usize];
            let mb = self.b.state.masses[v as usize];
            let dv = ma - mb;
            let mut delta = -dv.abs();
            if let Some((targets, weights)) = self.a.p.sparse_row(v) {
                for (&x, &w) in targets.iter().zip(weights) {
                    let old = self.a.state.masses[x as usize] - self.b.state.masses[x as usize];
                    delta += (old + w * dv).abs() - old.abs();
                }
            }
            self.a.step(ev);
            self.b.step(ev);
            self.d += delta;
            self.steps_since_resync += 1;
            if self.steps_since_resync >= 1 << 16 {
                self.d = self.recompute_distance();
                self.steps_since_resync = 0;
            }
        } else {
            self.a.step(ev);
            self.b.step(ev);
            self.d = self.recompute_distance();
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    /// `(time, D)` after every event, preceded by the initial point at t=0.
    pub d_series: Vec<(f64, f64)>,
    pub final_a: MassState,
    pub final_b: MassState,
}

/// Drives both states with one stream over the horizon, recording `D_t`
/// after every event. Requires equal total mass.
pub fn coupled_run(
    state_a: MassState,
    state_b: MassState,
    g: &Graph,
    p: &RedistributionMatrix,
    stream: &mut EventStream,
    horizon: Until,
) -> Result<CoupledRun> {
    let mut coupled = CoupledSim::new(g, p, state_a, state_b)?;
    let mut d_series = vec![(0.0, coupled.distance())];
    let mut applied = 0u64;
    let target_events = match horizon {
        Until::Events(n) => n,
        Until::Time(_) => u64::MAX,
    };
    let target_time = match horizon {
        Until::Time(t) => t,
        Until::Events(_) => f64::INFINITY,
    };
    while applied < target_events {
        let ev = stream.next_event();
        if ev.time > target_time {
            stream.unget(ev);
            break;
        }
        coupled.step(ev);
        applied += 1;
        d_series.push((ev.time, coupled.distance()));
    }
    Ok(CoupledRun {
        d_series,
        final_a: coupled.a.into_state(),
        final_b: coupled.b.into_state(),
    })
}

/// Dense row-major square matrix, just big enough for the matrix-product
/// view of the dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn identity(n: usize) -> SquareMatrix {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SquareMatrix { n, data }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.n + col] = v;
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for r in 0..self.n {
            let row = &self.data[r * self.n..(r + 1) * self.n];
            y[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for r in 0..self.n {
            for c in 0..self.n {
                sums[c] += self.data[r * self.n + c];
            }
        }
        sums
    }

    /// Max over column pairs of the L1 distance between columns.
    pub fn column_l1_diameter(&self) -> f64 {
        let mut diam: f64 = 0.0;
        for c1 in 0..self.n {
            for c2 in (c1 + 1)..self.n {
                let mut d = 0.0;
                for r in 0..self.n {
                    d += (self.data[r * self.n + c1] - self.data[r * self.n + c2]).abs();
                }
                diam = diam.max(d);
            }
        }
        diam
    }

    /// In-place left-multiplication by the hit matrix of `v`:
    /// row `x` += `p_vx` * row `v` for each target, then row `v` = 0.
    pub fn left_mul_hit(&mut self, v: VertexId, p: &RedistributionMatrix) {
        let n = self.n;
        let row_v: Vec<f64> = self.data[v as usize * n..(v as usize + 1) * n].to_vec();
        for (x, w) in p.row(v) {
            let row_x = &mut self.data[x as usize * n..(x as usize + 1) * n];
            for (dst, &src) in row_x.iter_mut().zip(&row_v) {
                *dst += w * src;
            }
        }
        self.data[v as usize * n..(v as usize + 1) * n].fill(0.0);
    }
}

/// The matrix represented by a single hit at `v`: identity except column
/// `v`, which is replaced by row `v` of the redistribution matrix (zero on
/// the diagonal). Applying it to a mass column vector equals [`apply_hit`].
pub fn hit_matrix(g: &Graph, p: &RedistributionMatrix, v: VertexId) -> Result<SquareMatrix> {
    let n = g.vertex_count();
    if n > MAX_DENSE_VERTICES {
        return Err(Error::Budget(format!(
            "dense matrices limited to {MAX_DENSE_VERTICES} vertices, graph has {n}"
        )));
    }
    if (v as usize) >= n {
        return Err(Error::Validation(format!("vertex {v} out of range")));
    }
    let mut m = SquareMatrix::identity(n);
    m.set(v as usize, v as usize, 0.0);
    for (x, w) in p.row(v) {
        m.set(x as usize, v as usize, w);
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct MatrixTrajectory {
    /// Accumulated product of hit matrices, latest on the left.
    pub product: SquareMatrix,
    /// `(event_index, max column-pair L1 distance)` at the recorded strides.
    pub diameters: Vec<(u64, f64)>,
}

/// Accumulates the product of hit matrices along the stream and tracks the
/// L1 contraction of its columns. Column diameters are nonincreasing in the
/// number of events.
pub fn matrix_trajectory(
    g: &Graph,
    p: &RedistributionMatrix,
    stream: &mut EventStream,
    n_events: u64,
    diameter_stride: u64,
) -> Result<MatrixTrajectory> {
    let n = g.vertex_count();
    if n > MAX_DENSE_VERTICES {
        return Err(Error::Budget(format!(
            "dense matrices limited to {MAX_DENSE_VERTICES} vertices, graph has {n}"
        )));
    }
    let mut product = SquareMatrix::identity(n);
    let mut diameters = vec![(0u64, product.column_l1_diameter())];
    for i in 1..=n_events {
        let ev = stream.next_event();
        product.left_mul_hit(ev.vertex, p);
        if diameter_stride > 0 && (i % diameter_stride == 0 || i == n_events) {
            diameters.push((i, product.column_l1_diameter()));
        }
    }
    Ok(MatrixTrajectory { product, diameters })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_uniform(k: u32) -> (Graph, RedistributionMatrix) {
        let g = Graph::cycle(k).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        (g, p)
    }

    #[test]
    fn init_state_validates_masses() {
        let g = Graph::cycle(4).unwrap();
        let s = MassState::new(&g, vec![1.0; 4]).unwrap();
        assert_eq!(s.total_mass(), 4.0);
        assert!(MassState::new(&g, vec![4.0, 0.0, 0.0, 0.0]).is_ok());
        assert!(MassState::new(&g, vec![1.0, -0.5, 1.0, 1.0]).is_err());
        assert!(MassState::new(&g, vec![1.0; 3]).is_err());
    }

    #[test]
    fn apply_hit_examples() {
        let (g, p) = cycle_uniform(4);
        let mut s = MassState::new(&g, vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        apply_hit(&mut s, 0, &p);
        assert_eq!(s.masses(), &[0.0, 2.0, 0.0, 2.0]);
        apply_hit(&mut s, 1, &p);
        assert_eq!(s.masses(), &[1.0, 0.0, 1.0, 2.0]);

        let k3 = Graph::complete(3).unwrap();
        let p3 = RedistributionMatrix::uniform(&k3);
        let mut s3 = MassState::new(&k3, vec![3.0, 0.0, 0.0]).unwrap();
        apply_hit(&mut s3, 0, &p3);
        assert_eq!(s3.masses(), &[0.0, 1.5, 1.5]);
    }

    #[test]
    fn two_hit_trajectory_on_triangle() {
        // (3,0,0) --hit 0--> (0,1.5,1.5) --hit 1--> (0.75, 0, 2.25)
        let (g, p) = cycle_uniform(3);
        let mut s = MassState::new(&g, vec![3.0, 0.0, 0.0]).unwrap();
        apply_hit(&mut s, 0, &p);
        apply_hit(&mut s, 1, &p);
        assert_eq!(s.masses(), &[0.75, 0.0, 2.25]);
    }

    #[test]
    fn zero_event_simulation_is_identity() {
        let (g, p) = cycle_uniform(5);
        let init = MassState::new(&g, vec![2.0, 0.5, 0.0, 1.5, 1.0]).unwrap();
        let mut stream = EventStream::for_graph(&g, 7);
        let out = simulate(init.clone(), &g, &p, &mut stream, Until::Events(0), SimulateOpts::default())
            .unwrap();
        assert_eq!(out.final_state, init);
        assert_eq!(out.events_applied, 0);
    }

    #[test]
    fn stream_times_strictly_increase_and_replay() {
        let g = Graph::cycle(6).unwrap();
        let mut s1 = EventStream::for_graph(&g, 99);
        let mut s2 = EventStream::for_graph(&g, 99);
        let mut prev = 0.0;
        for _ in 0..1000 {
            let a = s1.next_event();
            let b = s2.next_event();
            assert_eq!(a, b);
            assert!(a.time > prev);
            prev = a.time;
            assert!(a.vertex < 6);
        }
    }

    #[test]
    fn stream_unget_replays_event() {
        let g = Graph::cycle(3).unwrap();
        let mut s = EventStream::for_graph(&g, 1);
        let a = s.next_event();
        s.unget(a);
        assert_eq!(s.next_event(), a);
        assert_eq!(s.cursor(), 1);
    }

    #[test]
    fn simulation_is_deterministic_given_seed() {
        let g = Graph::torus(5, 2).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let run = |seed| {
            let mut stream = EventStream::for_graph(&g, seed);
            simulate(MassState::uniform(&g), &g, &p, &mut stream, Until::Events(20_000), SimulateOpts::default())
                .unwrap()
                .final_state
        };
        let a = run(1234);
        let b = run(1234);
        let c = run(1235);
        // bit-exact equality, not approximate
        assert!(a.masses().iter().zip(b.masses()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a.masses(), c.masses());
    }

    #[test]
    fn mass_conserved_on_torus() {
        let g = Graph::torus(10, 2).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let mut stream = EventStream::for_graph(&g, 5);
        let out = simulate(MassState::uniform(&g), &g, &p, &mut stream, Until::Events(1_000_000), SimulateOpts::default())
            .unwrap();
        let total = out.final_state.total_mass();
        assert!(
            (total - 100.0).abs() <= 1e-9 * 100.0,
            "total drifted to {total}"
        );
    }

    #[test]
    fn complete_fast_path_matches_plain_hits() {
        let g = Graph::complete(17).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let mut stream = EventStream::for_graph(&g, 42);
        let events: Vec<Event> = (0..500).map(|_| stream.next_event()).collect();

        let mut sim = Simulator::new(&g, &p, MassState::uniform(&g)).unwrap();
        let mut plain = MassState::uniform(&g);
        for &ev in &events {
            sim.step(ev);
            plain.clock = ev.time;
            apply_hit(&mut plain, ev.vertex, &p);
        }
        let fast = sim.into_state();
        for v in 0..17 {
            assert!((fast.masses()[v] - plain.masses()[v]).abs() < 1e-12);
        }
        // craters are literal zeros on the fast path too
        assert!(fast.masses().iter().any(|&m| m == 0.0));
    }

    #[test]
    fn renormalize_restores_total() {
        let g = Graph::complete(9).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let mut stream = EventStream::for_graph(&g, 6);
        let opts = SimulateOpts { renormalize_every: Some(1000), ..Default::default() };
        let out = simulate(MassState::uniform(&g), &g, &p, &mut stream, Until::Events(10_000), opts).unwrap();
        assert!((out.final_state.total_mass() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn until_time_stops_at_horizon() {
        let (g, p) = cycle_uniform(8);
        let mut stream = EventStream::for_graph(&g, 3);
        let out = simulate(
            MassState::uniform(&g),
            &g,
            &p,
            &mut stream,
            Until::Time(5.0),
            SimulateOpts { log_events: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(out.final_state.clock(), 5.0);
        assert!(out.event_log.unwrap().iter().all(|ev| ev.time <= 5.0));
        // the first event past the horizon is preserved for the caller
        let ev = stream.next_event();
        assert!(ev.time > 5.0);
    }

    #[test]
    fn event_log_matches_stream_output() {
        let (g, p) = cycle_uniform(5);
        let mut stream = EventStream::for_graph(&g, 11);
        let out = simulate(
            MassState::uniform(&g),
            &g,
            &p,
            &mut stream,
            Until::Events(50),
            SimulateOpts { log_events: true, ..Default::default() },
        )
        .unwrap();
        let log = out.event_log.unwrap();
        let mut replay = EventStream::for_graph(&g, 11);
        for ev in &log {
            assert_eq!(*ev, replay.next_event());
        }
    }

    #[test]
    fn crater_masses_are_exact_zeros_and_persist() {
        let (g, p) = cycle_uniform(50);
        let mut stream = EventStream::for_graph(&g, 8);
        let mut sim = Simulator::new(&g, &p, MassState::uniform(&g)).unwrap();
        sim.run_events(&mut stream, 10_000);
        let state = sim.into_state();
        let zeros = state.masses().iter().filter(|&&m| m == 0.0).count();
        assert!(zeros > 0);
        // each zero vertex's last hit is the max over its closed neighborhood
        for v in 0..50u32 {
            if state.mass(v) == 0.0 {
                for &x in g.neighbors(v) {
                    assert!(state.last_hit()[v as usize] > state.last_hit()[x as usize]);
                }
            }
        }
    }

    #[test]
    fn coupled_identical_states_stay_identical() {
        let (g, p) = cycle_uniform(6);
        let mut stream = EventStream::for_graph(&g, 4);
        let run = coupled_run(
            MassState::uniform(&g),
            MassState::uniform(&g),
            &g,
            &p,
            &mut stream,
            Until::Events(5_000),
        )
        .unwrap();
        assert!(run.d_series.iter().all(|&(_, d)| d == 0.0));
    }

    #[test]
    fn coupled_distance_is_nonincreasing() {
        let (g, p) = cycle_uniform(4);
        let a = MassState::new(&g, vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        let b = MassState::new(&g, vec![0.0, 0.0, 4.0, 0.0]).unwrap();
        let mut stream = EventStream::for_graph(&g, 21);
        let run = coupled_run(a, b, &g, &p, &mut stream, Until::Events(20_000)).unwrap();
        for w in run.d_series.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-9, "D increased: {} -> {}", w[0].1, w[1].1);
        }
    }

    #[test]
    fn coupled_distance_drops_on_torus() {
        let g = Graph::torus(5, 2).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let a = MassState::point_mass(&g, 0, 25.0).unwrap();
        let b = MassState::uniform(&g);
        let mut stream = EventStream::for_graph(&g, 17);
        let run = coupled_run(a, b, &g, &p, &mut stream, Until::Events(10_000)).unwrap();
        let d0 = run.d_series.first().unwrap().1;
        let dn = run.d_series.last().unwrap().1;
        assert!(dn <= d0);
        assert!(dn < 0.5 * d0, "expected substantial contraction, got {dn} from {d0}");
    }

    #[test]
    fn coupled_requires_equal_totals() {
        let (g, p) = cycle_uniform(3);
        let a = MassState::new(&g, vec![1.0, 1.0, 1.0]).unwrap();
        let b = MassState::new(&g, vec![1.0, 1.0, 2.0]).unwrap();
        let mut stream = EventStream::for_graph(&g, 1);
        assert!(coupled_run(a, b, &g, &p, &mut stream, Until::Events(10)).is_err());
    }

    #[test]
    fn hit_matrix_matches_apply_hit() {
        let (g, p) = cycle_uniform(3);
        let a0 = hit_matrix(&g, &p, 0).unwrap();
        assert_eq!(a0.apply(&[3.0, 0.0, 0.0]), vec![0.0, 1.5, 1.5]);
        // columns all sum to one: mass conservation
        for (v, s) in a0.column_sums().iter().enumerate() {
            assert!((s - 1.0).abs() < 1e-15, "column {v} sums to {s}");
        }
    }

    #[test]
    fn matrix_product_tracks_engine() {
        let (g, p) = cycle_uniform(20);
        let seed = 31;
        let mut stream = EventStream::for_graph(&g, seed);
        let init: Vec<f64> = (0..20).map(|i| (i % 5) as f64).collect();

        let out = simulate(
            MassState::new(&g, init.clone()).unwrap(),
            &g,
            &p,
            &mut stream,
            Until::Events(1000),
            SimulateOpts::default(),
        )
        .unwrap();

        let mut replay = EventStream::for_graph(&g, seed);
        let traj = matrix_trajectory(&g, &p, &mut replay, 1000, 0).unwrap();
        let predicted = traj.product.apply(&init);
        for v in 0..20 {
            assert!(
                (predicted[v] - out.final_state.masses()[v]).abs() < 1e-10,
                "vertex {v}: {} vs {}",
                predicted[v],
                out.final_state.masses()[v]
            );
        }
    }

    #[test]
    fn matrix_trajectory_identity_and_contraction() {
        let (g, p) = cycle_uniform(10);
        let mut stream = EventStream::for_graph(&g, 2);
        let traj = matrix_trajectory(&g, &p, &mut stream, 0, 0).unwrap();
        assert_eq!(traj.product, SquareMatrix::identity(10));

        let mut stream = EventStream::for_graph(&g, 2);
        let traj = matrix_trajectory(&g, &p, &mut stream, 10_000, 500).unwrap();
        for w in traj.diameters.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
        assert!(traj.diameters.last().unwrap().1 < 1e-6);
    }

    #[test]
    fn dense_matrix_budget_enforced() {
        let g = Graph::cycle(2001).unwrap();
        let p = RedistributionMatrix::uniform(&g);
        let mut stream = EventStream::for_graph(&g, 0);
        assert!(matches!(
            matrix_trajectory(&g, &p, &mut stream, 1, 0),
            Err(Error::Budget(_))
        ));
        assert!(matches!(hit_matrix(&g, &p, 0), Err(Error::Budget(_))));
    }

    #[test]
    fn dead_pair_count_is_monotone() {
        let (g, p) = cycle_uniform(12);
        // start with alternating dead pairs
        let masses: Vec<f64> = (0..12).map(|i| if i < 4 { 0.0 } else { 1.5 }).collect();
        let mut sim = Simulator::new(&g, &p, MassState::new(&g, masses).unwrap()).unwrap();
        let mut stream = EventStream::for_graph(&g, 9);
        let mut prev = sim.state().dead_pair_count(&g);
        for _ in 0..2000 {
            let ev = stream.next_event();
            sim.step(ev);
            let now = sim.state().dead_pair_count(&g);
            assert!(now <= prev, "dead pairs increased {prev} -> {now}");
            prev = now;
        }
    }

    #[test]
    fn adjacent_positive_pairs_stay_positive() {
        let (g, p) = cycle_uniform(10);
        let mut masses = vec![0.0; 10];
        masses[0] = 5.0;
        masses[1] = 5.0;
        let mut sim = Simulator::new(&g, &p, MassState::new(&g, masses).unwrap()).unwrap();
        let mut stream = EventStream::for_graph(&g, 33);
        for _ in 0..5000 {
            let ev = stream.next_event();
            sim.step(ev);
        }
        let state = sim.into_state();
        assert!(state.masses()[0] + state.masses()[1] > 0.0);
    }

    #[test]
    fn stationary_sampler_all_hit_refresh_gap() {
        let (g, p) = cycle_uniform(30);
        let mut sampler = StationarySampler::new(
            &g,
            &p,
            MassState::uniform(&g),
            77,
            BurnIn::AllHitPlus { margin_time: 1.0 },
            Gap::AllHitRefresh,
        )
        .unwrap();
        let first = sampler.next_sample().clone();
        assert!(first.all_hit());
        let second = sampler.next_sample().clone();
        // every vertex was rehit between the samples
        for v in 0..30 {
            assert!(second.last_hit()[v] > first.clock());
        }
    }

    #[test]
    fn default_burn_in_formula() {
        assert_eq!(default_burn_in_events(&Graph::complete(1024).unwrap()), 10_000);
        assert_eq!(default_burn_in_events(&Graph::cycle(2000).unwrap()), 50_000_000);
    }
}
