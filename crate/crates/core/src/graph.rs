//! Graph construction, neighborhood queries, and redistribution rules.
//!
//! Graphs are finite, simple, connected, and undirected. Vertices are
//! 0-based `u32` indices. Adjacency is stored in CSR form with sorted
//! neighbor lists; graphs are immutable after construction and safe to share
//! across threads.

use serde::Deserialize;

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Tolerance for "row sums to one" checks on redistribution matrices.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Circular graph with `k` vertices. `k = 2` is the single-edge graph
    /// with both degrees 1: a hit at one vertex moves all mass to the other.
    Cycle { k: u32 },
    /// Product of `d` copies of the cycle with `n >= 3` vertices; |V| = n^d.
    Torus { n: u32, d: u32 },
    /// Complete graph on `k` vertices.
    Complete { k: u32 },
    Custom,
}

#[derive(Debug, Clone)]
pub struct Graph {
    kind: GraphKind,
    offsets: Vec<u32>,
    targets: Vec<VertexId>,
}

impl Graph {
    /// Circular graph with vertices `0..k` and edges `(j, j+1 mod k)`.
    pub fn cycle(k: u32) -> Result<Graph> {
        if k < 2 {
            return Err(Error::InvalidSize(format!("cycle needs k >= 2, got {k}")));
        }
        let mut edges = Vec::with_capacity(k as usize);
        for j in 0..k {
            let next = (j + 1) % k;
            if j < next || k > 2 {
                edges.push((j, next));
            }
        }
        // k = 2 produced (0,1) once; the general loop would duplicate it.
        let g = Graph::build(k, &edges, GraphKind::Cycle { k })?;
        Ok(g)
    }

    /// Torus `(Z/n)^d`: vertices are coordinate tuples, neighbors differ by
    /// ±1 in exactly one coordinate. Requires `n >= 3` so that the two
    /// neighbors along each axis are distinct.
    pub fn torus(n: u32, d: u32) -> Result<Graph> {
        if n < 3 {
            return Err(Error::InvalidSize(format!("torus needs n >= 3, got {n}")));
        }
        if d < 1 {
            return Err(Error::InvalidSize("torus needs d >= 1".into()));
        }
        let size = (n as u64).checked_pow(d).filter(|&s| s <= (1 << 31)).ok_or_else(|| {
            Error::InvalidSize(format!("torus {n}^{d} has too many vertices"))
        })?;
        let k = size as u32;
        let mut edges = Vec::with_capacity((k as usize) * d as usize);
        let mut stride = 1u64;
        for _ in 0..d {
            for v in 0..k as u64 {
                let coord = (v / stride) % n as u64;
                let up = v - coord * stride + ((coord + 1) % n as u64) * stride;
                edges.push((v as u32, up as u32));
            }
            stride *= n as u64;
        }
        Graph::build(k, &edges, GraphKind::Torus { n, d })
    }

    /// Complete graph on `k` vertices.
    pub fn complete(k: u32) -> Result<Graph> {
        if k < 2 {
            return Err(Error::InvalidSize(format!("complete needs k >= 2, got {k}")));
        }
        let mut edges = Vec::with_capacity((k as usize * (k as usize - 1)) / 2);
        for u in 0..k {
            for v in (u + 1)..k {
                edges.push((u, v));
            }
        }
        Graph::build(k, &edges, GraphKind::Complete { k })
    }

    /// Custom graph from an undirected edge list. Rejects loops, duplicate
    /// edges, out-of-range endpoints, and disconnected graphs.
    pub fn from_edges(vertices: u32, edges: &[(VertexId, VertexId)]) -> Result<Graph> {
        Graph::build(vertices, edges, GraphKind::Custom)
    }

    fn build(vertices: u32, edges: &[(VertexId, VertexId)], kind: GraphKind) -> Result<Graph> {
        if vertices < 2 {
            return Err(Error::InvalidSize("graph needs at least 2 vertices".into()));
        }
        let n = vertices as usize;
        let mut adj: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= vertices || v >= vertices {
                return Err(Error::Validation(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::Validation(format!("loop at vertex {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * edges.len());
        offsets.push(0u32);
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation(format!("duplicate edge at vertex {v}")));
            }
            if list.is_empty() {
                return Err(Error::Validation(format!("vertex {v} is isolated")));
            }
            targets.extend_from_slice(list);
            offsets.push(targets.len() as u32);
        }
        let g = Graph { kind, offsets, targets };
        if !g.is_connected() {
            return Err(Error::Validation("graph is not connected".into()));
        }
        Ok(g)
    }

    /// Parses `{"vertices": k, "edges": [[u,v],...], "rows": [[..],..]?}`.
    /// Returns the graph together with the optional validated matrix.
    pub fn from_json(doc: &str) -> Result<(Graph, Option<RedistributionMatrix>)> {
        #[derive(Deserialize)]
        struct Doc {
            vertices: u32,
            edges: Vec<(VertexId, VertexId)>,
            #[serde(default)]
            rows: Option<Vec<Vec<f64>>>,
        }
        let doc: Doc = serde_json::from_str(doc)?;
        let g = Graph::from_edges(doc.vertices, &doc.edges)?;
        let m = match doc.rows {
            Some(rows) => Some(RedistributionMatrix::custom(&g, &rows)?),
            None => None,
        };
        Ok((g, m))
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn degree(&self, v: VertexId) -> usize {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as usize
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.targets[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }

    pub fn are_adjacent(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &x in self.neighbors(v) {
                if !seen[x as usize] {
                    seen[x as usize] = true;
                    reached += 1;
                    stack.push(x);
                }
            }
        }
        reached == n
    }

    /// Graph diameter. Closed form for the built-in families, BFS sweep for
    /// custom graphs (desk-scale sizes only).
    pub fn diameter(&self) -> usize {
        match self.kind {
            GraphKind::Cycle { k } => (k / 2) as usize,
            GraphKind::Torus { n, d } => (n / 2) as usize * d as usize,
            GraphKind::Complete { .. } => 1,
            GraphKind::Custom => {
                let n = self.vertex_count();
                let mut diam = 0usize;
                let mut dist = vec![u32::MAX; n];
                let mut queue = std::collections::VecDeque::new();
                for s in 0..n as u32 {
                    dist.fill(u32::MAX);
                    dist[s as usize] = 0;
                    queue.push_back(s);
                    while let Some(v) = queue.pop_front() {
                        for &x in self.neighbors(v) {
                            if dist[x as usize] == u32::MAX {
                                dist[x as usize] = dist[v as usize] + 1;
                                queue.push_back(x);
                            }
                        }
                    }
                    diam = diam.max(*dist.iter().max().unwrap() as usize);
                }
                diam
            }
        }
    }

    /// Torus coordinates of vertex `v` (least-significant axis first).
    pub fn torus_coords(&self, v: VertexId) -> Result<Vec<u32>> {
        match self.kind {
            GraphKind::Torus { n, d } => {
                let mut c = Vec::with_capacity(d as usize);
                let mut rest = v;
                for _ in 0..d {
                    c.push(rest % n);
                    rest /= n;
                }
                Ok(c)
            }
            GraphKind::Cycle { .. } => Ok(vec![v]),
            _ => Err(Error::Unsupported("coordinates only defined on tori".into())),
        }
    }

    /// Vertex index of the torus coordinate tuple.
    pub fn torus_vertex(&self, coords: &[u32]) -> Result<VertexId> {
        match self.kind {
            GraphKind::Torus { n, d } => {
                if coords.len() != d as usize {
                    return Err(Error::Validation("coordinate arity mismatch".into()));
                }
                let mut v = 0u64;
                for (i, &c) in coords.iter().enumerate() {
                    v += (c % n) as u64 * (n as u64).pow(i as u32);
                }
                Ok(v as VertexId)
            }
            GraphKind::Cycle { k } => Ok(coords[0] % k),
            _ => Err(Error::Unsupported("coordinates only defined on tori".into())),
        }
    }
}

#[derive(Debug, Clone)]
enum MatrixRepr {
    /// Sparse row-stochastic rows aligned with (a superset of) the adjacency.
    Sparse {
        offsets: Vec<u32>,
        targets: Vec<VertexId>,
        weights: Vec<f64>,
    },
    /// `p_vx = 1/(k-1)` for all `x != v`; rows are synthesized on demand.
    CompleteUniform { k: u32 },
}

/// Row-stochastic redistribution rule: row `v` is the distribution of the
/// mass leaving `v` when a meteor hits it. The diagonal is zero.
#[derive(Debug, Clone)]
pub struct RedistributionMatrix {
    n: u32,
    uniform: bool,
    repr: MatrixRepr,
}

impl RedistributionMatrix {
    /// The uniform rule: row `v` puts `1/deg(v)` on each neighbor of `v`.
    /// Exactly representable whenever `deg(v)` is a power of two.
    pub fn uniform(g: &Graph) -> RedistributionMatrix {
        let n = g.vertex_count() as u32;
        if let GraphKind::Complete { k } = g.kind() {
            return RedistributionMatrix {
                n,
                uniform: true,
                repr: MatrixRepr::CompleteUniform { k },
            };
        }
        let mut offsets = Vec::with_capacity(n as usize + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0u32);
        for v in 0..n {
            let nb = g.neighbors(v);
            let w = 1.0 / nb.len() as f64;
            targets.extend_from_slice(nb);
            weights.extend(std::iter::repeat(w).take(nb.len()));
            offsets.push(targets.len() as u32);
        }
        RedistributionMatrix {
            n,
            uniform: true,
            repr: MatrixRepr::Sparse { offsets, targets, weights },
        }
    }

    /// A general row-stochastic rule from dense rows.
    ///
    /// Each row must be nonnegative, sum to 1 within [`ROW_SUM_TOL`], and have
    /// a zero diagonal. Support must be consistent with the convention that
    /// `(x,y)` is an edge iff `p_xy + p_yx > 0`: entries off the adjacency are
    /// rejected, and so is an edge with both directions zero.
    pub fn custom(g: &Graph, rows: &[Vec<f64>]) -> Result<RedistributionMatrix> {
        let n = g.vertex_count();
        if rows.len() != n {
            return Err(Error::Validation(format!(
                "expected {n} rows, got {}",
                rows.len()
            )));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0u32);
        for (v, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::BadRow { row: v, reason: format!("length {} != {n}", row.len()) });
            }
            let mut sum = 0.0;
            for (x, &p) in row.iter().enumerate() {
                if p < 0.0 || !p.is_finite() {
                    return Err(Error::BadRow { row: v, reason: format!("entry {x} is {p}") });
                }
                if x == v && p != 0.0 {
                    return Err(Error::BadRow { row: v, reason: "nonzero diagonal".into() });
                }
                if p > 0.0 {
                    if !g.are_adjacent(v as VertexId, x as VertexId) {
                        return Err(Error::BadRow {
                            row: v,
                            reason: format!("positive weight on non-edge ({v},{x})"),
                        });
                    }
                    targets.push(x as VertexId);
                    weights.push(p);
                    sum += p;
                } else if x != v {
                    sum += p; // p == 0.0
                }
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::BadRow { row: v, reason: format!("sums to {sum}") });
            }
            offsets.push(targets.len() as u32);
        }
        // Support convention: every edge must carry weight in some direction.
        for v in 0..n {
            for &x in g.neighbors(v as VertexId) {
                if rows[v][x as usize] + rows[x as usize][v] <= 0.0 {
                    return Err(Error::BadRow {
                        row: v,
                        reason: format!("edge ({v},{x}) has zero weight in both directions"),
                    });
                }
            }
        }
        Ok(RedistributionMatrix {
            n: n as u32,
            uniform: false,
            repr: MatrixRepr::Sparse { offsets, targets, weights },
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n as usize
    }

    /// True for matrices produced by [`RedistributionMatrix::uniform`].
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// True when every row is the flat distribution over all other vertices.
    pub(crate) fn is_complete_uniform(&self) -> bool {
        matches!(self.repr, MatrixRepr::CompleteUniform { .. })
    }

    /// Entry `p_{vx}`.
    pub fn prob(&self, v: VertexId, x: VertexId) -> f64 {
        match &self.repr {
            MatrixRepr::Sparse { offsets, targets, weights } => {
                let lo = offsets[v as usize] as usize;
                let hi = offsets[v as usize + 1] as usize;
                match targets[lo..hi].binary_search(&x) {
                    Ok(i) => weights[lo + i],
                    Err(_) => 0.0,
                }
            }
            MatrixRepr::CompleteUniform { k } => {
                if v == x {
                    0.0
                } else {
                    1.0 / (*k as f64 - 1.0)
                }
            }
        }
    }

    /// Nonzero entries of row `v` as `(target, weight)` pairs.
    pub fn row(&self, v: VertexId) -> Vec<(VertexId, f64)> {
        match &self.repr {
            MatrixRepr::Sparse { offsets, targets, weights } => {
                let lo = offsets[v as usize] as usize;
                let hi = offsets[v as usize + 1] as usize;
                targets[lo..hi].iter().copied().zip(weights[lo..hi].iter().copied()).collect()
            }
            MatrixRepr::CompleteUniform { k } => {
                let w = 1.0 / (*k as f64 - 1.0);
                (0..*k).filter(|&x| x != v).map(|x| (x, w)).collect()
            }
        }
    }

    /// Sparse view of row `v` for the hot simulation path; `None` for the
    /// synthesized complete-uniform representation.
    pub(crate) fn sparse_row(&self, v: VertexId) -> Option<(&[VertexId], &[f64])> {
        match &self.repr {
            MatrixRepr::Sparse { offsets, targets, weights } => {
                let lo = offsets[v as usize] as usize;
                let hi = offsets[v as usize + 1] as usize;
                Some((&targets[lo..hi], &weights[lo..hi]))
            }
            MatrixRepr::CompleteUniform { .. } => None,
        }
    }

    /// Samples a destination from row `v` using the given uniform draw in [0,1).
    pub fn sample_row(&self, v: VertexId, u: f64) -> VertexId {
        match &self.repr {
            MatrixRepr::Sparse { offsets, targets, weights } => {
                let lo = offsets[v as usize] as usize;
                let hi = offsets[v as usize + 1] as usize;
                let mut acc = 0.0;
                for i in lo..hi {
                    acc += weights[i];
                    if u < acc {
                        return targets[i];
                    }
                }
                targets[hi - 1]
            }
            MatrixRepr::CompleteUniform { k } => {
                let mut x = (u * (*k as f64 - 1.0)) as u32;
                if x >= *k - 1 {
                    x = *k - 2;
                }
                if x >= v {
                    x + 1
                } else {
                    x
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_adjacency() {
        let g = Graph::cycle(4).unwrap();
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.neighbors(0), &[1, 3]);
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn two_cycle_is_single_edge() {
        let g = Graph::cycle(2).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(1), 1);
    }

    #[test]
    fn three_cycle_is_complete() {
        let g = Graph::cycle(3).unwrap();
        let k3 = Graph::complete(3).unwrap();
        for v in 0..3 {
            assert_eq!(g.neighbors(v), k3.neighbors(v));
            assert_eq!(g.degree(v), 2);
        }
    }

    #[test]
    fn cycle_rejects_k1() {
        assert!(matches!(Graph::cycle(1), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn torus_shape() {
        let g = Graph::torus(3, 2).unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert!((0..9).all(|v| g.degree(v) == 4));

        let g = Graph::torus(4, 3).unwrap();
        assert_eq!(g.vertex_count(), 64);
        assert!((0..64).all(|v| g.degree(v) == 6));
    }

    #[test]
    fn torus_d1_matches_cycle() {
        let t = Graph::torus(5, 1).unwrap();
        let c = Graph::cycle(5).unwrap();
        for v in 0..5 {
            assert_eq!(t.neighbors(v), c.neighbors(v));
        }
    }

    #[test]
    fn torus_rejects_small_n() {
        assert!(matches!(Graph::torus(2, 2), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn complete_graph_shape() {
        let g = Graph::complete(5).unwrap();
        assert_eq!(g.edge_count(), 10);
        let g2 = Graph::complete(2).unwrap();
        let c2 = Graph::cycle(2).unwrap();
        assert_eq!(g2.neighbors(0), c2.neighbors(0));
        let g100 = Graph::complete(100).unwrap();
        assert!((0..100).all(|v| g100.degree(v) == 99));
    }

    #[test]
    fn adjacency_is_symmetric_irreflexive_and_connected() {
        for g in [
            Graph::cycle(7).unwrap(),
            Graph::torus(3, 2).unwrap(),
            Graph::complete(6).unwrap(),
            Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap(),
        ] {
            for v in 0..g.vertex_count() as u32 {
                for &x in g.neighbors(v) {
                    assert_ne!(v, x);
                    assert!(g.are_adjacent(x, v));
                }
            }
            assert!(g.is_connected());
        }
    }

    #[test]
    fn custom_graph_validation() {
        assert!(Graph::from_edges(3, &[(0, 0), (1, 2)]).is_err()); // loop
        assert!(Graph::from_edges(3, &[(0, 1), (0, 1), (1, 2)]).is_err()); // multi-edge
        assert!(Graph::from_edges(4, &[(0, 1), (2, 3)]).is_err()); // disconnected
        assert!(Graph::from_edges(3, &[(0, 5)]).is_err()); // out of range
    }

    #[test]
    fn uniform_rows() {
        let g = Graph::cycle(4).unwrap();
        let m = RedistributionMatrix::uniform(&g);
        assert_eq!(m.row(0), vec![(1, 0.5), (3, 0.5)]);

        let k3 = Graph::complete(3).unwrap();
        let m3 = RedistributionMatrix::uniform(&k3);
        assert_eq!(m3.row(0), vec![(1, 0.5), (2, 0.5)]);

        let t = Graph::torus(3, 2).unwrap();
        let mt = RedistributionMatrix::uniform(&t);
        for v in 0..9 {
            let row = mt.row(v);
            assert_eq!(row.len(), 4);
            assert!(row.iter().all(|&(_, w)| w == 0.25)); // exact: degree 4
        }
    }

    #[test]
    fn custom_rows_accept_valid_stochastic() {
        let g = Graph::cycle(3).unwrap();
        let rows = vec![
            vec![0.0, 0.7, 0.3],
            vec![0.5, 0.0, 0.5],
            vec![0.2, 0.8, 0.0],
        ];
        let m = RedistributionMatrix::custom(&g, &rows).unwrap();
        assert_eq!(m.prob(0, 1), 0.7);
        assert_eq!(m.prob(2, 0), 0.2);
        assert!(!m.is_uniform());
    }

    #[test]
    fn custom_rows_reject_bad_input() {
        let g = Graph::cycle(3).unwrap();
        let bad_sum = vec![
            vec![0.0, 0.6, 0.3],
            vec![0.5, 0.0, 0.5],
            vec![0.2, 0.8, 0.0],
        ];
        match RedistributionMatrix::custom(&g, &bad_sum) {
            Err(Error::BadRow { row, .. }) => assert_eq!(row, 0),
            other => panic!("expected BadRow, got {other:?}"),
        }
        let negative = vec![
            vec![0.0, 1.2, -0.2],
            vec![0.5, 0.0, 0.5],
            vec![0.2, 0.8, 0.0],
        ];
        assert!(RedistributionMatrix::custom(&g, &negative).is_err());
        let diag = vec![
            vec![0.1, 0.6, 0.3],
            vec![0.5, 0.0, 0.5],
            vec![0.2, 0.8, 0.0],
        ];
        assert!(RedistributionMatrix::custom(&g, &diag).is_err());
        // support off the adjacency
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let off = vec![
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.0, 0.5],
            vec![0.5, 0.5, 0.0],
        ];
        assert!(RedistributionMatrix::custom(&path, &off).is_err());
        // an edge with zero weight in both directions
        let dead_edge = vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.5, 0.0],
        ];
        assert!(RedistributionMatrix::custom(&g, &dead_edge).is_err());
    }

    #[test]
    fn custom_uniform_rows_match_uniform() {
        let g = Graph::cycle(5).unwrap();
        let mut rows = vec![vec![0.0; 5]; 5];
        for v in 0..5u32 {
            for &x in g.neighbors(v) {
                rows[v as usize][x as usize] = 0.5;
            }
        }
        let custom = RedistributionMatrix::custom(&g, &rows).unwrap();
        let uniform = RedistributionMatrix::uniform(&g);
        for v in 0..5 {
            for x in 0..5 {
                assert_eq!(custom.prob(v, x), uniform.prob(v, x));
            }
        }
    }

    #[test]
    fn json_graph_roundtrip() {
        let doc = r#"{"vertices": 3, "edges": [[0,1],[1,2],[2,0]],
                      "rows": [[0,0.7,0.3],[0.5,0,0.5],[0.2,0.8,0]]}"#;
        let (g, m) = Graph::from_json(doc).unwrap();
        assert_eq!(g.vertex_count(), 3);
        let m = m.unwrap();
        assert_eq!(m.prob(1, 0), 0.5);

        let plain = r#"{"vertices": 4, "edges": [[0,1],[1,2],[2,3],[3,0]]}"#;
        let (g, m) = Graph::from_json(plain).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert!(m.is_none());
    }

    #[test]
    fn diameters() {
        assert_eq!(Graph::cycle(10).unwrap().diameter(), 5);
        assert_eq!(Graph::torus(4, 2).unwrap().diameter(), 4);
        assert_eq!(Graph::complete(9).unwrap().diameter(), 1);
        let p = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(p.diameter(), 3);
    }

    #[test]
    fn torus_coordinates_roundtrip() {
        let g = Graph::torus(5, 3).unwrap();
        for v in [0u32, 7, 31, 124] {
            let c = g.torus_coords(v).unwrap();
            assert_eq!(g.torus_vertex(&c).unwrap(), v);
        }
    }

    #[test]
    fn complete_uniform_row_sampler_is_unbiased_over_support() {
        let g = Graph::complete(5).unwrap();
        let m = RedistributionMatrix::uniform(&g);
        let mut seen = std::collections::HashSet::new();
        for i in 0..1000 {
            let u = i as f64 / 1000.0;
            let x = m.sample_row(2, u);
            assert_ne!(x, 2);
            seen.insert(x);
        }
        assert_eq!(seen.len(), 4);
    }
}
