//! Finite metric trees (ℝ-trees with finitely many edges).
//!
//! A point of the tree is a locus `(edge, offset)` where `offset` is the
//! arc length from the edge's first endpoint. Vertices are canonicalized to
//! the incident edge with the smallest id so that equal points compare equal.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest tree accepted; the all-pairs vertex distance table is `n²`.
pub const MAX_VERTICES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeLocus {
    pub edge: usize,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

/// On-disk tree description: `{"vertices": N, "edges": [[u, v, length], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    pub vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct MetricTree {
    n: usize,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
    vertex_dist: Vec<f64>,
    // rooted at vertex 0: (parent vertex, connecting edge)
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    vertex_locus: Vec<TreeLocus>,
    total_length: f64,
}

fn find(uf: &mut [usize], mut i: usize) -> usize {
    while uf[i] != i {
        uf[i] = uf[uf[i]];
        i = uf[i];
    }
    i
}

impl MetricTree {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument = serde_json::from_str(text)
            .map_err(|e| crate::Error::Domain(format!("invalid tree document: {e}")))?;
        Self::from_document(&doc)
    }

    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        let n = doc.vertices;
        if n < 2 {
            return domain("a tree needs at least two vertices");
        }
        if n > MAX_VERTICES {
            return domain(format!("tree has {n} vertices, limit is {MAX_VERTICES}"));
        }
        let mut uf: Vec<usize> = (0..n).collect();
        let mut edges = Vec::with_capacity(doc.edges.len());
        let mut incident = vec![Vec::new(); n];
        for (id, &(u, v, length)) in doc.edges.iter().enumerate() {
            if u >= n || v >= n {
                return domain(format!("edge {id} references a vertex outside 0..{n}"));
            }
            if !(length.is_finite() && length > 0.0) {
                return domain(format!("edge {id} has non-positive length {length}"));
            }
            if u == v {
                return domain(format!("edge {id} is a self-loop, the graph has a cycle"));
            }
            let (ru, rv) = (find(&mut uf, u), find(&mut uf, v));
            if ru == rv {
                return domain(format!("edge {id} closes a cycle"));
            }
            uf[ru] = rv;
            edges.push(Edge { u, v, length });
            incident[u].push(id);
            incident[v].push(id);
        }
        let root = find(&mut uf, 0);
        if (1..n).any(|i| find(&mut uf, i) != root) {
            return domain("tree graph is disconnected");
        }

        let mut parent = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(p) = queue.pop_front() {
            for &e in &incident[p] {
                let q = if edges[e].u == p { edges[e].v } else { edges[e].u };
                if !seen[q] {
                    seen[q] = true;
                    parent[q] = Some((p, e));
                    depth[q] = depth[p] + 1;
                    queue.push_back(q);
                }
            }
        }

        let mut vertex_dist = vec![0.0; n * n];
        for s in 0..n {
            let mut stack = vec![s];
            let mut visited = vec![false; n];
            visited[s] = true;
            while let Some(p) = stack.pop() {
                for &e in &incident[p] {
                    let q = if edges[e].u == p { edges[e].v } else { edges[e].u };
                    if !visited[q] {
                        visited[q] = true;
                        vertex_dist[s * n + q] = vertex_dist[s * n + p] + edges[e].length;
                        stack.push(q);
                    }
                }
            }
        }
        // exact symmetry
        for a in 0..n {
            for b in (a + 1)..n {
                vertex_dist[b * n + a] = vertex_dist[a * n + b];
            }
        }

        let vertex_locus = (0..n)
            .map(|v| {
                let e = *incident[v].iter().min().expect("connected tree has no isolated vertex");
                let offset = if edges[e].u == v { 0.0 } else { edges[e].length };
                TreeLocus { edge: e, offset }
            })
            .collect();
        let total_length = edges.iter().map(|e| e.length).sum();

        Ok(Self { n, edges, incident, vertex_dist, parent, depth, vertex_locus, total_length })
    }

    pub fn document(&self) -> TreeDocument {
        TreeDocument {
            vertices: self.n,
            edges: self.edges.iter().map(|e| (e.u, e.v, e.length)).collect(),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn vertex_dist(&self, a: usize, b: usize) -> f64 {
        self.vertex_dist[a * self.n + b]
    }

    pub fn vertex(&self, v: usize) -> Result<TreeLocus> {
        match self.vertex_locus.get(v) {
            Some(l) => Ok(*l),
            None => domain(format!("vertex {v} out of range")),
        }
    }

    /// Builds a canonical locus. Offsets within a relative 1e-12 of the edge
    /// ends are clamped; anything further out is rejected.
    pub fn locus(&self, edge: usize, offset: f64) -> Result<TreeLocus> {
        let Some(e) = self.edges.get(edge) else {
            return domain(format!("edge {edge} out of range"));
        };
        let slack = 1e-12 * (1.0 + e.length);
        if !offset.is_finite() || offset < -slack || offset > e.length + slack {
            return domain(format!("offset {offset} outside [0, {}] on edge {edge}", e.length));
        }
        Ok(self.canonical(edge, offset))
    }

    pub(crate) fn canonical(&self, edge: usize, offset: f64) -> TreeLocus {
        let e = &self.edges[edge];
        if offset <= 0.0 {
            self.vertex_locus[e.u]
        } else if offset >= e.length {
            self.vertex_locus[e.v]
        } else {
            TreeLocus { edge, offset }
        }
    }

    pub fn is_canonical(&self, p: &TreeLocus) -> bool {
        p.edge < self.edges.len() && *p == self.canonical(p.edge, p.offset)
    }

    /// Vertex id if the locus sits on a vertex.
    pub fn at_vertex(&self, p: &TreeLocus) -> Option<usize> {
        let e = &self.edges[p.edge];
        if p.offset <= 0.0 {
            Some(e.u)
        } else if p.offset >= e.length {
            Some(e.v)
        } else {
            None
        }
    }

    /// Distance from the locus to one endpoint of its own edge.
    fn to_end(&self, p: &TreeLocus, end: usize) -> f64 {
        let e = &self.edges[p.edge];
        if end == e.u {
            p.offset
        } else {
            e.length - p.offset
        }
    }

    pub fn dist_vertex(&self, w: usize, p: &TreeLocus) -> f64 {
        let e = &self.edges[p.edge];
        let via_u = self.vertex_dist(w, e.u) + p.offset;
        let via_v = self.vertex_dist(w, e.v) + (e.length - p.offset);
        via_u.min(via_v)
    }

    /// Best exit endpoint of `p`'s edge and entry endpoint of `q`'s edge.
    fn gate(&self, p: &TreeLocus, q: &TreeLocus) -> (usize, usize, f64) {
        let ep = &self.edges[p.edge];
        let eq = &self.edges[q.edge];
        let mut best = (ep.u, eq.u, f64::INFINITY);
        for a in [ep.u, ep.v] {
            for b in [eq.u, eq.v] {
                let total = self.to_end(p, a) + self.vertex_dist(a, b) + self.to_end(q, b);
                if total < best.2 {
                    best = (a, b, total);
                }
            }
        }
        best
    }

    pub fn dist(&self, p: &TreeLocus, q: &TreeLocus) -> f64 {
        if p.edge == q.edge {
            return (p.offset - q.offset).abs();
        }
        // fixed argument order keeps the metric exactly symmetric
        let (p, q) = if (p.edge, p.offset) <= (q.edge, q.offset) { (p, q) } else { (q, p) };
        self.gate(p, q).2
    }

    /// Hops `(from, to, edge)` along the unique vertex path from `a` to `b`.
    pub fn vertex_path(&self, a: usize, b: usize) -> Vec<(usize, usize, usize)> {
        let mut up = Vec::new();
        let mut down = Vec::new();
        let (mut p, mut q) = (a, b);
        while self.depth[p] > self.depth[q] {
            let (pp, e) = self.parent[p].unwrap();
            up.push((p, pp, e));
            p = pp;
        }
        while self.depth[q] > self.depth[p] {
            let (qq, e) = self.parent[q].unwrap();
            down.push((qq, q, e));
            q = qq;
        }
        while p != q {
            let (pp, ep) = self.parent[p].unwrap();
            up.push((p, pp, ep));
            p = pp;
            let (qq, eq) = self.parent[q].unwrap();
            down.push((qq, q, eq));
            q = qq;
        }
        up.extend(down.into_iter().rev());
        up
    }

    /// Point at arc length `alpha · d(x, y)` from `x` along the unique path.
    pub fn combine(&self, x: &TreeLocus, y: &TreeLocus, alpha: f64) -> TreeLocus {
        if alpha <= 0.0 || x == y {
            return *x;
        }
        if alpha >= 1.0 {
            return *y;
        }
        if x.edge == y.edge {
            return self.canonical(x.edge, x.offset + alpha * (y.offset - x.offset));
        }
        let (a, b, total) = self.gate(x, y);
        let mut s = alpha * total;

        let ex = &self.edges[x.edge];
        let off_a = if a == ex.u { 0.0 } else { ex.length };
        let first = (x.offset - off_a).abs();
        if s <= first {
            let t = if off_a > x.offset { x.offset + s } else { x.offset - s };
            return self.canonical(x.edge, t);
        }
        s -= first;
        for (from, _to, e) in self.vertex_path(a, b) {
            let len = self.edges[e].length;
            if s <= len {
                let t = if self.edges[e].u == from { s } else { len - s };
                return self.canonical(e, t);
            }
            s -= len;
        }
        let ey = &self.edges[y.edge];
        let off_b = if b == ey.u { 0.0 } else { ey.length };
        let t = if y.offset > off_b {
            (off_b + s).min(y.offset)
        } else {
            (off_b - s).max(y.offset)
        };
        self.canonical(y.edge, t)
    }

    /// Samples a locus uniformly with respect to arc length.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TreeLocus {
        let mut r = rng.random::<f64>() * self.total_length;
        for (id, e) in self.edges.iter().enumerate() {
            if r < e.length {
                return self.canonical(id, r);
            }
            r -= e.length;
        }
        let last = self.edges.len() - 1;
        self.canonical(last, self.edges[last].length * rng.random::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> MetricTree {
        MetricTree::from_json(r#"{"vertices": 4, "edges": [[0,1,1.0],[0,2,1.0],[0,3,1.0]]}"#).unwrap()
    }

    #[test]
    fn rejects_invalid_graphs() {
        let cycle = r#"{"vertices": 3, "edges": [[0,1,1.0],[1,2,1.0],[2,0,1.0]]}"#;
        assert!(MetricTree::from_json(cycle).is_err());
        let split = r#"{"vertices": 4, "edges": [[0,1,1.0],[2,3,1.0]]}"#;
        assert!(MetricTree::from_json(split).is_err());
        let zero = r#"{"vertices": 2, "edges": [[0,1,0.0]]}"#;
        assert!(MetricTree::from_json(zero).is_err());
        let negative = r#"{"vertices": 2, "edges": [[0,1,-2.0]]}"#;
        assert!(MetricTree::from_json(negative).is_err());
        assert!(MetricTree::from_json("{\"vertices\": 2}").is_err());
    }

    #[test]
    fn vertices_are_canonical() {
        let t = star();
        // hub is incident to edges 0,1,2; smallest id wins
        assert_eq!(t.vertex(0).unwrap(), TreeLocus { edge: 0, offset: 0.0 });
        assert_eq!(t.locus(2, 0.0).unwrap(), t.vertex(0).unwrap());
        assert_eq!(t.locus(1, 1.0).unwrap(), TreeLocus { edge: 1, offset: 1.0 });
        assert!(t.locus(1, 1.5).is_err());
    }

    #[test]
    fn leaf_to_leaf_distance() {
        let t = star();
        let l1 = t.vertex(1).unwrap();
        let l2 = t.vertex(2).unwrap();
        assert_eq!(t.dist(&l1, &l2), 2.0);
        assert_eq!(t.dist(&l2, &l1), 2.0);
    }

    #[test]
    fn combine_walks_through_hub() {
        let t = star();
        let l1 = t.vertex(1).unwrap();
        let l2 = t.vertex(2).unwrap();
        let m = t.combine(&l1, &l2, 0.75);
        assert_eq!(m, TreeLocus { edge: 1, offset: 0.5 });
        assert_eq!(t.combine(&l1, &l2, 0.5), t.vertex(0).unwrap());
    }

    #[test]
    fn vertex_path_on_a_line() {
        let t = MetricTree::from_json(
            r#"{"vertices": 4, "edges": [[0,1,1.0],[1,2,2.0],[2,3,3.0]]}"#,
        )
        .unwrap();
        let hops: Vec<usize> = t.vertex_path(3, 0).iter().map(|h| h.2).collect();
        assert_eq!(hops, vec![2, 1, 0]);
        assert_eq!(t.vertex_dist(0, 3), 6.0);
    }
}
