//! Bratteli diagrams truncated at a finite depth.
//!
//! Vertices and edges are stored per level in canonical (label) order, so an
//! edge is addressed by `(level, index)` and index order agrees with label
//! order. A [`Route`] is a rooted path written as edge indices, one per level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Name of the implicit root vertex at level 0.
pub const ROOT: &str = "v0";

/// Rooted path: entry `k` is the index of an edge in `E_{k+1}`.
pub type Route = SmallVec<[u16; 12]>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub label: String,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEdge {
    pub label: String,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLevel {
    pub vertices: Vec<String>,
}

/// File format: `levels[k]` lists `V_{k+1}`, `edges[k]` lists `E_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDiagram {
    pub levels: Vec<RawLevel>,
    pub edges: Vec<Vec<RawEdge>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    LevelCountMismatch { vertex_levels: usize, edge_levels: usize },
    EmptyLevel { level: usize },
    EmptyEdgeSet { level: usize },
    DuplicateVertex { level: usize, vertex: String },
    DuplicateLabel { level: usize, label: String },
    UnknownVertex { level: usize, label: String, vertex: String },
    DeadVertex { level: usize, vertex: String },
    DanglingVertex { level: usize, vertex: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LevelCountMismatch { vertex_levels, edge_levels } => write!(
                f,
                "level count mismatch: {vertex_levels} vertex levels, {edge_levels} edge levels"
            ),
            Violation::EmptyLevel { level } => write!(f, "empty level {level}"),
            Violation::EmptyEdgeSet { level } => write!(f, "empty edge set at level {level}"),
            Violation::DuplicateVertex { level, vertex } => {
                write!(f, "duplicate vertex {vertex} at level {level}")
            }
            Violation::DuplicateLabel { level, label } => {
                write!(f, "duplicate label {label} at level {level}")
            }
            Violation::UnknownVertex { level, label, vertex } => write!(
                f,
                "edge {label} at level {level} references unknown vertex {vertex}"
            ),
            Violation::DeadVertex { level, vertex } => {
                write!(f, "dead vertex {vertex} at level {level}")
            }
            Violation::DanglingVertex { level, vertex } => {
                write!(f, "dangling vertex {vertex} at level {level}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("invalid diagram: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("level {level} out of range (depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("cut levels must start at 0 and increase strictly within the depth")]
    NonMonotoneCuts,
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("unknown edge label {0}")]
    UnknownEdge(String),
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error("path is not composable")]
    BadPath,
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Nonnegative integer matrix indexed `V_{n-1} x V_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IncidenceMatrix {
    pub level: usize,
    pub entries: Vec<Vec<u64>>,
}

impl IncidenceMatrix {
    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn mul(&self, other: &IncidenceMatrix) -> IncidenceMatrix {
        let (r, k, c) = (self.rows(), self.cols(), other.cols());
        assert_eq!(k, other.rows(), "shape mismatch");
        let mut entries = vec![vec![0u64; c]; r];
        for i in 0..r {
            for j in 0..k {
                let a = self.entries[i][j];
                if a == 0 {
                    continue;
                }
                for l in 0..c {
                    entries[i][l] += a * other.entries[j][l];
                }
            }
        }
        IncidenceMatrix { level: other.level, entries }
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().flatten().all(|&x| x > 0)
    }

    pub fn min_entry(&self) -> u64 {
        self.entries.iter().flatten().copied().min().unwrap_or(0)
    }
}

/// Path starting at a vertex of level `start`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FinitePath {
    pub start: usize,
    pub vertex: usize,
    pub edges: Route,
}

impl FinitePath {
    pub fn end_level(&self) -> usize {
        self.start + self.edges.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    vertices: Vec<Vec<String>>,
    edges: Vec<Vec<Edge>>,
    out: Vec<Vec<Vec<u16>>>,
    inc: Vec<Vec<Vec<u16>>>,
}

impl Diagram {
    /// Checks every structural invariant and returns the canonical diagram.
    pub fn validate(raw: &RawDiagram) -> Result<Diagram, DiagramError> {
        let mut bad = Vec::new();
        if raw.levels.len() != raw.edges.len() || raw.levels.is_empty() {
            bad.push(Violation::LevelCountMismatch {
                vertex_levels: raw.levels.len(),
                edge_levels: raw.edges.len(),
            });
            return Err(DiagramError::Invalid(bad));
        }
        let mut vertices = vec![vec![ROOT.to_string()]];
        for (k, lvl) in raw.levels.iter().enumerate() {
            let level = k + 1;
            if lvl.vertices.is_empty() {
                bad.push(Violation::EmptyLevel { level });
            }
            let mut seen = BTreeSet::new();
            for v in &lvl.vertices {
                if !seen.insert(v.clone()) {
                    bad.push(Violation::DuplicateVertex { level, vertex: v.clone() });
                }
            }
            vertices.push(seen.into_iter().collect());
        }
        let mut edges = Vec::with_capacity(raw.edges.len());
        for (k, set) in raw.edges.iter().enumerate() {
            let level = k + 1;
            if set.is_empty() {
                bad.push(Violation::EmptyEdgeSet { level });
            }
            let mut seen = BTreeMap::new();
            for e in set {
                let from = vertices[level - 1].binary_search(&e.from);
                let to = vertices[level].binary_search(&e.to);
                for (r, name) in [(&from, &e.from), (&to, &e.to)] {
                    if r.is_err() {
                        bad.push(Violation::UnknownVertex {
                            level,
                            label: e.label.clone(),
                            vertex: name.clone(),
                        });
                    }
                }
                if seen.contains_key(&e.label) {
                    bad.push(Violation::DuplicateLabel { level, label: e.label.clone() });
                    continue;
                }
                if let (Ok(from), Ok(to)) = (from, to) {
                    seen.insert(e.label.clone(), Edge { label: e.label.clone(), from, to });
                }
            }
            edges.push(seen.into_values().collect::<Vec<_>>());
        }
        let depth = edges.len();
        for n in 1..=depth {
            for (w, name) in vertices[n].iter().enumerate() {
                if !edges[n - 1].iter().any(|e| e.to == w) {
                    bad.push(Violation::DeadVertex { level: n, vertex: name.clone() });
                }
            }
            for (v, name) in vertices[n - 1].iter().enumerate() {
                if !edges[n - 1].iter().any(|e| e.from == v) {
                    bad.push(Violation::DanglingVertex { level: n - 1, vertex: name.clone() });
                }
            }
        }
        if !bad.is_empty() {
            return Err(DiagramError::Invalid(bad));
        }
        Ok(Self::assemble(vertices, edges))
    }

    fn assemble(vertices: Vec<Vec<String>>, edges: Vec<Vec<Edge>>) -> Diagram {
        let depth = edges.len();
        let mut out: Vec<Vec<Vec<u16>>> = (0..=depth).map(|n| vec![Vec::new(); vertices[n].len()]).collect();
        let mut inc: Vec<Vec<Vec<u16>>> = (0..=depth).map(|n| vec![Vec::new(); vertices[n].len()]).collect();
        for n in 1..=depth {
            for (i, e) in edges[n - 1].iter().enumerate() {
                out[n - 1][e.from].push(i as u16);
                inc[n][e.to].push(i as u16);
            }
        }
        Diagram { vertices, edges, out, inc }
    }

    pub fn from_json(text: &str) -> Result<Diagram, DiagramError> {
        let raw: RawDiagram = serde_json::from_str(text)?;
        Diagram::validate(&raw)
    }

    pub fn to_raw(&self) -> RawDiagram {
        RawDiagram {
            levels: self.vertices[1..]
                .iter()
                .map(|vs| RawLevel { vertices: vs.clone() })
                .collect(),
            edges: (1..=self.depth())
                .map(|n| {
                    self.edges[n - 1]
                        .iter()
                        .map(|e| RawEdge {
                            label: e.label.clone(),
                            from: self.vertices[n - 1][e.from].clone(),
                            to: self.vertices[n][e.to].clone(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("serializable")
    }

    /// Number of edge levels.
    pub fn depth(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_count(&self, n: usize) -> usize {
        self.vertices[n].len()
    }

    pub fn vertex_name(&self, n: usize, v: usize) -> &str {
        &self.vertices[n][v]
    }

    pub fn vertex_names(&self, n: usize) -> &[String] {
        &self.vertices[n]
    }

    pub fn vertex_index(&self, n: usize, name: &str) -> Option<usize> {
        self.vertices.get(n)?.binary_search_by(|s| s.as_str().cmp(name)).ok()
    }

    /// Edge set `E_n`, `n >= 1`.
    pub fn edges(&self, n: usize) -> &[Edge] {
        &self.edges[n - 1]
    }

    pub fn edge(&self, n: usize, e: u16) -> &Edge {
        &self.edges[n - 1][e as usize]
    }

    pub fn edge_index(&self, n: usize, label: &str) -> Option<u16> {
        self.edges
            .get(n.checked_sub(1)?)?
            .binary_search_by(|e| e.label.as_str().cmp(label))
            .ok()
            .map(|i| i as u16)
    }

    /// Edges of `E_{n+1}` leaving vertex `v` of `V_n`.
    pub fn out_edges(&self, n: usize, v: usize) -> &[u16] {
        &self.out[n][v]
    }

    /// Edges of `E_n` entering vertex `w` of `V_n`.
    pub fn in_edges(&self, n: usize, w: usize) -> &[u16] {
        &self.inc[n][w]
    }

    fn check_level(&self, n: usize, lo: usize) -> Result<(), DiagramError> {
        if n < lo || n > self.depth() {
            return Err(DiagramError::LevelOutOfRange { level: n, depth: self.depth() });
        }
        Ok(())
    }

    pub fn incidence_matrix(&self, n: usize) -> Result<IncidenceMatrix, DiagramError> {
        self.check_level(n, 1)?;
        let mut entries = vec![vec![0u64; self.vertex_count(n)]; self.vertex_count(n - 1)];
        for e in self.edges(n) {
            entries[e.from][e.to] += 1;
        }
        Ok(IncidenceMatrix { level: n, entries })
    }

    /// Product of the incidence matrices of levels `m+1..=n`.
    pub fn composite_incidence(&self, m: usize, n: usize) -> Result<IncidenceMatrix, DiagramError> {
        if m >= n {
            return Err(DiagramError::LevelOutOfRange { level: n, depth: self.depth() });
        }
        let mut acc = self.incidence_matrix(m + 1)?;
        for k in m + 2..=n {
            acc = acc.mul(&self.incidence_matrix(k)?);
        }
        Ok(acc)
    }

    /// Number of rooted paths ending at each vertex of `V_n`.
    pub fn path_counts(&self, n: usize) -> Vec<u128> {
        let mut k = vec![1u128];
        for level in 1..=n {
            let mut next = vec![0u128; self.vertex_count(level)];
            for e in self.edges(level) {
                next[e.to] += k[e.from];
            }
            k = next;
        }
        k
    }

    /// Terminal vertex of a rooted route.
    pub fn terminal(&self, route: &[u16]) -> usize {
        match route.len() {
            0 => 0,
            n => self.edge(n, route[n - 1]).to,
        }
    }

    pub fn is_route(&self, route: &[u16]) -> bool {
        let mut v = 0usize;
        for (k, &e) in route.iter().enumerate() {
            let level = k + 1;
            if level > self.depth() || e as usize >= self.edges(level).len() {
                return false;
            }
            let edge = self.edge(level, e);
            if edge.from != v {
                return false;
            }
            v = edge.to;
        }
        true
    }

    pub fn route_labels(&self, route: &[u16]) -> Vec<String> {
        route
            .iter()
            .enumerate()
            .map(|(k, &e)| self.edge(k + 1, e).label.clone())
            .collect()
    }

    pub fn route_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<Route, DiagramError> {
        let mut route = Route::new();
        for (k, l) in labels.iter().enumerate() {
            let e = self
                .edge_index(k + 1, l.as_ref())
                .ok_or_else(|| DiagramError::UnknownEdge(l.as_ref().to_string()))?;
            route.push(e);
        }
        if !self.is_route(&route) {
            return Err(DiagramError::BadPath);
        }
        Ok(route)
    }

    /// All rooted routes of length `n`, in canonical order.
    pub fn routes(&self, n: usize) -> Vec<Route> {
        let mut acc = vec![Route::new()];
        for level in 1..=n {
            let mut next = Vec::new();
            for r in &acc {
                let v = self.terminal(r);
                for &e in self.out_edges(level - 1, v) {
                    let mut s = r.clone();
                    s.push(e);
                    next.push(s);
                }
            }
            acc = next;
        }
        acc.sort();
        acc
    }

    /// Rooted routes of length `n` ending at `v`.
    pub fn routes_to(&self, n: usize, v: usize) -> Vec<Route> {
        self.routes(n).into_iter().filter(|r| self.terminal(r) == v).collect()
    }

    /// All extensions of `route` to length `n`, in canonical order.
    pub fn extensions(&self, route: &[u16], n: usize) -> Vec<Route> {
        let mut acc: Vec<Route> = vec![Route::from_slice(route)];
        for level in route.len() + 1..=n {
            let mut next = Vec::with_capacity(acc.len() * 2);
            for r in &acc {
                let v = self.terminal(r);
                for &e in self.out_edges(level - 1, v) {
                    let mut s = r.clone();
                    s.push(e);
                    next.push(s);
                }
            }
            acc = next;
        }
        acc
    }

    /// Every composable edge sequence from a vertex of `V_m` to `V_n`.
    pub fn enumerate_paths(&self, m: usize, n: usize) -> Result<Vec<FinitePath>, DiagramError> {
        if m >= n {
            return Err(DiagramError::LevelOutOfRange { level: m, depth: n });
        }
        self.check_level(n, 1)?;
        let mut acc: Vec<(usize, usize, Route)> =
            (0..self.vertex_count(m)).map(|v| (v, v, Route::new())).collect();
        for level in m + 1..=n {
            let mut next = Vec::new();
            for (start, cur, r) in &acc {
                for &e in self.out_edges(level - 1, *cur) {
                    let mut s = r.clone();
                    s.push(e);
                    next.push((*start, self.edge(level, e).to, s));
                }
            }
            acc = next;
        }
        let mut paths: Vec<FinitePath> = acc
            .into_iter()
            .map(|(vertex, _, edges)| FinitePath { start: m, vertex, edges })
            .collect();
        paths.sort_by(|a, b| a.edges.cmp(&b.edges));
        Ok(paths)
    }

    /// Children `U(pe)` of the cylinder `U(p)`.
    pub fn refine_cylinder(&self, p: &[u16]) -> Vec<Route> {
        let v = self.terminal(p);
        self.out_edges(p.len(), v)
            .iter()
            .map(|&e| {
                let mut r = Route::from_slice(p);
                r.push(e);
                r
            })
            .collect()
    }

    /// Contracts the levels between consecutive cuts; paths become edges
    /// labelled by their dot-joined edge labels.
    pub fn telescope(&self, cuts: &[usize]) -> Result<Diagram, DiagramError> {
        if cuts.len() < 2 || cuts[0] != 0 || cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DiagramError::NonMonotoneCuts);
        }
        if *cuts.last().unwrap() > self.depth() {
            return Err(DiagramError::NonMonotoneCuts);
        }
        let vertices: Vec<Vec<String>> = cuts.iter().map(|&c| self.vertices[c].clone()).collect();
        let mut edges = Vec::new();
        for w in cuts.windows(2) {
            let mut level: Vec<Edge> = self
                .enumerate_paths(w[0], w[1])?
                .into_iter()
                .map(|p| {
                    let label = p
                        .edges
                        .iter()
                        .enumerate()
                        .map(|(k, &e)| self.edge(w[0] + k + 1, e).label.as_str())
                        .collect::<Vec<_>>()
                        .join(".");
                    let last = *p.edges.last().unwrap();
                    Edge { label, from: p.vertex, to: self.edge(w[1], last).to }
                })
                .collect();
            level.sort_by(|a, b| a.label.cmp(&b.label));
            edges.push(level);
        }
        Ok(Self::assemble(vertices, edges))
    }

    /// Replaces vertex `v` of `V_n` by one copy per part; incoming edges go to
    /// the copy of their part and every outgoing edge is duplicated.
    pub fn symbol_split<S: AsRef<str>>(
        &self,
        n: usize,
        v: &str,
        parts: &[Vec<S>],
    ) -> Result<Diagram, DiagramError> {
        self.check_level(n, 1)?;
        let vi = self
            .vertex_index(n, v)
            .ok_or_else(|| DiagramError::UnknownVertex(v.to_string()))?;
        if parts.len() < 2 {
            return Err(DiagramError::BadPartition("need at least two parts".into()));
        }
        let incoming: BTreeSet<&str> = self
            .in_edges(n, vi)
            .iter()
            .map(|&e| self.edge(n, e).label.as_str())
            .collect();
        let mut assigned = BTreeMap::new();
        for (k, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(DiagramError::BadPartition(format!("part {k} is empty")));
            }
            for l in part {
                let l = l.as_ref();
                if !incoming.contains(l) {
                    return Err(DiagramError::BadPartition(format!("{l} does not enter {v}")));
                }
                if assigned.insert(l.to_string(), k).is_some() {
                    return Err(DiagramError::BadPartition(format!("{l} assigned twice")));
                }
            }
        }
        if assigned.len() != incoming.len() {
            return Err(DiagramError::BadPartition("parts do not cover the incoming edges".into()));
        }
        let copy = |k: usize| format!("{v}.{k}");
        let mut raw = self.to_raw();
        let names = &mut raw.levels[n - 1].vertices;
        names.retain(|x| x != v);
        for k in 0..parts.len() {
            if names.contains(&copy(k)) {
                return Err(DiagramError::BadPartition(format!("name {} is taken", copy(k))));
            }
            names.push(copy(k));
        }
        for e in raw.edges[n - 1].iter_mut() {
            if e.to == v {
                e.to = copy(assigned[&e.label]);
            }
        }
        if n < self.depth() {
            let mut level = Vec::new();
            for e in raw.edges[n].drain(..) {
                if e.from == v {
                    for k in 0..parts.len() {
                        level.push(RawEdge {
                            label: format!("{}.{k}", e.label),
                            from: copy(k),
                            to: e.to.clone(),
                        });
                    }
                } else {
                    level.push(e);
                }
            }
            raw.edges[n] = level;
        }
        Diagram::validate(&raw)
    }

    /// True iff every composite incidence matrix over `window` consecutive
    /// levels (starting at level 1 or later) is strictly positive.
    pub fn check_simplicity(&self, window: usize) -> bool {
        if window == 0 || window >= self.depth() {
            return false;
        }
        (1..=self.depth() - window).all(|m| {
            self.composite_incidence(m, m + window)
                .map(|c| c.is_positive())
                .unwrap_or(false)
        })
    }

    /// Smallest window witnessing simplicity, if any.
    pub fn simplicity_window(&self) -> Option<usize> {
        (1..self.depth()).find(|&w| self.check_simplicity(w))
    }
}
