//! Double embeddings of a guest diagram into a host diagram.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{Diagram, DiagramError};

/// Which of the two embedded copies an edge belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Zero,
    One,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Zero => Side::One,
            Side::One => Side::Zero,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Side {
        if i == 0 {
            Side::Zero
        } else {
            Side::One
        }
    }

    pub const BOTH: [Side; 2] = [Side::Zero, Side::One];
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("size condition violated at level {level}: {detail}")]
    SizeCondition { level: usize, detail: String },
    #[error("host and guest depths differ ({host} vs {guest})")]
    DepthMismatch { host: usize, guest: usize },
    #[error("host is not simple; cannot grow vertex and edge counts")]
    NotSimple,
    #[error("no telescoping of the host meets the size conditions")]
    NoPreparation,
    #[error("embedding file: {0}")]
    Format(String),
    #[error("embedding is invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Vertex map and the two edge maps, stored by index per level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    /// `xi[n][w]`, `n = 0..=depth`.
    pub xi: Vec<Vec<usize>>,
    /// `maps[s][n-1][f]` is the host edge carrying guest edge `f` on side `s`.
    pub maps: [Vec<Vec<u16>>; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEmbeddingLevel {
    pub xi: BTreeMap<String, String>,
    pub xi0: BTreeMap<String, String>,
    pub xi1: BTreeMap<String, String>,
}

impl Embedding {
    pub fn depth(&self) -> usize {
        self.maps[0].len()
    }

    pub fn edge_map(&self, side: Side, n: usize) -> &[u16] {
        &self.maps[side.index()][n - 1]
    }

    pub fn to_raw(&self, host: &Diagram, guest: &Diagram) -> Vec<RawEmbeddingLevel> {
        (1..=self.depth())
            .map(|n| {
                let xi = self.xi[n]
                    .iter()
                    .enumerate()
                    .map(|(w, &v)| (guest.vertex_name(n, w).to_string(), host.vertex_name(n, v).to_string()))
                    .collect();
                let map = |s: Side| {
                    self.edge_map(s, n)
                        .iter()
                        .enumerate()
                        .map(|(f, &e)| (guest.edge(n, f as u16).label.clone(), host.edge(n, e).label.clone()))
                        .collect()
                };
                RawEmbeddingLevel { xi, xi0: map(Side::Zero), xi1: map(Side::One) }
            })
            .collect()
    }

    pub fn to_json(&self, host: &Diagram, guest: &Diagram) -> String {
        serde_json::to_string_pretty(&self.to_raw(host, guest)).expect("serializable")
    }

    pub fn from_raw(host: &Diagram, guest: &Diagram, raw: &[RawEmbeddingLevel]) -> Result<Embedding, EmbedError> {
        if raw.len() != guest.depth() {
            return Err(EmbedError::Format(format!(
                "{} levels given for a guest of depth {}",
                raw.len(),
                guest.depth()
            )));
        }
        if host.depth() < guest.depth() {
            return Err(EmbedError::DepthMismatch { host: host.depth(), guest: guest.depth() });
        }
        let mut xi = vec![vec![0usize]];
        let mut maps = [Vec::new(), Vec::new()];
        for (k, lvl) in raw.iter().enumerate() {
            let n = k + 1;
            let mut row = Vec::new();
            for w in guest.vertex_names(n) {
                let v = lvl
                    .xi
                    .get(w)
                    .ok_or_else(|| EmbedError::Format(format!("level {n}: vertex {w} unmapped")))?;
                row.push(
                    host.vertex_index(n, v)
                        .ok_or_else(|| EmbedError::Format(format!("level {n}: unknown host vertex {v}")))?,
                );
            }
            xi.push(row);
            for (s, table) in [(0, &lvl.xi0), (1, &lvl.xi1)] {
                let mut row = Vec::new();
                for f in guest.edges(n) {
                    let e = table.get(&f.label).ok_or_else(|| {
                        EmbedError::Format(format!("level {n}: edge {} unmapped", f.label))
                    })?;
                    row.push(
                        host.edge_index(n, e)
                            .ok_or_else(|| EmbedError::Format(format!("level {n}: unknown host edge {e}")))?,
                    );
                }
                maps[s].push(row);
            }
        }
        Ok(Embedding { xi, maps })
    }

    pub fn from_json(host: &Diagram, guest: &Diagram, text: &str) -> Result<Embedding, EmbedError> {
        let raw: Vec<RawEmbeddingLevel> = serde_json::from_str(text)?;
        Embedding::from_raw(host, guest, &raw)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub level: usize,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EmbeddingReport {
    pub checks: Vec<Check>,
}

impl EmbeddingReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    fn push(&mut self, level: usize, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { level, name: name.to_string(), pass, detail });
    }
}

fn injective<T: Ord + Copy>(xs: &[T]) -> bool {
    let mut s: Vec<T> = xs.to_vec();
    s.sort();
    s.windows(2).all(|w| w[0] != w[1])
}

/// Minimum number of host edges between a vertex of `V_{n-1}` and one of `V_n`.
fn min_pair_edges(host: &Diagram, n: usize) -> u64 {
    host.incidence_matrix(n).map(|m| m.min_entry()).unwrap_or(0)
}

fn size_checks(host: &Diagram, guest: &Diagram, levels: usize, report: &mut EmbeddingReport) {
    for n in 1..=levels {
        let (vh, vg) = (host.vertex_count(n), guest.vertex_count(n));
        report.push(n, "vertex count", vh > vg, format!("#V = {vh}, #W = {vg}"));
        let need = 2 * guest.edges(n).len() as u64;
        let have = min_pair_edges(host, n);
        report.push(n, "edge count", have > need, format!("min pair edges {have}, 2#F = {need}"));
    }
}

/// Checks every invariant and size condition level by level.
pub fn verify_embedding(host: &Diagram, guest: &Diagram, emb: &Embedding) -> EmbeddingReport {
    let mut report = EmbeddingReport::default();
    let depth = guest.depth();
    let shapes_ok = host.depth() >= depth
        && emb.depth() == depth
        && emb.xi.len() == depth + 1
        && (1..=depth).all(|n| {
            emb.xi[n].len() == guest.vertex_count(n)
                && emb.xi[n].iter().all(|&v| v < host.vertex_count(n))
                && Side::BOTH.iter().all(|&s| {
                    emb.edge_map(s, n).len() == guest.edges(n).len()
                        && emb.edge_map(s, n).iter().all(|&e| (e as usize) < host.edges(n).len())
                })
        });
    report.push(0, "shape", shapes_ok, format!("host depth {}, guest depth {depth}", host.depth()));
    if !shapes_ok {
        return report;
    }
    for n in 1..=depth {
        report.push(n, "vertex map injective", injective(&emb.xi[n]), String::new());
        let m0 = emb.edge_map(Side::Zero, n);
        let m1 = emb.edge_map(Side::One, n);
        report.push(n, "xi0 injective", injective(m0), String::new());
        report.push(n, "xi1 injective", injective(m1), String::new());
        let disjoint = m0.iter().all(|e| !m1.contains(e));
        report.push(n, "disjoint images", disjoint, String::new());
        let mut compatible = true;
        for (f, edge) in guest.edges(n).iter().enumerate() {
            for s in Side::BOTH {
                let h = host.edge(n, emb.edge_map(s, n)[f]);
                compatible &= h.from == emb.xi[n - 1][edge.from] && h.to == emb.xi[n][edge.to];
            }
        }
        report.push(n, "compatibility", compatible, String::new());
    }
    size_checks(host, guest, depth, &mut report);
    report
}

/// Deterministic first-fit embedding in canonical label order.
pub fn auto_embed(host: &Diagram, guest: &Diagram) -> Result<Embedding, EmbedError> {
    let depth = guest.depth();
    if host.depth() < depth {
        return Err(EmbedError::DepthMismatch { host: host.depth(), guest: depth });
    }
    let mut sizes = EmbeddingReport::default();
    size_checks(host, guest, depth, &mut sizes);
    if let Some(c) = sizes.failures().next() {
        return Err(EmbedError::SizeCondition { level: c.level, detail: format!("{}: {}", c.name, c.detail) });
    }
    let mut xi = vec![vec![0usize]];
    let mut maps = [Vec::new(), Vec::new()];
    for n in 1..=depth {
        let mut used = vec![false; host.vertex_count(n)];
        let mut row = Vec::new();
        for w in 0..guest.vertex_count(n) {
            let fits = |v: usize| {
                guest.in_edges(n, w).iter().all(|&f| {
                    let src = guest.edge(n, f).from;
                    let need = guest.in_edges(n, w).iter().filter(|&&g| guest.edge(n, g).from == src).count();
                    let have = host
                        .out_edges(n - 1, xi[n - 1][src])
                        .iter()
                        .filter(|&&e| host.edge(n, e).to == v)
                        .count();
                    have >= 2 * need
                })
            };
            let v = (0..host.vertex_count(n))
                .find(|&v| !used[v] && fits(v))
                .ok_or_else(|| EmbedError::SizeCondition { level: n, detail: "no vertex fits".into() })?;
            used[v] = true;
            row.push(v);
        }
        xi.push(row);
        let mut m = [vec![0u16; guest.edges(n).len()], vec![0u16; guest.edges(n).len()]];
        let mut groups: BTreeMap<(usize, usize), Vec<u16>> = BTreeMap::new();
        for (f, e) in guest.edges(n).iter().enumerate() {
            groups.entry((e.from, e.to)).or_default().push(f as u16);
        }
        for ((gs, gt), fs) in groups {
            let (hs, ht) = (xi[n - 1][gs], xi[n][gt]);
            let slots: Vec<u16> = host
                .out_edges(n - 1, hs)
                .iter()
                .copied()
                .filter(|&e| host.edge(n, e).to == ht)
                .collect();
            for (k, &f) in fs.iter().enumerate() {
                m[0][f as usize] = slots[k];
                m[1][f as usize] = slots[fs.len() + k];
            }
        }
        let [m0, m1] = m;
        maps[0].push(m0);
        maps[1].push(m1);
    }
    Ok(Embedding { xi, maps })
}

/// Host after preparation, with the transformations applied.
#[derive(Clone, Debug)]
pub struct PreparedHost {
    pub diagram: Diagram,
    pub steps: Vec<String>,
}

fn sizes_hold(host: &Diagram, guest: &Diagram) -> bool {
    let levels = host.depth().min(guest.depth());
    let mut r = EmbeddingReport::default();
    size_checks(host, guest, levels, &mut r);
    levels > 0 && r.all_pass()
}

/// Splits vertices with the most incoming edges until `#V_n > #W_n`.
fn split_deficient(d: &Diagram, guest: &Diagram, steps: &mut Vec<String>) -> Result<Diagram, EmbedError> {
    let mut d = d.clone();
    for n in 1..=d.depth().min(guest.depth()) {
        while d.vertex_count(n) <= guest.vertex_count(n) {
            let (v, deg) = (0..d.vertex_count(n))
                .map(|v| (v, d.in_edges(n, v).len()))
                .max_by_key(|&(v, k)| (k, std::cmp::Reverse(v)))
                .unwrap();
            if deg < 2 {
                return Err(EmbedError::NoPreparation);
            }
            let labels: Vec<String> = d.in_edges(n, v).iter().map(|&e| d.edge(n, e).label.clone()).collect();
            let (a, b) = labels.split_at(deg / 2);
            let name = d.vertex_name(n, v).to_string();
            d = d.symbol_split(n, &name, &[a.to_vec(), b.to_vec()])?;
            steps.push(format!("split vertex {name} at level {n} into 2"));
        }
    }
    Ok(d)
}

/// Telescopes (and, only for vertex deficits, splits) the host until the
/// size conditions hold against `guest`.
pub fn prepare_host(host: &Diagram, guest: &Diagram) -> Result<PreparedHost, EmbedError> {
    if sizes_hold(host, guest) {
        return Ok(PreparedHost { diagram: host.clone(), steps: Vec::new() });
    }
    if host.simplicity_window().is_none() {
        return Err(EmbedError::NotSimple);
    }
    for k in 1..=host.depth() {
        let mut steps = Vec::new();
        let cuts: Vec<usize> = (0..=host.depth()).step_by(k).collect();
        if cuts.len() < 2 {
            break;
        }
        let mut d = if k == 1 { host.clone() } else { host.telescope(&cuts)? };
        if k > 1 {
            steps.push(format!("telescope with window {k}"));
        }
        d = match split_deficient(&d, guest, &mut steps) {
            Ok(d) => d,
            Err(_) => continue,
        };
        if sizes_hold(&d, guest) {
            return Ok(PreparedHost { diagram: d, steps });
        }
    }
    Err(EmbedError::NoPreparation)
}

/// Host, guest and embedding with lookup tables used by the groupoid calculus.
#[derive(Clone, Debug)]
pub struct Embedded {
    pub host: Diagram,
    pub guest: Diagram,
    pub emb: Embedding,
    /// `side[n-1][e]`: side and guest edge carried by host edge `e` of `E_n`.
    side: Vec<Vec<Option<(Side, u16)>>>,
    /// `guest_at[n][v]`: guest vertex mapped onto host vertex `v`.
    guest_at: Vec<Vec<Option<usize>>>,
    /// `plain[n][v]`: host edges of `E_{n+1}` leaving `v` outside both images.
    plain: Vec<Vec<Vec<u16>>>,
}

impl Embedded {
    pub fn new(host: Diagram, guest: Diagram, emb: Embedding) -> Result<Embedded, EmbedError> {
        let report = verify_embedding(&host, &guest, &emb);
        if let Some(c) = report.failures().next() {
            return Err(EmbedError::Invalid(format!("level {}: {} {}", c.level, c.name, c.detail)));
        }
        if host.depth() != guest.depth() {
            return Err(EmbedError::DepthMismatch { host: host.depth(), guest: guest.depth() });
        }
        let depth = host.depth();
        let mut side = Vec::new();
        for n in 1..=depth {
            let mut row = vec![None; host.edges(n).len()];
            for s in Side::BOTH {
                for (f, &e) in emb.edge_map(s, n).iter().enumerate() {
                    row[e as usize] = Some((s, f as u16));
                }
            }
            side.push(row);
        }
        let mut guest_at = Vec::new();
        for n in 0..=depth {
            let mut row = vec![None; host.vertex_count(n)];
            for (w, &v) in emb.xi[n].iter().enumerate() {
                row[v] = Some(w);
            }
            guest_at.push(row);
        }
        let mut plain = Vec::new();
        for n in 0..depth {
            plain.push(
                (0..host.vertex_count(n))
                    .map(|v| {
                        host.out_edges(n, v)
                            .iter()
                            .copied()
                            .filter(|&e| side[n][e as usize].is_none())
                            .collect()
                    })
                    .collect(),
            );
        }
        Ok(Embedded { host, guest, emb, side, guest_at, plain })
    }

    /// Embeds `guest` into `host` by first fit.
    pub fn auto(host: Diagram, guest: Diagram) -> Result<Embedded, EmbedError> {
        let emb = auto_embed(&host, &guest)?;
        Embedded::new(host, guest, emb)
    }

    pub fn depth(&self) -> usize {
        self.host.depth()
    }

    /// Side and guest edge of host edge `e` in `E_n`.
    #[inline]
    pub fn side_of(&self, n: usize, e: u16) -> Option<(Side, u16)> {
        self.side[n - 1][e as usize]
    }

    /// Host edge of `E_n` carrying guest edge `f` on side `s`.
    #[inline]
    pub fn image(&self, s: Side, n: usize, f: u16) -> u16 {
        self.emb.maps[s.index()][n - 1][f as usize]
    }

    /// Guest vertex sitting on host vertex `v` of `V_n`.
    #[inline]
    pub fn guest_vertex(&self, n: usize, v: usize) -> Option<usize> {
        self.guest_at[n][v]
    }

    /// Guest edges of `F_{n+1}` leaving the guest vertex on host vertex `v` of `V_n`.
    pub fn guest_out(&self, n: usize, v: usize) -> &[u16] {
        match self.guest_vertex(n, v) {
            Some(w) => self.guest.out_edges(n, w),
            None => &[],
        }
    }

    /// Host edges of `E_{n+1}` leaving `v` that lie in neither image.
    pub fn plain_out(&self, n: usize, v: usize) -> &[u16] {
        &self.plain[n][v]
    }

    /// Guest paths of length `n` from the root, as edge indices.
    pub fn guest_routes(&self, n: usize) -> Vec<crate::diagram::Route> {
        self.guest.routes(n)
    }

    /// Image of a rooted guest route on side `s`.
    pub fn image_route(&self, s: Side, g: &[u16]) -> crate::diagram::Route {
        g.iter().enumerate().map(|(k, &f)| self.image(s, k + 1, f)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn host3_guest_z_first_fit() {
        let host = fixtures::host(3, 3);
        let guest = fixtures::guest_z(3);
        let emb = auto_embed(&host, &guest).unwrap();
        assert!(verify_embedding(&host, &guest, &emb).all_pass());
        assert_eq!(host.edge(2, emb.edge_map(Side::Zero, 2)[0]).label, "uu0");
        assert_eq!(host.edge(2, emb.edge_map(Side::One, 2)[0]).label, "uu1");
        assert_eq!(host.edge(1, emb.edge_map(Side::Zero, 1)[0]).label, "ru0");
        let back = Embedding::from_json(&host, &guest, &emb.to_json(&host, &guest)).unwrap();
        assert_eq!(back, emb);
    }

    #[test]
    fn host5_dyadic_first_fit() {
        let host = fixtures::host(5, 3);
        let guest = fixtures::guest_dyadic(3);
        let emb = auto_embed(&host, &guest).unwrap();
        let label = |s, f| host.edge(2, emb.edge_map(s, 2)[f]).label.clone();
        assert_eq!([label(Side::Zero, 0), label(Side::Zero, 1)], ["uu0", "uu1"]);
        assert_eq!([label(Side::One, 0), label(Side::One, 1)], ["uu2", "uu3"]);
    }

    #[test]
    fn failures_are_reported() {
        let host = fixtures::host(3, 3);
        let guest = fixtures::guest_z(3);
        let mut emb = auto_embed(&host, &guest).unwrap();
        emb.maps[1] = emb.maps[0].clone();
        let r = verify_embedding(&host, &guest, &emb);
        assert!(r.failures().any(|c| c.name == "disjoint images"));
        let dy = fixtures::guest_dyadic(3);
        assert!(matches!(auto_embed(&host, &dy), Err(EmbedError::SizeCondition { .. })));
        let same = fixtures::single_loop_k(3, 5);
        assert!(auto_embed(&same, &fixtures::guest_z(3)).is_err());
    }

    #[test]
    fn preparation() {
        let host = fixtures::host(3, 3);
        let p = prepare_host(&host, &fixtures::guest_z(3)).unwrap();
        assert!(p.steps.is_empty());
        assert_eq!(p.diagram, host);
        let fib = fixtures::fib(20);
        let p = prepare_host(&fib, &fixtures::guest_z(4)).unwrap();
        assert_eq!(p.steps, vec!["telescope with window 5".to_string()]);
        assert!(p.diagram.incidence_matrix(2).unwrap().min_entry() >= 3);
        assert!(matches!(
            prepare_host(&fixtures::two_chains(6), &fixtures::guest_z(3)),
            Err(EmbedError::NotSimple)
        ));
    }
}
