//! Basis elements of the relation and their exact calculus.
//!
//! An [`Element`] is a set of pairs of infinite paths determined by a kind
//! and two prefixes of equal length ending at a common vertex:
//!
//! * `Beta(p, q)` replaces the prefix `p` by `q` and keeps the tail.
//! * `Delta(s, p, q)` needs the first edge after `p` on side `s`. It swaps
//!   sides along the run of side-`s` edges, and also swaps the first edge of
//!   the opposite side if the run ends there. A run ending in a plain edge is
//!   left alone. An infinite run turns into an infinite run on the other side.
//! * `Lambda(s, p, q)` is the infinite-run part of `Delta(s, p, q)`.
//! * `Alpha(s, p, q)` relates `p` and `q` followed by the same infinite run
//!   on side `s`.
//!
//! `Beta` and `Delta` form the topology basis. `Lambda` and `Alpha` are the
//! closed pieces spanning the symbols of the algebra. Products compose left
//! to right, so `compose(a, b)` applies `a` first.

mod point;
mod relation;

pub use point::{cells, member, tail_heads, Point, Tail, TailEnd, TailTag, TruncatedPair, TAIL_HEAD};
pub use relation::{
    amenability_values, basis, class_size, guest_pairs, level_pairs, rn_class, rn_class_bruteforce,
    rn_classes, rn_difference, sample_points, AmenabilityReport,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{DiagramError, Route};
use crate::embedding::{Embedded, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Beta,
    Delta(Side),
    Lambda(Side),
    Alpha(Side),
}

impl Kind {
    pub fn side(self) -> Option<Side> {
        match self {
            Kind::Beta => None,
            Kind::Delta(s) | Kind::Lambda(s) | Kind::Alpha(s) => Some(s),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Beta => "beta",
            Kind::Delta(_) => "delta",
            Kind::Lambda(_) => "lambda",
            Kind::Alpha(_) => "alpha",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element {
    pub kind: Kind,
    pub p: Route,
    pub q: Route,
}

#[derive(Debug, Error)]
pub enum GroupoidError {
    #[error("prefixes have different lengths {0} and {1}")]
    Length(usize, usize),
    #[error("prefix is not a path of the host")]
    BadPath,
    #[error("prefixes end at different vertices")]
    Terminal,
    #[error("common terminal vertex carries no guest vertex")]
    NotGuest,
    #[error("level {level} needs depth {need}, diagram has depth {depth}")]
    Depth { level: usize, need: usize, depth: usize },
    #[error("truncation length {len} is too small for level {level}")]
    Truncation { len: usize, level: usize },
    #[error("unknown element kind {0:?}")]
    UnknownKind(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Element {
    pub fn new(kind: Kind, p: &[u16], q: &[u16]) -> Element {
        Element { kind, p: Route::from_slice(p), q: Route::from_slice(q) }
    }

    pub fn beta(p: &[u16], q: &[u16]) -> Element {
        Element::new(Kind::Beta, p, q)
    }

    pub fn delta(s: Side, p: &[u16], q: &[u16]) -> Element {
        Element::new(Kind::Delta(s), p, q)
    }

    pub fn lambda(s: Side, p: &[u16], q: &[u16]) -> Element {
        Element::new(Kind::Lambda(s), p, q)
    }

    pub fn alpha(s: Side, p: &[u16], q: &[u16]) -> Element {
        Element::new(Kind::Alpha(s), p, q)
    }

    pub fn level(&self) -> usize {
        self.p.len()
    }

    pub fn is_basis(&self) -> bool {
        matches!(self.kind, Kind::Beta | Kind::Delta(_))
    }

    pub fn inverse(&self) -> Element {
        let kind = match self.kind {
            Kind::Beta => Kind::Beta,
            Kind::Delta(s) => Kind::Delta(s.flip()),
            Kind::Lambda(s) => Kind::Lambda(s.flip()),
            Kind::Alpha(s) => Kind::Alpha(s),
        };
        Element { kind, p: self.q.clone(), q: self.p.clone() }
    }
}

/// Inverse element; an involution.
pub fn invert(g: &Element) -> Element {
    g.inverse()
}

/// Checks path validity, the common terminal vertex and, for the guest
/// kinds, that the terminal vertex carries a guest vertex.
pub fn validate(cx: &Embedded, g: &Element) -> Result<(), GroupoidError> {
    if g.p.len() != g.q.len() {
        return Err(GroupoidError::Length(g.p.len(), g.q.len()));
    }
    if !cx.host.is_route(&g.p) || !cx.host.is_route(&g.q) {
        return Err(GroupoidError::BadPath);
    }
    let v = cx.host.terminal(&g.p);
    if v != cx.host.terminal(&g.q) {
        return Err(GroupoidError::Terminal);
    }
    if g.kind != Kind::Beta && (g.level() == 0 || cx.guest_vertex(g.level(), v).is_none()) {
        return Err(GroupoidError::NotGuest);
    }
    Ok(())
}

fn need_depth(cx: &Embedded, level: usize, need: usize) -> Result<(), GroupoidError> {
    if need > cx.depth() {
        return Err(GroupoidError::Depth { level, need, depth: cx.depth() });
    }
    Ok(())
}

fn ext(p: &[u16], tail: &[u16]) -> Route {
    let mut r = Route::from_slice(p);
    r.extend_from_slice(tail);
    r
}

/// The three families splitting a `Delta` one level down.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Decomposition {
    /// Deltas one level down, the run continues.
    pub a: Vec<Element>,
    /// Betas two levels down, the run ends on the opposite side.
    pub b: Vec<Element>,
    /// Betas two levels down, the run ends on a plain edge.
    pub c: Vec<Element>,
}

impl Decomposition {
    pub fn into_vec(self) -> Vec<Element> {
        let mut v = self.a;
        v.extend(self.b);
        v.extend(self.c);
        v
    }
}

fn decompose_unchecked(cx: &Embedded, s: Side, p: &[u16], q: &[u16]) -> Decomposition {
    let n = p.len();
    let v = cx.host.terminal(p);
    let mut out = Decomposition::default();
    for &f in cx.guest_out(n, v) {
        let (es, eo) = (cx.image(s, n + 1, f), cx.image(s.flip(), n + 1, f));
        out.a.push(Element { kind: Kind::Delta(s), p: ext(p, &[es]), q: ext(q, &[eo]) });
        let w = cx.host.edge(n + 1, es).to;
        for &g in cx.guest_out(n + 1, w) {
            let (gs, go) = (cx.image(s, n + 2, g), cx.image(s.flip(), n + 2, g));
            out.b.push(Element::beta(&ext(p, &[es, go]), &ext(q, &[eo, gs])));
        }
        for &e in cx.plain_out(n + 1, w) {
            out.c.push(Element::beta(&ext(p, &[es, e]), &ext(q, &[eo, e])));
        }
    }
    out
}

/// Splits `Delta(s, p, q)` into its continuing, swapped and plain parts.
pub fn delta_decompose(cx: &Embedded, g: &Element) -> Result<Decomposition, GroupoidError> {
    validate(cx, g)?;
    let Kind::Delta(s) = g.kind else {
        return Err(GroupoidError::UnknownKind(g.kind.name().to_string()));
    };
    need_depth(cx, g.level(), g.level() + 2)?;
    Ok(decompose_unchecked(cx, s, &g.p, &g.q))
}

pub(crate) fn refine_unchecked(cx: &Embedded, g: &Element) -> Vec<Element> {
    let n = g.level();
    let v = cx.host.terminal(&g.p);
    match g.kind {
        Kind::Beta => cx
            .host
            .out_edges(n, v)
            .iter()
            .map(|&e| Element::beta(&ext(&g.p, &[e]), &ext(&g.q, &[e])))
            .collect(),
        Kind::Delta(s) => decompose_unchecked(cx, s, &g.p, &g.q).into_vec(),
        Kind::Lambda(s) | Kind::Alpha(s) => {
            let target = if matches!(g.kind, Kind::Lambda(_)) { s.flip() } else { s };
            cx.guest_out(n, v)
                .iter()
                .map(|&f| Element {
                    kind: g.kind,
                    p: ext(&g.p, &[cx.image(s, n + 1, f)]),
                    q: ext(&g.q, &[cx.image(target, n + 1, f)]),
                })
                .collect()
        }
    }
}

/// One-step refinement into pairwise disjoint pieces with the same union.
/// `Beta` and the closed kinds move down one level, `Delta` decomposes.
pub fn refine(cx: &Embedded, g: &Element) -> Result<Vec<Element>, GroupoidError> {
    validate(cx, g)?;
    let need = if matches!(g.kind, Kind::Delta(_)) { 2 } else { 1 };
    need_depth(cx, g.level(), g.level() + need)?;
    Ok(refine_unchecked(cx, g))
}

/// Splits `Beta(p, q)` into the betas one level down.
pub fn beta_refine(cx: &Embedded, g: &Element) -> Result<Vec<Element>, GroupoidError> {
    if g.kind != Kind::Beta {
        return Err(GroupoidError::UnknownKind(g.kind.name().to_string()));
    }
    refine(cx, g)
}

pub(crate) fn compatible(a: &[u16], b: &[u16]) -> bool {
    let m = a.len().min(b.len());
    a[..m] == b[..m]
}

fn compose_same_level(cx: &Embedded, x: &Element, y: &Element, out: &mut Vec<Element>) {
    use Kind::*;
    let (p, r) = (&x.p, &y.q);
    let kind = match (x.kind, y.kind) {
        (Beta, k) | (k, Beta) => k,
        (Delta(a), Delta(b)) if a != b => {
            let n = p.len();
            for &f in cx.guest_out(n, cx.host.terminal(p)) {
                let e = cx.image(a, n + 1, f);
                out.push(Element::beta(&ext(p, &[e]), &ext(r, &[e])));
            }
            return;
        }
        (Delta(a), Lambda(b)) | (Lambda(a), Delta(b)) | (Lambda(a), Lambda(b)) if a != b => Alpha(a),
        (Alpha(a), Delta(b)) | (Alpha(a), Lambda(b)) if a == b => Lambda(a),
        (Delta(a), Alpha(b)) | (Lambda(a), Alpha(b)) if a != b => Lambda(a),
        (Alpha(a), Alpha(b)) if a == b => Alpha(a),
        _ => return,
    };
    out.push(Element { kind, p: p.clone(), q: r.clone() });
}

pub(crate) fn compose_rec(cx: &Embedded, x: &Element, y: &Element, out: &mut Vec<Element>) {
    if !compatible(&x.q, &y.p) {
        return;
    }
    match x.level().cmp(&y.level()) {
        std::cmp::Ordering::Equal => compose_same_level(cx, x, y, out),
        std::cmp::Ordering::Less => {
            for c in refine_unchecked(cx, x) {
                compose_rec(cx, &c, y, out);
            }
        }
        std::cmp::Ordering::Greater => {
            for c in refine_unchecked(cx, y) {
                compose_rec(cx, x, &c, out);
            }
        }
    }
}

fn intersect_same_level(x: &Element, y: &Element, out: &mut Vec<Element>) {
    use Kind::*;
    let kind = match (x.kind, y.kind) {
        (Beta, Beta) => Beta,
        (Beta, Alpha(s)) | (Alpha(s), Beta) => Alpha(s),
        (Delta(a), Delta(b)) if a == b => Delta(a),
        (Delta(a), Lambda(b)) | (Lambda(a), Delta(b)) | (Lambda(a), Lambda(b)) if a == b => Lambda(a),
        (Alpha(a), Alpha(b)) if a == b => Alpha(a),
        _ => return,
    };
    out.push(Element { kind, p: x.p.clone(), q: x.q.clone() });
}

pub(crate) fn intersect_rec(cx: &Embedded, x: &Element, y: &Element, out: &mut Vec<Element>) {
    if !compatible(&x.p, &y.p) || !compatible(&x.q, &y.q) {
        return;
    }
    match x.level().cmp(&y.level()) {
        std::cmp::Ordering::Equal => {
            if x.p == y.p && x.q == y.q {
                intersect_same_level(x, y, out)
            }
        }
        std::cmp::Ordering::Less => {
            for c in refine_unchecked(cx, x) {
                intersect_rec(cx, &c, y, out);
            }
        }
        std::cmp::Ordering::Greater => {
            for c in refine_unchecked(cx, y) {
                intersect_rec(cx, x, &c, out);
            }
        }
    }
}

fn check_pair(cx: &Embedded, x: &Element, y: &Element) -> Result<(), GroupoidError> {
    validate(cx, x)?;
    validate(cx, y)?;
    let top = x.level().max(y.level());
    need_depth(cx, top, top + 2)
}

/// `x` followed by `y`, as a pairwise disjoint list.
pub fn compose(cx: &Embedded, x: &Element, y: &Element) -> Result<Vec<Element>, GroupoidError> {
    check_pair(cx, x, y)?;
    let mut out = Vec::new();
    compose_rec(cx, x, y, &mut out);
    Ok(out)
}

/// `x ∩ y`, as a pairwise disjoint list.
pub fn intersect(cx: &Embedded, x: &Element, y: &Element) -> Result<Vec<Element>, GroupoidError> {
    check_pair(cx, x, y)?;
    let mut out = Vec::new();
    intersect_rec(cx, x, y, &mut out);
    Ok(out)
}

/// Source and range as lists of cylinders. For the closed kinds this is the
/// smallest cylinder hull one level down.
pub fn source_range(cx: &Embedded, g: &Element) -> Result<(Vec<Route>, Vec<Route>), GroupoidError> {
    validate(cx, g)?;
    let Some(s) = g.kind.side() else {
        return Ok((vec![g.p.clone()], vec![g.q.clone()]));
    };
    need_depth(cx, g.level(), g.level() + 1)?;
    let n = g.level();
    let target = if matches!(g.kind, Kind::Alpha(_)) { s } else { s.flip() };
    let fs = cx.guest_out(n, cx.host.terminal(&g.p));
    let src = fs.iter().map(|&f| ext(&g.p, &[cx.image(s, n + 1, f)])).collect();
    let rng = fs.iter().map(|&f| ext(&g.q, &[cx.image(target, n + 1, f)])).collect();
    Ok((src, rng))
}

/// Wire format `{"kind", "i", "p", "q"}` with edge labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawElement {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<u8>,
    pub p: Vec<String>,
    pub q: Vec<String>,
}

pub fn to_raw(cx: &Embedded, g: &Element) -> RawElement {
    RawElement {
        kind: g.kind.name().to_string(),
        i: g.kind.side().map(|s| s.index() as u8),
        p: cx.host.route_labels(&g.p),
        q: cx.host.route_labels(&g.q),
    }
}

pub fn from_raw(cx: &Embedded, raw: &RawElement) -> Result<Element, GroupoidError> {
    let side = || match raw.i {
        Some(0) => Ok(Side::Zero),
        Some(1) => Ok(Side::One),
        _ => Err(GroupoidError::UnknownKind(format!("{} without side", raw.kind))),
    };
    let kind = match raw.kind.as_str() {
        "beta" => Kind::Beta,
        "delta" => Kind::Delta(side()?),
        "lambda" => Kind::Lambda(side()?),
        "alpha" => Kind::Alpha(side()?),
        other => return Err(GroupoidError::UnknownKind(other.to_string())),
    };
    let g = Element { kind, p: cx.host.route_from_labels(&raw.p)?, q: cx.host.route_from_labels(&raw.q)? };
    validate(cx, &g)?;
    Ok(g)
}

pub fn list_to_json(cx: &Embedded, list: &[Element]) -> String {
    let raw: Vec<RawElement> = list.iter().map(|g| to_raw(cx, g)).collect();
    serde_json::to_string_pretty(&raw).expect("serializable")
}

pub fn list_from_json(cx: &Embedded, text: &str) -> Result<Vec<Element>, GroupoidError> {
    let raw: Vec<RawElement> = serde_json::from_str(text)?;
    raw.iter().map(|r| from_raw(cx, r)).collect()
}

/// Compact human-readable form such as `delta1[ru0.uu1|ru2.uu0]`.
pub fn display(cx: &Embedded, g: &Element) -> String {
    format!(
        "{}{}[{}|{}]",
        g.kind.name(),
        g.kind.side().map(|s| s.index().to_string()).unwrap_or_default(),
        cx.host.route_labels(&g.p).join("."),
        cx.host.route_labels(&g.q).join(".")
    )
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::fixtures;

    pub(crate) fn host3() -> Embedded {
        Embedded::auto(fixtures::host(3, 7), fixtures::guest_z(7)).unwrap()
    }

    pub(crate) fn host5() -> Embedded {
        Embedded::auto(fixtures::host(5, 7), fixtures::guest_dyadic(7)).unwrap()
    }

    fn r(cx: &Embedded, labels: &[&str]) -> Route {
        cx.host.route_from_labels(labels).unwrap()
    }

    #[test]
    fn inversion() {
        let cx = host3();
        let (p, q) = (r(&cx, &["ru0"]), r(&cx, &["ru1"]));
        let d = Element::delta(Side::One, &p, &q);
        assert_eq!(invert(&d), Element::delta(Side::Zero, &q, &p));
        assert_eq!(invert(&invert(&d)), d);
        let b = Element::beta(&p, &p);
        assert_eq!(invert(&b), b);
    }

    #[test]
    fn validation() {
        let cx = host3();
        let (u, v) = (r(&cx, &["ru0"]), r(&cx, &["rv0"]));
        assert!(validate(&cx, &Element::beta(&u, &u)).is_ok());
        assert!(matches!(validate(&cx, &Element::beta(&u, &v)), Err(GroupoidError::Terminal)));
        assert!(matches!(validate(&cx, &Element::delta(Side::Zero, &v, &v)), Err(GroupoidError::NotGuest)));
        assert!(matches!(validate(&cx, &Element::beta(&u, &[])), Err(GroupoidError::Length(1, 0))));
    }

    #[test]
    fn decomposition_counts() {
        let cx = host3();
        let p = r(&cx, &["ru0"]);
        let d = delta_decompose(&cx, &Element::delta(Side::One, &p, &p)).unwrap();
        assert_eq!((d.a.len(), d.b.len(), d.c.len()), (1, 1, 4));
        let cx = host5();
        let p = r(&cx, &["ru0"]);
        let d = delta_decompose(&cx, &Element::delta(Side::One, &p, &p)).unwrap();
        assert_eq!((d.a.len(), d.b.len(), d.c.len()), (2, 4, 12));
    }

    #[test]
    fn beta_products() {
        let cx = host3();
        let (p, q, s) = (r(&cx, &["ru0"]), r(&cx, &["ru1"]), r(&cx, &["ru2"]));
        assert_eq!(compose(&cx, &Element::beta(&p, &q), &Element::beta(&q, &s)).unwrap(), vec![Element::beta(&p, &s)]);
        assert!(compose(&cx, &Element::beta(&p, &q), &Element::beta(&p, &s)).unwrap().is_empty());
        let b = Element::beta(&p, &q);
        assert_eq!(intersect(&cx, &b, &b).unwrap(), vec![b.clone()]);
        assert!(intersect(&cx, &b, &Element::delta(Side::One, &p, &q)).unwrap().is_empty());
        assert_eq!(beta_refine(&cx, &b).unwrap().len(), 6);
        assert_eq!(beta_refine(&cx, &Element::beta(&[], &[])).unwrap().len(), 6);
    }

    #[test]
    fn delta_products() {
        let cx = host3();
        let (p, q) = (r(&cx, &["ru0"]), r(&cx, &["ru1"]));
        let d = Element::delta(Side::One, &p, &q);
        assert!(compose(&cx, &d, &Element::delta(Side::One, &q, &p)).unwrap().is_empty());
        let back = compose(&cx, &d, &invert(&d)).unwrap();
        let e = cx.image(Side::One, 2, 0);
        assert_eq!(back, vec![Element::beta(&ext(&p, &[e]), &ext(&p, &[e]))]);
        let lam = Element::lambda(Side::Zero, &q, &p);
        assert_eq!(compose(&cx, &d, &lam).unwrap(), vec![Element::alpha(Side::One, &p, &p)]);
    }

    #[test]
    fn mixed_levels_refine_first() {
        let cx = host3();
        let p = r(&cx, &["ru0"]);
        let d = Element::delta(Side::Zero, &p, &p);
        let pieces = refine(&cx, &d).unwrap();
        let mut total = 0;
        for piece in &pieces {
            let got = intersect(&cx, &d, piece).unwrap();
            assert_eq!(got, vec![piece.clone()]);
            total += got.len();
        }
        assert_eq!(total, 6);
    }

    #[test]
    fn json_round_trip() {
        let cx = host5();
        let p = r(&cx, &["ru0", "uu3"]);
        let list = vec![Element::delta(Side::Zero, &p, &p), Element::beta(&p, &p)];
        let text = list_to_json(&cx, &list);
        assert!(text.contains("\"kind\": \"delta\""));
        assert_eq!(list_from_json(&cx, &text).unwrap(), list);
        assert_eq!(display(&cx, &list[0]), "delta0[ru0.uu3|ru0.uu3]");
    }

    #[test]
    fn ranges() {
        let cx = host5();
        let p = r(&cx, &["ru0"]);
        let (s, t) = source_range(&cx, &Element::delta(Side::One, &p, &p)).unwrap();
        assert_eq!((s.len(), t.len()), (2, 2));
        assert_ne!(s, t);
    }
}
