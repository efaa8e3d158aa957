//! Pointwise oracle shared by the integration tests.
//!
//! Points are written out directly as a prefix, an explicit run of guest
//! sides and an end marker, and every element is evaluated from its
//! defining patterns by locating the first edge that breaks the run. Nothing
//! here goes through the refinement calculus.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use smallvec::SmallVec;

use cgk::diagram::Route;
use cgk::embedding::{Embedded, Side};
use cgk::fixtures;
use cgk::groupoid::{Element, Kind, Point, TailEnd};
use cgk::star_algebra::FormalElement;

pub fn host3(depth: usize) -> Embedded {
    Embedded::auto(fixtures::host(3, depth), fixtures::guest_z(depth)).unwrap()
}

pub fn host5(depth: usize) -> Embedded {
    Embedded::auto(fixtures::host(5, depth), fixtures::guest_dyadic(depth)).unwrap()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Plain,
    Forever(Side),
}

/// A point up to the free guest edges of its tail. The run never ends in
/// the side repeated forever, so equal points are equal as values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pt {
    pub prefix: SmallVec<[u16; 8]>,
    pub run: SmallVec<[Side; 6]>,
    pub end: End,
}

impl Pt {
    fn canon(mut self) -> Pt {
        if let End::Forever(s) = self.end {
            while self.run.last() == Some(&s) {
                self.run.pop();
            }
        }
        self
    }

    pub fn same(&self, other: &Pt) -> bool {
        self == other
    }
}

/// Symbol after position `n` of the prefix, counting into the tail.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Guest(Side),
    Plain,
}

fn steps(cx: &Embedded, x: &Pt, n: usize) -> (SmallVec<[Step; 12]>, End) {
    let mut out = SmallVec::new();
    for pos in n..x.prefix.len() {
        out.push(match cx.side_of(pos + 1, x.prefix[pos]) {
            Some((s, _)) => Step::Guest(s),
            None => Step::Plain,
        });
    }
    out.extend(x.run.iter().map(|&s| Step::Guest(s)));
    (out, x.end)
}

fn set_side(cx: &Embedded, y: &mut Pt, k: usize, idx: usize, s: Side) {
    if idx < y.prefix.len() - k {
        let pos = k + idx;
        let (_, f) = cx.side_of(pos + 1, y.prefix[pos]).expect("guest edge");
        y.prefix[pos] = cx.image(s, pos + 1, f);
    } else {
        let j = idx - (y.prefix.len() - k);
        y.run[j] = s;
    }
}

/// Image of `x` under `g` read off the defining patterns.
pub fn eval(cx: &Embedded, g: &Element, x: &Pt) -> Option<Pt> {
    let n = g.level();
    if x.prefix.len() < n || x.prefix[..n] != g.p[..] {
        return None;
    }
    let mut y = x.clone();
    y.prefix[..n].copy_from_slice(&g.q);
    let s = match g.kind {
        Kind::Beta => return Some(y),
        Kind::Delta(s) | Kind::Lambda(s) | Kind::Alpha(s) => s,
    };
    let (seq, end) = steps(cx, x, n);
    let first_break = seq.iter().position(|&t| t != Step::Guest(s));
    let infinite = first_break.is_none() && end == End::Forever(s);
    match g.kind {
        Kind::Alpha(_) => infinite.then_some(y.canon()),
        Kind::Lambda(_) => {
            if !infinite {
                return None;
            }
            for i in 0..seq.len() {
                set_side(cx, &mut y, n, i, s.flip());
            }
            y.end = End::Forever(s.flip());
            Some(y.canon())
        }
        _ => {
            let r = match first_break {
                Some(0) => return None,
                Some(r) => r,
                None => seq.len(),
            };
            if seq.is_empty() && end != End::Forever(s) {
                return None;
            }
            for i in 0..r {
                set_side(cx, &mut y, n, i, s.flip());
            }
            if r < seq.len() {
                if seq[r] != Step::Plain {
                    set_side(cx, &mut y, n, r, s);
                }
            } else if infinite {
                y.end = End::Forever(s.flip());
            } else if end == End::Forever(s.flip()) {
                y.run.push(s);
            }
            Some(y.canon())
        }
    }
}

/// All tails with explicit runs up to length three, without repeats.
pub fn tails() -> Vec<(SmallVec<[Side; 6]>, End)> {
    let mut out = Vec::new();
    let ends = [End::Plain, End::Forever(Side::Zero), End::Forever(Side::One)];
    for len in 0..=3usize {
        for bits in 0..1usize << len {
            let run: SmallVec<[Side; 6]> = (0..len).map(|i| Side::from_index((bits >> i) & 1)).collect();
            for end in ends {
                let pt = Pt { prefix: SmallVec::new(), run: run.clone(), end }.canon();
                out.push((pt.run, pt.end));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Points of `U(p)` with prefixes of length `k`. Tails are spelled out only
/// where some element of level below `k` could read them (the last prefix
/// edge is a guest image) or when `open_top` asks for them on every guest
/// vertex.
pub fn points(cx: &Embedded, p: &[u16], k: usize, open_top: bool) -> Vec<Pt> {
    let all_tails = tails();
    let mut out = Vec::new();
    for x in cx.host.extensions(p, k) {
        let v = cx.host.terminal(&x);
        let on_guest = cx.guest_vertex(k, v).is_some();
        let last_guest = k > 0 && cx.side_of(k, x[k - 1]).is_some();
        let prefix: SmallVec<[u16; 8]> = x.iter().copied().collect();
        if on_guest && (open_top || last_guest) {
            for (run, end) in &all_tails {
                out.push(Pt { prefix: prefix.clone(), run: run.clone(), end: *end });
            }
        } else {
            out.push(Pt { prefix, run: SmallVec::new(), end: End::Plain });
        }
    }
    out
}

fn top_level(items: &[&Element]) -> (usize, bool) {
    let k = items.iter().map(|g| g.level()).max().unwrap_or(0);
    let open = items.iter().any(|g| g.level() == k && g.kind != Kind::Beta);
    (k, open)
}

#[derive(Debug)]
pub struct Mismatch {
    pub at: Pt,
    pub what: &'static str,
}

/// Checks that `list` is pairwise disjoint with union the partial map `f`,
/// whose source lies in `U(root)`. Members inside `U(root)` are fully seen
/// by the first scan; the rest are scanned on their own sources.
fn check_union<F>(cx: &Embedded, root: &[u16], k: usize, open: bool, list: &[Element], f: F) -> Result<(), Mismatch>
where
    F: Fn(&Pt) -> Option<Pt>,
{
    for x in points(cx, root, k, open) {
        let want = f(&x);
        let mut hits = 0;
        for m in list {
            if let Some(y) = eval(cx, m, &x) {
                match &want {
                    Some(z) if z.same(&y) => hits += 1,
                    _ => return Err(Mismatch { at: x, what: "member maps outside the target" }),
                }
            }
        }
        if want.is_some() && hits != 1 {
            return Err(Mismatch { at: x, what: if hits == 0 { "not covered" } else { "covered twice" } });
        }
    }
    for m in list.iter().filter(|m| !m.p.starts_with(root)) {
        for x in points(cx, &m.p, k, open) {
            if let Some(y) = eval(cx, m, &x) {
                if !f(&x).is_some_and(|z| z.same(&y)) {
                    return Err(Mismatch { at: x, what: "member point outside the target" });
                }
            }
        }
    }
    Ok(())
}

/// `list` is a disjoint decomposition of `a` followed by `b`.
pub fn check_compose(cx: &Embedded, a: &Element, b: &Element, list: &[Element]) -> Result<(), Mismatch> {
    let mut all: Vec<&Element> = vec![a, b];
    all.extend(list.iter());
    let (k, open) = top_level(&all);
    check_union(cx, &a.p, k, open, list, |x| eval(cx, a, x).and_then(|y| eval(cx, b, &y)))
}

/// `list` is a disjoint decomposition of `a ∩ b`.
pub fn check_intersect(cx: &Embedded, a: &Element, b: &Element, list: &[Element]) -> Result<(), Mismatch> {
    let mut all: Vec<&Element> = vec![a, b];
    all.extend(list.iter());
    let (k, open) = top_level(&all);
    check_union(cx, &a.p, k, open, list, |x| match (eval(cx, a, x), eval(cx, b, x)) {
        (Some(y), Some(z)) if y.same(&z) => Some(y),
        _ => None,
    })
}

/// `list` is a disjoint decomposition of `g`.
pub fn check_partition(cx: &Embedded, g: &Element, list: &[Element], depth: usize) -> Result<(), Mismatch> {
    let mut all: Vec<&Element> = vec![g];
    all.extend(list.iter());
    let (k, open) = top_level(&all);
    check_union(cx, &g.p, k.max(depth), open || depth > k, list, |x| eval(cx, g, x))
}

pub fn route(cx: &Embedded, labels: &[&str]) -> Route {
    cx.host.route_from_labels(labels).unwrap()
}

/// The oracle's form of a library point.
pub fn to_pt(x: &Point) -> Pt {
    let end = match x.tail.end {
        TailEnd::Plain => End::Plain,
        TailEnd::Repeat(s) => End::Forever(s),
    };
    Pt { prefix: x.prefix.iter().copied().collect(), run: x.tail.sides.iter().copied().collect(), end }.canon()
}

pub fn plain_pt(x: &[u16]) -> Pt {
    Pt { prefix: x.iter().copied().collect(), run: SmallVec::new(), end: End::Plain }
}

/// Row of a combination of indicators at `x`: image point to coefficient.
pub fn row(cx: &Embedded, f: &FormalElement, x: &Pt) -> BTreeMap<Pt, BigRational> {
    let mut out: BTreeMap<Pt, BigRational> = BTreeMap::new();
    for (g, c) in f.terms() {
        if let Some(y) = eval(cx, g, x) {
            *out.entry(y).or_insert_with(BigRational::zero) += c;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Row of the convolution `f g` at `x`, with `f` applied first.
pub fn product_row(cx: &Embedded, f: &FormalElement, g: &FormalElement, x: &Pt) -> BTreeMap<Pt, BigRational> {
    let mut out: BTreeMap<Pt, BigRational> = BTreeMap::new();
    for (y, a) in row(cx, f, x) {
        for (z, b) in row(cx, g, &y) {
            *out.entry(z).or_insert_with(BigRational::zero) += &a * &b;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// First point of `U(root)` at which `f g` and `g f` have different rows.
pub fn commutator_witness(cx: &Embedded, f: &FormalElement, g: &FormalElement, root: &[u16], k: usize) -> Option<Pt> {
    points(cx, root, k, true)
        .into_iter()
        .find(|x| product_row(cx, f, g, x) != product_row(cx, g, f, x))
}
