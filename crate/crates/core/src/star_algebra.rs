//! The *-algebra spanned by indicator functions of basis elements.
//!
//! Symbols are indicators of elements: `b` of `Beta`, `d^{i,1-i}` of
//! `Delta(i)`, `a^{i,1-i}` of `Lambda(i)` and `a^{i,i}` of `Alpha(i)`. Each
//! element is the graph of a partial bijection, and the product of two such
//! indicators is the indicator of the composite, so products run through
//! the groupoid calculus.
//!
//! Equality is decided on a reduced form in which terms are refined until no
//! two terms of different level overlap. Terms at one level and one pair of
//! prefixes are then linearly independent and all other pairs of terms are
//! disjoint, so a reduced sum vanishes exactly when it has no terms.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{Diagram, Route};
use crate::embedding::{Embedded, Side};
use crate::groupoid::{self, basis, compatible, compose_rec, guest_pairs, intersect_rec, refine_unchecked, Element, GroupoidError, Kind};
use crate::measure::{LevelWeights, Value};
use crate::par::{self, Exec};

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error(transparent)]
    Groupoid(#[from] GroupoidError),
    #[error("level {need} is beyond the diagram depth {depth}")]
    Depth { need: usize, depth: usize },
    #[error("parameters out of range: {0}")]
    Range(String),
    #[error("path does not end on the guest image")]
    NotGuest,
    #[error("cannot parse symbol {0:?}")]
    Symbol(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn need_depth(cx: &Embedded, need: usize) -> Result<(), AlgebraError> {
    if need > cx.depth() {
        return Err(AlgebraError::Depth { need, depth: cx.depth() });
    }
    Ok(())
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Finite rational combination of symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FormalElement {
    terms: BTreeMap<Element, BigRational>,
}

impl FormalElement {
    pub fn zero() -> FormalElement {
        FormalElement::default()
    }

    pub fn symbol(g: Element) -> FormalElement {
        FormalElement::from_terms([(g, BigRational::one())])
    }

    /// Indicator of the diagonal of the whole space.
    pub fn unit() -> FormalElement {
        FormalElement::symbol(Element::beta(&[], &[]))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Element, BigRational)>) -> FormalElement {
        let mut f = FormalElement::zero();
        for (g, c) in terms {
            f.add_term(g, c);
        }
        f
    }

    pub fn add_term(&mut self, g: Element, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(g) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Element, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, g: &Element) -> BigRational {
        self.terms.get(g).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn max_level(&self) -> usize {
        self.terms.keys().map(Element::level).max().unwrap_or(0)
    }

    pub fn scaled(&self, k: &BigRational) -> FormalElement {
        FormalElement::from_terms(self.terms.iter().map(|(g, c)| (g.clone(), c * k)))
    }

    /// `f*`, sending every symbol to the indicator of the inverse.
    pub fn adjoint(&self) -> FormalElement {
        FormalElement::from_terms(self.terms.iter().map(|(g, c)| (g.inverse(), c.clone())))
    }

    /// Whether every term is a `b` symbol.
    pub fn only_b(&self) -> bool {
        self.terms.keys().all(|g| g.kind == Kind::Beta)
    }

    /// Whether every term is an `a` symbol.
    pub fn only_a(&self) -> bool {
        self.terms.keys().all(|g| matches!(g.kind, Kind::Lambda(_) | Kind::Alpha(_)))
    }
}

impl Add for &FormalElement {
    type Output = FormalElement;
    fn add(self, other: &FormalElement) -> FormalElement {
        let mut out = self.clone();
        for (g, c) in other.terms() {
            out.add_term(g.clone(), c.clone());
        }
        out
    }
}

impl Sub for &FormalElement {
    type Output = FormalElement;
    fn sub(self, other: &FormalElement) -> FormalElement {
        self + &(-other)
    }
}

impl Neg for &FormalElement {
    type Output = FormalElement;
    fn neg(self) -> FormalElement {
        FormalElement::from_terms(self.terms.iter().map(|(g, c)| (g.clone(), -c)))
    }
}

/// Symbol name: `b`, `d10`, `d01`, `a10`, `a01`, `a00` or `a11`.
pub fn symbol_name(kind: Kind) -> String {
    let bits = |a: Side, b: Side| format!("{}{}", a.index(), b.index());
    match kind {
        Kind::Beta => "b".to_string(),
        Kind::Delta(s) => format!("d{}", bits(s, s.flip())),
        Kind::Lambda(s) => format!("a{}", bits(s, s.flip())),
        Kind::Alpha(s) => format!("a{}", bits(s, s)),
    }
}

fn kind_from_name(name: &str) -> Option<Kind> {
    let side = |c: u8| match c {
        b'0' => Some(Side::Zero),
        b'1' => Some(Side::One),
        _ => None,
    };
    let b = name.as_bytes();
    match (b.first(), b.len()) {
        (Some(b'b'), 1) => Some(Kind::Beta),
        (Some(&c), 3) if c == b'd' || c == b'a' => {
            let (s, t) = (side(b[1])?, side(b[2])?);
            match (c, s == t) {
                (b'd', false) => Some(Kind::Delta(s)),
                (b'a', false) => Some(Kind::Lambda(s)),
                (b'a', true) => Some(Kind::Alpha(s)),
                _ => None,
            }
        }
        _ => None,
    }
}

/// Symbol text such as `d10[ru0.uu3|ru0.uu1]`.
pub fn symbol_text(cx: &Embedded, g: &Element) -> String {
    format!(
        "{}[{}|{}]",
        symbol_name(g.kind),
        cx.host.route_labels(&g.p).join("."),
        cx.host.route_labels(&g.q).join(".")
    )
}

pub fn parse_symbol(cx: &Embedded, text: &str) -> Result<Element, AlgebraError> {
    let bad = || AlgebraError::Symbol(text.to_string());
    let (name, rest) = text.split_once('[').ok_or_else(bad)?;
    let body = rest.strip_suffix(']').ok_or_else(bad)?;
    let (p, q) = body.split_once('|').ok_or_else(bad)?;
    let kind = kind_from_name(name).ok_or_else(bad)?;
    let route = |s: &str| -> Result<Route, AlgebraError> {
        let labels: Vec<&str> = if s.is_empty() { Vec::new() } else { s.split('.').collect() };
        Ok(cx.host.route_from_labels(&labels).map_err(GroupoidError::from)?)
    };
    let g = Element { kind, p: route(p)?, q: route(q)? };
    groupoid::validate(cx, &g)?;
    Ok(g)
}

/// Wire format of one term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTerm {
    pub symbol: String,
    pub numerator: String,
    pub denominator: String,
}

pub fn to_json(cx: &Embedded, f: &FormalElement) -> String {
    let raw: Vec<RawTerm> = f
        .terms()
        .map(|(g, c)| RawTerm { symbol: symbol_text(cx, g), numerator: c.numer().to_string(), denominator: c.denom().to_string() })
        .collect();
    serde_json::to_string_pretty(&raw).expect("serializable")
}

pub fn from_json(cx: &Embedded, text: &str) -> Result<FormalElement, AlgebraError> {
    let raw: Vec<RawTerm> = serde_json::from_str(text)?;
    let mut f = FormalElement::zero();
    for t in raw {
        let parse = |s: &str| s.parse::<BigInt>().map_err(|_| AlgebraError::Symbol(s.to_string()));
        let (n, d) = (parse(&t.numerator)?, parse(&t.denominator)?);
        if d.is_zero() {
            return Err(AlgebraError::Symbol(t.denominator));
        }
        f.add_term(parse_symbol(cx, &t.symbol)?, BigRational::new(n, d));
    }
    Ok(f)
}

pub fn render(cx: &Embedded, f: &FormalElement) -> String {
    if f.is_empty() {
        return "0".to_string();
    }
    f.terms()
        .map(|(g, c)| if c.is_one() { symbol_text(cx, g) } else { format!("({c}){}", symbol_text(cx, g)) })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Terms indexed by both prefixes, for repeated products against one side.
pub struct Prepared {
    terms: Vec<(Element, BigRational)>,
    by_p: BTreeMap<Route, Vec<usize>>,
    by_q: BTreeMap<Route, Vec<usize>>,
}

impl Prepared {
    pub fn new(f: &FormalElement) -> Prepared {
        let terms: Vec<(Element, BigRational)> = f.terms().map(|(g, c)| (g.clone(), c.clone())).collect();
        let mut by_p: BTreeMap<Route, Vec<usize>> = BTreeMap::new();
        let mut by_q: BTreeMap<Route, Vec<usize>> = BTreeMap::new();
        for (i, (g, _)) in terms.iter().enumerate() {
            by_p.entry(g.p.clone()).or_default().push(i);
            by_q.entry(g.q.clone()).or_default().push(i);
        }
        Prepared { terms, by_p, by_q }
    }

    pub fn max_level(&self) -> usize {
        self.terms.iter().map(|(g, _)| g.level()).max().unwrap_or(0)
    }

    /// Indices of terms whose key is a prefix or an extension of `r`.
    fn near(index: &BTreeMap<Route, Vec<usize>>, r: &[u16]) -> Vec<usize> {
        let mut out = Vec::new();
        for k in 0..=r.len() {
            if let Some(v) = index.get(&r[..k]) {
                out.extend_from_slice(v);
            }
        }
        let start = Route::from_slice(r);
        for (key, v) in index.range(start..) {
            if !key.starts_with(r) {
                break;
            }
            if key.len() > r.len() {
                out.extend_from_slice(v);
            }
        }
        out
    }
}

fn collect(pieces: Vec<Vec<(Element, BigRational)>>) -> FormalElement {
    FormalElement::from_terms(pieces.into_iter().flatten())
}

/// `f · g` with `g` prepared.
pub fn multiply_right(cx: &Embedded, f: &FormalElement, g: &Prepared) -> Result<FormalElement, AlgebraError> {
    need_depth(cx, f.max_level().max(g.max_level()) + 2)?;
    let left: Vec<(&Element, &BigRational)> = f.terms().collect();
    let pieces = left
        .iter()
        .map(|(a, ca)| {
            let mut acc = Vec::new();
            for i in Prepared::near(&g.by_p, &a.q) {
                let (b, cb) = &g.terms[i];
                let mut out = Vec::new();
                compose_rec(cx, a, b, &mut out);
                let c = *ca * cb;
                acc.extend(out.into_iter().map(|e| (e, c.clone())));
            }
            acc
        })
        .collect();
    Ok(collect(pieces))
}

/// `f · g` with `f` prepared.
pub fn multiply_left(cx: &Embedded, f: &Prepared, g: &FormalElement) -> Result<FormalElement, AlgebraError> {
    need_depth(cx, f.max_level().max(g.max_level()) + 2)?;
    let mut acc = Vec::new();
    for (b, cb) in g.terms() {
        let mut idx = Prepared::near(&f.by_q, &b.p);
        idx.sort_unstable();
        for i in idx {
            let (a, ca) = &f.terms[i];
            let mut out = Vec::new();
            compose_rec(cx, a, b, &mut out);
            let c = ca * cb;
            acc.extend(out.into_iter().map(|e| (e, c.clone())));
        }
    }
    Ok(FormalElement::from_terms(acc))
}

/// Convolution product. Bilinear; on symbols the indicator of the
/// composite with the left factor applied first.
pub fn multiply(cx: &Embedded, f: &FormalElement, g: &FormalElement) -> Result<FormalElement, AlgebraError> {
    if f.len() <= g.len() {
        multiply_right(cx, f, &Prepared::new(g))
    } else {
        multiply_left(cx, &Prepared::new(f), g)
    }
}

fn meets(cx: &Embedded, a: &Element, b: &Element) -> bool {
    let mut out = Vec::new();
    intersect_rec(cx, a, b, &mut out);
    !out.is_empty()
}

/// Reduced form: the same function with no overlap between terms of
/// different level.
pub fn reduce(cx: &Embedded, f: &FormalElement) -> Result<FormalElement, AlgebraError> {
    let mut cur = f.clone();
    loop {
        need_depth(cx, cur.max_level() + 2)?;
        let mut items: Vec<(&Element, &BigRational)> = cur.terms().collect();
        items.sort_by(|x, y| x.0.p.cmp(&y.0.p));
        let split: Vec<bool> = items
            .iter()
            .map(|(t, _)| {
                let start = items.partition_point(|x| x.0.p < t.p);
                items[start..]
                    .iter()
                    .take_while(|(u, _)| u.p.starts_with(&t.p))
                    .any(|(u, _)| u.level() > t.level() && compatible(&t.q, &u.q) && meets(cx, t, u))
            })
            .collect();
        if !split.iter().any(|&s| s) {
            return Ok(cur);
        }
        let mut next = FormalElement::zero();
        for ((t, c), s) in items.iter().zip(&split) {
            if *s {
                for piece in refine_unchecked(cx, t) {
                    next.add_term(piece, (*c).clone());
                }
            } else {
                next.add_term((*t).clone(), (*c).clone());
            }
        }
        cur = next;
    }
}

pub fn is_zero(cx: &Embedded, f: &FormalElement) -> Result<bool, AlgebraError> {
    Ok(reduce(cx, f)?.is_empty())
}

/// Equality as functions on the relation.
pub fn equal(cx: &Embedded, f: &FormalElement, g: &FormalElement) -> Result<bool, AlgebraError> {
    is_zero(cx, &(f - g))
}

/// `f = f* = f²`.
pub fn is_projection(cx: &Embedded, f: &FormalElement) -> Result<bool, AlgebraError> {
    Ok(equal(cx, f, &f.adjoint())? && equal(cx, f, &multiply(cx, f, f)?)?)
}

/// Whether `f` is a combination of `b` symbols of level at most `n`.
pub fn bn_membership(cx: &Embedded, f: &FormalElement, n: usize) -> Result<bool, AlgebraError> {
    let r = reduce(cx, f)?;
    if !r.only_b() {
        return Ok(false);
    }
    let mut groups: BTreeMap<(Route, Route), Vec<(&Element, &BigRational)>> = BTreeMap::new();
    for (g, c) in r.terms().filter(|(g, _)| g.level() > n) {
        groups.entry((Route::from_slice(&g.p[..n]), Route::from_slice(&g.q[..n]))).or_default().push((g, c));
    }
    for ((p0, _), members) in groups {
        let top = members.iter().map(|(g, _)| g.level()).max().unwrap_or(n);
        let mut values: BTreeMap<Route, BigRational> = BTreeMap::new();
        for (g, c) in members {
            if g.p[n..] != g.q[n..] {
                return Ok(false);
            }
            for x in cx.host.extensions(&g.p, top) {
                *values.entry(x).or_insert_with(BigRational::zero) += c;
            }
        }
        let expected = cx.host.extensions(&p0, top).len();
        let first = values.values().next().cloned();
        if values.len() != expected || values.values().any(|v| Some(v) != first.as_ref()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Refines an `a` symbol of level `n` to level `m`.
pub fn a_refine(cx: &Embedded, g: &Element, m: usize) -> Result<FormalElement, AlgebraError> {
    if !matches!(g.kind, Kind::Lambda(_) | Kind::Alpha(_)) {
        return Err(AlgebraError::Range(format!("{} is not an a symbol", symbol_name(g.kind))));
    }
    if m <= g.level() {
        return Err(AlgebraError::Range(format!("target level {m} is not above {}", g.level())));
    }
    groupoid::validate(cx, g)?;
    need_depth(cx, m)?;
    let mut cur = vec![g.clone()];
    for _ in g.level()..m {
        cur = cur.iter().flat_map(|h| refine_unchecked(cx, h)).collect();
    }
    Ok(FormalElement::from_terms(cur.into_iter().map(|h| (h, BigRational::one()))))
}

/// The finite-dimensional layer `B_n`: one full matrix block per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlgebraLevel {
    pub level: usize,
    pub blocks: Vec<(String, u128)>,
}

impl AlgebraLevel {
    pub fn dim(&self) -> u128 {
        self.blocks.iter().map(|(_, k)| k * k).sum()
    }
}

pub fn algebra_level(d: &Diagram, n: usize) -> AlgebraLevel {
    let counts = d.path_counts(n);
    let blocks = counts.iter().enumerate().map(|(v, &k)| (d.vertex_name(n, v).to_string(), k)).collect();
    AlgebraLevel { level: n, blocks }
}

impl fmt::Display for AlgebraLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|(v, k)| format!("{v}:{k}")).collect();
        write!(f, "B_{} = {} (dim {})", self.level, parts.join(" "), self.dim())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixUnitReport {
    pub level: usize,
    pub products: usize,
    pub failures: Vec<String>,
}

impl MatrixUnitReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `b_{p,q} b_{q',r} = [q = q'] b_{p,r}` with `q, q'` over every path
/// to a vertex and `p, r` over the first `outer` of them.
pub fn matrix_units_check(cx: &Embedded, n: usize, outer: usize, exec: Exec) -> Result<MatrixUnitReport, AlgebraError> {
    need_depth(cx, n + 2)?;
    let mut rows = Vec::new();
    for v in 0..cx.host.vertex_count(n) {
        let paths = cx.host.routes_to(n, v);
        let ends: Vec<Route> = paths.iter().take(outer).cloned().collect();
        for p in &ends {
            for q in &paths {
                rows.push((p.clone(), q.clone(), ends.clone(), paths.clone()));
            }
        }
    }
    let results = par::map(exec, &rows, |(p, q, ends, paths)| {
        let left = FormalElement::symbol(Element::beta(p, q));
        let mut fails = Vec::new();
        let mut count = 0;
        for q2 in paths {
            for r in ends {
                let prod = multiply(cx, &left, &FormalElement::symbol(Element::beta(q2, r)));
                let want = if q == q2 { FormalElement::symbol(Element::beta(p, r)) } else { FormalElement::zero() };
                count += 1;
                match prod.and_then(|x| equal(cx, &x, &want)) {
                    Ok(true) => {}
                    _ => fails.push(format!("b[{p:?}|{q:?}] b[{q2:?}|{r:?}]")),
                }
            }
        }
        (count, fails)
    });
    let mut report = MatrixUnitReport { level: n, products: 0, failures: Vec::new() };
    for (c, f) in results {
        report.products += c;
        report.failures.extend(f);
    }
    Ok(report)
}

/// Paths of length `l` whose edges past `n0` are the side-`s` image of a
/// guest path, for both sides.
pub fn q_sets(cx: &Embedded, n0: usize, l: usize) -> [Vec<Route>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for r in cx.host.routes(n0) {
        let Some(w) = cx.guest_vertex(n0, cx.host.terminal(&r)) else { continue };
        let mut segs: Vec<(usize, Vec<u16>)> = vec![(w, Vec::new())];
        for level in n0 + 1..=l {
            segs = segs
                .iter()
                .flat_map(|(v, seg)| {
                    cx.guest.out_edges(level - 1, *v).iter().map(move |&f| {
                        let mut s = seg.clone();
                        s.push(f);
                        (cx.guest.edge(level, f).to, s)
                    })
                })
                .collect();
        }
        for s in Side::BOTH {
            for (_, seg) in &segs {
                let mut q = r.clone();
                q.extend(seg.iter().enumerate().map(|(k, &f)| cx.image(s, n0 + 1 + k, f)));
                out[s.index()].push(q);
            }
        }
    }
    out
}

fn check_range(cx: &Embedded, n0: usize, l: usize) -> Result<(), AlgebraError> {
    if n0 < 1 || l <= n0 {
        return Err(AlgebraError::Range(format!("need 1 <= n0 < l, got n0 = {n0}, l = {l}")));
    }
    need_depth(cx, l + 3)
}

/// The diagonal projection onto paths whose segment past `n0` is a full
/// image of a guest path, on either side.
pub fn build_ebar(cx: &Embedded, l: usize, n0: usize) -> Result<FormalElement, AlgebraError> {
    check_range(cx, n0, l)?;
    let [q0, q1] = q_sets(cx, n0, l);
    Ok(FormalElement::from_terms(q0.iter().chain(&q1).map(|q| (Element::beta(q, q), BigRational::one()))))
}

/// `τ(f) = ∫ f(x, x) dμ`. Only diagonal `b` symbols contribute: the other
/// symbols vanish on the diagonal or meet it in a null set.
pub fn trace(cx: &Embedded, f: &FormalElement, w: &LevelWeights) -> Result<Value, AlgebraError> {
    let mut total = Value::zero_like(w.is_exact());
    for (g, c) in f.terms() {
        if g.kind == Kind::Beta && g.p == g.q {
            if g.level() > w.depth() {
                return Err(AlgebraError::Depth { need: g.level(), depth: w.depth() });
            }
            total = total.add(&w.weight(g.level(), cx.host.terminal(&g.p)).scale(c));
        }
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct TraceBound {
    pub n0: usize,
    pub l: usize,
    pub value: Value,
    pub bound: BigRational,
    pub pass: bool,
}

/// `τ(ē_l)` against `2^{1+n0-l}`.
pub fn trace_bound_check(cx: &Embedded, l: usize, n0: usize, w: &LevelWeights) -> Result<TraceBound, AlgebraError> {
    let e = build_ebar(cx, l, n0)?;
    let value = trace(cx, &e, w)?;
    let bound = BigRational::new(BigInt::from(2), BigInt::from(2).pow((l - n0) as u32));
    let pass = value.at_most(&bound, w.tol);
    Ok(TraceBound { n0, l, value, bound, pass })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LevelTally {
    pub level: usize,
    pub generators: usize,
    pub commute_failures: usize,
    pub membership_failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Block {
    pub vertex: String,
    pub size: u128,
    pub compressed: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct TafReport {
    pub n0: usize,
    pub l: usize,
    pub ebar_terms: usize,
    pub projection: bool,
    pub tallies: Vec<LevelTally>,
    pub examples: Vec<String>,
    pub blocks: Vec<Block>,
}

impl TafReport {
    pub fn pass(&self) -> bool {
        self.projection && self.tallies.iter().all(|t| t.commute_failures == 0 && t.membership_failures == 0)
    }
}

/// For every generator `g` of level at most `n0`: `ē g = g ē`, and
/// `(1 - ē) g (1 - ē)` lies in `B_l`. Also reports the blocks of the
/// compressed layer `(1 - ē) B_l (1 - ē)`.
pub fn taf_check(cx: &Embedded, n0: usize, l: usize, exec: Exec) -> Result<TafReport, AlgebraError> {
    let e = build_ebar(cx, l, n0)?;
    let projection = is_projection(cx, &e)?;
    let prepared = Prepared::new(&e);
    let mut tallies = Vec::new();
    let mut examples = Vec::new();
    for n in 1..=n0 {
        let gens = basis(cx, n);
        let rows = par::map(exec, &gens, |g| -> Result<(bool, bool), AlgebraError> {
            let gf = FormalElement::symbol(g.clone());
            let eg = multiply_left(cx, &prepared, &gf)?;
            let ge = multiply_right(cx, &gf, &prepared)?;
            let commute = equal(cx, &eg, &ge)?;
            let ege = multiply_right(cx, &eg, &prepared)?;
            let h = &(&(&gf - &eg) - &ge) + &ege;
            Ok((commute, bn_membership(cx, &h, l)?))
        });
        let mut t = LevelTally { level: n, generators: gens.len(), ..LevelTally::default() };
        for (g, r) in gens.iter().zip(rows) {
            let (commute, member) = r?;
            if !commute {
                t.commute_failures += 1;
            }
            if !member {
                t.membership_failures += 1;
            }
            if (!commute || !member) && examples.len() < 4 {
                examples.push(format!(
                    "{}: {}{}",
                    symbol_text(cx, g),
                    if commute { "" } else { "does not commute with ebar" },
                    if member { "" } else { " compression not in B_l" }
                ));
            }
        }
        tallies.push(t);
    }
    let [q0, q1] = q_sets(cx, n0, l);
    let counts = cx.host.path_counts(l);
    let mut removed = vec![0u128; counts.len()];
    for q in q0.iter().chain(&q1) {
        removed[cx.host.terminal(q)] += 1;
    }
    let blocks = counts
        .iter()
        .enumerate()
        .map(|(v, &k)| Block { vertex: cx.host.vertex_name(l, v).to_string(), size: k, compressed: k - removed[v] })
        .collect();
    Ok(TafReport { n0, l, ebar_terms: e.len(), projection, tallies, examples, blocks })
}

/// Host routes of length `k` ending on the guest image.
fn guest_routes_at(cx: &Embedded, k: usize) -> Vec<Route> {
    cx.host.routes(k).into_iter().filter(|r| cx.guest_vertex(k, cx.host.terminal(r)).is_some()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct K15Cell {
    pub part: u8,
    pub i: Option<u8>,
    pub j: u8,
    pub hits: usize,
    pub zeros: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct K15Report {
    pub level: usize,
    pub cells: Vec<K15Cell>,
    pub examples: Vec<String>,
}

impl K15Report {
    pub fn pass(&self) -> bool {
        self.cells.iter().all(|c| c.failures == 0 && c.zeros > 0 && (c.hits > 0 || !c.can_hit()))
    }

    /// Distinct (part, i, j, outcome) combinations seen.
    pub fn branches(&self) -> usize {
        self.cells.iter().map(|c| usize::from(c.hits > 0) + usize::from(c.zeros > 0)).sum()
    }
}

impl K15Cell {
    /// Whether the table has a nonzero entry in this cell.
    pub fn can_hit(&self) -> bool {
        match (self.part, self.i) {
            (1, Some(i)) => i != self.j,
            (2, Some(i)) => i == self.j,
            _ => true,
        }
    }
}

/// Products of a diagonal `a^{j,j}_{q,q}` with `d` and `b` symbols at level
/// `m`, on both sides, against the closed-form table. Pairs are taken with
/// the given stride; `q` runs over every guest-ending path, or over `p`,
/// `p'` and the first `q_limit` paths to their vertex.
pub fn k15_table(cx: &Embedded, m: usize, stride: usize, q_limit: Option<usize>) -> Result<K15Report, AlgebraError> {
    if m < 1 {
        return Err(AlgebraError::Range("level must be at least 1".into()));
    }
    need_depth(cx, m + 2)?;
    let all_q = guest_routes_at(cx, m);
    let qs_for = |p: &Route, p2: &Route| -> Vec<Route> {
        match q_limit {
            None => all_q.clone(),
            Some(k) => {
                let v = cx.host.terminal(p);
                let mut set: BTreeSet<Route> = [p.clone(), p2.clone()].into_iter().collect();
                set.extend(all_q.iter().filter(|q| cx.host.terminal(q) == v).take(k).cloned());
                set.into_iter().collect()
            }
        }
    };
    let mut cells: BTreeMap<(u8, Option<u8>, u8), K15Cell> = BTreeMap::new();
    let mut examples = Vec::new();
    let mut record = |part: u8, i: Option<u8>, j: u8, hit: bool, ok: bool, what: String| {
        let c = cells.entry((part, i, j)).or_insert(K15Cell { part, i, j, hits: 0, zeros: 0, failures: 0 });
        if hit {
            c.hits += 1;
        } else {
            c.zeros += 1;
        }
        if !ok {
            c.failures += 1;
            if examples.len() < 4 {
                examples.push(what);
            }
        }
    };
    let sym = FormalElement::symbol;
    let check = |x: &FormalElement, y: &FormalElement, want: &FormalElement| -> Result<bool, AlgebraError> {
        equal(cx, &multiply(cx, x, y)?, want)
    };
    for (p, p2) in guest_pairs(cx, m).into_iter().step_by(stride.max(1)) {
        for q in qs_for(&p, &p2) {
            for i in Side::BOTH {
                for j in Side::BOTH {
                    let d = sym(Element::delta(i, &p, &p2));
                    let a = sym(Element::alpha(j, &q, &q));
                    let lam = sym(Element::lambda(i, &p, &p2));
                    let hit1 = i.flip() == j && p2 == q;
                    let want = if hit1 { lam.clone() } else { FormalElement::zero() };
                    let ok = check(&d, &a, &want)?;
                    record(1, Some(i.index() as u8), j.index() as u8, hit1, ok, format!("d a at {}", symbol_text(cx, &Element::delta(i, &p, &p2))));
                    let hit2 = i == j && p == q;
                    let want = if hit2 { lam } else { FormalElement::zero() };
                    let ok = check(&a, &d, &want)?;
                    record(2, Some(i.index() as u8), j.index() as u8, hit2, ok, format!("a d at {}", symbol_text(cx, &Element::delta(i, &p, &p2))));
                }
            }
        }
    }
    for (p, p2) in groupoid::level_pairs(cx, m).into_iter().step_by(stride.max(1)) {
        for q in qs_for(&p, &p2) {
            for j in Side::BOTH {
                let b = sym(Element::beta(&p, &p2));
                let a = sym(Element::alpha(j, &q, &q));
                let al = || sym(Element::alpha(j, &p, &p2));
                let hit3 = p2 == q;
                let ok = check(&b, &a, &if hit3 { al() } else { FormalElement::zero() })?;
                record(3, None, j.index() as u8, hit3, ok, format!("b a at b[{p:?}|{p2:?}]"));
                let hit4 = p == q;
                let ok = check(&a, &b, &if hit4 { al() } else { FormalElement::zero() })?;
                record(4, None, j.index() as u8, hit4, ok, format!("a b at b[{p:?}|{p2:?}]"));
            }
        }
    }
    Ok(K15Report { level: m, cells: cells.into_values().collect(), examples })
}

/// `e_m`: both diagonal `a` symbols over every guest-ending path of length `m`.
pub fn build_em(cx: &Embedded, m: usize) -> FormalElement {
    let mut e = FormalElement::zero();
    for q in guest_routes_at(cx, m) {
        for s in Side::BOTH {
            e.add_term(Element::alpha(s, &q, &q), BigRational::one());
        }
    }
    e
}

#[derive(Clone, Debug, Serialize)]
pub struct K18Report {
    pub n: usize,
    pub m: usize,
    pub em_terms: usize,
    pub em_projection: bool,
    pub commuting_pairs: usize,
    pub commuting_failures: usize,
    pub split_paths: usize,
    /// Paths where `d^{1,0}_{p,p} e_m` differs from `e_m d^{1,0}_{p,p}`.
    pub split_commute_failures: usize,
    /// Paths where either product fails to split as `a^{1,0}_{p,p} + c`.
    pub split_failures: usize,
    pub nonzero_remainders: usize,
    pub examples: Vec<String>,
}

impl K18Report {
    pub fn pass(&self) -> bool {
        self.em_projection && self.commuting_failures == 0 && self.split_commute_failures == 0 && self.split_failures == 0
    }
}

/// Whether `x = a + c` with `c` a partial isometry in the `a` span,
/// `c* a = 0` and `a c* = 0`. Returns `None` when it does not split.
fn split_off(cx: &Embedded, x: &FormalElement, a: &FormalElement) -> Result<Option<FormalElement>, AlgebraError> {
    let c = reduce(cx, &(x - a))?;
    let cs = c.adjoint();
    let ok = c.only_a()
        && is_zero(cx, &multiply(cx, &cs, a)?)?
        && is_zero(cx, &multiply(cx, a, &cs)?)?
        && equal(cx, &multiply(cx, &multiply(cx, &c, &cs)?, &c)?, &c)?;
    Ok(ok.then_some(c))
}

/// For `n < m`: `b_{p,q} e_m = e_m b_{p,q}` in the `a` span; both
/// `d^{1,0}_{p,p} e_m` and `e_m d^{1,0}_{p,p}` split as `a^{1,0}_{p,p} + c`
/// with `c` a partial isometry in the `a` span, `c* a^{1,0}_{p,p} = 0` and
/// `a^{1,0}_{p,p} c* = 0`; and whether the two products agree.
pub fn k18_check(cx: &Embedded, n: usize, m: usize, exec: Exec) -> Result<K18Report, AlgebraError> {
    if n < 1 || m <= n {
        return Err(AlgebraError::Range(format!("need 1 <= n < m, got n = {n}, m = {m}")));
    }
    need_depth(cx, m + 2)?;
    let e = build_em(cx, m);
    let em_projection = is_projection(cx, &e)?;
    let prepared = Prepared::new(&e);
    let pairs = guest_pairs(cx, n);
    let rows = par::map(exec, &pairs, |(p, q)| -> Result<bool, AlgebraError> {
        let b = FormalElement::symbol(Element::beta(p, q));
        let x = multiply_right(cx, &b, &prepared)?;
        let y = multiply_left(cx, &prepared, &b)?;
        Ok(equal(cx, &x, &y)? && reduce(cx, &x)?.only_a())
    });
    let mut examples = Vec::new();
    let mut commuting_failures = 0;
    for ((p, q), r) in pairs.iter().zip(rows) {
        if !r? {
            commuting_failures += 1;
            if examples.len() < 4 {
                examples.push(format!("b e_m != e_m b at {}", symbol_text(cx, &Element::beta(p, q))));
            }
        }
    }
    let paths = guest_routes_at(cx, n);
    let rows = par::map(exec, &paths, |p| -> Result<(bool, bool, bool), AlgebraError> {
        let d = FormalElement::symbol(Element::delta(Side::One, p, p));
        let a = FormalElement::symbol(Element::lambda(Side::One, p, p));
        let x = multiply_right(cx, &d, &prepared)?;
        let y = multiply_left(cx, &prepared, &d)?;
        let (cx_, cy) = (split_off(cx, &x, &a)?, split_off(cx, &y, &a)?);
        let nonzero = cx_.as_ref().is_some_and(|c| !c.is_empty());
        Ok((equal(cx, &x, &y)?, cx_.is_some() && cy.is_some(), nonzero))
    });
    let (mut split_commute_failures, mut split_failures, mut nonzero_remainders) = (0, 0, 0);
    for (p, r) in paths.iter().zip(rows) {
        let (commute, split, nonzero) = r?;
        let name = symbol_text(cx, &Element::delta(Side::One, p, p));
        if !commute {
            split_commute_failures += 1;
            if examples.len() < 4 {
                examples.push(format!("d e_m != e_m d at {name}"));
            }
        }
        if !split {
            split_failures += 1;
            if examples.len() < 4 {
                examples.push(format!("no split at {name}"));
            }
        }
        nonzero_remainders += usize::from(nonzero);
    }
    Ok(K18Report {
        n,
        m,
        em_terms: e.len(),
        em_projection,
        commuting_pairs: pairs.len(),
        commuting_failures,
        split_paths: paths.len(),
        split_commute_failures,
        split_failures,
        nonzero_remainders,
        examples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VpReport {
    pub path: String,
    pub terms: usize,
    pub source_is_range: bool,
    pub source_matches: bool,
    pub below: bool,
    pub unitary: bool,
}

impl VpReport {
    pub fn pass(&self) -> bool {
        self.source_is_range && self.source_matches && self.below && self.unitary
    }
}

/// `v_p = (Σ_f b_{pξ⁰(f), pξ¹(f)}) d^{1,0}_{p,p}` with its checks:
/// `v*v = vv* = Σ_f b_{pξ⁰(f), pξ⁰(f)} ≤ b_{p,p}` and `v + 1 - v*v` unitary.
pub fn build_vp(cx: &Embedded, p: &[u16]) -> Result<(FormalElement, VpReport), AlgebraError> {
    let n = p.len();
    if !cx.host.is_route(p) {
        return Err(GroupoidError::BadPath.into());
    }
    if cx.guest_vertex(n, cx.host.terminal(p)).is_none() {
        return Err(AlgebraError::NotGuest);
    }
    need_depth(cx, n + 5)?;
    let fs = cx.guest_out(n, cx.host.terminal(p));
    let ext = |s: Side, f: u16| {
        let mut r = Route::from_slice(p);
        r.push(cx.image(s, n + 1, f));
        r
    };
    let swap = FormalElement::from_terms(fs.iter().map(|&f| (Element::beta(&ext(Side::Zero, f), &ext(Side::One, f)), rat(1))));
    let proj = FormalElement::from_terms(fs.iter().map(|&f| (Element::beta(&ext(Side::Zero, f), &ext(Side::Zero, f)), rat(1))));
    let v = multiply(cx, &swap, &FormalElement::symbol(Element::delta(Side::One, p, p)))?;
    let vs = v.adjoint();
    let vsv = multiply(cx, &vs, &v)?;
    let vvs = multiply(cx, &v, &vs)?;
    let source_is_range = equal(cx, &vsv, &vvs)?;
    let source_matches = equal(cx, &vsv, &proj)?;
    let bpp = FormalElement::symbol(Element::beta(p, p));
    let below = is_projection(cx, &proj)? && equal(cx, &multiply(cx, &proj, &bpp)?, &proj)?;
    let one = FormalElement::unit();
    let u = &(&v + &one) - &vsv;
    let us = u.adjoint();
    let unitary = equal(cx, &multiply(cx, &u, &us)?, &one)? && equal(cx, &multiply(cx, &us, &u)?, &one)?;
    let report = VpReport {
        path: cx.host.route_labels(p).join("."),
        terms: v.len(),
        source_is_range,
        source_matches,
        below,
        unitary,
    };
    Ok((v, report))
}

/// The point `(ξ¹(f_1), ξ⁰(f_2), ξ¹(f_3), …)` truncated to the length of `f`.
pub fn alternating_point(cx: &Embedded, f: &[u16]) -> Route {
    f.iter()
        .enumerate()
        .map(|(k, &e)| {
            let s = if k % 2 == 0 { Side::One } else { Side::Zero };
            cx.image(s, k + 1, e)
        })
        .collect()
}

/// Whether `ē_l` annihilates the basis vector at `y` in the representation
/// on the class of the alternating point `x`, where `y` agrees with `x`
/// beyond `i0`.
pub fn repr_vanishing(cx: &Embedded, n0: usize, l: usize, i0: usize, x: &[u16], y: &[u16]) -> Result<bool, AlgebraError> {
    if l <= i0 + 2 || l < n0 + 2 {
        return Err(AlgebraError::Range(format!("need l > i0 + 2 and l >= n0 + 2, got l = {l}, i0 = {i0}, n0 = {n0}")));
    }
    if x.len() < l || y.len() < l || !cx.host.is_route(y) || x[i0..l] != y[i0..l] {
        return Err(AlgebraError::Range("y must agree with x from i0 to l".into()));
    }
    let alternating = x.iter().enumerate().all(|(k, &e)| {
        let want = if k % 2 == 0 { Side::One } else { Side::Zero };
        cx.side_of(k + 1, e).is_some_and(|(s, _)| s == want)
    });
    if !alternating {
        return Err(AlgebraError::Range("x is not an alternating guest point".into()));
    }
    let e = build_ebar(cx, l, n0)?;
    let q = &y[..l];
    Ok(e.coefficient(&Element::beta(q, q)).is_zero())
}
