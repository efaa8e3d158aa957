//! Ordered K₀ of AF algebras as direct limits of integer lattices.
//!
//! A diagram presents the limit of `ℤ^{V_1} → ℤ^{V_2} → …` where the map from
//! level `n` sends `x` to `y_w = Σ_{e: v→w} x_v`. Equality, positivity and
//! divisibility in the limit are semi-decidable, so verdicts are three-valued
//! and come with the level or the invariant that decides them.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::diagram::{Diagram, Route};
use crate::embedding::{Embedded, Side};
use crate::groupoid::{source_range, Element};
use crate::measure::{self, LevelWeights, Method, DEFAULT_TOL};
use crate::par::{self, Exec};
use crate::star_algebra::{equal, multiply, AlgebraError, FormalElement};

/// Default number of levels searched for equality, positivity and divisibility.
pub const SEARCH_DEPTH: usize = 12;

#[derive(Debug, Error)]
pub enum KError {
    #[error("level {level} outside 1..={depth}")]
    Level { level: usize, depth: usize },
    #[error("vector of length {got} at a level with {want} vertices")]
    Shape { got: usize, want: usize },
    #[error("cylinders overlap")]
    Overlap,
    #[error("cylinder of length {len} does not refine to level {level}")]
    TooLong { len: usize, level: usize },
    #[error("path does not end on the guest image")]
    NotGuest,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Integer vector at one level of a presentation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub level: usize,
    pub coords: Vec<BigInt>,
}

impl GroupElement {
    pub fn new(level: usize, coords: &[i64]) -> GroupElement {
        GroupElement { level, coords: coords.iter().map(|&x| BigInt::from(x)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coords.iter().all(|x| !x.is_negative())
    }

    pub fn to_json(&self) -> Json {
        json!({
            "level": self.level,
            "coords": self.coords.iter().map(ToString::to_string).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.coords.iter().map(ToString::to_string).collect();
        write!(f, "({})@{}", c.join(","), self.level)
    }
}

/// Three-valued answer about the limit group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Yes { level: usize, detail: String },
    No { certificate: String },
    Unknown { reason: String },
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes { .. })
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Verdict::No { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Yes { level, detail } => write!(f, "yes at level {level} ({detail})"),
            Verdict::No { certificate } => write!(f, "no ({certificate})"),
            Verdict::Unknown { reason } => write!(f, "unknown ({reason})"),
        }
    }
}

/// Ranks, connecting maps, order unit and, when available, the state given
/// by the invariant measure.
#[derive(Clone, Debug)]
pub struct DirectLimitGroup {
    pub names: Vec<Vec<String>>,
    /// `maps[n]` sends level `n` to level `n+1`, rows indexed by `V_{n+1}`.
    pub maps: Vec<Vec<Vec<BigInt>>>,
    pub order_unit: GroupElement,
    pub state: Option<LevelWeights>,
}

impl DirectLimitGroup {
    pub fn depth(&self) -> usize {
        self.names.len() - 1
    }

    pub fn rank(&self, n: usize) -> usize {
        self.names[n].len()
    }

    fn check(&self, g: &GroupElement) -> Result<(), KError> {
        if g.level == 0 || g.level > self.depth() {
            return Err(KError::Level { level: g.level, depth: self.depth() });
        }
        if g.coords.len() != self.rank(g.level) {
            return Err(KError::Shape { got: g.coords.len(), want: self.rank(g.level) });
        }
        Ok(())
    }

    /// Image of `g` one level up.
    pub fn push_once(&self, g: &GroupElement) -> Result<GroupElement, KError> {
        self.check(g)?;
        if g.level == self.depth() {
            return Err(KError::Level { level: g.level + 1, depth: self.depth() });
        }
        let coords = self.maps[g.level].iter().map(|row| row.iter().zip(&g.coords).map(|(a, x)| a * x).sum()).collect();
        Ok(GroupElement { level: g.level + 1, coords })
    }

    /// Image of `g` at level `m ≥ g.level`.
    pub fn push(&self, g: &GroupElement, m: usize) -> Result<GroupElement, KError> {
        self.check(g)?;
        if m < g.level || m > self.depth() {
            return Err(KError::Level { level: m, depth: self.depth() });
        }
        let mut h = g.clone();
        while h.level < m {
            h = self.push_once(&h)?;
        }
        Ok(h)
    }

    /// Value of the state on `g`, if the presentation carries one.
    pub fn pairing(&self, g: &GroupElement) -> Option<f64> {
        let w = self.state.as_ref()?;
        if g.level > w.depth() {
            return None;
        }
        Some(
            g.coords
                .iter()
                .enumerate()
                .map(|(v, x)| big_to_f64(x) * w.float_weight(g.level, v))
                .sum(),
        )
    }

    /// Composite map from level `from` to level `to`.
    pub fn composite(&self, from: usize, to: usize) -> Result<Vec<Vec<BigInt>>, KError> {
        if from == 0 || from > to || to > self.depth() {
            return Err(KError::Level { level: to, depth: self.depth() });
        }
        let mut acc = identity(self.rank(from));
        for n in from..to {
            acc = mat_mul(&self.maps[n], &acc);
        }
        Ok(acc)
    }

    fn last_level(&self, g: &GroupElement, search_depth: usize) -> usize {
        self.depth().min(g.level + search_depth).max(g.level)
    }

    pub fn to_json(&self) -> Json {
        json!({
            "ranks": self.names.iter().skip(1).map(Vec::len).collect::<Vec<_>>(),
            "vertices": &self.names[1..],
            "maps": self.maps.iter().enumerate().skip(1).map(|(n, m)| json!({
                "from": n,
                "to": n + 1,
                "matrix": matrix_strings(m),
            })).collect::<Vec<_>>(),
            "order_unit": self.order_unit.to_json(),
            "state": self.state.as_ref().map(|w| format!("{:?}", w.method)),
        })
    }
}

fn big_to_f64(x: &BigInt) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
}

fn identity(k: usize) -> Vec<Vec<BigInt>> {
    (0..k).map(|i| (0..k).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..cols).map(|j| row.iter().zip(b).map(|(x, r)| x * &r[j]).sum()).collect())
        .collect()
}

fn matrix_strings(m: &[Vec<BigInt>]) -> Vec<Vec<String>> {
    m.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect()
}

/// Presentation of K₀ of the AF algebra of `d`. The state is the invariant
/// measure when the last incidence matrix is square.
pub fn k0_presentation(d: &Diagram) -> DirectLimitGroup {
    let depth = d.depth();
    let names = (0..=depth).map(|n| d.vertex_names(n).to_vec()).collect();
    let mut maps = vec![Vec::new(); depth.max(1)];
    for n in 1..depth {
        let mut m = vec![vec![BigInt::zero(); d.vertex_count(n)]; d.vertex_count(n + 1)];
        for e in d.edges(n + 1) {
            m[e.to][e.from] += 1;
        }
        maps[n] = m;
    }
    let order_unit = GroupElement {
        level: 1,
        coords: d.path_counts(1).into_iter().map(BigInt::from).collect(),
    };
    let state = if depth >= 2 {
        measure::solve_invariant_measure(d, depth, DEFAULT_TOL)
            .ok()
            .filter(|w| w.method != Method::PathCount)
    } else {
        None
    };
    DirectLimitGroup { names, maps, order_unit, state }
}

/// Whether `a` and `b` have the same image at some common level.
pub fn element_equal(
    g: &DirectLimitGroup,
    a: &GroupElement,
    b: &GroupElement,
    search_depth: usize,
) -> Result<Verdict, KError> {
    let start = a.level.max(b.level);
    let last = g.last_level(&GroupElement { level: start, coords: Vec::new() }, search_depth);
    let mut x = g.push(a, start)?;
    let mut y = g.push(b, start)?;
    loop {
        if x == y {
            return Ok(Verdict::Yes { level: x.level, detail: format!("both push to {x}") });
        }
        if x.level >= last {
            break;
        }
        x = g.push_once(&x)?;
        y = g.push_once(&y)?;
    }
    if let (Some(pa), Some(pb)) = (g.pairing(a), g.pairing(b)) {
        let tol = g.state.as_ref().map_or(DEFAULT_TOL, |w| w.tol);
        if (pa - pb).abs() > tol {
            return Ok(Verdict::No { certificate: format!("state values {pa:.12} and {pb:.12} differ") });
        }
    }
    Ok(Verdict::Unknown { reason: format!("images differ up to level {last}") })
}

/// Whether `a` is positive in the limit order. Zero counts as positive.
pub fn element_positive(g: &DirectLimitGroup, a: &GroupElement, search_depth: usize) -> Result<Verdict, KError> {
    let last = g.last_level(a, search_depth);
    let mut x = a.clone();
    g.check(&x)?;
    loop {
        if x.is_zero() {
            return Ok(Verdict::Yes { level: x.level, detail: "zero".into() });
        }
        if x.is_nonnegative() {
            return Ok(Verdict::Yes { level: x.level, detail: format!("nonnegative image {x}") });
        }
        if x.level >= last {
            break;
        }
        x = g.push_once(&x)?;
    }
    if let Some(p) = g.pairing(a) {
        let tol = g.state.as_ref().map_or(DEFAULT_TOL, |w| w.tol);
        if p < -tol {
            return Ok(Verdict::No { certificate: format!("state value {p:.12} is negative") });
        }
    }
    Ok(Verdict::Unknown { reason: format!("no nonnegative image up to level {last}") })
}

/// Whether `a` is `k` times some element of the limit.
pub fn divisible_by(g: &DirectLimitGroup, a: &GroupElement, k: u64, search_depth: usize) -> Result<Verdict, KError> {
    let k = BigInt::from(k);
    let last = g.last_level(a, search_depth);
    let mut x = a.clone();
    g.check(&x)?;
    loop {
        if x.coords.iter().all(|c| c.is_multiple_of(&k)) {
            return Ok(Verdict::Yes { level: x.level, detail: format!("image {x} is divisible") });
        }
        if x.level >= last {
            break;
        }
        x = g.push_once(&x)?;
    }
    let window = g.composite(a.level, last)?;
    let unimodular = (a.level..last).all(|n| determinant(&g.maps[n]).is_some_and(|d| d.abs().is_one()));
    if unimodular {
        return Ok(Verdict::No {
            certificate: format!(
                "maps from level {} to {last} have determinant ±1 and {a} is not divisible by {k}; composite {:?}",
                a.level,
                matrix_strings(&window)
            ),
        });
    }
    Ok(Verdict::Unknown { reason: format!("no divisible image up to level {last}") })
}

/// Determinant by fraction-free elimination; `None` for non-square input.
pub fn determinant(m: &[Vec<BigInt>]) -> Option<BigInt> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return None;
    }
    if n == 0 {
        return Some(BigInt::one());
    }
    let mut a = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return Some(BigInt::zero());
        };
        if piv != k {
            a.swap(piv, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    Some(sign * &a[n - 1][n - 1])
}

/// Nonzero diagonal of the Smith normal form, each dividing the next.
pub fn smith_diagonal(m: &[Vec<BigInt>]) -> Vec<BigInt> {
    let mut a = m.to_vec();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    for t in 0..rows.min(cols) {
        let Some((pi, pj)) = (t..rows).flat_map(|i| (t..cols).map(move |j| (i, j))).find(|&(i, j)| !a[i][j].is_zero()) else {
            break;
        };
        a.swap(t, pi);
        a.iter_mut().for_each(|r| r.swap(t, pj));
        loop {
            // Move the smallest nonzero entry of row/column t to the pivot.
            let (mut bi, mut bj) = (t, t);
            for i in t..rows {
                if !a[i][t].is_zero() && a[i][t].abs() < a[bi][bj].abs() {
                    (bi, bj) = (i, t);
                }
            }
            for j in t..cols {
                if !a[t][j].is_zero() && a[t][j].abs() < a[bi][bj].abs() {
                    (bi, bj) = (t, j);
                }
            }
            a.swap(t, bi);
            a.iter_mut().for_each(|r| r.swap(t, bj));
            let p = a[t][t].clone();
            let mut clean = true;
            for i in t + 1..rows {
                let q = a[i][t].div_floor(&p);
                if !q.is_zero() {
                    for j in t..cols {
                        let s = &q * &a[t][j];
                        a[i][j] -= s;
                    }
                }
                clean &= a[i][t].is_zero();
            }
            for j in t + 1..cols {
                let q = a[t][j].div_floor(&p);
                if !q.is_zero() {
                    for i in t..rows {
                        let s = &q * &a[i][t];
                        a[i][j] -= s;
                    }
                }
                clean &= a[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            // Enforce divisibility of the remaining block by the pivot.
            let bad = (t + 1..rows).flat_map(|i| (t + 1..cols).map(move |j| (i, j))).find(|&(i, j)| !a[i][j].is_multiple_of(&p));
            match bad {
                Some((i, _)) => {
                    for j in t..cols {
                        let s = a[i][j].clone();
                        a[t][j] += s;
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].abs());
    }
    diag
}

/// Smith invariants of a window of connecting maps.
#[derive(Clone, Debug, Serialize)]
pub struct SmithReport {
    pub from: usize,
    pub to: usize,
    pub composite: Vec<Vec<String>>,
    pub rank: usize,
    pub invariant_factors: Vec<String>,
    /// Invariant factors above one, i.e. the torsion of the cokernel.
    pub cokernel_torsion: Vec<String>,
    pub determinant: Option<String>,
}

pub fn smith_invariants(g: &DirectLimitGroup, from: usize, to: usize) -> Result<SmithReport, KError> {
    let m = g.composite(from, to)?;
    let diag = smith_diagonal(&m);
    Ok(SmithReport {
        from,
        to,
        composite: matrix_strings(&m),
        rank: diag.len(),
        invariant_factors: diag.iter().map(ToString::to_string).collect(),
        cokernel_torsion: diag.iter().filter(|d| !d.is_one()).map(ToString::to_string).collect(),
        determinant: determinant(&m).map(|d| d.to_string()),
    })
}

/// Class of the characteristic function of a disjoint union of cylinders,
/// as a vector at level `n`.
pub fn class_of_clopen(d: &Diagram, cylinders: &[Route], n: usize) -> Result<GroupElement, KError> {
    if n == 0 || n > d.depth() {
        return Err(KError::Level { level: n, depth: d.depth() });
    }
    let mut sorted: Vec<&Route> = cylinders.iter().collect();
    sorted.sort();
    if sorted.windows(2).any(|w| w[1].starts_with(w[0])) {
        return Err(KError::Overlap);
    }
    if let Some(p) = cylinders.iter().find(|p| p.len() > n) {
        return Err(KError::TooLong { len: p.len(), level: n });
    }
    let mut coords = vec![BigInt::zero(); d.vertex_count(n)];
    for p in cylinders {
        let mut x = vec![BigInt::zero(); d.vertex_count(p.len())];
        x[d.terminal(p)] = BigInt::one();
        for level in p.len() + 1..=n {
            let mut y = vec![BigInt::zero(); d.vertex_count(level)];
            for e in d.edges(level) {
                y[e.to] += &x[e.from];
            }
            x = y;
        }
        coords.iter_mut().zip(x).for_each(|(c, v)| *c += v);
    }
    Ok(GroupElement { level: n, coords })
}

/// Finite-level content of the vanishing of the map from the guest
/// subalgebra to the host algebra at one host path.
#[derive(Clone, Debug, Serialize)]
pub struct K30Report {
    pub path: String,
    pub level: usize,
    pub source_class: Vec<String>,
    pub range_class: Vec<String>,
    pub classes_equal: bool,
    pub witness_terms: usize,
    /// `ww*` equals `dd*`.
    pub witness_source: bool,
    /// `w*w` equals `d*d`.
    pub witness_range: bool,
}

impl K30Report {
    pub fn pass(&self) -> bool {
        self.classes_equal && self.witness_source && self.witness_range
    }
}

/// Compares the classes of the source and range of `d^{1,0}_{p,p}` at
/// level `n+1` and checks the partial isometry built from the `b` symbols
/// joining the two images of each guest edge.
pub fn prop_k30_check(cx: &Embedded, p: &[u16]) -> Result<K30Report, KError> {
    let n = p.len();
    if !cx.host.is_route(p) {
        return Err(AlgebraError::Groupoid(crate::groupoid::GroupoidError::BadPath).into());
    }
    if cx.guest_vertex(n, cx.host.terminal(p)).is_none() {
        return Err(KError::NotGuest);
    }
    if n + 3 > cx.depth() {
        return Err(AlgebraError::Depth { need: n + 3, depth: cx.depth() }.into());
    }
    let d = Element::delta(Side::One, p, p);
    let (src, rng) = source_range(cx, &d).map_err(AlgebraError::from)?;
    let source_class = class_of_clopen(&cx.host, &src, n + 1)?;
    let range_class = class_of_clopen(&cx.host, &rng, n + 1)?;
    let ext = |s: Side, f: u16| {
        let mut r = Route::from_slice(p);
        r.push(cx.image(s, n + 1, f));
        r
    };
    let fs = cx.guest_out(n, cx.host.terminal(p));
    let w = FormalElement::from_terms(
        fs.iter()
            .map(|&f| (Element::beta(&ext(Side::One, f), &ext(Side::Zero, f)), BigRational::one())),
    );
    let ws = w.adjoint();
    let df = FormalElement::symbol(d);
    let dfs = df.adjoint();
    let witness_source = equal(cx, &multiply(cx, &w, &ws)?, &multiply(cx, &df, &dfs)?)?;
    let witness_range = equal(cx, &multiply(cx, &ws, &w)?, &multiply(cx, &dfs, &df)?)?;
    let strings = |g: &GroupElement| g.coords.iter().map(ToString::to_string).collect::<Vec<_>>();
    Ok(K30Report {
        path: cx.host.route_labels(p).join("."),
        level: n + 1,
        source_class: strings(&source_class),
        range_class: strings(&range_class),
        classes_equal: source_class == range_class,
        witness_terms: w.len(),
        witness_source,
        witness_range,
    })
}

/// Host routes of length `n` ending on the guest image.
pub fn guest_host_routes(cx: &Embedded, n: usize) -> Vec<Route> {
    cx.host
        .routes(n)
        .into_iter()
        .filter(|p| cx.guest_vertex(n, cx.host.terminal(p)).is_some())
        .collect()
}

/// `prop_k30_check` over every host route of length `1..=depth` ending on
/// the guest image.
pub fn k30_all(cx: &Embedded, depth: usize, exec: Exec) -> Result<Vec<K30Report>, KError> {
    let mut out = Vec::new();
    for n in 1..=depth {
        let routes = guest_host_routes(cx, n);
        for r in par::map(exec, &routes, |p| prop_k30_check(cx, p)) {
            out.push(r?);
        }
    }
    Ok(out)
}

/// Presentations, finite-level checks and the conclusions they feed.
#[derive(Clone, Debug)]
pub struct KReport {
    pub depth: usize,
    pub host: DirectLimitGroup,
    pub guest: DirectLimitGroup,
    pub host_window: Option<SmithReport>,
    pub guest_window: Option<SmithReport>,
    pub k30_checked: usize,
    pub k30_failures: Vec<K30Report>,
}

impl KReport {
    pub fn pass(&self) -> bool {
        self.k30_checked > 0 && self.k30_failures.is_empty()
    }

    /// Statements obtained from the exact sequence once the checks pass.
    pub fn conclusions(&self) -> Vec<(&'static str, &'static str)> {
        vec![
            ("K0 of the relation algebra", "isomorphic to the host limit group, as ordered groups with order unit"),
            ("K1 of the relation algebra", "isomorphic to the guest limit group"),
            ("exact sequence", "cited, not computed"),
        ]
    }

    pub fn to_json(&self) -> Json {
        json!({
            "depth": self.depth,
            "host_k0": self.host.to_json(),
            "guest_k0": self.guest.to_json(),
            "host_window": self.host_window,
            "guest_window": self.guest_window,
            "k30": {
                "checked": self.k30_checked,
                "failures": self.k30_failures,
                "pass": self.pass(),
            },
            "conclusions": self.conclusions().iter().map(|(k, v)| json!({"statement": k, "value": v, "source": "cited"})).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for KReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ranks = |g: &DirectLimitGroup| g.names.iter().skip(1).map(|v| v.len().to_string()).collect::<Vec<_>>().join(",");
        writeln!(f, "host K0: ranks [{}], order unit {}", ranks(&self.host), self.host.order_unit)?;
        writeln!(f, "guest K0: ranks [{}], order unit {}", ranks(&self.guest), self.guest.order_unit)?;
        for (name, w) in [("host", &self.host_window), ("guest", &self.guest_window)] {
            if let Some(w) = w {
                writeln!(
                    f,
                    "{name} window {}..{}: invariant factors [{}], determinant {}",
                    w.from,
                    w.to,
                    w.invariant_factors.join(","),
                    w.determinant.as_deref().unwrap_or("-")
                )?;
            }
        }
        writeln!(f, "class checks: {} paths, {} failures", self.k30_checked, self.k30_failures.len())?;
        for r in &self.k30_failures {
            writeln!(f, "  FAIL {}", r.path)?;
        }
        for (k, v) in self.conclusions() {
            writeln!(f, "{k}: {v} [cited]")?;
        }
        Ok(())
    }
}

pub fn ktheory_report(cx: &Embedded, depth: usize, exec: Exec) -> Result<KReport, KError> {
    let host = k0_presentation(&cx.host);
    let guest = k0_presentation(&cx.guest);
    let window = |g: &DirectLimitGroup| (g.depth() >= 2).then(|| smith_invariants(g, 1, g.depth().min(depth.max(2)))).transpose();
    let host_window = window(&host)?;
    let guest_window = window(&guest)?;
    let reports = k30_all(cx, depth, exec)?;
    let k30_checked = reports.len();
    let k30_failures = reports.into_iter().filter(|r| !r.pass()).collect();
    Ok(KReport { depth, host, guest, host_window, guest_window, k30_checked, k30_failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn big(m: &[&[i64]]) -> Vec<Vec<BigInt>> {
        m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn presentations() {
        let g = k0_presentation(&fixtures::single_loop(6));
        assert!(g.maps[1..].iter().all(|m| *m == big(&[&[1]])));
        let g = k0_presentation(&fixtures::guest_dyadic(6));
        assert!(g.maps[1..].iter().all(|m| *m == big(&[&[2]])));
        assert_eq!(g.order_unit, GroupElement::new(1, &[2]));
        let g = k0_presentation(&fixtures::fib(6));
        assert!(g.maps[1..].iter().all(|m| *m == big(&[&[1, 1], &[1, 0]])));
        assert_eq!(g.order_unit, GroupElement::new(1, &[1, 1]));
    }

    #[test]
    fn equality_verdicts() {
        let g = k0_presentation(&fixtures::guest_dyadic(14));
        let v = element_equal(&g, &GroupElement::new(1, &[1]), &GroupElement::new(2, &[2]), SEARCH_DEPTH).unwrap();
        assert_eq!(v, Verdict::Yes { level: 2, detail: "both push to (2)@2".into() });
        let fib = k0_presentation(&fixtures::fib(14));
        let v = element_equal(&fib, &GroupElement::new(1, &[1, 0]), &GroupElement::new(1, &[0, 1]), SEARCH_DEPTH).unwrap();
        assert!(v.is_no(), "{v}");
        let a = GroupElement::new(2, &[3, -5]);
        let b = fib.push(&a, 5).unwrap();
        assert!(element_equal(&fib, &a, &b, SEARCH_DEPTH).unwrap().is_yes());
    }

    #[test]
    fn positivity_verdicts() {
        let fib = k0_presentation(&fixtures::fib(14));
        assert!(element_positive(&fib, &fib.order_unit, SEARCH_DEPTH).unwrap().is_yes());
        let v = element_positive(&fib, &GroupElement::new(1, &[1, -1]), SEARCH_DEPTH).unwrap();
        assert_eq!(v, Verdict::Yes { level: 2, detail: "nonnegative image (0,1)@2".into() });
        let v = element_positive(&fib, &GroupElement::new(1, &[-1, 2]), SEARCH_DEPTH).unwrap();
        assert!(v.is_yes());
        let v = element_positive(&fib, &GroupElement::new(1, &[-2, 1]), SEARCH_DEPTH).unwrap();
        assert!(v.is_no(), "{v}");
        let v = element_positive(&fib, &GroupElement::new(3, &[0, 0]), SEARCH_DEPTH).unwrap();
        assert_eq!(v, Verdict::Yes { level: 3, detail: "zero".into() });
    }

    #[test]
    fn divisibility() {
        let g = k0_presentation(&fixtures::guest_dyadic(14));
        let v = divisible_by(&g, &GroupElement::new(1, &[1]), 2, SEARCH_DEPTH).unwrap();
        assert_eq!(v, Verdict::Yes { level: 2, detail: "image (2)@2 is divisible".into() });
        let z = k0_presentation(&fixtures::guest_z(14));
        let v = divisible_by(&z, &GroupElement::new(1, &[1]), 2, SEARCH_DEPTH).unwrap();
        assert!(v.is_no(), "{v}");
        let short = k0_presentation(&fixtures::two_chains(4));
        let v = divisible_by(&short, &GroupElement::new(1, &[1, 0]), 2, SEARCH_DEPTH).unwrap();
        assert!(v.is_no());
    }

    #[test]
    fn smith_windows() {
        let g = k0_presentation(&fixtures::guest_dyadic(6));
        let s = smith_invariants(&g, 1, 4).unwrap();
        assert_eq!(s.composite, vec![vec!["8".to_string()]]);
        assert_eq!((s.rank, s.cokernel_torsion.clone()), (1, vec!["8".to_string()]));
        let fib = k0_presentation(&fixtures::fib(6));
        let s = smith_invariants(&fib, 1, 3).unwrap();
        assert_eq!(s.composite, vec![vec!["2", "1"], vec!["1", "1"]]);
        assert_eq!(s.determinant.as_deref(), Some("1"));
        assert_eq!(s.rank, 2);
        assert!(s.cokernel_torsion.is_empty());
        let s = smith_invariants(&fib, 2, 2).unwrap();
        assert_eq!(s.rank, 2);
        assert_eq!(smith_diagonal(&big(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]])), big(&[&[2, 6, 12]])[0]);
        assert_eq!(determinant(&big(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]])), Some(BigInt::from(-144)));
    }

    #[test]
    fn clopen_classes() {
        let d = fixtures::host(3, 4);
        let whole = class_of_clopen(&d, &[Route::new()], 1).unwrap();
        assert_eq!(whole, k0_presentation(&d).order_unit);
        let g = k0_presentation(&d);
        let p: Route = Route::from_slice(&[0]);
        let c1 = class_of_clopen(&d, std::slice::from_ref(&p), 1).unwrap();
        let c3 = class_of_clopen(&d, std::slice::from_ref(&p), 3).unwrap();
        assert_eq!(g.push(&c1, 3).unwrap(), c3);
        let kids = d.refine_cylinder(&p);
        assert_eq!(class_of_clopen(&d, &kids, 3).unwrap(), c3);
        assert!(matches!(class_of_clopen(&d, &[p.clone(), kids[0].clone()], 3), Err(KError::Overlap)));
        assert!(matches!(class_of_clopen(&d, &kids, 1), Err(KError::TooLong { .. })));
    }

    #[test]
    fn k30_on_fixtures() {
        let cx = Embedded::auto(fixtures::host(3, 5), fixtures::guest_z(5)).unwrap();
        let reports = k30_all(&cx, 2, Exec::default()).unwrap();
        assert!(!reports.is_empty());
        for r in &reports {
            assert!(r.pass(), "{r:?}");
            let ones = r.source_class.iter().filter(|c| *c == "1").count();
            assert_eq!(ones, 1);
        }
        let cx = Embedded::auto(fixtures::host(5, 5), fixtures::guest_dyadic(5)).unwrap();
        let reports = k30_all(&cx, 2, Exec::default()).unwrap();
        for r in &reports {
            assert!(r.pass(), "{r:?}");
            assert!(r.source_class.contains(&"2".to_string()));
            assert_eq!(r.witness_terms, 2);
        }
        let rep = ktheory_report(&cx, 2, Exec::default()).unwrap();
        assert!(rep.pass());
        assert_eq!(rep.guest_window.as_ref().unwrap().invariant_factors, vec!["2"]);
        let text = rep.to_string();
        assert!(text.contains("[cited]"));
        assert_eq!(rep.to_json().to_string(), ktheory_report(&cx, 2, Exec::Sequential).unwrap().to_json().to_string());
    }
}
