//! The finite layers `R_n`, their classes, differences and the amenability
//! functions.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ext, Element, GroupoidError, Point};
use crate::diagram::Route;
use crate::embedding::{Embedded, Side};
use crate::par::{self, Exec};

/// Pairs of rooted paths of length `n` with a common terminal vertex.
pub fn level_pairs(cx: &Embedded, n: usize) -> Vec<(Route, Route)> {
    let mut by_vertex: BTreeMap<usize, Vec<Route>> = BTreeMap::new();
    for r in cx.host.routes(n) {
        by_vertex.entry(cx.host.terminal(&r)).or_default().push(r);
    }
    let mut out = Vec::new();
    for paths in by_vertex.values() {
        for p in paths {
            for q in paths {
                out.push((p.clone(), q.clone()));
            }
        }
    }
    out.sort();
    out
}

/// The pairs of [`level_pairs`] ending on the guest image.
pub fn guest_pairs(cx: &Embedded, n: usize) -> Vec<(Route, Route)> {
    level_pairs(cx, n)
        .into_iter()
        .filter(|(p, _)| cx.guest_vertex(n, cx.host.terminal(p)).is_some())
        .collect()
}

/// All betas and deltas of level `n`.
pub fn basis(cx: &Embedded, n: usize) -> Vec<Element> {
    let mut out: Vec<Element> = level_pairs(cx, n).iter().map(|(p, q)| Element::beta(p, q)).collect();
    if n >= 1 {
        for (p, q) in guest_pairs(cx, n) {
            for s in Side::BOTH {
                out.push(Element::delta(s, &p, &q));
            }
        }
    }
    out
}

/// Size of the class of `x` in `R_n`: the number of rooted paths to
/// `t(x_n)`, doubled when `x_{n+1}` is a guest-image edge.
pub fn class_size(cx: &Embedded, n: usize, x: &[u16]) -> u128 {
    let v = cx.host.terminal(&x[..n]);
    let k = cx.host.path_counts(n)[v];
    if cx.side_of(n + 1, x[n]).is_some() {
        2 * k
    } else {
        k
    }
}

/// Class of a point in `R_n` through the `2k` elements whose source
/// contains it.
pub fn rn_class(cx: &Embedded, n: usize, x: &Point) -> Vec<Point> {
    let p = &x.prefix[..n];
    let v = cx.host.terminal(p);
    let mut out = Vec::new();
    for q in cx.host.routes_to(n, v) {
        out.push(x.apply(cx, &Element::beta(p, &q)).expect("beta source"));
        if let Some((s, _)) = cx.side_of(n + 1, x.prefix[n]) {
            out.push(x.apply(cx, &Element::delta(s, p, &q)).expect("delta source"));
        }
    }
    out.sort();
    out
}

/// Class of a point in `R_n` by applying every element of level `n`.
pub fn rn_class_bruteforce(cx: &Embedded, n: usize, x: &Point) -> Vec<Point> {
    let mut out: Vec<Point> = basis(cx, n).iter().filter_map(|g| x.apply(cx, g)).collect();
    out.sort();
    out.dedup();
    out
}

/// Partition of the rooted paths of length `len` with plain tails into
/// classes of `R_n`.
pub fn rn_classes(cx: &Embedded, n: usize, len: usize) -> Result<Vec<Vec<Route>>, GroupoidError> {
    if len < n + 2 {
        return Err(GroupoidError::Truncation { len, level: n });
    }
    if len > cx.depth() {
        return Err(GroupoidError::Depth { level: n, need: len, depth: cx.depth() });
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for x in cx.host.routes(len) {
        if seen.contains(&x) {
            continue;
        }
        let class: Vec<Route> = rn_class(cx, n, &Point::plain(&x)).into_iter().map(|p| p.prefix).collect();
        seen.extend(class.iter().cloned());
        out.push(class);
    }
    Ok(out)
}

fn guest_runs(cx: &Embedded, w: usize, from: usize, to: usize) -> Vec<Vec<u16>> {
    let mut acc: Vec<(Vec<u16>, usize)> = vec![(Vec::new(), w)];
    for level in from..to {
        let mut next = Vec::new();
        for (run, at) in &acc {
            for &f in cx.guest.out_edges(level, *at) {
                let mut r = run.clone();
                r.push(f);
                next.push((r, cx.guest.edge(level + 1, f).to));
            }
        }
        acc = next;
    }
    acc.into_iter().map(|(r, _)| r).collect()
}

/// The betas of level `l + 1` that cover `R_n - R_l`: for each guest pair
/// `(p, q)` of level `n`, guest run `f` from level `n` to `l` and guest edge
/// `f'` after it, the swap `p ξ¹(f) ξ⁰(f') ↔ q ξ⁰(f) ξ¹(f')` in both
/// directions.
pub fn rn_difference(cx: &Embedded, n: usize, l: usize) -> Result<Vec<Element>, GroupoidError> {
    if l <= n || n == 0 {
        return Err(GroupoidError::Truncation { len: l, level: n });
    }
    if l + 1 > cx.depth() {
        return Err(GroupoidError::Depth { level: l, need: l + 1, depth: cx.depth() });
    }
    let img = |s: Side, start: usize, run: &[u16]| -> Route {
        run.iter().enumerate().map(|(k, &f)| cx.image(s, start + k + 1, f)).collect()
    };
    let mut out = Vec::new();
    for (p, q) in guest_pairs(cx, n) {
        let w = cx.guest_vertex(n, cx.host.terminal(&p)).expect("guest pair");
        for run in guest_runs(cx, w, n, l + 1) {
            let x = ext(&p, &[img(Side::One, n, &run[..run.len() - 1]).as_slice(), &[cx.image(Side::Zero, l + 1, run[run.len() - 1])]].concat());
            let y = ext(&q, &[img(Side::Zero, n, &run[..run.len() - 1]).as_slice(), &[cx.image(Side::One, l + 1, run[run.len() - 1])]].concat());
            out.push(Element::beta(&x, &y));
            out.push(Element::beta(&y, &x));
        }
    }
    out.sort();
    Ok(out)
}

/// Deterministic sample of rooted paths of length `len`, biased towards
/// long guest-image runs.
pub fn sample_points(cx: &Embedded, len: usize, count: usize, seed: u64) -> Vec<Route> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeSet::new();
    let mut attempts = 0;
    while out.len() < count && attempts < count * 20 {
        attempts += 1;
        let mut x = Route::new();
        let mut v = 0usize;
        let mut side = if rng.random_bool(0.5) { Side::Zero } else { Side::One };
        for level in 0..len {
            let guest = cx.guest_out(level, v);
            let e = if !guest.is_empty() && rng.random_bool(0.7) {
                if rng.random_bool(0.25) {
                    side = side.flip();
                }
                cx.image(side, level + 1, guest[rng.random_range(0..guest.len())])
            } else {
                let all = cx.host.out_edges(level, v);
                all[rng.random_range(0..all.len())]
            };
            v = cx.host.edge(level + 1, e).to;
            x.push(e);
        }
        out.insert(x);
    }
    out.into_iter().collect()
}

/// `C(i, T)`: all paths ending in the tail `T` after level `i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct TailSet {
    start: usize,
    tail: Route,
}

impl TailSet {
    fn of(p: &Point, i: usize) -> TailSet {
        TailSet { start: i, tail: Route::from_slice(&p.prefix[i..]) }
    }

    fn contains(&self, other: &TailSet) -> bool {
        self.start >= other.start && other.tail[self.start - other.start..] == self.tail[..]
    }

    fn size(&self, counts: &[Vec<u128>], cx: &Embedded) -> u128 {
        let v = cx.host.edge(self.start + 1, self.tail[0]).from;
        counts[self.start][v]
    }
}

/// Exact `Σ_z |f(z)|` for `f` a combination of indicator functions of a
/// nested-or-disjoint family of tail sets.
fn l1_norm(cx: &Embedded, counts: &[Vec<u128>], terms: &BTreeMap<TailSet, BigRational>) -> BigRational {
    let sets: Vec<(&TailSet, &BigRational)> = terms.iter().collect();
    let mut total = BigRational::zero();
    for (i, (s, _)) in sets.iter().enumerate() {
        let value: BigRational = sets.iter().filter(|(t, _)| t.contains(s)).map(|(_, c)| (*c).clone()).sum();
        if value.is_zero() {
            continue;
        }
        let inner: Vec<usize> = (0..sets.len()).filter(|&j| j != i && s.contains(sets[j].0)).collect();
        let maximal = inner
            .iter()
            .filter(|&&j| !inner.iter().any(|&k| k != j && sets[k].0.contains(sets[j].0)))
            .map(|&j| sets[j].0.size(counts, cx))
            .sum::<u128>();
        let atom = s.size(counts, cx) - maximal;
        total += value.abs() * BigRational::from_integer(BigInt::from(atom));
    }
    total
}

#[derive(Clone, Debug)]
pub struct AmenabilityReport {
    pub n: usize,
    pub l: usize,
    pub len: usize,
    pub points: usize,
    pub pairs: usize,
    /// Every `h_i` row sums to exactly one.
    pub row_sums: bool,
    /// Every `Σ_z |h_i(x,z) - h_i(y,z)|` is `0` inside `R_i` and `2` outside.
    pub per_h: bool,
    pub max_defect: BigRational,
    pub bound: BigRational,
}

impl AmenabilityReport {
    pub fn pass(&self) -> bool {
        self.row_sums && self.per_h && self.max_defect <= self.bound
    }
}

/// Evaluates `h_i` for `i <= l` and `g_l = l^{-1} Σ_{i=1}^{l} h_i` exactly on
/// pairs `(x, y)` of `R_n` with `x` from `points` (paths of length `len`
/// with plain tails) and `y` ranging over the whole class of `x`.
pub fn amenability_values(
    cx: &Embedded,
    n: usize,
    l: usize,
    len: usize,
    points: &[Route],
    exec: Exec,
) -> Result<AmenabilityReport, GroupoidError> {
    if n == 0 || l <= n || len < l + 2 {
        return Err(GroupoidError::Truncation { len, level: l });
    }
    if len > cx.depth() {
        return Err(GroupoidError::Depth { level: l, need: len, depth: cx.depth() });
    }
    let counts: Vec<Vec<u128>> = (0..=len).map(|i| cx.host.path_counts(i)).collect();
    let inv_l = BigRational::new(BigInt::one(), BigInt::from(l));
    let two = BigRational::from_integer(BigInt::from(2));
    // Class of x in R_i as two tail sets, and the weight of each of its members.
    let class = |x: &Point, i: usize| -> (Vec<TailSet>, BigRational) {
        let mut sets = vec![TailSet::of(x, i)];
        if let Some((s, _)) = cx.side_of(i + 1, x.prefix[i]) {
            let p = &x.prefix[..i];
            let y = x.apply(cx, &Element::delta(s, p, p)).expect("delta source");
            sets.push(TailSet::of(&y, i));
        }
        let size = class_size(cx, i, &x.prefix);
        (sets, BigRational::new(BigInt::one(), BigInt::from(size)))
    };
    let results = par::map(exec, points, |x| {
        let x = Point::plain(x);
        let mut row_sums = true;
        let mut per_h = true;
        let mut worst = BigRational::zero();
        let classes: Vec<_> = (1..=l).map(|i| class(&x, i)).collect();
        for (sets, w) in &classes {
            let mass: u128 = sets.iter().map(|s| s.size(&counts, cx)).sum();
            row_sums &= BigRational::from_integer(BigInt::from(mass)) * w == BigRational::one();
        }
        let partners = rn_class(cx, n, &x);
        for y in &partners {
            let mut g_terms: BTreeMap<TailSet, BigRational> = BTreeMap::new();
            for i in 1..=l {
                let (xs, xw) = &classes[i - 1];
                let (ys, yw) = class(y, i);
                let mut h_terms: BTreeMap<TailSet, BigRational> = BTreeMap::new();
                for s in xs {
                    *h_terms.entry(s.clone()).or_insert_with(BigRational::zero) += xw;
                }
                for s in &ys {
                    *h_terms.entry(s.clone()).or_insert_with(BigRational::zero) -= &yw;
                }
                let together = xs.iter().any(|s| s.contains(&TailSet::of(y, s.start)));
                let expected = if together { BigRational::zero() } else { two.clone() };
                per_h &= l1_norm(cx, &counts, &h_terms) == expected;
                for (s, c) in h_terms {
                    *g_terms.entry(s).or_insert_with(BigRational::zero) += c * &inv_l;
                }
            }
            g_terms.retain(|_, c| !c.is_zero());
            let d = l1_norm(cx, &counts, &g_terms);
            if d > worst {
                worst = d;
            }
        }
        (row_sums, per_h, worst, partners.len())
    });
    let mut report = AmenabilityReport {
        n,
        l,
        len,
        points: points.len(),
        pairs: 0,
        row_sums: true,
        per_h: true,
        max_defect: BigRational::zero(),
        bound: BigRational::new(BigInt::from(2 * (n + 1)), BigInt::from(l)),
    };
    for (r, h, d, k) in results {
        report.row_sums &= r;
        report.per_h &= h;
        report.pairs += k;
        if d > report.max_defect {
            report.max_defect = d;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::tests::{host3, host5};
    use crate::groupoid::Kind;

    #[test]
    fn basis_sizes() {
        let cx = host3();
        assert_eq!(basis(&cx, 1).len(), 36);
        assert_eq!(basis(&cx, 2).len(), 1296);
        let cx = host5();
        assert_eq!(basis(&cx, 1).len(), 100);
        assert_eq!(level_pairs(&cx, 2).len(), 5000);
    }

    #[test]
    fn classes_match_formula() {
        let cx = host3();
        for x in sample_points(&cx, 3, 60, 7) {
            let p = Point::plain(&x);
            let brute = rn_class_bruteforce(&cx, 1, &p);
            assert_eq!(brute.len() as u128, class_size(&cx, 1, &x));
            assert_eq!(brute, rn_class(&cx, 1, &p));
        }
        let classes = rn_classes(&cx, 1, 3).unwrap();
        let total: usize = classes.iter().map(Vec::len).sum();
        assert_eq!(total as u128, cx.host.path_counts(3).iter().sum::<u128>());
        let sizes: BTreeSet<usize> = classes.iter().map(Vec::len).collect();
        assert_eq!(sizes, BTreeSet::from([3, 6]));
    }

    #[test]
    fn difference_sizes() {
        let cx = host3();
        assert_eq!(rn_difference(&cx, 1, 2).unwrap().len(), 2 * guest_pairs(&cx, 1).len());
        assert!(rn_difference(&cx, 1, 1).is_err());
    }

    #[test]
    fn amenability_small() {
        let cx = host3();
        let pts = sample_points(&cx, 6, 40, 1);
        let r = amenability_values(&cx, 1, 4, 6, &pts, Exec::default()).unwrap();
        assert!(r.row_sums && r.per_h, "{r:?}");
        assert!(r.max_defect <= r.bound, "{r:?}");
        assert!(r.max_defect > BigRational::zero());
    }

    #[test]
    fn samples_are_deterministic() {
        let cx = host5();
        assert_eq!(sample_points(&cx, 4, 30, 3), sample_points(&cx, 4, 30, 3));
    }

    #[test]
    fn kinds_in_basis() {
        let cx = host3();
        assert!(basis(&cx, 1).iter().all(|g| matches!(g.kind, Kind::Beta | Kind::Delta(_))));
    }
}
