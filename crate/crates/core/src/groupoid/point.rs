//! Points of the path space up to the behaviour of every element of bounded
//! level, and truncated pairs.
//!
//! A [`Point`] fixes a prefix and describes the rest by a [`Tail`]: a finite
//! run of guest-image edges with given sides, followed by a plain edge or by
//! one side forever. The guest edges themselves are left free. Every element
//! whose level is at most the prefix length acts on all points of such a
//! cell in the same way and carries the free guest edges along unchanged,
//! so a cell maps to a cell.

use smallvec::SmallVec;

use super::{Element, GroupoidError, Kind};
use crate::diagram::Route;
use crate::embedding::{Embedded, Side};

/// Longest explicit run used by [`tail_heads`].
pub const TAIL_HEAD: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TailEnd {
    /// A plain edge follows, then anything.
    Plain,
    /// Guest-image edges of one side forever.
    Repeat(Side),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tail {
    pub sides: SmallVec<[Side; 4]>,
    pub end: TailEnd,
}

impl Tail {
    pub fn plain() -> Tail {
        Tail { sides: SmallVec::new(), end: TailEnd::Plain }
    }

    pub fn repeat(s: Side) -> Tail {
        Tail { sides: SmallVec::new(), end: TailEnd::Repeat(s) }
    }

    /// Drops trailing sides already implied by the repeated side.
    pub fn normalize(&mut self) {
        if let TailEnd::Repeat(s) = self.end {
            while self.sides.last() == Some(&s) {
                self.sides.pop();
            }
        }
    }

    fn first(&self) -> Option<Side> {
        match (self.sides.first(), self.end) {
            (Some(&s), _) => Some(s),
            (None, TailEnd::Repeat(s)) => Some(s),
            (None, TailEnd::Plain) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub prefix: Route,
    pub tail: Tail,
}

impl Point {
    pub fn new(prefix: &[u16], tail: Tail) -> Point {
        let mut tail = tail;
        tail.normalize();
        Point { prefix: Route::from_slice(prefix), tail }
    }

    pub fn plain(prefix: &[u16]) -> Point {
        Point::new(prefix, Tail::plain())
    }

    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    /// Image under `g`, or `None` off the source of `g`. Needs a prefix at
    /// least as long as the level of `g`.
    pub fn apply(&self, cx: &Embedded, g: &Element) -> Option<Point> {
        let (n, k) = (g.level(), self.len());
        if k < n || self.prefix[..n] != g.p[..] {
            return None;
        }
        let mut y = self.clone();
        y.prefix[..n].copy_from_slice(&g.q);
        let s = match g.kind {
            Kind::Beta => return Some(y),
            Kind::Delta(s) | Kind::Lambda(s) | Kind::Alpha(s) => s,
        };
        if let Kind::Lambda(_) | Kind::Alpha(_) = g.kind {
            for pos in n..k {
                match cx.side_of(pos + 1, self.prefix[pos]) {
                    Some((t, f)) if t == s => {
                        if let Kind::Lambda(_) = g.kind {
                            y.prefix[pos] = cx.image(s.flip(), pos + 1, f);
                        }
                    }
                    _ => return None,
                }
            }
            if !self.tail.sides.is_empty() || self.tail.end != TailEnd::Repeat(s) {
                return None;
            }
            if let Kind::Lambda(_) = g.kind {
                y.tail.end = TailEnd::Repeat(s.flip());
            }
            return Some(y);
        }
        for pos in n..k {
            match cx.side_of(pos + 1, self.prefix[pos]) {
                Some((t, f)) if t == s => y.prefix[pos] = cx.image(s.flip(), pos + 1, f),
                Some((_, f)) if pos > n => {
                    y.prefix[pos] = cx.image(s, pos + 1, f);
                    return Some(y);
                }
                None if pos > n => return Some(y),
                _ => return None,
            }
        }
        if k == n && self.tail.first() != Some(s) {
            return None;
        }
        let tail = &mut y.tail;
        for side in tail.sides.iter_mut() {
            if *side == s {
                *side = s.flip();
            } else {
                *side = s;
                tail.normalize();
                return Some(y);
            }
        }
        match tail.end {
            TailEnd::Plain => {}
            TailEnd::Repeat(t) if t == s => tail.end = TailEnd::Repeat(s.flip()),
            TailEnd::Repeat(_) => tail.sides.push(s),
        }
        tail.normalize();
        Some(y)
    }
}

/// Representative tails at host vertex `v` of `V_k`: runs of length up to
/// [`TAIL_HEAD`] followed by each possible end. Only the plain tail exists
/// off the guest image.
pub fn tail_heads(cx: &Embedded, k: usize, v: usize) -> Vec<Tail> {
    if cx.guest_vertex(k, v).is_none() {
        return vec![Tail::plain()];
    }
    let ends = [TailEnd::Plain, TailEnd::Repeat(Side::Zero), TailEnd::Repeat(Side::One)];
    let mut out = Vec::new();
    for len in 0..=TAIL_HEAD {
        for bits in 0..1u32 << len {
            for end in ends {
                let sides = (0..len).map(|i| Side::from_index((bits >> i) as usize & 1)).collect();
                let mut t = Tail { sides, end };
                t.normalize();
                out.push(t);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Cells of the cylinder `U(p)` with prefixes of length `k`.
pub fn cells(cx: &Embedded, p: &[u16], k: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for x in cx.host.extensions(p, k) {
        let v = cx.host.terminal(&x);
        for tail in tail_heads(cx, k, v) {
            out.push(Point { prefix: x.clone(), tail });
        }
    }
    out
}

/// How the two truncated paths continue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TailTag {
    /// Both continue along one common path.
    Identity,
    /// Both continue along one guest path, `x` on the side of its last edge
    /// and `y` on the other side.
    Paired,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruncatedPair {
    pub x: Route,
    pub y: Route,
    pub tag: TailTag,
}

/// Whether some continuation of the pair allowed by its tag lies in `g`.
pub fn member(cx: &Embedded, g: &Element, pair: &TruncatedPair) -> Result<bool, GroupoidError> {
    let len = pair.x.len();
    if len < g.level() + 1 || pair.y.len() != len {
        return Err(GroupoidError::Truncation { len, level: g.level() });
    }
    match pair.tag {
        TailTag::Identity => {
            let v = cx.host.terminal(&pair.x);
            if v != cx.host.terminal(&pair.y) {
                return Ok(false);
            }
            Ok(tail_heads(cx, len, v).into_iter().any(|tail| {
                let x = Point { prefix: pair.x.clone(), tail: tail.clone() };
                x.apply(cx, g) == Some(Point { prefix: pair.y.clone(), tail })
            }))
        }
        TailTag::Paired => {
            let (sx, sy) = (cx.side_of(len, pair.x[len - 1]), cx.side_of(len, pair.y[len - 1]));
            let (Some((a, f)), Some((b, h))) = (sx, sy) else { return Ok(false) };
            if a == b || f != h {
                return Ok(false);
            }
            let x = Point::new(&pair.x, Tail::repeat(a));
            Ok(x.apply(cx, g) == Some(Point::new(&pair.y, Tail::repeat(b))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::tests::host3;

    #[test]
    fn tail_head_count() {
        let cx = host3();
        let u = cx.host.vertex_index(2, "u").unwrap();
        let v = cx.host.vertex_index(2, "v").unwrap();
        assert_eq!(tail_heads(&cx, 2, v).len(), 1);
        let heads = tail_heads(&cx, 2, u);
        assert!(heads.iter().all(|t| t.sides.len() <= TAIL_HEAD));
        assert!(heads.contains(&Tail::repeat(Side::One)));
    }

    #[test]
    fn delta_regimes() {
        let cx = host3();
        let p = cx.host.route_from_labels(&["ru0"]).unwrap();
        let g = Element::delta(Side::One, &p, &p);
        let x1 = cx.image(Side::One, 2, 0);
        let x0 = cx.image(Side::Zero, 2, 0);
        let x = Point::new(&[p[0], x1], Tail::repeat(Side::One));
        assert_eq!(x.apply(&cx, &g), Some(Point::new(&[p[0], x0], Tail::repeat(Side::Zero))));
        let x = Point::new(&[p[0], x1], Tail { sides: [Side::Zero].into_iter().collect(), end: TailEnd::Plain });
        assert_eq!(x.apply(&cx, &g).unwrap().tail.sides.as_slice(), &[Side::One]);
        let x = Point::new(&[p[0], x1], Tail::repeat(Side::Zero));
        let y = x.apply(&cx, &g).unwrap();
        assert_eq!(y.tail, Tail { sides: [Side::One].into_iter().collect(), end: TailEnd::Repeat(Side::Zero) });
        assert_eq!(y.apply(&cx, &crate::groupoid::invert(&g)), Some(x.clone()));
        assert_eq!(Point::new(&[p[0], x0], Tail::plain()).apply(&cx, &g), None);
        assert_eq!(Point::new(&p, Tail::plain()).apply(&cx, &g), None);
    }

    #[test]
    fn truncated_membership() {
        let cx = host3();
        let p = cx.host.route_from_labels(&["ru0"]).unwrap();
        let g = Element::delta(Side::One, &p, &p);
        let lam = Element::lambda(Side::One, &p, &p);
        let (x1, x0) = (cx.image(Side::One, 2, 0), cx.image(Side::Zero, 2, 0));
        let pair = TruncatedPair { x: [p[0], x1].into_iter().collect(), y: [p[0], x0].into_iter().collect(), tag: TailTag::Paired };
        assert!(member(&cx, &g, &pair).unwrap());
        assert!(member(&cx, &lam, &pair).unwrap());
        let pair = TruncatedPair { tag: TailTag::Identity, ..pair };
        assert!(member(&cx, &g, &pair).unwrap());
        assert!(!member(&cx, &lam, &pair).unwrap());
        let b = Element::beta(&p, &p);
        let same = TruncatedPair { x: pair.x.clone(), y: pair.x.clone(), tag: TailTag::Identity };
        assert!(member(&cx, &b, &same).unwrap());
        assert!(!member(&cx, &b, &pair).unwrap());
        assert!(member(&cx, &b, &TruncatedPair { x: p.clone(), y: p.clone(), tag: TailTag::Identity }).is_err());
    }
}
