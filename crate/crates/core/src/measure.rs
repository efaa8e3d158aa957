//! Invariant measures as harmonic vertex weights.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::diagram::{Diagram, Route};
use crate::embedding::{Embedded, Side};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("power iteration did not converge within {0} steps")]
    NonConvergence(usize),
    #[error("depth {depth} exceeds diagram depth {max}")]
    Depth { depth: usize, max: usize },
    #[error("cylinders overlap")]
    Overlap,
}

/// Exact or binary64 quantity.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx(_) => None,
        }
    }

    pub fn zero_like(exact: bool) -> Value {
        if exact {
            Value::Exact(BigRational::zero())
        } else {
            Value::Approx(0.0)
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => Value::Approx(self.to_f64() + other.to_f64()),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Value {
        match self {
            Value::Exact(a) => Value::Exact(a * k),
            Value::Approx(x) => Value::Approx(x * k.to_f64().unwrap_or(f64::NAN)),
        }
    }

    /// `self <= bound`, exactly when possible and within `tol` otherwise.
    pub fn at_most(&self, bound: &BigRational, tol: f64) -> bool {
        match self {
            Value::Exact(a) => a <= bound,
            Value::Approx(x) => *x <= bound.to_f64().unwrap_or(f64::NAN) + tol,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Approx(x) => write!(f, "{x:e}"),
        }
    }
}

/// Decimal expansion of a rational truncated to `digits` fractional digits.
pub fn decimal(r: &BigRational, digits: usize) -> String {
    let neg = r.is_negative();
    let r = r.abs();
    let int = r.numer() / r.denom();
    let mut rem = r.numer() % r.denom();
    let mut s = format!("{}{}", if neg { "-" } else { "" }, int);
    if !rem.is_zero() {
        s.push('.');
        let ten = BigInt::from(10);
        for _ in 0..digits {
            rem *= &ten;
            let d = &rem / r.denom();
            rem %= r.denom();
            s.push_str(&d.to_string());
            if rem.is_zero() {
                break;
            }
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Rational Perron vector of the last incidence matrix.
    PerronExact,
    /// Binary64 Perron vector of the last incidence matrix.
    PerronFloat,
    /// Uniform weights at the last level (non-square last matrix).
    PathCount,
}

/// Per-level vertex weights with `w(v0) = 1`.
#[derive(Clone, Debug)]
pub struct LevelWeights {
    pub method: Method,
    pub tol: f64,
    exact: Option<Vec<Vec<BigRational>>>,
    approx: Vec<Vec<f64>>,
}

impl LevelWeights {
    pub fn depth(&self) -> usize {
        self.approx.len() - 1
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn weight(&self, n: usize, v: usize) -> Value {
        match &self.exact {
            Some(w) => Value::Exact(w[n][v].clone()),
            None => Value::Approx(self.approx[n][v]),
        }
    }

    pub fn exact_weight(&self, n: usize, v: usize) -> Option<&BigRational> {
        self.exact.as_ref().map(|w| &w[n][v])
    }

    pub fn float_weight(&self, n: usize, v: usize) -> f64 {
        self.approx[n][v]
    }

    /// Largest `|w(v) - sum of w(t(e))|` over levels below the depth.
    pub fn harmonic_defect(&self, d: &Diagram) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..self.depth() {
            for v in 0..d.vertex_count(n) {
                let s: f64 = d.out_edges(n, v).iter().map(|&e| self.approx[n + 1][d.edge(n + 1, e).to]).sum();
                worst = worst.max((s - self.approx[n][v]).abs());
            }
        }
        worst
    }

    /// Exact harmonic identity at every level (only for exact weights).
    pub fn is_exactly_harmonic(&self, d: &Diagram) -> bool {
        let Some(w) = &self.exact else { return false };
        (0..self.depth()).all(|n| {
            (0..d.vertex_count(n)).all(|v| {
                let s: BigRational = d.out_edges(n, v).iter().map(|&e| w[n + 1][d.edge(n + 1, e).to].clone()).sum();
                s == w[n][v]
            })
        })
    }

    /// JSON map level -> vertex -> decimal string.
    pub fn to_json(&self, d: &Diagram) -> String {
        let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for n in 0..=self.depth() {
            let row = out.entry(format!("{n:03}")).or_default();
            for v in 0..d.vertex_count(n) {
                let s = match &self.exact {
                    Some(w) => decimal(&w[n][v], 30),
                    None => format!("{:.17e}", self.approx[n][v]),
                };
                row.insert(d.vertex_name(n, v).to_string(), s);
            }
        }
        serde_json::to_string_pretty(&out).expect("serializable")
    }
}

fn continued_fraction(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a as f64;
        if frac.abs() < 1e-13 {
            break;
        }
        y = 1.0 / frac;
    }
    (k1 != 0).then(|| BigRational::new(BigInt::from(h1), BigInt::from(k1)))
}

fn rational_eigenvector(m: &[Vec<u64>], r: &[f64]) -> Option<Vec<BigRational>> {
    let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return None;
    }
    let cand: Vec<BigRational> = r.iter().map(|x| continued_fraction(x / min, 1_000_000)).collect::<Option<_>>()?;
    let image: Vec<BigRational> = m
        .iter()
        .map(|row| row.iter().zip(&cand).map(|(&a, c)| c * BigInt::from(a)).sum())
        .collect();
    let lambda = &image[0] / &cand[0];
    image.iter().zip(&cand).all(|(i, c)| *i == c * &lambda).then_some(cand)
}

fn perron(m: &[Vec<u64>], tol: f64) -> Result<Vec<f64>, MeasureError> {
    const BUDGET: usize = 100_000;
    let n = m.len();
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..BUDGET {
        let mut next: Vec<f64> = m.iter().map(|row| row.iter().zip(&r).map(|(&a, x)| a as f64 * x).sum()).collect();
        let s: f64 = next.iter().sum();
        if s <= 0.0 {
            return Err(MeasureError::NonConvergence(0));
        }
        next.iter_mut().for_each(|x| *x /= s);
        let diff = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r = next;
        if diff < tol * 1e-3 {
            return Ok(r);
        }
    }
    Err(MeasureError::NonConvergence(BUDGET))
}

/// Harmonic weights from the Perron vector of the last incidence matrix,
/// propagated backwards and normalised at the root.
pub fn solve_invariant_measure(d: &Diagram, depth: usize, tol: f64) -> Result<LevelWeights, MeasureError> {
    if depth == 0 || depth > d.depth() {
        return Err(MeasureError::Depth { depth, max: d.depth() });
    }
    let last = d.incidence_matrix(depth).expect("level in range").entries;
    let square = last.len() == last[0].len() && depth > 1;
    let (method, top_f, top_q) = if square {
        let r = perron(&last, tol)?;
        match rational_eigenvector(&last, &r) {
            Some(q) => (Method::PerronExact, r, Some(q)),
            None => (Method::PerronFloat, r, None),
        }
    } else {
        let k = d.vertex_count(depth);
        (Method::PathCount, vec![1.0; k], Some(vec![BigRational::one(); k]))
    };
    let mut approx = vec![Vec::new(); depth + 1];
    approx[depth] = top_f;
    for n in (0..depth).rev() {
        approx[n] = (0..d.vertex_count(n))
            .map(|v| d.out_edges(n, v).iter().map(|&e| approx[n + 1][d.edge(n + 1, e).to]).sum())
            .collect();
    }
    let root = approx[0][0];
    approx.iter_mut().flatten().for_each(|x| *x /= root);
    let exact = top_q.map(|top| {
        let mut w = vec![Vec::new(); depth + 1];
        w[depth] = top;
        for n in (0..depth).rev() {
            w[n] = (0..d.vertex_count(n))
                .map(|v| d.out_edges(n, v).iter().map(|&e| w[n + 1][d.edge(n + 1, e).to].clone()).sum())
                .collect();
        }
        let root = w[0][0].clone();
        w.iter_mut().flatten().for_each(|x| *x /= &root);
        w
    });
    if let Some(w) = &exact {
        for (a, row) in approx.iter_mut().zip(w) {
            *a = row.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        }
    }
    Ok(LevelWeights { method, tol, exact, approx })
}

/// Measure of a disjoint union of cylinders.
pub fn clopen_measure(d: &Diagram, w: &LevelWeights, cylinders: &[Route]) -> Result<Value, MeasureError> {
    let mut sorted: Vec<&Route> = cylinders.iter().collect();
    sorted.sort();
    if sorted.windows(2).any(|p| p[1].starts_with(p[0])) {
        return Err(MeasureError::Overlap);
    }
    let mut total = Value::zero_like(w.is_exact());
    for p in cylinders {
        if p.len() > w.depth() {
            return Err(MeasureError::Depth { depth: p.len(), max: w.depth() });
        }
        total = total.add(&w.weight(p.len(), d.terminal(p)));
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub level: usize,
    pub values: [Value; 2],
    pub bound: BigRational,
    pub pass: bool,
}

/// Measure of the image cylinders of all guest paths of length `n`, per side,
/// against `2^{-n}`.
pub fn xi_cylinder_bound(e: &Embedded, w: &LevelWeights, n: usize) -> Result<BoundReport, MeasureError> {
    if n > w.depth() || n > e.depth() {
        return Err(MeasureError::Depth { depth: n, max: w.depth().min(e.depth()) });
    }
    let guest = e.guest_routes(n);
    let value = |s: Side| {
        let images: Vec<Route> = guest.iter().map(|g| e.image_route(s, g)).collect();
        clopen_measure(&e.host, w, &images)
    };
    let values = [value(Side::Zero)?, value(Side::One)?];
    let bound = BigRational::new(BigInt::one(), BigInt::from(2).pow(n as u32));
    let pass = values.iter().all(|v| v.at_most(&bound, w.tol));
    Ok(BoundReport { level: n, values, bound, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn single_loop_weights_are_one() {
        let d = fixtures::single_loop(5);
        let w = solve_invariant_measure(&d, 5, DEFAULT_TOL).unwrap();
        assert_eq!(w.method, Method::PerronExact);
        for n in 0..=5 {
            assert_eq!(w.exact_weight(n, 0).unwrap(), &BigRational::one());
        }
    }

    #[test]
    fn host3_weights() {
        let d = fixtures::host(3, 4);
        let w = solve_invariant_measure(&d, 4, DEFAULT_TOL).unwrap();
        assert!(w.is_exactly_harmonic(&d));
        for n in 0..=4 {
            for v in 0..d.vertex_count(n) {
                assert_eq!(w.exact_weight(n, v).unwrap(), &q(1, 6i64.pow(n as u32)));
            }
        }
        let c = d.routes(2);
        assert_eq!(clopen_measure(&d, &w, &c[..1]).unwrap(), Value::Exact(q(1, 36)));
        assert_eq!(clopen_measure(&d, &w, &[]).unwrap(), Value::Exact(q(0, 1)));
        let full = d.routes(1);
        assert_eq!(clopen_measure(&d, &w, &full).unwrap(), Value::Exact(q(1, 1)));
        assert!(matches!(clopen_measure(&d, &w, &[full[0].clone(), c[0].clone()]), Err(MeasureError::Overlap)));
    }

    #[test]
    fn fib_ratio_is_golden() {
        let d = fixtures::fib(20);
        let w = solve_invariant_measure(&d, 20, DEFAULT_TOL).unwrap();
        assert_eq!(w.method, Method::PerronFloat);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        for n in 1..=20 {
            assert!((w.float_weight(n, 0) / w.float_weight(n, 1) - phi).abs() < 1e-9);
        }
        assert!(w.harmonic_defect(&d) < 1e-12);
    }

    #[test]
    fn decimals() {
        assert_eq!(decimal(&q(1, 8), 10), "0.125");
        assert_eq!(decimal(&q(-1, 3), 4), "-0.3333");
    }

    #[test]
    fn guest_image_bounds() {
        let e = Embedded::auto(fixtures::host(3, 3), fixtures::guest_z(3)).unwrap();
        let w = solve_invariant_measure(&e.host, 3, DEFAULT_TOL).unwrap();
        let r = xi_cylinder_bound(&e, &w, 2).unwrap();
        assert_eq!(r.values[0], Value::Exact(q(1, 36)));
        assert!(r.pass);
        assert!(xi_cylinder_bound(&e, &w, 0).unwrap().pass);
        let e = Embedded::auto(fixtures::host(5, 3), fixtures::guest_dyadic(3)).unwrap();
        let w = solve_invariant_measure(&e.host, 3, DEFAULT_TOL).unwrap();
        let r = xi_cylinder_bound(&e, &w, 3).unwrap();
        assert_eq!(r.values[1], Value::Exact(q(8, 1000)));
        assert!(r.pass);
    }
}
