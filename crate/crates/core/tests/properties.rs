//! Randomised invariants of the groupoid calculus, the symbol algebra and
//! the limit groups.

mod support;

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use cgk::diagram::Route;
use cgk::embedding::Embedded;
use cgk::fixtures;
use cgk::groupoid::{self, basis, invert, Element};
use cgk::ktheory::{class_of_clopen, element_equal, element_positive, k0_presentation, DirectLimitGroup, GroupElement, SEARCH_DEPTH};
use cgk::star_algebra::{equal, multiply, FormalElement};

use support::{check_compose, host3};

struct World {
    cx: Embedded,
    elems: Vec<Element>,
    /// Level-1 elements and level-2 elements on one level-1 cylinder, so
    /// that random products are rarely empty.
    dense: Vec<Element>,
}

fn world() -> &'static World {
    static W: OnceLock<World> = OnceLock::new();
    W.get_or_init(|| {
        let cx = host3(7);
        let mut elems = basis(&cx, 1);
        elems.extend(basis(&cx, 2));
        let dense = elems.iter().filter(|g| g.level() == 1 || (g.p[0] == 0 && g.q[0] == 0)).cloned().collect();
        World { cx, elems, dense }
    })
}

fn fib() -> &'static DirectLimitGroup {
    static G: OnceLock<DirectLimitGroup> = OnceLock::new();
    G.get_or_init(|| k0_presentation(&fixtures::fib(16)))
}

fn formal(picks: &[(usize, i64)]) -> FormalElement {
    let w = world();
    let mut f = FormalElement::zero();
    for &(i, c) in picks {
        f.add_term(w.dense[i % w.dense.len()].clone(), BigRational::from_integer(BigInt::from(c)));
    }
    f
}

fn picks() -> impl Strategy<Value = Vec<(usize, i64)>> {
    prop::collection::vec((any::<usize>(), -3i64..=3), 1..4)
}

fn fib_element() -> impl Strategy<Value = GroupElement> {
    (1usize..5, -20i64..20, -20i64..20).prop_map(|(l, a, b)| GroupElement::new(l, &[a, b]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inversion_is_an_involution(i in any::<usize>()) {
        let w = world();
        let g = &w.elems[i % w.elems.len()];
        prop_assert_eq!(&invert(&invert(g)), g);
        groupoid::validate(&w.cx, &invert(g)).unwrap();
    }

    #[test]
    fn composition_matches_the_oracle(i in any::<usize>(), j in any::<usize>()) {
        let w = world();
        let a = &w.elems[i % w.elems.len()];
        let b = &w.elems[j % w.elems.len()];
        let list = groupoid::compose(&w.cx, a, b).unwrap();
        let m = a.q.len().min(b.p.len());
        if a.q[..m] == b.p[..m] {
            prop_assert!(check_compose(&w.cx, a, b, &list).is_ok());
        } else {
            prop_assert!(list.is_empty());
        }
    }

    #[test]
    fn adjoint_reverses_products(f in picks(), g in picks()) {
        let w = world();
        let (f, g) = (formal(&f), formal(&g));
        let fg = multiply(&w.cx, &f, &g).unwrap();
        let lhs = fg.adjoint();
        let rhs = multiply(&w.cx, &g.adjoint(), &f.adjoint()).unwrap();
        prop_assert!(equal(&w.cx, &lhs, &rhs).unwrap());
    }

    #[test]
    fn products_associate(f in picks(), g in picks(), h in picks()) {
        let w = world();
        let (f, g, h) = (formal(&f), formal(&g), formal(&h));
        let left = multiply(&w.cx, &multiply(&w.cx, &f, &g).unwrap(), &h).unwrap();
        let right = multiply(&w.cx, &f, &multiply(&w.cx, &g, &h).unwrap()).unwrap();
        prop_assert!(equal(&w.cx, &left, &right).unwrap());
    }

    #[test]
    fn limit_equality_is_reflexive_symmetric_and_push_compatible(a in fib_element(), b in fib_element(), k in 0usize..4) {
        let g = fib();
        prop_assert!(element_equal(g, &a, &a, SEARCH_DEPTH).unwrap().is_yes());
        let ab = element_equal(g, &a, &b, SEARCH_DEPTH).unwrap();
        let ba = element_equal(g, &b, &a, SEARCH_DEPTH).unwrap();
        prop_assert_eq!(ab.is_yes(), ba.is_yes());
        prop_assert_eq!(ab.is_no(), ba.is_no());
        let pushed = g.push(&a, a.level + k).unwrap();
        prop_assert!(element_equal(g, &a, &pushed, SEARCH_DEPTH).unwrap().is_yes());
    }

    #[test]
    fn positivity_agrees_with_the_state(a in fib_element()) {
        let g = fib();
        let v = element_positive(g, &a, SEARCH_DEPTH).unwrap();
        let s = g.pairing(&a).unwrap();
        if s > 1e-6 {
            prop_assert!(v.is_yes());
        } else if s < -1e-6 {
            prop_assert!(v.is_no());
        }
        if a.is_nonnegative() {
            prop_assert!(v.is_yes());
        }
    }

    #[test]
    fn clopen_classes_add_and_push(seed in any::<u64>(), split in 0usize..4) {
        let w = world();
        let d = &w.cx.host;
        let routes = d.routes(2);
        let p = &routes[(seed as usize) % routes.len()];
        let kids = d.refine_cylinder(p);
        let (a, b) = kids.split_at(split.min(kids.len()));
        let whole = class_of_clopen(d, std::slice::from_ref(p), 4).unwrap();
        let ca = class_of_clopen(d, a, 4).unwrap();
        let cb = class_of_clopen(d, b, 4).unwrap();
        let sum: Vec<BigInt> = ca.coords.iter().zip(&cb.coords).map(|(x, y)| x + y).collect();
        prop_assert_eq!(&sum, &whole.coords);
        let g = k0_presentation(d);
        let low = class_of_clopen(d, std::slice::from_ref(p), 2).unwrap();
        prop_assert_eq!(g.push(&low, 4).unwrap(), whole);
        let root: Vec<Route> = vec![Route::new()];
        prop_assert_eq!(class_of_clopen(d, &root, 1).unwrap(), g.order_unit.clone());
    }
}

#[test]
fn random_products_are_mostly_nonzero() {
    let w = world();
    let mut nonzero = 0;
    for i in 0..50usize {
        let f = formal(&[(i * 7919, 1)]);
        let g = formal(&[(i * 104729 + 3, 1)]);
        nonzero += usize::from(!multiply(&w.cx, &f, &g).unwrap().is_empty());
    }
    assert!(nonzero >= 10, "{nonzero}");
}
