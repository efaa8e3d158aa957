//! Small reference diagrams used by tests, benches and the CLI.

use crate::diagram::{Diagram, RawDiagram, RawEdge, RawLevel, ROOT};

fn build(depth: usize, names: &[&str], level: impl Fn(usize) -> Vec<(String, String, String)>) -> Diagram {
    let raw = RawDiagram {
        levels: (0..depth)
            .map(|_| RawLevel { vertices: names.iter().map(|s| s.to_string()).collect() })
            .collect(),
        edges: (1..=depth)
            .map(|n| {
                level(n)
                    .into_iter()
                    .map(|(label, from, to)| RawEdge { label, from, to })
                    .collect()
            })
            .collect(),
    };
    Diagram::validate(&raw).expect("fixture is valid")
}

/// One vertex and one edge per level.
pub fn single_loop(depth: usize) -> Diagram {
    single_loop_k(depth, 1)
}

/// One vertex per level with `k` parallel edges.
pub fn single_loop_k(depth: usize, k: usize) -> Diagram {
    build(depth, &["x"], |n| {
        let from = if n == 1 { ROOT } else { "x" };
        (0..k)
            .map(|i| {
                let label = if k == 1 { "e".to_string() } else { format!("e{i}") };
                (label, from.to_string(), "x".to_string())
            })
            .collect()
    })
}

/// Two vertices `a`, `b`; edges `a->a`, `a->b`, `b->a` after level 1.
pub fn fib(depth: usize) -> Diagram {
    build(depth, &["a", "b"], |n| {
        let t = |l: &str, f: &str, to: &str| (l.to_string(), f.to_string(), to.to_string());
        if n == 1 {
            vec![t("ra", ROOT, "a"), t("rb", ROOT, "b")]
        } else {
            vec![t("aa", "a", "a"), t("ab", "a", "b"), t("ba", "b", "a")]
        }
    })
}

/// Two vertices `u`, `v` with `k` parallel edges for every ordered pair and
/// `k` root edges to each vertex.
pub fn host(k: usize, depth: usize) -> Diagram {
    build(depth, &["u", "v"], |n| {
        let mut out = Vec::new();
        let sources: Vec<(&str, &str)> = if n == 1 { vec![("r", ROOT)] } else { vec![("u", "u"), ("v", "v")] };
        for (tag, from) in sources {
            for to in ["u", "v"] {
                for i in 0..k {
                    out.push((format!("{tag}{to}{i}"), from.to_string(), to.to_string()));
                }
            }
        }
        out
    })
}

/// Guest with one vertex and one loop per level.
pub fn guest_z(depth: usize) -> Diagram {
    build(depth, &["w"], |n| {
        let from = if n == 1 { ROOT } else { "w" };
        vec![("f".to_string(), from.to_string(), "w".to_string())]
    })
}

/// Guest with one vertex and two loops per level.
pub fn guest_dyadic(depth: usize) -> Diagram {
    build(depth, &["w"], |n| {
        let from = if n == 1 { ROOT } else { "w" };
        (0..2)
            .map(|i| (format!("f{i}"), from.to_string(), "w".to_string()))
            .collect()
    })
}

/// Two vertices that never communicate after level 1.
pub fn two_chains(depth: usize) -> Diagram {
    build(depth, &["a", "b"], |n| {
        let t = |l: &str, f: &str, to: &str| (l.to_string(), f.to_string(), to.to_string());
        if n == 1 {
            vec![t("ra", ROOT, "a"), t("rb", ROOT, "b")]
        } else {
            vec![t("aa", "a", "a"), t("bb", "b", "b")]
        }
    })
}
