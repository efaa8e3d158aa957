//! Command-line front end.
//!
//! Every command prints one report, as JSON or text, and exits with 0 when
//! all of its checks pass, 1 when a check fails and 2 on usage, input or
//! precondition errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::diagram::{Diagram, DiagramError, Route};
use crate::embedding::{auto_embed, prepare_host, verify_embedding, Embedded, Embedding};
use crate::groupoid::{
    self, amenability_values, basis, class_size, compose, intersect, invert, rn_class, rn_class_bruteforce, rn_difference,
    sample_points, Element, Point,
};
use crate::ktheory::{self, k0_presentation, ktheory_report, prop_k30_check, smith_invariants};
use crate::measure::{self, solve_invariant_measure, xi_cylinder_bound};
use crate::par::Exec;
use crate::star_algebra::{self, build_vp, k15_table, k18_check, taf_check, trace_bound_check};

#[derive(Parser, Debug)]
#[command(name = "cgk", version, about = "Exact checks for an equivalence relation built from a doubly embedded Bratteli diagram")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Run every loop on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the structural invariants of a diagram file.
    Validate { file: PathBuf },
    /// Contract a diagram between the given cut levels.
    Telescope {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        cuts: Vec<usize>,
    },
    /// Verify an embedding, or construct one when none is given.
    Embed(Inputs),
    /// Telescope and split the host until the size conditions hold.
    PrepareHost {
        #[arg(long)]
        host: PathBuf,
        #[arg(long)]
        guest: PathBuf,
    },
    /// Path counts at a level, optionally with every route.
    Paths {
        file: PathBuf,
        #[arg(long)]
        level: usize,
        #[arg(long)]
        list: bool,
    },
    /// Invariant measure weights; with a guest, also the image cylinder bounds.
    Measure {
        file: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = measure::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        guest: Option<PathBuf>,
        #[arg(long)]
        emb: Option<PathBuf>,
    },
    #[command(subcommand)]
    Relation(RelationCmd),
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    #[command(subcommand)]
    Ktheory(KCmd),
}

#[derive(Args, Debug, Clone)]
pub struct Inputs {
    #[arg(long)]
    pub host: PathBuf,
    #[arg(long)]
    pub guest: PathBuf,
    /// Embedding file; constructed automatically when omitted.
    #[arg(long)]
    pub emb: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum RelationCmd {
    /// Closure of the basis under composition, intersection and inversion.
    Axioms {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        depth: usize,
    },
    /// Classes of sampled points against the closed-form class.
    Classes {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        len: Option<usize>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Betas covering the difference of two levels of the relation.
    Difference {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
    },
    /// Row sums and defects of the averaging functions.
    Amenability {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        len: Option<usize>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum AlgebraCmd {
    /// Product table of diagonal `a` symbols against `b` and `d` symbols.
    K15 {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        q_limit: Option<usize>,
    },
    /// Commutation and splitting against the level-m diagonal projection.
    K18 {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
    /// Commutation, compression membership and trace bound for the cut-down projection.
    Taf {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        n0: usize,
        #[arg(long)]
        l: usize,
    },
    /// The partial unitary attached to a host path (dot-separated labels).
    Vp {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        path: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum KCmd {
    /// Direct-limit presentation of a single diagram.
    Presentation {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        from: usize,
        #[arg(long)]
        to: Option<usize>,
    },
    /// Class and witness checks for host paths ending on the guest image.
    K30 {
        #[command(flatten)]
        inputs: Inputs,
        /// Single path (dot-separated labels); all paths up to --depth otherwise.
        #[arg(long)]
        path: Option<String>,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Both presentations, the class checks and the conclusions they feed.
    Report {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
}

/// Failure that maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::error::Error> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

type Res<T> = Result<T, UsageError>;

#[derive(Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Report of one command.
#[derive(Debug)]
pub struct Outcome {
    pub command: String,
    pub checks: Vec<CheckLine>,
    pub data: Json,
    pub text: Vec<String>,
}

impl Outcome {
    fn new(command: &str) -> Outcome {
        Outcome { command: command.into(), checks: Vec::new(), data: Json::Null, text: Vec::new() }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(CheckLine { name: name.into(), pass, detail: detail.into() });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let v = json!({
                    "command": self.command,
                    "pass": self.pass(),
                    "checks": self.checks,
                    "data": self.data,
                });
                serde_json::to_string_pretty(&v).expect("serializable") + "\n"
            }
            Format::Text => {
                let mut s = String::new();
                for line in &self.text {
                    s.push_str(line);
                    s.push('\n');
                }
                for c in &self.checks {
                    let tag = if c.pass { "PASS" } else { "FAIL" };
                    s.push_str(&format!("{tag} {}: {}\n", c.name, c.detail));
                }
                s
            }
        }
    }
}

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn load_diagram(path: &Path) -> Res<Diagram> {
    Diagram::from_json(&read(path)?).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn load(inputs: &Inputs) -> Res<Embedded> {
    let host = load_diagram(&inputs.host)?;
    let guest = load_diagram(&inputs.guest)?;
    match &inputs.emb {
        Some(p) => {
            let emb = Embedding::from_json(&host, &guest, &read(p)?)?;
            Ok(Embedded::new(host, guest, emb)?)
        }
        None => Ok(Embedded::auto(host, guest)?),
    }
}

fn parse_path(d: &Diagram, text: &str) -> Res<Route> {
    let labels: Vec<&str> = if text.is_empty() { Vec::new() } else { text.split('.').collect() };
    Ok(d.route_from_labels(&labels)?)
}

fn to_json<T: Serialize>(x: &T) -> Json {
    serde_json::to_value(x).expect("serializable")
}

/// Parses arguments, runs the command and writes the report. Returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match dispatch(&cli.command, exec) {
        Ok(outcome) => {
            let text = outcome.render(cli.format);
            let written = match &cli.output {
                Some(p) => std::fs::write(p, text).map_err(|e| e.to_string()),
                None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return 2;
            }
            if outcome.pass() {
                0
            } else {
                1
            }
        }
        Err(UsageError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

pub fn dispatch(cmd: &Command, exec: Exec) -> Res<Outcome> {
    match cmd {
        Command::Validate { file } => validate(file),
        Command::Telescope { file, cuts } => {
            let d = load_diagram(file)?.telescope(cuts)?;
            let mut o = Outcome::new("telescope");
            o.data = serde_json::from_str(&d.to_json())?;
            o.text.push(d.to_json());
            Ok(o)
        }
        Command::Embed(inputs) => embed(inputs),
        Command::PrepareHost { host, guest } => {
            let (h, g) = (load_diagram(host)?, load_diagram(guest)?);
            let p = prepare_host(&h, &g)?;
            let mut o = Outcome::new("prepare-host");
            o.data = json!({"steps": p.steps, "host": serde_json::from_str::<Json>(&p.diagram.to_json())?});
            o.text.extend(p.steps.iter().map(|s| format!("step: {s}")));
            o.text.push(p.diagram.to_json());
            Ok(o)
        }
        Command::Paths { file, level, list } => {
            let d = load_diagram(file)?;
            if *level > d.depth() {
                return Err(DiagramError::LevelOutOfRange { level: *level, depth: d.depth() }.into());
            }
            let counts = d.path_counts(*level);
            let mut o = Outcome::new("paths");
            let names = d.vertex_names(*level);
            o.text.extend(names.iter().zip(&counts).map(|(v, k)| format!("{v}: {k}")));
            let routes: Vec<String> = if *list { d.routes(*level).iter().map(|r| d.route_labels(r).join(".")).collect() } else { Vec::new() };
            o.text.extend(routes.iter().cloned());
            o.data = json!({
                "level": level,
                "counts": names.iter().zip(&counts).map(|(v, k)| (v.clone(), k.to_string())).collect::<std::collections::BTreeMap<_, _>>(),
                "routes": routes,
            });
            Ok(o)
        }
        Command::Measure { file, depth, tol, guest, emb } => {
            let d = load_diagram(file)?;
            let depth = depth.unwrap_or(d.depth());
            let w = solve_invariant_measure(&d, depth, *tol)?;
            let mut o = Outcome::new("measure");
            let defect = w.harmonic_defect(&d);
            o.check("harmonic", defect <= *tol, format!("defect {defect:.3e}, method {:?}", w.method));
            let mut data = json!({
                "method": format!("{:?}", w.method),
                "weights": serde_json::from_str::<Json>(&w.to_json(&d))?,
            });
            if let Some(g) = guest {
                let cx = load(&Inputs { host: file.clone(), guest: g.clone(), emb: emb.clone() })?;
                let mut bounds = Vec::new();
                for n in 1..=depth.min(cx.depth()) {
                    let b = xi_cylinder_bound(&cx, &w, n)?;
                    let vals: Vec<String> = b.values.iter().map(value_text).collect();
                    o.check(format!("image cylinders n={n}"), b.pass, format!("{} and {} <= {}", vals[0], vals[1], b.bound));
                    bounds.push(json!({"n": n, "values": vals, "bound": b.bound.to_string(), "pass": b.pass}));
                }
                data["image_bounds"] = Json::Array(bounds);
            }
            o.text.push(w.to_json(&d));
            o.data = data;
            Ok(o)
        }
        Command::Relation(r) => relation(r, exec),
        Command::Algebra(a) => algebra(a, exec),
        Command::Ktheory(k) => kcmd(k, exec),
    }
}

fn value_text(v: &measure::Value) -> String {
    match v {
        measure::Value::Exact(r) => r.to_string(),
        measure::Value::Approx(x) => format!("{x:.12e}"),
    }
}

fn validate(file: &Path) -> Res<Outcome> {
    let text = read(file)?;
    let mut o = Outcome::new("validate");
    match Diagram::from_json(&text) {
        Ok(d) => {
            let counts: Vec<usize> = (0..=d.depth()).map(|n| d.vertex_count(n)).collect();
            let window = d.simplicity_window();
            o.check("structure", true, format!("depth {}, vertices per level {counts:?}", d.depth()));
            o.text.push(format!("simplicity window: {}", window.map_or("none".into(), |w| w.to_string())));
            o.data = json!({"depth": d.depth(), "vertices": counts, "simplicity_window": window});
        }
        Err(DiagramError::Invalid(vs)) => {
            for v in &vs {
                o.check("structure", false, v.to_string());
            }
            o.data = json!({"violations": vs});
        }
        Err(e) => return Err(UsageError(format!("{}: {e}", file.display()))),
    }
    Ok(o)
}

fn embed(inputs: &Inputs) -> Res<Outcome> {
    let host = load_diagram(&inputs.host)?;
    let guest = load_diagram(&inputs.guest)?;
    let emb = match &inputs.emb {
        Some(p) => Embedding::from_json(&host, &guest, &read(p)?)?,
        None => auto_embed(&host, &guest)?,
    };
    let report = verify_embedding(&host, &guest, &emb);
    let mut o = Outcome::new("embed");
    for c in &report.checks {
        o.check(format!("level {} {}", c.level, c.name), c.pass, c.detail.clone());
    }
    o.data = json!({"embedding": serde_json::from_str::<Json>(&emb.to_json(&host, &guest))?, "checks": report.checks});
    if inputs.emb.is_none() {
        o.text.push(emb.to_json(&host, &guest));
    }
    Ok(o)
}

fn relation(cmd: &RelationCmd, exec: Exec) -> Res<Outcome> {
    match cmd {
        RelationCmd::Axioms { inputs, depth } => {
            let cx = load(inputs)?;
            let elems: Vec<Element> = (1..=*depth).flat_map(|n| basis(&cx, n)).collect();
            let rows = crate::par::map(exec, &elems, |x| -> Result<[usize; 4], groupoid::GroupoidError> {
                let mut bad = [0usize; 4];
                if invert(&invert(x)) != *x {
                    bad[0] += 1;
                }
                for y in &elems {
                    for (k, list) in [(1, compose(&cx, x, y)?), (2, intersect(&cx, x, y)?)] {
                        if !closed_and_disjoint(&cx, &list)? {
                            bad[k] += 1;
                        }
                    }
                    let mut a = intersect(&cx, x, y)?;
                    let mut b = intersect(&cx, y, x)?;
                    a.sort();
                    b.sort();
                    if a != b {
                        bad[3] += 1;
                    }
                }
                Ok(bad)
            });
            let mut bad = [0usize; 4];
            for r in rows {
                let r = r?;
                for k in 0..4 {
                    bad[k] += r[k];
                }
            }
            let pairs = elems.len() * elems.len();
            let mut o = Outcome::new("relation axioms");
            o.check("inversion is an involution", bad[0] == 0, format!("{} of {} elements fail", bad[0], elems.len()));
            o.check("composition closes", bad[1] == 0, format!("{} of {pairs} pairs fail", bad[1]));
            o.check("intersection closes", bad[2] == 0, format!("{} of {pairs} pairs fail", bad[2]));
            o.check("intersection is symmetric", bad[3] == 0, format!("{} of {pairs} pairs fail", bad[3]));
            o.data = json!({"elements": elems.len(), "pairs": pairs, "failures": bad});
            Ok(o)
        }
        RelationCmd::Classes { inputs, n, len, samples, seed } => {
            let cx = load(inputs)?;
            let len = len.unwrap_or(n + 2);
            if *n == 0 || len < n + 2 || len > cx.depth() {
                return Err(UsageError(format!("need 1 <= n and n + 2 <= len <= {}", cx.depth())));
            }
            let pts = sample_points(&cx, len, *samples, *seed);
            let rows = crate::par::map(exec, &pts, |x: &Route| {
                let p = Point::plain(x);
                let formula = rn_class(&cx, *n, &p);
                let brute = rn_class_bruteforce(&cx, *n, &p);
                (formula == brute, brute.len() as u128 == class_size(&cx, *n, x), brute.len())
            });
            let same = rows.iter().filter(|r| r.0).count();
            let sized = rows.iter().filter(|r| r.1).count();
            let mut o = Outcome::new("relation classes");
            o.check("class matches enumeration", same == rows.len(), format!("{same} of {} points", rows.len()));
            o.check("class size matches count", sized == rows.len(), format!("{sized} of {} points", rows.len()));
            o.data = json!({"n": n, "len": len, "points": rows.len(), "sizes": rows.iter().map(|r| r.2).collect::<Vec<_>>()});
            Ok(o)
        }
        RelationCmd::Difference { inputs, n, l } => {
            let cx = load(inputs)?;
            let diff = rn_difference(&cx, *n, *l)?;
            let mut o = Outcome::new("relation difference");
            o.data = serde_json::from_str(&groupoid::list_to_json(&cx, &diff))?;
            o.text.extend(diff.iter().map(|g| groupoid::display(&cx, g)));
            o.text.push(format!("{} elements", diff.len()));
            Ok(o)
        }
        RelationCmd::Amenability { inputs, n, l, len, samples, seed } => {
            let cx = load(inputs)?;
            let len = len.unwrap_or(l + 2);
            let pts = sample_points(&cx, len, *samples, *seed);
            let r = amenability_values(&cx, *n, *l, len, &pts, exec)?;
            let mut o = Outcome::new("relation amenability");
            o.check("row sums", r.row_sums, "every h_i row sums to 1");
            o.check("per-level sums", r.per_h, "sums are 0 inside the level and 2 outside");
            o.check("defect", r.max_defect <= r.bound, format!("{} <= {}", r.max_defect, r.bound));
            o.data = json!({
                "n": r.n, "l": r.l, "len": r.len, "points": r.points, "pairs": r.pairs,
                "max_defect": r.max_defect.to_string(), "bound": r.bound.to_string(),
            });
            Ok(o)
        }
    }
}

fn closed_and_disjoint(cx: &Embedded, list: &[Element]) -> Result<bool, groupoid::GroupoidError> {
    for (i, a) in list.iter().enumerate() {
        groupoid::validate(cx, a)?;
        for b in &list[i + 1..] {
            if !intersect(cx, a, b)?.is_empty() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn algebra(cmd: &AlgebraCmd, exec: Exec) -> Res<Outcome> {
    match cmd {
        AlgebraCmd::K15 { inputs, m, stride, q_limit } => {
            let cx = load(inputs)?;
            let r = k15_table(&cx, *m, *stride, *q_limit)?;
            let mut o = Outcome::new("algebra k15");
            for c in &r.cells {
                let i = c.i.map_or("-".to_string(), |i| i.to_string());
                o.check(
                    format!("part {} i={i} j={}", c.part, c.j),
                    c.failures == 0 && c.zeros > 0 && (c.hits > 0 || !c.can_hit()),
                    format!("{} nonzero, {} zero, {} mismatches", c.hits, c.zeros, c.failures),
                );
            }
            o.text.push(format!("branch outcomes seen: {}", r.branches()));
            o.text.extend(r.examples.iter().cloned());
            o.data = to_json(&r);
            Ok(o)
        }
        AlgebraCmd::K18 { inputs, n, m } => {
            let cx = load(inputs)?;
            let r = k18_check(&cx, *n, *m, exec)?;
            let mut o = Outcome::new("algebra k18");
            o.check("diagonal projection", r.em_projection, format!("{} terms", r.em_terms));
            o.check("b symbols commute", r.commuting_failures == 0, format!("{} of {} pairs fail", r.commuting_failures, r.commuting_pairs));
            o.check("d products split", r.split_failures == 0, format!("{} of {} paths fail", r.split_failures, r.split_paths));
            o.check("d commutes", r.split_commute_failures == 0, format!("{} of {} paths fail", r.split_commute_failures, r.split_paths));
            o.text.extend(r.examples.iter().cloned());
            o.data = to_json(&r);
            Ok(o)
        }
        AlgebraCmd::Taf { inputs, n0, l } => {
            let cx = load(inputs)?;
            let r = taf_check(&cx, *n0, *l, exec)?;
            let w = solve_invariant_measure(&cx.host, cx.depth(), measure::DEFAULT_TOL)?;
            let t = trace_bound_check(&cx, *l, *n0, &w)?;
            let mut o = Outcome::new("algebra taf");
            o.check("projection", r.projection, format!("{} terms", r.ebar_terms));
            for tl in &r.tallies {
                o.check(format!("commutation level {}", tl.level), tl.commute_failures == 0, format!("{} of {} generators fail", tl.commute_failures, tl.generators));
                o.check(format!("compression level {}", tl.level), tl.membership_failures == 0, format!("{} of {} generators fail", tl.membership_failures, tl.generators));
            }
            o.check("trace bound", t.pass, format!("{} <= {}", value_text(&t.value), t.bound));
            o.text.extend(r.blocks.iter().map(|b| format!("block {}: {} -> {}", b.vertex, b.size, b.compressed)));
            o.text.extend(r.examples.iter().cloned());
            o.data = json!({"taf": to_json(&r), "trace": value_text(&t.value), "bound": t.bound.to_string()});
            Ok(o)
        }
        AlgebraCmd::Vp { inputs, path } => {
            let cx = load(inputs)?;
            let p = parse_path(&cx.host, path)?;
            let (v, r) = build_vp(&cx, &p)?;
            let mut o = Outcome::new("algebra vp");
            o.check("source equals range", r.source_is_range, "v*v = vv*");
            o.check("source projection", r.source_matches, "v*v is the side-0 image projection");
            o.check("below the path projection", r.below, "v*v <= b_{p,p}");
            o.check("unitary", r.unitary, "v + 1 - v*v");
            o.text.push(star_algebra::render(&cx, &v));
            o.data = json!({"report": to_json(&r), "element": serde_json::from_str::<Json>(&star_algebra::to_json(&cx, &v))?});
            Ok(o)
        }
    }
}

fn kcmd(cmd: &KCmd, exec: Exec) -> Res<Outcome> {
    match cmd {
        KCmd::Presentation { file, from, to } => {
            let d = load_diagram(file)?;
            let g = k0_presentation(&d);
            let to = to.unwrap_or(g.depth());
            let mut o = Outcome::new("ktheory presentation");
            let mut data = g.to_json();
            if to > *from {
                let s = smith_invariants(&g, *from, to)?;
                o.text.push(format!(
                    "window {from}..{to}: rank {}, invariant factors [{}], determinant {}",
                    s.rank,
                    s.invariant_factors.join(","),
                    s.determinant.as_deref().unwrap_or("-")
                ));
                data["window"] = to_json(&s);
            }
            o.text.insert(0, format!("order unit {}", g.order_unit));
            o.data = data;
            Ok(o)
        }
        KCmd::K30 { inputs, path, depth } => {
            let cx = load(inputs)?;
            let reports = match path {
                Some(p) => vec![prop_k30_check(&cx, &parse_path(&cx.host, p)?)?],
                None => ktheory::k30_all(&cx, *depth, exec)?,
            };
            let mut o = Outcome::new("ktheory k30");
            let classes = reports.iter().filter(|r| !r.classes_equal).count();
            let witness = reports.iter().filter(|r| !(r.witness_source && r.witness_range)).count();
            o.check("source and range classes agree", classes == 0, format!("{classes} of {} paths fail", reports.len()));
            o.check("witness partial isometry", witness == 0, format!("{witness} of {} paths fail", reports.len()));
            o.data = to_json(&reports);
            Ok(o)
        }
        KCmd::Report { inputs, depth } => {
            let cx = load(inputs)?;
            let r = ktheory_report(&cx, *depth, exec)?;
            let mut o = Outcome::new("ktheory report");
            o.check("class checks", r.pass(), format!("{} paths, {} failures", r.k30_checked, r.k30_failures.len()));
            o.text.push(r.to_string().trim_end().to_string());
            o.data = r.to_json();
            Ok(o)
        }
    }
}
