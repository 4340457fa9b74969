//! Graph export: DOT for looking at, canonical JSON for diffing.
//!
//! Canonical JSON is compact, with keys in a fixed order:
//! `{"parties":N,"vertices":[[V,..],..],"edges":[[[p,i],[q,j]],..]}` where
//! each party's vertex array is in local order, `V` is
//! `{"t":"S"|"R","cs":..,"cr":..,"msg":STRING|null}` and an edge names its
//! endpoints by party and index into that party's array. Edges are sorted.

use std::fmt::Write;

use serde::Serialize;
use tfrank::causality::{Action, CausalityGraph, VId};
use tfrank::Party;

#[derive(Serialize)]
struct VertexJson {
    t: &'static str,
    cs: u64,
    cr: u64,
    msg: Option<String>,
}

#[derive(Serialize)]
struct GraphJson {
    parties: usize,
    vertices: Vec<Vec<VertexJson>>,
    edges: Vec<[(Party, usize); 2]>,
}

fn kind(v: &VId) -> &'static str {
    match v.t {
        Action::S => "S",
        Action::R => "R",
    }
}

fn local_index(g: &CausalityGraph, p: Party, v: &VId) -> usize {
    g.vertices(p).position(|(w, _)| w == v).expect("edge endpoints are vertices")
}

pub fn to_json(g: &CausalityGraph) -> String {
    let n = g.parties();
    let vertices = (0..n)
        .map(|p| {
            g.vertices(p)
                .map(|(v, m)| VertexJson {
                    t: kind(v),
                    cs: v.cs,
                    cr: v.cr,
                    msg: m.as_ref().map(|m| String::from_utf8_lossy(m).into_owned()),
                })
                .collect()
        })
        .collect();
    let mut edges: Vec<[(Party, usize); 2]> = g
        .edges()
        .iter()
        .map(|e| [(e.from.0, local_index(g, e.from.0, &e.from.1)), (e.to.0, local_index(g, e.to.0, &e.to.1))])
        .collect();
    edges.sort();
    serde_json::to_string(&GraphJson { parties: n, vertices, edges }).expect("plain data")
}

fn node(p: Party, v: &VId) -> String {
    format!("\"p{p}_{}_{}_{}\"", kind(v), v.cs, v.cr)
}

fn label(m: &Option<Vec<u8>>) -> String {
    match m {
        Some(m) => String::from_utf8_lossy(m).replace('\\', "\\\\").replace('"', "\\\""),
        None => "⟨redacted⟩".into(),
    }
}

/// Names a party 0, 1, .. as `names` says, or `party N` past its end.
pub fn to_dot(g: &CausalityGraph, names: &[&str]) -> String {
    let mut out = String::from("digraph causality {\n  rankdir=LR;\n  node [shape=box];\n");
    for p in 0..g.parties() {
        let name = names.get(p).map(|s| s.to_string()).unwrap_or_else(|| format!("party {p}"));
        let _ = writeln!(out, "  subgraph cluster_{p} {{\n    label=\"{name}\";");
        let vs: Vec<_> = g.vertices(p).collect();
        for (v, m) in &vs {
            let _ = writeln!(out, "    {} [label=\"{}({},{}) {}\"];", node(p, v), kind(v), v.cs, v.cr, label(m));
        }
        for w in vs.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            let gap = g.gap_between(p, a, b).expect("both local");
            if gap.contiguous {
                let _ = writeln!(out, "    {} -> {} [style=dotted, arrowhead=none];", node(p, a), node(p, b));
            } else {
                let _ = writeln!(
                    out,
                    "    {} -> {} [style=dashed, label=\"Δcs={} Δcr={}\"];",
                    node(p, a),
                    node(p, b),
                    gap.delta_cs,
                    gap.delta_cr
                );
            }
        }
        out.push_str("  }\n");
    }
    for e in g.edges() {
        let m = g.vertex(e.from.0, &e.from.1).cloned().flatten();
        let _ = writeln!(out, "  {} -> {} [label=\"{}\"];", node(e.from.0, &e.from.1), node(e.to.0, &e.to.1), label(&m));
    }
    out.push_str("}\n");
    out
}
