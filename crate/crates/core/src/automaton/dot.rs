use std::fmt::Write as _;

use super::fsa::Fsa;

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz digraph: node labels are residual formulas, edge labels guards.
pub fn to_dot(fsa: &Fsa) -> String {
    let mut out = String::from("digraph fsa {\n    rankdir=LR;\n    __start [shape=point];\n");
    for q in 0..fsa.num_states() {
        let shape = if fsa.is_accepting(q) { "doublecircle" } else { "circle" };
        let _ = writeln!(
            out,
            "    q{q} [shape={shape}, label=\"q{q}\\n{}\"];",
            escape(fsa.label(q))
        );
    }
    let _ = writeln!(out, "    __start -> q{};", fsa.initial());
    for e in fsa.edges() {
        let _ = writeln!(
            out,
            "    q{} -> q{} [label=\"{}\"];",
            e.from,
            e.to,
            escape(&e.guard.render(fsa.alphabet()))
        );
    }
    out.push_str("}\n");
    out
}
