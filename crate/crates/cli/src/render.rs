use std::fmt::Write as _;

use tlcompose::automaton::Fsa;
use tlcompose::env::{DiscreteMdp, GridAction, GridWorld};
use tlcompose::logic::{satisfies, Trace};
use tlcompose::QTable;

use crate::config::ExperimentConfig;
use crate::error::Failure;

/// One grid of greedy-action glyphs per automaton state, top row = largest y.
/// Each cell is the glyph followed by the macro region it lies in
/// (`+` when several regions overlap).
pub fn render_table(cfg: &ExperimentConfig, grid: &GridWorld, fsa: &Fsa, table: &QTable) -> Result<String, Failure> {
    if table.states() != grid.num_states() || table.automaton_states() != fsa.num_states() {
        return Err(Failure::config("table dimensions do not match the environment and automaton"));
    }
    let mut regions = Vec::new();
    for name in cfg.environment.macros.keys() {
        regions.push((name.chars().next().unwrap_or('?'), cfg.parse(name)?));
    }
    let mut tags = vec![' '; grid.num_states()];
    for (s, tag) in tags.iter_mut().enumerate() {
        let trace = Trace::new(vec![grid.sample(s)]).expect("single sample");
        let hits: Vec<char> = regions
            .iter()
            .filter(|(_, f)| satisfies(&trace, f).unwrap_or(false))
            .map(|(c, _)| *c)
            .collect();
        *tag = match hits.len() {
            0 => ' ',
            1 => hits[0],
            _ => '+',
        };
    }

    let mut out = format!("# {}\n", table.meta.formula);
    for q in 0..fsa.num_states() {
        let kind = if fsa.is_accepting(q) {
            " [accepting]"
        } else if fsa.is_trap(q) {
            " [trap]"
        } else {
            ""
        };
        let _ = writeln!(out, "q{q}{kind}: {}", fsa.label(q));
        let policy = table.extract_subpolicy(q);
        for y in (0..grid.height()).rev() {
            for x in 0..grid.width() {
                let s = grid.index(x, y);
                let glyph = GridAction::from_index(policy[s])
                    .ok_or_else(|| Failure::config("table has more actions than the grid"))?
                    .glyph();
                out.push(glyph);
                out.push(tags[s]);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}
