//! Word-path semantics of bare diagrams.
//!
//! A token enters the diagram with a basis polarisation and a wire
//! position; a pbs reflects horizontal tokens (same wire index) and
//! transmits vertical ones (other wire index), a neg flips the
//! polarisation, a gate appends its label, and a trace feeds the last
//! output back into the last input. The implementation simulates the
//! token on the port graph, which makes the semantics deformation
//! invariant by construction.

use crate::diagram::{BareDiagram, Label, NodeKind, PortGraph, PortRef};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use thiserror::Error;

/// Basis polarisation: `H` is horizontal ("->", reflected by a pbs),
/// `V` is vertical ("^", transmitted).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarisation {
    H,
    V,
}

impl Polarisation {
    pub fn flip(self) -> Self {
        match self {
            Polarisation::H => Polarisation::V,
            Polarisation::V => Polarisation::H,
        }
    }

    /// Basis index used by the quantum semantics: `H = 0`, `V = 1`.
    pub fn index(self) -> usize {
        match self {
            Polarisation::H => 0,
            Polarisation::V => 1,
        }
    }

    pub fn both() -> [Polarisation; 2] {
        [Polarisation::H, Polarisation::V]
    }
}

impl fmt::Display for Polarisation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarisation::H => write!(f, "H"),
            Polarisation::V => write!(f, "V"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathResult {
    pub word: Vec<Label>,
    pub out_pol: Polarisation,
    pub out_pos: usize,
}

/// Total mapping from the `2n` inputs to their path results.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordPathTable {
    arity: usize,
    rows: BTreeMap<(Polarisation, usize), PathResult>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PathError {
    #[error("diagram of arity 0 has no word path semantics")]
    Arity0,
    #[error("position {pos} out of range for arity {arity}")]
    PositionOutOfRange { pos: usize, arity: usize },
    #[error("word path semantics is defined for hole-free diagrams")]
    HasHole,
    #[error("token revisited a wire with the same polarisation (internal invariant violated)")]
    LoopDetected,
}

impl WordPathTable {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn get(&self, pol: Polarisation, pos: usize) -> Option<&PathResult> {
        self.rows.get(&(pol, pos))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&(Polarisation, usize), &PathResult)> {
        self.rows.iter()
    }

    /// True iff the output map is a permutation of `{H, V} x [n]`.
    pub fn is_bijection(&self) -> bool {
        let outs: HashSet<(Polarisation, usize)> =
            self.rows.values().map(|r| (r.out_pol, r.out_pos)).collect();
        outs.len() == 2 * self.arity
    }

    /// `V` rows first (positions ascending), then `H` rows; words are
    /// printed with single-character labels concatenated, dot-separated
    /// otherwise, and `-` for the empty word.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for pol in [Polarisation::V, Polarisation::H] {
            for pos in 0..self.arity {
                let r = &self.rows[&(pol, pos)];
                out.push_str(&format!(
                    "{},{} -> {} {},{}\n",
                    pol,
                    pos,
                    format_word(&r.word),
                    r.out_pol,
                    r.out_pos
                ));
            }
        }
        out
    }
}

/// Single-char labels concatenate; any multi-char label switches the whole
/// word to dot-separated form (with a trailing dot when that would
/// otherwise be ambiguous). The empty word prints as `-`.
pub fn format_word(word: &[Label]) -> String {
    if word.is_empty() {
        return "-".to_string();
    }
    if word.iter().all(|l| l.chars().count() == 1) {
        word.concat()
    } else {
        let joined = word.join(".");
        if word.len() == 1 {
            format!("{joined}.")
        } else {
            joined
        }
    }
}

/// Inverse of [`format_word`].
pub fn parse_word(s: &str) -> Vec<Label> {
    let s = s.trim();
    if s == "-" || s.is_empty() {
        return vec![];
    }
    if s.contains('.') {
        s.split('.').filter(|p| !p.is_empty()).map(|p| p.to_string()).collect()
    } else {
        s.chars().map(|c| c.to_string()).collect()
    }
}

/// Simulate one token through the diagram.
pub fn trace_path(d: &BareDiagram, pol: Polarisation, pos: usize) -> Result<PathResult, PathError> {
    if d.has_hole() {
        return Err(PathError::HasHole);
    }
    if d.arity() == 0 {
        return Err(PathError::Arity0);
    }
    if pos >= d.arity() {
        return Err(PathError::PositionOutOfRange { pos, arity: d.arity() });
    }
    let g = d.port_graph();
    trace_on_graph(&g, pol, pos)
}

pub(crate) fn trace_on_graph(
    g: &PortGraph,
    pol: Polarisation,
    pos: usize,
) -> Result<PathResult, PathError> {
    let next = g.edge_map();
    let mut word = Vec::new();
    let mut cur = PortRef::BoundaryIn(pos);
    let mut p = pol;
    let mut seen: HashSet<(PortRef, Polarisation)> = HashSet::new();
    loop {
        if !seen.insert((cur, p)) {
            return Err(PathError::LoopDetected);
        }
        let dst = *next.get(&cur).expect("dangling port in canonical graph");
        match dst {
            PortRef::BoundaryOut(out_pos) => {
                return Ok(PathResult { word, out_pol: p, out_pos });
            }
            PortRef::NodeIn(node, in_port) => {
                let n = &g.nodes()[node];
                let out_port = match n.kind {
                    NodeKind::Neg => {
                        p = p.flip();
                        0
                    }
                    NodeKind::Gate => {
                        word.push(n.label.clone().expect("gate without label"));
                        0
                    }
                    NodeKind::Hole => {
                        unreachable!("hole-free checked before simulation")
                    }
                    // H is reflected (same wire index), V transmitted.
                    NodeKind::Pbs => match p {
                        Polarisation::H => in_port,
                        Polarisation::V => 1 - in_port,
                    },
                };
                cur = PortRef::NodeOut(node, out_port);
            }
            _ => unreachable!("edge sink cannot be a source port"),
        }
    }
}

/// The full table over all `2n` inputs. Arity-0 diagrams yield an empty
/// table.
pub fn path_table(d: &BareDiagram) -> Result<WordPathTable, PathError> {
    if d.has_hole() {
        return Err(PathError::HasHole);
    }
    let g = d.port_graph();
    let mut rows = BTreeMap::new();
    for pol in Polarisation::both() {
        for pos in 0..d.arity() {
            rows.insert((pol, pos), trace_on_graph(&g, pol, pos)?);
        }
    }
    Ok(WordPathTable { arity: d.arity(), rows })
}

/// Occurrence bounds: every label at most twice across the whole table
/// and, when `neg_free` is requested, at most once per polarisation.
pub fn check_occurrence_bounds(t: &WordPathTable, neg_free: bool) -> bool {
    let mut total: BTreeMap<&Label, usize> = BTreeMap::new();
    let mut per_pol: BTreeMap<(Polarisation, &Label), usize> = BTreeMap::new();
    for ((pol, _), r) in t.rows() {
        for l in &r.word {
            *total.entry(l).or_default() += 1;
            *per_pol.entry((*pol, l)).or_default() += 1;
        }
    }
    if total.values().any(|&c| c > 2) {
        return false;
    }
    if neg_free && per_pol.values().any(|&c| c > 1) {
        return false;
    }
    true
}

/// Worked-example diagrams.
pub mod fixtures {
    use crate::diagram::{gate, par, seq, trace, BareDiagram, Term};

    /// The compact `abab` diagram: a pbs feeding a loop whose segment
    /// crosses gates `a`, `b` and a negation, so the vertical token goes
    /// around twice while the horizontal one passes straight through.
    pub fn abab_loop() -> BareDiagram {
        BareDiagram::new(trace(seq(
            par(Term::Wire, seq(seq(gate("a"), gate("b")), Term::Neg)),
            Term::Pbs,
        )))
        .unwrap()
    }
}
