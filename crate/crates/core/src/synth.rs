//! Constructive inverse of the word-path semantics: build a bare diagram
//! realising a given admissible word family, with every input routed back
//! to its own polarisation and position.
//!
//! The construction recurses on the total word length. At each step the
//! first nonempty word (rows scanned `(V,0), (V,1), ..., (H,0), ...`) is
//! split on its last letter `a`; depending on where the second occurrence
//! of `a` sits (none / same row / same wire other polarisation / same
//! polarisation other wire / other both), a dedicated routing gadget is
//! wrapped around a diagram realising the reduced family on one extra
//! helper wire, which is then traced away. Letters occurring twice for
//! the same polarisation force a negation into the gadget; families that
//! stay below one occurrence per polarisation synthesize negation-free.

use crate::diagram::{
    self, gate, identity, pad, par, seq, seq_all, trace, BareDiagram, Label, Term,
};
use crate::pathsem::{format_word, parse_word, Polarisation};
use std::collections::BTreeMap;
use thiserror::Error;

/// Total mapping `(polarisation, position) -> word`; rows default to the
/// empty word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordFamily {
    arity: usize,
    words: BTreeMap<(Polarisation, usize), Vec<Label>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("label `{0}` occurs more than twice in the family")]
    Inadmissible(Label),
    #[error("label `{0}` occurs twice for one polarisation; no neg-free diagram exists")]
    NotNegFreeAdmissible(Label),
    #[error("position {pos} out of range for arity {arity}")]
    PositionOutOfRange { pos: usize, arity: usize },
    #[error("malformed family line: {0}")]
    ParseError(String),
}

impl WordFamily {
    pub fn empty(arity: usize) -> Self {
        let mut words = BTreeMap::new();
        for pol in Polarisation::both() {
            for pos in 0..arity {
                words.insert((pol, pos), vec![]);
            }
        }
        WordFamily { arity, words }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn set(&mut self, pol: Polarisation, pos: usize, word: Vec<Label>) -> Result<(), SynthError> {
        if pos >= self.arity {
            return Err(SynthError::PositionOutOfRange { pos, arity: self.arity });
        }
        self.words.insert((pol, pos), word);
        Ok(())
    }

    pub fn word(&self, pol: Polarisation, pos: usize) -> &[Label] {
        self.words.get(&(pol, pos)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Copy onto `arity + 1` wires; the fresh last wire carries empty words.
    fn extended(&self) -> WordFamily {
        let mut f = WordFamily::empty(self.arity + 1);
        for ((pol, pos), w) in &self.words {
            f.words.insert((*pol, *pos), w.clone());
        }
        f
    }

    /// True iff the diagram's path table realises exactly this family with
    /// every input a fixed point of the routing.
    pub fn matches_diagram(&self, d: &BareDiagram) -> bool {
        if d.arity() != self.arity {
            return false;
        }
        let Ok(t) = crate::pathsem::path_table(d) else { return false };
        for pol in Polarisation::both() {
            for pos in 0..self.arity {
                let Some(r) = t.get(pol, pos) else { return false };
                if r.word != self.word(pol, pos) || r.out_pol != pol || r.out_pos != pos {
                    return false;
                }
            }
        }
        true
    }

    /// Family text format: one `V,0: abab` line per nonempty row (`-` for
    /// an explicitly empty word), with an optional `arity: n` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("arity: {}\n", self.arity);
        for pol in [Polarisation::V, Polarisation::H] {
            for pos in 0..self.arity {
                out.push_str(&format!("{},{}: {}\n", pol, pos, format_word(self.word(pol, pos))));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<WordFamily, SynthError> {
        let mut rows: Vec<(Polarisation, usize, Vec<Label>)> = Vec::new();
        let mut arity: Option<usize> = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, tail) = line
                .split_once(':')
                .ok_or_else(|| SynthError::ParseError(line.to_string()))?;
            let head = head.trim();
            if head == "arity" || head == "n" {
                arity = Some(
                    tail.trim()
                        .parse()
                        .map_err(|_| SynthError::ParseError(line.to_string()))?,
                );
                continue;
            }
            let (pol_s, pos_s) = head
                .split_once(',')
                .ok_or_else(|| SynthError::ParseError(line.to_string()))?;
            let pol = match pol_s.trim() {
                "V" => Polarisation::V,
                "H" => Polarisation::H,
                _ => return Err(SynthError::ParseError(line.to_string())),
            };
            let pos: usize = pos_s
                .trim()
                .parse()
                .map_err(|_| SynthError::ParseError(line.to_string()))?;
            rows.push((pol, pos, parse_word(tail)));
        }
        let n = arity.unwrap_or_else(|| rows.iter().map(|r| r.1 + 1).max().unwrap_or(0));
        let mut f = WordFamily::empty(n);
        for (pol, pos, w) in rows {
            f.set(pol, pos, w)?;
        }
        Ok(f)
    }
}

/// Both occurrence bounds: at most twice overall, and (for the second
/// component) at most once per polarisation.
pub fn check_admissible(f: &WordFamily) -> (bool, bool) {
    let mut total: BTreeMap<&Label, usize> = BTreeMap::new();
    let mut per_pol: BTreeMap<(Polarisation, &Label), usize> = BTreeMap::new();
    for ((pol, _), w) in &f.words {
        for l in w {
            *total.entry(l).or_default() += 1;
            *per_pol.entry((*pol, l)).or_default() += 1;
        }
    }
    let admissible = total.values().all(|&c| c <= 2);
    let neg_free = admissible && per_pol.values().all(|&c| c <= 1);
    (admissible, neg_free)
}

fn first_violating_label(f: &WordFamily, per_pol: bool) -> Option<Label> {
    let mut total: BTreeMap<&Label, usize> = BTreeMap::new();
    let mut per: BTreeMap<(Polarisation, &Label), usize> = BTreeMap::new();
    for ((pol, _), w) in &f.words {
        for l in w {
            *total.entry(l).or_default() += 1;
            *per.entry((*pol, l)).or_default() += 1;
        }
    }
    if per_pol {
        per.into_iter().find(|(_, c)| *c > 1).map(|((_, l), _)| l.clone())
    } else {
        total.into_iter().find(|(_, c)| *c > 2).map(|(l, _)| l.clone())
    }
}

fn scan_rows(n: usize) -> impl Iterator<Item = (Polarisation, usize)> {
    (0..n)
        .map(|p| (Polarisation::V, p))
        .chain((0..n).map(|p| (Polarisation::H, p)))
}

/// Build a diagram realising `f`. With `neg_free`, the family must keep
/// every letter to one occurrence per polarisation and the result contains
/// no negation. Deterministic: equal families yield identical terms.
pub fn synthesize(f: &WordFamily, neg_free: bool) -> Result<BareDiagram, SynthError> {
    let (adm, nf_adm) = check_admissible(f);
    if !adm {
        return Err(SynthError::Inadmissible(first_violating_label(f, false).unwrap()));
    }
    if neg_free && !nf_adm {
        return Err(SynthError::NotNegFreeAdmissible(first_violating_label(f, true).unwrap()));
    }
    let term = synth_term(f);
    let d = BareDiagram::new(term).expect("synthesized term typechecks");
    debug_assert_eq!(d.arity(), f.arity());
    debug_assert!(!neg_free || !d.contains_neg());
    Ok(d)
}

fn synth_term(f: &WordFamily) -> Term {
    let n = f.arity();
    if n == 0 {
        return Term::Empty;
    }
    let Some((c0, p0)) = scan_rows(n).find(|&(c, p)| !f.word(c, p).is_empty()) else {
        return identity(n);
    };
    let w0 = f.word(c0, p0).to_vec();
    let a = w0.last().unwrap().clone();
    let u = w0[..w0.len() - 1].to_vec();

    // First other occurrence of `a`, in scan order, left to right.
    let mut other: Option<(Polarisation, usize, usize)> = None;
    'outer: for (c, p) in scan_rows(n) {
        let w = f.word(c, p);
        for (i, l) in w.iter().enumerate() {
            if (c, p) == (c0, p0) && i == w.len() - 1 {
                continue;
            }
            if l == &a {
                other = Some((c, p, i));
                break 'outer;
            }
        }
    }

    match other {
        // `a` occurs once: realise the rest, then route (c0, p0) through a
        // single-letter gadget.
        None => {
            let mut reduced = f.clone();
            reduced.set(c0, p0, u).unwrap();
            let d_prime = synth_term(&reduced);
            seq(d_prime, pad(single_letter_gadget(c0, &a), p0, n - 1 - p0))
        }
        Some((c1, p1, idx)) => {
            if p1 == p0 && c1 == c0 {
                // Same word: w0 = v a w~ a.
                let v = w0[..idx].to_vec();
                let mid = w0[idx + 1..w0.len() - 1].to_vec();
                let mut reduced = f.extended();
                reduced.set(c0, p0, v).unwrap();
                reduced.set(c0, n, mid).unwrap();
                assemble_two_wire(synth_term(&reduced), same_pol_same_wire_core(c0, &a), n, p0)
            } else if p1 == p0 {
                // Same wire, other polarisation: w_{c1,p0} = v a t.
                let w1 = f.word(c1, p1).to_vec();
                let (v, t) = (w1[..idx].to_vec(), w1[idx + 1..].to_vec());
                let mut reduced = f.extended();
                reduced.set(c0, p0, u).unwrap();
                reduced.set(c1, p0, v).unwrap();
                reduced.set(c1, n, t).unwrap();
                assemble_two_wire(synth_term(&reduced), cross_pol_same_wire_core(c0, &a), n, p0)
            } else if c1 == c0 {
                // Same polarisation, other wire.
                let w1 = f.word(c1, p1).to_vec();
                let (v, t) = (w1[..idx].to_vec(), w1[idx + 1..].to_vec());
                let mut reduced = f.extended();
                reduced.set(c0, p0, u).unwrap();
                reduced.set(c0, p1, v).unwrap();
                reduced.set(c0.flip(), n, t).unwrap();
                assemble_three_wire(
                    synth_term(&reduced),
                    same_pol_other_wire_core(c0, &a),
                    n,
                    p0,
                    p1,
                )
            } else {
                // Other wire, other polarisation.
                let w1 = f.word(c1, p1).to_vec();
                let (v, t) = (w1[..idx].to_vec(), w1[idx + 1..].to_vec());
                let mut reduced = f.extended();
                reduced.set(c0, p0, u).unwrap();
                reduced.set(c1, p1, v).unwrap();
                reduced.set(c1, n, t).unwrap();
                assemble_three_wire(
                    synth_term(&reduced),
                    cross_pol_other_wire_core(c0, &a),
                    n,
                    p0,
                    p1,
                )
            }
        }
    }
}

/// Route one polarisation on one wire through `a` and the other straight:
/// `tr(pbs ; (id + a) ; pbs)` sends V across the gate, the mirrored layout
/// sends H.
fn single_letter_gadget(c0: Polarisation, a: &Label) -> Term {
    let middle = match c0 {
        Polarisation::V => par(Term::Wire, gate(a.clone())),
        Polarisation::H => par(gate(a.clone()), Term::Wire),
    };
    trace(seq(seq(Term::Pbs, middle), Term::Pbs))
}

fn neg_conjugate(core: Term, wires: usize) -> Term {
    let negs = par_negs(wires);
    seq(seq(negs.clone(), core), negs)
}

fn par_negs(wires: usize) -> Term {
    diagram::par_all(vec![Term::Neg; wires])
}

/// Two-wire core for a letter occurring twice in one word (same
/// polarisation, same wire); the second pass is carried by the flipped
/// polarisation around the helper loop.
fn same_pol_same_wire_core(c0: Polarisation, a: &Label) -> Term {
    let core_v = seq(
        seq(par(Term::Wire, Term::Neg), Term::Pbs),
        par(Term::Wire, gate(a.clone())),
    );
    match c0 {
        Polarisation::V => core_v,
        Polarisation::H => neg_conjugate(core_v, 2),
    }
}

/// Two-wire core for a letter shared between the two polarisations of one
/// wire; both cross the gate, the tailed one continues around the loop.
fn cross_pol_same_wire_core(c0: Polarisation, a: &Label) -> Term {
    let through = seq(Term::Swap, par(Term::Wire, gate(a.clone())));
    match c0 {
        Polarisation::V => seq(through, Term::Pbs),
        Polarisation::H => seq(seq(through, Term::Swap), Term::Pbs),
    }
}

/// `pbs` conjugated by negations: V is reflected, H transmitted.
fn anti_pbs() -> Term {
    seq(seq(par(Term::Neg, Term::Neg), Term::Pbs), par(Term::Neg, Term::Neg))
}

fn par3(a: Term, b: Term, c: Term) -> Term {
    par(par(a, b), c)
}

/// Three-wire core (wires: p0 slot, p1 slot, helper) for a letter occurring
/// for the same polarisation on two different wires; the p1 token is
/// tagged by a flip so both crossings of the single gate are
/// distinguishable, and the tail travels the helper loop flipped.
fn same_pol_other_wire_core(c0: Polarisation, a: &Label) -> Term {
    let core_v = seq_all(vec![
        par3(Term::Wire, Term::Neg, Term::Wire),
        par(Term::Pbs, Term::Wire),
        par3(Term::Wire, gate(a.clone()), Term::Wire),
        par(Term::Pbs, Term::Wire),
        par(Term::Wire, anti_pbs()),
        par3(Term::Wire, Term::Neg, Term::Wire),
    ]);
    match c0 {
        Polarisation::V => core_v,
        Polarisation::H => neg_conjugate(core_v, 3),
    }
}

/// Three-wire core for a letter shared between different wires and
/// different polarisations; both tokens reach the gate with their own
/// polarisation, so no negation is needed.
fn cross_pol_other_wire_core(c0: Polarisation, a: &Label) -> Term {
    match c0 {
        Polarisation::V => seq_all(vec![
            par(Term::Pbs, Term::Wire),
            par3(Term::Wire, gate(a.clone()), Term::Wire),
            par(Term::Pbs, Term::Wire),
            par(Term::Wire, Term::Swap),
            par(Term::Wire, Term::Pbs),
        ]),
        Polarisation::H => seq_all(vec![
            par(Term::Pbs, Term::Wire),
            par3(gate(a.clone()), Term::Wire, Term::Wire),
            par(Term::Pbs, Term::Wire),
            par(Term::Wire, Term::Pbs),
        ]),
    }
}

/// `Tr(D' ; perm ; (I_{n-1} + core) ; perm^{-1})` with the core on the
/// former wire `p0` and the helper wire.
fn assemble_two_wire(d_prime: Term, core: Term, n: usize, p0: usize) -> Term {
    let (fwd, back) = diagram::move_wire(n + 1, p0, n - 1);
    trace(seq(seq(seq(d_prime, fwd), pad(core, n - 1, 0)), back))
}

/// As above with a three-wire core on the former wires `p0`, `p1` and the
/// helper.
fn assemble_three_wire(d_prime: Term, core: Term, n: usize, p0: usize, p1: usize) -> Term {
    let (fwd1, back1) = diagram::move_wire(n + 1, p1, n - 1);
    let p0_adj = if p0 > p1 { p0 - 1 } else { p0 };
    let (fwd2, back2) = diagram::move_wire(n + 1, p0_adj, n - 2);
    let fwd = seq(fwd1, fwd2);
    let back = seq(back2, back1);
    trace(seq(seq(seq(d_prime, fwd), pad(core, n - 2, 0)), back))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathsem::path_table;
    use crate::sample::{random_admissible_family, SampleRng};
    use rand::SeedableRng;

    fn fam(n: usize, rows: &[(Polarisation, usize, &str)]) -> WordFamily {
        let mut f = WordFamily::empty(n);
        for (pol, pos, w) in rows {
            f.set(*pol, *pos, parse_word(w)).unwrap();
        }
        f
    }

    #[test]
    fn admissibility_examples() {
        let abab = fam(1, &[(Polarisation::V, 0, "abab")]);
        assert_eq!(check_admissible(&abab), (true, false));
        let cross = fam(1, &[(Polarisation::V, 0, "ab"), (Polarisation::H, 0, "ba")]);
        assert_eq!(check_admissible(&cross), (true, true));
        let aaa = fam(1, &[(Polarisation::V, 0, "aaa")]);
        assert_eq!(check_admissible(&aaa), (false, false));
        assert_eq!(synthesize(&aaa, false).unwrap_err(), SynthError::Inadmissible("a".into()));
        assert_eq!(
            synthesize(&abab, true).unwrap_err(),
            SynthError::NotNegFreeAdmissible("a".into())
        );
    }

    #[test]
    fn all_empty_family_gives_identity() {
        for n in 0..4 {
            let d = synthesize(&WordFamily::empty(n), true).unwrap();
            assert_eq!(d.term(), &identity(n));
        }
    }

    #[test]
    fn single_letter_families_round_trip() {
        for c0 in Polarisation::both() {
            for p0 in 0..3 {
                let f = fam(3, &[(c0, p0, "a")]);
                let d = synthesize(&f, true).unwrap();
                assert!(!d.contains_neg());
                assert!(f.matches_diagram(&d), "failed for {c0:?} {p0}");
            }
        }
    }

    #[test]
    fn abab_family_synthesizes() {
        let f = fam(1, &[(Polarisation::V, 0, "abab")]);
        let d = synthesize(&f, false).unwrap();
        assert!(f.matches_diagram(&d));
        let t = path_table(&d).unwrap();
        assert_eq!(t.get(Polarisation::V, 0).unwrap().word, parse_word("abab"));
    }

    #[test]
    fn same_wire_cross_polarisation_case() {
        let f = fam(1, &[(Polarisation::V, 0, "ua"), (Polarisation::H, 0, "vaw")]);
        let d = synthesize(&f, false).unwrap();
        assert!(f.matches_diagram(&d));
        // Cross-polarisation sharing needs no negation.
        let g = fam(1, &[(Polarisation::V, 0, "a"), (Polarisation::H, 0, "a")]);
        let dg = synthesize(&g, true).unwrap();
        assert!(!dg.contains_neg());
        assert!(g.matches_diagram(&dg));
    }

    #[test]
    fn other_wire_cases_round_trip() {
        // Same polarisation, different wires (needs negs).
        let f = fam(2, &[(Polarisation::V, 0, "xa"), (Polarisation::V, 1, "ya")]);
        let d = synthesize(&f, false).unwrap();
        assert!(f.matches_diagram(&d));
        // Different wires and polarisations (neg-free).
        let g = fam(2, &[(Polarisation::V, 0, "xa"), (Polarisation::H, 1, "yaz")]);
        let dg = synthesize(&g, true).unwrap();
        assert!(!dg.contains_neg());
        assert!(g.matches_diagram(&dg));
        // Reversed wire order exercises the swap chains.
        let h = fam(2, &[(Polarisation::V, 1, "xa"), (Polarisation::H, 0, "yaz")]);
        let dh = synthesize(&h, true).unwrap();
        assert!(h.matches_diagram(&dh));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let f = fam(2, &[(Polarisation::V, 0, "abc"), (Polarisation::H, 1, "cba")]);
        let d1 = synthesize(&f, false).unwrap();
        let d2 = synthesize(&f, false).unwrap();
        assert_eq!(d1.term(), d2.term());
    }

    #[test]
    fn random_families_round_trip() {
        let mut rng = SampleRng::seed_from_u64(2024);
        for i in 0..60 {
            let f = random_admissible_family(&mut rng, 3, 6, 4, false);
            let d = synthesize(&f, false).unwrap();
            assert!(f.matches_diagram(&d), "case {i}: family {f:?}");
        }
    }

    #[test]
    fn random_neg_free_families_round_trip() {
        let mut rng = SampleRng::seed_from_u64(4048);
        for i in 0..60 {
            let f = random_admissible_family(&mut rng, 3, 6, 4, true);
            let d = synthesize(&f, true).unwrap();
            assert!(!d.contains_neg(), "case {i}");
            assert!(f.matches_diagram(&d), "case {i}: family {f:?}");
        }
    }

    #[test]
    fn family_text_round_trip() {
        let f = fam(2, &[(Polarisation::V, 0, "abab"), (Polarisation::H, 1, "c")]);
        let parsed = WordFamily::from_text(&f.to_text()).unwrap();
        assert_eq!(parsed, f);
        let manual = "arity: 1\nV,0: ab\nH,0: -\n";
        let g = WordFamily::from_text(manual).unwrap();
        assert_eq!(g.word(Polarisation::V, 0), parse_word("ab"));
        assert!(g.word(Polarisation::H, 0).is_empty());
    }
}
