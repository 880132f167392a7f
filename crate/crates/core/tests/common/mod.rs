#![allow(dead_code)] // each test target uses a different subset

//! Shared test support: an independent structural-recursive evaluator of
//! the word-path rules (used as an oracle against the port-graph
//! simulator) and random instantiations of the structural-congruence
//! axiom families.

use pbs_calculus::diagram::{
    identity, par, seq, sigma_first_to_last, trace, BareDiagram, Label, Term,
};
use pbs_calculus::pathsem::Polarisation;
use pbs_calculus::sample::SampleRng;
use pbs_calculus::sample::{random_bare_diagram, SamplerConfig};
use rand::Rng;

/// Arity of a well-typed term, by structural recursion.
pub fn arity_of(t: &Term) -> usize {
    match t {
        Term::Empty => 0,
        Term::Wire | Term::Neg | Term::Gate(_) | Term::Hole => 1,
        Term::Swap | Term::Pbs => 2,
        Term::Seq(a, _) => arity_of(a),
        Term::Par(a, b) => arity_of(a) + arity_of(b),
        Term::Trace(a) => arity_of(a) - 1,
    }
}

/// Structural-recursive word-path evaluation, following the inductive
/// rules directly (the trace rule iterates at most twice through the
/// feedback wire). Independent of the port-graph simulation path.
pub fn eval_recursive(
    t: &Term,
    pol: Polarisation,
    pos: usize,
) -> (Vec<Label>, Polarisation, usize) {
    match t {
        Term::Wire => (vec![], pol, 0),
        Term::Neg => (vec![], pol.flip(), 0),
        Term::Swap => (vec![], pol, 1 - pos),
        Term::Pbs => match pol {
            Polarisation::H => (vec![], pol, pos),
            Polarisation::V => (vec![], pol, 1 - pos),
        },
        Term::Gate(a) => (vec![a.clone()], pol, 0),
        Term::Seq(d1, d2) => {
            let (mut w1, c1, p1) = eval_recursive(d1, pol, pos);
            let (w2, c2, p2) = eval_recursive(d2, c1, p1);
            w1.extend(w2);
            (w1, c2, p2)
        }
        Term::Par(d1, d2) => {
            let n1 = arity_of(d1);
            if pos < n1 {
                eval_recursive(d1, pol, pos)
            } else {
                let (w, c, p) = eval_recursive(d2, pol, pos - n1);
                (w, c, p + n1)
            }
        }
        Term::Trace(d) => {
            let loop_wire = arity_of(d) - 1;
            let mut word = Vec::new();
            let (mut c, mut p) = (pol, pos);
            for hop in 0..=3 {
                assert!(hop <= 2, "trace rule exceeded two re-entries");
                let (w, c2, p2) = eval_recursive(d, c, p);
                word.extend(w);
                if p2 == loop_wire {
                    c = c2;
                    p = loop_wire;
                } else {
                    return (word, c2, p2);
                }
            }
            unreachable!()
        }
        Term::Empty | Term::Hole => unreachable!("no token enters {t:?}"),
    }
}

fn prefix_labels(t: &Term, prefix: &str) -> Term {
    match t {
        Term::Gate(l) => Term::Gate(format!("{prefix}{l}")),
        Term::Seq(a, b) => seq(prefix_labels(a, prefix), prefix_labels(b, prefix)),
        Term::Par(a, b) => par(prefix_labels(a, prefix), prefix_labels(b, prefix)),
        Term::Trace(a) => trace(prefix_labels(a, prefix)),
        other => other.clone(),
    }
}

fn piece(rng: &mut SampleRng, arity: usize, prefix: &str, cfg: SamplerConfig) -> Term {
    prefix_labels(random_bare_diagram(rng, arity, cfg).term(), prefix)
}

pub const AXIOM_FAMILIES: [&str; 12] = [
    "neutrality of the identity",
    "neutrality of the empty diagram",
    "associativity of sequential composition",
    "associativity of parallel composition",
    "compatibility of the compositions",
    "naturality of the swap",
    "inverse law",
    "naturality in the input",
    "naturality in the output",
    "dinaturality",
    "superposing",
    "yanking",
];

/// One random instance of the axiom family, as two terms that must be
/// congruent with identical word-path semantics.
pub fn axiom_instance(family: usize, rng: &mut SampleRng, cfg: SamplerConfig) -> (Term, Term) {
    match family {
        0 => {
            let n = rng.gen_range(1..=3);
            let d = piece(rng, n, "a_", cfg);
            if rng.gen_bool(0.5) {
                (seq(d.clone(), identity(n)), d)
            } else {
                (seq(identity(n), d.clone()), d)
            }
        }
        1 => {
            let n = rng.gen_range(1..=3);
            let d = piece(rng, n, "a_", cfg);
            if rng.gen_bool(0.5) {
                (par(Term::Empty, d.clone()), d)
            } else {
                (par(d.clone(), Term::Empty), d)
            }
        }
        2 => {
            let n = rng.gen_range(1..=2);
            let d1 = piece(rng, n, "a_", cfg);
            let d2 = piece(rng, n, "b_", cfg);
            let d3 = piece(rng, n, "c_", cfg);
            (
                seq(seq(d1.clone(), d2.clone()), d3.clone()),
                seq(d1, seq(d2, d3)),
            )
        }
        3 => {
            let n = rng.gen_range(1..=2);
            let d1 = piece(rng, n, "a_", cfg);
            let d2 = piece(rng, 1, "b_", cfg);
            let d3 = piece(rng, 1, "c_", cfg);
            (
                par(par(d1.clone(), d2.clone()), d3.clone()),
                par(d1, par(d2, d3)),
            )
        }
        4 => {
            let n = rng.gen_range(1..=2);
            let m = rng.gen_range(1..=2);
            let d1 = piece(rng, n, "a_", cfg);
            let d2 = piece(rng, n, "b_", cfg);
            let d3 = piece(rng, m, "c_", cfg);
            let d4 = piece(rng, m, "d_", cfg);
            (
                par(seq(d1.clone(), d2.clone()), seq(d3.clone(), d4.clone())),
                seq(par(d1, d3), par(d2, d4)),
            )
        }
        5 => {
            let n = rng.gen_range(1..=3);
            let d = piece(rng, n, "a_", cfg);
            (
                seq(par(Term::Wire, d.clone()), sigma_first_to_last(n)),
                seq(sigma_first_to_last(n), par(d, Term::Wire)),
            )
        }
        6 => (seq(Term::Swap, Term::Swap), identity(2)),
        7 => {
            let n = rng.gen_range(1..=2);
            let d1 = piece(rng, n, "a_", cfg);
            let d2 = piece(rng, n + 1, "b_", cfg);
            (
                trace(seq(par(d1.clone(), Term::Wire), d2.clone())),
                seq(d1, trace(d2)),
            )
        }
        8 => {
            let n = rng.gen_range(1..=2);
            let d1 = piece(rng, n + 1, "a_", cfg);
            let d2 = piece(rng, n, "b_", cfg);
            (
                trace(seq(d1.clone(), par(d2.clone(), Term::Wire))),
                seq(trace(d1), d2),
            )
        }
        9 => {
            let n = rng.gen_range(1..=2);
            let m = rng.gen_range(1..=2);
            let d1 = piece(rng, n + m, "a_", cfg);
            let d2 = piece(rng, m, "b_", cfg);
            let mut lhs = seq(d1.clone(), par(identity(n), d2.clone()));
            let mut rhs = seq(par(identity(n), d2), d1);
            for _ in 0..m {
                lhs = trace(lhs);
                rhs = trace(rhs);
            }
            (lhs, rhs)
        }
        10 => {
            let n = rng.gen_range(1..=2);
            let m = rng.gen_range(1..=2);
            let d1 = piece(rng, n, "a_", cfg);
            let d2 = piece(rng, m + 1, "b_", cfg);
            (
                trace(par(d1.clone(), d2.clone())),
                par(d1, trace(d2)),
            )
        }
        11 => (trace(Term::Swap), Term::Wire),
        _ => panic!("twelve families"),
    }
}

pub fn typed(t: Term) -> BareDiagram {
    BareDiagram::new(t).expect("axiom instance typechecks")
}
