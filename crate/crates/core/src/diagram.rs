//! Bare PBS-diagram terms with linear typing, and the topology-only
//! port-graph normal form implementing structural congruence.
//!
//! A term is built from the generators `empty`, `wire`, `neg`, `swap`,
//! `pbs`, `gate[l]` and `hole`, combined with sequential composition,
//! parallel composition, and the trace (a feedback loop on the last wire).
//! Typing is linear: every gate label occurs exactly once, and a term may
//! contain at most one hole (a term with a hole is a *context*).
//!
//! Congruence is decided by normal-form equality on port graphs rather
//! than by axiom rewriting: wires, swaps and trace links are contracted
//! away, so the coherence laws of a traced PROP hold on the nose. Only
//! `neg`, `pbs`, gates and the hole survive as nodes.

use std::collections::{HashMap, VecDeque};
use std::collections::BTreeSet;
use thiserror::Error;

pub type Label = String;

/// Inductive diagram term. `Seq(a, b)` runs `a` first, then `b`
/// (diagrammatic order, i.e. `b âˆ˜ a` in operator order).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Empty,
    Wire,
    Neg,
    Swap,
    Pbs,
    Gate(Label),
    Hole,
    Seq(Box<Term>, Box<Term>),
    Par(Box<Term>, Box<Term>),
    Trace(Box<Term>),
}

pub fn seq(a: Term, b: Term) -> Term {
    Term::Seq(Box::new(a), Box::new(b))
}

pub fn par(a: Term, b: Term) -> Term {
    Term::Par(Box::new(a), Box::new(b))
}

pub fn trace(a: Term) -> Term {
    Term::Trace(Box::new(a))
}

pub fn gate(label: impl Into<Label>) -> Term {
    Term::Gate(label.into())
}

/// Left-associated sequential chain; panics on an empty list.
pub fn seq_all(terms: Vec<Term>) -> Term {
    let mut it = terms.into_iter();
    let first = it.next().expect("seq_all of nothing");
    it.fold(first, seq)
}

/// Left-associated parallel stack of all terms (empty list gives `Empty`).
pub fn par_all(terms: Vec<Term>) -> Term {
    let mut it = terms.into_iter();
    match it.next() {
        None => Term::Empty,
        Some(first) => it.fold(first, par),
    }
}

/// The identity diagram `I_n` (`Empty` when `n = 0`).
pub fn identity(n: usize) -> Term {
    par_all(vec![Term::Wire; n])
}

/// `before` wires, then `t`, then `after` wires.
pub fn pad(t: Term, before: usize, after: usize) -> Term {
    let mut out = t;
    if before > 0 {
        out = par(identity(before), out);
    }
    if after > 0 {
        out = par(out, identity(after));
    }
    out
}

/// Adjacent swap of wires `i` and `i+1` on `n` wires.
pub fn swap_adjacent(n: usize, i: usize) -> Term {
    assert!(i + 1 < n);
    pad(Term::Swap, i, n - i - 2)
}

/// The first-wire-goes-last diagram `sigma_{1,m}` on `m + 1` wires.
pub fn sigma_first_to_last(m: usize) -> Term {
    if m == 0 {
        return Term::Wire;
    }
    seq(
        par(sigma_first_to_last(m - 1), Term::Wire),
        par(identity(m - 1), Term::Swap),
    )
}

/// Permutation moving wire `from` to position `to` (shifting the wires in
/// between one step toward `from`), as a chain of adjacent swaps, together
/// with its inverse.
pub fn move_wire(n: usize, from: usize, to: usize) -> (Term, Term) {
    if from == to {
        return (identity(n), identity(n));
    }
    let mut steps = Vec::new();
    if from < to {
        for i in from..to {
            steps.push(swap_adjacent(n, i));
        }
    } else {
        for i in (to..from).rev() {
            steps.push(swap_adjacent(n, i));
        }
    }
    let forward = seq_all(steps.clone());
    steps.reverse();
    (forward, seq_all(steps))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("sequential composition of arities {left} and {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("gate label `{0}` occurs more than once")]
    DuplicateLabel(Label),
    #[error("more than one hole in the term")]
    MultipleHoles,
    #[error("trace of a diagram with no wires")]
    TraceOfNullary,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("term has no hole to substitute")]
    NoHole,
    #[error("label `{0}` already occurs in the context")]
    LabelClash(Label),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("context classification requires arity 1, got {0}")]
    NotArityOne(usize),
    #[error("term has no hole, so it is not a context")]
    NoHole,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CongruenceError {
    #[error("closed unlabeled component of {0} nodes exceeds the isomorphism cap of {MAX_CLOSED_NODES}")]
    ClosedComponentTooLarge(usize),
}

struct TypeInfo {
    arity: usize,
    alphabet: BTreeSet<Label>,
    holes: usize,
}

fn typecheck_term(t: &Term) -> Result<TypeInfo, TypeError> {
    Ok(match t {
        Term::Empty => TypeInfo { arity: 0, alphabet: BTreeSet::new(), holes: 0 },
        Term::Wire | Term::Neg => TypeInfo { arity: 1, alphabet: BTreeSet::new(), holes: 0 },
        Term::Swap | Term::Pbs => TypeInfo { arity: 2, alphabet: BTreeSet::new(), holes: 0 },
        Term::Gate(l) => TypeInfo {
            arity: 1,
            alphabet: BTreeSet::from([l.clone()]),
            holes: 0,
        },
        Term::Hole => TypeInfo { arity: 1, alphabet: BTreeSet::new(), holes: 1 },
        Term::Seq(a, b) => {
            let ta = typecheck_term(a)?;
            let tb = typecheck_term(b)?;
            if ta.arity != tb.arity {
                return Err(TypeError::ArityMismatch { left: ta.arity, right: tb.arity });
            }
            let arity = ta.arity;
            merge_disjoint(ta, tb, arity)?
        }
        Term::Par(a, b) => {
            let ta = typecheck_term(a)?;
            let tb = typecheck_term(b)?;
            let arity = ta.arity + tb.arity;
            merge_disjoint(ta, tb, arity)?
        }
        Term::Trace(a) => {
            let ta = typecheck_term(a)?;
            if ta.arity == 0 {
                return Err(TypeError::TraceOfNullary);
            }
            TypeInfo { arity: ta.arity - 1, ..ta }
        }
    })
}

fn merge_disjoint(ta: TypeInfo, tb: TypeInfo, arity: usize) -> Result<TypeInfo, TypeError> {
    if let Some(l) = ta.alphabet.intersection(&tb.alphabet).next() {
        return Err(TypeError::DuplicateLabel(l.clone()));
    }
    if ta.holes + tb.holes > 1 {
        return Err(TypeError::MultipleHoles);
    }
    let mut alphabet = ta.alphabet;
    alphabet.extend(tb.alphabet);
    Ok(TypeInfo { arity, alphabet, holes: ta.holes + tb.holes })
}

/// A typechecked term together with its type data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BareDiagram {
    term: Term,
    arity: usize,
    alphabet: BTreeSet<Label>,
    has_hole: bool,
}

impl BareDiagram {
    /// Typecheck `term`; the only way to obtain a `BareDiagram`.
    pub fn new(term: Term) -> Result<Self, TypeError> {
        let info = typecheck_term(&term)?;
        Ok(BareDiagram {
            term,
            arity: info.arity,
            alphabet: info.alphabet,
            has_hole: info.holes == 1,
        })
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn alphabet(&self) -> &BTreeSet<Label> {
        &self.alphabet
    }

    /// A term with a hole is a context; without, a (bare) diagram.
    pub fn has_hole(&self) -> bool {
        self.has_hole
    }

    pub fn contains_pbs(&self) -> bool {
        term_contains(&self.term, &Term::Pbs)
    }

    pub fn contains_neg(&self) -> bool {
        term_contains(&self.term, &Term::Neg)
    }

    /// Replace the single hole by `gate(label)`.
    pub fn substitute(&self, label: &str) -> Result<BareDiagram, SubstError> {
        if !self.has_hole {
            return Err(SubstError::NoHole);
        }
        if self.alphabet.contains(label) {
            return Err(SubstError::LabelClash(label.to_string()));
        }
        let term = subst_hole(&self.term, label);
        Ok(BareDiagram::new(term).expect("substitution preserves typing"))
    }

    pub fn port_graph(&self) -> PortGraph {
        PortGraph::from_diagram(self)
    }
}

fn term_contains(t: &Term, needle: &Term) -> bool {
    if t == needle {
        return true;
    }
    match t {
        Term::Seq(a, b) | Term::Par(a, b) => term_contains(a, needle) || term_contains(b, needle),
        Term::Trace(a) => term_contains(a, needle),
        _ => false,
    }
}

fn subst_hole(t: &Term, label: &str) -> Term {
    match t {
        Term::Hole => Term::Gate(label.to_string()),
        Term::Seq(a, b) => seq(subst_hole(a, label), subst_hole(b, label)),
        Term::Par(a, b) => par(subst_hole(a, label), subst_hole(b, label)),
        Term::Trace(a) => trace(subst_hole(a, label)),
        other => other.clone(),
    }
}

/// Context classes: `C0` = PBS-free, `C1` = neg-free, `C2` = unrestricted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ContextClass {
    C0,
    C1,
    C2,
}

/// The set of classes an arity-1 context belongs to (`C2` always).
pub fn classify_context(c: &BareDiagram) -> Result<BTreeSet<ContextClass>, ContextError> {
    if !c.has_hole() {
        return Err(ContextError::NoHole);
    }
    if c.arity() != 1 {
        return Err(ContextError::NotArityOne(c.arity()));
    }
    let mut classes = BTreeSet::from([ContextClass::C2]);
    if !c.contains_pbs() {
        classes.insert(ContextClass::C0);
    }
    if !c.contains_neg() {
        classes.insert(ContextClass::C1);
    }
    Ok(classes)
}

/// Node kinds that survive in the port-graph normal form. Wires, swaps,
/// the empty diagram and trace links are pure wiring and are contracted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Neg,
    Pbs,
    Gate,
    Hole,
}

impl NodeKind {
    pub fn ports(self) -> usize {
        match self {
            NodeKind::Neg | NodeKind::Gate | NodeKind::Hole => 1,
            NodeKind::Pbs => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PgNode {
    pub kind: NodeKind,
    pub label: Option<Label>,
}

/// A port of the canonical graph. Edges run from a `BoundaryIn`/`NodeOut`
/// source to a `NodeIn`/`BoundaryOut` sink.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PortRef {
    BoundaryIn(usize),
    NodeOut(usize, usize),
    NodeIn(usize, usize),
    BoundaryOut(usize),
}

/// `(node, port)` endpoint local to a closed component.
pub type LocalPort = (usize, usize);

/// Fully closed component containing only unlabeled nodes; compared up to
/// isomorphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedComponent {
    kinds: Vec<NodeKind>,
    /// out port -> in port.
    edges: Vec<(LocalPort, LocalPort)>,
}

pub const MAX_CLOSED_NODES: usize = 16;

/// Canonical port graph: gate labels give node identity, unlabeled nodes
/// are numbered by breadth-first traversal from the boundary inputs (then
/// from labeled nodes in label order), closed label-free components are
/// kept aside for isomorphism comparison, and bare closed loops are
/// counted.
#[derive(Clone, Debug)]
pub struct PortGraph {
    arity: usize,
    nodes: Vec<PgNode>,
    edges: BTreeSet<(PortRef, PortRef)>,
    free_loops: usize,
    closed: Vec<ClosedComponent>,
}

impl PortGraph {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn nodes(&self) -> &[PgNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(PortRef, PortRef)> {
        &self.edges
    }

    pub fn free_loops(&self) -> usize {
        self.free_loops
    }

    pub fn closed_components(&self) -> &[ClosedComponent] {
        &self.closed
    }

    /// The alphabet recoverable from the graph (structural round-trip).
    pub fn alphabet(&self) -> BTreeSet<Label> {
        self.nodes.iter().filter_map(|n| n.label.clone()).collect()
    }

    /// Successor map for token simulation: source port -> sink port.
    pub fn edge_map(&self) -> HashMap<PortRef, PortRef> {
        self.edges.iter().copied().collect()
    }

    fn from_diagram(d: &BareDiagram) -> PortGraph {
        let mut b = NetBuilder::new();
        let (ins, outs) = b.build(&d.term);
        assert_eq!(ins.len(), d.arity);
        assert_eq!(outs.len(), d.arity);
        for (i, &net) in ins.iter().enumerate() {
            b.set_src(net, PortRef::BoundaryIn(i));
        }
        for (o, &net) in outs.iter().enumerate() {
            b.set_dst(net, PortRef::BoundaryOut(o));
        }
        b.finish(d.arity)
    }
}

/// Netlist builder: every wire segment is a net; composition unifies nets.
struct NetBuilder {
    raw_nodes: Vec<PgNode>,
    parent: Vec<usize>,
    src: HashMap<usize, PortRef>,
    dst: HashMap<usize, PortRef>,
}

impl NetBuilder {
    fn new() -> Self {
        NetBuilder {
            raw_nodes: Vec::new(),
            parent: Vec::new(),
            src: HashMap::new(),
            dst: HashMap::new(),
        }
    }

    fn fresh_net(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return;
        }
        self.parent[rb] = ra;
        if let Some(s) = self.dst.remove(&rb) {
            let old = self.dst.insert(ra, s);
            assert!(old.is_none(), "net with two sinks");
        }
        if let Some(s) = self.src.remove(&rb) {
            let old = self.src.insert(ra, s);
            assert!(old.is_none(), "net with two sources");
        }
    }

    fn set_src(&mut self, net: usize, p: PortRef) {
        let r = self.find(net);
        let old = self.src.insert(r, p);
        assert!(old.is_none(), "net with two sources");
    }

    fn set_dst(&mut self, net: usize, p: PortRef) {
        let r = self.find(net);
        let old = self.dst.insert(r, p);
        assert!(old.is_none(), "net with two sinks");
    }

    fn add_node(&mut self, kind: NodeKind, label: Option<Label>) -> (Vec<usize>, Vec<usize>) {
        let idx = self.raw_nodes.len();
        self.raw_nodes.push(PgNode { kind, label });
        let n = kind.ports();
        let ins: Vec<usize> = (0..n).map(|_| self.fresh_net()).collect();
        let outs: Vec<usize> = (0..n).map(|_| self.fresh_net()).collect();
        for (p, &net) in ins.iter().enumerate() {
            self.set_dst(net, PortRef::NodeIn(idx, p));
        }
        for (p, &net) in outs.iter().enumerate() {
            self.set_src(net, PortRef::NodeOut(idx, p));
        }
        (ins, outs)
    }

    fn build(&mut self, t: &Term) -> (Vec<usize>, Vec<usize>) {
        match t {
            Term::Empty => (vec![], vec![]),
            Term::Wire => {
                let n = self.fresh_net();
                (vec![n], vec![n])
            }
            Term::Swap => {
                let a = self.fresh_net();
                let b = self.fresh_net();
                (vec![a, b], vec![b, a])
            }
            Term::Neg => self.add_node(NodeKind::Neg, None),
            Term::Pbs => self.add_node(NodeKind::Pbs, None),
            Term::Gate(l) => self.add_node(NodeKind::Gate, Some(l.clone())),
            Term::Hole => self.add_node(NodeKind::Hole, None),
            Term::Seq(a, b) => {
                let (a_in, a_out) = self.build(a);
                let (b_in, b_out) = self.build(b);
                assert_eq!(a_out.len(), b_in.len());
                for (&x, &y) in a_out.iter().zip(&b_in) {
                    self.union(x, y);
                }
                (a_in, b_out)
            }
            Term::Par(a, b) => {
                let (mut a_in, mut a_out) = self.build(a);
                let (b_in, b_out) = self.build(b);
                a_in.extend(b_in);
                a_out.extend(b_out);
                (a_in, a_out)
            }
            Term::Trace(a) => {
                let (mut ins, mut outs) = self.build(a);
                let last_out = outs.pop().expect("trace of nullary");
                let last_in = ins.pop().expect("trace of nullary");
                self.union(last_out, last_in);
                (ins, outs)
            }
        }
    }

    fn finish(mut self, arity: usize) -> PortGraph {
        // Collect raw edges and free loops.
        let mut raw_edges: Vec<(PortRef, PortRef)> = Vec::new();
        let mut free_loops = 0usize;
        let roots: BTreeSet<usize> = (0..self.parent.len()).map(|i| self_find(&mut self.parent, i)).collect();
        for r in roots {
            match (self.src.get(&r), self.dst.get(&r)) {
                (Some(&s), Some(&d)) => raw_edges.push((s, d)),
                (None, None) => free_loops += 1,
                _ => unreachable!("half-connected net in a typechecked diagram"),
            }
        }

        // Successor map on raw node indices.
        let from_src: HashMap<PortRef, PortRef> = raw_edges.iter().copied().collect();
        let nraw = self.raw_nodes.len();

        // Breadth-first numbering: boundary inputs, then the hole, then
        // labeled gates in label order; out-ports visited in port order,
        // then in-ports (backward) to cover components hanging off shared
        // nodes.
        let mut number: Vec<Option<usize>> = vec![None; nraw];
        let mut next = 0usize;
        let mut queue: VecDeque<usize> = VecDeque::new();
        let into_dst: HashMap<PortRef, PortRef> =
            raw_edges.iter().map(|&(s, d)| (d, s)).collect();

        let visit = |raw: usize,
                         number: &mut Vec<Option<usize>>,
                         next: &mut usize,
                         queue: &mut VecDeque<usize>| {
            if number[raw].is_none() {
                number[raw] = Some(*next);
                *next += 1;
                queue.push_back(raw);
            }
        };

        let drain = |number: &mut Vec<Option<usize>>,
                         next: &mut usize,
                         queue: &mut VecDeque<usize>| {
            while let Some(k) = queue.pop_front() {
                let ports = self.raw_nodes[k].kind.ports();
                for p in 0..ports {
                    if let Some(&PortRef::NodeIn(m, _)) = from_src.get(&PortRef::NodeOut(k, p)) {
                        if number[m].is_none() {
                            number[m] = Some(*next);
                            *next += 1;
                            queue.push_back(m);
                        }
                    }
                }
                for p in 0..ports {
                    if let Some(&PortRef::NodeOut(m, _)) = into_dst.get(&PortRef::NodeIn(k, p)) {
                        if number[m].is_none() {
                            number[m] = Some(*next);
                            *next += 1;
                            queue.push_back(m);
                        }
                    }
                }
            }
        };

        for i in 0..arity {
            if let Some(&PortRef::NodeIn(m, _)) = from_src.get(&PortRef::BoundaryIn(i)) {
                visit(m, &mut number, &mut next, &mut queue);
            }
            drain(&mut number, &mut next, &mut queue);
        }
        let mut labeled: Vec<(Option<&Label>, usize)> = Vec::new();
        for (i, n) in self.raw_nodes.iter().enumerate() {
            if n.kind == NodeKind::Hole {
                labeled.push((None, i));
            }
        }
        for (i, n) in self.raw_nodes.iter().enumerate() {
            if n.kind == NodeKind::Gate {
                labeled.push((Some(n.label.as_ref().unwrap()), i));
            }
        }
        labeled.sort_by(|a, b| a.0.cmp(&b.0));
        for (_, raw) in labeled {
            visit(raw, &mut number, &mut next, &mut queue);
            drain(&mut number, &mut next, &mut queue);
        }

        // Anything still unnumbered is a closed unlabeled component.
        let renumber = |p: PortRef, number: &Vec<Option<usize>>| -> Option<PortRef> {
            Some(match p {
                PortRef::BoundaryIn(i) => PortRef::BoundaryIn(i),
                PortRef::BoundaryOut(i) => PortRef::BoundaryOut(i),
                PortRef::NodeOut(k, q) => PortRef::NodeOut(number[k]?, q),
                PortRef::NodeIn(k, q) => PortRef::NodeIn(number[k]?, q),
            })
        };
        let mut nodes: Vec<PgNode> = vec![
            PgNode { kind: NodeKind::Neg, label: None };
            next
        ];
        for (raw, n) in number.iter().enumerate() {
            if let Some(n) = n {
                nodes[*n] = self.raw_nodes[raw].clone();
            }
        }
        let mut edges = BTreeSet::new();
        let mut closed_edges: Vec<(PortRef, PortRef)> = Vec::new();
        for &(s, d) in &raw_edges {
            match (renumber(s, &number), renumber(d, &number)) {
                (Some(a), Some(b)) => {
                    edges.insert((a, b));
                }
                (None, None) => closed_edges.push((s, d)),
                _ => unreachable!("edge between numbered and closed parts"),
            }
        }

        let closed = extract_closed_components(&self.raw_nodes, &number, &closed_edges);

        PortGraph { arity, nodes, edges, free_loops, closed }
    }
}

fn self_find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn extract_closed_components(
    raw_nodes: &[PgNode],
    number: &[Option<usize>],
    closed_edges: &[(PortRef, PortRef)],
) -> Vec<ClosedComponent> {
    let closed_nodes: Vec<usize> = (0..raw_nodes.len()).filter(|&i| number[i].is_none()).collect();
    if closed_nodes.is_empty() {
        return vec![];
    }
    // Union-find over the closed nodes via the closed edges.
    let idx_of: HashMap<usize, usize> =
        closed_nodes.iter().enumerate().map(|(i, &raw)| (raw, i)).collect();
    let mut parent: Vec<usize> = (0..closed_nodes.len()).collect();
    let raw_of_port = |p: PortRef| -> usize {
        match p {
            PortRef::NodeOut(k, _) | PortRef::NodeIn(k, _) => k,
            _ => unreachable!(),
        }
    };
    for &(s, d) in closed_edges {
        let a = idx_of[&raw_of_port(s)];
        let b = idx_of[&raw_of_port(d)];
        let (ra, rb) = (self_find(&mut parent, a), self_find(&mut parent, b));
        if ra != rb {
            parent[rb] = ra;
        }
    }
    let mut groups: BTreeMapGroups = std::collections::BTreeMap::new();
    for i in 0..closed_nodes.len() {
        let r = self_find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out = Vec::new();
    for (_, members) in groups {
        let local: HashMap<usize, usize> =
            members.iter().enumerate().map(|(li, &gi)| (gi, li)).collect();
        let kinds: Vec<NodeKind> =
            members.iter().map(|&gi| raw_nodes[closed_nodes[gi]].kind).collect();
        let mut edges = Vec::new();
        for &(s, d) in closed_edges {
            let si = idx_of[&raw_of_port(s)];
            if !local.contains_key(&si) {
                continue;
            }
            let (sn, sp) = match s {
                PortRef::NodeOut(k, p) => (local[&idx_of[&k]], p),
                _ => unreachable!(),
            };
            let (dn, dp) = match d {
                PortRef::NodeIn(k, p) => (local[&idx_of[&k]], p),
                _ => unreachable!(),
            };
            edges.push(((sn, sp), (dn, dp)));
        }
        edges.sort();
        out.push(ClosedComponent { kinds, edges });
    }
    out
}

type BTreeMapGroups = std::collections::BTreeMap<usize, Vec<usize>>;

/// Structural congruence: equality of canonical port graphs, with fully
/// closed label-free components compared by brute-force isomorphism.
/// Diagrams of different arity are simply not congruent.
pub fn congruent(a: &BareDiagram, b: &BareDiagram) -> Result<bool, CongruenceError> {
    let ga = a.port_graph();
    let gb = b.port_graph();
    congruent_graphs(&ga, &gb)
}

pub fn congruent_graphs(a: &PortGraph, b: &PortGraph) -> Result<bool, CongruenceError> {
    if a.arity != b.arity
        || a.free_loops != b.free_loops
        || a.nodes != b.nodes
        || a.edges != b.edges
    {
        return Ok(false);
    }
    match_closed_components(&a.closed, &b.closed)
}

fn match_closed_components(
    xs: &[ClosedComponent],
    ys: &[ClosedComponent],
) -> Result<bool, CongruenceError> {
    for c in xs.iter().chain(ys.iter()) {
        if c.kinds.len() > MAX_CLOSED_NODES {
            return Err(CongruenceError::ClosedComponentTooLarge(c.kinds.len()));
        }
    }
    if xs.len() != ys.len() {
        return Ok(false);
    }
    // Multiset matching with backtracking over candidate pairings.
    let mut used = vec![false; ys.len()];
    Ok(match_rec(xs, ys, 0, &mut used))
}

fn match_rec(xs: &[ClosedComponent], ys: &[ClosedComponent], i: usize, used: &mut [bool]) -> bool {
    if i == xs.len() {
        return true;
    }
    for j in 0..ys.len() {
        if !used[j] && components_isomorphic(&xs[i], &ys[j]) {
            used[j] = true;
            if match_rec(xs, ys, i + 1, used) {
                return true;
            }
            used[j] = false;
        }
    }
    false
}

fn components_isomorphic(a: &ClosedComponent, b: &ClosedComponent) -> bool {
    if a.kinds.len() != b.kinds.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let mut kind_count_a: HashMap<NodeKind, usize> = HashMap::new();
    let mut kind_count_b: HashMap<NodeKind, usize> = HashMap::new();
    for k in &a.kinds {
        *kind_count_a.entry(*k).or_default() += 1;
    }
    for k in &b.kinds {
        *kind_count_b.entry(*k).or_default() += 1;
    }
    if kind_count_a != kind_count_b {
        return false;
    }
    let b_edges: std::collections::HashSet<(LocalPort, LocalPort)> =
        b.edges.iter().copied().collect();
    let mut assignment: Vec<Option<usize>> = vec![None; a.kinds.len()];
    let mut taken = vec![false; b.kinds.len()];
    iso_backtrack(a, b, &b_edges, 0, &mut assignment, &mut taken)
}

fn iso_backtrack(
    a: &ClosedComponent,
    b: &ClosedComponent,
    b_edges: &std::collections::HashSet<(LocalPort, LocalPort)>,
    node: usize,
    assignment: &mut Vec<Option<usize>>,
    taken: &mut Vec<bool>,
) -> bool {
    if node == a.kinds.len() {
        return a.edges.iter().all(|&((sn, sp), (dn, dp))| {
            b_edges.contains(&((assignment[sn].unwrap(), sp), (assignment[dn].unwrap(), dp)))
        });
    }
    for cand in 0..b.kinds.len() {
        if taken[cand] || b.kinds[cand] != a.kinds[node] {
            continue;
        }
        assignment[node] = Some(cand);
        taken[cand] = true;
        // Prune: edges with both endpoints assigned must map correctly.
        let consistent = a.edges.iter().all(|&((sn, sp), (dn, dp))| {
            match (assignment[sn], assignment[dn]) {
                (Some(x), Some(y)) => b_edges.contains(&((x, sp), (y, dp))),
                _ => true,
            }
        });
        if consistent && iso_backtrack(a, b, b_edges, node + 1, assignment, taken) {
            return true;
        }
        assignment[node] = None;
        taken[cand] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use Term::*;

    fn d(t: Term) -> BareDiagram {
        BareDiagram::new(t).unwrap()
    }

    #[test]
    fn typing_of_generators_and_combinators() {
        assert_eq!(d(Empty).arity(), 0);
        assert_eq!(d(Wire).arity(), 1);
        assert_eq!(d(par(Wire, Pbs)).arity(), 3);
        let t = d(trace(par(gate("a"), Pbs)));
        assert_eq!(t.arity(), 2);
        assert_eq!(t.alphabet(), &BTreeSet::from(["a".to_string()]));
    }

    #[test]
    fn linearity_rejects_duplicate_labels() {
        let err = BareDiagram::new(seq(gate("a"), gate("a"))).unwrap_err();
        assert_eq!(err, TypeError::DuplicateLabel("a".into()));
    }

    #[test]
    fn seq_arity_mismatch_rejected() {
        let err = BareDiagram::new(seq(Wire, Pbs)).unwrap_err();
        assert_eq!(err, TypeError::ArityMismatch { left: 1, right: 2 });
    }

    #[test]
    fn at_most_one_hole() {
        let err = BareDiagram::new(seq(Hole, Hole)).unwrap_err();
        assert_eq!(err, TypeError::MultipleHoles);
        assert!(d(seq(Hole, gate("a"))).has_hole());
    }

    #[test]
    fn trace_of_empty_rejected() {
        assert_eq!(BareDiagram::new(trace(Empty)).unwrap_err(), TypeError::TraceOfNullary);
    }

    #[test]
    fn substitute_hole() {
        let c = d(seq(gate("b"), Hole));
        let filled = c.substitute("a").unwrap();
        assert_eq!(filled.term(), &seq(gate("b"), gate("a")));
        assert_eq!(c.substitute("b").unwrap_err(), SubstError::LabelClash("b".into()));
        assert_eq!(d(gate("x")).substitute("a").unwrap_err(), SubstError::NoHole);
    }

    #[test]
    fn yanking_makes_trace_of_swap_a_wire() {
        assert_eq!(congruent(&d(trace(Swap)), &d(Wire)), Ok(true));
    }

    #[test]
    fn identity_is_neutral() {
        assert_eq!(congruent(&d(seq(Wire, Neg)), &d(seq(Neg, Wire))), Ok(true));
        assert_eq!(congruent(&d(seq(Wire, Neg)), &d(Neg)), Ok(true));
    }

    #[test]
    fn superposing_makes_two_constructions_equal() {
        // Tr(a (+) pbs) vs a (+) Tr(pbs): same graphical representation.
        let lhs = d(trace(par(gate("a"), Pbs)));
        let rhs = d(par(gate("a"), trace(Pbs)));
        assert_eq!(congruent(&lhs, &rhs), Ok(true));
    }

    #[test]
    fn double_negation_is_not_congruent_to_wire() {
        assert_eq!(congruent(&d(seq(Neg, Neg)), &d(Wire)), Ok(false));
    }

    #[test]
    fn reassociation_gives_identical_canonical_form() {
        let a = d(seq(seq(Neg, gate("a")), gate("b")));
        let b = d(seq(Neg, seq(gate("a"), gate("b"))));
        let (ga, gb) = (a.port_graph(), b.port_graph());
        assert_eq!(ga.nodes(), gb.nodes());
        assert_eq!(ga.edges(), gb.edges());
    }

    #[test]
    fn structural_round_trip_of_arity_and_alphabet() {
        let t = d(trace(par(seq(gate("a"), Neg), Pbs)));
        let g = t.port_graph();
        assert_eq!(g.arity(), t.arity());
        assert_eq!(g.alphabet(), *t.alphabet());
    }

    #[test]
    fn free_loops_are_counted() {
        let g = d(par(trace(Wire), Wire)).port_graph();
        assert_eq!(g.free_loops(), 1);
        assert_eq!(congruent(&d(par(trace(Wire), Wire)), &d(Wire)), Ok(false));
    }

    #[test]
    fn closed_unlabeled_components_compared_by_isomorphism() {
        // Tr(neg ; neg) as a closed loop, built two ways.
        let lhs = d(par(Wire, trace(seq(Neg, Neg))));
        let rhs = d(par(trace(seq(Neg, Neg)), Wire));
        assert_eq!(congruent(&lhs, &rhs), Ok(true));
        let other = d(par(Wire, trace(Neg)));
        assert_eq!(congruent(&lhs, &other), Ok(false));
    }

    #[test]
    fn swap_conjugated_pbs_is_not_congruent_to_pbs() {
        // Congruence is topological, not semantic: the axioms never permute
        // the ports of a pbs node.
        let conj = d(seq(seq(Swap, Pbs), Swap));
        assert_eq!(congruent(&conj, &d(Pbs)), Ok(false));
    }

    #[test]
    fn classification_of_contexts() {
        use ContextClass::*;
        let hole = d(Hole);
        assert_eq!(classify_context(&hole).unwrap(), BTreeSet::from([C0, C1, C2]));
        let with_pbs = d(trace(seq(par(Wire, Hole), Pbs)));
        assert_eq!(classify_context(&with_pbs).unwrap(), BTreeSet::from([C1, C2]));
        let with_both = d(seq(Neg, trace(seq(par(Wire, Hole), Pbs))));
        assert_eq!(classify_context(&with_both).unwrap(), BTreeSet::from([C2]));
        let with_neg = d(seq(Neg, Hole));
        assert_eq!(classify_context(&with_neg).unwrap(), BTreeSet::from([C0, C2]));
        assert_eq!(
            classify_context(&d(par(Hole, Wire))).unwrap_err(),
            ContextError::NotArityOne(2)
        );
        assert_eq!(classify_context(&d(Wire)).unwrap_err(), ContextError::NoHole);
    }

    #[test]
    fn sigma_first_to_last_types() {
        for m in 0..4 {
            let s = d(sigma_first_to_last(m));
            assert_eq!(s.arity(), m + 1);
        }
    }

    #[test]
    fn move_wire_round_trips() {
        for n in 2..5 {
            for from in 0..n {
                for to in 0..n {
                    let (f, b) = move_wire(n, from, to);
                    let round = d(seq(f, b));
                    assert_eq!(congruent(&round, &d(identity(n))), Ok(true));
                }
            }
        }
    }
}
