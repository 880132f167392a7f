//! Quantum semantics of extended PBS-diagrams.
//!
//! An extended diagram is a bare diagram plus an assignment of purified
//! channels to its gate labels. Its action on a particle with joint
//! polarisation-position-data state is the unitary
//! `U = sum_{c,p} |c'><c| (x) |p'><p| (x) V_w` built from the word-path
//! table, where `V_w` multiplies the padded gate unitaries along the word
//! (first letter applied first) over the tensor product of all gate
//! environments. The quantum semantics is the CPTP map obtained by
//! conjugating with `U` and tracing out every environment.
//!
//! Basis order of the semantic space: polarisation (`H = 0`, `V = 1`),
//! then position `0..n-1`, then the data register. Environments are
//! ordered by ascending gate label; gates that no path traverses (fully
//! closed subdiagrams) contribute nothing and are left out of the global
//! environment.

use crate::channels::{kraus_of, ChannelError, PurifiedChannel};
use crate::diagram::{BareDiagram, Label};
use crate::linalg::{choi_from_kraus_unchecked, CMatrix, ChoiMatrix, Ket, LinalgError, C64};
use crate::pathsem::{path_table, PathError, Polarisation, WordPathTable};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Dense-materialization cap on `2 n dim_h prod(dim_e)`.
pub const SIZE_CAP: usize = 4096;

#[derive(Debug, Error)]
pub enum QsemError {
    #[error("quantum semantics needs a hole-free diagram; substitute the hole first")]
    HasHole,
    #[error("diagram of arity 0 has no semantics")]
    Arity0,
    #[error("assignment missing channel for gate `{0}`")]
    IncompleteAssignment(Label),
    #[error("gates disagree on the data dimension: {0} vs {1}")]
    DimHMismatch(usize, usize),
    #[error("total dimension {0} exceeds the dense cap {SIZE_CAP}")]
    SizeCap(usize),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Mapping from gate labels to purified channels, all sharing `dim_h`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GateAssignment {
    map: BTreeMap<Label, PurifiedChannel>,
}

impl GateAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: Label, ch: PurifiedChannel) {
        self.map.insert(label, ch);
    }

    pub fn get(&self, label: &str) -> Option<&PurifiedChannel> {
        self.map.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &PurifiedChannel)> {
        self.map.iter()
    }

    /// The common data dimension (1 for the empty assignment).
    pub fn dim_h(&self) -> Result<usize, QsemError> {
        let mut dim = None;
        for ch in self.map.values() {
            match dim {
                None => dim = Some(ch.dim_h()),
                Some(d) if d != ch.dim_h() => {
                    return Err(QsemError::DimHMismatch(d, ch.dim_h()))
                }
                _ => {}
            }
        }
        Ok(dim.unwrap_or(1))
    }
}

/// The ordered global environment of the gates a diagram actually uses.
#[derive(Clone, Debug)]
pub struct GlobalEnv {
    labels: Vec<Label>,
    dims: Vec<usize>,
    eps: Ket,
}

impl GlobalEnv {
    /// Environments in ascending label order; only `used` labels take part.
    fn new(g: &GateAssignment, used: &BTreeSet<Label>) -> Result<Self, QsemError> {
        let mut labels = Vec::new();
        let mut dims = Vec::new();
        let mut eps = Ket::new(vec![C64::new(1.0, 0.0)]);
        for l in used {
            let ch = g.get(l).ok_or_else(|| QsemError::IncompleteAssignment(l.clone()))?;
            labels.push(l.clone());
            dims.push(ch.dim_e());
            eps = eps.tensor(ch.env_state());
        }
        Ok(GlobalEnv { labels, dims, eps })
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn state(&self) -> &Ket {
        &self.eps
    }
}

struct Semantics {
    table: WordPathTable,
    env: GlobalEnv,
    dim_h: usize,
    arity: usize,
    /// Padded gate unitaries `V_a` on `H (x) E_G`, keyed by label.
    padded: BTreeMap<Label, CMatrix>,
}

impl Semantics {
    fn build(d: &BareDiagram, g: &GateAssignment) -> Result<Self, QsemError> {
        if d.has_hole() {
            return Err(QsemError::HasHole);
        }
        if d.arity() == 0 {
            return Err(QsemError::Arity0);
        }
        for l in d.alphabet() {
            if g.get(l).is_none() {
                return Err(QsemError::IncompleteAssignment(l.clone()));
            }
        }
        let dim_h = g.dim_h()?;
        let table = path_table(d)?;
        let mut used: BTreeSet<Label> = BTreeSet::new();
        for (_, r) in table.rows() {
            used.extend(r.word.iter().cloned());
        }
        let env = GlobalEnv::new(g, &used)?;
        let total = 2 * d.arity() * dim_h * env.dim();
        if total > SIZE_CAP {
            return Err(QsemError::SizeCap(total));
        }
        let mut padded = BTreeMap::new();
        for (slot, l) in env.labels.iter().enumerate() {
            let ch = g.get(l).unwrap();
            padded.insert(l.clone(), pad_to_global(ch.unitary(), dim_h, &env.dims, slot));
        }
        Ok(Semantics { table, env, dim_h, arity: d.arity(), padded })
    }

    /// `V_w = V_{w_k} ... V_{w_1}` (first letter applied first).
    fn word_unitary(&self, word: &[Label]) -> CMatrix {
        let dim = self.dim_h * self.env.dim();
        let mut v = CMatrix::identity(dim);
        for l in word {
            v = self.padded[l].mul(&v);
        }
        v
    }

    fn global_unitary(&self) -> CMatrix {
        let n = self.arity;
        let de = self.env.dim();
        let block = self.dim_h * de;
        let dim = 2 * n * block;
        let mut u = CMatrix::zeros(dim, dim);
        for pol in Polarisation::both() {
            for pos in 0..n {
                let r = self.table.get(pol, pos).expect("total table");
                let v = self.word_unitary(&r.word);
                let row0 = (r.out_pol.index() * n + r.out_pos) * block;
                let col0 = (pol.index() * n + pos) * block;
                for i in 0..block {
                    for j in 0..block {
                        u[(row0 + i, col0 + j)] = v[(i, j)];
                    }
                }
            }
        }
        u
    }

    fn kraus(&self) -> Vec<CMatrix> {
        let sys = 2 * self.arity * self.dim_h;
        kraus_of(&self.global_unitary(), self.env.state(), sys, self.env.dim())
    }
}

/// Embed a gate unitary on `H (x) E_slot` into `H (x) E_0 (x) ... (x) E_k`.
fn pad_to_global(u: &CMatrix, dim_h: usize, env_dims: &[usize], slot: usize) -> CMatrix {
    let left: usize = env_dims[..slot].iter().product();
    let mid = env_dims[slot];
    let right: usize = env_dims[slot + 1..].iter().product();
    let dim = dim_h * left * mid * right;
    let mut out = CMatrix::zeros(dim, dim);
    // index = ((h * left + a) * mid + e) * right + b
    for h1 in 0..dim_h {
        for h2 in 0..dim_h {
            for e1 in 0..mid {
                for e2 in 0..mid {
                    let z = u[(h1 * mid + e1, h2 * mid + e2)];
                    if z.re == 0.0 && z.im == 0.0 {
                        continue;
                    }
                    for a in 0..left {
                        for b in 0..right {
                            let row = ((h1 * left + a) * mid + e1) * right + b;
                            let col = ((h2 * left + a) * mid + e2) * right + b;
                            out[(row, col)] = z;
                        }
                    }
                }
            }
        }
    }
    out
}

/// The global unitary `U_D^G` on pol (x) pos (x) H (x) E_G.
pub fn global_unitary(d: &BareDiagram, g: &GateAssignment) -> Result<CMatrix, QsemError> {
    Ok(Semantics::build(d, g)?.global_unitary())
}

/// The ordered global environment the semantics of `(d, g)` acts with.
pub fn global_env(d: &BareDiagram, g: &GateAssignment) -> Result<GlobalEnv, QsemError> {
    Ok(Semantics::build(d, g)?.env)
}

/// Kraus family of the quantum semantics over the `E_G` basis.
pub fn semantics_kraus(d: &BareDiagram, g: &GateAssignment) -> Result<Vec<CMatrix>, QsemError> {
    Ok(Semantics::build(d, g)?.kraus())
}

/// The quantum semantics as a Choi matrix on pol (x) pos (x) H.
pub fn semantics_choi(d: &BareDiagram, g: &GateAssignment) -> Result<ChoiMatrix, QsemError> {
    let s = Semantics::build(d, g)?;
    let dim = 2 * s.arity * s.dim_h;
    Ok(choi_from_kraus_unchecked(&s.kraus(), dim, dim))
}

/// Apply the quantum semantics to an arbitrary operator (not necessarily a
/// state) on pol (x) pos (x) H.
pub fn apply_semantics(
    d: &BareDiagram,
    g: &GateAssignment,
    rho: &CMatrix,
) -> Result<CMatrix, QsemError> {
    let s = Semantics::build(d, g)?;
    let dim = 2 * s.arity * s.dim_h;
    if !rho.is_square() || rho.rows() != dim {
        return Err(QsemError::Linalg(LinalgError::DimensionMismatch(format!(
            "input operator must be {dim}x{dim}, got {}x{}",
            rho.rows(),
            rho.cols()
        ))));
    }
    let mut out = CMatrix::zeros(dim, dim);
    for k in s.kraus() {
        out = out.add(&k.mul(rho).mul(&k.dagger()));
    }
    Ok(out)
}

/// Basis index of `|pol, pos>` blocks: `(pol, pos, h) -> flat index`.
pub fn basis_index(pol: Polarisation, pos: usize, h: usize, arity: usize, dim_h: usize) -> usize {
    (pol.index() * arity + pos) * dim_h + h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::fixtures::{ch_ix, pauli_x};
    use crate::diagram::{gate, par, seq, trace, BareDiagram, Term};
    use crate::sample::{
        random_assignment, random_bare_diagram, random_channel, SampleRng, SamplerConfig,
    };
    use rand::SeedableRng;

    fn d(t: Term) -> BareDiagram {
        BareDiagram::new(t).unwrap()
    }

    fn assign(pairs: Vec<(&str, PurifiedChannel)>) -> GateAssignment {
        let mut g = GateAssignment::new();
        for (l, ch) in pairs {
            g.insert(l.to_string(), ch);
        }
        g
    }

    #[test]
    fn single_gate_unitary_is_identity_blocks_tensor_channel() {
        let ch = ch_ix();
        let u = global_unitary(&d(gate("a")), &assign(vec![("a", ch.clone())])).unwrap();
        let expected = CMatrix::identity(2).tensor(ch.unitary());
        assert!(u.max_abs_diff(&expected).unwrap() <= 1e-12);
    }

    #[test]
    fn neg_unitary_is_polarisation_flip() {
        let u = global_unitary(&d(Term::Neg), &GateAssignment::new()).unwrap();
        let expected = pauli_x();
        assert!(u.max_abs_diff(&expected).unwrap() <= 1e-12);
    }

    #[test]
    fn loop_diagram_block_is_the_word_product() {
        // The abab loop with channels A, B: the (V,0) block is V_B V_A V_B V_A.
        let mut rng = SampleRng::seed_from_u64(5);
        let a = random_channel(&mut rng, 2, 2);
        let b = random_channel(&mut rng, 2, 2);
        let diagram = d(trace(seq(
            par(Term::Wire, seq(seq(gate("a"), gate("b")), Term::Neg)),
            Term::Pbs,
        )));
        let g = assign(vec![("a", a.clone()), ("b", b.clone())]);
        let u = global_unitary(&diagram, &g).unwrap();
        // Independent padding: A on slot 0, B on slot 1 of E_G = E_a (x) E_b.
        let ia = CMatrix::identity(a.dim_e());
        let ib = CMatrix::identity(b.dim_e());
        let va = embed_mid(a.unitary(), 2, a.dim_e(), ib.rows());
        let vb = embed_right(b.unitary(), 2, ia.rows(), b.dim_e());
        let vword = vb.mul(&va).mul(&vb).mul(&va);
        // (V,0) block: rows/cols at pol V, pos 0.
        let block = a.dim_h() * a.dim_e() * b.dim_e();
        let off = block; // pol V = index 1, n = 1
        let mut got = CMatrix::zeros(block, block);
        for i in 0..block {
            for j in 0..block {
                got[(i, j)] = u[(off + i, off + j)];
            }
        }
        assert!(got.max_abs_diff(&vword).unwrap() <= 1e-12);
        // The (H,0) block is the identity.
        let mut hblock = CMatrix::zeros(block, block);
        for i in 0..block {
            for j in 0..block {
                hblock[(i, j)] = u[(i, j)];
            }
        }
        assert!(hblock.max_abs_diff(&CMatrix::identity(block)).unwrap() <= 1e-12);
    }

    /// U on H (x) E_a, extended by identity on a trailing factor.
    fn embed_mid(u: &CMatrix, _dim_h: usize, _dim_e: usize, right: usize) -> CMatrix {
        u.tensor(&CMatrix::identity(right))
    }

    /// U on H (x) E_b, with E_a inserted between H and E_b.
    fn embed_right(u: &CMatrix, dim_h: usize, left: usize, dim_e: usize) -> CMatrix {
        let dim = dim_h * left * dim_e;
        let mut out = CMatrix::zeros(dim, dim);
        for h1 in 0..dim_h {
            for h2 in 0..dim_h {
                for a in 0..left {
                    for e1 in 0..dim_e {
                        for e2 in 0..dim_e {
                            let row = (h1 * left + a) * dim_e + e1;
                            let col = (h2 * left + a) * dim_e + e2;
                            out[(row, col)] = u[(h1 * dim_e + e1, h2 * dim_e + e2)];
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn global_unitary_is_unitary_on_random_diagrams() {
        let mut rng = SampleRng::seed_from_u64(77);
        for _ in 0..25 {
            let arity = 1 + (rand::Rng::gen_range(&mut rng, 0..3usize));
            let diag = random_bare_diagram(&mut rng, arity, SamplerConfig::unrestricted());
            let g = random_assignment(&mut rng, &diag, 2, 2);
            match global_unitary(&diag, &g) {
                Ok(u) => assert!(u.is_unitary(crate::linalg::UNITARY_TOL)),
                Err(QsemError::SizeCap(_)) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn trivial_context_semantics_is_padded_s1() {
        let ch = ch_ix();
        let hole_filled = d(gate("a"));
        let g = assign(vec![("a", ch.clone())]);
        // Kraus of the semantics should be I_(2n) (x) K_e.
        let ks = semantics_kraus(&hole_filled, &g).unwrap();
        let expected: Vec<CMatrix> =
            ch.kraus().iter().map(|k| CMatrix::identity(2).tensor(k)).collect();
        for (got, want) in ks.iter().zip(&expected) {
            assert!(got.max_abs_diff(want).unwrap() <= 1e-12);
        }
        let choi = semantics_choi(&hole_filled, &g).unwrap();
        choi.validate_cptp(1e-9).unwrap();
    }

    #[test]
    fn wire_semantics_is_identity_choi() {
        let choi = semantics_choi(&d(Term::Wire), &GateAssignment::new()).unwrap();
        let id_choi = choi_from_kraus_unchecked(&[CMatrix::identity(2)], 2, 2);
        assert!(choi.max_abs_diff(&id_choi).unwrap() <= 1e-12);
    }

    #[test]
    fn neg_maps_h_state_to_v_state() {
        let mut rng = SampleRng::seed_from_u64(3);
        let sigma = {
            let k = crate::sample::random_state(&mut rng, 1);
            k.outer(&k)
        };
        let _ = sigma;
        // dim_h = 1: basis is pol only.
        let rho = Ket::basis(2, 0).outer(&Ket::basis(2, 0)); // |H,0><H,0|
        let out = apply_semantics(&d(Term::Neg), &GateAssignment::new(), &rho).unwrap();
        let expected = Ket::basis(2, 1).outer(&Ket::basis(2, 1));
        assert!(out.max_abs_diff(&expected).unwrap() <= 1e-12);
    }

    #[test]
    fn apply_agrees_with_choi_contraction() {
        let mut rng = SampleRng::seed_from_u64(41);
        let diag = d(trace(seq(par(Term::Wire, gate("a")), Term::Pbs)));
        let g = assign(vec![("a", random_channel(&mut rng, 2, 2))]);
        let dim = 2 * 2;
        let rho = CMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0))
        });
        let via_kraus = apply_semantics(&diag, &g, &rho).unwrap();
        let via_choi = semantics_choi(&diag, &g).unwrap().apply(&rho).unwrap();
        assert!(via_kraus.max_abs_diff(&via_choi).unwrap() <= 1e-10);
    }

    #[test]
    fn trace_preservation_on_gate_with_environment() {
        let mut rng = SampleRng::seed_from_u64(13);
        let g = assign(vec![("a", random_channel(&mut rng, 2, 2))]);
        let rho = {
            let k = crate::sample::random_state(&mut rng, 4);
            k.outer(&k)
        };
        let out = apply_semantics(&d(gate("a")), &g, &rho).unwrap();
        assert!((out.trace() - rho.trace()).norm() <= 1e-10);
    }

    #[test]
    fn pure_unitary_evolution_has_rank_one_choi() {
        let mut rng = SampleRng::seed_from_u64(29);
        let g = assign(vec![("a", random_channel(&mut rng, 2, 1))]);
        let choi = semantics_choi(&d(gate("a")), &g).unwrap();
        assert_eq!(choi.numerical_rank(1e-9).unwrap(), 1);
    }

    #[test]
    fn closed_gates_are_ignored_but_assignment_must_be_total() {
        let mut rng = SampleRng::seed_from_u64(31);
        let with_closed = d(par(gate("a"), trace(gate("z"))));
        let cha = random_channel(&mut rng, 2, 2);
        let mut g = assign(vec![("a", cha.clone())]);
        assert!(matches!(
            semantics_choi(&with_closed, &g),
            Err(QsemError::IncompleteAssignment(l)) if l == "z"
        ));
        g.insert("z".into(), random_channel(&mut rng, 2, 3));
        let choi = semantics_choi(&with_closed, &g).unwrap();
        let plain = semantics_choi(&d(gate("a")), &assign(vec![("a", cha)])).unwrap();
        assert!(choi.max_abs_diff(&plain).unwrap() <= 1e-12);
    }

    #[test]
    fn size_cap_fires() {
        let mut rng = SampleRng::seed_from_u64(37);
        let mut g = GateAssignment::new();
        for l in ["a", "b", "c"] {
            g.insert(l.into(), random_channel(&mut rng, 2, 16));
        }
        let term = seq(seq(gate("a"), gate("b")), gate("c"));
        assert!(matches!(semantics_choi(&d(term), &g), Err(QsemError::SizeCap(_))));
    }
}
