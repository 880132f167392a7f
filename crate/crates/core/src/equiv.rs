//! Observational-equivalence deciders for purified channels, with
//! constructive distinguishing witnesses.
//!
//! * level 0 (PBS-free contexts): equal first-level superoperators;
//! * level 1 (neg-free contexts): equal S1 and T1;
//! * level 2 (all contexts): equal T1, S2 and T2 (S2 implies S1).
//!
//! Every non-equivalence comes with a witness: a context with one hole, a
//! channel assignment for its remaining gates, and an input operator such
//! that plugging the two channels into the hole yields semantics that
//! differ by the reported separation. The witnesses follow the proofs:
//! the trivial context for S1, a loop routing the vertical polarisation
//! through the hole for T1, the same loop traversing hole-V-hole for T2
//! (with V drawn from the generalized Pauli family, which spans the
//! operator space), and for S2 a two-pass context whose auxiliary gates
//! prepare a separating two-register state and rotate the measurement.
//!
//! The module also checks iso-preorder witnesses and refutes
//! iso-equivalence via generalized moments; deciding full iso-equivalence
//! is out of scope (it is a transitive closure with no known procedure).

use crate::channels::{env_diagonal_block, fixtures, ChannelError, PurifiedChannel};
use crate::diagram::{par, seq, trace, BareDiagram, ContextClass, Label, Term};
use crate::linalg::{
    hermitian_eigs, unitary_completing_columns, unitary_from_first_column, CMatrix, Ket,
    LinalgError, C64, DEFAULT_TOL,
};
use crate::pathsem::Polarisation;
use crate::qsem::{apply_semantics, GateAssignment, QsemError};
use crate::synth::{synthesize, WordFamily};
use crate::sample::SampleRng;
use rand::SeedableRng;
use thiserror::Error;

pub use crate::sample::sample_context;

#[derive(Debug, Error)]
pub enum EquivError {
    #[error("channels act on different data dimensions: {0} vs {1}")]
    DimHMismatch(usize, usize),
    #[error("witness matrix must map E_a (dim {expected_cols}) to E_b (dim {expected_rows}), got {rows}x{cols}")]
    WitnessShape { expected_rows: usize, expected_cols: usize, rows: usize, cols: usize },
    #[error("channels are equal on the requested functional; no witness exists")]
    NoWitness,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Qsem(#[from] QsemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Criterion {
    S1,
    T1,
    S2,
    T2,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Criterion::S1 => write!(f, "S1"),
            Criterion::T1 => write!(f, "T1"),
            Criterion::S2 => write!(f, "S2"),
            Criterion::T2 => write!(f, "T2"),
        }
    }
}

/// A context, an assignment for its non-hole gates, and an input operator
/// separating the two channels by `separation` in output max-norm.
#[derive(Clone, Debug)]
pub struct DistinguishingWitness {
    pub context: BareDiagram,
    pub gates: GateAssignment,
    pub input: CMatrix,
    pub separation: f64,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub level: u8,
    pub equivalent: bool,
    pub failed_criteria: Vec<Criterion>,
    pub witness: Option<DistinguishingWitness>,
}

/// Fill the witness context with `ch` and run its quantum semantics on the
/// witness input.
pub fn run_witness(
    w: &DistinguishingWitness,
    ch: &PurifiedChannel,
) -> Result<CMatrix, EquivError> {
    let label = fresh_label(&w.context);
    let filled = w.context.substitute(&label).expect("hole is present and label fresh");
    let mut gates = w.gates.clone();
    gates.insert(label, ch.clone());
    Ok(apply_semantics(&filled, &gates, &w.input)?)
}

/// Output max-norm difference of the witness run on the two channels.
pub fn verify_witness(
    w: &DistinguishingWitness,
    a: &PurifiedChannel,
    b: &PurifiedChannel,
) -> Result<f64, EquivError> {
    let oa = run_witness(w, a)?;
    let ob = run_witness(w, b)?;
    Ok(oa.max_abs_diff(&ob)?)
}

fn fresh_label(d: &BareDiagram) -> Label {
    let mut i = 0usize;
    loop {
        let cand = if i == 0 { "x".to_string() } else { format!("x{i}") };
        if !d.alphabet().contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

fn ensure_same_dim(a: &PurifiedChannel, b: &PurifiedChannel) -> Result<usize, EquivError> {
    if a.dim_h() != b.dim_h() {
        return Err(EquivError::DimHMismatch(a.dim_h(), b.dim_h()));
    }
    Ok(a.dim_h())
}

/// `~0`: equality of first-level superoperators (PBS-free contexts).
pub fn equiv0(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
) -> Result<Verdict, EquivError> {
    ensure_same_dim(a, b)?;
    let diff = a.s1().max_abs_diff(&b.s1())?;
    if diff <= tol {
        return Ok(Verdict { level: 0, equivalent: true, failed_criteria: vec![], witness: None });
    }
    let witness = s1_witness(a, b)?;
    Ok(Verdict {
        level: 0,
        equivalent: false,
        failed_criteria: vec![Criterion::S1],
        witness: Some(witness),
    })
}

/// `~1`: equal S1 and T1 (neg-free contexts).
pub fn equiv1(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
) -> Result<Verdict, EquivError> {
    ensure_same_dim(a, b)?;
    let mut failed = Vec::new();
    if a.s1().max_abs_diff(&b.s1())? > tol {
        failed.push(Criterion::S1);
    }
    if a.t1().max_abs_diff(&b.t1())? > tol {
        failed.push(Criterion::T1);
    }
    let witness = if failed.contains(&Criterion::S1) {
        Some(s1_witness(a, b)?)
    } else if failed.contains(&Criterion::T1) {
        Some(t1_witness(a, b)?)
    } else {
        None
    };
    Ok(Verdict { level: 1, equivalent: failed.is_empty(), failed_criteria: failed, witness })
}

/// `~2`: equal T1, S2 and T2 (all contexts). S1 is implied by S2.
pub fn equiv2(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
) -> Result<Verdict, EquivError> {
    equiv2_seeded(a, b, tol, 0)
}

/// As [`equiv2`], seeding the randomized fallback of the S2 witness search.
pub fn equiv2_seeded(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
    seed: u64,
) -> Result<Verdict, EquivError> {
    ensure_same_dim(a, b)?;
    let mut failed = Vec::new();
    if a.t1().max_abs_diff(&b.t1())? > tol {
        failed.push(Criterion::T1);
    }
    if a.s2().max_abs_diff(&b.s2())? > tol {
        failed.push(Criterion::S2);
    }
    if a.t2().max_abs_diff(&b.t2())? > tol {
        failed.push(Criterion::T2);
    }
    let witness = if failed.contains(&Criterion::T1) {
        Some(t1_witness(a, b)?)
    } else if failed.contains(&Criterion::S2) {
        Some(s2_witness_seeded(a, b, tol, seed)?)
    } else if failed.contains(&Criterion::T2) {
        Some(t2_context_witness(a, b, tol)?)
    } else {
        None
    };
    Ok(Verdict { level: 2, equivalent: failed.is_empty(), failed_criteria: failed, witness })
}

/// Decide at `level` and return the witness when the channels differ.
pub fn distinguish(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    level: u8,
    tol: f64,
) -> Result<Verdict, EquivError> {
    distinguish_seeded(a, b, level, tol, 0)
}

/// As [`distinguish`] with an explicit seed for randomized fallbacks.
pub fn distinguish_seeded(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    level: u8,
    tol: f64,
    seed: u64,
) -> Result<Verdict, EquivError> {
    match level {
        0 => equiv0(a, b, tol),
        1 => equiv1(a, b, tol),
        2 => equiv2_seeded(a, b, tol, seed),
        _ => panic!("level must be 0, 1 or 2"),
    }
}

/// Trivial context (a bare hole).
pub fn trivial_context() -> BareDiagram {
    BareDiagram::new(Term::Hole).unwrap()
}

/// The loop context routing V through the hole and H straight:
/// `tr((id + hole) ; pbs)`, neg-free.
pub fn t1_loop_context() -> BareDiagram {
    BareDiagram::new(trace(seq(par(Term::Wire, Term::Hole), Term::Pbs))).unwrap()
}

/// Context whose V word is `hole . v . hole` (requires a negation) with a
/// scalar-environment gate `v`; H passes straight through.
pub fn t2_loop_context(v_label: &str) -> BareDiagram {
    let mut f = WordFamily::empty(1);
    f.set(
        Polarisation::V,
        0,
        vec!["h".to_string(), v_label.to_string(), "h".to_string()],
    )
    .unwrap();
    let d = synthesize(&f, false).expect("hvh family is admissible");
    let term = diagram_replace_gate_with_hole(d.term(), "h");
    BareDiagram::new(term).unwrap()
}

/// Context whose V word is `v0 . hole . v1 . v0 . hole . v1`; the hole is
/// traversed twice with a register swap in between.
pub fn s2_context() -> BareDiagram {
    let mut f = WordFamily::empty(1);
    let w: Vec<Label> =
        ["v0", "h", "v1", "v0", "h", "v1"].iter().map(|s| s.to_string()).collect();
    f.set(Polarisation::V, 0, w).unwrap();
    let d = synthesize(&f, false).expect("two-pass family is admissible");
    let term = diagram_replace_gate_with_hole(d.term(), "h");
    BareDiagram::new(term).unwrap()
}

fn diagram_replace_gate_with_hole(t: &Term, label: &str) -> Term {
    match t {
        Term::Gate(l) if l == label => Term::Hole,
        Term::Seq(a, b) => seq(
            diagram_replace_gate_with_hole(a, label),
            diagram_replace_gate_with_hole(b, label),
        ),
        Term::Par(a, b) => par(
            diagram_replace_gate_with_hole(a, label),
            diagram_replace_gate_with_hole(b, label),
        ),
        Term::Trace(a) => trace(diagram_replace_gate_with_hole(a, label)),
        other => other.clone(),
    }
}

/// Input operator `|V,0><H,0| (x) I_H` on pol (x) pos (x) data.
fn cross_block_input(dim_h: usize) -> CMatrix {
    let dim = 2 * dim_h;
    let mut m = CMatrix::zeros(dim, dim);
    for h in 0..dim_h {
        m[(dim_h + h, h)] = C64::new(1.0, 0.0);
    }
    m
}

/// Embed an operator on the data register into the `(H,0)` diagonal block.
fn h_block_input(rho: &CMatrix) -> CMatrix {
    let d = rho.rows();
    let mut m = CMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = rho[(i, j)];
        }
    }
    m
}

fn s1_witness(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
) -> Result<DistinguishingWitness, EquivError> {
    let d = a.dim_h();
    let (ca, cb) = (a.s1(), b.s1());
    let delta = ca.matrix.sub(&cb.matrix);
    // Candidate inputs: matrix units, plus the reshaped top eigenvector of
    // the Choi difference.
    let mut candidates: Vec<CMatrix> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            candidates.push(Ket::basis(d, i).outer(&Ket::basis(d, j)));
        }
    }
    if let Ok((_, vecs)) = hermitian_eigs(&delta, 1e-6) {
        if let Some(v) = vecs.first() {
            candidates.push(CMatrix::from_fn(d, d, |i, k| v.amplitudes()[i * d + k]));
        }
    }
    let mut best: Option<(f64, CMatrix)> = None;
    for rho in candidates {
        let diff = ca.apply(&rho)?.max_abs_diff(&cb.apply(&rho)?)?;
        if best.as_ref().is_none_or(|(s, _)| diff > *s) {
            best = Some((diff, rho));
        }
    }
    let (separation, rho) = best.expect("candidate set is nonempty");
    if separation <= 0.0 {
        return Err(EquivError::NoWitness);
    }
    Ok(DistinguishingWitness {
        context: trivial_context(),
        gates: GateAssignment::new(),
        input: h_block_input(&rho),
        separation,
    })
}

fn t1_witness(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
) -> Result<DistinguishingWitness, EquivError> {
    let separation = a.t1().max_abs_diff(&b.t1())?;
    Ok(DistinguishingWitness {
        context: t1_loop_context(),
        gates: GateAssignment::new(),
        input: cross_block_input(a.dim_h()),
        separation,
    })
}

/// Generalized Pauli (Weyl) pair on dimension `d`: shift and clock.
pub fn weyl_x(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        m[((j + 1) % d, j)] = C64::new(1.0, 0.0);
    }
    m
}

pub fn weyl_z(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            C64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / d as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// The loop contraction `(I (x) <eps|) U (V (x) I_E) U (I (x) |eps>)`
/// realised by the hole-V-hole context on the V/H cross term.
fn v_loop_contraction(ch: &PurifiedChannel, v: &CMatrix) -> CMatrix {
    let ve = v.tensor(&CMatrix::identity(ch.dim_e()));
    let m = ch.unitary().mul(&ve).mul(ch.unitary());
    env_diagonal_block(&m, ch.env_state(), ch.env_state(), ch.dim_h(), ch.dim_e())
}

/// Search the generalized Pauli family for a unitary `V` whose loop
/// contraction separates the two channels. Complete whenever the
/// second-level transformation matrices differ, because the contraction is
/// linear in `V` and the family spans the operator space.
pub fn find_t2_witness(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
) -> Result<CMatrix, EquivError> {
    let d = ensure_same_dim(a, b)?;
    if a.t2().max_abs_diff(&b.t2())? <= tol {
        return Err(EquivError::NoWitness);
    }
    let (wx, wz) = (weyl_x(d), weyl_z(d));
    let mut best: Option<(f64, CMatrix)> = None;
    for i in 0..d {
        for j in 0..d {
            let v = wx.pow(i).mul(&wz.pow(j));
            let diff = v_loop_contraction(a, &v).max_abs_diff(&v_loop_contraction(b, &v))?;
            if best.as_ref().is_none_or(|(s, _)| diff > *s) {
                best = Some((diff, v));
            }
        }
    }
    let (diff, v) = best.expect("family is nonempty");
    if diff <= tol {
        return Err(EquivError::NoWitness);
    }
    Ok(v)
}

fn t2_context_witness(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
) -> Result<DistinguishingWitness, EquivError> {
    let v = find_t2_witness(a, b, tol)?;
    let separation =
        v_loop_contraction(a, &v).max_abs_diff(&v_loop_contraction(b, &v))?;
    let v_channel = PurifiedChannel::new(
        a.dim_h(),
        1,
        v,
        Ket::new(vec![C64::new(1.0, 0.0)]),
    )?;
    let mut gates = GateAssignment::new();
    gates.insert("v".to_string(), v_channel);
    Ok(DistinguishingWitness {
        context: t2_loop_context("v"),
        gates,
        input: cross_block_input(a.dim_h()),
        separation,
    })
}

/// Witness data for an S2 separation: a two-register state `|phi>` on
/// which the second-level superoperators differ, a unitary `W0` preparing
/// it from `|00>`, and a measurement rotation `W1` making the difference
/// visible on the data register alone.
pub fn find_s2_witness(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
) -> Result<(Ket, CMatrix, CMatrix), EquivError> {
    find_s2_witness_seeded(a, b, tol, 0)
}

/// As [`find_s2_witness`] with an explicit fallback seed.
pub fn find_s2_witness_seeded(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
    seed: u64,
) -> Result<(Ket, CMatrix, CMatrix), EquivError> {
    let d = ensure_same_dim(a, b)?;
    let (sa, sb) = (a.s2(), b.s2());
    if sa.max_abs_diff(&sb)? <= tol {
        return Err(EquivError::NoWitness);
    }
    let d2 = d * d;
    // Pure inputs spanning the state space: basis states and pairwise
    // superpositions, plus eigenvector-derived candidates from the Choi
    // difference.
    let mut candidates: Vec<Ket> = Vec::new();
    for i in 0..d2 {
        candidates.push(Ket::basis(d2, i));
    }
    for i in 0..d2 {
        for j in (i + 1)..d2 {
            let mut plus = vec![C64::new(0.0, 0.0); d2];
            plus[i] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            plus[j] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            candidates.push(Ket::new(plus.clone()));
            plus[j] = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
            candidates.push(Ket::new(plus));
        }
    }
    let delta = sa.matrix.sub(&sb.matrix);
    if let Ok((_, vecs)) = hermitian_eigs(&delta, 1e-6) {
        for v in vecs.iter().take(2) {
            // Rows of the reshaped eigenvector live on the input factor.
            let r = CMatrix::from_fn(d2, d2, |i, k| v.amplitudes()[i * d2 + k]);
            for c in 0..d2 {
                let col = r.column(c);
                if col.norm() > 1e-8 {
                    candidates.push(col.normalized());
                    break;
                }
            }
        }
    }
    let mut best: Option<(f64, Ket)> = None;
    for phi in candidates {
        let rho = phi.outer(&phi);
        let diff = sa.apply(&rho)?.max_abs_diff(&sb.apply(&rho)?)?;
        if best.as_ref().is_none_or(|(s, _)| diff > *s) {
            best = Some((diff, phi));
        }
    }
    let (diff, phi) = best.expect("candidate set is nonempty");
    if diff <= tol {
        return Err(EquivError::NoWitness);
    }
    let w0 = unitary_from_first_column(&phi);

    // Measurement side: W1 with |tr[(rho_a - rho_b) W1+ (|0><0| (x) I) W1]|
    // bounded away from zero. Greedy: the d top eigenvectors of the output
    // difference span the projector; measure-zero failures fall back to
    // seeded random rotations.
    let rho_a = sa.apply(&phi.outer(&phi))?;
    let rho_b = sb.apply(&phi.outer(&phi))?;
    let dout = rho_a.sub(&rho_b);
    let (eigs, vecs) = hermitian_eigs(&dout, 1e-7)?;
    let top: Vec<Ket> = vecs.iter().take(d).cloned().collect();
    let trace_top: f64 = eigs.iter().take(d).sum();
    let w1 = if trace_top.abs() > tol {
        unitary_completing_columns(&top, d2).dagger()
    } else {
        let mut rng = SampleRng::seed_from_u64(seed ^ 0x5eed);
        let mut found = None;
        for _ in 0..200 {
            let cand = crate::sample::random_unitary(&mut rng, d2);
            let proj = cand.dagger().mul(&projector_first_block(d)).mul(&cand);
            let val = dout.mul(&proj).trace().norm();
            if val > tol {
                found = Some(cand);
                break;
            }
        }
        found.ok_or(EquivError::NoWitness)?
    };
    Ok((phi, w0, w1))
}

fn projector_first_block(d: usize) -> CMatrix {
    let p0 = Ket::basis(d, 0).outer(&Ket::basis(d, 0));
    p0.tensor(&CMatrix::identity(d))
}

/// Assemble the S2 witness context: gates `v0`/`v1` with environment
/// `H (x) C^2` fire their rotation on one pass and swap the data register
/// with their environment on the other, so the two hole traversals act on
/// the two halves of `|phi>` with the same un-reset environment.
pub fn s2_witness(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
) -> Result<DistinguishingWitness, EquivError> {
    s2_witness_seeded(a, b, tol, 0)
}

/// As [`s2_witness`] with an explicit fallback seed.
pub fn s2_witness_seeded(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    tol: f64,
    seed: u64,
) -> Result<DistinguishingWitness, EquivError> {
    let d = ensure_same_dim(a, b)?;
    let (phi, w0, w1) = find_s2_witness_seeded(a, b, tol, seed)?;
    let _ = phi;
    let swap = crate::channels::swap_operator(d);
    let x = fixtures::pauli_x();
    let swap_and_flip = swap.tensor(&x);
    let v0 = swap_and_flip.mul(&fixtures::controlled_on_zero(&w0));
    let v1 = fixtures::controlled_on_zero(&w1).mul(&swap_and_flip);
    let eta = Ket::basis(2 * d, 0);
    let mut gates = GateAssignment::new();
    gates.insert("v0".to_string(), PurifiedChannel::new(d, 2 * d, v0, eta.clone())?);
    gates.insert("v1".to_string(), PurifiedChannel::new(d, 2 * d, v1, eta)?);

    // Input |V,0><V,0| (x) |0><0| on pol (x) pos (x) data.
    let mut input = CMatrix::zeros(2 * d, 2 * d);
    input[(d, d)] = C64::new(1.0, 0.0);

    let mut w = DistinguishingWitness { context: s2_context(), gates, input, separation: 0.0 };
    w.separation = verify_witness(&w, a, b)?;
    Ok(w)
}

/// Check the iso-preorder witness equations: `W` is an isometry,
/// `W eps_a = eps_b`, and `(I (x) W) U_a = U_b (I (x) W)`.
pub fn check_iso_witness(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    w: &CMatrix,
    tol: f64,
) -> Result<bool, EquivError> {
    ensure_same_dim(a, b)?;
    if w.rows() != b.dim_e() || w.cols() != a.dim_e() {
        return Err(EquivError::WitnessShape {
            expected_rows: b.dim_e(),
            expected_cols: a.dim_e(),
            rows: w.rows(),
            cols: w.cols(),
        });
    }
    let isometry = w
        .dagger()
        .mul(w)
        .max_abs_diff(&CMatrix::identity(a.dim_e()))?
        <= tol;
    let weps = w.mul_ket(a.env_state());
    let state_ok = weps
        .as_column()
        .max_abs_diff(&b.env_state().as_column())?
        <= tol;
    let iw = CMatrix::identity(a.dim_h()).tensor(w);
    let intertwine = iw.mul(a.unitary()).max_abs_diff(&b.unitary().mul(&iw))? <= tol;
    Ok(isometry && state_ok && intertwine)
}

#[derive(Clone, Debug)]
pub struct MomentRefutation {
    pub refuted: bool,
    pub k: Option<usize>,
    /// Max-norm difference at the refuting k (0 when inconclusive).
    pub difference: f64,
    pub moment_a: Option<CMatrix>,
    pub moment_b: Option<CMatrix>,
}

/// Compare generalized moments `M_k = (I (x) <eps|) U^k (I (x) |eps>)` for
/// `k = 0..=kmax`. A difference refutes iso-equivalence; agreement is
/// inconclusive (the condition is necessary only).
pub fn iso_refute_moments(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
    kmax: usize,
    tol: f64,
) -> Result<MomentRefutation, EquivError> {
    ensure_same_dim(a, b)?;
    for k in 0..=kmax {
        let (ma, mb) = (a.moment(k), b.moment(k));
        let diff = ma.max_abs_diff(&mb)?;
        if diff > tol {
            return Ok(MomentRefutation {
                refuted: true,
                k: Some(k),
                difference: diff,
                moment_a: Some(ma),
                moment_b: Some(mb),
            });
        }
    }
    Ok(MomentRefutation { refuted: false, k: None, difference: 0.0, moment_a: None, moment_b: None })
}

/// Class required of a witness context at the given level.
pub fn required_class(level: u8) -> ContextClass {
    match level {
        0 => ContextClass::C0,
        1 => ContextClass::C1,
        _ => ContextClass::C2,
    }
}

/// Convenience: the default-tolerance verdicts at all three levels.
pub fn full_verdicts(
    a: &PurifiedChannel,
    b: &PurifiedChannel,
) -> Result<[Verdict; 3], EquivError> {
    Ok([
        equiv0(a, b, DEFAULT_TOL)?,
        equiv1(a, b, DEFAULT_TOL)?,
        equiv2(a, b, DEFAULT_TOL)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::fixtures::*;
    use crate::diagram::classify_context;
    use crate::sample::{random_channel, random_iso_extension};

    const TOL: f64 = 1e-9;

    #[test]
    fn reflexivity_at_all_levels() {
        let ch = ch_cnot();
        for v in full_verdicts(&ch, &ch).unwrap() {
            assert!(v.equivalent);
            assert!(v.failed_criteria.is_empty());
            assert!(v.witness.is_none());
        }
    }

    #[test]
    fn sign_flip_passes_level0_fails_level1() {
        let (a, b) = (ch_identity(), ch_minus_identity());
        let v0 = equiv0(&a, &b, TOL).unwrap();
        assert!(v0.equivalent);
        let v1 = equiv1(&a, &b, TOL).unwrap();
        assert!(!v1.equivalent);
        assert_eq!(v1.failed_criteria, vec![Criterion::T1]);
        let w = v1.witness.unwrap();
        // The loop witness reproduces the T1 difference with separation 2.
        assert!((w.separation - 2.0).abs() <= 1e-9);
        let measured = verify_witness(&w, &a, &b).unwrap();
        assert!((measured - 2.0).abs() <= 1e-9);
        assert!(classify_context(&w.context).unwrap().contains(&ContextClass::C1));
    }

    #[test]
    fn loop_context_cross_block_reproduces_t1() {
        // Filling tr((id + hole) ; pbs) and feeding |V,0><H,0| (x) I_H puts
        // exactly the first-level transformation matrix in the (V,0)/(H,0)
        // output block.
        let ch = ch_cnot();
        let w = DistinguishingWitness {
            context: t1_loop_context(),
            gates: GateAssignment::new(),
            input: cross_block_input(ch.dim_h()),
            separation: 0.0,
        };
        let out = run_witness(&w, &ch).unwrap();
        let d = ch.dim_h();
        let block = CMatrix::from_fn(d, d, |i, j| out[(d + i, j)]);
        assert!(block.max_abs_diff(&ch.t1()).unwrap() <= 1e-12);
        // All other blocks vanish for this input.
        let mut rest = out.clone();
        for i in 0..d {
            for j in 0..d {
                rest[(d + i, j)] = C64::new(0.0, 0.0);
            }
        }
        assert!(rest.max_abs() <= 1e-12);
    }

    #[test]
    fn s1_failure_is_witnessed_by_the_trivial_context() {
        let (a, b) = (ch_ix(), ch_xx());
        let v = equiv0(&a, &b, TOL).unwrap();
        assert!(!v.equivalent);
        assert_eq!(v.failed_criteria, vec![Criterion::S1]);
        let w = v.witness.unwrap();
        assert_eq!(w.context.term(), &Term::Hole);
        let measured = verify_witness(&w, &a, &b).unwrap();
        assert!(measured > 1e-6);
        assert!((measured - w.separation).abs() <= 1e-9);
    }

    #[test]
    fn cnot_pair_where_only_s2_fails() {
        let (a, b) = (ch_cnot(), ch_sqrtz_z_cnot());
        assert!(equiv1(&a, &b, TOL).unwrap().equivalent);
        let v2 = equiv2(&a, &b, TOL).unwrap();
        assert!(!v2.equivalent);
        assert_eq!(v2.failed_criteria, vec![Criterion::S2]);
        let w = v2.witness.unwrap();
        assert!(w.separation > 1e-6);
        let measured = verify_witness(&w, &a, &b).unwrap();
        assert!((measured - w.separation).abs() <= 1e-10);
        assert!(classify_context(&w.context).unwrap().contains(&ContextClass::C2));
    }

    #[test]
    fn zx_pair_where_only_t2_fails() {
        let (a, b) = (ch_ix(), ch_i_zx());
        let v2 = equiv2(&a, &b, TOL).unwrap();
        assert!(!v2.equivalent);
        assert_eq!(v2.failed_criteria, vec![Criterion::T2]);
        let w = v2.witness.unwrap();
        assert!(w.separation > 1e-6);
        let measured = verify_witness(&w, &a, &b).unwrap();
        assert!((measured - w.separation).abs() <= 1e-9);
    }

    #[test]
    fn t2_witness_matches_bilinear_expansion() {
        let (a, b) = (ch_ix(), ch_i_zx());
        let v = find_t2_witness(&a, &b, TOL).unwrap();
        // Contraction difference equals the T2 difference contracted
        // against V on the first factor.
        let d = a.dim_h();
        let dt2 = a.t2().sub(&b.t2());
        let mut expected = CMatrix::zeros(d, d);
        for m in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    for l in 0..d {
                        acc += v[(l, k)] * dt2[(k * d + m, l * d + j)];
                    }
                }
                expected[(m, j)] = acc;
            }
        }
        let got = {
            let ca = super::v_loop_contraction(&a, &v);
            let cb = super::v_loop_contraction(&b, &v);
            ca.sub(&cb)
        };
        assert!(got.max_abs_diff(&expected).unwrap() <= 1e-10);
    }

    #[test]
    fn no_witness_for_equal_functionals() {
        let ch = ch_cnot();
        assert!(matches!(find_t2_witness(&ch, &ch, TOL), Err(EquivError::NoWitness)));
        assert!(matches!(find_s2_witness(&ch, &ch, TOL), Err(EquivError::NoWitness)));
    }

    #[test]
    fn qutrit_pair_is_level2_equivalent_but_moment_refuted() {
        let (a, b) = (ch_qutrit_x(), ch_qutrit_xn());
        let v2 = equiv2(&a, &b, TOL).unwrap();
        assert!(v2.equivalent, "failed: {:?}", v2.failed_criteria);
        let r = iso_refute_moments(&a, &b, 8, TOL).unwrap();
        assert!(r.refuted);
        assert_eq!(r.k, Some(3));
        let ma = r.moment_a.unwrap();
        let mb = r.moment_b.unwrap();
        assert!((ma[(0, 0)] - C64::new(1.0, 0.0)).norm() <= 1e-12);
        assert!((mb[(0, 0)] - C64::new(-1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn iso_witness_footnote_examples() {
        // [1, 1, C] <|_iso [I_2, |0>, C^2] with W = |0>.
        let a = PurifiedChannel::new(1, 1, CMatrix::identity(1), Ket::new(vec![C64::new(1.0, 0.0)]))
            .unwrap();
        let b = PurifiedChannel::new(1, 2, CMatrix::identity(2), Ket::basis(2, 0)).unwrap();
        let w = Ket::basis(2, 0).as_column();
        assert!(check_iso_witness(&a, &b, &w, TOL).unwrap());

        // [I_2, |0>, C^2] vs [Z, |0>, C^2] with W = I_2: intertwining fails.
        let zb = PurifiedChannel::new(1, 2, pauli_z(), Ket::basis(2, 0)).unwrap();
        assert!(!check_iso_witness(&b, &zb, &CMatrix::identity(2), TOL).unwrap());

        // Reflexivity with the identity witness.
        let ch = ch_cnot();
        let id = CMatrix::identity(ch.dim_e());
        assert!(check_iso_witness(&ch, &ch, &id, TOL).unwrap());
    }

    #[test]
    fn iso_pairs_are_inconclusive_under_moments() {
        let mut rng = SampleRng::seed_from_u64(99);
        let a = random_channel(&mut rng, 2, 2);
        let (b, w) = random_iso_extension(&mut rng, &a, 3);
        assert!(check_iso_witness(&a, &b, &w, 1e-8).unwrap());
        let r = iso_refute_moments(&a, &b, 8, 1e-8).unwrap();
        assert!(!r.refuted);
        // And iso-related channels pass all equivalence levels.
        for v in full_verdicts(&a, &b).unwrap() {
            assert!(v.equivalent);
        }
    }

    #[test]
    fn witness_shape_is_validated() {
        let a = ch_cnot();
        let b = ch_cnot();
        let bad = CMatrix::identity(3);
        assert!(matches!(
            check_iso_witness(&a, &b, &bad, TOL),
            Err(EquivError::WitnessShape { .. })
        ));
    }

    #[test]
    fn s2_equality_implies_s1_equality() {
        let mut rng = SampleRng::seed_from_u64(2718);
        for _ in 0..10 {
            let a = random_channel(&mut rng, 2, 2);
            let (b, _) = random_iso_extension(&mut rng, &a, 3);
            assert!(a.s2().max_abs_diff(&b.s2()).unwrap() <= 1e-8);
            assert!(a.s1().max_abs_diff(&b.s1()).unwrap() <= 1e-8);
        }
    }
}
