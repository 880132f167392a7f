//! Seeded random generators for property-style tests: admissible word
//! families, bare diagrams, contexts of a requested class, and purified
//! channels. Everything is deterministic given the RNG state.

use crate::channels::PurifiedChannel;
use crate::diagram::{
    gate, pad, par, seq, trace, BareDiagram, ContextClass, Label, Term,
};
use crate::linalg::{unitary_completing_columns, CMatrix, Ket, C64};
use crate::pathsem::Polarisation;
use crate::qsem::GateAssignment;
use crate::synth::WordFamily;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

/// The crate's seeded RNG: an explicit stream cipher so that seeded
/// artifacts stay bit-for-bit reproducible across dependency upgrades.
pub type SampleRng = rand_chacha::ChaCha8Rng;

/// Admissible random family: every label at most twice overall, at most
/// once per polarisation when `neg_free`.
pub fn random_admissible_family(
    rng: &mut SampleRng,
    max_n: usize,
    max_alphabet: usize,
    max_len: usize,
    neg_free: bool,
) -> WordFamily {
    let n = rng.gen_range(1..=max_n);
    let labels: Vec<Label> =
        (0..max_alphabet).map(|i| format!("{}", (b'a' + i as u8) as char)).collect();
    let mut total: Vec<usize> = vec![0; labels.len()];
    let mut per_pol: Vec<[usize; 2]> = vec![[0, 0]; labels.len()];
    let mut f = WordFamily::empty(n);
    for pol in Polarisation::both() {
        for pos in 0..n {
            let len = rng.gen_range(0..=max_len);
            let mut word = Vec::new();
            for _ in 0..len {
                let candidates: Vec<usize> = (0..labels.len())
                    .filter(|&i| {
                        total[i] < 2 && (!neg_free || per_pol[i][pol.index()] < 1)
                    })
                    .collect();
                let Some(&i) = candidates.choose(rng) else { break };
                total[i] += 1;
                per_pol[i][pol.index()] += 1;
                word.push(labels[i].clone());
            }
            f.set(pol, pos, word).unwrap();
        }
    }
    f
}

/// Structural constraints for the diagram sampler.
#[derive(Clone, Copy, Debug)]
pub struct SamplerConfig {
    pub max_depth: usize,
    pub max_gates: usize,
    pub allow_pbs: bool,
    pub allow_neg: bool,
}

impl SamplerConfig {
    pub fn unrestricted() -> Self {
        SamplerConfig { max_depth: 4, max_gates: 3, allow_pbs: true, allow_neg: true }
    }

    pub fn for_class(class: ContextClass) -> Self {
        match class {
            ContextClass::C0 => SamplerConfig { allow_pbs: false, ..Self::unrestricted() },
            ContextClass::C1 => SamplerConfig { allow_neg: false, ..Self::unrestricted() },
            ContextClass::C2 => Self::unrestricted(),
        }
    }
}

struct GenState<'a> {
    rng: &'a mut SampleRng,
    gates_left: usize,
    next_label: usize,
    cfg: SamplerConfig,
}

impl GenState<'_> {
    fn fresh_label(&mut self) -> Label {
        let l = format!("g{}", self.next_label);
        self.next_label += 1;
        l
    }

    fn leaf(&mut self, n: usize) -> Term {
        match n {
            0 => Term::Empty,
            1 => {
                let mut opts: Vec<u8> = vec![0, 0]; // wire, weighted
                if self.cfg.allow_neg {
                    opts.push(1);
                }
                if self.gates_left > 0 {
                    opts.push(2);
                    opts.push(2);
                }
                match opts.choose(self.rng).unwrap() {
                    0 => Term::Wire,
                    1 => Term::Neg,
                    _ => {
                        self.gates_left -= 1;
                        gate(self.fresh_label())
                    }
                }
            }
            2 => {
                let mut opts: Vec<u8> = vec![0];
                if self.cfg.allow_pbs {
                    opts.push(1);
                    opts.push(1);
                }
                match opts.choose(self.rng).unwrap() {
                    0 => Term::Swap,
                    _ => Term::Pbs,
                }
            }
            _ => par(self.leaf(1), self.leaf(n - 1)),
        }
    }

    fn gen(&mut self, n: usize, depth: usize) -> Term {
        if depth == 0 {
            return self.leaf(n);
        }
        let choice = self.rng.gen_range(0..10);
        match choice {
            0..=2 => self.leaf(n),
            3..=5 => seq(self.gen(n, depth - 1), self.gen(n, depth - 1)),
            6..=8 if n >= 1 => {
                let k = self.rng.gen_range(0..=n);
                if k == 0 || k == n {
                    // Parallel with a closed (arity-0) component.
                    let closed = trace(self.gen(1, depth.saturating_sub(2)));
                    if k == 0 {
                        par(closed, self.gen(n, depth - 1))
                    } else {
                        par(self.gen(n, depth - 1), closed)
                    }
                } else {
                    par(self.gen(k, depth - 1), self.gen(n - k, depth - 1))
                }
            }
            _ => trace(self.gen(n + 1, depth - 1)),
        }
    }
}

/// Random hole-free bare diagram of the given arity.
pub fn random_bare_diagram(rng: &mut SampleRng, arity: usize, cfg: SamplerConfig) -> BareDiagram {
    let mut st = GenState { rng, gates_left: cfg.max_gates, next_label: 0, cfg };
    let term = st.gen(arity, cfg.max_depth);
    BareDiagram::new(term).expect("sampler emits well-typed terms")
}

/// Random context: a well-typed term of the requested class and arity with
/// exactly one hole.
pub fn random_context(rng: &mut SampleRng, class: ContextClass, arity: usize) -> BareDiagram {
    assert!(arity >= 1);
    let cfg = SamplerConfig::for_class(class);
    let d = random_bare_diagram(rng, arity, cfg);
    let labels: Vec<Label> = d.alphabet().iter().cloned().collect();
    let term = if let Some(victim) = labels.choose(rng) {
        replace_gate_with_hole(d.term(), victim)
    } else {
        let at = rng.gen_range(0..arity);
        seq(d.term().clone(), pad(Term::Hole, at, arity - 1 - at))
    };
    let ctx = BareDiagram::new(term).expect("hole placement preserves typing");
    debug_assert!(ctx.has_hole());
    ctx
}

fn replace_gate_with_hole(t: &Term, victim: &str) -> Term {
    match t {
        Term::Gate(l) if l == victim => Term::Hole,
        Term::Seq(a, b) => seq(replace_gate_with_hole(a, victim), replace_gate_with_hole(b, victim)),
        Term::Par(a, b) => par(replace_gate_with_hole(a, victim), replace_gate_with_hole(b, victim)),
        Term::Trace(a) => trace(replace_gate_with_hole(a, victim)),
        other => other.clone(),
    }
}

/// Haar-ish random unitary: uniform complex entries orthonormalized.
pub fn random_unitary(rng: &mut SampleRng, dim: usize) -> CMatrix {
    loop {
        let cols: Vec<Ket> = Vec::new();
        let mut basis: Vec<Ket> = cols;
        for _ in 0..dim {
            let mut v: Vec<C64> = (0..dim)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            for _ in 0..2 {
                for b in &basis {
                    let c = b.inner(&Ket::new(v.clone()));
                    for (vi, bi) in v.iter_mut().zip(b.amplitudes()) {
                        *vi -= c * bi;
                    }
                }
            }
            let k = Ket::new(v);
            if k.norm() < 1e-6 {
                basis.clear();
                break;
            }
            basis.push(k.normalized());
        }
        if basis.len() == dim {
            return CMatrix::from_fn(dim, dim, |r, c| basis[c].amplitudes()[r]);
        }
    }
}

pub fn random_state(rng: &mut SampleRng, dim: usize) -> Ket {
    loop {
        let k = Ket::new(
            (0..dim)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        );
        if k.norm() > 1e-3 {
            return k.normalized();
        }
    }
}

pub fn random_channel(rng: &mut SampleRng, dim_h: usize, dim_e: usize) -> PurifiedChannel {
    let u = random_unitary(rng, dim_h * dim_e);
    let eps = random_state(rng, dim_e);
    PurifiedChannel::new(dim_h, dim_e, u, eps).expect("sampled channel is valid")
}

/// Random assignment of channels to every label of `d`, sharing `dim_h`.
pub fn random_assignment(
    rng: &mut SampleRng,
    d: &BareDiagram,
    dim_h: usize,
    max_dim_e: usize,
) -> GateAssignment {
    let mut g = GateAssignment::new();
    for l in d.alphabet() {
        let dim_e = rng.gen_range(1..=max_dim_e);
        g.insert(l.clone(), random_channel(rng, dim_h, dim_e));
    }
    g
}

/// Extend `a` along a random isometry `W : E -> E'`, returning the
/// iso-related channel `b` (so `a <|_iso b` with witness `W`).
pub fn random_iso_extension(
    rng: &mut SampleRng,
    a: &PurifiedChannel,
    dim_e_out: usize,
) -> (PurifiedChannel, CMatrix) {
    assert!(dim_e_out >= a.dim_e());
    let big = random_unitary(rng, dim_e_out);
    // W = first dim_e columns of a random unitary on E'.
    let w = CMatrix::from_fn(dim_e_out, a.dim_e(), |r, c| big[(r, c)]);
    let iw = CMatrix::identity(a.dim_h()).tensor(&w);
    // U' agrees with (I (x) W) U (I (x) W)+ on the range of I (x) W and
    // acts as an arbitrary unitary on the orthocomplement.
    let dim_big = a.dim_h() * dim_e_out;
    let range_cols: Vec<Ket> = (0..iw.cols()).map(|c| iw.column(c)).collect();
    let full = unitary_completing_columns(&range_cols, dim_big);
    let complement = CMatrix::from_fn(dim_big, dim_big - iw.cols(), |r, c| {
        full[(r, iw.cols() + c)]
    });
    let r = random_unitary(rng, dim_big - iw.cols());
    let u_prime = iw
        .mul(a.unitary())
        .mul(&iw.dagger())
        .add(&complement.mul(&r).mul(&complement.dagger()));
    let eps_prime = w.mul_ket(a.env_state());
    let b = PurifiedChannel::new(a.dim_h(), dim_e_out, u_prime, eps_prime)
        .expect("iso extension stays unitary");
    (b, w)
}

/// Seeded context sampler: class-constrained generatively, gates filled
/// with random channels of bounded dimensions; bit-for-bit reproducible
/// per seed.
pub fn sample_context(
    class: ContextClass,
    arity: usize,
    dim_h: usize,
    max_dim_e: usize,
    seed: u64,
) -> (BareDiagram, GateAssignment) {
    let mut rng = SampleRng::seed_from_u64(seed);
    let ctx = random_context(&mut rng, class, arity);
    let g = random_assignment(&mut rng, &ctx, dim_h, max_dim_e);
    (ctx, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::classify_context;
    use crate::synth::check_admissible;

    #[test]
    fn families_are_admissible() {
        let mut rng = SampleRng::seed_from_u64(1);
        for _ in 0..50 {
            let f = random_admissible_family(&mut rng, 4, 6, 4, false);
            assert!(check_admissible(&f).0);
            let g = random_admissible_family(&mut rng, 4, 6, 4, true);
            assert!(check_admissible(&g).1);
        }
    }

    #[test]
    fn contexts_land_in_their_class() {
        for (class, seed) in [
            (ContextClass::C0, 5u64),
            (ContextClass::C1, 17),
            (ContextClass::C2, 99),
        ] {
            for k in 0..30 {
                let (ctx, _) = sample_context(class, 1, 2, 2, seed + k);
                let classes = classify_context(&ctx).unwrap();
                assert!(classes.contains(&class), "seed {} class {:?}", seed + k, class);
            }
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let (c1, g1) = sample_context(ContextClass::C2, 2, 2, 2, 42);
        let (c2, g2) = sample_context(ContextClass::C2, 2, 2, 2, 42);
        assert_eq!(c1.term(), c2.term());
        assert_eq!(g1, g2);
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = SampleRng::seed_from_u64(7);
        for d in [2usize, 3, 6] {
            assert!(random_unitary(&mut rng, d).is_unitary(1e-10));
        }
    }

    #[test]
    fn iso_extension_satisfies_the_witness_equations() {
        let mut rng = SampleRng::seed_from_u64(11);
        let a = random_channel(&mut rng, 2, 2);
        let (b, w) = random_iso_extension(&mut rng, &a, 3);
        // W is an isometry, W eps_a = eps_b, (I (x) W) U_a = U_b (I (x) W).
        let wtw = w.dagger().mul(&w);
        assert!(wtw.max_abs_diff(&CMatrix::identity(2)).unwrap() <= 1e-10);
        let weps = w.mul_ket(a.env_state());
        assert!(weps
            .outer(&weps)
            .max_abs_diff(&b.env_state().outer(b.env_state()))
            .unwrap() <= 1e-10);
        let iw = CMatrix::identity(2).tensor(&w);
        let lhs = iw.mul(a.unitary());
        let rhs = b.unitary().mul(&iw);
        assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-10);
    }
}
