//! Purified channels `[U, |eps>, E]` and their first- and second-level
//! functionals.
//!
//! A purified channel is a unitary `U` on `H (x) E` together with an
//! initial environment state `|eps>`. Repeated traversals of the same
//! gate reuse the same environment without reset, which is why plain CPTP
//! maps are not enough and the second-level objects exist:
//!
//! * `s1`: the induced CPTP map `rho -> Tr_E(U (rho (x) |eps><eps|) U+)`;
//! * `t1 = (I (x) <eps|) U (I (x) |eps>)`, governing interference
//!   cross-terms under coherent control;
//! * `u2 = (I (x) U)(SWAP (x) I)(I (x) U)` on `H (x) H (x) E`, two uses of
//!   the gate interleaved with a system swap;
//! * `s2`, `t2`: the same two functionals built from `u2`.
//!
//! Tensor order is always `H (x) E` (`H` more significant); for the
//! second level `H (x) H (x) E`, with `U` acting on the trailing
//! `H (x) E` factors.

use crate::linalg::{
    choi_from_kraus_unchecked, CMatrix, ChoiMatrix, Ket, LinalgError, C64, DEFAULT_TOL,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("joint evolution must be unitary on H (x) E (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("environment state must be normalized (norm {0})")]
    NotNormalized(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `[U, |eps>, E]` with `U` unitary on `H (x) E`.
#[derive(Clone, Debug, PartialEq)]
pub struct PurifiedChannel {
    dim_h: usize,
    dim_e: usize,
    u: CMatrix,
    eps: Ket,
}

impl PurifiedChannel {
    pub fn new(dim_h: usize, dim_e: usize, u: CMatrix, eps: Ket) -> Result<Self, ChannelError> {
        let n = dim_h * dim_e;
        if u.rows() != n || u.cols() != n {
            return Err(ChannelError::DimensionMismatch(format!(
                "unitary must be {n}x{n} for dim_h {dim_h} and dim_e {dim_e}, got {}x{}",
                u.rows(),
                u.cols()
            )));
        }
        if eps.dim() != dim_e {
            return Err(ChannelError::DimensionMismatch(format!(
                "environment state must have dim {dim_e}, got {}",
                eps.dim()
            )));
        }
        let id = CMatrix::identity(n);
        let defect = u.dagger().mul(&u).max_abs_diff(&id)?;
        if defect > DEFAULT_TOL {
            return Err(ChannelError::NotUnitary(defect));
        }
        if !eps.is_normalized(DEFAULT_TOL) {
            return Err(ChannelError::NotNormalized(eps.norm()));
        }
        Ok(PurifiedChannel { dim_h, dim_e, u, eps })
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.u
    }

    pub fn env_state(&self) -> &Ket {
        &self.eps
    }

    /// Kraus operators `K_e = (I (x) <e|) U (I (x) |eps>)` over the
    /// standard environment basis.
    pub fn kraus(&self) -> Vec<CMatrix> {
        kraus_of(&self.u, &self.eps, self.dim_h, self.dim_e)
    }

    /// First-level superoperator as a Choi matrix.
    pub fn s1(&self) -> ChoiMatrix {
        choi_from_kraus_unchecked(&self.kraus(), self.dim_h, self.dim_h)
    }

    /// First-level transformation matrix `(I (x) <eps|) U (I (x) |eps>)`.
    pub fn t1(&self) -> CMatrix {
        env_diagonal_block(&self.u, &self.eps, &self.eps, self.dim_h, self.dim_e)
    }

    /// Second-level unitary `(I (x) U)(SWAP (x) I_E)(I (x) U)` on
    /// `H (x) H (x) E`.
    pub fn u2(&self) -> CMatrix {
        let i_h = CMatrix::identity(self.dim_h);
        let iu = i_h.tensor(&self.u);
        let swap = swap_operator(self.dim_h).tensor(&CMatrix::identity(self.dim_e));
        iu.mul(&swap).mul(&iu)
    }

    /// Second-level superoperator on `H (x) H`, as a Choi matrix.
    pub fn s2(&self) -> ChoiMatrix {
        let d2 = self.dim_h * self.dim_h;
        let kraus = kraus_of(&self.u2(), &self.eps, d2, self.dim_e);
        choi_from_kraus_unchecked(&kraus, d2, d2)
    }

    /// Second-level transformation matrix on `H (x) H`.
    pub fn t2(&self) -> CMatrix {
        env_diagonal_block(&self.u2(), &self.eps, &self.eps, self.dim_h * self.dim_h, self.dim_e)
    }

    /// Generalized moment `M_k = (I (x) <eps|) U^k (I (x) |eps>)`.
    pub fn moment(&self, k: usize) -> CMatrix {
        env_diagonal_block(&self.u.pow(k), &self.eps, &self.eps, self.dim_h, self.dim_e)
    }
}

/// `(I_H (x) <bra|) M (I_H (x) |ket>)` for `M` on `H (x) E`.
pub fn env_diagonal_block(
    m: &CMatrix,
    bra: &Ket,
    ket: &Ket,
    dim_h: usize,
    dim_e: usize,
) -> CMatrix {
    let mut out = CMatrix::zeros(dim_h, dim_h);
    for i in 0..dim_h {
        for j in 0..dim_h {
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..dim_e {
                for f in 0..dim_e {
                    acc += bra.amplitudes()[e].conj()
                        * m[(i * dim_e + e, j * dim_e + f)]
                        * ket.amplitudes()[f];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Kraus family of `rho -> Tr_E(M (rho (x) |eps><eps|) M+)`.
pub fn kraus_of(m: &CMatrix, eps: &Ket, dim_sys: usize, dim_e: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(dim_e);
    for e in 0..dim_e {
        let mut k = CMatrix::zeros(dim_sys, dim_sys);
        for i in 0..dim_sys {
            for j in 0..dim_sys {
                let mut acc = C64::new(0.0, 0.0);
                for f in 0..dim_e {
                    acc += m[(i * dim_e + e, j * dim_e + f)] * eps.amplitudes()[f];
                }
                k[(i, j)] = acc;
            }
        }
        out.push(k);
    }
    out
}

/// `SWAP` on `H (x) H`: `|a>|b> -> |b>|a>`.
pub fn swap_operator(d: usize) -> CMatrix {
    let mut s = CMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            s[(b * d + a, a * d + b)] = C64::new(1.0, 0.0);
        }
    }
    s
}

/// Named constants and the fixture channel pairs whose functionals
/// separate at exactly one level each.
pub mod fixtures {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_fn(2, 2, |r, q| if r != q { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_fn(2, 2, |r, q| match (r, q) {
            (0, 0) => c(1.0, 0.0),
            (1, 1) => c(-1.0, 0.0),
            _ => c(0.0, 0.0),
        })
    }

    /// `diag(1, i)`.
    pub fn sqrt_z() -> CMatrix {
        CMatrix::from_fn(2, 2, |r, q| match (r, q) {
            (0, 0) => c(1.0, 0.0),
            (1, 1) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        })
    }

    /// Control on the more-significant qubit.
    pub fn cnot() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(1.0, 0.0);
        m[(2, 3)] = c(1.0, 0.0);
        m[(3, 2)] = c(1.0, 0.0);
        m
    }

    /// Qutrit shift `|x> -> |x - 1 mod 3>`.
    pub fn qutrit_shift() -> CMatrix {
        let mut m = CMatrix::zeros(3, 3);
        for x in 0..3 {
            m[((x + 2) % 3, x)] = c(1.0, 0.0);
        }
        m
    }

    /// Qutrit `N`: `|x> -> (-1)^x |x>`.
    pub fn qutrit_n() -> CMatrix {
        CMatrix::from_fn(3, 3, |r, q| {
            if r == q {
                c(if r % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    /// `W (x) |0><0| + I (x) |1><1|`: applies `W` when the trailing control
    /// qubit is `|0>`.
    pub fn controlled_on_zero(w: &CMatrix) -> CMatrix {
        let d = w.rows();
        let p0 = Ket::basis(2, 0).outer(&Ket::basis(2, 0));
        let p1 = Ket::basis(2, 1).outer(&Ket::basis(2, 1));
        w.tensor(&p0).add(&CMatrix::identity(d).tensor(&p1))
    }

    fn ket0(dim: usize) -> Ket {
        Ket::basis(dim, 0)
    }

    fn scalar_env_channel(dim_h: usize, u: CMatrix) -> PurifiedChannel {
        PurifiedChannel::new(dim_h, 1, u, Ket::new(vec![c(1.0, 0.0)])).unwrap()
    }

    /// `[I, 1, C]` on a qubit.
    pub fn ch_identity() -> PurifiedChannel {
        scalar_env_channel(2, CMatrix::identity(2))
    }

    /// `[-I, 1, C]` on a qubit: same superoperator as the identity, but a
    /// sign-flipped transformation matrix.
    pub fn ch_minus_identity() -> PurifiedChannel {
        scalar_env_channel(2, CMatrix::identity(2).scale(c(-1.0, 0.0)))
    }

    /// `[I (x) X, |0>, C^2]`.
    pub fn ch_ix() -> PurifiedChannel {
        PurifiedChannel::new(2, 2, CMatrix::identity(2).tensor(&pauli_x()), ket0(2)).unwrap()
    }

    /// `[X (x) X, |0>, C^2]`: same transformation matrix as `ch_ix`, but a
    /// different superoperator.
    pub fn ch_xx() -> PurifiedChannel {
        PurifiedChannel::new(2, 2, pauli_x().tensor(&pauli_x()), ket0(2)).unwrap()
    }

    /// `[CNOT, |0>, C^2]`.
    pub fn ch_cnot() -> PurifiedChannel {
        PurifiedChannel::new(2, 2, cnot(), ket0(2)).unwrap()
    }

    /// `[(sqrt(Z) (x) Z) CNOT, |0>, C^2]`: differs from `ch_cnot` only in
    /// the second-level superoperator.
    pub fn ch_sqrtz_z_cnot() -> PurifiedChannel {
        let u = sqrt_z().tensor(&pauli_z()).mul(&cnot());
        PurifiedChannel::new(2, 2, u, ket0(2)).unwrap()
    }

    /// `[I (x) ZX, |0>, C^2]`: differs from `ch_ix` only in the
    /// second-level transformation matrix.
    pub fn ch_i_zx() -> PurifiedChannel {
        let zx = pauli_z().mul(&pauli_x());
        PurifiedChannel::new(2, 2, CMatrix::identity(2).tensor(&zx), ket0(2)).unwrap()
    }

    /// Qutrit `[X, |0>, C^3]` with trivial data register.
    pub fn ch_qutrit_x() -> PurifiedChannel {
        PurifiedChannel::new(1, 3, qutrit_shift(), ket0(3)).unwrap()
    }

    /// Qutrit `[XN, |0>, C^3]`: second-level equivalent to `ch_qutrit_x`
    /// but not iso-equivalent (third moments differ).
    pub fn ch_qutrit_xn() -> PurifiedChannel {
        PurifiedChannel::new(1, 3, qutrit_shift().mul(&qutrit_n()), ket0(3)).unwrap()
    }
}
