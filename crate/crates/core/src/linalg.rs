//! Dense complex linear algebra kernel.
//!
//! Everything downstream (channel functionals, quantum semantics, the
//! equivalence deciders) is built on the three types defined here:
//! [`CMatrix`] (dense row-major complex matrices), [`Ket`] (complex
//! vectors), and [`ChoiMatrix`] (the canonical form of a CPTP map).
//!
//! Conventions, fixed once for the whole crate:
//! * composite indices are row-major over the declared tensor order, and
//!   the more-significant factor is always written on the left;
//! * `partial_trace_last` traces out the trailing (least-significant)
//!   factor;
//! * a Choi matrix is `sum_{ij} |i><j| (x) S(|i><j|)`, so its composite
//!   index is `input * out_dim + output` and tracing out the trailing
//!   factor of a trace-preserving map yields the identity on the input.

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Default numeric tolerance (max-norm) for every equality check.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Acceptance threshold for `is_unitary`.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("Kraus family is not trace-preserving (max deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("empty Kraus family")]
    EmptyKrausFamily,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Build from nested rows of `(re, im)` pairs; checks shape and finiteness.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nr, nc);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != nc {
                return Err(LinalgError::DimensionMismatch(format!(
                    "ragged rows: row {} has {} entries, expected {}",
                    r,
                    row.len(),
                    nc
                )));
            }
            for (c, &(re, im)) in row.iter().enumerate() {
                if !re.is_finite() || !im.is_finite() {
                    return Err(LinalgError::NonFinite(r, c));
                }
                m[(r, c)] = C64::new(re, im);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn validate_finite(&self) -> Result<()> {
        for r in 0..self.rows {
            for c in 0..self.cols {
                let z = self[(r, c)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(LinalgError::NonFinite(r, c));
                }
            }
        }
        Ok(())
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x -= y;
        }
        out
    }

    pub fn scale(&self, z: C64) -> CMatrix {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x *= z;
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product with `self` as the more-significant factor:
    /// `(a (x) b)[i*rb + k, j*cb + l] = a[i,j] * b[k,l]`.
    pub fn tensor(&self, b: &CMatrix) -> CMatrix {
        let (ra, ca) = (self.rows, self.cols);
        let (rb, cb) = (b.rows, b.cols);
        let mut out = CMatrix::zeros(ra * rb, ca * cb);
        for i in 0..ra {
            for j in 0..ca {
                let a_ij = self[(i, j)];
                for k in 0..rb {
                    for l in 0..cb {
                        out[(i * rb + k, j * cb + l)] = a_ij * b[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Partial trace over the trailing tensor factor of a square matrix of
    /// size `keep_dim * traced_dim`.
    pub fn partial_trace_last(&self, keep_dim: usize, traced_dim: usize) -> Result<CMatrix> {
        let n = keep_dim * traced_dim;
        if !self.is_square() || self.rows != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "partial trace expects a square {n}x{n} matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let mut out = CMatrix::zeros(keep_dim, keep_dim);
        for i in 0..keep_dim {
            for j in 0..keep_dim {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..traced_dim {
                    acc += self[(i * traced_dim + t, j * traced_dim + t)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    /// Entrywise max of `|a - b|`; the single comparison primitive used by
    /// every equality check in the crate.
    pub fn max_abs_diff(&self, other: &CMatrix) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = 0.0f64;
        for (x, y) in self.data.iter().zip(&other.data) {
            m = m.max((x - y).norm());
        }
        Ok(m)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.dagger()).unwrap() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let id = CMatrix::identity(self.rows);
        self.dagger().mul(self).max_abs_diff(&id).unwrap() <= tol
    }

    /// `self^k` by repeated multiplication (`k = 0` gives the identity).
    pub fn pow(&self, k: usize) -> CMatrix {
        assert!(self.is_square());
        let mut out = CMatrix::identity(self.rows);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn mul_ket(&self, v: &Ket) -> Ket {
        assert_eq!(self.cols, v.dim());
        let mut out = vec![C64::new(0.0, 0.0); self.rows];
        for r in 0..self.rows {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..self.cols {
                acc += self[(r, c)] * v.amplitudes()[c];
            }
            out[r] = acc;
        }
        Ket::new(out)
    }

    /// Column `c` as a ket.
    pub fn column(&self, c: usize) -> Ket {
        Ket::new((0..self.rows).map(|r| self[(r, c)]).collect())
    }
}

/// Complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: Vec<C64>,
}

impl Ket {
    pub fn new(amps: Vec<C64>) -> Self {
        Ket { amps }
    }

    pub fn basis(dim: usize, idx: usize) -> Self {
        assert!(idx < dim);
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[idx] = C64::new(1.0, 0.0);
        Ket { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Ket {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        Ket::new(self.amps.iter().map(|z| z / n).collect())
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        assert_eq!(self.dim(), other.dim());
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                out.push(a * b);
            }
        }
        Ket::new(out)
    }

    /// `|self><other|`.
    pub fn outer(&self, other: &Ket) -> CMatrix {
        CMatrix::from_fn(self.dim(), other.dim(), |r, c| self.amps[r] * other.amps[c].conj())
    }

    /// The ket as a `dim x 1` matrix.
    pub fn as_column(&self) -> CMatrix {
        CMatrix::from_fn(self.dim(), 1, |r, _| self.amps[r])
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Returns eigenvalues in descending order with matching orthonormal
/// eigenvectors. Rejects inputs whose asymmetry exceeds `tol`.
pub fn hermitian_eigs(m: &CMatrix, tol: f64) -> Result<(Vec<f64>, Vec<Ket>)> {
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "eigensolver expects a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    m.validate_finite()?;
    let asym = m.max_abs_diff(&m.dagger())?;
    if asym > tol {
        return Err(LinalgError::NotHermitian(asym));
    }
    let n = m.rows();
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    // Work on the Hermitian average so the iteration sees an exactly
    // Hermitian matrix even when the input is only Hermitian up to tol.
    let mut a = m.add(&m.dagger()).scale(C64::new(0.5, 0.0));
    let mut v = CMatrix::identity(n);

    let scale = a.max_abs().max(1.0);
    let off_target = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= off_target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= off_target * 1e-2 {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Zero a[p,q] with J = [[c, -s*phase], [s*conj(phase), c]]
                // (identity elsewhere); tan(2 theta) = 2r / (app - aqq).
                let t = if app == aqq {
                    1.0
                } else {
                    let tau = (app - aqq) / (2.0 * r);
                    tau.signum() / (tau.abs() + (tau * tau + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let sp = C64::new(s, 0.0) * phase; // s * e^{i phi}
                // A <- A J (columns p, q), then A <- J^dagger A (rows p, q);
                // V <- V J accumulates eigenvectors in the columns.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c + aiq * sp.conj();
                    a[(i, q)] = aiq * c - aip * sp;
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * sp.conj();
                    v[(i, q)] = viq * c - vip * sp;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c + aqj * sp;
                    a[(q, j)] = aqj * c - apj * sp.conj();
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors: Vec<Ket> = order.iter().map(|&i| v.column(i)).collect();
    Ok((eigenvalues, eigenvectors))
}

/// Choi matrix of a CPTP map, `sum_{ij} |i><j| (x) S(|i><j|)`.
///
/// Composite index order is input (x) output, so the trace-preservation
/// condition reads `partial_trace_last(matrix) = I_in`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    pub in_dim: usize,
    pub out_dim: usize,
    pub matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn new(in_dim: usize, out_dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = in_dim * out_dim;
        if !matrix.is_square() || matrix.rows() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "Choi matrix must be {n}x{n}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(ChoiMatrix { in_dim, out_dim, matrix })
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.max_abs_diff(&self.matrix.dagger()).unwrap()
    }

    /// `|| Tr_out(C) - I_in ||_max`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let tr = self.matrix.partial_trace_last(self.in_dim, self.out_dim).unwrap();
        tr.max_abs_diff(&CMatrix::identity(self.in_dim)).unwrap()
    }

    pub fn min_eigenvalue(&self, tol: f64) -> Result<f64> {
        let (eigs, _) = hermitian_eigs(&self.matrix, tol.max(self.hermiticity_defect() * 2.0))?;
        Ok(eigs.last().copied().unwrap_or(0.0))
    }

    /// Number of eigenvalues above `tol * max(1, largest eigenvalue)`.
    pub fn numerical_rank(&self, tol: f64) -> Result<usize> {
        let (eigs, _) = hermitian_eigs(&self.matrix, tol.max(self.hermiticity_defect() * 2.0))?;
        let scale = eigs.first().copied().unwrap_or(0.0).max(1.0);
        Ok(eigs.iter().filter(|&&e| e > tol * scale).count())
    }

    /// All three CPTP invariants at once.
    pub fn validate_cptp(&self, tol: f64) -> Result<()> {
        let h = self.hermiticity_defect();
        if h > tol {
            return Err(LinalgError::NotHermitian(h));
        }
        let t = self.trace_preservation_defect();
        if t > tol {
            return Err(LinalgError::NotTracePreserving(t));
        }
        let min = self.min_eigenvalue(tol)?;
        if min < -tol {
            return Err(LinalgError::NotTracePreserving(-min));
        }
        Ok(())
    }

    /// Apply the represented map: `S(rho)[k,l] = sum_{ij} rho[i,j] C[(i,k),(j,l)]`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if !rho.is_square() || rho.rows() != self.in_dim {
            return Err(LinalgError::DimensionMismatch(format!(
                "input must be {0}x{0}, got {1}x{2}",
                self.in_dim,
                rho.rows(),
                rho.cols()
            )));
        }
        let d_out = self.out_dim;
        let mut out = CMatrix::zeros(d_out, d_out);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let rij = rho[(i, j)];
                if rij.re == 0.0 && rij.im == 0.0 {
                    continue;
                }
                for k in 0..d_out {
                    for l in 0..d_out {
                        out[(k, l)] += rij * self.matrix[(i * d_out + k, j * d_out + l)];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &ChoiMatrix) -> Result<f64> {
        self.matrix.max_abs_diff(&other.matrix)
    }
}

/// Choi matrix of the channel with the given Kraus operators.
///
/// Requires a trace-preserving family: `sum K^dagger K = I` within
/// [`DEFAULT_TOL`].
pub fn choi_from_kraus(kraus: &[CMatrix]) -> Result<ChoiMatrix> {
    let first = kraus.first().ok_or(LinalgError::EmptyKrausFamily)?;
    let (out_dim, in_dim) = (first.rows(), first.cols());
    let mut tp = CMatrix::zeros(in_dim, in_dim);
    for k in kraus {
        if (k.rows(), k.cols()) != (out_dim, in_dim) {
            return Err(LinalgError::DimensionMismatch(
                "Kraus operators must share dimensions".into(),
            ));
        }
        tp = tp.add(&k.dagger().mul(k));
    }
    let defect = tp.max_abs_diff(&CMatrix::identity(in_dim))?;
    if defect > DEFAULT_TOL {
        return Err(LinalgError::NotTracePreserving(defect));
    }
    Ok(choi_from_kraus_unchecked(kraus, in_dim, out_dim))
}

/// Same as [`choi_from_kraus`] without the trace-preservation gate;
/// `C[(i,k),(j,l)] = sum_e K_e[k,i] conj(K_e[l,j])`.
pub fn choi_from_kraus_unchecked(kraus: &[CMatrix], in_dim: usize, out_dim: usize) -> ChoiMatrix {
    let n = in_dim * out_dim;
    let mut c = CMatrix::zeros(n, n);
    for k in kraus {
        for i in 0..in_dim {
            for kk in 0..out_dim {
                let a = k[(kk, i)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..in_dim {
                    for l in 0..out_dim {
                        c[(i * out_dim + kk, j * out_dim + l)] += a * k[(l, j)].conj();
                    }
                }
            }
        }
    }
    ChoiMatrix { in_dim, out_dim, matrix: c }
}

/// Unitary whose first column is `phi` (Householder completion).
pub fn unitary_from_first_column(phi: &Ket) -> CMatrix {
    let n = phi.dim();
    let phi = phi.normalized();
    let e0 = Ket::basis(n, 0);
    // Reflection sending phi to alpha*e0, then a phase fix on column 0.
    let overlap = phi.amplitudes()[0];
    let alpha = if overlap.norm() > 1e-15 {
        -(overlap / overlap.norm())
    } else {
        C64::new(-1.0, 0.0)
    };
    let u: Vec<C64> = phi
        .amplitudes()
        .iter()
        .zip(e0.amplitudes())
        .map(|(p, e)| p - alpha * e)
        .collect();
    let u = Ket::new(u);
    let un = u.norm();
    let h = if un < 1e-14 {
        CMatrix::identity(n)
    } else {
        let proj = u.outer(&u).scale(C64::new(2.0 / (un * un), 0.0));
        CMatrix::identity(n).sub(&proj)
    };
    // H phi = alpha e0 and H is an involution, so H(alpha e0) = phi; rescale
    // column 0 so the result maps e0 exactly to phi.
    let mut w = h;
    for r in 0..n {
        w[(r, 0)] *= alpha;
    }
    w
}

/// Complete `cols` (orthonormal within tol) to a full unitary via
/// Gram-Schmidt against the standard basis.
pub fn unitary_completing_columns(cols: &[Ket], dim: usize) -> CMatrix {
    let mut basis: Vec<Ket> = cols.to_vec();
    for cand in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v: Vec<C64> = Ket::basis(dim, cand).amplitudes().to_vec();
        for b in &basis {
            let c = b.inner(&Ket::new(v.clone()));
            for (vi, bi) in v.iter_mut().zip(b.amplitudes()) {
                *vi -= c * bi;
            }
        }
        let k = Ket::new(v);
        if k.norm() > 1e-7 {
            basis.push(k.normalized());
        }
    }
    assert_eq!(basis.len(), dim, "could not complete orthonormal basis");
    CMatrix::from_fn(dim, dim, |r, c| basis[c].amplitudes()[r])
}
