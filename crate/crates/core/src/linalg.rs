//! Dense complex vectors and Hermitian matrices.
//!
//! Everything here is sized for the stacked two-AP problem (`2N x 2N` with
//! `N` a handful of antennas), so storage is a flat row-major `Vec` and the
//! eigensolver is a cyclic complex Jacobi iteration.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for Hermitian symmetry and real-valued traces.
pub const TAU_HERM: f64 = 1e-10;
/// Relative tolerance on eigendecomposition reconstruction.
pub const TAU_EIG: f64 = 1e-10;
/// Relative tolerance for positive semidefinite membership.
pub const TAU_PSD: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 64;

/// A complex column vector of fixed length.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CVector(Vec<Complex64>);

impl CVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Dimension {
                expected: 1,
                found: 0,
            });
        }
        Ok(Self(entries))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "vector length must be positive");
        Self(vec![Complex64::new(0.0, 0.0); n])
    }

    /// Builds a vector from real parts only.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// `k`-th canonical basis vector of length `n`.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.0.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(self.0.iter().map(|&z| z * c).collect())
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self(self.0.iter().map(|&z| z * c).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Returns `self / ||self||`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale_real(1.0 / n))
    }

    /// Block concatenation `(self, other)`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    /// Sub-vector `[start, start + len)`.
    pub fn segment(&self, start: usize, len: usize) -> Self {
        Self(self.0[start..start + len].to_vec())
    }

    /// Multiplies by a unit phase so that the first entry with magnitude
    /// above `tol * ||self||` becomes real and positive.
    pub fn with_canonical_phase(&self, tol: f64) -> Self {
        let cutoff = tol * self.norm();
        match self.0.iter().find(|z| z.norm() > cutoff) {
            Some(z) => self.scale(z.conj() / z.norm()),
            None => self.clone(),
        }
    }
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl std::ops::Index<usize> for CVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

/// Scalar product `a^H b`, conjugate-linear in the first argument.
pub fn inner(a: &CVector, b: &CVector) -> Result<Complex64> {
    check_len(a.len(), b.len())?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x.conj() * y).sum())
}

/// Rank-one projector-like matrix `a a^H`.
pub fn outer(a: &CVector) -> HMatrix {
    let n = a.len();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            data.push(a[i] * a[j].conj());
        }
    }
    HMatrix { n, data }
}

/// A square complex matrix that is Hermitian within [`TAU_HERM`].
///
/// Constructors validate symmetry; linear combinations of Hermitian matrices
/// with real coefficients stay Hermitian and skip the check.
#[derive(Clone, PartialEq)]
pub struct HMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HMatrix {
    /// Validates and wraps row-major entries.
    pub fn from_rows(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension {
                expected: 1,
                found: 0,
            });
        }
        check_len(n * n, data.len())?;
        let m = Self { n, data };
        let dev = m.hermitian_deviation();
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        if dev > TAU_HERM * scale {
            return Err(Error::NotHermitian {
                deviation: dev / scale,
            });
        }
        Ok(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            check_len(n, r.len())?;
            data.extend(r.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::from_rows(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.n;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    /// `sum_k c_k A_k` for real coefficients; all terms must share a dimension.
    pub fn combination(terms: &[(f64, &HMatrix)]) -> Result<Self> {
        let n = terms.first().map(|(_, m)| m.n).unwrap_or(0);
        let mut out = Self::zeros(n);
        for (c, m) in terms {
            check_len(n, m.n)?;
            for (o, x) in out.data.iter_mut().zip(&m.data) {
                *o += x * c;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn mul_vec(&self, v: &CVector) -> Result<CVector> {
        check_len(self.n, v.len())?;
        let n = self.n;
        Ok(CVector(
            (0..n)
                .map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum())
                .collect(),
        ))
    }

    /// Hermitian form `v^H A v` (real for Hermitian `A`).
    pub fn quadratic_form(&self, v: &CVector) -> Result<f64> {
        Ok(inner(v, &self.mul_vec(v)?)?.re)
    }

    /// Principal sub-block `[start, start + len)^2`.
    pub fn block(&self, start: usize, len: usize) -> Self {
        let mut out = Self::zeros(len);
        for i in 0..len {
            for j in 0..len {
                out.data[i * len + j] = self.get(start + i, start + j);
            }
        }
        out
    }

    /// Matrix with `I_len` on the diagonal block starting at `start`, zero
    /// elsewhere.
    pub fn block_selector(n: usize, start: usize, len: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in start..start + len {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Largest absolute eigenvalue, which equals the operator norm for a
    /// Hermitian matrix.
    pub fn operator_norm(&self) -> Result<f64> {
        let e = eigh(self)?;
        Ok(e.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max))
    }
}

impl fmt::Debug for HMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[Complex64]> = self.data.chunks(self.n).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// `trace(A B)` for Hermitian `A`, `B`. The result is real.
pub fn trace_product(a: &HMatrix, b: &HMatrix) -> Result<f64> {
    check_len(a.n, b.n)?;
    let n = a.n;
    // trace(AB) = sum_ij a_ij b_ji
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a.data[i * n + j] * b.data[j * n + i];
            acc += x.re;
        }
    }
    Ok(acc)
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<CVector>,
}

impl EigDecomposition {
    /// `sum_i lambda_i u_i u_i^H`.
    pub fn reconstruct(&self) -> HMatrix {
        let n = self.eigenvalues.len();
        let mut out = HMatrix::zeros(n);
        for (l, u) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let p = outer(u);
            for (o, x) in out.data.iter_mut().zip(&p.data) {
                *o += x * l;
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty decomposition")
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn eigh(a: &HMatrix) -> Result<EigDecomposition> {
    let n = a.n;
    let scale = a.max_abs();
    let dev = a.hermitian_deviation();
    if dev > TAU_HERM * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian {
            deviation: dev / scale,
        });
    }
    let mut m = a.data.clone();
    // Symmetrize exactly so the rotations act on a truly Hermitian array.
    for i in 0..n {
        m[i * n + i] = Complex64::new(m[i * n + i].re, 0.0);
        for j in i + 1..n {
            let avg = (m[i * n + j] + m[j * n + i].conj()) * 0.5;
            m[i * n + j] = avg;
            m[j * n + i] = avg.conj();
        }
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }

    let frob: f64 = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * frob * 1e-2 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].re.total_cmp(&m[i * n + i].re));
    let eigenvalues = order.iter().map(|&k| m[k * n + k].re).collect();
    let eigenvectors = order
        .iter()
        .map(|&k| CVector((0..n).map(|i| v[i * n + k]).collect()))
        .collect();
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// One Jacobi step zeroing `m[p][q]`.
///
/// The rotation is `J = D R` with `D = diag(1, e^{-i phi})` making the pivot
/// real and `R` the classical real Jacobi rotation; `m <- J^H m J`, `v <- v J`.
fn rotate(m: &mut [Complex64], v: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m[p * n + p].re;
    let aqq = m[q * n + q].re;
    let phase = apq / r; // e^{i phi}
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let e = phase.conj();
    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = e * (-s);
    let jqq = e * c;

    for k in 0..n {
        let akp = m[k * n + p];
        let akq = m[k * n + q];
        m[k * n + p] = akp * jpp + akq * jqp;
        m[k * n + q] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = m[p * n + k];
        let aqk = m[q * n + k];
        m[p * n + k] = jpp.conj() * apk + jqp.conj() * aqk;
        m[q * n + k] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    m[p * n + q] = Complex64::new(0.0, 0.0);
    m[q * n + p] = Complex64::new(0.0, 0.0);
    m[p * n + p] = Complex64::new(m[p * n + p].re, 0.0);
    m[q * n + q] = Complex64::new(m[q * n + q].re, 0.0);

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * jpp + vkq * jqp;
        v[k * n + q] = vkp * jpq + vkq * jqq;
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig(a: &HMatrix) -> Result<f64> {
    Ok(eigh(a)?.min())
}

/// `min_eig(A) >= -TAU_PSD * ||A||`.
pub fn is_psd(a: &HMatrix) -> Result<bool> {
    let e = eigh(a)?;
    let norm = e.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    Ok(e.min() >= -TAU_PSD * norm)
}
