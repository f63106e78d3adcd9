//! Dense complex linear algebra: tensor products, partial traces, Jacobi
//! eigen- and singular-value solvers.
//!
//! Tensor factors are ordered with party 1 as the most significant index.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

/// Dense complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CVector {
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invalid("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(self.cols, v.dim(), "apply shape mismatch");
        let data = (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(&v.data)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        CVector { data }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Tr(self · other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!((self.cols, self.rows), (other.rows, other.cols));
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CVector {
    pub fn new(data: Vec<C64>) -> Self {
        Self { data }
    }

    pub fn from_real(data: &[f64]) -> Self {
        Self { data: data.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: vec![ZERO; dim] }
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self { data: self.data.iter().map(|z| z / n).collect() }
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// |self⟩⟨other|
    pub fn outer(&self, other: &Self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), other.dim());
        for (i, a) in self.data.iter().enumerate() {
            for (j, b) in other.data.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    pub fn projector(&self) -> CMatrix {
        self.outer(self)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut data = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Self { data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Kronecker product; entry (i·b.rows+k, j·b.cols+l) = a[i,j]·b[k,l].
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list, left to right.
pub fn kron_all(ms: &[CMatrix]) -> CMatrix {
    ms.iter().fold(CMatrix::identity(1), |acc, m| kron(&acc, m))
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn pauli_y() -> CMatrix {
    CMatrix { rows: 2, cols: 2, data: vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO] }
}

pub fn pauli_z() -> CMatrix {
    CMatrix::diag(&[1.0, -1.0])
}

/// σ₁, σ₂, σ₃ = σx, σy, σz.
pub fn paulis() -> [CMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Splits a flat index into per-factor digits, most significant first.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Traces out every factor not listed in `keep`.
pub fn partial_trace(rho: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.rows != total {
        return Err(Error::Dimension(format!(
            "{}x{} matrix against factor dimensions {dims:?}",
            rho.rows, rho.cols
        )));
    }
    if keep.is_empty() {
        return Err(Error::Invalid("partial trace must keep at least one factor".into()));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension(format!("keep set {keep:?} out of range")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let kdims: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let kd: usize = kdims.iter().product();
    let td: usize = tdims.iter().product();

    let mut full = vec![0usize; dims.len()];
    let mut index_of = |kidx: usize, tidx: usize| {
        for (slot, v) in keep.iter().zip(digits(kidx, &kdims)) {
            full[*slot] = v;
        }
        for (slot, v) in traced.iter().zip(digits(tidx, &tdims)) {
            full[*slot] = v;
        }
        compose(&full, dims)
    };
    let mut table = vec![0usize; kd * td];
    for k in 0..kd {
        for t in 0..td {
            table[k * td + t] = index_of(k, t);
        }
    }

    let mut out = CMatrix::zeros(kd, kd);
    for i in 0..kd {
        for j in 0..kd {
            let mut acc = ZERO;
            for t in 0..td {
                acc += rho[(table[i * td + t], table[j * td + t])];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let defect = m.hermitian_defect();
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let n = m.rows;
    // Real embedding [[A, -B], [B, A]] of H = A + iB; each eigenvalue appears twice.
    let dim = 2 * n;
    let mut a = vec![0.0; dim * dim];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            a[i * dim + j] = z.re;
            a[(i + n) * dim + (j + n)] = z.re;
            a[i * dim + (j + n)] = -z.im;
            a[(i + n) * dim + j] = z.im;
        }
    }
    let (vals, vecs) = jacobi_symmetric(&mut a, dim);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| vals[x].total_cmp(&vals[y]));

    // Take one vector from each degenerate pair, skipping embedded copies
    // (u, v) ~ (-v, u) that would duplicate an already chosen complex vector.
    let mut eigvals = Vec::with_capacity(n);
    let mut cols: Vec<CVector> = Vec::with_capacity(n);
    for &idx in &order {
        if cols.len() == n {
            break;
        }
        let mut v = CVector::new(
            (0..n).map(|r| C64::new(vecs[r * dim + idx], vecs[(r + n) * dim + idx])).collect(),
        );
        for c in &cols {
            let ov = c.inner(&v);
            for (x, y) in v.data.iter_mut().zip(&c.data) {
                *x -= ov * y;
            }
        }
        let nv = v.norm();
        if nv < 0.5 {
            continue;
        }
        cols.push(v.normalized());
        eigvals.push(vals[idx]);
    }
    let mut vmat = CMatrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            vmat[(i, j)] = c.data[i];
        }
    }
    Ok((eigvals, vmat))
}

/// Cyclic Jacobi on a real symmetric matrix (row-major, overwritten).
/// Returns eigenvalues and the eigenvector matrix (columns).
fn jacobi_symmetric(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn eigmax_hermitian(m: &CMatrix) -> Result<f64> {
    let (vals, _) = hermitian_eigen(m)?;
    Ok(vals.last().copied().unwrap_or(0.0))
}

/// Singular values in descending order, min(rows, cols) of them.
///
/// Computed from the eigenvalues of the smaller Gram matrix.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.rows == 0 || m.cols == 0 {
        return Vec::new();
    }
    let gram = if m.rows <= m.cols { m.matmul(&m.adjoint()) } else { m.adjoint().matmul(m) };
    // Symmetrize away rounding so the Hermitian check cannot trip.
    let gram = gram.add(&gram.adjoint()).scale_re(0.5);
    let (vals, _) = hermitian_eigen(&gram).expect("Gram matrix is Hermitian");
    let mut s: Vec<f64> = vals.iter().map(|&x| x.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&CMatrix::identity(2), &CMatrix::identity(2)), CMatrix::identity(4));
        assert_eq!(kron(&pauli_z(), &pauli_z()), CMatrix::diag(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_rectangular_shape() {
        let a = CMatrix::from_real(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = CMatrix::from_real(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let k = kron(&a, &b);
        assert_eq!((k.rows, k.cols), (6, 6));
        assert_eq!(k[(0, 0)], C64::new(7.0, 0.0));
        assert_eq!(k[(3 + 2, 2 * 2 + 1)], C64::new(6.0 * 12.0, 0.0));
    }

    #[test]
    fn partial_trace_product_and_epr() {
        let ket00 = CVector::basis(4, 0);
        let r = partial_trace(&ket00.projector(), &[2, 2], &[0]).unwrap();
        assert_eq!(r, CMatrix::diag(&[1.0, 0.0]));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let epr = CVector::from_real(&[h, 0.0, 0.0, h]);
        let r = partial_trace(&epr.projector(), &[2, 2], &[1]).unwrap();
        assert!(r.max_abs_diff(&CMatrix::diag(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = CMatrix::identity(4);
        assert!(partial_trace(&m, &[2, 3], &[0]).is_err());
        assert!(partial_trace(&m, &[2, 2], &[]).is_err());
    }

    #[test]
    fn singular_values_basic() {
        let s = singular_values(&CMatrix::identity(3));
        assert!(s.iter().all(|&x| close(x, 1.0, 1e-12)));
        let s = singular_values(&CMatrix::diag(&[3.0, -2.0]));
        assert!(close(s[0], 3.0, 1e-12) && close(s[1], 2.0, 1e-12));
    }

    #[test]
    fn eigmax_cases() {
        assert!(close(eigmax_hermitian(&pauli_z()).unwrap(), 1.0, 1e-12));
        let m = kron(&pauli_x(), &pauli_x()).add(&kron(&pauli_z(), &pauli_z()));
        assert!(close(eigmax_hermitian(&m).unwrap(), 2.0, 1e-12));
        let y = pauli_y();
        assert!(close(eigmax_hermitian(&y).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn eigmax_rejects_non_hermitian() {
        let m = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(eigmax_hermitian(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigenvectors_reconstruct() {
        let m = kron(&pauli_y(), &pauli_x()).add(&kron(&pauli_z(), &CMatrix::identity(2)).scale_re(0.3));
        let (vals, v) = hermitian_eigen(&m).unwrap();
        let d = CMatrix::diag(&vals);
        let back = v.matmul(&d).matmul(&v.adjoint());
        assert!(back.max_abs_diff(&m) < 1e-10);
    }
}
