//! Small helpers for complex vectors stored as `Vec<C64>`.

use nalgebra::DMatrix;

use crate::C64;

pub type CMat = DMatrix<C64>;

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Bilinear pairing `Σ a_j b_j`.
pub fn dotu(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hermitian inner product `⟨a, b⟩ = Σ a_j conj(b_j)`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn sup(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s·b`.
pub fn axpy(a: &[C64], s: C64, b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn conj(a: &[C64]) -> Vec<C64> {
    a.iter().map(|x| x.conj()).collect()
}

pub fn unit(n: usize, k: usize) -> Vec<C64> {
    let mut e = vec![zero(); n];
    e[k] = C64::new(1.0, 0.0);
    e
}

pub fn normalized(a: &[C64]) -> Vec<C64> {
    let r = norm(a);
    scale(a, C64::new(1.0 / r, 0.0))
}

pub fn mat_vec(m: &CMat, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// `mᵗ v`.
pub fn mat_t_vec(m: &CMat, v: &[C64]) -> Vec<C64> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)] * v[i]).sum())
        .collect()
}

/// Packs a complex vector as `[re_0, …, re_{n-1}, im_0, …, im_{n-1}]`.
pub fn to_real(a: &[C64]) -> Vec<f64> {
    a.iter().map(|x| x.re).chain(a.iter().map(|x| x.im)).collect()
}

pub fn from_real(x: &[f64]) -> Vec<C64> {
    let n = x.len() / 2;
    (0..n).map(|j| C64::new(x[j], x[n + j])).collect()
}

/// Operator 2-norm of a complex matrix.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}
