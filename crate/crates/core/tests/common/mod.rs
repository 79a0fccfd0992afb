#![allow(dead_code)]

use complex_geodesics::circle::{nodes, CircleField};
use complex_geodesics::cvec::{self, CMat};
use complex_geodesics::domain::Domain;
use complex_geodesics::rh::RhSymbols;
use complex_geodesics::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<C64> {
    (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Random vector of length `d` and norm `r`.
pub fn rand_with_norm(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<C64> {
    cvec::scale(&cvec::normalized(&rand_vec(rng, d)), c(r, 0.0))
}

/// Symmetric real `B` with `‖B‖ ≤ 1` used for the test ellipsoids.
pub fn ellipsoid_b(n: usize) -> Vec<Vec<f64>> {
    let mut b: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 - 0.35 * i as f64 } else { 0.3 / (1.0 + (i + j) as f64) }).collect())
        .collect();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| b[i][j]);
    let norm = m.symmetric_eigenvalues().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for row in b.iter_mut() {
        for x in row.iter_mut() {
            *x /= norm;
        }
    }
    b
}

pub fn ellipsoid(n: usize, eps: f64) -> Domain {
    Domain::make_ellipsoid(n, &ellipsoid_b(n), eps).unwrap()
}

/// `η_{q,v}(ζ) = q + (ζ − 1)⟨v, q⟩v` computed directly.
pub fn ball_oracle(q: &[C64], v: &[C64], zeta: C64) -> Vec<C64> {
    let pair: C64 = v.iter().zip(q).map(|(a, b)| a * b.conj()).sum();
    q.iter().zip(v).map(|(qi, vi)| qi + (zeta - 1.0) * pair * vi).collect()
}

/// Ball pluricomplex Poisson kernel `−(1 − |z|²)/|1 − ⟨z, p⟩|²`.
pub fn ball_kernel(z: &[C64], p: &[C64]) -> f64 {
    let nz: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let pair: C64 = z.iter().zip(p).map(|(a, b)| a * b.conj()).sum();
    -(1.0 - nz) / (c(1.0, 0.0) - pair).norm_sqr()
}

pub fn max_dist(a: &CircleField, b: &CircleField) -> f64 {
    a.sub(b).unwrap().sup_norm()
}

/// Admissible `(H, S)`: `H = MM* + I`, `S` symmetric scaled below `λ_min(H)`.
pub fn random_symbols(rng: &mut ChaCha8Rng, n_nodes: usize, d: usize) -> RhSymbols {
    let terms: Vec<(CMat, CMat)> = (0..3)
        .map(|_| {
            let a = CMat::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let b = CMat::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            (a, b)
        })
        .collect();
    let mut hs = Vec::new();
    let mut ss = Vec::new();
    for z in nodes(n_nodes) {
        let mut m = CMat::zeros(d, d);
        let mut s = CMat::zeros(d, d);
        for (k, (a, b)) in terms.iter().enumerate() {
            let w = z.powi(k as i32) * 0.3;
            m += a * w;
            s += b * w;
        }
        hs.push(&m * m.adjoint() + CMat::identity(d, d));
        ss.push((&s + s.transpose()) * c(0.5, 0.0));
    }
    let lam = hs.iter().map(|h| h.clone().symmetric_eigenvalues().min()).fold(f64::INFINITY, f64::min);
    let sn = ss.iter().map(cvec::op_norm).fold(0.0, f64::max);
    let scale = rng.gen_range(0.2..0.8) * lam / sn.max(1e-12);
    for s in ss.iter_mut() {
        *s *= c(scale, 0.0);
    }
    RhSymbols::from_node_matrices(&hs, &ss).unwrap()
}

/// Smooth data with geometrically decaying modes `|k| ≤ 6`.
pub fn random_data(rng: &mut ChaCha8Rng, n_nodes: usize, d: usize) -> CircleField {
    let mut modes = Vec::new();
    for comp in 0..d {
        for k in -6i64..=6 {
            let s = 0.5f64.powi(k.abs() as i32);
            modes.push((k, comp, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * s));
        }
    }
    CircleField::from_modes(n_nodes, d, &modes).unwrap()
}

/// Smooth holomorphic perturbation with modes `0 ≤ k ≤ 8`.
pub fn random_holomorphic(rng: &mut ChaCha8Rng, n_nodes: usize, d: usize) -> CircleField {
    let mut modes = Vec::new();
    for comp in 0..d {
        for k in 0i64..=8 {
            let s = 0.6f64.powi(k as i32);
            modes.push((k, comp, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * s));
        }
    }
    CircleField::from_modes(n_nodes, d, &modes).unwrap()
}
