//! Linear Riemann–Hilbert problems on the unit circle.
//!
//! Given Hermitian `H`, symmetric `S` and data `f`, find holomorphic `g`
//! with `H·conj(g/ζ) + S·g/ζ + f` holomorphic, under either a 1-jet or a
//! two-point constraint. The building block is the base problem
//! `Π(H ḡ + S g + f) = 0` with `g(0)` prescribed, discretized on the lowest
//! `N/2 − 1` negative frequencies and solved as a square real-linear system.

use nalgebra::{DMatrix, DVector};

use crate::circle::CircleField;
use crate::cvec::{self, CMat};
use crate::error::{Error, Result};
use crate::matfield;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Largest acceptable condition estimate of the discretized systems.
pub const COND_MAX: f64 = 1e10;

/// Symbol pair `(H, S)` of size `d × d` sampled on the circle.
#[derive(Clone, Debug)]
pub struct RhSymbols {
    d: usize,
    h: CircleField,
    s: CircleField,
}

impl RhSymbols {
    /// Symbols from row-major matrix fields; checks Hermitian/symmetric structure.
    pub fn new(d: usize, h: CircleField, s: CircleField) -> Result<Self> {
        if h.dim() != d * d || s.dim() != d * d || h.num_nodes() != s.num_nodes() {
            return Err(Error::Invalid("symbol fields have inconsistent shapes".into()));
        }
        let scale = 1.0 + h.sup_norm().max(s.sup_norm());
        for j in 0..h.num_nodes() {
            for a in 0..d {
                for b in 0..d {
                    let hh = h.value(j, a * d + b) - h.value(j, b * d + a).conj();
                    let ss = s.value(j, a * d + b) - s.value(j, b * d + a);
                    if hh.norm() > 1e-12 * scale || ss.norm() > 1e-12 * scale {
                        return Err(Error::Invalid(format!("symbols not Hermitian/symmetric at node {j}")));
                    }
                }
            }
        }
        Ok(Self { d, h, s })
    }

    pub fn from_node_matrices(hs: &[CMat], ss: &[CMat]) -> Result<Self> {
        let d = hs.first().map(|m| m.nrows()).unwrap_or(0);
        Self::new(d, matfield::from_nodes(hs)?, matfield::from_nodes(ss)?)
    }

    pub fn identity(n_nodes: usize, d: usize) -> Result<Self> {
        let hs = vec![CMat::identity(d, d); n_nodes];
        let ss = vec![CMat::zeros(d, d); n_nodes];
        Self::from_node_matrices(&hs, &ss)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_nodes(&self) -> usize {
        self.h.num_nodes()
    }

    pub fn h(&self) -> &CircleField {
        &self.h
    }

    pub fn s(&self) -> &CircleField {
        &self.s
    }

    /// `min (vᵗH v̄ − |vᵗS v|)` over nodes and unit `v`, estimated on 32 phases.
    pub fn admissibility_margin(&self) -> f64 {
        let d = self.d;
        let mut best = f64::INFINITY;
        for j in 0..self.num_nodes() {
            let h = matfield::at_node(&self.h, j, d, d);
            let s = matfield::at_node(&self.s, j, d, d);
            for t in 0..32 {
                let ph = C64::from_polar(1.0, std::f64::consts::PI * t as f64 / 16.0);
                // Real quadratic form x ↦ vᵗH v̄ − Re(ph·vᵗS v) on ℝ^{2d}.
                let q = |v: &[C64]| {
                    cvec::dotu(v, &cvec::mat_vec(&h, &cvec::conj(v))).re - (ph * cvec::dotu(v, &cvec::mat_vec(&s, v))).re
                };
                let dirs: Vec<Vec<C64>> = (0..2 * d)
                    .map(|k| {
                        let e = cvec::unit(d, k / 2);
                        if k % 2 == 0 { e } else { cvec::scale(&e, I) }
                    })
                    .collect();
                let m = DMatrix::from_fn(2 * d, 2 * d, |a, b| {
                    0.5 * (q(&cvec::add(&dirs[a], &dirs[b])) - q(&dirs[a]) - q(&dirs[b]))
                });
                let ev = m.symmetric_eigenvalues();
                best = best.min(ev.iter().cloned().fold(f64::INFINITY, f64::min));
            }
        }
        best
    }
}

/// Factorization used for the square real-linear base system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factorization {
    ColPivQr,
    FullPivLu,
}

enum Factor {
    Qr(nalgebra::linalg::ColPivQR<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Lu(nalgebra::linalg::FullPivLU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

/// Factored base system for one symbol pair.
pub struct RhSolver {
    sym: RhSymbols,
    m: usize,
    factor: Factor,
    cond: f64,
}

impl std::fmt::Debug for RhSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RhSolver").field("d", &self.sym.d).field("m", &self.m).field("cond", &self.cond).finish()
    }
}

impl RhSolver {
    pub fn new(sym: RhSymbols) -> Result<Self> {
        Self::with_factorization(sym, Factorization::ColPivQr)
    }

    pub fn with_factorization(sym: RhSymbols, kind: Factorization) -> Result<Self> {
        let n = sym.num_nodes();
        let d = sym.d;
        let m = n / 2;
        let u = d * (m - 1);
        let mut a = DMatrix::<f64>::zeros(2 * u, 2 * u);
        for kk in 1..m {
            let k = -(kk as i64);
            for i in 0..d {
                let e = (kk - 1) * d + i;
                for mm in 1..m {
                    for j in 0..d {
                        let col = (mm - 1) * d + j;
                        let al = sym.s.coeff(k - mm as i64, i * d + j);
                        let be = sym.h.coeff(k + mm as i64, i * d + j);
                        a[(e, col)] += al.re + be.re;
                        a[(e, u + col)] += -al.im + be.im;
                        a[(u + e, col)] += al.im + be.im;
                        a[(u + e, u + col)] += al.re - be.re;
                    }
                }
            }
        }
        let (factor, cond) = match kind {
            Factorization::ColPivQr => {
                let qr = a.col_piv_qr();
                let r = qr.r();
                let diag: Vec<f64> = (0..2 * u).map(|i| r[(i, i)].abs()).collect();
                let mx = diag.iter().cloned().fold(0.0, f64::max);
                let mn = diag.iter().cloned().fold(f64::INFINITY, f64::min);
                (Factor::Qr(qr), mx / mn)
            }
            Factorization::FullPivLu => {
                let lu = a.full_piv_lu();
                let uu = lu.u();
                let diag: Vec<f64> = (0..2 * u).map(|i| uu[(i, i)].abs()).collect();
                let mx = diag.iter().cloned().fold(0.0, f64::max);
                let mn = diag.iter().cloned().fold(f64::INFINITY, f64::min);
                (Factor::Lu(lu), mx / mn)
            }
        };
        if !(cond <= COND_MAX) {
            return Err(Error::IllConditioned(cond));
        }
        Ok(Self { sym, m, factor, cond })
    }

    pub fn symbols(&self) -> &RhSymbols {
        &self.sym
    }

    pub fn condition_estimate(&self) -> f64 {
        self.cond
    }

    /// Unique holomorphic `g` with `g(0) = g0` and `Π(H ḡ + S g + f) = 0`.
    pub fn solve_base(&self, f: &CircleField, g0: &[C64]) -> Result<CircleField> {
        let d = self.sym.d;
        if f.dim() != d || g0.len() != d || f.num_nodes() != self.sym.num_nodes() {
            return Err(Error::Invalid("base problem data has wrong shape".into()));
        }
        let n = f.num_nodes();
        let m = self.m;
        let u = d * (m - 1);
        let mut b = DVector::<f64>::zeros(2 * u);
        for kk in 1..m {
            let k = -(kk as i64);
            for i in 0..d {
                let e = (kk - 1) * d + i;
                let mut acc = f.coeff(k, i);
                for j in 0..d {
                    acc += self.sym.h.coeff(k, i * d + j) * g0[j].conj() + self.sym.s.coeff(k, i * d + j) * g0[j];
                }
                b[e] = -acc.re;
                b[u + e] = -acc.im;
            }
        }
        let x = match &self.factor {
            Factor::Qr(qr) => qr.solve(&b),
            Factor::Lu(lu) => lu.solve(&b),
        }
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
        let mut modes = Vec::with_capacity(d * m);
        for j in 0..d {
            modes.push((0, j, g0[j]));
        }
        for mm in 1..m {
            for j in 0..d {
                let idx = (mm - 1) * d + j;
                modes.push((mm as i64, j, C64::new(x[idx], x[u + idx])));
            }
        }
        CircleField::from_modes(n, d, &modes)
    }

    /// `‖Π(H ḡ + S g + f)‖_∞` evaluated through nodal products.
    pub fn base_residual(&self, g: &CircleField, f: &CircleField) -> Result<f64> {
        base_residual(&self.sym, g, f)
    }
}

pub fn base_residual(sym: &RhSymbols, g: &CircleField, f: &CircleField) -> Result<f64> {
    let d = sym.d;
    let gbar = g.map_nodes(d, |_, v| cvec::conj(v))?;
    let t = matfield::apply(&sym.h, &gbar, d, d)?
        .add(&matfield::apply(&sym.s, g, d, d)?)?
        .add(f)?;
    Ok(t.analytic_projection().sup_norm())
}

/// Residual `‖Π(H conj(g/ζ) + S g/ζ + f)‖_∞` of the jet and two-point problems.
pub fn jet_residual(sym: &RhSymbols, g: &CircleField, f: &CircleField) -> Result<f64> {
    let d = sym.d;
    let q = g.map_nodes(d, |z, v| cvec::scale(v, 1.0 / z))?;
    let qbar = q.map_nodes(d, |_, v| cvec::conj(v))?;
    let t = matfield::apply(&sym.h, &qbar, d, d)?
        .add(&matfield::apply(&sym.s, &q, d, d)?)?
        .add(f)?;
    Ok(t.analytic_projection().sup_norm())
}

/// One-jet or two-point side condition.
#[derive(Clone, Debug, PartialEq)]
pub enum JetConstraint {
    OneJet { zeta0: C64, z0: Vec<C64>, v0: Vec<C64> },
    TwoPoint { zeta0: C64, xi0: C64, z0: Vec<C64>, w0: Vec<C64> },
}

/// Homogeneous basis solutions for one symbol pair, reused across data.
pub struct RhBasis {
    solver: RhSolver,
    g_r: Vec<CircleField>,
    g_i: Vec<CircleField>,
    h_r: Vec<CircleField>,
    h_i: Vec<CircleField>,
}

impl std::fmt::Debug for RhBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RhBasis").field("solver", &self.solver).finish()
    }
}

impl RhBasis {
    pub fn new(sym: RhSymbols) -> Result<Self> {
        Self::from_solver(RhSolver::new(sym)?)
    }

    pub fn from_solver(solver: RhSolver) -> Result<Self> {
        let d = solver.sym.d;
        let n = solver.sym.num_nodes();
        let zero_f = CircleField::zeros(n, d)?;
        let zero_v = vec![cvec::zero(); d];
        let mut g_r = Vec::with_capacity(d);
        let mut g_i = Vec::with_capacity(d);
        let mut h_r = Vec::with_capacity(d);
        let mut h_i = Vec::with_capacity(d);
        for k in 0..d {
            let e = cvec::unit(d, k);
            g_r.push(solver.solve_base(&zero_f, &e)?);
            g_i.push(solver.solve_base(&zero_f, &cvec::scale(&e, I))?);
            let he = matfield::column(&solver.sym.h, d, d, k)?;
            let se = matfield::column(&solver.sym.s, d, d, k)?;
            let fr = he.shift(1).add(&se.shift(-1))?;
            let fi = he.shift(1).scale(-I).add(&se.shift(-1).scale(I))?;
            h_r.push(solver.solve_base(&fr, &zero_v)?);
            h_i.push(solver.solve_base(&fi, &zero_v)?);
        }
        Ok(Self { solver, g_r, g_i, h_r, h_i })
    }

    pub fn solver(&self) -> &RhSolver {
        &self.solver
    }

    pub fn symbols(&self) -> &RhSymbols {
        &self.solver.sym
    }

    /// Solves the jet or two-point problem with the unknowns assembled in the
    /// default order.
    pub fn solve(&self, f: &CircleField, c: &JetConstraint) -> Result<CircleField> {
        let d = self.solver.sym.d;
        let order: Vec<usize> = (0..4 * d).collect();
        self.solve_ordered(f, c, &order)
    }

    /// As [`solve`](Self::solve) with a permuted column order of the
    /// `4d × 4d` real system (used to check uniqueness of the assembly).
    pub fn solve_ordered(&self, f: &CircleField, c: &JetConstraint, order: &[usize]) -> Result<CircleField> {
        let d = self.solver.sym.d;
        match c {
            JetConstraint::OneJet { z0, v0, .. } if z0.len() != d || v0.len() != d => {
                return Err(Error::Invalid("jet targets have wrong dimension".into()))
            }
            JetConstraint::TwoPoint { zeta0, xi0, z0, w0 } => {
                if z0.len() != d || w0.len() != d {
                    return Err(Error::Invalid("two-point targets have wrong dimension".into()));
                }
                if (zeta0 - xi0).norm() < 1e-14 {
                    return Err(Error::Invalid("two-point constraint needs distinct points".into()));
                }
            }
            _ => {}
        }
        for z in constraint_points(c) {
            if z.norm() > 1.0 + 1e-12 {
                return Err(Error::OutsideDisc(format!("{z}")));
            }
        }
        let gstar = self.solver.solve_base(f, &vec![cvec::zero(); d])?;
        let n = f.num_nodes();
        // Column c of the real system: (constant part, ζ-multiplied part).
        let mut cols: Vec<(Vec<C64>, &CircleField)> = Vec::with_capacity(4 * d);
        for k in 0..d {
            cols.push((cvec::unit(d, k), &self.h_r[k]));
        }
        for k in 0..d {
            cols.push((cvec::scale(&cvec::unit(d, k), I), &self.h_i[k]));
        }
        for k in 0..d {
            cols.push((vec![cvec::zero(); d], &self.g_r[k]));
        }
        for k in 0..d {
            cols.push((vec![cvec::zero(); d], &self.g_i[k]));
        }
        let zero = vec![cvec::zero(); d];
        let base = functional(c, &zero, &gstar);
        let target = match c {
            JetConstraint::OneJet { z0, v0, .. } => [z0.clone(), v0.clone()].concat(),
            JetConstraint::TwoPoint { z0, w0, .. } => [z0.clone(), w0.clone()].concat(),
        };
        let rhs = cvec::to_real(&cvec::sub(&target, &base));
        let mut a = DMatrix::<f64>::zeros(4 * d, 4 * d);
        for (pos, &ci) in order.iter().enumerate() {
            let (c0, fld) = &cols[ci];
            let val = cvec::to_real(&functional(c, c0, fld));
            for r in 0..4 * d {
                a[(r, pos)] = val[r];
            }
        }
        let sv = a.clone().svd(false, false).singular_values;
        let mx = sv.iter().cloned().fold(0.0, f64::max);
        let mn = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let cond = mx / mn;
        if !(cond <= COND_MAX) {
            return Err(Error::BasisDegenerate(cond));
        }
        let x = a
            .col_piv_qr()
            .solve(&DVector::from_vec(rhs))
            .ok_or(Error::BasisDegenerate(cond))?;
        let mut g0 = vec![cvec::zero(); d];
        let mut htil = gstar.clone();
        for (pos, &ci) in order.iter().enumerate() {
            let (c0, fld) = &cols[ci];
            g0 = cvec::axpy(&g0, C64::new(x[pos], 0.0), c0);
            htil = htil.add(&fld.scale(C64::new(x[pos], 0.0)))?;
        }
        let g0f = CircleField::constant(n, &g0)?;
        g0f.add(&htil.shift(1))
    }
}

fn constraint_points(c: &JetConstraint) -> Vec<C64> {
    match c {
        JetConstraint::OneJet { zeta0, .. } => vec![*zeta0],
        JetConstraint::TwoPoint { zeta0, xi0, .. } => vec![*zeta0, *xi0],
    }
}

/// Constraint functional applied to `g = c0 + ζ·F`.
fn functional(c: &JetConstraint, c0: &[C64], fld: &CircleField) -> Vec<C64> {
    match c {
        JetConstraint::OneJet { zeta0, .. } => {
            let f0 = fld.eval_series(*zeta0);
            let f1 = fld.eval_derivative(*zeta0, 1);
            let val = cvec::axpy(c0, *zeta0, &f0);
            let der = cvec::axpy(&f0, *zeta0, &f1);
            [val, der].concat()
        }
        JetConstraint::TwoPoint { zeta0, xi0, .. } => {
            let a = cvec::axpy(c0, *zeta0, &fld.eval_series(*zeta0));
            let b = cvec::axpy(c0, *xi0, &fld.eval_series(*xi0));
            [a, b].concat()
        }
    }
}

/// Convenience wrapper: unique holomorphic `g` with `g(0) = g0`.
pub fn solve_base(sym: &RhSymbols, f: &CircleField, g0: &[C64]) -> Result<CircleField> {
    RhSolver::new(sym.clone())?.solve_base(f, g0)
}

pub fn solve_jet(sym: &RhSymbols, f: &CircleField, c: &JetConstraint) -> Result<CircleField> {
    if !matches!(c, JetConstraint::OneJet { .. }) {
        return Err(Error::Invalid("solve_jet expects a one-jet constraint".into()));
    }
    RhBasis::new(sym.clone())?.solve(f, c)
}

pub fn solve_two_point(sym: &RhSymbols, f: &CircleField, c: &JetConstraint) -> Result<CircleField> {
    if !matches!(c, JetConstraint::TwoPoint { .. }) {
        return Err(Error::Invalid("solve_two_point expects a two-point constraint".into()));
    }
    RhBasis::new(sym.clone())?.solve(f, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const N: usize = 64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constants_solve_identity_problem() {
        let sym = RhSymbols::identity(N, 2).unwrap();
        let g0 = vec![c(1.0, 2.0), c(-0.5, 0.3)];
        let g = solve_base(&sym, &CircleField::zeros(N, 2).unwrap(), &g0).unwrap();
        let k = CircleField::constant(N, &g0).unwrap();
        assert!(g.sub(&k).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn fourier_matching_scalar() {
        let sym = RhSymbols::identity(N, 1).unwrap();
        let f = CircleField::monomial(N, -2).unwrap();
        let g = solve_base(&sym, &f, &[c(0.0, 0.0)]).unwrap();
        let expect = CircleField::monomial(N, 2).unwrap().scale(c(-1.0, 0.0));
        assert!(g.sub(&expect).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn jet_identity_examples() {
        let sym = RhSymbols::identity(N, 2).unwrap();
        let a = vec![c(0.2, 0.1), c(-0.3, 0.4)];
        let b = vec![c(1.0, -1.0), c(0.5, 0.0)];
        let f = CircleField::zeros(N, 2).unwrap();
        let g = solve_jet(&sym, &f, &JetConstraint::OneJet { zeta0: c(0.0, 0.0), z0: a.clone(), v0: b.clone() }).unwrap();
        let expect = CircleField::from_fn(N, 2, |z| cvec::axpy(&a, z, &b)).unwrap();
        assert!(g.sub(&expect).unwrap().sup_norm() < 1e-13);

        let g = solve_two_point(
            &sym,
            &CircleField::zeros(N, 1).unwrap().add(&CircleField::zeros(N, 1).unwrap()).unwrap(),
            &JetConstraint::TwoPoint { zeta0: c(1.0, 0.0), xi0: c(-1.0, 0.0), z0: vec![c(1.0, 0.0)], w0: vec![c(-1.0, 0.0)] },
        );
        assert!(g.is_err(), "dimension mismatch must be rejected");
        let sym1 = RhSymbols::identity(N, 1).unwrap();
        let g = solve_two_point(
            &sym1,
            &CircleField::zeros(N, 1).unwrap(),
            &JetConstraint::TwoPoint { zeta0: c(1.0, 0.0), xi0: c(-1.0, 0.0), z0: vec![c(1.0, 0.0)], w0: vec![c(-1.0, 0.0)] },
        )
        .unwrap();
        assert!(g.sub(&CircleField::monomial(N, 1).unwrap()).unwrap().sup_norm() < 1e-13);
    }

    fn smooth_matrix(rng: &mut ChaCha8Rng, d: usize) -> Vec<(CMat, CMat)> {
        // Low-order trigonometric coefficients for an admissible pair.
        let terms: Vec<(CMat, CMat)> = (0..3)
            .map(|_| {
                let a = CMat::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                let b = CMat::from_fn(d, d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                (a, b)
            })
            .collect();
        terms
    }

    fn random_symbols(rng: &mut ChaCha8Rng, d: usize) -> RhSymbols {
        let t = smooth_matrix(rng, d);
        let mut hs = Vec::new();
        let mut ss = Vec::new();
        for z in crate::circle::nodes(N) {
            let mut m = CMat::zeros(d, d);
            let mut s = CMat::zeros(d, d);
            for (k, (a, b)) in t.iter().enumerate() {
                let w = z.powi(k as i32) * 0.3;
                m += a * w;
                s += b * w;
            }
            hs.push(&m * m.adjoint() + CMat::identity(d, d) * c(1.0, 0.0));
            ss.push((&s + s.transpose()) * c(0.5, 0.0));
        }
        // One global scale keeps S band-limited while |S| < λ_min(H).
        let lam = hs.iter().map(|h| h.clone().symmetric_eigenvalues().min()).fold(f64::INFINITY, f64::min);
        let sn = ss.iter().map(cvec::op_norm).fold(0.0, f64::max);
        for s in ss.iter_mut() {
            *s *= c(0.6 * lam / sn.max(1e-12), 0.0);
        }
        RhSymbols::from_node_matrices(&hs, &ss).unwrap()
    }

    fn random_data(rng: &mut ChaCha8Rng, d: usize) -> CircleField {
        let mut modes = Vec::new();
        for comp in 0..d {
            for k in -6i64..=6 {
                let s = 0.5f64.powi(k.abs() as i32);
                modes.push((k, comp, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * s));
            }
        }
        CircleField::from_modes(N, d, &modes).unwrap()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<C64> {
        (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn random_jet_constraints_and_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for d in [1usize, 2] {
            let sym = random_symbols(&mut rng, d);
            assert!(sym.admissibility_margin() > 0.0);
            let basis = RhBasis::new(sym.clone()).unwrap();
            for zeta0 in [c(1.0, 0.0), c(0.4, 0.0), C64::from_polar(1.0, 2.0)] {
                let f = random_data(&mut rng, d);
                let z0 = rand_vec(&mut rng, d);
                let v0 = rand_vec(&mut rng, d);
                let g = basis.solve(&f, &JetConstraint::OneJet { zeta0, z0: z0.clone(), v0: v0.clone() }).unwrap();
                assert!(cvec::norm(&cvec::sub(&g.eval_series(zeta0), &z0)) < 1e-9);
                assert!(cvec::norm(&cvec::sub(&g.eval_derivative(zeta0, 1), &v0)) < 1e-9);
                let res = jet_residual(&sym, &g, &f).unwrap();
                assert!(res < 1e-8, "residual {res}");
                // Permuted assembly gives the same solution.
                let mut order: Vec<usize> = (0..4 * d).collect();
                order.reverse();
                let g2 = basis
                    .solve_ordered(&f, &JetConstraint::OneJet { zeta0, z0: z0.clone(), v0: v0.clone() }, &order)
                    .unwrap();
                assert!(g.sub(&g2).unwrap().sup_norm() < 1e-10);
            }
            let f = random_data(&mut rng, d);
            let z0 = rand_vec(&mut rng, d);
            let w0 = rand_vec(&mut rng, d);
            let c2 = JetConstraint::TwoPoint { zeta0: c(1.0, 0.0), xi0: C64::from_polar(1.0, 2.5), z0: z0.clone(), w0: w0.clone() };
            let g = basis.solve(&f, &c2).unwrap();
            assert!(cvec::norm(&cvec::sub(&g.eval_series(c(1.0, 0.0)), &z0)) < 1e-9);
            assert!(cvec::norm(&cvec::sub(&g.eval_series(C64::from_polar(1.0, 2.5)), &w0)) < 1e-9);
            assert!(jet_residual(&sym, &g, &f).unwrap() < 1e-8);
        }
    }

    #[test]
    fn base_solution_independent_of_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sym = random_symbols(&mut rng, 2);
        let f = random_data(&mut rng, 2);
        let g0 = rand_vec(&mut rng, 2);
        let a = RhSolver::with_factorization(sym.clone(), Factorization::ColPivQr).unwrap().solve_base(&f, &g0).unwrap();
        let b = RhSolver::with_factorization(sym.clone(), Factorization::FullPivLu).unwrap().solve_base(&f, &g0).unwrap();
        assert!(a.sub(&b).unwrap().sup_norm() < 1e-10);
        let r = base_residual(&sym, &a, &f).unwrap();
        assert!(r < 1e-10, "res {r}");
    }

    #[test]
    fn linear_in_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let sym = random_symbols(&mut rng, 2);
        let basis = RhBasis::new(sym).unwrap();
        let f1 = random_data(&mut rng, 2);
        let f2 = random_data(&mut rng, 2);
        let (z1, v1, z2, v2) = (rand_vec(&mut rng, 2), rand_vec(&mut rng, 2), rand_vec(&mut rng, 2), rand_vec(&mut rng, 2));
        let jet = |z: Vec<C64>, v: Vec<C64>| JetConstraint::OneJet { zeta0: c(1.0, 0.0), z0: z, v0: v };
        let g1 = basis.solve(&f1, &jet(z1.clone(), v1.clone())).unwrap();
        let g2 = basis.solve(&f2, &jet(z2.clone(), v2.clone())).unwrap();
        let t = 0.7;
        let f12 = f1.add(&f2.scale(c(t, 0.0))).unwrap();
        let g12 = basis
            .solve(&f12, &jet(cvec::axpy(&z1, c(t, 0.0), &z2), cvec::axpy(&v1, c(t, 0.0), &v2)))
            .unwrap();
        let comb = g1.add(&g2.scale(c(t, 0.0))).unwrap();
        assert!(g12.sub(&comb).unwrap().sup_norm() < 1e-10);
    }
}
