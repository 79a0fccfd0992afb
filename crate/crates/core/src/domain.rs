//! Quadric test domains `|z|² + ε Re(zᵗBz) < 1`, derivative oracles of a
//! normalized defining function, unitary frames and the fiber chart of the
//! sphere bundle `S_∂Ω`.

use serde::{Deserialize, Serialize};

use crate::cvec::{self, CMat};
use crate::error::{Error, Result};
use crate::taylor::Jet3;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Domain config file: `{"type":"ball"|"ellipsoid","n":..,"epsilon":..,"B":[[..]]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DomainConfig {
    #[serde(rename = "type")]
    pub kind: String,
    pub n: usize,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(rename = "B", default)]
    pub b: Option<Vec<Vec<f64>>>,
}

impl DomainConfig {
    pub fn ball(n: usize) -> Self {
        Self { kind: "ball".into(), n, epsilon: 0.0, b: None }
    }

    pub fn ellipsoid(n: usize, epsilon: f64, b: Vec<Vec<f64>>) -> Self {
        Self { kind: "ellipsoid".into(), n, epsilon, b: Some(b) }
    }
}

/// Bounded strongly linearly convex quadric with defining function
/// normalized so that `|ρ_z| = 1` on the boundary.
///
/// `B` is stored complex symmetric so that unitary images stay in the family.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    n: usize,
    eps: f64,
    b: CMat,
}

/// Value, `ρ_z`, `ρ_zz` and `ρ_{zz̄}` at one point.
#[derive(Clone, Debug)]
pub struct Derivs {
    pub rho: f64,
    pub grad: Vec<C64>,
    pub hzz: CMat,
    pub hzzbar: CMat,
}

impl Domain {
    pub fn make_ball(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("dimension must be at least 2, got {n}")));
        }
        Ok(Self { n, eps: 0.0, b: CMat::zeros(n, n) })
    }

    pub fn make_ellipsoid(n: usize, b: &[Vec<f64>], eps: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("dimension must be at least 2, got {n}")));
        }
        if b.len() != n || b.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("B must be {n}x{n}")));
        }
        let m = CMat::from_fn(n, n, |i, j| C64::new(b[i][j], 0.0));
        for i in 0..n {
            for j in 0..i {
                if (b[i][j] - b[j][i]).abs() > 1e-12 * (1.0 + b[i][j].abs()) {
                    return Err(Error::Invalid("B must be symmetric".into()));
                }
            }
        }
        Self::with_complex_b(n, m, eps)
    }

    /// Quadric with a complex symmetric `B`.
    pub fn with_complex_b(n: usize, b: CMat, eps: f64) -> Result<Self> {
        if !eps.is_finite() || b.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::Invalid("non-finite domain parameters".into()));
        }
        let size = eps.abs() * cvec::op_norm(&b);
        if size >= 1.0 {
            return Err(Error::NotSlc(format!("epsilon*||B|| = {size:.6} >= 1")));
        }
        Ok(Self { n, eps, b })
    }

    pub fn from_config(cfg: &DomainConfig) -> Result<Self> {
        match cfg.kind.as_str() {
            "ball" => Self::make_ball(cfg.n),
            "ellipsoid" => {
                let b = cfg
                    .b
                    .clone()
                    .unwrap_or_else(|| (0..cfg.n).map(|i| (0..cfg.n).map(|j| f64::from(u8::from(i == j))).collect()).collect());
                Self::make_ellipsoid(cfg.n, &b, cfg.epsilon)
            }
            other => Err(Error::Invalid(format!("unknown domain type '{other}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    pub fn b_matrix(&self) -> &CMat {
        &self.b
    }

    pub fn is_ball(&self) -> bool {
        self.eps == 0.0 || self.b.iter().all(|x| *x == C64::new(0.0, 0.0))
    }

    /// Member of the linear family joining the ball (`t = 0`) to `self` (`t = 1`).
    pub fn homotopy(&self, t: f64) -> Domain {
        Domain { n: self.n, eps: self.eps * t, b: self.b.clone() }
    }

    /// `U(Ω)` for a unitary `U`.
    pub fn unitary_image(&self, u: &CMat) -> Domain {
        let b = u.map(|x| x.conj()) * &self.b * u.adjoint();
        let b = (&b + b.transpose()) * C64::new(0.5, 0.0);
        Domain { n: self.n, eps: self.eps, b }
    }

    fn bz(&self, z: &[C64]) -> Vec<C64> {
        cvec::mat_vec(&self.b, z)
    }

    /// Unnormalized quadric `|z|² + ε Re(zᵗBz) − 1`.
    pub fn rho0(&self, z: &[C64]) -> f64 {
        let q = cvec::dotu(z, &self.bz(z));
        cvec::norm(z).powi(2) + self.eps * q.re - 1.0
    }

    /// `ρ(z + t u)` as a cubic Taylor jet in real `t`.
    pub fn line_jet(&self, z: &[C64], u: &[C64]) -> Jet3 {
        let zz = cvec::norm(z).powi(2);
        let zu = cvec::inner(z, u).re;
        let uu = cvec::norm(u).powi(2);
        if self.is_ball() {
            return Jet3::new(zz - 1.0, 2.0 * zu, uu, 0.0);
        }
        let bz = self.bz(z);
        let bu = self.bz(u);
        let e = self.eps;
        let r0 = Jet3::new(
            zz + e * cvec::dotu(z, &bz).re - 1.0,
            2.0 * zu + 2.0 * e * cvec::dotu(z, &bu).re,
            uu + e * cvec::dotu(u, &bu).re,
            0.0,
        );
        // ρ₀_z along the line: g0 + t g1 with g = z̄ + εBz.
        let g0: Vec<C64> = z.iter().zip(&bz).map(|(a, b)| a.conj() + b * e).collect();
        let g1: Vec<C64> = u.iter().zip(&bu).map(|(a, b)| a.conj() + b * e).collect();
        let gg = Jet3::new(
            cvec::norm(&g0).powi(2),
            2.0 * cvec::inner(&g0, &g1).re,
            cvec::norm(&g1).powi(2),
            0.0,
        );
        if gg.c[0] < 1e-24 {
            return r0;
        }
        let s = (r0 + Jet3::constant(1.0)).sqrt();
        r0 * s * gg.sqrt().recip()
    }

    /// Normalized defining function.
    pub fn rho(&self, z: &[C64]) -> f64 {
        let zero = vec![cvec::zero(); self.n];
        self.line_jet(z, &zero).c[0]
    }

    /// Real directions `e_1, i e_1, …, e_n, i e_n` in that order.
    fn real_dirs(&self) -> Vec<Vec<C64>> {
        let mut out = Vec::with_capacity(2 * self.n);
        for k in 0..self.n {
            out.push(cvec::unit(self.n, k));
            out.push(cvec::scale(&cvec::unit(self.n, k), I));
        }
        out
    }

    /// `ρ_z = (∂ρ/∂z_j)_j`.
    pub fn grad(&self, z: &[C64]) -> Vec<C64> {
        if self.is_ball() {
            return cvec::conj(z);
        }
        (0..self.n)
            .map(|k| {
                let e = cvec::unit(self.n, k);
                let ie = cvec::scale(&e, I);
                let dx = self.line_jet(z, &e).c[1];
                let dy = self.line_jet(z, &ie).c[1];
                C64::new(0.5 * dx, -0.5 * dy)
            })
            .collect()
    }

    /// Value, gradient and both complex Hessians at `z`.
    pub fn derivs(&self, z: &[C64]) -> Derivs {
        let n = self.n;
        if self.is_ball() {
            return Derivs {
                rho: cvec::norm(z).powi(2) - 1.0,
                grad: cvec::conj(z),
                hzz: CMat::zeros(n, n),
                hzzbar: CMat::identity(n, n),
            };
        }
        let dirs = self.real_dirs();
        let m = dirs.len();
        let jets: Vec<Jet3> = dirs.iter().map(|d| self.line_jet(z, d)).collect();
        let q: Vec<f64> = jets.iter().map(|j| j.derivative(2)).collect();
        // Real Hessian by polarization.
        let mut hr = vec![vec![0.0; m]; m];
        for a in 0..m {
            hr[a][a] = q[a];
            for b in 0..a {
                let s = cvec::add(&dirs[a], &dirs[b]);
                let v = 0.5 * (self.line_jet(z, &s).derivative(2) - q[a] - q[b]);
                hr[a][b] = v;
                hr[b][a] = v;
            }
        }
        let grad = (0..n)
            .map(|k| C64::new(0.5 * jets[2 * k].c[1], -0.5 * jets[2 * k + 1].c[1]))
            .collect();
        let x = |j: usize| 2 * j;
        let y = |j: usize| 2 * j + 1;
        let hzz = CMat::from_fn(n, n, |j, k| {
            C64::new(
                0.25 * (hr[x(j)][x(k)] - hr[y(j)][y(k)]),
                -0.25 * (hr[x(j)][y(k)] + hr[y(j)][x(k)]),
            )
        });
        let hzzbar = CMat::from_fn(n, n, |j, k| {
            C64::new(
                0.25 * (hr[x(j)][x(k)] + hr[y(j)][y(k)]),
                0.25 * (hr[x(j)][y(k)] - hr[y(j)][x(k)]),
            )
        });
        Derivs { rho: jets[0].c[0], grad, hzz, hzzbar }
    }

    /// Third directional derivative `D³ρ[a, b, c]` (real directions).
    fn third(&self, z: &[C64], a: &[C64], b: &[C64], c: &[C64]) -> f64 {
        let g = |v: Vec<C64>| self.line_jet(z, &v).derivative(3);
        let ab = cvec::add(a, b);
        let amb = cvec::sub(a, b);
        (g(cvec::add(&ab, c)) - g(cvec::sub(&ab, c)) - g(cvec::add(&amb, c)) + g(cvec::sub(&amb, c))) / 24.0
    }

    /// Real directional derivative along `a` of `bᵗ ρ_zz b`.
    pub fn dir_hess_zz(&self, z: &[C64], a: &[C64], b: &[C64]) -> C64 {
        if self.is_ball() {
            return cvec::zero();
        }
        let ib = cvec::scale(b, I);
        let t_bb = self.third(z, a, b, b);
        let t_ibib = self.third(z, a, &ib, &ib);
        let t_bib = self.third(z, a, b, &ib);
        C64::new(0.25 * (t_bb - t_ibib), -0.5 * t_bib)
    }

    /// Outward unit normal `ρ_z̄ / |ρ_z̄|`.
    pub fn normal(&self, z: &[C64]) -> Vec<C64> {
        cvec::normalized(&cvec::conj(&self.grad(z)))
    }

    /// Boundary point on the ray from the origin through `dir`.
    pub fn boundary_along(&self, dir: &[C64]) -> Result<Vec<C64>> {
        let d = cvec::normalized(dir);
        if !d.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            return Err(Error::Invalid("zero ray direction".into()));
        }
        let q = 1.0 + self.eps * cvec::dotu(&d, &self.bz(&d)).re;
        Ok(cvec::scale(&d, C64::new(1.0 / q.sqrt(), 0.0)))
    }

    /// Radial projection of `z ≠ 0` onto the boundary.
    pub fn project_to_boundary(&self, z: &[C64]) -> Result<Vec<C64>> {
        self.boundary_along(z)
    }

    /// Scale-invariant strong linear convexity margin
    /// `min (1 − |vᵗρ_zz v| / vᵗρ_{zz̄}v̄)` over complex tangent vectors.
    pub fn slc_check(&self, samples: &[Vec<C64>]) -> Result<SlcReport> {
        let mut min_margin = f64::INFINITY;
        for p in samples {
            let d = self.derivs(p);
            let scale = 1.0 + cvec::norm(&d.grad);
            if d.rho.abs() > 1e-8 * scale {
                return Err(Error::SampleOffBoundary(d.rho));
            }
            let nu = cvec::normalized(&cvec::conj(&d.grad));
            let frame = unitary_frame_at(&nu, &nu)?;
            let basis: Vec<Vec<C64>> = (1..self.n).map(|k| frame.column(k).iter().cloned().collect()).collect();
            let mut probes = basis.clone();
            for i in 0..basis.len() {
                for j in 0..i {
                    for ph in [C64::new(1.0, 0.0), I] {
                        probes.push(cvec::axpy(&basis[i], ph, &basis[j]));
                    }
                }
            }
            for v in &probes {
                let herm = cvec::dotu(v, &cvec::mat_vec(&d.hzzbar, &cvec::conj(v))).re;
                let sym = cvec::dotu(v, &cvec::mat_vec(&d.hzz, v)).norm();
                if herm <= 0.0 {
                    min_margin = min_margin.min(-1.0);
                } else {
                    min_margin = min_margin.min(1.0 - sym / herm);
                }
            }
        }
        Ok(SlcReport { min_margin, samples: samples.len() })
    }

    /// Deterministic boundary samples: pseudo-random sphere points projected radially.
    pub fn boundary_samples(&self, count: usize, seed: u64) -> Vec<Vec<C64>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let d: Vec<C64> = (0..self.n)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                self.boundary_along(&d).expect("nonzero direction")
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SlcReport {
    pub min_margin: f64,
    pub samples: usize,
}

/// Unitary `γ` with `γ e_k = ν`, `γ = I` when `ν = e_k`.
fn householder_frame(nu: &[C64], k: usize) -> Result<CMat> {
    let n = nu.len();
    let nk = nu[k];
    if nk.norm() < 1e-8 {
        return Err(Error::ChartSingularity);
    }
    let phase = nk / nk.norm();
    let mut u = nu.to_vec();
    u[k] += phase;
    let uu: f64 = cvec::norm(&u).powi(2);
    let mut p = CMat::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] -= u[i] * u[j].conj() * (2.0 / uu);
        }
    }
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        let d = if j == k { phase } else { C64::new(-1.0, 0.0) };
        for i in 0..n {
            out[(i, j)] = -p[(i, j)] * d;
        }
    }
    Ok(out)
}

/// Phase-fixed Householder frame centred at `e_1`: `γ_ν e_1 = ν`, `γ_{e_1} = I`.
pub fn unitary_frame(nu: &[C64]) -> Result<CMat> {
    let r = cvec::norm(nu);
    if (r - 1.0).abs() > 1e-10 {
        return Err(Error::Invalid(format!("frame vector must be unit, |nu| = {r}")));
    }
    householder_frame(nu, 0)
}

/// Fixed unitary `Γ_c` with `Γ_c e_1 = c`, built on the largest coordinate of `c`.
fn base_frame(c: &[C64]) -> Result<CMat> {
    let n = c.len();
    let k = (0..n)
        .max_by(|&a, &b| c[a].norm().partial_cmp(&c[b].norm()).unwrap().then(b.cmp(&a)))
        .unwrap_or(0);
    let w = householder_frame(c, k)?;
    let mut g = w.clone();
    if k != 0 {
        g.swap_columns(0, k);
    }
    Ok(g)
}

/// Frame of the chart centred at `center`: `γ_ν = Γ_c γ_{Γ_c* ν}`.
/// Singular where `⟨ν, center⟩ = 0`.
pub fn unitary_frame_at(nu: &[C64], center: &[C64]) -> Result<CMat> {
    let g = base_frame(center)?;
    let local = cvec::mat_vec(&g.adjoint(), nu);
    Ok(&g * householder_frame(&local, 0)?)
}

/// Point of the sphere bundle with its fiber coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryDatum {
    pub p: Vec<C64>,
    pub v: Vec<C64>,
    pub vhat: Vec<C64>,
    /// Chart center used for `vhat` (a unit normal).
    pub center: Vec<C64>,
}

impl BoundaryDatum {
    /// Datum from `(p, vhat)` in the chart centred at `ν_p`.
    pub fn from_vhat(dom: &Domain, p: &[C64], vhat: &[C64]) -> Result<Self> {
        let nu = dom.normal(p);
        Self::from_vhat_centered(dom, p, vhat, &nu)
    }

    pub fn from_vhat_centered(dom: &Domain, p: &[C64], vhat: &[C64], center: &[C64]) -> Result<Self> {
        check_on_boundary(dom, p)?;
        let v = fiber_unchart_at(dom, p, vhat, center)?;
        Ok(Self { p: p.to_vec(), v, vhat: vhat.to_vec(), center: center.to_vec() })
    }

    pub fn from_v(dom: &Domain, p: &[C64], v: &[C64]) -> Result<Self> {
        check_on_boundary(dom, p)?;
        let nu = dom.normal(p);
        let vhat = fiber_chart_at(dom, p, v, &nu)?;
        Ok(Self { p: p.to_vec(), v: cvec::normalized(v), vhat, center: nu })
    }

    /// `⟨v, ν_p⟩`, real and positive.
    pub fn c(&self, dom: &Domain) -> f64 {
        cvec::inner(&self.v, &dom.normal(&self.p)).re
    }
}

fn check_on_boundary(dom: &Domain, p: &[C64]) -> Result<()> {
    if p.len() != dom.dim() {
        return Err(Error::Invalid(format!("point has {} components, domain dimension is {}", p.len(), dom.dim())));
    }
    let r = dom.rho(p);
    if r.abs() > 1e-8 {
        return Err(Error::SampleOffBoundary(r));
    }
    Ok(())
}

/// `vhat` of a unit direction `v ∈ L_p`, chart centred at `ν_p`.
pub fn fiber_chart(dom: &Domain, p: &[C64], v: &[C64]) -> Result<Vec<C64>> {
    let nu = dom.normal(p);
    fiber_chart_at(dom, p, v, &nu)
}

/// `v = γ_{ν_p}(√(1 − |vhat|²), vhat)`, chart centred at `ν_p`.
pub fn fiber_unchart(dom: &Domain, p: &[C64], vhat: &[C64]) -> Result<Vec<C64>> {
    let nu = dom.normal(p);
    fiber_unchart_at(dom, p, vhat, &nu)
}

pub fn fiber_chart_at(dom: &Domain, p: &[C64], v: &[C64], center: &[C64]) -> Result<Vec<C64>> {
    let nu = dom.normal(p);
    let c = cvec::inner(v, &nu);
    if c.re <= 0.0 || c.im.abs() > 1e-10 * (1.0 + c.re) {
        return Err(Error::NotInLp(c.re));
    }
    let g = unitary_frame_at(&nu, center)?;
    let local = cvec::mat_vec(&g.adjoint(), &cvec::normalized(v));
    Ok(local[1..].to_vec())
}

pub fn fiber_unchart_at(dom: &Domain, p: &[C64], vhat: &[C64], center: &[C64]) -> Result<Vec<C64>> {
    let n = dom.dim();
    if vhat.len() != n - 1 {
        return Err(Error::Invalid(format!("vhat must have {} components", n - 1)));
    }
    let r2 = cvec::norm(vhat).powi(2);
    if r2 >= 1.0 {
        return Err(Error::NotInLp(0.0));
    }
    let nu = dom.normal(p);
    let g = unitary_frame_at(&nu, center)?;
    let mut local = vec![C64::new((1.0 - r2).sqrt(), 0.0)];
    local.extend_from_slice(vhat);
    Ok(cvec::mat_vec(&g, &local))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<C64> {
        (0..n).map(|_| c(rng.gen_range(-r..r), rng.gen_range(-r..r))).collect()
    }

    fn ellipsoid3() -> Domain {
        Domain::make_ellipsoid(3, &[vec![1.0, 0.3, 0.0], vec![0.3, -0.5, 0.2], vec![0.0, 0.2, 0.8]], 0.4).unwrap()
    }

    #[test]
    fn ball_basics() {
        let b = Domain::make_ball(2).unwrap();
        assert_eq!(b.rho(&[c(0.0, 0.0), c(0.0, 0.0)]), -1.0);
        let nu = b.normal(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((nu[0] - c(1.0, 0.0)).norm() < 1e-15 && nu[1].norm() < 1e-15);
        let d = b.derivs(&[c(0.3, 0.1), c(-0.2, 0.5)]);
        assert!((d.hzzbar.clone() - CMat::identity(2, 2)).norm() < 1e-15);
        assert!(d.hzz.norm() < 1e-15);
    }

    #[test]
    fn zero_epsilon_is_ball() {
        let e = Domain::make_ellipsoid(2, &[vec![1.0, 0.0], vec![0.0, 1.0]], 0.0).unwrap();
        let z = [c(0.3, 0.2), c(0.5, -0.1)];
        assert_eq!(e.rho(&z), Domain::make_ball(2).unwrap().rho(&z));
    }

    #[test]
    fn not_slc_rejected() {
        let r = Domain::make_ellipsoid(2, &[vec![1.0, 0.0], vec![0.0, 1.0]], 1.5);
        assert!(matches!(r, Err(Error::NotSlc(_))));
    }

    #[test]
    fn axis_boundary_point() {
        let e = Domain::make_ellipsoid(2, &[vec![1.0, 0.0], vec![0.0, 1.0]], 0.3).unwrap();
        let p = e.boundary_along(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((p[0].re - 1.0 / 1.3f64.sqrt()).abs() < 1e-15);
        assert!(e.rho(&p).abs() < 1e-15);
    }

    #[test]
    fn slc_margins() {
        let ball = Domain::make_ball(3).unwrap();
        let rep = ball.slc_check(&ball.boundary_samples(10, 1)).unwrap();
        assert!((rep.min_margin - 1.0).abs() < 1e-12);
        let e = Domain::make_ellipsoid(2, &[vec![1.0, 0.0], vec![0.0, 1.0]], 0.3).unwrap();
        let rep = e.slc_check(&e.boundary_samples(20, 2)).unwrap();
        assert!(rep.min_margin >= 0.7 - 1e-9, "margin {}", rep.min_margin);
        assert!(matches!(
            e.slc_check(&[vec![c(0.1, 0.0), c(0.0, 0.0)]]),
            Err(Error::SampleOffBoundary(_))
        ));
    }

    #[test]
    fn normalized_gradient_on_boundary() {
        let e = ellipsoid3();
        for p in e.boundary_samples(20, 5) {
            assert!(e.rho(&p).abs() < 1e-14);
            assert!((cvec::norm(&e.grad(&p)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inside_outside_sign() {
        let e = ellipsoid3();
        for p in e.boundary_samples(20, 6) {
            assert!(e.rho(&cvec::scale(&p, c(0.9, 0.0))) < 0.0);
            assert!(e.rho(&cvec::scale(&p, c(1.1, 0.0))) > 0.0);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let e = ellipsoid3();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-5;
        for _ in 0..10 {
            let z = rand_vec(&mut rng, 3, 0.6);
            let d = e.derivs(&z);
            for k in 0..3 {
                let ek = cvec::unit(3, k);
                let iek = cvec::scale(&ek, I);
                let fd = |dir: &[C64]| {
                    (e.rho(&cvec::axpy(&z, c(h, 0.0), dir)) - e.rho(&cvec::axpy(&z, c(-h, 0.0), dir))) / (2.0 * h)
                };
                let g = c(0.5 * fd(&ek), -0.5 * fd(&iek));
                assert!((g - d.grad[k]).norm() <= 1e-6 * (1.0 + g.norm()));
                // Hessian rows from differences of the gradient.
                for j in 0..3 {
                    let ej = cvec::unit(3, j);
                    let iej = cvec::scale(&ej, I);
                    let gx = |dir: &[C64]| {
                        let gp = e.grad(&cvec::axpy(&z, c(h, 0.0), dir));
                        let gm = e.grad(&cvec::axpy(&z, c(-h, 0.0), dir));
                        (gp[k] - gm[k]) / (2.0 * h)
                    };
                    let dzj = (gx(&ej) - gx(&iej) * I) * 0.5;
                    let dzbj = (gx(&ej) + gx(&iej) * I) * 0.5;
                    assert!((dzj - d.hzz[(k, j)]).norm() <= 1e-6 * (1.0 + dzj.norm()));
                    assert!((dzbj - d.hzzbar[(k, j)]).norm() <= 1e-6 * (1.0 + dzbj.norm()));
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    assert!((d.hzz[(i, j)] - d.hzz[(j, i)]).norm() < 1e-12);
                    assert!((d.hzzbar[(i, j)] - d.hzzbar[(j, i)].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn third_derivative_matches_fd() {
        let e = ellipsoid3();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let z = rand_vec(&mut rng, 3, 0.5);
            let a = rand_vec(&mut rng, 3, 1.0);
            let b = rand_vec(&mut rng, 3, 1.0);
            let h = 1e-5;
            let q = |w: &[C64]| {
                let d = e.derivs(w);
                cvec::dotu(&b, &cvec::mat_vec(&d.hzz, &b))
            };
            let fd = (q(&cvec::axpy(&z, c(h, 0.0), &a)) - q(&cvec::axpy(&z, c(-h, 0.0), &a))) / (2.0 * h);
            let an = e.dir_hess_zz(&z, &a, &b);
            assert!((fd - an).norm() < 1e-5 * (1.0 + an.norm()), "{fd} vs {an}");
        }
    }

    #[test]
    fn frames() {
        let id = unitary_frame(&cvec::unit(3, 0)).unwrap();
        assert!((id - CMat::identity(3, 3)).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let nu = cvec::normalized(&rand_vec(&mut rng, 3, 1.0));
            let g = unitary_frame(&nu).unwrap();
            let col: Vec<C64> = g.column(0).iter().cloned().collect();
            assert!(cvec::norm(&cvec::sub(&col, &nu)) < 1e-14);
            assert!((g.adjoint() * &g - CMat::identity(3, 3)).norm() < 1e-14);
            let center = cvec::normalized(&rand_vec(&mut rng, 3, 1.0));
            let gc = unitary_frame_at(&nu, &center).unwrap();
            let col: Vec<C64> = gc.column(0).iter().cloned().collect();
            assert!(cvec::norm(&cvec::sub(&col, &nu)) < 1e-14);
        }
        assert!(matches!(unitary_frame(&cvec::unit(2, 1)), Err(Error::ChartSingularity)));
    }

    #[test]
    fn fiber_chart_examples() {
        let ball = Domain::make_ball(3).unwrap();
        let p = cvec::unit(3, 0);
        assert!(cvec::norm(&fiber_chart(&ball, &p, &p).unwrap()) < 1e-15);
        let v = fiber_unchart(&ball, &p, &[c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((v[0] - c(0.75f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((v[1] - c(0.5, 0.0)).norm() < 1e-15);
        let e = ellipsoid3();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for p in e.boundary_samples(10, 3) {
            let vh = cvec::scale(&cvec::normalized(&rand_vec(&mut rng, 2, 1.0)), c(0.5, 0.0));
            let v = fiber_unchart(&e, &p, &vh).unwrap();
            let back = fiber_chart(&e, &p, &v).unwrap();
            assert!(cvec::norm(&cvec::sub(&back, &vh)) < 1e-13);
        }
        let bad = cvec::scale(&p, c(-1.0, 0.0));
        assert!(matches!(fiber_chart(&ball, &p, &bad), Err(Error::NotInLp(_))));
    }

    #[test]
    fn unitary_image_transports_rho() {
        let e = ellipsoid3();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = unitary_frame(&cvec::normalized(&rand_vec(&mut rng, 3, 1.0))).unwrap();
        let img = e.unitary_image(&u);
        for _ in 0..5 {
            let z = rand_vec(&mut rng, 3, 0.7);
            let uz = cvec::mat_vec(&u, &z);
            assert!((img.rho(&uz) - e.rho(&z)).abs() < 1e-13);
        }
    }

    #[test]
    fn config_round_trip() {
        let cfg: DomainConfig =
            serde_json::from_str(r#"{"type":"ellipsoid","n":2,"epsilon":0.2,"B":[[1,0],[0,1]]}"#).unwrap();
        let d = Domain::from_config(&cfg).unwrap();
        assert_eq!(d.epsilon(), 0.2);
        let bad: DomainConfig = serde_json::from_str(r#"{"type":"ellipsoid","n":2,"epsilon":1.2,"B":[[1,0],[0,1]]}"#).unwrap();
        assert!(matches!(Domain::from_config(&bad), Err(Error::NotSlc(_))));
    }
}
