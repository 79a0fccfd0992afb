//! Canonical coordinates along a geodesic disc: the map `G`, the matrix
//! factorization `HᵗRH̄ = I`, the biholomorphism `F(z₁, z′) = G(z₁, H(z₁)z′)`
//! and the defining function `ρ = λ·r` of `D = F⁻¹(Ω)`.

use serde::{Deserialize, Serialize};

use crate::circle::{CircleField, CircleFieldJson};
use crate::cvec::{self, CMat};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geodesic::{dual_rotation, GeodesicDisc};
use crate::matfield;
use crate::C64;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

pub const TOL_FACT: f64 = 1e-9;
/// Validity collar of the normal form: `|z′| ≤ 0.1`, `0.8 ≤ |z₁| ≤ 1.05`.
pub const COLLAR_FIBER: f64 = 0.1;
pub const COLLAR_INNER: f64 = 0.8;
pub const COLLAR_OUTER: f64 = 1.05;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `G(w₁, w′) = φ(w₁) + J(w₁)w′`, linear in `w′`, with the single corona
/// function `ψ₁ = 1/χ₁` of the rotated dual `χ = Vᵗφ*` (and `ψ₂ = 0`).
#[derive(Clone, Debug)]
pub struct GMap {
    pub phi: CircleField,
    pub dual: CircleField,
    pub rotation: CMat,
    pub chi: CircleField,
    pub psi1: CircleField,
}

/// Builds `G` from a solved geodesic.
pub fn build_g(g: &GeodesicDisc) -> Result<GMap> {
    let rot = dual_rotation(&g.phi, &g.dual)?;
    Ok(GMap { phi: g.phi.clone(), dual: g.dual.clone(), rotation: rot.v, chi: rot.chi, psi1: rot.inv1 })
}

impl GMap {
    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    /// `∂G/∂w′` at `w₁`, an `n × (n−1)` matrix.
    pub fn jacobian_fiber(&self, w1: C64) -> CMat {
        let x = self.chi.eval_series(w1);
        let r = self.psi1.eval_series(w1)[0];
        self.fiber_columns(&x, r)
    }

    fn fiber_columns(&self, x: &[C64], r: C64) -> CMat {
        let n = self.dim();
        let mut b = CMat::zeros(n, n - 1);
        b[(0, 0)] = -x[1];
        b[(1, 0)] = x[0];
        for k in 2..n {
            b[(0, k - 1)] = -x[k] * r;
            b[(k, k - 1)] = ONE;
        }
        &self.rotation * b
    }

    /// `J` on the nodes, row-major `n × (n−1)`.
    pub fn jacobian_fiber_nodes(&self) -> Result<CircleField> {
        let nn = self.phi.num_nodes();
        let mats: Vec<CMat> = (0..nn)
            .map(|j| self.fiber_columns(&self.chi.node_vector(j), self.psi1.value(j, 0)))
            .collect();
        matfield::from_nodes(&mats)
    }

    pub fn eval(&self, w1: C64, wp: &[C64]) -> Vec<C64> {
        let j = self.jacobian_fiber(w1);
        cvec::add(&self.phi.eval_series(w1), &cvec::mat_vec(&j, wp))
    }

    /// Full Jacobian `[φ′ | J]` at `w₁` (independent of `w′` up to `w′`-linear terms in column one).
    pub fn jacobian_at_axis(&self, w1: C64) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        let d = self.phi.eval_derivative(w1, 1);
        let j = self.jacobian_fiber(w1);
        for i in 0..n {
            m[(i, 0)] = d[i];
            for k in 1..n {
                m[(i, k)] = j[(i, k - 1)];
            }
        }
        m
    }
}

/// `r(w) = |φ*(w₁)|·ρ_Ω(G(w))`.
pub fn r_value(dom: &Domain, gmap: &GMap, w1: C64, wp: &[C64]) -> f64 {
    cvec::norm(&gmap.dual.eval_series(w1)) * dom.rho(&gmap.eval(w1, wp))
}

/// `∂²r/∂w₁∂w̄₁(w₁, 0)` and `∂²r/∂w̄₁∂w_l(w₁, 0)`, `l = 2..n`.
fn r_mixed_on_axis(dom: &Domain, gmap: &GMap, w1: C64) -> (f64, Vec<C64>) {
    let ds = gmap.dual.eval_series(w1);
    let dd = gmap.dual.eval_derivative(w1, 1);
    let a = cvec::norm(&ds);
    let s = cvec::inner(&dd, &ds);
    let a1 = s / (2.0 * a);
    let a11 = cvec::norm(&dd).powi(2) / (2.0 * a) - s.norm_sqr() / (4.0 * a * a * a);
    let x = gmap.phi.eval_series(w1);
    let dphi = gmap.phi.eval_derivative(w1, 1);
    let d = dom.derivs(&x);
    let g1 = cvec::dotu(&d.grad, &dphi);
    let g11 = cvec::dotu(&dphi, &cvec::mat_vec(&d.hzzbar, &cvec::conj(&dphi))).re;
    let r11 = a11 * d.rho + 2.0 * (a1 * g1.conj()).re + a * g11;
    let j = gmap.jacobian_fiber(w1);
    let hb = cvec::mat_vec(&d.hzzbar, &cvec::conj(&dphi));
    let r1l = (0..gmap.dim() - 1)
        .map(|l| {
            let col: Vec<C64> = j.column(l).iter().cloned().collect();
            a1.conj() * cvec::dotu(&d.grad, &col) + re(a) * cvec::dotu(&col, &hb)
        })
        .collect();
    (r11, r1l)
}

/// Completed chart: `G`, `R`, the gauge-fixed factor `H` and `S₀`.
#[derive(Clone, Debug)]
pub struct CanonicalChart {
    pub domain: Domain,
    pub g: GMap,
    /// `R = (∂²r/∂w_i∂w̄_j)(·, 0)` on the nodes, `(n−1) × (n−1)` row-major.
    pub r_matrix: CircleField,
    pub factor_h: CircleField,
    /// `S₀ = Hᵗ r_{w′w′} H` on the nodes.
    pub s0: CircleField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalChartJson {
    pub phi: CircleFieldJson,
    pub dual: CircleFieldJson,
    pub rotation: Vec<Vec<[f64; 2]>>,
    pub psi1: CircleFieldJson,
    pub factor_h: CircleFieldJson,
    pub s0: CircleFieldJson,
}

impl CanonicalChart {
    pub fn new(dom: &Domain, geo: &GeodesicDisc) -> Result<Self> {
        let g = build_g(geo)?;
        let n = g.dim();
        let m = n - 1;
        let nn = g.phi.num_nodes();
        let jf = g.jacobian_fiber_nodes()?;
        let mut rmats = Vec::with_capacity(nn);
        let mut qmats = Vec::with_capacity(nn);
        for j in 0..nn {
            let x = g.phi.node_vector(j);
            let d = dom.derivs(&x);
            let mu = cvec::norm(&g.dual.node_vector(j));
            let jm = matfield::at_node(&jf, j, n, m);
            rmats.push((jm.transpose() * &d.hzzbar * jm.map(|z| z.conj())) * re(mu));
            qmats.push((jm.transpose() * &d.hzz * &jm) * re(mu));
        }
        let r_matrix = matfield::from_nodes(&rmats)?;
        let factor_h = spectral_factorize(&r_matrix, m)?;
        let s0 = s0_from(&factor_h, &qmats, m)?;
        Ok(Self { domain: dom.clone(), g, r_matrix, factor_h, s0 })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn h_at(&self, z1: C64) -> CMat {
        matfield::eval(&self.factor_h, z1, 0, self.dim() - 1, self.dim() - 1)
    }

    /// `F(z₁, z′) = G(z₁, H(z₁)z′)`.
    pub fn f_map(&self, z1: C64, zp: &[C64]) -> Vec<C64> {
        self.g.eval(z1, &cvec::mat_vec(&self.h_at(z1), zp))
    }

    /// `A₀ = F′(·, 0) = [φ′ | JH]` at `z₁`.
    pub fn a0_at(&self, z1: C64) -> CMat {
        let n = self.dim();
        let mut a = self.g.jacobian_at_axis(z1);
        let jh = self.g.jacobian_fiber(z1) * self.h_at(z1);
        for i in 0..n {
            for k in 1..n {
                a[(i, k)] = jh[(i, k - 1)];
            }
        }
        a
    }

    /// Intermediate defining function `r(z₁, H(z₁)z′)`.
    pub fn r_fn(&self, z1: C64, zp: &[C64]) -> f64 {
        r_value(&self.domain, &self.g, z1, &cvec::mat_vec(&self.h_at(z1), zp))
    }

    /// Scalar factor `λ(z₁, z′)`.
    pub fn lambda_fn(&self, z1: C64, zp: &[C64]) -> f64 {
        let (r11, r1l) = r_mixed_on_axis(&self.domain, &self.g, z1);
        let w = cvec::mat_vec(&self.h_at(z1), zp);
        let t: C64 = w.iter().zip(&r1l).map(|(a, b)| a * b).sum();
        1.0 - 0.5 * (1.0 - z1.norm_sqr()) * (1.0 - r11) - 2.0 * (z1.conj() * t).re
    }

    fn check_collar(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::Invalid("point dimension does not match chart".into()));
        }
        let a = z[0].norm();
        let b = cvec::norm(&z[1..]);
        if !(COLLAR_INNER..=COLLAR_OUTER).contains(&a) || b > COLLAR_FIBER {
            return Err(Error::OutsideCollar(format!("|z1| = {a:.3}, |z'| = {b:.3}")));
        }
        Ok(())
    }

    /// `ρ(z) = λ(z)·r(z₁, H(z₁)z′)` on the collar.
    pub fn canonical_rho(&self, z: &[C64]) -> Result<f64> {
        self.check_collar(z)?;
        Ok(self.rho_unchecked(z))
    }

    fn rho_unchecked(&self, z: &[C64]) -> f64 {
        self.lambda_fn(z[0], &z[1..]) * self.r_fn(z[0], &z[1..])
    }

    pub fn to_json(&self) -> CanonicalChartJson {
        let n = self.dim();
        let rotation = (0..n).map(|i| (0..n).map(|k| [self.g.rotation[(i, k)].re, self.g.rotation[(i, k)].im]).collect()).collect();
        CanonicalChartJson {
            phi: self.g.phi.to_json(),
            dual: self.g.dual.to_json(),
            rotation,
            psi1: self.g.psi1.to_json(),
            factor_h: self.factor_h.to_json(),
            s0: self.s0.to_json(),
        }
    }
}

fn s0_from(h: &CircleField, q: &[CMat], m: usize) -> Result<CircleField> {
    let mats: Vec<CMat> = q
        .iter()
        .enumerate()
        .map(|(j, qj)| {
            let hj = matfield::at_node(h, j, m, m);
            hj.transpose() * qj * hj
        })
        .collect();
    matfield::from_nodes(&mats)
}

/// Holomorphic `q` with `|q|² = e^{2u}` on the circle (outer function of `u`).
fn outer_from_log(u: &CircleField) -> Result<CircleField> {
    let f = u.multiply_coeffs(|k| match k {
        0 => ONE,
        k if k > 0 => re(2.0),
        _ => re(0.0),
    });
    Ok(f.map_nodes(1, |_, x| vec![x[0].exp()])?.holomorphic_part())
}

fn mat_nodes(f: &CircleField, m: usize) -> Vec<CMat> {
    matfield::all_nodes(f, m, m)
}

/// `Ψ⁻¹ R Ψ^{−*}` on the nodes and its distance from the identity.
fn whitened(r: &[CMat], psi: &[CMat]) -> Result<(Vec<CMat>, f64)> {
    let m = r[0].nrows();
    let id = CMat::identity(m, m);
    let mut err = 0.0f64;
    let mut out = Vec::with_capacity(r.len());
    for (rj, pj) in r.iter().zip(psi) {
        let inv = pj.clone().try_inverse().ok_or(Error::BasisDegenerate(0.0))?;
        let e = &inv * rj * inv.adjoint();
        err = err.max(cvec::max_abs(&(&e - &id)));
        out.push(e);
    }
    Ok((out, err))
}

/// Holomorphic `H` with `HᵗRH̄ = I` on the circle, gauge-fixed so that `H(0)`
/// is lower triangular with positive diagonal.
///
/// Writes `R = ΨΨ*` with `Ψ` outer and takes `H = Ψ^{−t}`. The scalar outer
/// factor of `det R` starts a Newton iteration `Ψ ← Ψ[Ψ⁻¹RΨ^{−*} + I]₊`,
/// where `[·]₊` keeps positive frequencies and half the mean.
pub fn spectral_factorize(r: &CircleField, m: usize) -> Result<CircleField> {
    let nn = r.num_nodes();
    if r.dim() != m * m {
        return Err(Error::Invalid(format!("expected {m}x{m} matrix field")));
    }
    let rn = mat_nodes(r, m);
    let mut logdet = Vec::with_capacity(nn);
    for (j, rj) in rn.iter().enumerate() {
        let herm = rj.clone().adjoint();
        if cvec::max_abs(&(rj - &herm)) > 1e-10 * (1.0 + cvec::max_abs(rj)) {
            return Err(Error::NotPositiveDefinite(j));
        }
        let sym = (rj + herm) * re(0.5);
        let ev = sym.symmetric_eigen().eigenvalues;
        if ev.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::NotPositiveDefinite(j));
        }
        let ld: f64 = ev.iter().map(|x| x.ln()).sum();
        logdet.push(re(ld / (2.0 * m as f64)));
    }
    let q = outer_from_log(&CircleField::from_values(nn, 1, logdet)?)?;
    let id = CMat::identity(m, m);
    let mut psi: Vec<CMat> = (0..nn).map(|j| &id * q.value(j, 0)).collect();
    let mut last = f64::INFINITY;
    let mut iterations = 0;
    loop {
        let (e, err) = whitened(&rn, &psi)?;
        log::trace!("factorization iteration {iterations}: {err:.3e}");
        if err < 1e-14 || iterations >= 60 || (err > 0.5 * last && err < 1e-11) {
            if err > TOL_FACT {
                return Err(Error::NoConvergence { iterations, residual: err });
            }
            break;
        }
        last = err;
        let ef = matfield::from_nodes(&e)?;
        let plus = ef.multiply_coeffs(|k| match k {
            0 => re(0.5),
            k if k > 0 => ONE,
            _ => re(0.0),
        });
        let pn = mat_nodes(&plus, m);
        let next: Vec<CMat> = psi.iter().zip(&pn).map(|(a, b)| a * (b + &id * re(0.5))).collect();
        psi = mat_nodes(&matfield::from_nodes(&next)?.holomorphic_part(), m);
        iterations += 1;
    }
    let mut hn = Vec::with_capacity(nn);
    for pj in &psi {
        hn.push(pj.clone().try_inverse().ok_or(Error::BasisDegenerate(0.0))?.transpose());
    }
    let h = matfield::from_nodes(&hn)?.holomorphic_part();
    gauge_fix(&h, m)
}

/// Right-multiplies by the constant unitary that makes `H(0)` lower
/// triangular with positive diagonal.
pub fn gauge_fix(h: &CircleField, m: usize) -> Result<CircleField> {
    let h0 = CMat::from_fn(m, m, |a, b| h.coeff(0, a * m + b));
    let qr = h0.adjoint().qr();
    let (q1, r1) = qr.unpack();
    let mut u = q1;
    for i in 0..m {
        let l = r1[(i, i)].conj();
        if l.norm() == 0.0 {
            return Err(Error::BasisDegenerate(0.0));
        }
        let ph = l.conj() / l.norm();
        for a in 0..m {
            u[(a, i)] *= ph;
        }
    }
    let out: Vec<CMat> = mat_nodes(h, m).iter().map(|hj| hj * &u).collect();
    matfield::from_nodes(&out)
}

/// `sup |HᵗRH̄ − I|` over the nodes.
pub fn factorization_residual(h: &CircleField, r: &CircleField, m: usize) -> f64 {
    let id = CMat::identity(m, m);
    let hn = mat_nodes(h, m);
    let rn = mat_nodes(r, m);
    hn.iter()
        .zip(&rn)
        .map(|(hj, rj)| cvec::max_abs(&(hj.transpose() * rj * hj.map(|z| z.conj()) - &id)))
        .fold(0.0, f64::max)
}

/// Wirtinger derivatives of a real function at a point: `f_z`, `f_{zz̄}`, `f_{zz}`.
#[derive(Clone, Debug)]
pub struct Wirtinger {
    pub grad: Vec<C64>,
    pub hzzbar: CMat,
    pub hzz: CMat,
}

/// Central differences with one Richardson step in each real coordinate.
pub fn wirtinger_fd(f: impl Fn(&[C64]) -> f64, z: &[C64], h: f64) -> Wirtinger {
    let n = z.len();
    let dirs: Vec<Vec<C64>> = (0..2 * n)
        .map(|a| {
            let mut d = vec![C64::new(0.0, 0.0); n];
            d[a % n] = if a < n { ONE } else { I };
            d
        })
        .collect();
    let at = |a: Option<(usize, f64)>, b: Option<(usize, f64)>| {
        let mut x = z.to_vec();
        for (k, s) in [a, b].into_iter().flatten() {
            x = cvec::axpy(&x, re(s), &dirs[k]);
        }
        f(&x)
    };
    let f0 = f(z);
    let first = |a: usize, h: f64| (at(Some((a, h)), None) - at(Some((a, -h)), None)) / (2.0 * h);
    let second = |a: usize, b: usize, h: f64| {
        if a == b {
            (at(Some((a, h)), None) - 2.0 * f0 + at(Some((a, -h)), None)) / (h * h)
        } else {
            (at(Some((a, h)), Some((b, h))) - at(Some((a, h)), Some((b, -h))) - at(Some((a, -h)), Some((b, h)))
                + at(Some((a, -h)), Some((b, -h))))
                / (4.0 * h * h)
        }
    };
    let rich = |d1: f64, d2: f64| (4.0 * d2 - d1) / 3.0;
    let g: Vec<f64> = (0..2 * n).map(|a| rich(first(a, h), first(a, h / 2.0))).collect();
    let mut hr = vec![vec![0.0; 2 * n]; 2 * n];
    for a in 0..2 * n {
        for b in a..2 * n {
            let v = rich(second(a, b, h), second(a, b, h / 2.0));
            hr[a][b] = v;
            hr[b][a] = v;
        }
    }
    let grad = (0..n).map(|i| C64::new(g[i], -g[n + i]) * 0.5).collect();
    let hzzbar = CMat::from_fn(n, n, |i, j| {
        C64::new(hr[i][j] + hr[n + i][n + j], hr[i][n + j] - hr[n + i][j]) * 0.25
    });
    let hzz = CMat::from_fn(n, n, |i, j| {
        C64::new(hr[i][j] - hr[n + i][n + j], -(hr[i][n + j] + hr[n + i][j])) * 0.25
    });
    Wirtinger { grad, hzzbar, hzz }
}

/// Maximum violations of the normal-form identities on `∂Δ × {0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StraighteningReport {
    /// `|ρ(z₁, 0)|`.
    pub on_axis: f64,
    /// `|ρ_{z₁} − z̄₁|` and `|ρ_{z_j}|`: `ζA₀ᵗρ_z∘φ = e₁`.
    pub gradient: f64,
    /// `|ρ_{zz̄} − I|`: `A₀ᵗρ_{zz̄}∘φ Ā₀ = I`.
    pub levi: f64,
    /// `|ρ_{z₁z₁}|, |ρ_{z₁z_j}|`: first row and column of `ρ_zz` vanish.
    pub first_row: f64,
    /// `|ρ_{z′z′} − S₀|` and `|A₀ᵗρ_zz A₀ − S₀|` on the `z′` block.
    pub s0_block: f64,
    /// `max ‖S₀‖_op`, must stay below one.
    pub s0_norm: f64,
    /// `|HᵗRH̄ − I|`.
    pub factorization: f64,
    /// `max |ρ − (−1 + |z|² + Re z′ᵗS₀z′)| / t²` at distance `t = 10⁻³`.
    pub expansion: f64,
}

impl StraighteningReport {
    /// Largest identity violation (excludes `s0_norm` and `expansion`, which
    /// have their own thresholds).
    pub fn max_violation(&self) -> f64 {
        [self.on_axis, self.gradient, self.levi, self.first_row, self.s0_block, self.factorization]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Checks the normal-form identities at every node (derivatives of `ρ` by
/// Richardson-extrapolated central differences).
pub fn verify_straightening(chart: &CanonicalChart) -> StraighteningReport {
    let n = chart.dim();
    let m = n - 1;
    let nn = chart.g.phi.num_nodes();
    let nodes = crate::circle::nodes(nn);
    let mut rep = StraighteningReport {
        on_axis: 0.0,
        gradient: 0.0,
        levi: 0.0,
        first_row: 0.0,
        s0_block: 0.0,
        s0_norm: 0.0,
        factorization: factorization_residual(&chart.factor_h, &chart.r_matrix, m),
        expansion: 0.0,
    };
    let rho = |z: &[C64]| chart.rho_unchecked(z);
    let t = 1e-3;
    for (j, &z1) in nodes.iter().enumerate() {
        let mut z = vec![C64::new(0.0, 0.0); n];
        z[0] = z1;
        rep.on_axis = rep.on_axis.max(rho(&z).abs());
        let w = wirtinger_fd(rho, &z, 1e-3);
        rep.gradient = rep.gradient.max((w.grad[0] - z1.conj()).norm());
        for k in 1..n {
            rep.gradient = rep.gradient.max(w.grad[k].norm());
        }
        let id = CMat::identity(n, n);
        rep.levi = rep.levi.max(cvec::max_abs(&(&w.hzzbar - &id)));
        for k in 0..n {
            rep.first_row = rep.first_row.max(w.hzz[(0, k)].norm()).max(w.hzz[(k, 0)].norm());
        }
        let s0 = matfield::at_node(&chart.s0, j, m, m);
        let fd_block = w.hzz.view((1, 1), (m, m)).into_owned();
        rep.s0_block = rep.s0_block.max(cvec::max_abs(&(&fd_block - &s0)));
        let a0 = chart.a0_at(z1);
        let d = chart.domain.derivs(&chart.g.phi.node_vector(j));
        // The pushed-forward defining function is `|φ*|·ρ_Ω` to first order on the axis.
        let mu = cvec::norm(&chart.g.dual.node_vector(j));
        let pulled = (a0.transpose() * &d.hzz * &a0) * re(mu);
        let block = pulled.view((1, 1), (m, m)).into_owned();
        rep.s0_block = rep.s0_block.max(cvec::max_abs(&(&block - &s0)));
        rep.s0_norm = rep.s0_norm.max(cvec::op_norm(&s0));
        // Fixed probe direction per node for the second-order expansion.
        let th = 0.37 + 1.3 * j as f64;
        let mut dz = vec![C64::from_polar(0.6, th)];
        dz.extend((1..n).map(|k| C64::from_polar(0.8 / (m as f64).sqrt(), th * (k as f64 + 0.5))));
        let zt = cvec::axpy(&z, re(t), &dz);
        let zp: Vec<C64> = zt[1..].to_vec();
        let quad = -1.0 + cvec::norm(&zt).powi(2) + cvec::dotu(&zp, &cvec::mat_vec(&s0, &zp)).re;
        rep.expansion = rep.expansion.max((rho(&zt) - quad).abs() / (t * t));
    }
    rep
}
