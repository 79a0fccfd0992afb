//! Preferred complex geodesics by spectral Newton iteration.
//!
//! A geodesic is stored as the boundary trace of `φ: Δ → Ω` (holomorphic
//! `CircleField`). The nonlinear system `Θ(φ, p, v̂) = 0` has five blocks:
//! `ρ∘φ`, `Π([A₀ᵗρ_z∘φ]/(A₀ᵗρ_z∘φ)₁)`, `φ(1) − p`, `φ′(1) − ⟨v,ν_p⟩v` and
//! the imaginary-part normalization at `ζ = 1`. Each Newton step inverts the
//! linearization through the reduction `ψ = A₀⁻¹δφ`: a scalar Hilbert
//! transform solve for `ψ₁` and a linear Riemann–Hilbert problem for `[ψ]`.

use serde::{Deserialize, Serialize};

use crate::circle::{nodes, poincare_distance, CircleField, CircleFieldJson};
use crate::cvec::{self, CMat};
use crate::domain::{unitary_frame_at, BoundaryDatum, Derivs, Domain};
use crate::error::{Error, Result};
use crate::matfield;
use crate::rh::{JetConstraint, RhBasis, RhSymbols};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub const TOL_GEO: f64 = 1e-8;
/// Relative size below which `(A₀ᵗρ_z∘φ)₁` counts as vanishing.
const FIRST_COMPONENT_FLOOR: f64 = 1e-8;
/// Required `min|φ*₁| / ‖φ*‖_∞` after rotation.
const DUAL_FRACTION: f64 = 0.2;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Fall back to continuation from the ball when the direct solve fails.
    pub homotopy: bool,
    /// Extra Newton steps after reaching `tol`, while they still gain.
    pub polish: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { nodes: 256, tol: TOL_GEO, max_iter: 25, homotopy: true, polish: 6 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Sup norms of the five Θ blocks.
    pub theta: [f64; 5],
    /// `‖Π(ζμρ_z∘φ)‖_∞` for the nodal dual.
    pub dual_residual: f64,
    /// `sup |⟨φ′, conj φ*⟩ − 1|`.
    pub duality: f64,
    pub winding: i64,
    pub iterations: usize,
    /// `‖Θ‖_∞` at each Newton iterate.
    pub history: Vec<f64>,
    pub homotopy_steps: usize,
}

impl Diagnostics {
    pub fn theta_max(&self) -> f64 {
        self.theta.iter().cloned().fold(0.0, f64::max)
    }
}

/// The five blocks of `Θ` (or of `L δφ`).
#[derive(Clone, Debug)]
pub struct Theta {
    /// Real-valued scalar field.
    pub rho: CircleField,
    /// `Π`-range field in `ℂ^{n−1}`.
    pub pi: CircleField,
    pub point: Vec<C64>,
    pub velocity: Vec<C64>,
    pub normalization: f64,
}

impl Theta {
    pub fn norms(&self) -> [f64; 5] {
        [self.rho.sup_norm(), self.pi.sup_norm(), cvec::sup(&self.point), cvec::sup(&self.velocity), self.normalization.abs()]
    }

    pub fn max_norm(&self) -> f64 {
        self.norms().iter().cloned().fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Theta {
        Theta {
            rho: self.rho.scale(re(s)),
            pi: self.pi.scale(re(s)),
            point: cvec::scale(&self.point, re(s)),
            velocity: cvec::scale(&self.velocity, re(s)),
            normalization: self.normalization * s,
        }
    }

    pub fn sub(&self, o: &Theta) -> Result<Theta> {
        Ok(Theta {
            rho: self.rho.sub(&o.rho)?,
            pi: self.pi.sub(&o.pi)?,
            point: cvec::sub(&self.point, &o.point),
            velocity: cvec::sub(&self.velocity, &o.velocity),
            normalization: self.normalization - o.normalization,
        })
    }
}

/// Solved preferred geodesic with its dual map and flattening matrix.
#[derive(Clone, Debug)]
pub struct GeodesicDisc {
    pub phi: CircleField,
    pub dual: CircleField,
    pub datum: BoundaryDatum,
    /// Row-major `n × n` holomorphic matrix field.
    pub a0: CircleField,
    pub diagnostics: Diagnostics,
}

impl GeodesicDisc {
    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    /// `φ(ζ)` for `|ζ| ≤ 1`.
    pub fn eval(&self, zeta: C64) -> Vec<C64> {
        self.phi.eval_series(zeta)
    }

    pub fn eval_derivative(&self, zeta: C64, order: usize) -> Vec<C64> {
        self.phi.eval_derivative(zeta, order)
    }

    pub fn to_json(&self) -> GeodesicDiscJson {
        GeodesicDiscJson {
            datum: DatumJson::from(&self.datum),
            phi: self.phi.to_json(),
            dual: self.dual.to_json(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    /// Rebuilds a disc from its JSON form; `A₀` is recomputed.
    pub fn from_json(j: &GeodesicDiscJson) -> Result<Self> {
        let phi = CircleField::from_json(&j.phi)?;
        let dual = CircleField::from_json(&j.dual)?;
        let a0 = flattening_matrix(&phi, &dual)?;
        Ok(Self { phi, dual, datum: j.datum.to_datum(), a0, diagnostics: j.diagnostics.clone() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatumJson {
    pub p: Vec<[f64; 2]>,
    pub v: Vec<[f64; 2]>,
    pub vhat: Vec<[f64; 2]>,
    pub center: Vec<[f64; 2]>,
}

fn pack(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn unpack(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|z| C64::new(z[0], z[1])).collect()
}

impl From<&BoundaryDatum> for DatumJson {
    fn from(d: &BoundaryDatum) -> Self {
        Self { p: pack(&d.p), v: pack(&d.v), vhat: pack(&d.vhat), center: pack(&d.center) }
    }
}

impl DatumJson {
    pub fn to_datum(&self) -> BoundaryDatum {
        BoundaryDatum { p: unpack(&self.p), v: unpack(&self.v), vhat: unpack(&self.vhat), center: unpack(&self.center) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicDiscJson {
    pub datum: DatumJson,
    pub phi: CircleFieldJson,
    pub dual: CircleFieldJson,
    pub diagnostics: Diagnostics,
}

fn datum_c(datum: &BoundaryDatum) -> f64 {
    (1.0 - cvec::norm(&datum.vhat).powi(2)).max(0.0).sqrt()
}

/// Ball disc `q + (ζ − 1)⟨v, q⟩v` on `n` nodes.
fn ball_trace(q: &[C64], v: &[C64], n: usize) -> Result<CircleField> {
    let c = cvec::inner(v, q);
    CircleField::from_fn(n, q.len(), |z| cvec::axpy(q, (z - 1.0) * c, v))
}

/// Closed-form preferred geodesic of the unit ball.
pub fn ball_geodesic(q: &[C64], v: &[C64], n_nodes: usize) -> Result<GeodesicDisc> {
    let ball = Domain::make_ball(q.len())?;
    let datum = BoundaryDatum::from_v(&ball, q, v)?;
    let phi = ball_trace(&datum.p, &datum.v, n_nodes)?;
    let c = datum_c(&datum);
    let qb = cvec::conj(&datum.p);
    let vb = cvec::conj(&datum.v);
    // φ* = (ζ q̄ + (1 − ζ) c v̄) / c².
    let dual = CircleField::from_fn(n_nodes, q.len(), |z| {
        cvec::scale(&cvec::axpy(&cvec::scale(&qb, z), (1.0 - z) * c, &vb), re(1.0 / (c * c)))
    })?;
    finish(&ball, datum, phi, Some(dual), Vec::new(), 0)
}

/// Unitary rotation `V` with `χ = Vᵗφ*` whose first component stays away from
/// zero and does not wind, plus the holomorphic corona function `1/χ₁`.
#[derive(Clone, Debug)]
pub struct DualRotation {
    pub v: CMat,
    pub chi: CircleField,
    pub inv1: CircleField,
    /// `min|χ₁| / sup‖φ*‖`.
    pub margin: f64,
}

pub fn dual_rotation(phi: &CircleField, dual: &CircleField) -> Result<DualRotation> {
    let n = phi.dim();
    let nn = phi.num_nodes();
    if dual.dim() != n || dual.num_nodes() != nn {
        return Err(Error::Invalid("dual and trace shapes differ".into()));
    }
    let dstar: Vec<Vec<C64>> = (0..nn).map(|j| dual.node_vector(j)).collect();
    let sup = dstar.iter().map(|v| cvec::norm(v)).fold(0.0, f64::max);
    if !(sup > 0.0) {
        return Err(Error::DualDegenerate(0.0));
    }
    let score = |u: &[C64]| dstar.iter().map(|d| cvec::dotu(u, d).norm()).fold(f64::INFINITY, f64::min);
    // A rotation is usable only if `uᵗφ*` has no zeros inside the disc.
    let unwound = |u: &[C64]| {
        let vals: Vec<C64> = dstar.iter().map(|d| cvec::dotu(u, d)).collect();
        CircleField::from_values(nn, 1, vals)
            .and_then(|f| f.winding_number())
            .map(|w| w == 0)
            .unwrap_or(false)
    };
    let dphi = phi.circle_derivative(1);
    let mut cands: Vec<Vec<C64>> = (0..n).map(|k| cvec::unit(n, k)).collect();
    let stride = (nn / 16).max(1);
    for j in (0..nn).step_by(stride) {
        for w in [cvec::conj(&dstar[j]), dphi.node_vector(j)] {
            if cvec::norm(&w) > 0.0 {
                cands.push(cvec::normalized(&w));
            }
        }
    }
    let m = cvec::conj(&dual.mean());
    if cvec::norm(&m) > 1e-12 {
        cands.push(cvec::normalized(&m));
    }
    let mut scored: Vec<(Vec<C64>, f64)> = cands
        .into_iter()
        .map(|u| {
            let s = score(&u);
            (u, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    let Some((mut u, mut best)) = scored.into_iter().find(|(u, _)| unwound(u)) else {
        return Err(Error::DualDegenerate(0.0));
    };
    // Deterministic pattern search on the sphere to improve the max-min score.
    let mut step = 0.25;
    while step > 1e-3 {
        let mut improved = false;
        for k in 0..n {
            for dir in [ONE, -ONE, I, -I] {
                let mut t = u.clone();
                t[k] += dir * step;
                let t = cvec::normalized(&t);
                let s = score(&t);
                if s > best * (1.0 + 1e-12) && unwound(&t) {
                    u = t;
                    best = s;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    if best < DUAL_FRACTION * sup {
        return Err(Error::DualDegenerate(best / sup));
    }
    let v = unitary_frame_at(&u, &u)?;
    let vt = v.transpose();
    let chi = dual.map_nodes(n, |_, d| cvec::mat_vec(&vt, d))?;
    if chi.component(0).winding_number()? != 0 {
        return Err(Error::DualDegenerate(best / sup));
    }
    let inv1 = chi.component(0).map_nodes(1, |_, x| vec![ONE / x[0]])?.holomorphic_part();
    Ok(DualRotation { v, chi, inv1, margin: best / sup })
}

/// Flattening matrix `A₀` with `A₀ᵗφ* = e₁`, built after a unitary rotation
/// that keeps the first dual component away from zero.
pub fn flattening_matrix(phi: &CircleField, dual: &CircleField) -> Result<CircleField> {
    let n = phi.dim();
    let nn = phi.num_nodes();
    let DualRotation { v, chi, inv1, .. } = dual_rotation(phi, dual)?;
    let vinv = v.adjoint();
    let dphi = phi.circle_derivative(1);
    let dstar: Vec<Vec<C64>> = (0..nn).map(|j| dual.node_vector(j)).collect();
    let pairing = CircleField::from_values(
        nn,
        1,
        (0..nn).map(|j| cvec::dotu(&dphi.node_vector(j), &dstar[j])).collect(),
    )?
    .holomorphic_part();
    let mats: Vec<CMat> = (0..nn)
        .map(|j| {
            let x = chi.node_vector(j);
            let mut b = CMat::zeros(n, n);
            let col0 = cvec::scale(&cvec::mat_vec(&vinv, &dphi.node_vector(j)), ONE / pairing.value(j, 0));
            for i in 0..n {
                b[(i, 0)] = col0[i];
            }
            b[(0, 1)] = -x[1];
            b[(1, 1)] = x[0];
            let r = inv1.value(j, 0);
            for k in 2..n {
                b[(0, k)] = -x[k] * r;
                b[(k, k)] = ONE;
            }
            &v * b
        })
        .collect();
    Ok(matfield::from_nodes(&mats)?.holomorphic_part())
}

fn node_derivs(dom: &Domain, phi: &CircleField) -> Vec<Derivs> {
    (0..phi.num_nodes()).map(|j| dom.derivs(&phi.node_vector(j))).collect()
}

/// Nodal dual `ζμρ_z∘φ = ρ_z∘φ / ⟨ρ_z∘φ, conj φ′⟩` (not yet projected).
pub fn dual_nodes(dom: &Domain, phi: &CircleField) -> Result<CircleField> {
    let n = phi.dim();
    let dphi = phi.circle_derivative(1);
    let vals: Vec<Vec<C64>> = (0..phi.num_nodes())
        .map(|j| {
            let g = dom.grad(&phi.node_vector(j));
            let s = cvec::dotu(&g, &dphi.node_vector(j));
            cvec::scale(&g, ONE / s)
        })
        .collect();
    let nn = phi.num_nodes();
    let mut values = vec![cvec::zero(); nn * n];
    for (j, v) in vals.into_iter().enumerate() {
        for c in 0..n {
            values[c * nn + j] = v[c];
        }
    }
    CircleField::from_values(nn, n, values)
}

/// Five-block residual of `Θ(φ, p, v̂)` for a frozen `A₀`.
pub fn theta_residual(dom: &Domain, phi: &CircleField, a0: &CircleField, datum: &BoundaryDatum) -> Result<Theta> {
    let n = dom.dim();
    if phi.dim() != n || datum.p.len() != n {
        return Err(Error::Invalid("trace dimension does not match domain".into()));
    }
    let nn = phi.num_nodes();
    let mut rho = Vec::with_capacity(nn);
    let mut quot = vec![cvec::zero(); nn * (n - 1)];
    let mut amax: f64 = 0.0;
    let mut a1min = f64::INFINITY;
    for j in 0..nn {
        let z = phi.node_vector(j);
        rho.push(re(dom.rho(&z)));
        let a = cvec::mat_t_vec(&matfield::at_node(a0, j, n, n), &dom.grad(&z));
        amax = amax.max(cvec::norm(&a));
        a1min = a1min.min(a[0].norm());
        for c in 1..n {
            quot[(c - 1) * nn + j] = a[c] / a[0];
        }
    }
    if a1min < FIRST_COMPONENT_FLOOR * amax {
        return Err(Error::FirstComponentVanishes(a1min));
    }
    let rho = CircleField::from_values(nn, 1, rho)?;
    let pi = CircleField::from_values(nn, n - 1, quot)?.analytic_projection();
    let one = ONE;
    let z1 = phi.eval_series(one);
    let d1 = phi.eval_derivative(one, 1);
    let d2 = phi.eval_derivative(one, 2);
    let point = cvec::sub(&z1, &datum.p);
    let velocity = cvec::sub(&d1, &cvec::scale(&datum.v, re(datum_c(datum))));
    let dv = dom.derivs(&z1);
    let normalization = (cvec::dotu(&dv.grad, &d2) + cvec::dotu(&d1, &cvec::mat_vec(&dv.hzz, &d1))).im;
    Ok(Theta { rho, pi, point, velocity, normalization })
}

/// Linearization of `Θ` at a base trace with `A₀` frozen.
pub struct Linearization<'a> {
    dom: &'a Domain,
    n: usize,
    nn: usize,
    phi: CircleField,
    a0: CircleField,
    derivs: Vec<Derivs>,
    a: Vec<Vec<C64>>,
    mu: Vec<f64>,
    z1: Vec<C64>,
    d1: Vec<C64>,
    d2: Vec<C64>,
    at1: Derivs,
    a0_1: CMat,
    a0_1inv: CMat,
    a0p_1: CMat,
    a0pp_1: CMat,
    basis: RhBasis,
    hcol: CircleField,
    scol: CircleField,
}

impl std::fmt::Debug for Linearization<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Linearization").field("n", &self.n).field("nodes", &self.nn).finish()
    }
}

impl<'a> Linearization<'a> {
    pub fn new(dom: &'a Domain, phi: &CircleField, a0: &CircleField) -> Result<Self> {
        let n = dom.dim();
        let nn = phi.num_nodes();
        let derivs = node_derivs(dom, phi);
        let dphi = phi.circle_derivative(1);
        let zs = nodes(nn);
        let mut a = Vec::with_capacity(nn);
        let mut mu = Vec::with_capacity(nn);
        let mut hs = Vec::with_capacity(nn);
        let mut ss = Vec::with_capacity(nn);
        let mut hcol = vec![cvec::zero(); nn * (n - 1)];
        let mut scol = vec![cvec::zero(); nn * (n - 1)];
        for j in 0..nn {
            let dv = &derivs[j];
            let am = matfield::at_node(a0, j, n, n);
            a.push(cvec::mat_t_vec(&am, &dv.grad));
            let m = (ONE / (zs[j] * cvec::dotu(&dv.grad, &dphi.node_vector(j)))).re;
            if !(m > 0.0) {
                return Err(Error::Invalid(format!("normal pairing not positive at node {j}")));
            }
            mu.push(m);
            let h0 = am.transpose() * &dv.hzzbar * am.map(|x| x.conj()) * re(m);
            let s0 = am.transpose() * &dv.hzz * &am * (zs[j] * zs[j] * m);
            for i in 1..n {
                hcol[(i - 1) * nn + j] = h0[(i, 0)];
                scol[(i - 1) * nn + j] = s0[(i, 0)];
            }
            let h = h0.view((1, 1), (n - 1, n - 1)).into_owned();
            let s = s0.view((1, 1), (n - 1, n - 1)).into_owned();
            hs.push((&h + h.adjoint()) * re(0.5));
            ss.push((&s + s.transpose()) * re(0.5));
        }
        let sym = RhSymbols::from_node_matrices(&hs, &ss)?;
        let basis = RhBasis::new(sym)?;
        let z1 = phi.eval_series(ONE);
        let at1 = dom.derivs(&z1);
        let a0_1 = matfield::eval(a0, ONE, 0, n, n);
        let a0_1inv = a0_1
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Invalid("flattening matrix singular at 1".into()))?;
        Ok(Self {
            dom,
            n,
            nn,
            phi: phi.clone(),
            a0: a0.clone(),
            derivs,
            a,
            mu,
            d1: phi.eval_derivative(ONE, 1),
            d2: phi.eval_derivative(ONE, 2),
            z1,
            at1,
            a0_1,
            a0_1inv,
            a0p_1: matfield::eval(a0, ONE, 1, n, n),
            a0pp_1: matfield::eval(a0, ONE, 2, n, n),
            basis,
            hcol: CircleField::from_values(nn, n - 1, hcol)?,
            scol: CircleField::from_values(nn, n - 1, scol)?,
        })
    }

    pub fn base(&self) -> &CircleField {
        &self.phi
    }

    pub fn a0(&self) -> &CircleField {
        &self.a0
    }

    /// `Im(Dρ_z[w]·φ″(1) + 2φ′ᵗρ_zz v + D_w(φ′ᵗρ_zzφ′))` at `φ(1)`.
    fn k_term(&self, w: &[C64], v: &[C64]) -> f64 {
        let d = &self.at1;
        let drz = cvec::add(&cvec::mat_vec(&d.hzz, w), &cvec::mat_vec(&d.hzzbar, &cvec::conj(w)));
        let k = cvec::dotu(&drz, &self.d2)
            + cvec::dotu(&self.d1, &cvec::mat_vec(&d.hzz, v)) * 2.0
            + self.dom.dir_hess_zz(&self.z1, w, &self.d1);
        k.im
    }

    /// Exact Fréchet derivative `L δφ` of `Θ` at the base.
    pub fn apply(&self, delta: &CircleField) -> Result<Theta> {
        let (n, nn) = (self.n, self.nn);
        let mut rho = Vec::with_capacity(nn);
        let mut quot = vec![cvec::zero(); nn * (n - 1)];
        for j in 0..nn {
            let d = delta.node_vector(j);
            let dv = &self.derivs[j];
            rho.push(re(2.0 * cvec::dotu(&dv.grad, &d).re));
            let drz = cvec::add(&cvec::mat_vec(&dv.hzz, &d), &cvec::mat_vec(&dv.hzzbar, &cvec::conj(&d)));
            let da = cvec::mat_t_vec(&matfield::at_node(&self.a0, j, n, n), &drz);
            let a = &self.a[j];
            for c in 1..n {
                quot[(c - 1) * nn + j] = da[c] / a[0] - a[c] * da[0] / (a[0] * a[0]);
            }
        }
        let w = delta.eval_series(ONE);
        let v = delta.eval_derivative(ONE, 1);
        let dd = delta.eval_derivative(ONE, 2);
        let normalization = cvec::dotu(&self.at1.grad, &dd).im + self.k_term(&w, &v);
        Ok(Theta {
            rho: CircleField::from_values(nn, 1, rho)?,
            pi: CircleField::from_values(nn, n - 1, quot)?.analytic_projection(),
            point: w,
            velocity: v,
            normalization,
        })
    }

    /// Approximate inverse of `L` by the `ψ = A₀⁻¹δφ` reduction; exact at a
    /// solution, first-order accurate in the residual elsewhere.
    pub fn solve(&self, rhs: &Theta) -> Result<CircleField> {
        let (n, nn) = (self.n, self.nn);
        let mu = CircleField::from_values(nn, 1, self.mu.iter().map(|&m| re(m)).collect())?;
        let r = rhs.rho.map_nodes(1, |_, x| vec![re(0.5 * x[0].re)])?;
        let big_r = r.map_nodes(1, |_, x| x.to_vec())?;
        let big_r = CircleField::from_values(nn, 1, (0..nn).map(|j| big_r.value(j, 0) * mu.value(j, 0)).collect())?;
        let f0 = big_r.add(&big_r.hilbert_transform().scale(I))?.holomorphic_part();
        let w = &rhs.point;
        let v = &rhs.velocity;
        let psi_1 = cvec::mat_vec(&self.a0_1inv, w);
        let psi_p1 = cvec::mat_vec(&self.a0_1inv, &cvec::sub(v, &cvec::mat_vec(&self.a0p_1, &psi_1)));
        let extra = cvec::add(&cvec::mat_vec(&self.a0pp_1, &psi_1), &cvec::scale(&cvec::mat_vec(&self.a0p_1, &psi_p1), re(2.0)));
        let im_pp = (ONE / self.a[0][0]).re * (rhs.normalization - self.k_term(w, v) - cvec::dotu(&self.at1.grad, &extra).im);
        let f = f0.eval_series(ONE)[0];
        let fp = f0.eval_derivative(ONE, 1)[0];
        let fpp = f0.eval_derivative(ONE, 2)[0];
        let a_re = 0.5 * (f + fp - psi_p1[0]).re;
        let a_im = 0.5 * (im_pp - (fpp + fp * 2.0).im);
        let a = C64::new(a_re, a_im);
        let c = (psi_1[0] - f).im - 2.0 * a_im;
        // ψ₁ = a + ζ f₀ − ā ζ² + i c ζ.
        let poly = CircleField::from_modes(nn, 1, &[(0, 0, a), (1, 0, I * c), (2, 0, -a.conj())])?;
        let psi1 = poly.add(&f0.shift(1))?;
        let q = psi1.map_nodes(1, |z, x| vec![x[0] / z])?;
        let ftil = CircleField::from_values(
            nn,
            n - 1,
            (0..n - 1)
                .flat_map(|i| {
                    let q = &q;
                    (0..nn).map(move |j| {
                        -rhs.pi.value(j, i) + q.value(j, 0).conj() * self.hcol.value(j, i) + q.value(j, 0) * self.scol.value(j, i)
                    })
                })
                .collect(),
        )?;
        let g = self.basis.solve(
            &ftil,
            &JetConstraint::OneJet { zeta0: ONE, z0: psi_1[1..].to_vec(), v0: psi_p1[1..].to_vec() },
        )?;
        let psi = CircleField::stack(&[&psi1, &g])?;
        Ok(spectral_filter(&matfield::apply(&self.a0, &psi, n, n)?.holomorphic_part()))
    }

    /// `A₀(1)`.
    pub fn a0_at_one(&self) -> &CMat {
        &self.a0_1
    }
}

/// Exponential filter `exp(−36 (|k|/M)^16)`: removes the Galerkin and
/// aliasing residue that collects next to the Nyquist mode, which would
/// otherwise be amplified by the derivatives taken at `ζ = 1`.
pub fn spectral_filter(f: &CircleField) -> CircleField {
    let m = (f.num_nodes() / 2) as f64;
    f.multiply_coeffs(|k| re((-36.0 * (k.abs() as f64 / m).powi(16)).exp()))
}

/// Starting trace `p + (ζ − 1)⟨v, ν_p⟩v`.
pub fn initial_guess(datum: &BoundaryDatum, n_nodes: usize) -> Result<CircleField> {
    let c = datum_c(datum);
    CircleField::from_fn(n_nodes, datum.p.len(), |z| cvec::axpy(&datum.p, (z - 1.0) * c, &datum.v))
}

fn projected_dual(dom: &Domain, phi: &CircleField) -> Result<CircleField> {
    Ok(dual_nodes(dom, phi)?.holomorphic_part())
}

/// Flattening matrix of an arbitrary iterate, built from its projected dual.
pub fn flattening_for(dom: &Domain, phi: &CircleField) -> Result<CircleField> {
    flattening_matrix(phi, &projected_dual(dom, phi)?)
}

/// Update `δφ` with `L δφ = rhs` at the base iterate `phi`.
pub fn linearized_step(dom: &Domain, phi: &CircleField, rhs: &Theta) -> Result<CircleField> {
    let a0 = flattening_for(dom, phi)?;
    Linearization::new(dom, phi, &a0)?.solve(rhs)
}

struct NewtonOutcome {
    phi: CircleField,
    history: Vec<f64>,
    iterations: usize,
}

fn newton(dom: &Domain, datum: &BoundaryDatum, start: CircleField, opts: &SolveOptions) -> Result<NewtonOutcome> {
    let mut phi = start;
    let mut a0 = flattening_for(dom, &phi)?;
    let mut history = Vec::new();
    let mut best: Option<(CircleField, f64)> = None;
    let mut polished = 0usize;
    let mut converged = false;
    let mut it = 0usize;
    loop {
        let th = theta_residual(dom, &phi, &a0, datum)?;
        let r = th.max_norm();
        log::trace!("iterate {it}: blocks {:?}", th.norms());
        if !r.is_finite() {
            return Err(Error::NoConvergence { iterations: it, residual: r });
        }
        if converged {
            let prev = *history.last().unwrap_or(&f64::INFINITY);
            if r > 0.5 * prev {
                // Polishing no longer gains.
                if r < prev {
                    history.push(r);
                    best = Some((phi, r));
                }
                break;
            }
        }
        history.push(r);
        if r <= opts.tol {
            converged = true;
            best = Some((phi.clone(), r));
        }
        if converged && polished >= opts.polish {
            break;
        }
        if it >= opts.max_iter {
            if converged {
                break;
            }
            return Err(Error::NoConvergence { iterations: it, residual: r });
        }
        let lin = Linearization::new(dom, &phi, &a0)?;
        let delta = match lin.solve(&th.scale(-1.0)) {
            Ok(d) => d,
            Err(e) if converged => {
                log::debug!("polish step failed: {e}");
                break;
            }
            Err(e) => return Err(e),
        };
        let mut s = 1.0;
        let mut accepted = None;
        while s >= 1.0 / 64.0 {
            let trial = phi.add(&delta.scale(re(s)))?;
            let rt = theta_residual(dom, &trial, &a0, datum).map(|t| t.max_norm()).unwrap_or(f64::INFINITY);
            if rt < (1.0 - 0.1 * s) * r || (converged && rt < r) {
                // The next iterate must admit a flattening matrix.
                match flattening_for(dom, &trial) {
                    Ok(a) => {
                        accepted = Some((trial, a));
                        break;
                    }
                    Err(e) => log::debug!("trial step {s} rejected: {e}"),
                }
            }
            if converged {
                break;
            }
            s *= 0.5;
        }
        it += 1;
        match accepted {
            Some((t, a)) => {
                if converged {
                    polished += 1;
                }
                phi = t;
                a0 = a;
            }
            None if converged => break,
            None => return Err(Error::NoConvergence { iterations: it, residual: r }),
        }
        log::debug!("newton iteration {it}: residual {r:.3e}, step {s}");
    }
    let (phi, _) = best.expect("loop exits converged");
    Ok(NewtonOutcome { phi, history, iterations: it })
}

fn finish(
    dom: &Domain,
    datum: BoundaryDatum,
    phi: CircleField,
    dual_override: Option<CircleField>,
    history: Vec<f64>,
    iterations: usize,
) -> Result<GeodesicDisc> {
    let raw = dual_nodes(dom, &phi)?;
    let dual_residual = raw.analytic_projection().sup_norm();
    let dual = dual_override.unwrap_or_else(|| raw.holomorphic_part());
    let a0 = flattening_matrix(&phi, &dual)?;
    let theta = theta_residual(dom, &phi, &a0, &datum)?.norms();
    let dphi = phi.circle_derivative(1);
    let duality = (0..phi.num_nodes())
        .map(|j| (cvec::dotu(&dphi.node_vector(j), &dual.node_vector(j)) - 1.0).norm())
        .fold(0.0, f64::max);
    let winding = winding_probe(dom, &phi)?;
    Ok(GeodesicDisc {
        phi,
        dual,
        datum,
        a0,
        diagnostics: Diagnostics { theta, dual_residual, duality, winding, iterations, history, homotopy_steps: 0 },
    })
}

/// Winding number of `⟨z − φ, ν∘φ⟩` for the interior point `z = φ(0)`.
pub fn winding_probe(dom: &Domain, phi: &CircleField) -> Result<i64> {
    let z = phi.eval_series(cvec::zero());
    let u = phi.map_nodes(1, |_, x| {
        let g = dom.grad(x);
        vec![cvec::dotu(&cvec::sub(&z, x), &g)]
    })?;
    u.winding_number()
}

/// Preferred geodesic for `(p, v̂)`, `v̂` in the fiber chart centred at `ν_p`.
pub fn solve_preferred(dom: &Domain, p: &[C64], vhat: &[C64], opts: &SolveOptions) -> Result<GeodesicDisc> {
    let datum = BoundaryDatum::from_vhat(dom, p, vhat)?;
    solve_datum(dom, &datum, opts)
}

/// As [`solve_preferred`] for an explicit datum.
pub fn solve_datum(dom: &Domain, datum: &BoundaryDatum, opts: &SolveOptions) -> Result<GeodesicDisc> {
    let start = initial_guess(datum, opts.nodes)?;
    solve_from(dom, datum, start, opts)
}

/// Newton from a given starting trace, with continuation as fallback.
pub fn solve_from(dom: &Domain, datum: &BoundaryDatum, start: CircleField, opts: &SolveOptions) -> Result<GeodesicDisc> {
    if datum.p.len() != dom.dim() {
        return Err(Error::Invalid("datum dimension does not match domain".into()));
    }
    let direct = newton(dom, datum, start, opts);
    let (out, steps) = match direct {
        Ok(o) => (o, 0),
        Err(e) if opts.homotopy && !dom.is_ball() => {
            log::debug!("direct solve failed ({e}); continuing from the ball");
            continuation(dom, datum, opts)?
        }
        Err(e) => return Err(e),
    };
    let mut g = finish(dom, datum.clone(), out.phi, None, out.history, out.iterations)?;
    g.diagnostics.homotopy_steps = steps;
    if g.diagnostics.dual_residual > 10.0 * opts.tol.max(TOL_GEO) {
        return Err(Error::DualNotHolomorphic(g.diagnostics.dual_residual));
    }
    Ok(g)
}

fn datum_at(dom_t: &Domain, datum: &BoundaryDatum) -> Result<BoundaryDatum> {
    let p_t = dom_t.project_to_boundary(&datum.p)?;
    BoundaryDatum::from_vhat_centered(dom_t, &p_t, &datum.vhat, &datum.center)
}

fn continuation(dom: &Domain, datum: &BoundaryDatum, opts: &SolveOptions) -> Result<(NewtonOutcome, usize)> {
    let d0 = datum_at(&dom.homotopy(0.0), datum)?;
    let mut phi = initial_guess(&d0, opts.nodes)?;
    let mut t = 0.0f64;
    let mut dt = 0.5f64;
    let mut steps = 0usize;
    let inner = SolveOptions { polish: 0, ..opts.clone() };
    loop {
        let t_try = (t + dt).min(1.0);
        let dom_t = dom.homotopy(t_try);
        let d_t = datum_at(&dom_t, datum)?;
        let last = t_try >= 1.0;
        let o = if last { opts } else { &inner };
        match newton(&dom_t, &d_t, phi.clone(), o) {
            Ok(out) => {
                steps += 1;
                if last {
                    return Ok((out, steps));
                }
                phi = out.phi;
                t = t_try;
                dt = (dt * 2.0).min(1.0 - t);
            }
            Err(e) => {
                dt *= 0.5;
                if dt < 1.0 / 256.0 {
                    log::debug!("continuation stalled at t = {t}: {e}");
                    return Err(match e {
                        Error::NoConvergence { iterations, residual } => Error::NoConvergence { iterations, residual },
                        other => other,
                    });
                }
            }
        }
    }
}

/// Residual level below which Newton histories are treated as noise:
/// second derivatives at `ζ = 1` amplify rounding by `N²`.
pub fn noise_floor(n_nodes: usize) -> f64 {
    10.0 * (n_nodes as f64).powi(2) * f64::EPSILON
}

/// Observed quadratic constant `max (r_{k+1} − floor) / r_k²` over the last
/// `last` transitions of a Newton history.
pub fn quadratic_constant(history: &[f64], last: usize, floor: f64) -> f64 {
    let k = history.len();
    if k < 2 {
        return 0.0;
    }
    let start = k.saturating_sub(last + 1);
    history[start..]
        .windows(2)
        .map(|w| ((w[1] - floor).max(0.0)) / (w[0] * w[0]).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    pub poincare: f64,
    pub reanchored: f64,
    pub difference: f64,
    /// Circle point used as the second anchor.
    pub anchor: [f64; 2],
}

fn locate_on_disc(g: &GeodesicDisc, z: &[C64], guess: C64) -> Result<C64> {
    let mut xi = guess;
    for _ in 0..60 {
        let f = cvec::sub(&g.eval(xi), z);
        let d = g.eval_derivative(xi, 1);
        let den = cvec::norm(&d).powi(2);
        let step = cvec::inner(&f, &d) / den;
        let mut next = xi - step;
        if next.norm() >= 1.0 {
            next = next / next.norm() * (1.0 - 1e-12);
        }
        let done = (next - xi).norm() < 1e-15;
        xi = next;
        if done {
            break;
        }
    }
    if cvec::norm(&cvec::sub(&g.eval(xi), z)) > 1e-7 {
        return Err(Error::NoConvergence { iterations: 60, residual: cvec::norm(&cvec::sub(&g.eval(xi), z)) });
    }
    Ok(xi)
}

/// Compares the Poincaré distance of `ζ₁, ζ₂` with the one induced by the
/// preferred geodesic of the same leaf anchored at `φ(e^{2πi/3})`.
pub fn isometry_check(dom: &Domain, g: &GeodesicDisc, z1: C64, z2: C64, opts: &SolveOptions) -> Result<IsometryReport> {
    let d = poincare_distance(z1, z2)?;
    let anchor = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    if (z1 - z2).norm() == 0.0 {
        return Ok(IsometryReport { poincare: 0.0, reanchored: 0.0, difference: 0.0, anchor: [anchor.re, anchor.im] });
    }
    let p2 = dom.project_to_boundary(&g.eval(anchor))?;
    let v2 = cvec::scale(&g.eval_derivative(anchor, 1), anchor);
    let datum = BoundaryDatum::from_v(dom, &p2, &v2)?;
    let h = solve_datum(dom, &datum, opts)?;
    let w1 = g.eval(z1);
    let w2 = g.eval(z2);
    let x1 = locate_on_disc(&h, &w1, z1 * anchor.conj())?;
    let x2 = locate_on_disc(&h, &w2, z2 * anchor.conj())?;
    let d2 = poincare_distance(x1, x2)?;
    Ok(IsometryReport { poincare: d, reanchored: d2, difference: (d - d2).abs(), anchor: [anchor.re, anchor.im] })
}
