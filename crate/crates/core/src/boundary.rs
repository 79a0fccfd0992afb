//! Boundary spherical representation `Ψ_p`, its inverse and the
//! pluricomplex Poisson kernel, by shooting along the leaves `φ_{p,v}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cvec;
use crate::domain::{fiber_chart, BoundaryDatum, Domain};
use crate::error::{Error, Result};
use crate::geodesic::{solve_datum, solve_from, GeodesicDisc, SolveOptions};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Exclusion radius around `p`.
pub const DELTA_EXCL: f64 = 1e-2;
pub const FD_STEP: f64 = 1e-6;
pub const TOL_SHOOT: f64 = 1e-10;
/// Largest `|v̂|` a shooting iterate may take.
const VHAT_MAX: f64 = 0.98;
/// Largest `|ζ|` a shooting iterate may take; boundary leaves sit on `|ζ| = 1`.
const ZETA_MAX: f64 = 1.02;

#[derive(Clone, Debug)]
pub struct ShootOptions {
    pub solve: SolveOptions,
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub delta_excl: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { solve: SolveOptions::default(), tol: TOL_SHOOT, max_iter: 20, fd_step: FD_STEP, delta_excl: DELTA_EXCL }
    }
}

/// Leaf coordinates `(v̂, ζ)` of a point, `z = Φ̃(p, v(v̂), ζ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafCoordinates {
    pub vhat: Vec<C64>,
    pub zeta: C64,
    pub converged: bool,
    /// Condition number of the real `2n × 2n` shooting differential.
    pub jacobian_condition: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Ball-splitting: the `(v, ζ)` with `η_{ν,v}(ζ) = w` on the unit ball.
pub fn ball_splitting(nu: &[C64], w: &[C64]) -> Result<(Vec<C64>, C64)> {
    let d = cvec::sub(w, nu);
    let dn = cvec::norm(&d);
    if dn < 1e-14 {
        return Err(Error::Invalid("ball splitting is undefined at w = ν".into()));
    }
    let s = C64::new(1.0, 0.0) - cvec::inner(nu, w);
    let v = cvec::scale(&d, -(s / s.norm()) / dn);
    let zeta = C64::new(1.0, 0.0) - (1.0 - cvec::inner(w, nu)) * (dn * dn / s.norm_sqr());
    Ok((v, zeta))
}

/// `ν + (ζ − 1)⟨v, ν⟩v`.
pub fn ball_leaf(nu: &[C64], v: &[C64], zeta: C64) -> Vec<C64> {
    cvec::axpy(nu, (zeta - 1.0) * cvec::inner(v, nu), v)
}

/// `P_Ω∘Φ̃(p, v, ζ) = −(1 − |ζ|²) / (c²|1 − ζ|²)` with `c = ⟨v, ν_p⟩`.
pub fn leaf_kernel(c: f64, zeta: C64) -> f64 {
    -(1.0 - zeta.norm_sqr()) / (c * c * (C64::new(1.0, 0.0) - zeta).norm_sqr())
}

/// `Φ̃(p, v(v̂), ζ)` together with the solved leaf.
pub fn leaf_point(dom: &Domain, p: &[C64], vhat: &[C64], zeta: C64, opts: &SolveOptions) -> Result<(Vec<C64>, GeodesicDisc)> {
    let datum = BoundaryDatum::from_vhat(dom, p, vhat)?;
    let g = solve_datum(dom, &datum, opts)?;
    Ok((g.eval(zeta), g))
}

fn leaf(dom: &Domain, p: &[C64], vhat: &[C64], warm: Option<&GeodesicDisc>, opts: &SolveOptions) -> Result<GeodesicDisc> {
    let datum = BoundaryDatum::from_vhat(dom, p, vhat)?;
    match warm {
        Some(g) => solve_from(dom, &datum, g.phi.clone(), opts),
        None => solve_datum(dom, &datum, opts),
    }
}

/// Starting leaf coordinates: ball splitting of `ν_p + (z − p)`.
fn shoot_guess(dom: &Domain, p: &[C64], z: &[C64]) -> Result<(Vec<C64>, C64)> {
    let nu = dom.normal(p);
    let mut w = cvec::add(&nu, &cvec::sub(z, p));
    let r = cvec::norm(&w);
    if r > 0.999 {
        w = cvec::scale(&w, C64::new(0.999 / r, 0.0));
    }
    let (v, zeta) = ball_splitting(&nu, &w)?;
    let mut vhat = fiber_chart(dom, p, &v)?;
    let vn = cvec::norm(&vhat);
    if vn > 0.9 {
        vhat = cvec::scale(&vhat, C64::new(0.9 / vn, 0.0));
    }
    Ok((vhat, zeta))
}

fn to_vec(x: &[C64]) -> DVector<f64> {
    DVector::from_vec(cvec::to_real(x))
}

/// Real shooting differential at `(v̂, ζ)`; `v̂` columns by forward differences.
fn shooting_jacobian(
    dom: &Domain,
    p: &[C64],
    vhat: &[C64],
    zeta: C64,
    g: &GeodesicDisc,
    opts: &ShootOptions,
) -> Result<DMatrix<f64>> {
    let n = dom.dim();
    let m = n - 1;
    let base = g.eval(zeta);
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..m {
        for (part, dir) in [(0usize, C64::new(1.0, 0.0)), (1, I)] {
            let mut vh = vhat.to_vec();
            vh[k] += dir * opts.fd_step;
            let gk = leaf(dom, p, &vh, Some(g), &opts.solve)?;
            let col = cvec::scale(&cvec::sub(&gk.eval(zeta), &base), C64::new(1.0 / opts.fd_step, 0.0));
            jac.set_column(if part == 0 { k } else { m + k }, &to_vec(&col));
        }
    }
    // Real parameters are ordered (Re v̂, Im v̂, Re ζ, Im ζ); outputs (Re z, Im z).
    let d = g.eval_derivative(zeta, 1);
    jac.set_column(2 * m, &to_vec(&d));
    jac.set_column(2 * m + 1, &to_vec(&cvec::scale(&d, I)));
    Ok(jac)
}

fn condition(jac: &DMatrix<f64>) -> f64 {
    let sv = jac.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn check_query(dom: &Domain, p: &[C64], z: &[C64], opts: &ShootOptions) -> Result<()> {
    if z.len() != dom.dim() || p.len() != dom.dim() {
        return Err(Error::Invalid("point dimension does not match domain".into()));
    }
    let dist = cvec::norm(&cvec::sub(z, p));
    if dist < opts.delta_excl {
        return Err(Error::TooCloseToSingularity { dist, delta: opts.delta_excl });
    }
    Ok(())
}

/// Leaf coordinates of `z` by Newton on `Φ̃(p, v(v̂), ζ) − z = 0`.
pub fn shoot(dom: &Domain, p: &[C64], z: &[C64], opts: &ShootOptions) -> Result<LeafCoordinates> {
    shoot_leaf(dom, p, z, opts).map(|(c, _)| c)
}

/// As [`shoot`], also returning the leaf through `z`.
pub fn shoot_leaf(dom: &Domain, p: &[C64], z: &[C64], opts: &ShootOptions) -> Result<(LeafCoordinates, GeodesicDisc)> {
    check_query(dom, p, z, opts)?;
    let n = dom.dim();
    let m = n - 1;
    let (mut vhat, mut zeta) = shoot_guess(dom, p, z)?;
    let mut g = leaf(dom, p, &vhat, None, &opts.solve)?;
    let mut f = cvec::sub(&g.eval(zeta), z);
    let mut res = cvec::norm(&f);
    let mut cond = f64::NAN;
    for it in 0..=opts.max_iter {
        let jac = shooting_jacobian(dom, p, &vhat, zeta, &g, opts)?;
        cond = condition(&jac);
        log::debug!("shoot iteration {it}: residual {res:.3e}, condition {cond:.3e}");
        if res <= opts.tol {
            if zeta.norm() > 1.0 {
                zeta /= zeta.norm();
            }
            let coords = LeafCoordinates { vhat, zeta, converged: true, jacobian_condition: cond, residual: res, iterations: it };
            return Ok((coords, g));
        }
        if it == opts.max_iter {
            break;
        }
        let svd = jac.svd(true, true);
        let dx = svd
            .solve(&(-to_vec(&f)), 1e-14)
            .map_err(|e| Error::Invalid(format!("shooting differential: {e}")))?;
        let dv: Vec<C64> = (0..m).map(|k| C64::new(dx[k], dx[m + k])).collect();
        let dz = C64::new(dx[2 * m], dx[2 * m + 1]);
        let mut s = 1.0;
        let mut accepted = false;
        while s >= 1.0 / 32.0 {
            let mut vt = cvec::axpy(&vhat, C64::new(s, 0.0), &dv);
            let vn = cvec::norm(&vt);
            if vn > VHAT_MAX {
                vt = cvec::scale(&vt, C64::new(VHAT_MAX / vn, 0.0));
            }
            let mut zt = zeta + dz * s;
            if zt.norm() > ZETA_MAX {
                zt *= ZETA_MAX / zt.norm();
            }
            if let Ok(gt) = leaf(dom, p, &vt, Some(&g), &opts.solve) {
                let ft = cvec::sub(&gt.eval(zt), z);
                let rt = cvec::norm(&ft);
                if rt < res * (1.0 - 1e-4 * s) {
                    vhat = vt;
                    zeta = zt;
                    g = gt;
                    f = ft;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    log::debug!("shooting failed with condition {cond:.3e}");
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: res })
}

/// `Ψ_p(z)`; `Ψ_p(p) = ν_p`.
pub fn psi(dom: &Domain, p: &[C64], z: &[C64], opts: &ShootOptions) -> Result<Vec<C64>> {
    let nu = dom.normal(p);
    if cvec::norm(&cvec::sub(z, p)) == 0.0 {
        return Ok(nu);
    }
    let (coords, g) = shoot_leaf(dom, p, z, opts)?;
    Ok(ball_leaf(&nu, &g.datum.v, coords.zeta))
}

/// `Ψ_p⁻¹(w) = φ_{p,v}(ζ)` with `(v, ζ)` from ball splitting at `ν_p`.
pub fn psi_inverse(dom: &Domain, p: &[C64], w: &[C64], opts: &SolveOptions) -> Result<Vec<C64>> {
    if w.len() != dom.dim() {
        return Err(Error::Invalid("point dimension does not match domain".into()));
    }
    let r = cvec::norm(w);
    if r > 1.0 + 1e-12 {
        return Err(Error::OutsideDisc(format!("|w| = {r}")));
    }
    let nu = dom.normal(p);
    if cvec::norm(&cvec::sub(w, &nu)) == 0.0 {
        return Ok(p.to_vec());
    }
    let (v, zeta) = ball_splitting(&nu, w)?;
    let datum = BoundaryDatum::from_v(dom, p, &v)?;
    let g = solve_datum(dom, &datum, opts)?;
    Ok(g.eval(zeta))
}

/// `P_Ω(z, p) = −(1 − |Ψ_p(z)|²) / |1 − ⟨Ψ_p(z), ν_p⟩|²`.
pub fn poisson_kernel(dom: &Domain, p: &[C64], z: &[C64], opts: &ShootOptions) -> Result<f64> {
    let w = excluded_psi(dom, p, z, opts)?;
    Ok(kernel_from_psi(&w, &dom.normal(p)))
}

fn excluded_psi(dom: &Domain, p: &[C64], z: &[C64], opts: &ShootOptions) -> Result<Vec<C64>> {
    check_query(dom, p, z, opts)?;
    psi(dom, p, z, opts)
}

pub fn kernel_from_psi(w: &[C64], nu: &[C64]) -> f64 {
    let den = (C64::new(1.0, 0.0) - cvec::inner(w, nu)).norm_sqr();
    -(1.0 - cvec::norm(w).powi(2)) / den
}

/// Real slice `c + s·a + t·b`, `s, t ∈ [−extent, extent]` on an `n × n` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub center: Vec<[f64; 2]>,
    pub a: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
    #[serde(default = "default_extent")]
    pub extent: f64,
    pub n: usize,
}

fn default_extent() -> f64 {
    1.0
}

fn unpack(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|z| C64::new(z[0], z[1])).collect()
}

impl FieldGrid {
    /// Grid points in row-major order (`t` outer, `s` inner).
    pub fn points(&self) -> Result<Vec<Vec<C64>>> {
        let (c, a, b) = (unpack(&self.center), unpack(&self.a), unpack(&self.b));
        if a.len() != c.len() || b.len() != c.len() {
            return Err(Error::Invalid("grid vectors must share a dimension".into()));
        }
        if self.n < 2 {
            return Err(Error::Invalid("grid needs at least 2 points per side".into()));
        }
        let step = 2.0 * self.extent / (self.n - 1) as f64;
        let mut out = Vec::with_capacity(self.n * self.n);
        for j in 0..self.n {
            let t = -self.extent + step * j as f64;
            for i in 0..self.n {
                let s = -self.extent + step * i as f64;
                out.push(cvec::axpy(&cvec::axpy(&c, C64::new(s, 0.0), &a), C64::new(t, 0.0), &b));
            }
        }
        Ok(out)
    }
}

/// One row of a field export; values are `None` for flagged points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub z: Vec<C64>,
    pub kernel: Option<f64>,
    pub psi_norm: Option<f64>,
    pub converged: bool,
}

/// Kernel and `|Ψ|` at one point; points outside `Ω̄` or inside the
/// exclusion radius are flagged rather than reported as errors.
pub fn field_sample(dom: &Domain, p: &[C64], z: &[C64], opts: &ShootOptions) -> FieldSample {
    let empty = FieldSample { z: z.to_vec(), kernel: None, psi_norm: None, converged: false };
    if dom.rho(z) > 1e-12 {
        return empty;
    }
    match excluded_psi(dom, p, z, opts) {
        Ok(w) => FieldSample {
            z: z.to_vec(),
            kernel: Some(kernel_from_psi(&w, &dom.normal(p))),
            psi_norm: Some(cvec::norm(&w)),
            converged: true,
        },
        Err(e) => {
            log::debug!("field point skipped: {e}");
            empty
        }
    }
}

/// Samples every grid point in grid order; points are evaluated in
/// parallel on the current rayon pool.
pub fn field_grid(dom: &Domain, p: &[C64], grid: &FieldGrid, opts: &ShootOptions) -> Result<Vec<FieldSample>> {
    use rayon::prelude::*;
    if grid.center.len() != dom.dim() {
        return Err(Error::Invalid(format!("grid dimension {} does not match domain dimension {}", grid.center.len(), dom.dim())));
    }
    let pts = grid.points()?;
    Ok(pts.par_iter().map(|z| field_sample(dom, p, z, opts)).collect())
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with columns `re(z_k)…, im(z_k)…, P, |Ψ|, converged`.
pub fn field_csv(samples: &[FieldSample]) -> String {
    let n = samples.first().map(|s| s.z.len()).unwrap_or(0);
    let mut head: Vec<String> = (1..=n).map(|k| format!("re_z{k}")).collect();
    head.extend((1..=n).map(|k| format!("im_z{k}")));
    head.extend(["P".to_string(), "psi_norm".to_string(), "converged".to_string()]);
    let mut out = head.join(",");
    out.push('\n');
    for s in samples {
        let mut row: Vec<String> = s.z.iter().map(|x| num(x.re)).collect();
        row.extend(s.z.iter().map(|x| num(x.im)));
        row.push(s.kernel.map(num).unwrap_or_default());
        row.push(s.psi_norm.map(num).unwrap_or_default());
        row.push(if s.converged { "1" } else { "0" }.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(a: f64, b: f64) -> C64 {
        C64::new(a, b)
    }

    #[test]
    fn ball_splitting_examples() {
        let nu = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let (v, z) = ball_splitting(&nu, &[c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(cvec::norm(&cvec::sub(&v, &nu)) < 1e-15 && z.norm() < 1e-15);
        let w = vec![c(0.2, -0.1), c(0.3, 0.4)];
        let (v, z) = ball_splitting(&nu, &w).unwrap();
        assert!(cvec::norm(&cvec::sub(&ball_leaf(&nu, &v, z), &w)) < 1e-14);
        assert!(z.norm() < 1.0);
        assert!(cvec::inner(&v, &nu).re > 0.0);
    }

    #[test]
    fn ball_shoot_examples() {
        let ball = Domain::make_ball(2).unwrap();
        let p = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let o = ShootOptions::default();
        let lc = shoot(&ball, &p, &[c(0.0, 0.0), c(0.0, 0.0)], &o).unwrap();
        assert!(cvec::norm(&lc.vhat) < 1e-12 && lc.zeta.norm() < 1e-12);
        let lc = shoot(&ball, &p, &[c(-1.0, 0.0), c(0.0, 0.0)], &o).unwrap();
        assert!(cvec::norm(&lc.vhat) < 1e-10 && (lc.zeta + 1.0).norm() < 1e-10);
        assert!(lc.jacobian_condition.is_finite());
        assert_eq!(psi(&ball, &p, &p, &o).unwrap(), p);
        let w = psi(&ball, &p, &[c(0.0, 0.0), c(0.0, 0.0)], &o).unwrap();
        assert!(cvec::norm(&w) < 1e-12);
        let k = poisson_kernel(&ball, &p, &[c(0.0, 0.0), c(0.0, 0.0)], &o).unwrap();
        assert!((k + 1.0).abs() < 1e-12);
        let z0 = psi_inverse(&ball, &p, &[c(0.0, 0.0), c(0.0, 0.0)], &o.solve).unwrap();
        assert!(cvec::norm(&z0) < 1e-12);
    }

    #[test]
    fn exclusion_radius() {
        let ball = Domain::make_ball(2).unwrap();
        let p = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let z = vec![c(0.995, 0.0), c(0.0, 0.0)];
        assert!(matches!(shoot(&ball, &p, &z, &ShootOptions::default()), Err(Error::TooCloseToSingularity { .. })));
    }

    #[test]
    fn csv_layout() {
        let s = vec![
            FieldSample { z: vec![c(0.1, 0.2), c(0.0, -0.5)], kernel: Some(-1.0), psi_norm: Some(0.5), converged: true },
            FieldSample { z: vec![c(0.9, 0.0), c(0.0, 0.0)], kernel: None, psi_norm: None, converged: false },
        ];
        let csv = field_csv(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "re_z1,re_z2,im_z1,im_z2,P,psi_norm,converged");
        assert_eq!(lines[1].split(',').count(), 7);
        assert!(lines[1].starts_with("1.0000000000000001e-1,"));
        assert!(lines[2].ends_with(",,,0"));
    }
}
