//! Property batteries over solved geodesics, the boundary representation
//! and parameter dependence. Every check reports its largest violation
//! against a fixed threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{leaf_kernel, poisson_kernel, ShootOptions};
use crate::cvec::{self, CMat};
use crate::domain::{unitary_frame, BoundaryDatum, Domain};
use crate::error::Result;
use crate::geodesic::{solve_datum, solve_from, GeodesicDisc, SolveOptions};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_violation: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), max_violation: value, threshold, pass: value <= threshold }
    }

    /// Passes when `value < threshold`.
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), max_violation: value, threshold, pass: value < threshold }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
    /// Per-sample solver failures, in sample order.
    #[serde(default)]
    pub failures: Vec<String>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
        self.failures.extend(other.failures);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Which data a battery samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub count: usize,
    pub seed: u64,
    /// Upper bound for `|v̂|`.
    pub vhat_radius: f64,
    pub nodes: usize,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self { count: 20, seed: 1, vhat_radius: 0.5, nodes: 256 }
    }
}

impl SamplePlan {
    fn solve_options(&self) -> SolveOptions {
        SolveOptions { nodes: self.nodes, ..SolveOptions::default() }
    }

    /// Deterministic `(p, v̂)` pairs.
    pub fn data(&self, dom: &Domain) -> Vec<(Vec<C64>, Vec<C64>)> {
        let ps = dom.boundary_samples(self.count, self.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(0x9e37_79b9));
        ps.into_iter()
            .map(|p| {
                let raw: Vec<C64> = (0..dom.dim() - 1)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let r = rng.gen_range(0.0..self.vhat_radius);
                let vhat = if cvec::norm(&raw) > 0.0 { cvec::scale(&cvec::normalized(&raw), C64::new(r, 0.0)) } else { raw };
                (p, vhat)
            })
            .collect()
    }
}

pub const PROPERNESS_TOL: f64 = 1e-8;
pub const DUAL_TOL: f64 = 1e-7;
pub const NORMALIZATION_TOL: f64 = 1e-7;
pub const EQUIVARIANCE_TOL: f64 = 1e-7;

/// Fixed unitary used for the equivariance check.
pub fn probe_unitary(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    a.qr().q()
}

/// `sup_j |ρ(φ(ζ_j))|`.
pub fn properness(dom: &Domain, g: &GeodesicDisc) -> f64 {
    (0..g.phi.num_nodes()).map(|j| dom.rho(&g.phi.node_vector(j)).abs()).fold(0.0, f64::max)
}

/// `(d/dθ)|φ*(e^{iθ})|` at `θ = 0`.
pub fn normalization_defect(g: &GeodesicDisc) -> f64 {
    let nn = g.dual.num_nodes();
    let vals: Vec<C64> = (0..nn).map(|j| C64::new(cvec::norm(&g.dual.node_vector(j)), 0.0)).collect();
    let f = crate::circle::CircleField::from_values(nn, 1, vals).expect("node count already validated");
    f.multiply_coeffs(|k| I * k as f64).value(0, 0).re.abs()
}

/// `sup_j |φ_U(ζ_j) − Uφ(ζ_j)|` for the geodesic of `U(Ω)` with datum `(Up, Uv)`.
pub fn equivariance_defect(dom: &Domain, g: &GeodesicDisc, u: &CMat, opts: &SolveOptions) -> Result<f64> {
    let du = dom.unitary_image(u);
    let pu = cvec::mat_vec(u, &g.datum.p);
    let vu = cvec::mat_vec(u, &g.datum.v);
    let datum = BoundaryDatum::from_v(&du, &pu, &vu)?;
    let start = g.phi.map_nodes(g.dim(), |_, x| cvec::mat_vec(u, x))?;
    let h = solve_from(&du, &datum, start, opts)?;
    Ok((0..g.phi.num_nodes())
        .map(|j| cvec::norm(&cvec::sub(&h.phi.node_vector(j), &cvec::mat_vec(u, &g.phi.node_vector(j)))))
        .fold(0.0, f64::max))
}

struct GeodesicSample {
    properness: f64,
    dual: f64,
    winding: i64,
    normalization: f64,
    equivariance: f64,
}

/// Solves each sampled datum and checks properness, dual holomorphy,
/// winding, the normalization and unitary equivariance.
pub fn run_geodesic_battery(dom: &Domain, plan: &SamplePlan) -> Report {
    let opts = plan.solve_options();
    let u = probe_unitary(dom.dim(), plan.seed);
    let results: Vec<std::result::Result<GeodesicSample, String>> = plan
        .data(dom)
        .par_iter()
        .map(|(p, vhat)| {
            let datum = BoundaryDatum::from_vhat(dom, p, vhat).map_err(|e| e.to_string())?;
            let g = solve_datum(dom, &datum, &opts).map_err(|e| e.to_string())?;
            let equivariance = equivariance_defect(dom, &g, &u, &opts).map_err(|e| format!("equivariance: {e}"))?;
            Ok(GeodesicSample {
                properness: properness(dom, &g),
                dual: g.diagnostics.dual_residual,
                winding: g.diagnostics.winding,
                normalization: normalization_defect(&g),
                equivariance,
            })
        })
        .collect();
    let mut rep = Report::default();
    let ok: Vec<&GeodesicSample> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    rep.failures = results.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    let max = |f: &dyn Fn(&GeodesicSample) -> f64| ok.iter().map(|s| f(s)).fold(0.0, f64::max);
    rep.checks.push(Check::at_most("solver_failures", rep.failures.len() as f64, 0.0));
    rep.checks.push(Check::at_most("properness", max(&|s| s.properness), PROPERNESS_TOL));
    rep.checks.push(Check::at_most("dual_holomorphy", max(&|s| s.dual), DUAL_TOL));
    rep.checks.push(Check::at_most("winding", max(&|s| s.winding.abs() as f64), 0.0));
    rep.checks.push(Check::at_most("normalization", max(&|s| s.normalization), NORMALIZATION_TOL));
    rep.checks.push(Check::at_most("unitary_equivariance", max(&|s| s.equivariance), EQUIVARIANCE_TOL));
    rep
}

/// Direction in parameter space: `p` moves by radial projection of
/// `p + t·dp`, `v̂` by `v̂ + t·dv` in the chart centred at the base normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDirection {
    pub dp: Vec<C64>,
    pub dv: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    /// `‖D(h) − D(h/2)‖ / ‖D(h/2) − D(h/4)‖` for second differences `D`.
    pub ratio: f64,
    pub steps: [f64; 3],
    pub second_differences: Vec<Vec<C64>>,
    /// Central first difference at the smallest step.
    pub first_derivative: Vec<C64>,
    pub zetas: Vec<C64>,
}

pub const SMOOTHNESS_STEP: f64 = 0.1;

/// `Φ̃(p(t), v̂(t), ζ)` stacked over the probe points `ζ`.
fn leaf_family(
    dom: &Domain,
    p: &[C64],
    vhat: &[C64],
    dir: &ParamDirection,
    t: f64,
    zetas: &[C64],
    warm: Option<&GeodesicDisc>,
    opts: &SolveOptions,
) -> Result<(Vec<C64>, GeodesicDisc)> {
    let center = dom.normal(p);
    let pt = dom.project_to_boundary(&cvec::axpy(p, C64::new(t, 0.0), &dir.dp))?;
    let vt = cvec::axpy(vhat, C64::new(t, 0.0), &dir.dv);
    let datum = BoundaryDatum::from_vhat_centered(dom, &pt, &vt, &center)?;
    let g = match warm {
        Some(w) => solve_from(dom, &datum, w.phi.clone(), opts)?,
        None => solve_datum(dom, &datum, opts)?,
    };
    Ok((zetas.iter().flat_map(|&z| g.eval(z)).collect(), g))
}

/// Richardson consistency of second differences of `Φ̃` in `(p, v̂)` at
/// steps `h, h/2, h/4`; about 4 for `C²`-smooth dependence.
pub fn parameter_smoothness_probe(
    dom: &Domain,
    p: &[C64],
    vhat: &[C64],
    dir: &ParamDirection,
    h: f64,
    opts: &SolveOptions,
) -> Result<SmoothnessReport> {
    let zetas = vec![C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.0, -0.6), C64::new(-0.7, 0.3)];
    let (f0, g0) = leaf_family(dom, p, vhat, dir, 0.0, &zetas, None, opts)?;
    let steps = [h, h / 2.0, h / 4.0];
    let mut second = Vec::new();
    let mut first = Vec::new();
    for &s in &steps {
        let (fp, _) = leaf_family(dom, p, vhat, dir, s, &zetas, Some(&g0), opts)?;
        let (fm, _) = leaf_family(dom, p, vhat, dir, -s, &zetas, Some(&g0), opts)?;
        let d2: Vec<C64> = (0..f0.len()).map(|k| (fp[k] - f0[k] * 2.0 + fm[k]) / (s * s)).collect();
        first = (0..f0.len()).map(|k| (fp[k] - fm[k]) / (2.0 * s)).collect();
        second.push(d2);
    }
    let ratio = cvec::norm(&cvec::sub(&second[0], &second[1])) / cvec::norm(&cvec::sub(&second[1], &second[2]));
    Ok(SmoothnessReport { ratio, steps, second_differences: second, first_derivative: first, zetas })
}

pub const RICHARDSON_LOW: f64 = 3.5;
pub const RICHARDSON_HIGH: f64 = 4.5;

/// Smoothness probe at the first datum of the plan in a fixed direction.
pub fn run_smoothness_suite(dom: &Domain, plan: &SamplePlan) -> Report {
    let mut rep = Report::default();
    let (p, vhat) = plan.data(dom).into_iter().next().expect("plan has at least one datum");
    let n = dom.dim();
    let dir = ParamDirection {
        dp: (0..n).map(|k| C64::new(0.3 - 0.1 * k as f64, 0.2)).collect(),
        dv: (0..n - 1).map(|k| C64::new(0.5, -0.3 + 0.2 * k as f64)).collect(),
    };
    match parameter_smoothness_probe(dom, &p, &vhat, &dir, SMOOTHNESS_STEP, &plan.solve_options()) {
        Ok(s) => {
            let ok = (RICHARDSON_LOW..=RICHARDSON_HIGH).contains(&s.ratio);
            rep.checks.push(Check {
                name: "richardson_ratio".into(),
                max_violation: s.ratio,
                threshold: RICHARDSON_HIGH,
                pass: ok,
            });
        }
        Err(e) => {
            rep.failures.push(e.to_string());
            rep.checks.push(Check::at_most("solver_failures", 1.0, 0.0));
        }
    }
    rep
}

/// Five-point combination `Σ P(ζ ± h, ζ ± ih) − 4P(ζ)`, not divided by `h²`.
pub fn five_point(f: impl Fn(C64) -> Result<f64>, zeta: C64, h: f64) -> Result<f64> {
    let c = f(zeta)?;
    let mut s = -4.0 * c;
    for d in [C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(0.0, h), C64::new(0.0, -h)] {
        s += f(zeta + d)?;
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcmaReport {
    /// `max |P|` at distance `decay_distance` inside `∂Ω` away from `p`.
    pub decay: f64,
    pub decay_distance: f64,
    /// `(|z − p|, |P(z)|·|z − p|)` along the normal leaf.
    pub bracket: Vec<(f64, f64)>,
    /// Smallest `C` with all products in `[1/C, C]`.
    pub bracket_constant: f64,
    pub leaf_laplacian: f64,
    /// The same stencil divided by `h²`.
    pub leaf_laplacian_scaled: f64,
    pub leaf_pullback: f64,
}

pub const LAPLACIAN_STEP: f64 = 1e-2;
pub const LAPLACIAN_TOL: f64 = 1e-5;
pub const PULLBACK_TOL: f64 = 1e-6;
pub const DECAY_TOL: f64 = 1e-4;
pub const BRACKET_MAX: f64 = 10.0;

/// Boundary decay, nontangential blow-up bracket, leaf harmonicity and the
/// leaf pullback identity of `P_Ω(·, p)`.
pub fn hcma_boundary_probe(dom: &Domain, p: &[C64], opts: &ShootOptions) -> Result<HcmaReport> {
    let n = dom.dim();
    // Decay on the far side of the boundary: the antipode of p and small
    // phase and tangential offsets of it.
    let t = 1e-4;
    let frame = unitary_frame(&dom.normal(p))?;
    let tangent: Vec<C64> = frame.column(1).iter().copied().collect();
    let anti = cvec::scale(p, C64::new(-1.0, 0.0));
    let far = [
        anti.clone(),
        cvec::axpy(&anti, C64::new(0.0, 0.15), p),
        cvec::axpy(&anti, C64::new(0.0, -0.15), p),
        cvec::axpy(&anti, C64::new(0.15, 0.0), &tangent),
        cvec::axpy(&anti, C64::new(0.0, 0.15), &tangent),
    ]
    .iter()
    .map(|d| dom.boundary_along(d))
    .collect::<Result<Vec<_>>>()?;
    let decay = far
        .par_iter()
        .map(|x| {
            let z = cvec::axpy(x, C64::new(-t, 0.0), &dom.normal(x));
            poisson_kernel(dom, p, &z, opts).map(f64::abs)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    // Bracket along the leaf with v = ν_p, which meets p along the normal.
    let zero = vec![C64::new(0.0, 0.0); n - 1];
    let datum = BoundaryDatum::from_vhat(dom, p, &zero)?;
    let g = solve_datum(dom, &datum, &opts.solve)?;
    let radii = [0.5, 0.7, 0.9, 0.95, 0.98];
    let bracket = radii
        .par_iter()
        .map(|&r| {
            let z = g.eval(C64::new(r, 0.0));
            let d = cvec::norm(&cvec::sub(&z, p));
            poisson_kernel(dom, p, &z, opts).map(|k| (d, k.abs() * d))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let bracket_constant = bracket.iter().map(|&(_, q)| q.max(1.0 / q)).fold(1.0, f64::max);
    // Harmonicity and the pullback identity on a few leaves.
    let leaves: Vec<(Vec<C64>, C64)> = vec![
        (zero.clone(), C64::new(0.0, 0.0)),
        ((0..n - 1).map(|k| C64::new(0.3, 0.1 * k as f64)).collect(), C64::new(-0.4, 0.3)),
        ((0..n - 1).map(|k| C64::new(-0.1 * k as f64, -0.35)).collect(), C64::new(0.2, -0.5)),
    ];
    let leaf_stats = leaves
        .par_iter()
        .map(|(vhat, zeta)| {
            let datum = BoundaryDatum::from_vhat(dom, p, vhat)?;
            let g = solve_datum(dom, &datum, &opts.solve)?;
            let c = datum.c(dom);
            let kernel = |z: C64| poisson_kernel(dom, p, &g.eval(z), opts);
            let lap = five_point(&kernel, *zeta, LAPLACIAN_STEP)?;
            let pull = (kernel(*zeta)? - leaf_kernel(c, *zeta)).abs();
            Ok((lap.abs(), pull))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let lap = leaf_stats.iter().map(|s| s.0).fold(0.0, f64::max);
    let pull = leaf_stats.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(HcmaReport {
        decay,
        decay_distance: t,
        bracket,
        bracket_constant,
        leaf_laplacian: lap,
        leaf_laplacian_scaled: lap / (LAPLACIAN_STEP * LAPLACIAN_STEP),
        leaf_pullback: pull,
    })
}

/// HCMA probe at the first boundary point of the plan.
pub fn run_hcma_suite(dom: &Domain, plan: &SamplePlan) -> Report {
    let mut rep = Report::default();
    let p = dom.boundary_samples(1, plan.seed).remove(0);
    let opts = ShootOptions { solve: plan.solve_options(), ..ShootOptions::default() };
    match hcma_boundary_probe(dom, &p, &opts) {
        Ok(h) => {
            rep.checks.push(Check::at_most("boundary_decay", h.decay, DECAY_TOL));
            rep.checks.push(Check::at_most("nontangential_bracket", h.bracket_constant, BRACKET_MAX));
            rep.checks.push(Check::at_most("leaf_laplacian", h.leaf_laplacian, LAPLACIAN_TOL));
            rep.checks.push(Check::at_most("leaf_pullback", h.leaf_pullback, PULLBACK_TOL));
        }
        Err(e) => {
            rep.failures.push(e.to_string());
            rep.checks.push(Check::at_most("solver_failures", 1.0, 0.0));
        }
    }
    rep
}
