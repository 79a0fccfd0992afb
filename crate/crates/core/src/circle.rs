//! Trigonometric calculus on the unit circle.
//!
//! A [`CircleField`] is a band-limited map `∂Δ → ℂᵈ` sampled at the `N`
//! equispaced nodes `ζ_j = exp(2πij/N)`. Nodal values and Fourier
//! coefficients are both kept; every operator here is a diagonal Fourier
//! multiplier, so the field is never differentiated by nodal differences.
//!
//! Coefficients use the convention `u(ζ) = Σ_k ĉ_k ζ^k` with
//! `k ∈ [−N/2, N/2)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

type Plan = Arc<dyn Fft<f64>>;

fn plans(n: usize) -> (Plan, Plan) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Plan, Plan)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Nodal samples -> coefficients (FFT order), in place.
fn forward(buf: &mut [C64]) {
    let n = buf.len();
    plans(n).0.process(buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
}

/// Coefficients (FFT order) -> nodal samples, in place.
fn inverse(buf: &mut [C64]) {
    plans(buf.len()).1.process(buf);
}

/// Signed frequency of FFT slot `idx`.
#[inline]
pub fn freq(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// FFT slot of signed frequency `k`, if representable on an `n`-point grid.
#[inline]
pub fn slot(k: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if k < -half || k >= half {
        None
    } else if k >= 0 {
        Some(k as usize)
    } else {
        Some((k + n as i64) as usize)
    }
}

/// The `n` equispaced nodes on the unit circle, starting at `ζ = 1`.
pub fn nodes(n: usize) -> Vec<C64> {
    (0..n)
        .map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
        .collect()
}

/// Band-limited trace on the unit circle with values in `ℂ^dim`.
///
/// Storage is component-major: component `c` occupies `[c*n, (c+1)*n)` in
/// both `values` and `coeffs`; coefficients are stored in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleField {
    n: usize,
    dim: usize,
    values: Vec<C64>,
    coeffs: Vec<C64>,
}

fn check_grid(n: usize, dim: usize, len: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Invalid(format!("node count must be even and >= 2, got {n}")));
    }
    if dim == 0 {
        return Err(Error::Invalid("field dimension must be positive".into()));
    }
    if len != n * dim {
        return Err(Error::Invalid(format!(
            "expected {} samples for n={n}, dim={dim}, got {len}",
            n * dim
        )));
    }
    Ok(())
}

impl CircleField {
    pub fn from_values(n: usize, dim: usize, values: Vec<C64>) -> Result<Self> {
        check_grid(n, dim, values.len())?;
        let mut coeffs = values.clone();
        for chunk in coeffs.chunks_mut(n) {
            forward(chunk);
        }
        Ok(Self { n, dim, values, coeffs })
    }

    pub fn from_coeffs(n: usize, dim: usize, coeffs: Vec<C64>) -> Result<Self> {
        check_grid(n, dim, coeffs.len())?;
        let mut values = coeffs.clone();
        for chunk in values.chunks_mut(n) {
            inverse(chunk);
        }
        Ok(Self { n, dim, values, coeffs })
    }

    /// Samples `f` at every node; `f` must return `dim` components.
    pub fn from_fn(n: usize, dim: usize, mut f: impl FnMut(C64) -> Vec<C64>) -> Result<Self> {
        let mut values = vec![C64::new(0.0, 0.0); n * dim];
        for (j, z) in nodes(n).into_iter().enumerate() {
            let v = f(z);
            if v.len() != dim {
                return Err(Error::Invalid(format!(
                    "sample function returned {} components, expected {dim}",
                    v.len()
                )));
            }
            for (c, x) in v.into_iter().enumerate() {
                values[c * n + j] = x;
            }
        }
        Self::from_values(n, dim, values)
    }

    /// Builds a field from signed-frequency coefficients `(k, component, value)`.
    pub fn from_modes(n: usize, dim: usize, modes: &[(i64, usize, C64)]) -> Result<Self> {
        let mut coeffs = vec![C64::new(0.0, 0.0); n * dim];
        for &(k, c, v) in modes {
            let s = slot(k, n)
                .ok_or_else(|| Error::Invalid(format!("frequency {k} not representable on {n} nodes")))?;
            if c >= dim {
                return Err(Error::Invalid(format!("component {c} out of range")));
            }
            coeffs[c * n + s] += v;
        }
        Self::from_coeffs(n, dim, coeffs)
    }

    pub fn constant(n: usize, value: &[C64]) -> Result<Self> {
        let modes: Vec<_> = value.iter().enumerate().map(|(c, &v)| (0, c, v)).collect();
        Self::from_modes(n, value.len(), &modes)
    }

    /// Trace of `ζ ↦ ζ^k` (scalar).
    pub fn monomial(n: usize, k: i64) -> Result<Self> {
        Self::from_modes(n, 1, &[(k, 0, C64::new(1.0, 0.0))])
    }

    pub fn zeros(n: usize, dim: usize) -> Result<Self> {
        check_grid(n, dim, n * dim)?;
        Ok(Self {
            n,
            dim,
            values: vec![C64::new(0.0, 0.0); n * dim],
            coeffs: vec![C64::new(0.0, 0.0); n * dim],
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Value of component `c` at node `j`.
    #[inline]
    pub fn value(&self, j: usize, c: usize) -> C64 {
        self.values[c * self.n + j]
    }

    /// All components at node `j`.
    pub fn node_vector(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|c| self.value(j, c)).collect()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Coefficients in FFT order, component-major.
    pub fn raw_coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient `ĉ_k` of component `c`; zero outside the grid band.
    #[inline]
    pub fn coeff(&self, k: i64, c: usize) -> C64 {
        match slot(k, self.n) {
            Some(s) => self.coeffs[c * self.n + s],
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn component(&self, c: usize) -> CircleField {
        let r = c * self.n..(c + 1) * self.n;
        CircleField {
            n: self.n,
            dim: 1,
            values: self.values[r.clone()].to_vec(),
            coeffs: self.coeffs[r].to_vec(),
        }
    }

    /// Stacks fields of equal node count into one vector field.
    pub fn stack(parts: &[&CircleField]) -> Result<CircleField> {
        let n = parts
            .first()
            .ok_or_else(|| Error::Invalid("cannot stack zero fields".into()))?
            .n;
        let mut values = Vec::new();
        let mut coeffs = Vec::new();
        for p in parts {
            if p.n != n {
                return Err(Error::Invalid("node counts differ".into()));
            }
            values.extend_from_slice(&p.values);
            coeffs.extend_from_slice(&p.coeffs);
        }
        Ok(CircleField { n, dim: values.len() / n, values, coeffs })
    }

    /// Applies a multiplier `m(k)` to every coefficient.
    pub fn multiply_coeffs(&self, m: impl Fn(i64) -> C64) -> CircleField {
        let mut coeffs = self.coeffs.clone();
        for chunk in coeffs.chunks_mut(self.n) {
            for (s, c) in chunk.iter_mut().enumerate() {
                *c *= m(freq(s, self.n));
            }
        }
        Self::from_coeffs(self.n, self.dim, coeffs).expect("grid already validated")
    }

    /// Multiplies by `ζ^s` in coefficient space; modes leaving the band are dropped.
    pub fn shift(&self, s: i64) -> CircleField {
        let n = self.n;
        let mut coeffs = vec![C64::new(0.0, 0.0); n * self.dim];
        for c in 0..self.dim {
            for idx in 0..n {
                if let Some(t) = slot(freq(idx, n) + s, n) {
                    coeffs[c * n + t] = self.coeffs[c * n + idx];
                }
            }
        }
        Self::from_coeffs(n, self.dim, coeffs).expect("grid already validated")
    }

    /// Trigonometric interpolation onto an `m`-point grid (zero padding or truncation).
    pub fn resample(&self, m: usize) -> Result<CircleField> {
        let n = self.n;
        let mut coeffs = vec![C64::new(0.0, 0.0); m * self.dim];
        for c in 0..self.dim {
            for idx in 0..n {
                if let Some(t) = slot(freq(idx, n), m) {
                    coeffs[c * m + t] = self.coeffs[c * n + idx];
                }
            }
        }
        Self::from_coeffs(m, self.dim, coeffs)
    }

    /// Keeps only frequencies in `[lo, hi]`.
    pub fn band(&self, lo: i64, hi: i64) -> CircleField {
        self.multiply_coeffs(|k| if k >= lo && k <= hi { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Pointwise map over nodes: `f(ζ_j, values at j) -> new values`.
    pub fn map_nodes(&self, out_dim: usize, mut f: impl FnMut(C64, &[C64]) -> Vec<C64>) -> Result<CircleField> {
        let zs = nodes(self.n);
        let mut buf = vec![C64::new(0.0, 0.0); self.dim];
        let mut values = vec![C64::new(0.0, 0.0); self.n * out_dim];
        for (j, z) in zs.into_iter().enumerate() {
            for (c, b) in buf.iter_mut().enumerate() {
                *b = self.value(j, c);
            }
            let v = f(z, &buf);
            if v.len() != out_dim {
                return Err(Error::Invalid("map_nodes returned wrong dimension".into()));
            }
            for (c, x) in v.into_iter().enumerate() {
                values[c * self.n + j] = x;
            }
        }
        Self::from_values(self.n, out_dim, values)
    }

    pub fn scale(&self, s: C64) -> CircleField {
        self.multiply_coeffs(|_| s)
    }

    pub fn add(&self, other: &CircleField) -> Result<CircleField> {
        self.same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self::from_coeffs(self.n, self.dim, coeffs)
    }

    pub fn sub(&self, other: &CircleField) -> Result<CircleField> {
        self.same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Self::from_coeffs(self.n, self.dim, coeffs)
    }

    fn same_shape(&self, other: &CircleField) -> Result<()> {
        if self.n != other.n || self.dim != other.dim {
            return Err(Error::Invalid("field shapes differ".into()));
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus of a strictly negative-frequency coefficient.
    pub fn negative_mass(&self) -> f64 {
        let mut m: f64 = 0.0;
        for c in 0..self.dim {
            for s in self.n / 2..self.n {
                m = m.max(self.coeffs[c * self.n + s].norm());
            }
        }
        m
    }

    /// Default holomorphy tolerance: `1e-10 × sup norm` (absolute floor 1e-14).
    pub fn default_tol_neg(&self) -> f64 {
        (1e-10 * self.sup_norm()).max(1e-14)
    }

    pub fn is_holomorphic(&self, tol_neg: f64) -> bool {
        self.negative_mass() <= tol_neg
    }

    pub fn is_real_valued(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() <= tol)
    }

    /// Conjugate-function multiplier `ĉ_k ↦ −i·sgn(k)·ĉ_k`.
    ///
    /// The Nyquist slot is treated as negative frequency.
    pub fn hilbert_transform(&self) -> CircleField {
        self.multiply_coeffs(|k| C64::new(0.0, -(k.signum() as f64)))
    }

    /// `Π u = ½(u − i𝓗u) − mean/2`: keeps exactly the strictly negative
    /// frequencies of `u`.
    pub fn analytic_projection(&self) -> CircleField {
        self.multiply_coeffs(|k| if k < 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Drops strictly negative frequencies.
    pub fn holomorphic_part(&self) -> CircleField {
        self.multiply_coeffs(|k| if k >= 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// `Σ_{k≥0} ĉ_k ζ^k`, checked for holomorphy first.
    pub fn holomorphic_extend(&self, zeta: C64) -> Result<Vec<C64>> {
        if zeta.norm() > 1.0 + 1e-12 {
            return Err(Error::OutsideDisc(format!("{zeta}")));
        }
        let tol = self.default_tol_neg();
        let mass = self.negative_mass();
        if mass > tol {
            return Err(Error::NotHolomorphic { mass, tol });
        }
        Ok(self.eval_series(zeta))
    }

    /// Evaluates the nonnegative-frequency series at `zeta` without checks.
    pub fn eval_series(&self, zeta: C64) -> Vec<C64> {
        self.eval_derivative(zeta, 0)
    }

    /// `order`-th complex derivative of the nonnegative-frequency series.
    pub fn eval_derivative(&self, zeta: C64, order: usize) -> Vec<C64> {
        let half = self.n / 2;
        (0..self.dim)
            .map(|c| {
                let base = &self.coeffs[c * self.n..c * self.n + half];
                // Horner on the differentiated polynomial.
                let mut acc = C64::new(0.0, 0.0);
                for k in (order..half).rev() {
                    acc = acc * zeta + base[k] * falling(k, order);
                }
                acc
            })
            .collect()
    }

    /// Laurent-series derivative `d^order/dζ^order`, applied termwise to all
    /// frequencies (for holomorphic traces this is the complex derivative).
    pub fn circle_derivative(&self, order: usize) -> CircleField {
        let n = self.n;
        let mut coeffs = vec![C64::new(0.0, 0.0); n * self.dim];
        for c in 0..self.dim {
            for s in 0..n {
                let k = freq(s, n);
                let target = k - order as i64;
                if let Some(t) = slot(target, n) {
                    let mut f = 1.0;
                    for i in 0..order as i64 {
                        f *= (k - i) as f64;
                    }
                    coeffs[c * n + t] += self.coeffs[c * n + s] * f;
                }
            }
        }
        Self::from_coeffs(n, self.dim, coeffs).expect("grid already validated")
    }

    /// Mean over the circle of each component (the zero coefficient).
    pub fn mean(&self) -> Vec<C64> {
        (0..self.dim).map(|c| self.coeffs[c * self.n]).collect()
    }

    /// Winding number of a scalar, nonvanishing field.
    pub fn winding_number(&self) -> Result<i64> {
        if self.dim != 1 {
            return Err(Error::Invalid("winding number needs a scalar field".into()));
        }
        // Refine by trigonometric interpolation until consecutive samples
        // are close relative to the smallest modulus.
        let mut field = std::borrow::Cow::Borrowed(self);
        loop {
            let (n, vals) = (field.n, &field.values);
            let mut min_abs = f64::INFINITY;
            let mut max_step: f64 = 0.0;
            let mut total = 0.0;
            for j in 0..n {
                let a = vals[j];
                let b = vals[(j + 1) % n];
                min_abs = min_abs.min(a.norm());
                max_step = max_step.max((b - a).norm());
                total += (b / a).arg();
            }
            if min_abs > 10.0 * max_step {
                return Ok((total / (2.0 * PI)).round() as i64);
            }
            if !(min_abs > 0.0) || n >= 16 * self.n {
                return Err(Error::TooCloseToZero { min_abs, max_step });
            }
            field = std::borrow::Cow::Owned(field.resample(2 * n)?);
        }
    }

    /// Serializable representation, coefficients ordered `k = −N/2 … N/2−1`
    /// with components interleaved (k-major).
    pub fn to_json(&self) -> CircleFieldJson {
        let half = (self.n / 2) as i64;
        let mut coeffs = Vec::with_capacity(self.n * self.dim);
        for k in -half..half {
            for c in 0..self.dim {
                let v = self.coeff(k, c);
                coeffs.push([v.re, v.im]);
            }
        }
        CircleFieldJson { n: self.n, dim: self.dim, coeffs }
    }

    pub fn from_json(j: &CircleFieldJson) -> Result<Self> {
        check_grid(j.n, j.dim, j.coeffs.len())?;
        let half = (j.n / 2) as i64;
        let mut modes = Vec::with_capacity(j.coeffs.len());
        for (i, pair) in j.coeffs.iter().enumerate() {
            let k = (i / j.dim) as i64 - half;
            modes.push((k, i % j.dim, C64::new(pair[0], pair[1])));
        }
        Self::from_modes(j.n, j.dim, &modes)
    }
}

#[inline]
fn falling(k: usize, order: usize) -> f64 {
    let mut f = 1.0;
    for i in 0..order {
        f *= (k - i) as f64;
    }
    f
}

/// JSON wire format for [`CircleField`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CircleFieldJson {
    pub n: usize,
    pub dim: usize,
    pub coeffs: Vec<[f64; 2]>,
}

/// Poincaré distance `tanh⁻¹ |(a − b)/(1 − a b̄)|` on the unit disc.
pub fn poincare_distance(a: C64, b: C64) -> Result<f64> {
    for z in [a, b] {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDisc(format!("{z}")));
        }
    }
    let q = ((a - b) / (C64::new(1.0, 0.0) - a * b.conj())).norm();
    Ok(q.min(1.0).atanh())
}
