//! Matrix-valued circle fields, stored row-major as a `CircleField` of
//! dimension `rows·cols`.

use crate::circle::CircleField;
use crate::cvec::CMat;
use crate::error::Result;
use crate::C64;

pub fn from_nodes(mats: &[CMat]) -> Result<CircleField> {
    let n = mats.len();
    let (r, c) = mats.first().map(|m| m.shape()).unwrap_or((1, 1));
    let mut values = vec![C64::new(0.0, 0.0); n * r * c];
    for (j, m) in mats.iter().enumerate() {
        for a in 0..r {
            for b in 0..c {
                values[(a * c + b) * n + j] = m[(a, b)];
            }
        }
    }
    CircleField::from_values(n, r * c, values)
}

pub fn at_node(f: &CircleField, j: usize, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |a, b| f.value(j, a * cols + b))
}

pub fn all_nodes(f: &CircleField, rows: usize, cols: usize) -> Vec<CMat> {
    (0..f.num_nodes()).map(|j| at_node(f, j, rows, cols)).collect()
}

/// `order`-th derivative of the nonnegative-frequency series at `zeta`.
pub fn eval(f: &CircleField, zeta: C64, order: usize, rows: usize, cols: usize) -> CMat {
    let v = f.eval_derivative(zeta, order);
    CMat::from_fn(rows, cols, |a, b| v[a * cols + b])
}

/// Column `k` of a matrix field as a vector field.
pub fn column(f: &CircleField, rows: usize, cols: usize, k: usize) -> Result<CircleField> {
    let parts: Vec<CircleField> = (0..rows).map(|a| f.component(a * cols + k)).collect();
    let refs: Vec<&CircleField> = parts.iter().collect();
    CircleField::stack(&refs)
}

/// Nodewise matrix-vector product.
pub fn apply(m: &CircleField, v: &CircleField, rows: usize, cols: usize) -> Result<CircleField> {
    let n = v.num_nodes();
    let mut values = vec![C64::new(0.0, 0.0); n * rows];
    for j in 0..n {
        for a in 0..rows {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..cols {
                acc += m.value(j, a * cols + b) * v.value(j, b);
            }
            values[a * n + j] = acc;
        }
    }
    CircleField::from_values(n, rows, values)
}
