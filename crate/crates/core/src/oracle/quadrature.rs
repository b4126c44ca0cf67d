//! Adaptive Gauss–Kronrod (7, 15) quadrature for matrix-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, RiccatiError};
use crate::Mat;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            max_intervals: 4096,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureResult {
    pub value: Mat,
    pub error_estimate: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Mat,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn max_abs(m: &Mat) -> f64 {
    m.amax()
}

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<Piece>
where
    F: FnMut(f64) -> Result<Mat>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kron = &fc * WGK[7];
    let mut gauss = &fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx)? + f(center + dx)?;
        kron += &sum * WGK[j];
        if j % 2 == 1 {
            gauss += &sum * WG[j / 2];
        }
    }
    let value = kron * half;
    let error = max_abs(&(&value - gauss * half));
    Ok(Piece { a, b, value, error })
}

/// Integrates `f` over `[a, b]`, refining the interval with the largest
/// error estimate until the total estimate is within tolerance.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<Mat>,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(RiccatiError::InvalidArgument(format!(
            "quadrature interval [{a}, {b}] is invalid"
        )));
    }
    let first = kronrod(&mut f, a, b)?;
    let mut total = first.value.clone();
    let mut err_total = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while err_total > cfg.abs_tol.max(cfg.rel_tol * max_abs(&total)) {
        if heap.len() >= cfg.max_intervals {
            return Err(RiccatiError::Residual {
                what: "quadrature error estimate".into(),
                residual: err_total,
                tolerance: cfg.abs_tol.max(cfg.rel_tol * max_abs(&total)),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&mut f, worst.a, mid)?;
        let right = kronrod(&mut f, mid, worst.b)?;
        total += &left.value + &right.value - &worst.value;
        err_total += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift from incremental updates.
    let intervals = heap.len();
    let mut value = Mat::zeros(total.nrows(), total.ncols());
    let mut error_estimate = 0.0;
    for p in heap {
        value += p.value;
        error_estimate += p.error;
    }
    Ok(QuadratureResult {
        value,
        error_estimate,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(
            |x| Ok(Mat::from_element(1, 1, x.powi(5) - 2.0 * x * x)),
            0.0,
            2.0,
            &QuadratureConfig::default(),
        )
        .unwrap();
        let exact = 64.0 / 6.0 - 16.0 / 3.0;
        assert!((r.value[(0, 0)] - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand_refines() {
        let r = integrate(
            |x| Ok(Mat::from_row_slice(1, 2, &[(20.0 * x).sin(), (-x).exp()])),
            0.0,
            3.0,
            &QuadratureConfig::default(),
        )
        .unwrap();
        let exact0 = (1.0 - (60f64).cos()) / 20.0;
        let exact1 = 1.0 - (-3f64).exp();
        assert!((r.value[(0, 0)] - exact0).abs() < 1e-10);
        assert!((r.value[(0, 1)] - exact1).abs() < 1e-10);
        assert!(r.intervals > 1);
    }

    #[test]
    fn empty_interval() {
        let r = integrate(|_| Ok(Mat::from_element(1, 1, 1.0)), 1.0, 1.0, &QuadratureConfig::default()).unwrap();
        assert_eq!(r.value[(0, 0)], 0.0);
    }
}
