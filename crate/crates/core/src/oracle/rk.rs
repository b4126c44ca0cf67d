//! Dormand–Prince 5(4) embedded Runge–Kutta pair with PI step-size control.

use crate::error::{Result, RiccatiError};

use super::IntegratorConfig;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order weights minus fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(t, y)` from `t0`, returning the state at each output
/// time. `project` is applied to every accepted state, and `observe` sees
/// each accepted `(t, y)`.
pub fn integrate<F, P, O>(
    mut f: F,
    mut project: P,
    mut observe: O,
    t0: f64,
    y0: Vec<f64>,
    outputs: &[f64],
    cfg: &IntegratorConfig,
) -> Result<(Vec<Vec<f64>>, StepStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    P: FnMut(&mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let n = y0.len();
    let mut stats = StepStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut out = Vec::with_capacity(outputs.len());

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    f(t, &y, &mut k1);
    stats.evaluations += 1;

    let mut h = initial_step(&mut f, t, &y, &k1, cfg, &mut stats);
    let mut err_old: f64 = 1e-4;

    for &target in outputs {
        if target < t {
            return Err(RiccatiError::InvalidArgument(format!(
                "output time {target} precedes current time {t}"
            )));
        }
        while t < target {
            if stats.accepted + stats.rejected >= cfg.max_steps {
                return Err(RiccatiError::MaxSteps(cfg.max_steps));
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < 16.0 * f64::EPSILON * t.abs().max(1.0) && !last {
                return Err(RiccatiError::StepSizeUnderflow { t, h: step });
            }

            for i in 0..n {
                ys[i] = y[i] + step * A21 * k1[i];
            }
            f(t + C2 * step, &ys, &mut k2);
            for i in 0..n {
                ys[i] = y[i] + step * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * step, &ys, &mut k3);
            for i in 0..n {
                ys[i] = y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * step, &ys, &mut k4);
            for i in 0..n {
                ys[i] = y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * step, &ys, &mut k5);
            for i in 0..n {
                ys[i] = y[i]
                    + step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + step, &ys, &mut k6);
            for i in 0..n {
                y_new[i] = y[i]
                    + step * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t + step, &y_new, &mut k7);
            stats.evaluations += 6;

            let mut acc = 0.0;
            for i in 0..n {
                let e = step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
                acc += (e / sc).powi(2);
            }
            let err = (acc / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                h = step * FAC_MIN;
                stats.rejected += 1;
                continue;
            }

            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                let fac = (fac11 / err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let h_next = (step / fac).min(cfg.max_step);
                err_old = err.max(1e-4);
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                project(&mut y);
                std::mem::swap(&mut k1, &mut k7);
                stats.accepted += 1;
                observe(t, &y);
                // A step clipped to hit an output time keeps the controller's
                // proposal from before the clip.
                h = if last { h.max(h_next).min(cfg.max_step) } else { h_next };
            } else {
                h = step / (fac11 / SAFETY).min(1.0 / FAC_MIN);
                stats.rejected += 1;
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    cfg: &IntegratorConfig,
    stats: &mut StepStats,
) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len().max(1) as f64;
    let scale = |v: f64| cfg.abs_tol + cfg.rel_tol * v.abs();
    let d0 = (y.iter().map(|&v| (v / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0
        .iter()
        .zip(y)
        .map(|(&d, &v)| (d / scale(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(&v, &d)| v + h0 * d).collect();
    let mut f1 = vec![0.0; y.len()];
    f(t + h0, &y1, &mut f1);
    stats.evaluations += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(y)
        .map(|((&a, &b), &v)| ((a - b) / scale(v)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}
