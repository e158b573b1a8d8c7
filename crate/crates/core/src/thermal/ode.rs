//! Dormand–Prince 5(4) with standard step-size control.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen from the derivative scale when `None`.
    pub h0: Option<f64>,
}

/// Integrates y' = f(t, y) from `t0` to `t_end`, returning every accepted
/// step including both end points.
pub fn dormand_prince<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<Vec<(f64, [f64; N])>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut out = vec![(t0, y0)];
    if t_end <= t0 {
        return Ok(out);
    }
    let norm = |v: &[f64; N], y: &[f64; N], z: &[f64; N]| {
        let s: f64 = (0..N)
            .map(|i| {
                let sc = opts.atol + opts.rtol * y[i].abs().max(z[i].abs());
                (v[i] / sc).powi(2)
            })
            .sum();
        (s / N as f64).sqrt()
    };

    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y);
    let mut h = match opts.h0 {
        Some(h) => h,
        None => {
            let d0 = norm(&y, &y, &y);
            let d1 = norm(&k0, &y, &y);
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6 * (t_end - t0)
            } else {
                (0.01 * d0 / d1).min(t_end - t0)
            }
        }
    };
    let mut steps = 0usize;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::Stiffness { t, h });
        }
        if h < 4.0 * f64::EPSILON * t.abs().max(t_end.abs()) {
            return Err(Error::Stiffness { t, h });
        }
        let last = h >= t_end - t;
        if last {
            h = t_end - t;
        }
        let mut k = [[0.0; N]; 7];
        k[0] = k0;
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ys[i] += h * acc;
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y_new = y;
        let mut err = [0.0; N];
        for i in 0..N {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B5[s] * k[s][i];
                lo += B4[s] * k[s][i];
            }
            y_new[i] += h * hi;
            err[i] = h * (hi - lo);
        }
        let e = norm(&err, &y, &y_new);
        steps += 1;
        if e <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            // First-same-as-last: stage 7 is f at the new point.
            k0 = k[6];
            out.push((t, y));
        }
        let factor = if e == 0.0 {
            5.0
        } else {
            (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(tol: f64) -> OdeOptions {
        OdeOptions {
            rtol: tol,
            atol: tol,
            max_steps: 1_000_000,
            h0: None,
        }
    }

    #[test]
    fn exponential_decay() {
        let traj = dormand_prince(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &opts(1e-10)).unwrap();
        let (t, y) = *traj.last().unwrap();
        assert_eq!(t, 5.0);
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let traj = dormand_prince(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 20.0, &opts(1e-11)).unwrap();
        let (_, y) = *traj.last().unwrap();
        assert!((y[0] - 20f64.cos()).abs() < 1e-8);
        assert!((y[0] * y[0] + y[1] * y[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn step_budget_exhaustion_is_reported() {
        let o = OdeOptions {
            max_steps: 10,
            ..opts(1e-12)
        };
        let err = dormand_prince(|_, y: &[f64; 2]| [y[1], -1e6 * y[0]], 0.0, [1.0, 0.0], 100.0, &o).unwrap_err();
        assert!(matches!(err, Error::Stiffness { .. }));
    }
}
