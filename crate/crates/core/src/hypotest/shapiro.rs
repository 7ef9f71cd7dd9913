//! Shapiro-Wilk W with Royston's AS R94 approximation for the weights and
//! the p-value.

use serde::{Deserialize, Serialize};

use super::dist::{normal_quantile, normal_sf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroResult {
    pub w: f64,
    pub p_value: f64,
    pub n: usize,
}

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Half of the antisymmetric weight vector: `a[i]` pairs the i-th smallest
/// with the i-th largest value.
fn weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an = n as f64;
    let m: Vec<f64> = (1..=half).map(|i| -normal_quantile((i as f64 - 0.375) / (an + 0.25))).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) + m[0] / ssumm2;

    let mut a = vec![0.0; half];
    if n > 5 {
        let a2 = poly(&C2, rsn) + m[1] / ssumm2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        a[0] = a1;
        a[1] = a2;
        for i in 2..half {
            a[i] = m[i] / fac;
        }
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        a[0] = a1;
        for i in 1..half {
            a[i] = m[i] / fac;
        }
    }
    a
}

pub fn shapiro_wilk(x: &[f64]) -> Result<ShapiroResult> {
    let n = x.len();
    if n < 3 {
        return Err(Error::SampleTooSmall(n));
    }
    if n > 5000 {
        return Err(Error::SampleTooLarge(n));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("shapiro-wilk input".into()));
    }
    let mut xs = x.to_vec();
    xs.sort_by(f64::total_cmp);
    let range = xs[n - 1] - xs[0];
    if !(range > 0.0) {
        return Err(Error::ZeroRange);
    }

    let a = weights(n);
    // full coefficient vector, negative on the lower half
    let coef: Vec<f64> = (0..n)
        .map(|i| {
            let j = n - 1 - i;
            match i.cmp(&j) {
                std::cmp::Ordering::Less => -a[i],
                std::cmp::Ordering::Greater => a[j],
                std::cmp::Ordering::Equal => 0.0,
            }
        })
        .collect();

    // squared correlation of the scaled data with the coefficients, kept as
    // 1 - W to retain precision near W = 1
    let an = n as f64;
    let scaled: Vec<f64> = xs.iter().map(|v| v / range).collect();
    let mean_x = scaled.iter().sum::<f64>() / an;
    let mean_a = coef.iter().sum::<f64>() / an;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (c, v) in coef.iter().zip(&scaled) {
        let da = c - mean_a;
        let dx = v - mean_x;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    let p_value = if n == 3 {
        // exact: 6/pi * (asin(sqrt(W)) - pi/3)
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3);
        p.clamp(0.0, 1.0)
    } else {
        let mut y = w1.ln();
        let (m, s) = if n <= 11 {
            let gamma = poly(&G, an);
            if y >= gamma {
                return Ok(ShapiroResult { w, p_value: 1e-99, n });
            }
            y = -(gamma - y).ln();
            (poly(&C3, an), poly(&C4, an).exp())
        } else {
            let ln_n = an.ln();
            (poly(&C5, ln_n), poly(&C6, ln_n).exp())
        };
        normal_sf((y - m) / s)
    };
    Ok(ShapiroResult { w, p_value, n })
}
