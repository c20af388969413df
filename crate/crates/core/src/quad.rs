//! Adaptive Gauss-Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Globally adaptive G7/K15 integrator: the interval with the largest error
/// estimate is bisected until `error <= max(abs_tol, rel_tol * |value|)`.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

impl Integrator {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<Quadrature> {
        if a == b {
            return Ok(Quadrature {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
            });
        }
        if b < a {
            let q = self.integrate(f, b, a)?;
            return Ok(Quadrature { value: -q.value, ..q });
        }
        let (value, error) = kronrod15(&f, a, b);
        let mut evaluations = 15;
        let mut heap = BinaryHeap::new();
        heap.push(Segment { a, b, value, error });
        let mut total = value;
        let mut total_err = error;
        while total_err > self.abs_tol.max(self.rel_tol * total.abs()) {
            if !total.is_finite() {
                return Err(Error::NonFinite(format!("integrand on [{a}, {b}]")));
            }
            if heap.len() >= self.max_intervals {
                return Err(Error::Quadrature {
                    estimate: total,
                    error: total_err,
                });
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Interval collapsed to machine resolution; accept what we have.
                heap.push(worst);
                break;
            }
            let (v1, e1) = kronrod15(&f, worst.a, mid);
            let (v2, e2) = kronrod15(&f, mid, worst.b);
            evaluations += 30;
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
            heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        }
        // Re-sum to shed the cancellation accumulated by incremental updates.
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("integrand on [{a}, {b}]")));
        }
        Ok(Quadrature {
            value,
            error,
            evaluations,
        })
    }
}

/// Integrate with the default tolerances and return only the value.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    Integrator::default().integrate(f, a, b).map(|q| q.value)
}

/// Composite trapezoid rule on `n` equal panels.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}
