//! Adaptive Gauss–Kronrod (7/15) quadrature and composite Simpson helpers.
//!
//! Infinite endpoints are handled by the substitution `x = t / (1 - t^2)` on
//! `(-1, 1)` (both ends infinite) or `x = a + t / (1 - t)` on `[0, 1)`.

use std::collections::BinaryHeap;

use crate::error::{Result, TulaError};

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the 7-point rule (nodes are XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = h * x;
        let s = f(c - dx) + f(c + dx);
        kronrod += w * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    let value = kronrod * h;
    let error = ((kronrod - gauss) * h).abs();
    (value, error)
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
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive GK15 on a finite interval. Subdivides the segment with
/// the largest error estimate until the total error is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate_finite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(TulaError::Quadrature(format!(
            "non-finite interval [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    const MAX_SEGMENTS: usize = 4000;
    let (v, e) = gk15(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a: lo,
        b: hi,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut total_err = e;
    let mut evaluations = 15;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_SEGMENTS {
            break;
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        evaluations += 30;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(s, e), seg| (s + seg.value, e + seg.error));
    if !value.is_finite() {
        return Err(TulaError::Quadrature(
            "integrand produced a non-finite value".into(),
        ));
    }
    if error > 1e3 * abs_tol.max(rel_tol * value.abs()) {
        return Err(TulaError::Quadrature(format!(
            "no convergence: estimate {value} with error {error}"
        )));
    }
    Ok(Integral {
        value: sign * value,
        error,
        evaluations,
    })
}

/// Adaptive quadrature on an interval whose endpoints may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate_finite(f, a, b, abs_tol, rel_tol),
        (false, false) => {
            if a > b {
                return integrate(f, b, a, abs_tol, rel_tol).map(|i| Integral {
                    value: -i.value,
                    ..i
                });
            }
            let g = |t: f64| {
                let den = 1.0 - t * t;
                let x = t / den;
                let jac = (1.0 + t * t) / (den * den);
                guard(f(x) * jac)
            };
            integrate_finite(g, -1.0, 1.0, abs_tol, rel_tol)
        }
        (true, false) => {
            let g = |t: f64| {
                let den = 1.0 - t;
                guard(f(a + t / den) / (den * den))
            };
            integrate_finite(g, 0.0, 1.0, abs_tol, rel_tol)
        }
        (false, true) => {
            let g = |t: f64| {
                let den = 1.0 - t;
                guard(f(b - t / den) / (den * den))
            };
            integrate_finite(g, 0.0, 1.0, abs_tol, rel_tol)
        }
    }
}

// The GK nodes never touch the endpoints, but the Jacobian can still overflow
// right next to them while the integrand underflows to zero.
fn guard(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v
    }
}

/// Composite Simpson rule on uniformly spaced samples. `values.len()` must be
/// odd and at least 3.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    debug_assert!(values.len() >= 3 && values.len() % 2 == 1);
    let n = values.len() - 1;
    let mut acc = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

/// Composite Simpson rule for `f` on `[a, b]` with `panels` (rounded up to
/// even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let values: Vec<f64> = (0..=n).map(|i| f(a + h * i as f64)).collect();
    simpson_uniform(&values, h)
}
