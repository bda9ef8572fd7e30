//! Adaptive Gauss-Kronrod (7/15) quadrature, plus a log-space front end for
//! sharply peaked, unimodal integrands whose values may under- or overflow.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

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
// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
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

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (k, &x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over the union of consecutive intervals between
/// `breakpoints` (which must be sorted), refining the worst segment until the
/// summed error estimate falls below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Integral {
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(&f, w[0], w[1]));
            evaluations += 15;
        }
    }
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || heap.len() >= MAX_SEGMENTS {
            return Integral {
                value,
                error,
                evaluations,
            };
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // cannot split further in floating point
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            continue;
        }
        heap.push(kronrod(&f, worst.lo, mid));
        heap.push(kronrod(&f, mid, worst.hi));
        evaluations += 30;
    }
}

/// `ln ∫ exp(log_f(x)) dx` over `[lo, hi]` for a unimodal `log_f` with its
/// maximum at `mode`. The integrand is rescaled by its peak value and the
/// interval is pre-split where `log_f` has fallen by fixed amounts, so both
/// narrow peaks and long flat tails are resolved. An infinite `hi` is
/// truncated where the integrand has dropped below `e^-60` of its peak.
pub fn log_integrate_unimodal<F: Fn(f64) -> f64>(
    log_f: F,
    lo: f64,
    hi: f64,
    mode: f64,
    rel_tol: f64,
) -> f64 {
    let peak = log_f(mode);
    assert!(peak.is_finite(), "log integrand must be finite at its mode");
    let points = unimodal_breakpoints(&log_f, lo, hi, mode);
    let result = integrate(|x| (log_f(x) - peak).exp(), &points, rel_tol, 0.0);
    peak + result.value.ln()
}

/// Sorted split points for integrating a unimodal `exp(log_f)` over
/// `[lo, hi]`: the ends, the mode, and where `log_f` has dropped from its
/// peak by fixed amounts. An infinite `hi` is replaced by the point where the
/// drop reaches 60.
pub fn unimodal_breakpoints<F: Fn(f64) -> f64>(log_f: &F, lo: f64, hi: f64, mode: f64) -> Vec<f64> {
    const DROPS: [f64; 6] = [0.25, 2.0, 8.0, 20.0, 40.0, 60.0];
    let peak = log_f(mode);
    let mut points = vec![lo, mode];
    if mode < hi {
        for &d in &DROPS {
            match level_crossing(log_f, mode, hi, peak - d) {
                Some(x) => points.push(x),
                None => {
                    if hi.is_finite() {
                        points.push(hi);
                    }
                    break;
                }
            }
        }
    }
    if mode > lo {
        for &d in &DROPS {
            match level_crossing(log_f, mode, lo, peak - d) {
                Some(x) => points.push(x),
                None => break,
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Finds `x` between `from` (where `f(from) > level`) and `toward` with
/// `f(x) = level`, assuming `f` is monotone on that side. `toward` may be
/// infinite, in which case the bracket is grown geometrically.
fn level_crossing<F: Fn(f64) -> f64>(f: &F, from: f64, toward: f64, level: f64) -> Option<f64> {
    let dir = if toward > from { 1.0 } else { -1.0 };
    let (mut inside, mut outside);
    if toward.is_finite() {
        if f(toward) > level {
            return None;
        }
        inside = from;
        outside = toward;
    } else {
        let mut step = 1e-3 * (1.0 + from.abs());
        inside = from;
        loop {
            let x = from + dir * step;
            if f(x) <= level {
                outside = x;
                break;
            }
            inside = x;
            step *= 2.0;
            if step > 1e12 {
                return None;
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if f(mid) > level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Some(0.5 * (inside + outside))
}
