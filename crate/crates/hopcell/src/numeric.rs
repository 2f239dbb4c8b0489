//! Shared numerical routines: adaptive Gauss-Kronrod quadrature on finite
//! and semi-infinite intervals, a scanned golden-section maximizer and
//! compensated summation.

use std::collections::BinaryHeap;

use thiserror::Error;

/// Default relative tolerance for quadrature.
pub const QUAD_REL_TOL: f64 = 1e-8;
/// Default absolute tolerance for quadrature.
pub const QUAD_ABS_TOL: f64 = 1e-12;

const MAX_SEGMENTS: usize = 4096;

#[derive(Debug, Clone, Error)]
pub enum NumericError {
    #[error(
        "quadrature did not converge in {context}: estimate {estimate:.6e}, \
         error bound {abs_error:.3e} after {evaluations} evaluations"
    )]
    NonConvergence {
        context: &'static str,
        estimate: f64,
        abs_error: f64,
        evaluations: usize,
    },
    #[error("invalid integration interval [{lo}, {hi}] in {context}")]
    BadInterval {
        context: &'static str,
        lo: f64,
        hi: f64,
    },
}

/// Integral estimate together with its error bound and cost.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const XGK: [f64; 7] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One Gauss-Kronrod 15(7) evaluation; returns the Kronrod estimate and
/// |K15 - G7| as a (conservative) error proxy.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Segment {
    err: f64,
    value: f64,
    lo: f64,
    hi: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
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
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive Gauss-Kronrod integration of `f` over the finite interval
/// `[lo, hi]`, bisecting the segment with the largest error bound until
/// the global bound meets `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    abs_tol: f64,
    context: &'static str,
) -> Result<Quad, NumericError> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(NumericError::BadInterval { context, lo, hi });
    }
    if lo == hi {
        return Ok(Quad {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&f, lo, hi);
    heap.push(Segment {
        err: e,
        value: v,
        lo,
        hi,
    });
    let mut evaluations = 15usize;
    loop {
        let total: f64 = heap.iter().map(|s| s.value).sum();
        let err: f64 = heap.iter().map(|s| s.err).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Quad {
                value: total,
                abs_error: err,
                evaluations,
            });
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(NumericError::NonConvergence {
                context,
                estimate: total,
                abs_error: err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval no longer splittable in f64; accept what we have.
            heap.push(worst);
            let total: f64 = heap.iter().map(|s| s.value).sum();
            let err: f64 = heap.iter().map(|s| s.err).sum();
            return Ok(Quad {
                value: total,
                abs_error: err,
                evaluations,
            });
        }
        let (v1, e1) = gk15(&f, worst.lo, mid);
        let (v2, e2) = gk15(&f, mid, worst.hi);
        evaluations += 30;
        heap.push(Segment {
            err: e1,
            value: v1,
            lo: worst.lo,
            hi: mid,
        });
        heap.push(Segment {
            err: e2,
            value: v2,
            lo: mid,
            hi: worst.hi,
        });
    }
}

/// Integrates `f` over `[0, inf)` through the exponential substitution
/// `x = e^u - 1`, expanding the truncation point until the outermost
/// window stops contributing.  Requires `f` to decay faster than `1/x`.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    rel_tol: f64,
    abs_tol: f64,
    context: &'static str,
) -> Result<Quad, NumericError> {
    let g = |u: f64| {
        let eu = u.exp();
        f(eu - 1.0) * eu
    };
    let mut value = 0.0;
    let mut abs_error = 0.0;
    let mut evaluations = 0usize;
    // Windows [0,1], [1,2], [2,4], ... in the substituted variable.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    loop {
        let q = integrate_adaptive(&g, lo, hi, rel_tol, abs_tol, context)?;
        value += q.value;
        abs_error += q.abs_error;
        evaluations += q.evaluations;
        let tail_cut = abs_tol.max(rel_tol * value.abs()) * 1e-2;
        if hi >= 64.0 && q.value.abs() <= tail_cut {
            return Ok(Quad {
                value,
                abs_error,
                evaluations,
            });
        }
        if hi > 4096.0 {
            return Err(NumericError::NonConvergence {
                context,
                estimate: value,
                abs_error,
                evaluations,
            });
        }
        lo = hi;
        hi *= 2.0;
    }
}

/// Maximizes `f` over `[lo, hi]` by a uniform scan followed by a
/// golden-section refinement of the best bracket.  The scan makes the
/// search robust when `f` is not unimodal; `f` must be continuous.
/// Returns `(argmax, max)`.
pub fn scan_golden_max<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    scan_points: usize,
    x_tol: f64,
) -> (f64, f64) {
    assert!(hi > lo && scan_points >= 3);
    let n = scan_points;
    let step = (hi - lo) / (n - 1) as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    let mut best_x = lo;
    for i in 0..n {
        let x = lo + step * i as f64;
        let v = f(x);
        if v > best_v {
            best_v = v;
            best_i = i;
            best_x = x;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    // Golden-section on the bracket around the scan winner.
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > x_tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    if fm >= best_v {
        (xm, fm)
    } else {
        (best_x, best_v)
    }
}

/// Kahan-compensated accumulator, used wherever replication results are
/// reduced so that totals do not depend on summation granularity.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finite_polynomial_is_exact() {
        let q = integrate_adaptive(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 1e-14, "poly").unwrap();
        assert_relative_eq!(q.value, 8.0, max_relative = 1e-12);
    }

    #[test]
    fn semi_infinite_exponential() {
        let q = integrate_semi_infinite(|x| (-x).exp(), 1e-10, 1e-14, "exp").unwrap();
        assert_relative_eq!(q.value, 1.0, max_relative = 1e-9);
        assert!(q.abs_error < 1e-6);
    }

    #[test]
    fn semi_infinite_gaussian_moment() {
        // int_0^inf x e^{-x^2/2} dx = 1
        let q = integrate_semi_infinite(|x| x * (-0.5 * x * x).exp(), 1e-10, 1e-14, "gauss")
            .unwrap();
        assert_relative_eq!(q.value, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn semi_infinite_heavy_tail() {
        // int_0^inf dx/(1+x^2) = pi/2, slow polynomial decay.
        let q =
            integrate_semi_infinite(|x| 1.0 / (1.0 + x * x), 1e-10, 1e-14, "lorentz").unwrap();
        assert_relative_eq!(q.value, std::f64::consts::FRAC_PI_2, max_relative = 1e-8);
    }

    #[test]
    fn bad_interval_is_reported() {
        let err = integrate_adaptive(|x| x, 1.0, 0.0, 1e-8, 1e-12, "bad").unwrap_err();
        assert!(matches!(err, NumericError::BadInterval { .. }));
    }

    #[test]
    fn golden_finds_interior_maximum() {
        let (x, v) = scan_golden_max(|x| -(x - 0.7) * (x - 0.7), 0.0, 2.0, 64, 1e-10);
        assert_relative_eq!(x, 0.7, epsilon = 1e-6);
        assert_relative_eq!(v, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn golden_survives_multimodal_objective() {
        // Global maximum near x = 3 hides behind a local one near 0.8.
        let f = |x: f64| {
            (-0.5 * (x - 0.8) * (x - 0.8)).exp() + 2.0 * (-2.0 * (x - 3.0) * (x - 3.0)).exp()
        };
        let (x, v) = scan_golden_max(f, 0.0, 4.0, 64, 1e-10);
        // Brute-force reference argmax.
        let (mut bx, mut bv) = (0.0, f64::NEG_INFINITY);
        for i in 0..=1_000_000 {
            let t = 4.0 * i as f64 / 1e6;
            let ft = f(t);
            if ft > bv {
                bv = ft;
                bx = t;
            }
        }
        assert_relative_eq!(x, bx, epsilon = 1e-4);
        assert!(v >= bv - 1e-9);
    }

    #[test]
    fn golden_handles_boundary_maximum() {
        let (x, v) = scan_golden_max(|x| x, 0.0, 1.0, 16, 1e-12);
        assert_relative_eq!(x, 1.0, epsilon = 1e-9);
        assert_relative_eq!(v, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn kahan_compensates_small_terms() {
        let mut k = KahanSum::new();
        k.add(1.0);
        for _ in 0..10_000_000 {
            k.add(1e-16);
        }
        assert_relative_eq!(k.value(), 1.0 + 1e-9, max_relative = 1e-12);
    }
}
