//! Globally adaptive Gauss–Kronrod quadrature (10-point Gauss embedded in a
//! 21-point Kronrod rule).
//!
//! The integrator keeps a heap of subintervals ordered by their error
//! estimate and bisects the worst one until the summed error drops below
//! `max(abs_tol, rel_tol * |I|)` or the result is limited by roundoff.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Published 21-point Kronrod nodes and weights, kept at full tabulated precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
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

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = 0.0;
    let mut kronrod = WGK[10] * fc;
    let mut abs_k = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_value = abs_k * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_value > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_value);
    }
    Segment { a, b, value, error, abs_value }
}

/// Adaptive integrator configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self { abs_tol: 0.0, rel_tol: 1e-12, max_segments: 4000 }
    }
}

impl Integrator {
    pub fn new(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_segments(mut self, max_segments: usize) -> Self {
        self.max_segments = max_segments;
        self
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Estimate> {
        self.integrate_with_breaks(f, &[a, b])
    }

    /// Integrate over `[points[0], points[last]]` with `points` as the initial
    /// subdivision. Use this for known kinks, steps or oscillation periods.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<Estimate> {
        if points.len() < 2 {
            return Err(Error::Domain("integration needs at least two break points".into()));
        }
        if points.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Domain("integration break points must be nondecreasing".into()));
        }
        let mut heap = BinaryHeap::with_capacity(points.len() + 16);
        let mut evaluations = 0;
        for w in points.windows(2) {
            if w[1] > w[0] {
                heap.push(kronrod21(&f, w[0], w[1]));
                evaluations += 21;
            }
        }
        let mut limit = self.max_segments.max(heap.len() + 1);
        let (mut value, mut error, mut abs_value) = heap
            .iter()
            .fold((0.0, 0.0, 0.0), |acc, s| (acc.0 + s.value, acc.1 + s.error, acc.2 + s.abs_value));
        loop {
            let tol = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= tol || error <= 100.0 * f64::EPSILON * abs_value {
                // Resum to shed the drift of the running totals.
                let value = heap.iter().map(|s| s.value).sum();
                return Ok(Estimate { value, error, evaluations });
            }
            if heap.len() >= limit {
                return Err(Error::Quadrature { achieved: error, requested: tol });
            }
            let Some(worst) = heap.pop() else {
                return Ok(Estimate { value: 0.0, error: 0.0, evaluations });
            };
            let mid = 0.5 * (worst.a + worst.b);
            if !(mid > worst.a && mid < worst.b) {
                // Interval cannot be split further in floating point.
                error -= worst.error;
                heap.push(Segment { error: 0.0, ..worst });
                limit = limit.saturating_sub(1);
                continue;
            }
            let left = kronrod21(&f, worst.a, mid);
            let right = kronrod21(&f, mid, worst.b);
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            abs_value += left.abs_value + right.abs_value - worst.abs_value;
            error = error.max(0.0);
            heap.push(left);
            heap.push(right);
            evaluations += 42;
        }
    }

    /// Integrate `f` over `[a, ∞)` through the map `x = a + t / (1 - t)`.
    pub fn integrate_to_infinity<F: Fn(f64) -> f64>(&self, f: F, a: f64) -> Result<Estimate> {
        let g = |t: f64| {
            let one_minus = 1.0 - t;
            if one_minus <= 0.0 {
                return 0.0;
            }
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        self.integrate(g, 0.0, 1.0)
    }
}

/// Non-adaptive 21-point Kronrod rule on `[a, b]`; exact for polynomials of
/// degree up to 31.
pub fn kronrod_rule<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = WGK[10] * f(center);
    for j in 0..10 {
        let dx = half * XGK[j];
        sum += WGK[j] * (f(center - dx) + f(center + dx));
    }
    sum * half
}

/// Convenience wrapper: integrate with the default integrator at `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Estimate> {
    Integrator::new(rel_tol).integrate(f, a, b)
}
