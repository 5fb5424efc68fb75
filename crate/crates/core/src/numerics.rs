//! Special functions and adaptive quadrature used by the analytic formulas.
//!
//! Everything here is pure and allocation-light. The quadrature is a
//! globally adaptive 21-point Gauss-Kronrod scheme (QUADPACK QAG style);
//! the incomplete gamma function uses the power series below `s + 1` and a
//! modified-Lentz continued fraction above it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

/// Tolerances and budget for [`integrate`] / [`integrate_semi_infinite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Number of equal pieces the range is split into before adapting.
    pub initial_pieces: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 4000,
            initial_pieces: 16,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(invalid("quadrature tolerance", "tolerances must be > 0"));
        }
        if self.max_subdivisions == 0 || self.initial_pieces == 0 {
            return Err(invalid("quadrature budget", "subdivision counts must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

// 21-point Kronrod abscissae on [-1, 1] (non-negative half, centre last).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// 10-point Gauss weights, paired with XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
    let f_center = f(center);

    let mut gauss = 0.0;
    let mut kronrod = f_center * WGK[10];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(10).enumerate() {
        let dx = half * x;
        let lo = f(center - dx);
        let hi = f(center + dx);
        fv1[j] = lo;
        fv2[j] = hi;
        kronrod += w * (lo + hi);
        res_abs += w * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
    }

    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let scale = half.abs();
    let value = kronrod * half;
    res_abs *= scale;
    res_asc *= scale;

    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }

    Segment { a, b, value, error }
}

/// Adaptive Gauss-Kronrod integration of `f` over the finite range `[a, b]`.
///
/// Fails with [`Error::QuadratureDiverged`] when the error target
/// `max(abs_tol, rel_tol * |I|)` is not met within the subdivision budget.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature> {
    spec.validate()?;
    if !a.is_finite() || !b.is_finite() {
        return Err(invalid("integration range", "bounds must be finite"));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }

    let pieces = spec.initial_pieces;
    let width = (b - a) / pieces as f64;
    let mut heap = BinaryHeap::with_capacity(pieces + spec.max_subdivisions);
    for k in 0..pieces {
        let lo = a + width * k as f64;
        let hi = if k + 1 == pieces { b } else { a + width * (k + 1) as f64 };
        heap.push(kronrod21(&f, lo, hi));
    }

    let mut subdivisions = 0;
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(invalid("integrand", "produced a non-finite value"));
        }
        let target = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= target {
            return Ok(Quadrature {
                value,
                error,
                subdivisions,
            });
        }

        let worst = heap.pop().expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        let too_narrow = mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b);
        if subdivisions >= spec.max_subdivisions || too_narrow {
            return Err(Error::QuadratureDiverged {
                subdivisions,
                error_estimate: error,
                requested: target,
            });
        }
        heap.push(kronrod21(&f, worst.a, mid));
        heap.push(kronrod21(&f, mid, worst.b));
        subdivisions += 1;
    }
}

/// Integrates over `[0, ∞)` by truncating at `cutoff`.
///
/// The caller picks `cutoff` from the integrand's decay envelope so that the
/// discarded tail is below `spec.abs_tol`; for an `exp(-rho x)` envelope a
/// cutoff of `50 / rho` leaves a tail below `exp(-50)` of the total mass.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, cutoff: f64, spec: &QuadratureSpec) -> Result<Quadrature> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(invalid(
            "tail cutoff",
            format!("must be positive and finite, got {cutoff}"),
        ));
    }
    integrate(f, 0.0, cutoff, spec)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the approximation in its accurate half-plane.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `n!` is exactly representable in an `f64` up to here.
const EXACT_FACTORIAL_MAX: u64 = 20;

/// `ln(n!)`. Exact (to rounding of the final logarithm) for `n <= 20`,
/// log-gamma beyond, so it never overflows.
pub fn log_factorial(n: u64) -> f64 {
    if n <= EXACT_FACTORIAL_MAX {
        let fact: u64 = (1..=n).product();
        (fact as f64).ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 10_000;

/// Upper incomplete gamma function `Γ(s, x) = ∫ₓ^∞ t^(s-1) e^(-t) dt`.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid("gamma shape", format!("must be positive and finite, got {s}")));
    }
    if !(x >= 0.0) {
        return Err(invalid("gamma argument", format!("must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(ln_gamma(s).exp());
    }
    if x.is_infinite() {
        return Ok(0.0);
    }

    if x < s + 1.0 {
        let lower_regularized = gamma_series(s, x)?;
        Ok(ln_gamma(s).exp() * (1.0 - lower_regularized))
    } else {
        let cf = gamma_continued_fraction(s, x)?;
        Ok((s * x.ln() - x).exp() * cf)
    }
}

/// Regularized lower incomplete gamma `P(s, x)` by its power series.
fn gamma_series(s: f64, x: f64) -> Result<f64> {
    let mut denom = s;
    let mut term = 1.0 / s;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            return Ok(sum * (s * x.ln() - x - ln_gamma(s)).exp());
        }
    }
    Err(Error::SeriesNoConvergence("incomplete gamma series"))
}

/// Continued fraction for `e^x x^(-s) Γ(s, x)` by modified Lentz.
fn gamma_continued_fraction(s: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            return Ok(h);
        }
    }
    Err(Error::SeriesNoConvergence("incomplete gamma continued fraction"))
}
