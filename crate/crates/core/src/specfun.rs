//! Scalar special functions used by the detector, rate and covertness code.
//!
//! Everything here is a pure function of its arguments. Gamma-family values
//! are assembled in log space so that shape parameters up to ~10^6 do not
//! overflow.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain("Probability::new", format!("{value} not in [0, 1]")))
        }
    }

    /// Clamps rounding overshoot into `[0, 1]`. Only for values that are
    /// probabilities by construction.
    pub(crate) fn saturating(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

// zeta(k) for k = 2..=15; larger orders are summed directly.
const ZETA: [f64; 14] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_3,
    1.082_323_233_711_138_2,
    1.036_927_755_143_370_0,
    1.017_343_061_984_449_1,
    1.008_349_277_381_922_8,
    1.004_077_356_197_944_3,
    1.002_008_392_826_082_2,
    1.000_994_575_127_818_1,
    1.000_494_188_604_119_5,
    1.000_246_086_553_308_0,
    1.000_122_713_347_578_5,
    1.000_061_248_135_058_7,
    1.000_030_588_236_307_0,
];

fn zeta(k: usize) -> f64 {
    if k <= 15 {
        ZETA[k - 2]
    } else {
        1.0 + (2..24).map(|n| (n as f64).powi(-(k as i32))).sum::<f64>()
    }
}

/// ln Γ(1 + z) for |z| ≤ 0.5, by its Taylor series about z = 0.
fn ln_gamma_1p_small(z: f64) -> f64 {
    let mut sum = -EULER_GAMMA * z;
    let mut zk = -z;
    for k in 2..80 {
        zk *= -z;
        let term = zeta(k) * zk / k as f64;
        sum += term;
        if term.abs() < EPS * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    sum
}

/// Correction term lnΓ(x) − [(x − ½)ln x − x + ½ln 2π] for x ≥ 10.
fn stirling_correction(x: f64) -> f64 {
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("x = {x} must be positive and finite")));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        0.0
    } else if x < 0.5 {
        ln_gamma_1p_small(x) - x.ln()
    } else if x < 1.5 {
        ln_gamma_1p_small(x - 1.0)
    } else if x < 2.5 {
        let z = x - 2.0;
        z.ln_1p() + ln_gamma_1p_small(z)
    } else if x < 10.0 {
        // Shift up into the Stirling regime.
        let mut prod = 1.0;
        let mut y = x;
        while y < 10.0 {
            prod *= y;
            y += 1.0;
        }
        ln_gamma_unchecked(y) - prod.ln()
    } else {
        (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + stirling_correction(x)
    }
}

/// log of x^a e^{-x} / Γ(a), evaluated without cancellation for large `a`.
fn ln_gamma_prefix(a: f64, x: f64) -> f64 {
    if a < 10.0 {
        a * x.ln() - x - ln_gamma_unchecked(a)
    } else {
        let t = (x - a) / a;
        a * (t.ln_1p() - t) + 0.5 * (a / (2.0 * PI)).ln() - stirling_correction(a)
    }
}

fn max_iterations(a: f64) -> usize {
    1_000 + (50.0 * a.sqrt()) as usize
}

/// Regularized lower and upper incomplete gamma functions `(P(a, x), Q(a, x))`.
///
/// The series is used below `x = a + 1` and the Lentz continued fraction for
/// Q above, so that whichever tail is small is computed directly.
pub(crate) fn reg_gamma_pair(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("reg_lower_gamma", format!("shape a = {a} must be positive")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain("reg_lower_gamma", format!("x = {x} must be nonnegative")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let ln_prefix = ln_gamma_prefix(a, x);
    let cap = max_iterations(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..cap {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        let p = (ln_prefix + sum.ln()).exp().min(1.0);
        Ok((p, 1.0 - p))
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=cap {
            let an = -(i as f64) * (i as f64 - a);
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
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        let q = (ln_prefix + h.ln()).exp().min(1.0);
        Ok((1.0 - q, q))
    }
}

/// Regularized lower incomplete gamma function γ(a, x)/Γ(a).
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<Probability> {
    reg_gamma_pair(a, x).map(|(p, _)| Probability::saturating(p))
}

/// Regularized upper tail Γ(a, x)/Γ(a), accurate when it is tiny.
pub(crate) fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    reg_gamma_pair(a, x).map(|(_, q)| q)
}

/// Complementary error function, via erfc(y) = Q(½, y²).
pub(crate) fn erfc(y: f64) -> f64 {
    if y.is_nan() {
        return f64::NAN;
    }
    let (p, q) = reg_gamma_pair(0.5, y * y).expect("shape ½ is always valid");
    if y >= 0.0 {
        q
    } else {
        1.0 + p
    }
}

/// Gaussian tail probability Q(x) = P[N(0, 1) > x].
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of the Gaussian tail function: returns `x` with `Q(x) = p`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("q_inv", format!("p = {p} must lie in (0, 1)")));
    }
    // Acklam's rational approximation to the lower-tail normal quantile,
    // then one Halley step against the erfc-based CDF.
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    // Work with the smaller tail for accuracy; `lower` is P[N < z] = min(p, 1 - p).
    let (lower, flip) = if p <= 0.5 { (p, false) } else { (1.0 - p, true) };
    let mut z = if lower < P_LOW {
        let q = (-2.0 * lower.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = lower - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        let e = 0.5 * erfc(-z * FRAC_1_SQRT_2) - lower;
        let u = e * (2.0 * PI).sqrt() * (0.5 * z * z).exp();
        z -= u / (1.0 + 0.5 * z * u);
    }
    // z is the lower-tail quantile of `lower`; Q^{-1}(p) = -Φ^{-1}(p).
    Ok(if flip { z } else { -z })
}

/// e^x · E1(x) for `x > 0`, the exponentially scaled exponential integral.
///
/// For x > 0, Ei(−x) = −E1(x), so e^{x}·Ei(−x) = −exp_scaled_e1(x).
pub fn exp_scaled_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("exp_scaled_e1", format!("x = {x} must be positive and finite")));
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < EPS * sum.abs() {
                break;
            }
        }
        Ok((-EULER_GAMMA - x.ln() + sum) * x.exp())
    } else {
        let mut b = x + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        Ok(h)
    }
}

/// Erlang density λ^M h^{M−1} e^{−λh} / (M − 1)!, evaluated in log space.
pub fn erlang_pdf(h: f64, m: u32, lambda: f64) -> Result<f64> {
    if m == 0 || !(lambda > 0.0) || !(h >= 0.0) {
        return Err(Error::domain(
            "erlang_pdf",
            format!("need h >= 0, M >= 1, lambda > 0 (h = {h}, M = {m}, lambda = {lambda})"),
        ));
    }
    Ok(erlang_pdf_unchecked(h, m, lambda))
}

pub(crate) fn erlang_pdf_unchecked(h: f64, m: u32, lambda: f64) -> f64 {
    if h == 0.0 {
        return if m == 1 { lambda } else { 0.0 };
    }
    let mf = m as f64;
    let ln_pdf = mf * lambda.ln() + (mf - 1.0) * h.ln() - lambda * h - ln_gamma_unchecked(mf);
    ln_pdf.exp()
}

/// ln 2, re-exported for rate conversions.
pub(crate) const LN2: f64 = LN_2;
