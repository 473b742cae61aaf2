//! Gamma-function primitives.
//!
//! The reciprocal gamma function is the primitive rather than Γ itself:
//! the expansions of the Mittag-Leffler function divide by Γ at arguments
//! that land on its poles, and `1/Γ` is an entire function that is exactly
//! zero there.

use crate::dd::Dd;
use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEFFS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_049e-4,
    2.174_396_181_152_126_4e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_141e-5,
    3.689_918_265_953_162_4e-6,
];
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// `sin(pi x)` with exact zeros at integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// `cos(pi x)` with exact zeros at half-integers.
pub fn cos_pi(x: f64) -> f64 {
    sin_pi(x + 0.5)
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

fn lanczos_sum_c(z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += *c / (z + k as f64);
    }
    acc
}

/// `ln Γ(z)` for `Re z >= 0.5`, some branch (only used under `exp`).
fn ln_gamma_right(z: Complex64) -> Complex64 {
    let zm1 = z - 1.0;
    let t = zm1 + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (zm1 + 0.5) * t.ln() - t + lanczos_sum_c(zm1).ln()
}

fn sin_pi_c(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    Complex64::new(sin_pi(x) * (PI * y).cosh(), cos_pi(x) * (PI * y).sinh())
}

/// `1/Γ(z)` for complex `z`; exactly zero at `z = 0, -1, -2, ...`.
pub fn reciprocal_gamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return Complex64::new(rgamma_real(z.re), 0.0);
    }
    if z.re >= 0.5 {
        (-ln_gamma_right(z)).exp()
    } else {
        // reflection: 1/Γ(z) = sin(pi z) Γ(1 - z) / pi
        let s = sin_pi_c(z);
        (ln_gamma_right(1.0 - z) + (s / PI).ln()).exp()
    }
}

fn gamma_small(x: f64) -> f64 {
    // Γ(x) for x in [0.5, 3), evaluated without the log form.
    let xm1 = x - 1.0;
    let t = xm1 + LANCZOS_G + 0.5;
    let mut a = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (xm1 + k as f64);
    }
    (2.0 * PI).sqrt() * t.powf(xm1 + 0.5) * (-t).exp() * a
}

/// `ln |Γ(x)|` for real `x > 0`.
pub fn ln_gamma_real(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x
        return ln_gamma_real(x + 1.0) - x.ln();
    }
    let xm1 = x - 1.0;
    let t = xm1 + LANCZOS_G + 0.5;
    let mut a = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (xm1 + k as f64);
    }
    HALF_LN_TWO_PI + (xm1 + 0.5) * t.ln() - t + a.ln()
}

/// `1/Γ(x)` for real `x`; exactly zero at non-positive integers.
pub fn rgamma_real(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x == 1.0 || x == 2.0 {
        return 1.0;
    }
    if x < 0.5 {
        // reflection: 1/Γ(x) = sin(pi x) Γ(1 - x) / pi
        let s = sin_pi(x);
        let one_minus = 1.0 - x;
        if one_minus < 30.0 {
            return s / PI / rgamma_real(one_minus);
        }
        let mag = ln_gamma_real(one_minus) + (s.abs() / PI).ln();
        return s.signum() * mag.exp();
    }
    if x < 3.0 {
        return 1.0 / gamma_small(x);
    }
    if x < 30.0 {
        // reduce to [2, 3): Γ(x) = Γ(f) (f)(f+1)...(x-1)
        let n = (x - 2.0).floor();
        let f = x - n;
        let mut prod = 1.0;
        let mut y = f;
        while y < x {
            prod *= y;
            y += 1.0;
        }
        return 1.0 / (gamma_small(f) * prod);
    }
    (-ln_gamma_real(x)).exp()
}

/// Taylor coefficients of `1/Γ(1 + y)` at `y = 0`, as double-double pairs.
const RGAMMA_TAYLOR: [(f64, f64); 34] = [
(1.0, 0.0),
    (0.5772156649015329, -4.942915152430645e-18),
    (-0.6558780715202539, 2.137185197068536e-17),
    (-0.04200263503409524, 1.4920306285650505e-18),
    (0.16653861138229148, 1.0189144546842026e-17),
    (-0.04219773455554433, -3.3579992682480134e-18),
    (-0.009621971527876973, -5.300031368830263e-19),
    (0.0072189432466631, -3.6006537063394283e-19),
    (-0.0011651675918590652, 5.659947853880981e-20),
    (-0.00021524167411495098, 2.3758686180729364e-21),
    (0.0001280502823881162, -9.359124499198967e-21),
    (-2.013485478078824e-05, 3.0488773972037385e-23),
    (-1.2504934821426706e-06, -2.66214092271898e-23),
    (1.133027231981696e-06, -4.622235212104869e-23),
    (-2.056338416977607e-07, -3.0061601618645134e-24),
    (6.116095104481416e-09, -2.693458298171306e-25),
    (5.002007644469223e-09, -1.538123614056751e-26),
    (-1.18127457048702e-09, -1.0052356155716208e-25),
    (1.0434267116911005e-10, -2.9298419956825035e-27),
    (7.782263439905071e-12, 4.397255556595848e-28),
    (-3.696805618642206e-12, 2.7050034921703885e-28),
    (5.100370287454476e-13, 2.253001461085878e-29),
    (-2.0583260535665066e-14, -1.4747481491954336e-30),
    (-5.348122539423018e-15, -1.6208384686356568e-31),
    (1.2267786282382608e-15, -5.072915146023867e-32),
    (-1.1812593016974588e-16, 6.422257838149681e-33),
    (1.1866922547516004e-18, -4.2037265494226014e-35),
    (1.4123806553180319e-18, -7.576946701116294e-35),
    (-2.29874568443537e-19, 1.3335481917069145e-36),
    (1.7144063219273374e-20, 5.230715150426935e-38),
    (1.337351730493693e-22, 2.6434059649079228e-39),
    (-2.0542335517666728e-22, 3.6856892424568953e-39),
    (2.736030048608e-23, -2.8599315416397774e-39),
    (-1.7323564459105165e-24, -1.7540883508197598e-40),
];

/// `1/Γ(x)` in double-double for a double-double `x > 0`.
///
/// Below 160 the argument is shifted into `[0.5, 1.5)` by exact recurrence
/// and the Taylor series of `1/Γ(1 + y)` is summed; beyond that the `f64`
/// value is returned.
pub(crate) fn rgamma_dd(x: Dd) -> Dd {
    debug_assert!(x.hi > 0.0);
    if x.hi > 160.0 {
        return Dd::from_f64(rgamma_real(x.to_f64()));
    }
    if x.hi < 0.5 {
        return rgamma_dd(x + Dd::ONE) * x;
    }
    let n = (x.hi - 0.5).floor();
    let f = x - Dd::from_f64(n);
    let y = f - Dd::ONE;
    let mut acc = Dd::ZERO;
    for &(hi, lo) in RGAMMA_TAYLOR.iter().rev() {
        acc = acc * y + Dd { hi, lo };
    }
    if n == 0.0 {
        return acc;
    }
    let mut prod = f;
    for i in 1..n as usize {
        prod = prod * (f + Dd::from_f64(i as f64));
    }
    acc / prod
}

/// `Γ(x)` for real `x` (infinite at the poles).
pub fn gamma_real(x: f64) -> f64 {
    1.0 / rgamma_real(x)
}
