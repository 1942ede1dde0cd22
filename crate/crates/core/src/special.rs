//! Shared numeric kernels: log-gamma, log-sum-exp, and the regularized
//! incomplete Beta function with its inverse.

use crate::error::{Error, Result};

pub use statrs::function::gamma::ln_gamma;

/// log(exp(a) + exp(b)) without overflow.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log Σ exp(x_i) over a slice, NEG_INFINITY for an empty or all-(-inf) input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY || hi.is_nan() {
        return hi;
    }
    let sum: f64 = xs.iter().map(|&x| (x - hi).exp()).sum();
    hi + sum.ln()
}

/// log B(a, b).
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Double-double value (~31 significant digits), used where alternating
/// sums amplify f64 rounding past the tolerances of the exact posteriors.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> DoubleDouble {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    /// Exact representation of an unsigned integer up to 2^106.
    pub fn from_u128(x: u128) -> DoubleDouble {
        let hi = x as f64;
        let lo = (x as i128 - hi as i128) as f64;
        DoubleDouble { hi, lo }
    }

    fn quick_two_sum(a: f64, b: f64) -> DoubleDouble {
        let s = a + b;
        DoubleDouble { hi: s, lo: b - (s - a) }
    }

    fn two_sum(a: f64, b: f64) -> DoubleDouble {
        let s = a + b;
        let bb = s - a;
        DoubleDouble { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn two_prod(a: f64, b: f64) -> DoubleDouble {
        let p = a * b;
        DoubleDouble { hi: p, lo: a.mul_add(b, -p) }
    }

    pub fn add(self, other: DoubleDouble) -> DoubleDouble {
        let s = Self::two_sum(self.hi, other.hi);
        Self::quick_two_sum(s.hi, s.lo + self.lo + other.lo)
    }

    pub fn sub(self, other: DoubleDouble) -> DoubleDouble {
        self.add(DoubleDouble { hi: -other.hi, lo: -other.lo })
    }

    pub fn mul(self, other: DoubleDouble) -> DoubleDouble {
        let p = Self::two_prod(self.hi, other.hi);
        Self::quick_two_sum(p.hi, p.lo + self.hi * other.lo + self.lo * other.hi)
    }

    pub fn div(self, other: DoubleDouble) -> DoubleDouble {
        let q1 = self.hi / other.hi;
        let r = self.sub(DoubleDouble::from_f64(q1).mul(other));
        let q2 = (r.hi + r.lo) / other.hi;
        Self::quick_two_sum(q1, q2)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Error-free sum of two f64 values.
    pub fn from_sum(a: f64, b: f64) -> DoubleDouble {
        Self::two_sum(a, b)
    }

    /// Error-free product of two f64 values.
    pub fn from_prod(a: f64, b: f64) -> DoubleDouble {
        Self::two_prod(a, b)
    }
}

/// Continued fraction for the incomplete Beta function (modified Lentz).
fn beta_cont_frac(a: f64, b: f64, x: f64) -> Result<f64> {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::Numerical {
        context: "beta_cont_frac",
        message: format!("no convergence for a={a}, b={b}, x={x}"),
    })
}

/// Regularized incomplete Beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::domain("reg_inc_beta", format!("shapes must be positive, got ({a}, {b})")));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cont_frac(a, b, x)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cont_frac(b, a, 1.0 - x)? / b)
    }
}

/// Inverse of I_x(a, b) in x: bisection bracket followed by Newton polish.
///
/// Accuracy target on the quantile is 1e-10.
pub fn beta_quantile(a: f64, b: f64, p: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::domain("beta_quantile", format!("shapes must be positive, got ({a}, {b})")));
    }
    if p <= 0.0 {
        return Ok(0.0);
    }
    if p >= 1.0 {
        return Ok(1.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut x = 0.5_f64;
    for _ in 0..70 {
        x = 0.5 * (lo + hi);
        if reg_inc_beta(a, b, x)? > p {
            hi = x;
        } else {
            lo = x;
        }
    }
    // Newton polish with the Beta density as the derivative.
    let ln_b = ln_beta(a, b);
    for _ in 0..8 {
        let f = reg_inc_beta(a, b, x)? - p;
        if f.abs() < 1e-15 {
            break;
        }
        let ln_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_b;
        let step = f * (-ln_pdf).exp();
        if !step.is_finite() {
            break;
        }
        let next = x - step;
        if next <= lo || next >= hi {
            break;
        }
        x = next;
    }
    Ok(x)
}
