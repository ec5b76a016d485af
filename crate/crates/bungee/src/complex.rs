//! Total extended complex arithmetic.
//!
//! A value is either a finite complex number or the point at infinity.
//! Finite values never carry NaN or IEEE infinities: any result whose
//! modulus exceeds the overflow cap is identified with [`ExtComplex::Infinity`],
//! and the handful of genuinely indeterminate forms (`∞ + ∞`, `0 · ∞`,
//! `0 / 0`, `∞ / ∞`, `exp(∞)`, ...) surface as [`Indeterminate`] errors
//! instead of silently propagating NaN.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default overflow cap `C`: finite values with modulus beyond this are
/// identified with the point at infinity.
pub const DEFAULT_CAP: f64 = 1e100;

/// Largest cap the arithmetic accepts. Component sums and products of
/// cap-bounded values must stay representable in an `f64`.
pub const MAX_CAP: f64 = 1e300;

/// An indeterminate form was requested (e.g. `0 / 0` or `∞ · 0`).
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("indeterminate form: {op}")]
pub struct Indeterminate {
    pub op: &'static str,
}

fn indet(op: &'static str) -> Indeterminate {
    Indeterminate { op }
}

/// A complex number extended with a point-at-infinity sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtComplex {
    Finite { re: f64, im: f64 },
    Infinity,
}

pub use ExtComplex::Infinity;

impl ExtComplex {
    pub const ZERO: ExtComplex = ExtComplex::Finite { re: 0.0, im: 0.0 };
    pub const ONE: ExtComplex = ExtComplex::Finite { re: 1.0, im: 0.0 };
    pub const I: ExtComplex = ExtComplex::Finite { re: 0.0, im: 1.0 };

    /// Build a finite value. Panics on NaN components; callers constructing
    /// values from computation should go through [`ExtComplex::make`].
    pub fn finite(re: f64, im: f64) -> ExtComplex {
        assert!(!re.is_nan() && !im.is_nan(), "finite value from NaN");
        ExtComplex::Finite { re, im }
    }

    /// Normalize raw components under the overflow cap `cap`:
    /// NaN is indeterminate, anything with modulus beyond `cap` becomes
    /// `Infinity`, everything else is stored as-is.
    pub fn make(re: f64, im: f64, cap: f64) -> Result<ExtComplex, Indeterminate> {
        if re.is_nan() || im.is_nan() {
            return Err(indet("NaN result"));
        }
        if !re.is_finite() || !im.is_finite() || re.hypot(im) > cap {
            return Ok(ExtComplex::Infinity);
        }
        Ok(ExtComplex::Finite { re, im })
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtComplex::Finite { .. })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtComplex::Finite { re, im } if *re == 0.0 && *im == 0.0)
    }

    /// Modulus; `Infinity` compares greater than every finite modulus.
    pub fn modulus(&self) -> f64 {
        match self {
            ExtComplex::Finite { re, im } => re.hypot(*im),
            ExtComplex::Infinity => f64::INFINITY,
        }
    }

    pub fn re(&self) -> Option<f64> {
        match self {
            ExtComplex::Finite { re, .. } => Some(*re),
            ExtComplex::Infinity => None,
        }
    }

    pub fn im(&self) -> Option<f64> {
        match self {
            ExtComplex::Finite { im, .. } => Some(*im),
            ExtComplex::Infinity => None,
        }
    }
}

impl std::fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtComplex::Finite { re, im } => {
                if *im >= 0.0 {
                    write!(f, "{re}+{im}i")
                } else {
                    write!(f, "{re}-{}i", -im)
                }
            }
            ExtComplex::Infinity => write!(f, "inf"),
        }
    }
}

pub fn ext_add(a: ExtComplex, b: ExtComplex, cap: f64) -> Result<ExtComplex, Indeterminate> {
    use ExtComplex::*;
    match (a, b) {
        (Infinity, Infinity) => Err(indet("inf + inf")),
        (Infinity, _) | (_, Infinity) => Ok(Infinity),
        (Finite { re: ar, im: ai }, Finite { re: br, im: bi }) => {
            ExtComplex::make(ar + br, ai + bi, cap)
        }
    }
}

pub fn ext_sub(a: ExtComplex, b: ExtComplex, cap: f64) -> Result<ExtComplex, Indeterminate> {
    ext_add(a, ext_neg(b), cap)
}

pub fn ext_neg(a: ExtComplex) -> ExtComplex {
    match a {
        ExtComplex::Finite { re, im } => ExtComplex::Finite { re: -re, im: -im },
        ExtComplex::Infinity => ExtComplex::Infinity,
    }
}

pub fn ext_mul(a: ExtComplex, b: ExtComplex, cap: f64) -> Result<ExtComplex, Indeterminate> {
    use ExtComplex::*;
    match (a, b) {
        (Infinity, z) | (z, Infinity) => {
            if z.is_zero() {
                Err(indet("0 * inf"))
            } else {
                Ok(Infinity)
            }
        }
        (Finite { re: ar, im: ai }, Finite { re: br, im: bi }) => {
            // |ab| = |a||b|; check before forming products so intermediate
            // component arithmetic cannot overflow to IEEE infinity.
            let m = a.modulus() * b.modulus();
            if !m.is_finite() || m > 2.0 * cap {
                return Ok(Infinity);
            }
            ExtComplex::make(ar * br - ai * bi, ar * bi + ai * br, cap)
        }
    }
}

pub fn ext_div(a: ExtComplex, b: ExtComplex, cap: f64) -> Result<ExtComplex, Indeterminate> {
    use ExtComplex::*;
    match (a, b) {
        (Infinity, Infinity) => Err(indet("inf / inf")),
        (Infinity, _) => Ok(Infinity),
        (_, Infinity) => Ok(ExtComplex::ZERO),
        (a, b) if b.is_zero() => {
            if a.is_zero() {
                Err(indet("0 / 0"))
            } else {
                Ok(Infinity)
            }
        }
        (Finite { re: ar, im: ai }, Finite { re: br, im: bi }) => {
            let m = a.modulus() / b.modulus();
            if !m.is_finite() || m > 2.0 * cap {
                return Ok(Infinity);
            }
            // Smith's algorithm; the textbook |b|^2 formula underflows for
            // tiny denominators.
            let (re, im) = if br.abs() >= bi.abs() {
                let r = bi / br;
                let den = br + bi * r;
                ((ar + ai * r) / den, (ai - ar * r) / den)
            } else {
                let r = br / bi;
                let den = br * r + bi;
                ((ar * r + ai) / den, (ai * r - ar) / den)
            };
            ExtComplex::make(re, im, cap)
        }
    }
}

pub fn ext_exp(a: ExtComplex, cap: f64) -> Result<ExtComplex, Indeterminate> {
    match a {
        ExtComplex::Infinity => Err(indet("exp(inf)")),
        ExtComplex::Finite { re, im } => {
            // |exp(z)| = e^re
            if re > cap.ln() {
                return Ok(ExtComplex::Infinity);
            }
            let r = re.exp();
            ExtComplex::make(r * im.cos(), r * im.sin(), cap)
        }
    }
}

pub fn ext_sin(a: ExtComplex, cap: f64) -> Result<ExtComplex, Indeterminate> {
    match a {
        ExtComplex::Infinity => Err(indet("sin(inf)")),
        ExtComplex::Finite { re, im } => {
            // |sin(x+iy)| <= cosh(y); e^|y|/2 already past the cap means Infinity.
            if im.abs() > (2.0 * cap).ln() {
                return Ok(ExtComplex::Infinity);
            }
            ExtComplex::make(re.sin() * im.cosh(), re.cos() * im.sinh(), cap)
        }
    }
}

pub fn ext_cos(a: ExtComplex, cap: f64) -> Result<ExtComplex, Indeterminate> {
    match a {
        ExtComplex::Infinity => Err(indet("cos(inf)")),
        ExtComplex::Finite { re, im } => {
            if im.abs() > (2.0 * cap).ln() {
                return Ok(ExtComplex::Infinity);
            }
            ExtComplex::make(re.cos() * im.cosh(), -re.sin() * im.sinh(), cap)
        }
    }
}

/// Integer power by binary exponentiation; negative exponents go through
/// the reciprocal, so `0^-n` is the pole value `Infinity`.
pub fn ext_pow_int(a: ExtComplex, n: i32, cap: f64) -> Result<ExtComplex, Indeterminate> {
    if a == ExtComplex::Infinity {
        return match n.cmp(&0) {
            std::cmp::Ordering::Greater => Ok(ExtComplex::Infinity),
            std::cmp::Ordering::Less => Ok(ExtComplex::ZERO),
            std::cmp::Ordering::Equal => Err(indet("inf^0")),
        };
    }
    if n < 0 {
        let p = ext_pow_int(a, -n, cap)?;
        return ext_div(ExtComplex::ONE, p, cap);
    }
    let mut result = ExtComplex::ONE;
    let mut base = a;
    let mut e = n as u32;
    while e > 0 {
        if e & 1 == 1 {
            result = ext_mul(result, base, cap)?;
        }
        e >>= 1;
        if e > 0 {
            base = ext_mul(base, base, cap)?;
        }
    }
    Ok(result)
}
