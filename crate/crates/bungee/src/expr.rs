//! Expression trees for semigroup generators.
//!
//! An expression is a function of the single variable `z`, built from
//! complex constants, the arithmetic operators, bounded integer powers,
//! and `exp`/`sin`/`cos`. Trees are immutable; evaluation runs under the
//! extended-complex semantics of [`crate::complex`], and differentiation
//! is symbolic with constant folding as the only simplification.

use crate::complex::{
    ext_add, ext_cos, ext_div, ext_exp, ext_mul, ext_neg, ext_pow_int, ext_sin, ext_sub,
    ExtComplex, Indeterminate,
};

/// Largest allowed `|exponent|` in `PowInt`.
pub const MAX_EXPONENT: i32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// The variable `z`.
    Var,
    /// A finite complex constant.
    Const { re: f64, im: f64 },
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    PowInt(Box<Expr>, i32),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn constant(re: f64, im: f64) -> Expr {
        Expr::Const { re, im }
    }

    pub fn real(re: f64) -> Expr {
        Expr::Const { re, im: 0.0 }
    }

    fn as_const(&self) -> Option<(f64, f64)> {
        match self {
            Expr::Const { re, im } => Some((*re, *im)),
            _ => None,
        }
    }

    fn is_const_val(&self, re: f64, im: f64) -> bool {
        self.as_const() == Some((re, im))
    }

    /// Smart constructors: fold constant operands (and the multiplicative /
    /// additive identities that constant folding of derivatives produces).
    pub fn add(a: Expr, b: Expr) -> Expr {
        if let (Some((ar, ai)), Some((br, bi))) = (a.as_const(), b.as_const()) {
            return Expr::Const { re: ar + br, im: ai + bi };
        }
        if a.is_const_val(0.0, 0.0) {
            return b;
        }
        if b.is_const_val(0.0, 0.0) {
            return a;
        }
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if let (Some((ar, ai)), Some((br, bi))) = (a.as_const(), b.as_const()) {
            return Expr::Const { re: ar - br, im: ai - bi };
        }
        if b.is_const_val(0.0, 0.0) {
            return a;
        }
        if a.is_const_val(0.0, 0.0) {
            return Expr::neg(b);
        }
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if let (Some((ar, ai)), Some((br, bi))) = (a.as_const(), b.as_const()) {
            return Expr::Const { re: ar * br - ai * bi, im: ar * bi + ai * br };
        }
        if a.is_const_val(1.0, 0.0) {
            return b;
        }
        if b.is_const_val(1.0, 0.0) {
            return a;
        }
        if a.is_const_val(0.0, 0.0) || b.is_const_val(0.0, 0.0) {
            return Expr::Const { re: 0.0, im: 0.0 };
        }
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if b.is_const_val(1.0, 0.0) {
            return a;
        }
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow_int(a: Expr, n: i32) -> Expr {
        match n {
            0 => Expr::Const { re: 1.0, im: 0.0 },
            1 => a,
            _ => Expr::PowInt(Box::new(a), n),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        if let Some((re, im)) = a.as_const() {
            return Expr::Const { re: -re, im: -im };
        }
        Expr::Neg(Box::new(a))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Exp(Box::new(a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::Sin(Box::new(a))
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::Cos(Box::new(a))
    }

    /// Evaluate at `z` under overflow cap `cap`.
    pub fn eval(&self, z: ExtComplex, cap: f64) -> Result<ExtComplex, Indeterminate> {
        match self {
            Expr::Var => Ok(z),
            Expr::Const { re, im } => Ok(ExtComplex::finite(*re, *im)),
            Expr::Add(a, b) => ext_add(a.eval(z, cap)?, b.eval(z, cap)?, cap),
            Expr::Sub(a, b) => ext_sub(a.eval(z, cap)?, b.eval(z, cap)?, cap),
            Expr::Mul(a, b) => ext_mul(a.eval(z, cap)?, b.eval(z, cap)?, cap),
            Expr::Div(a, b) => ext_div(a.eval(z, cap)?, b.eval(z, cap)?, cap),
            Expr::PowInt(a, n) => ext_pow_int(a.eval(z, cap)?, *n, cap),
            Expr::Exp(a) => ext_exp(a.eval(z, cap)?, cap),
            Expr::Sin(a) => ext_sin(a.eval(z, cap)?, cap),
            Expr::Cos(a) => ext_cos(a.eval(z, cap)?, cap),
            Expr::Neg(a) => Ok(ext_neg(a.eval(z, cap)?)),
        }
    }

    /// Symbolic derivative with respect to `z`.
    pub fn differentiate(&self) -> Expr {
        match self {
            Expr::Var => Expr::real(1.0),
            Expr::Const { .. } => Expr::real(0.0),
            Expr::Add(a, b) => Expr::add(a.differentiate(), b.differentiate()),
            Expr::Sub(a, b) => Expr::sub(a.differentiate(), b.differentiate()),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.differentiate(), (**b).clone()),
                Expr::mul((**a).clone(), b.differentiate()),
            ),
            Expr::Div(a, b) => Expr::div(
                Expr::sub(
                    Expr::mul(a.differentiate(), (**b).clone()),
                    Expr::mul((**a).clone(), b.differentiate()),
                ),
                Expr::pow_int((**b).clone(), 2),
            ),
            Expr::PowInt(a, n) => Expr::mul(
                Expr::mul(Expr::real(*n as f64), Expr::pow_int((**a).clone(), n - 1)),
                a.differentiate(),
            ),
            Expr::Exp(a) => Expr::mul(Expr::exp((**a).clone()), a.differentiate()),
            Expr::Sin(a) => Expr::mul(Expr::cos((**a).clone()), a.differentiate()),
            Expr::Cos(a) => Expr::mul(
                Expr::neg(Expr::sin((**a).clone())),
                a.differentiate(),
            ),
            Expr::Neg(a) => Expr::neg(a.differentiate()),
        }
    }

    /// Replace every occurrence of `z` with `inner` (function composition
    /// `self ∘ inner` as a tree).
    pub fn substitute(&self, inner: &Expr) -> Expr {
        match self {
            Expr::Var => inner.clone(),
            Expr::Const { .. } => self.clone(),
            Expr::Add(a, b) => Expr::add(a.substitute(inner), b.substitute(inner)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(inner), b.substitute(inner)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(inner), b.substitute(inner)),
            Expr::Div(a, b) => Expr::div(a.substitute(inner), b.substitute(inner)),
            Expr::PowInt(a, n) => Expr::pow_int(a.substitute(inner), *n),
            Expr::Exp(a) => Expr::exp(a.substitute(inner)),
            Expr::Sin(a) => Expr::sin(a.substitute(inner)),
            Expr::Cos(a) => Expr::cos(a.substitute(inner)),
            Expr::Neg(a) => Expr::neg(a.substitute(inner)),
        }
    }

    /// Whether evaluation can hit a pole: division by a non-constant
    /// denominator or a negative integer power of a non-constant base.
    pub fn has_pole(&self) -> bool {
        match self {
            Expr::Var | Expr::Const { .. } => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.has_pole() || b.has_pole()
            }
            Expr::Div(a, b) => {
                a.has_pole() || b.has_pole() || !matches!(**b, Expr::Const { .. })
            }
            Expr::PowInt(a, n) => {
                a.has_pole() || (*n < 0 && !matches!(**a, Expr::Const { .. }))
            }
            Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Neg(a) => a.has_pole(),
        }
    }

    /// Denominator subtrees whose roots are poles of the expression.
    pub fn pole_denominators(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        self.collect_denominators(&mut out);
        out
    }

    fn collect_denominators(&self, out: &mut Vec<Expr>) {
        match self {
            Expr::Var | Expr::Const { .. } => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_denominators(out);
                b.collect_denominators(out);
            }
            Expr::Div(a, b) => {
                a.collect_denominators(out);
                b.collect_denominators(out);
                if !matches!(**b, Expr::Const { .. }) {
                    out.push((**b).clone());
                }
            }
            Expr::PowInt(a, n) => {
                a.collect_denominators(out);
                if *n < 0 && !matches!(**a, Expr::Const { .. }) {
                    out.push((**a).clone());
                }
            }
            Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Neg(a) => {
                a.collect_denominators(out)
            }
        }
    }

    /// Canonical fully parenthesized rendering; reparsing yields a
    /// structurally equal tree for any parser- or `differentiate`-produced
    /// expression.
    pub fn print(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }

    fn write(&self, out: &mut String) {
        use std::fmt::Write;
        match self {
            Expr::Var => out.push('z'),
            Expr::Const { re, im } => {
                if *im == 0.0 {
                    write_real(out, *re);
                } else if *re == 0.0 && *im == 1.0 {
                    out.push('i');
                } else if *re == 0.0 {
                    out.push('(');
                    write_real(out, *im);
                    out.push_str("*i)");
                } else {
                    out.push('(');
                    write_real(out, *re);
                    if *im >= 0.0 {
                        out.push('+');
                        write_real(out, *im);
                    } else {
                        out.push('-');
                        write_real(out, -*im);
                    }
                    out.push_str("*i)");
                }
            }
            Expr::Add(a, b) => binary(out, a, '+', b),
            Expr::Sub(a, b) => binary(out, a, '-', b),
            Expr::Mul(a, b) => binary(out, a, '*', b),
            Expr::Div(a, b) => binary(out, a, '/', b),
            Expr::PowInt(a, n) => {
                out.push('(');
                a.write(out);
                let _ = write!(out, "^{n}");
                out.push(')');
            }
            Expr::Exp(a) => call(out, "exp", a),
            Expr::Sin(a) => call(out, "sin", a),
            Expr::Cos(a) => call(out, "cos", a),
            Expr::Neg(a) => {
                out.push_str("(-");
                a.write(out);
                out.push(')');
            }
        }
    }
}

fn write_real(out: &mut String, v: f64) {
    use std::fmt::Write;
    if v < 0.0 {
        // Leading '-' reparses as unary negation and folds back to a constant.
        let _ = write!(out, "(-{})", fmt_f64(-v));
    } else {
        let _ = write!(out, "{}", fmt_f64(v));
    }
}

fn fmt_f64(v: f64) -> String {
    // `{}` on f64 is the shortest representation that round-trips; the
    // grammar's number lexer does not accept exponent-free huge literals
    // badly, but Display never emits exponent notation.
    format!("{v}")
}

fn binary(out: &mut String, a: &Expr, op: char, b: &Expr) {
    out.push('(');
    a.write(out);
    out.push(op);
    b.write(out);
    out.push(')');
}

fn call(out: &mut String, name: &str, a: &Expr) {
    out.push_str(name);
    out.push('(');
    a.write(out);
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::DEFAULT_CAP;

    fn ev(e: &Expr, z: ExtComplex) -> ExtComplex {
        e.eval(z, DEFAULT_CAP).unwrap()
    }

    #[test]
    fn eval_exp_at_zero() {
        let f = Expr::exp(Expr::Var);
        assert_eq!(ev(&f, ExtComplex::ZERO), ExtComplex::ONE);
    }

    #[test]
    fn eval_exp_at_ln2() {
        let f = Expr::exp(Expr::Var);
        let v = ev(&f, ExtComplex::finite(2.0_f64.ln(), 0.0));
        assert!((v.modulus() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eval_reciprocal_square_pole() {
        let f = Expr::div(Expr::real(1.0), Expr::pow_int(Expr::Var, 2));
        assert_eq!(ev(&f, ExtComplex::ZERO), ExtComplex::Infinity);
    }

    #[test]
    fn derivative_of_exp_is_exp() {
        let f = Expr::exp(Expr::Var);
        assert_eq!(f.differentiate(), f);
    }

    #[test]
    fn derivative_of_square() {
        let f = Expr::pow_int(Expr::Var, 2);
        let d = f.differentiate();
        let v = ev(&d, ExtComplex::finite(3.0, 0.0));
        assert_eq!(v, ExtComplex::finite(6.0, 0.0));
    }

    #[test]
    fn derivative_of_reciprocal_square() {
        // d/dz 1/z^2 = -2/z^3; at z=2 that is -0.25.
        let f = Expr::div(Expr::real(1.0), Expr::pow_int(Expr::Var, 2));
        let d = f.differentiate();
        let v = ev(&d, ExtComplex::finite(2.0, 0.0));
        let (re, im) = (v.re().unwrap(), v.im().unwrap());
        assert!((re + 0.25).abs() < 1e-12 && im.abs() < 1e-15);
    }

    #[test]
    fn pole_detection() {
        let f = Expr::div(Expr::real(1.0), Expr::pow_int(Expr::Var, 2));
        assert!(f.has_pole());
        assert!(!Expr::exp(Expr::Var).has_pole());
        assert!(Expr::pow_int(Expr::Var, -3).has_pole());
        // Division by a constant is not a pole.
        assert!(!Expr::div(Expr::Var, Expr::real(2.0)).has_pole());
    }

    #[test]
    fn substitution_composes() {
        let f = Expr::exp(Expr::Var);
        let g = Expr::add(Expr::Var, Expr::constant(0.0, 1.0));
        let fg = f.substitute(&g);
        let direct = ev(&f, ev(&g, ExtComplex::finite(0.5, 0.0)));
        assert_eq!(ev(&fg, ExtComplex::finite(0.5, 0.0)), direct);
    }
}
