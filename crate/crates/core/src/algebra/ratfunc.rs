use std::fmt;

use num_traits::{One, Zero};

use super::{Poly, Rational};
use crate::error::Result;

/// Quotient of two polynomials.
///
/// The denominator is kept with leading coefficient one and without monomial
/// content shared with the numerator. No polynomial gcd is taken, so two
/// equal values may carry different representatives; equality is decided by
/// cross multiplication.
#[derive(Clone, Debug)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    pub fn new(num: Poly, den: Poly) -> Self {
        assert!(!den.is_zero(), "rational function with zero denominator");
        let mut r = RatFunc { num, den };
        r.normalize();
        r
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    pub fn constant(c: Rational) -> Self {
        RatFunc::from_poly(Poly::constant(c))
    }

    pub fn zero() -> Self {
        RatFunc::from_poly(Poly::zero())
    }

    pub fn one() -> Self {
        RatFunc::from_poly(Poly::one())
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    /// The polynomial value when the denominator is constant.
    pub fn as_poly(&self) -> Option<Poly> {
        self.den.as_constant().map(|c| self.num.scale(&c.recip()))
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den = Poly::one();
            return;
        }
        let lc = self.den.leading_term().map(|(_, c)| c.clone()).expect("nonzero denominator");
        if !lc.is_one() {
            let inv = lc.recip();
            self.num = self.num.scale(&inv);
            self.den = self.den.scale(&inv);
        }
        if self.den.is_constant() {
            return;
        }
        let g = self.num.monomial_content().gcd(&self.den.monomial_content());
        if !g.is_one() {
            self.num = self.num.strip_monomial(&g);
            self.den = self.den.strip_monomial(&g);
        }
        if let Some(q) = self.num.div_exact(&self.den) {
            self.num = q;
            self.den = Poly::one();
        }
    }

    pub fn add(&self, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            return RatFunc::new(&self.num + &o.num, self.den.clone());
        }
        RatFunc::new(&(&self.num * &o.den) + &(&o.num * &self.den), &self.den * &o.den)
    }

    pub fn sub(&self, o: &RatFunc) -> RatFunc {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }

    pub fn mul(&self, o: &RatFunc) -> RatFunc {
        if self.is_zero() || o.is_zero() {
            return RatFunc::zero();
        }
        RatFunc::new(&self.num * &o.num, &self.den * &o.den)
    }

    pub fn mul_poly(&self, p: &Poly) -> RatFunc {
        RatFunc::new(&self.num * p, self.den.clone())
    }

    pub fn scale(&self, c: &Rational) -> RatFunc {
        RatFunc { num: self.num.scale(c), den: if c.is_zero() { Poly::one() } else { self.den.clone() } }
    }

    /// Panics on division by zero.
    pub fn div(&self, o: &RatFunc) -> RatFunc {
        assert!(!o.is_zero(), "division by the zero rational function");
        RatFunc::new(&self.num * &o.den, &self.den * &o.num)
    }

    pub fn partial(&self, v: usize) -> RatFunc {
        if self.den.is_constant() {
            return RatFunc::new(self.num.partial(v), self.den.clone());
        }
        let n = &(&self.num.partial(v) * &self.den) - &(&self.num * &self.den.partial(v));
        RatFunc::new(n, &self.den * &self.den)
    }

    /// Value at a point; `Ok(None)` when the denominator vanishes there.
    pub fn eval(&self, point: &[Rational]) -> Result<Option<Rational>> {
        let d = self.den.eval(point)?;
        if d.is_zero() {
            return Ok(None);
        }
        Ok(Some(self.num.eval(point)? / d))
    }

    pub fn substitute(&self, sub: &dyn Fn(usize) -> Option<Poly>) -> RatFunc {
        RatFunc::new(self.num.substitute(sub), self.den.substitute(sub))
    }

    pub fn remap(&self, f: &dyn Fn(usize) -> usize) -> RatFunc {
        RatFunc { num: self.num.remap(f), den: self.den.remap(f) }
    }

    pub fn max_var(&self) -> Option<usize> {
        self.num.max_var().max(self.den.max_var())
    }

    pub fn total_degree(&self) -> u32 {
        self.num.total_degree() + self.den.total_degree()
    }

    pub fn display_with(&self, name: &dyn Fn(usize) -> String) -> String {
        if self.den.is_constant() {
            return self.num.display_with(name);
        }
        format!("({})/({})", self.num.display_with(name), self.den.display_with(name))
    }
}

impl PartialEq for RatFunc {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        &self.num * &other.den == &other.num * &self.den
    }
}

impl Eq for RatFunc {}

impl From<Poly> for RatFunc {
    fn from(p: Poly) -> Self {
        RatFunc::from_poly(p)
    }
}

impl From<Rational> for RatFunc {
    fn from(c: Rational) -> Self {
        RatFunc::constant(c)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&|v| format!("v{v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    #[test]
    fn arithmetic_cancels_exact_quotients() {
        let x = Poly::var(0);
        let y = Poly::var(1);
        let a = RatFunc::new(&x * &x - &y * &y, &x - &y);
        assert!(a.is_polynomial());
        assert_eq!(a, RatFunc::from_poly(&x + &y));
        let b = RatFunc::new(x.clone(), y.clone());
        let c = b.mul(&RatFunc::new(y.clone(), x.clone()));
        assert_eq!(c, RatFunc::one());
        assert!(b.sub(&b).is_zero());
    }

    #[test]
    fn quotient_rule() {
        let x = Poly::var(0);
        let r = RatFunc::new(Poly::one(), x.clone());
        assert_eq!(r.partial(0), RatFunc::new(Poly::int(-1), &x * &x));
        assert_eq!(r.eval(&[rat(2, 1)]).unwrap(), Some(rat(1, 2)));
        assert_eq!(r.eval(&[rat(0, 1)]).unwrap(), None);
    }
}
