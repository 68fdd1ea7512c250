use crate::error::{domain, Result};

use super::{Jet, Polynomial, TruncatedSeries};

/// `x^xpow · num(x) / Π_i base_i(x)^{p_i}` with bases that do not vanish at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    xpow: i32,
    num: Polynomial,
    den: Vec<(Polynomial, u32)>,
}

impl RationalFn {
    pub fn new(xpow: i32, num: Polynomial, den: Vec<(Polynomial, u32)>) -> Result<Self> {
        for (b, _) in &den {
            if b.coeffs()[0] == 0.0 {
                return domain("denominator factor vanishes at x = 0; move it into the x power");
            }
        }
        let mut out = Self { xpow, num, den: Vec::new() };
        for (b, p) in den {
            out.push_den(b, p);
        }
        Ok(out)
    }

    pub fn constant(c: f64) -> Self {
        Self { xpow: 0, num: Polynomial::constant(c), den: Vec::new() }
    }

    pub fn polynomial(p: Polynomial) -> Self {
        Self { xpow: 0, num: p, den: Vec::new() }
    }

    /// `c · x^e`.
    pub fn monomial(e: i32, c: f64) -> Self {
        Self { xpow: e, num: Polynomial::constant(c), den: Vec::new() }
    }

    /// `base(x)^{-p}`.
    pub fn inverse_power(base: Polynomial, p: u32) -> Result<Self> {
        Self::new(0, Polynomial::constant(1.0), vec![(base, p)])
    }

    fn push_den(&mut self, b: Polynomial, p: u32) {
        if p == 0 {
            return;
        }
        if let Some(slot) = self.den.iter_mut().find(|(q, _)| *q == b) {
            slot.1 += p;
        } else {
            self.den.push((b, p));
        }
    }

    pub fn x_power(&self) -> i32 {
        self.xpow
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// `(x power, numerator)` when there is no denominator.
    pub fn as_laurent_monomials(&self) -> Option<(i32, &Polynomial)> {
        self.den.is_empty().then_some((self.xpow, &self.num))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { xpow: self.xpow, num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self { xpow: self.xpow + o.xpow, num: &self.num * &o.num, den: self.den.clone() };
        for (b, p) in &o.den {
            out.push_den(b.clone(), *p);
        }
        out
    }

    /// Sum over the least common denominator.
    pub fn add(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let xpow = self.xpow.min(o.xpow);
        let mut den: Vec<(Polynomial, u32)> = self.den.clone();
        for (b, p) in &o.den {
            match den.iter_mut().find(|(q, _)| q == b) {
                Some(slot) => slot.1 = slot.1.max(*p),
                None => den.push((b.clone(), *p)),
            }
        }
        let lift = |f: &Self| {
            let mut n = &f.num * &Polynomial::monomial((f.xpow - xpow) as usize, 1.0);
            for (b, p) in &den {
                let have = f.den.iter().find(|(q, _)| q == b).map_or(0, |x| x.1);
                n = &n * &b.pow(p - have);
            }
            n
        };
        let num = &lift(self) + &lift(o);
        Self { xpow, num, den }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.num.eval(x) * x.powi(self.xpow);
        for (b, p) in &self.den {
            v /= b.eval(x).powi(*p as i32);
        }
        v
    }

    /// Laurent expansion about 0 known through `x^top`.
    pub fn to_series(&self, top: i32) -> Result<TruncatedSeries> {
        let reg_top = top - self.xpow;
        let mut s = TruncatedSeries::from_polynomial(self.num.coeffs(), reg_top);
        for (b, p) in &self.den {
            let inv = TruncatedSeries::from_polynomial(b.coeffs(), reg_top).recip()?;
            s = s.mul(&inv.powi(*p as i32)?);
        }
        Ok(s.shift(self.xpow))
    }

    /// Taylor jet about `x0` of the given order.
    pub fn to_jet(&self, x0: f64, order: usize) -> Result<Jet> {
        if self.xpow < 0 && x0 == 0.0 {
            return domain("negative power of x expanded at 0");
        }
        let mut j = Jet::from_polynomial(&self.num, x0, order);
        for (b, p) in &self.den {
            let bj = Jet::from_polynomial(b, x0, order);
            if bj.value() == 0.0 {
                return domain(format!("denominator vanishes at {x0}"));
            }
            j = j.mul(&bj.recip()?.powi(*p as i32)?)?;
        }
        if self.xpow != 0 {
            // generalized binomial expansion of x^e about x0
            let e = self.xpow as f64;
            let mut c = Vec::with_capacity(order + 1);
            let mut binom = 1.0;
            for k in 0..=order {
                if k > 0 {
                    binom *= (e - (k - 1) as f64) / k as f64;
                }
                c.push(binom * x0.powi(self.xpow - k as i32));
            }
            j = j.mul(&Jet::new(x0, c)?)?;
        }
        Ok(j)
    }
}
