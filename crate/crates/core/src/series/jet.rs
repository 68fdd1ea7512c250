use crate::error::{domain, Error, Result};

use super::{Polynomial, TruncatedSeries};

/// Truncated Taylor expansion `Σ_{j<=J} a_j (x - x0)^j` about a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    base: f64,
    s: TruncatedSeries,
}

const BASE_TOL: f64 = 1e-12;

impl Jet {
    pub fn new(base: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return domain("jet needs at least a value");
        }
        Ok(Self { base, s: TruncatedSeries::new(0, coeffs) })
    }

    pub fn constant(base: f64, value: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = value;
        Self { base, s: TruncatedSeries::new(0, c) }
    }

    /// The identity `x = x0 + h`.
    pub fn variable(base: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = base;
        if order >= 1 {
            c[1] = 1.0;
        }
        Self { base, s: TruncatedSeries::new(0, c) }
    }

    pub fn from_polynomial(p: &Polynomial, base: f64, order: usize) -> Self {
        let shifted = p.taylor_shift(base);
        Self { base, s: TruncatedSeries::from_polynomial(shifted.coeffs(), order as i32) }
    }

    /// From `f(x0), f'(x0), ..., f^(J)(x0)`.
    pub fn from_derivatives(base: f64, derivs: &[f64]) -> Result<Self> {
        let mut fact = 1.0;
        let c = derivs
            .iter()
            .enumerate()
            .map(|(j, d)| {
                if j > 0 {
                    fact *= j as f64;
                }
                d / fact
            })
            .collect();
        Self::new(base, c)
    }

    fn wrap(&self, s: TruncatedSeries) -> Self {
        Self { base: self.base, s }
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn order(&self) -> usize {
        self.s.coeffs().len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        self.s.coeffs()
    }

    pub fn value(&self) -> f64 {
        self.s.coeffs()[0]
    }

    /// `f^(j)(x0)`.
    pub fn derivative_value(&self, j: usize) -> Option<f64> {
        let c = self.s.coeffs().get(j)?;
        Some(c * (1..=j).map(|i| i as f64).product::<f64>())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.s.eval(x - self.base)
    }

    pub fn truncated(&self, order: usize) -> Self {
        self.wrap(self.s.clone().truncated(order as i32))
    }

    fn check_base(&self, o: &Self) -> Result<()> {
        if (self.base - o.base).abs() > BASE_TOL * self.base.abs().max(1.0) {
            return domain(format!("jets expanded at {} and {}", self.base, o.base));
        }
        Ok(())
    }

    /// Derivative; the order drops by one.
    pub fn derivative(&self) -> Self {
        let c = self.s.coeffs();
        if c.len() == 1 {
            return Self { base: self.base, s: TruncatedSeries::new(0, Vec::new()) };
        }
        let d = c.iter().enumerate().skip(1).map(|(j, v)| j as f64 * v).collect();
        self.wrap(TruncatedSeries::new(0, d))
    }

    pub fn scale(&self, v: f64) -> Self {
        self.wrap(self.s.scale(v))
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_base(o)?;
        Ok(self.wrap(self.s.add(&o.s)))
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check_base(o)?;
        Ok(self.wrap(self.s.mul(&o.s)))
    }

    pub fn recip(&self) -> Result<Self> {
        if self.value() == 0.0 {
            return domain(format!("reciprocal of a jet vanishing at {}", self.base));
        }
        Ok(self.wrap(self.s.recip()?))
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        self.mul(&o.recip()?)
    }

    pub fn powi(&self, e: i32) -> Result<Self> {
        Ok(self.wrap(self.s.powi(e)?))
    }

    /// `self^alpha`; the value must be positive.
    pub fn pow_real(&self, alpha: f64) -> Result<Self> {
        Ok(self.wrap(self.s.pow_real(alpha)?))
    }

    /// Antiderivative in `x - x0` with value `c` at the base point.
    pub fn integrate(&self, c: f64) -> Self {
        let mut out = Vec::with_capacity(self.s.coeffs().len() + 1);
        out.push(c);
        out.extend(self.s.coeffs().iter().enumerate().map(|(j, v)| v / (j + 1) as f64));
        self.wrap(TruncatedSeries::new(0, out))
    }

    /// `f(g(x))` where `self` is expanded about `g(x0)`.
    pub fn compose(&self, inner: &Jet) -> Result<Self> {
        let y0 = inner.value();
        if (self.base - y0).abs() > BASE_TOL * y0.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "outer jet at {} cannot be composed with inner value {y0}",
                self.base
            )));
        }
        let mut u = inner.s.coeffs().to_vec();
        u[0] = 0.0;
        let u = TruncatedSeries::new(0, u).normalized();
        let s = if u.offset() > u.top() || u.max_abs() == 0.0 {
            let mut c = vec![0.0; inner.order() + 1];
            c[0] = self.value();
            TruncatedSeries::new(0, c).truncated(self.order() as i32)
        } else {
            self.s.compose(&u)?
        };
        Ok(Self { base: inner.base, s: s.truncated(inner.order() as i32) })
    }

    #[cfg(test)]
    pub(crate) fn series(&self) -> &TruncatedSeries {
        &self.s
    }

    #[cfg(test)]
    pub(crate) fn from_series(base: f64, s: TruncatedSeries) -> Result<Self> {
        if s.offset() < 0 {
            return domain("jet series has negative powers");
        }
        let top = s.top();
        let c = (0..=top).map(|p| s.coeff(p)).collect();
        Self::new(base, c)
    }
}
