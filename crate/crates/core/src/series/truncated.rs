use crate::error::{domain, Error, Result};

use super::Polynomial;

/// Laurent series `Σ_{p=offset}^{top} c_p x^p`, known exactly through `top`.
///
/// Arithmetic propagates the truncation order: the result of any operation is
/// only kept through the highest power determined by the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    offset: i32,
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// `coeffs[i]` multiplies `x^(offset + i)`.
    pub fn new(offset: i32, coeffs: Vec<f64>) -> Self {
        Self { offset, coeffs }
    }

    /// Zero through `top`.
    pub fn zero(top: i32) -> Self {
        let offset = top.min(0);
        Self { offset, coeffs: vec![0.0; (top - offset + 1) as usize] }
    }

    /// Polynomial with coefficients indexed by power, truncated or padded to `top`.
    pub fn from_polynomial(p: &[f64], top: i32) -> Self {
        if top < 0 {
            return Self::zero(top);
        }
        let mut c = vec![0.0; top as usize + 1];
        for (i, v) in p.iter().enumerate().take(top as usize + 1) {
            c[i] = *v;
        }
        Self { offset: 0, coeffs: c }
    }

    pub fn monomial(power: i32, coeff: f64, top: i32) -> Self {
        let mut s = Self::zero(top.max(power));
        if power <= top {
            let off = s.offset;
            s.coeffs[(power - off) as usize] = coeff;
        }
        s.truncated(top)
    }

    pub fn offset(&self) -> i32 {
        self.offset
    }

    /// Highest power that is known.
    pub fn top(&self) -> i32 {
        self.offset + self.coeffs.len() as i32 - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^p`; `None` above the truncation order.
    pub fn get(&self, p: i32) -> Option<f64> {
        if p > self.top() {
            None
        } else if p < self.offset {
            Some(0.0)
        } else {
            Some(self.coeffs[(p - self.offset) as usize])
        }
    }

    /// Coefficient of `x^p`, panicking above the truncation order.
    pub fn coeff(&self, p: i32) -> f64 {
        self.get(p).unwrap_or_else(|| panic!("x^{p} is above truncation order {}", self.top()))
    }

    pub fn truncated(mut self, top: i32) -> Self {
        if top < self.top() {
            let keep = (top - self.offset + 1).max(0) as usize;
            self.coeffs.truncate(keep);
        }
        self
    }

    /// Drops exactly-zero leading coefficients.
    pub fn normalized(mut self) -> Self {
        let lead = self.coeffs.iter().position(|&c| c != 0.0).unwrap_or(self.coeffs.len());
        if lead == self.coeffs.len() {
            return Self::zero(self.top());
        }
        self.coeffs.drain(..lead);
        self.offset += lead as i32;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let poly = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
        poly * x.powi(self.offset)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { offset: self.offset, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Multiplies by `x^e`.
    pub fn shift(&self, e: i32) -> Self {
        Self { offset: self.offset + e, coeffs: self.coeffs.clone() }
    }

    pub fn add(&self, o: &Self) -> Self {
        let off = self.offset.min(o.offset);
        let top = self.top().min(o.top());
        if top < off {
            return Self { offset: off, coeffs: Vec::new() };
        }
        let coeffs = (off..=top)
            .map(|p| self.get(p).unwrap_or(0.0) + o.get(p).unwrap_or(0.0))
            .collect();
        Self { offset: off, coeffs }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let off = self.offset + o.offset;
        let top = (self.offset + o.top()).min(o.offset + self.top());
        let len = (top - off + 1).max(0) as usize;
        let mut c = vec![0.0; len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(len - i) {
                c[i + j] += a * b;
            }
        }
        Self { offset: off, coeffs: c }
    }

    /// Product with an exactly known polynomial; the truncation order is kept.
    pub fn mul_poly(&self, p: &Polynomial) -> Self {
        let pc = p.coeffs();
        let len = self.coeffs.len();
        let mut c = vec![0.0; len];
        for (j, b) in pc.iter().enumerate().take(len) {
            if *b == 0.0 {
                continue;
            }
            for i in 0..len - j {
                c[i + j] += b * self.coeffs[i];
            }
        }
        Self { offset: self.offset, coeffs: c }
    }

    pub fn recip(&self) -> Result<Self> {
        let s = self.clone().normalized();
        let c0 = s.coeffs.first().copied().unwrap_or(0.0);
        if c0 == 0.0 {
            return domain("reciprocal of a series with no nonzero coefficient");
        }
        let n = s.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = 1.0 / c0;
        for m in 1..n {
            let mut acc = 0.0;
            for i in 1..=m {
                acc += s.coeffs[i] * out[m - i];
            }
            out[m] = -acc / c0;
        }
        Ok(Self { offset: -s.offset, coeffs: out })
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * (self.offset + i as i32) as f64)
            .collect();
        Self { offset: self.offset - 1, coeffs }
    }

    /// Term-by-term antiderivative with zero constant.
    pub fn integrate(&self) -> Result<Self> {
        if let Some(c) = self.get(-1) {
            if c != 0.0 && self.offset <= -1 {
                return domain("antiderivative of a series with an x^-1 term");
            }
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let p = self.offset + i as i32 + 1;
                if p == 0 {
                    0.0
                } else {
                    c / p as f64
                }
            })
            .collect();
        Ok(Self { offset: self.offset + 1, coeffs })
    }

    /// `self^e` for integer `e`.
    pub fn powi(&self, e: i32) -> Result<Self> {
        if e == 0 {
            return Ok(Self::monomial(0, 1.0, self.top() - self.offset));
        }
        let mut sq = if e < 0 { self.recip()? } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc: Option<Self> = None;
        loop {
            if n & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => a.mul(&sq),
                });
            }
            n >>= 1;
            if n == 0 {
                break;
            }
            sq = sq.mul(&sq);
        }
        Ok(acc.expect("nonzero exponent"))
    }

    /// `self^alpha` for a series with offset 0 and positive constant term.
    pub fn pow_real(&self, alpha: f64) -> Result<Self> {
        if self.offset != 0 || self.coeffs.is_empty() || !(self.coeffs[0] > 0.0) {
            return domain("real power needs a series with positive constant term");
        }
        let c = &self.coeffs;
        let n = c.len();
        let mut out = vec![0.0; n];
        out[0] = c[0].powf(alpha);
        for m in 1..n {
            let mut acc = 0.0;
            for i in 1..=m {
                acc += (alpha * i as f64 - (m - i) as f64) * c[i] * out[m - i];
            }
            out[m] = acc / (m as f64 * c[0]);
        }
        Ok(Self { offset: 0, coeffs: out })
    }

    /// `exp(self)` for a series without negative powers.
    pub fn exp(&self) -> Result<Self> {
        let s = self.clone().normalized();
        if s.offset < 0 {
            return domain("exponential of a series with negative powers");
        }
        let top = s.top();
        if top < 0 {
            return Ok(Self::zero(top));
        }
        let n = top as usize + 1;
        let mut c = vec![0.0; n];
        for p in s.offset.max(0)..=top {
            c[p as usize] = s.coeff(p);
        }
        let mut out = vec![0.0; n];
        out[0] = c[0].exp();
        for m in 1..n {
            let mut acc = 0.0;
            for i in 1..=m {
                acc += i as f64 * c[i] * out[m - i];
            }
            out[m] = acc / m as f64;
        }
        Ok(Self { offset: 0, coeffs: out })
    }

    /// `self(g(x))` where `self` has no negative powers and `g` has offset >= 1.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        let f = self.clone().normalized();
        let g = g.clone().normalized();
        if f.offset < 0 {
            return domain("outer series of a composition has negative powers");
        }
        if g.offset < 1 {
            return Err(Error::Domain("inner series of a composition must vanish at 0".into()));
        }
        let tf = f.top();
        if tf < 0 {
            return Ok(Self { offset: 0, coeffs: Vec::new() });
        }
        // the unknown tail of f contributes O(x^{o_g (T_f + 1)})
        let top = g.top().min(g.offset * (tf + 1) - 1);
        let n = top as usize + 1;
        let gd = g.dense_from_zero(top);
        let mut h = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for p in (0..=tf).rev() {
            tmp.iter_mut().for_each(|v| *v = 0.0);
            for (i, hv) in h.iter().enumerate() {
                if *hv == 0.0 {
                    continue;
                }
                for j in 1..n - i {
                    tmp[i + j] += hv * gd[j];
                }
            }
            std::mem::swap(&mut h, &mut tmp);
            h[0] += f.get(p).unwrap_or(0.0);
        }
        Ok(Self { offset: 0, coeffs: h })
    }

    fn dense_from_zero(&self, top: i32) -> Vec<f64> {
        (0..=top).map(|p| if p >= self.offset { self.get(p).unwrap_or(0.0) } else { 0.0 }).collect()
    }

    /// Checks that every coefficient at powers `<= 0` is negligible relative to
    /// the largest coefficient and drops them.
    pub fn strip_nonpositive(&self, tol: f64) -> Result<Self> {
        let scale = self.max_abs().max(1.0);
        for p in self.offset..=0.min(self.top()) {
            let c = self.coeff(p);
            if c.abs() > tol * scale {
                return Err(Error::Consistency(format!(
                    "coefficient of x^{p} is {c:e}, expected zero"
                )));
            }
        }
        let top = self.top();
        if top < 1 {
            return Ok(Self { offset: 1, coeffs: Vec::new() });
        }
        let coeffs = (1..=top).map(|p| self.coeff(p)).collect();
        Ok(Self { offset: 1, coeffs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(q: f64, top: i32) -> TruncatedSeries {
        TruncatedSeries::new(0, (0..=top).map(|p| q.powi(p)).collect())
    }

    #[test]
    fn recip_of_one_minus_x_is_geometric() {
        let s = TruncatedSeries::new(0, [1.0, -1.0].iter().copied().chain(std::iter::repeat(0.0).take(8)).collect());
        let r = s.recip().unwrap();
        assert_eq!(r, geometric(1.0, 9));
    }

    #[test]
    fn mul_tracks_truncation() {
        let a = TruncatedSeries::new(1, vec![1.0; 5]); // through x^5
        let b = TruncatedSeries::new(-1, vec![1.0; 3]); // through x^1
        let c = a.mul(&b);
        assert_eq!(c.offset(), 0);
        assert_eq!(c.top(), 2);
    }

    #[test]
    fn compose_matches_pointwise() {
        let f = geometric(0.5, 20);
        let g = TruncatedSeries::from_polynomial(&[0.0, 0.3, -0.2, 0.1], 20);
        let h = f.compose(&g).unwrap();
        let x = 0.05;
        let direct = 1.0 / (1.0 - 0.5 * g.eval(x));
        assert!((h.eval(x) - direct).abs() < 1e-14);
    }

    #[test]
    fn pow_real_and_exp() {
        let s = TruncatedSeries::from_polynomial(&[1.0, 1.0], 12);
        let half = s.pow_real(0.5).unwrap();
        let sq = half.mul(&half);
        for p in 0..=12 {
            let expect = if p <= 1 { 1.0 } else { 0.0 };
            assert!((sq.coeff(p) - expect).abs() < 1e-13);
        }
        let e = TruncatedSeries::from_polynomial(&[0.0, 1.0], 10).exp().unwrap();
        let mut f = 1.0;
        for p in 0..=10 {
            if p > 0 {
                f *= p as f64;
            }
            assert!((e.coeff(p) - 1.0 / f).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_and_integral_roundtrip() {
        let s = TruncatedSeries::new(1, vec![2.0, -1.0, 0.25, 4.0]);
        let back = s.derivative().integrate().unwrap();
        for p in 1..=4 {
            assert!((back.coeff(p) - s.coeff(p)).abs() < 1e-15);
        }
        assert!(TruncatedSeries::new(-1, vec![1.0, 0.0]).integrate().is_err());
    }

    #[test]
    fn strip_rejects_real_negative_powers() {
        let s = TruncatedSeries::new(-1, vec![1e-16, 0.0, 1.0, 2.0]);
        let t = s.strip_nonpositive(1e-12).unwrap();
        assert_eq!(t.offset(), 1);
        assert_eq!(t.coeffs(), &[1.0, 2.0]);
        let bad = TruncatedSeries::new(-1, vec![1e-3, 0.0, 1.0]);
        assert!(bad.strip_nonpositive(1e-12).is_err());
    }

    #[test]
    fn zero_leading_coefficient_has_no_reciprocal() {
        assert!(TruncatedSeries::zero(5).recip().is_err());
    }
}
