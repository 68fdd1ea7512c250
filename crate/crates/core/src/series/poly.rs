use std::ops::{Add, Mul, Neg, Sub};

/// Dense real polynomial, `c[i]` is the coefficient of `x^i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    c: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut c: Vec<f64>) -> Self {
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        Self { c }
    }

    pub fn constant(v: f64) -> Self {
        Self { c: vec![v] }
    }

    /// `coeff · x^power`.
    pub fn monomial(power: usize, coeff: f64) -> Self {
        let mut c = vec![0.0; power + 1];
        c[power] = coeff;
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.c.iter().map(|v| v * s).collect())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(1.0);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn derivative(&self) -> Self {
        if self.c.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(self.c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect())
    }

    /// Coefficients of `p(x0 + h)` in powers of `h`.
    pub fn taylor_shift(&self, x0: f64) -> Self {
        let mut c = self.c.clone();
        let n = c.len();
        // repeated synthetic division
        for i in 0..n {
            for j in (i..n - 1).rev() {
                c[j] += x0 * c[j + 1];
            }
        }
        Self::new(c)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, o: &Polynomial) -> Polynomial {
        let n = self.c.len().max(o.c.len());
        Polynomial::new(
            (0..n)
                .map(|i| self.c.get(i).copied().unwrap_or(0.0) + o.c.get(i).copied().unwrap_or(0.0))
                .collect(),
        )
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, o: &Polynomial) -> Polynomial {
        self + &(-o)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, o: &Polynomial) -> Polynomial {
        let mut c = vec![0.0; self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_shift_reexpands() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.5, 3.0]);
        let q = p.taylor_shift(0.7);
        for h in [-0.3, 0.0, 0.2, 1.1] {
            assert!((q.eval(h) - p.eval(0.7 + h)).abs() < 1e-12);
        }
    }

    #[test]
    fn arithmetic() {
        let a = Polynomial::new(vec![1.0, 1.0]);
        let b = &a * &a;
        assert_eq!(b.coeffs(), &[1.0, 2.0, 1.0]);
        assert_eq!((&b - &b).coeffs(), &[0.0]);
        assert_eq!(a.pow(3).coeffs(), &[1.0, 3.0, 3.0, 1.0]);
        assert_eq!(b.derivative().coeffs(), &[2.0, 2.0]);
    }
}
