use std::sync::Arc;

use crate::error::{domain, Result};

use super::{Jet, RationalFn, TruncatedSeries};

/// Objects a differential operator can act on: series about 0 and jets.
pub trait Expansion: Clone {
    fn derivative(&self) -> Self;
    fn mul_rational(&self, f: &RationalFn) -> Result<Self>;
    fn scale(&self, c: f64) -> Self;
    fn add(&self, o: &Self) -> Result<Self>;
}

impl Expansion for TruncatedSeries {
    fn derivative(&self) -> Self {
        TruncatedSeries::derivative(self)
    }

    fn mul_rational(&self, f: &RationalFn) -> Result<Self> {
        if let Some((e, p)) = f.as_laurent_monomials() {
            return Ok(self.mul_poly(p).shift(e));
        }
        // f is regular at 0 apart from its x power, so its expansion only
        // needs as many terms as self carries.
        let fs = f.to_series(f.x_power() + self.top() - self.offset())?;
        Ok(self.mul(&fs))
    }

    fn scale(&self, c: f64) -> Self {
        TruncatedSeries::scale(self, c)
    }

    fn add(&self, o: &Self) -> Result<Self> {
        Ok(TruncatedSeries::add(self, o))
    }
}

impl Expansion for Jet {
    fn derivative(&self) -> Self {
        Jet::derivative(self)
    }

    fn mul_rational(&self, f: &RationalFn) -> Result<Self> {
        self.mul(&f.to_jet(self.base(), self.order())?)
    }

    fn scale(&self, c: f64) -> Self {
        Jet::scale(self, c)
    }

    fn add(&self, o: &Self) -> Result<Self> {
        Jet::add(self, o)
    }
}

/// Leading-order generator `Â₀` together with the eigenvalue `λ₁` that
/// normalizes its powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub op: DiffOperator,
    pub lambda1: f64,
}

/// `Σ_j c_j(x) ∂^j + Σ_j d_j(x) (Â₀/λ₁)^j`.
///
/// The second family multiplies after the generator powers act, so that
/// `d(x) (Â₀/λ₁)^j G_k = d(x) k^j G_k` on eigenfunctions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiffOperator {
    pub derivative_terms: Vec<(RationalFn, usize)>,
    pub a0_terms: Vec<(RationalFn, usize)>,
    generator: Option<Arc<Generator>>,
}

impl DiffOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::term(RationalFn::constant(1.0), 0)
    }

    /// `c(x) ∂^j`.
    pub fn term(c: RationalFn, j: usize) -> Self {
        Self { derivative_terms: vec![(c, j)], ..Self::default() }
    }

    /// `Σ c_j(x) ∂^j`.
    pub fn from_terms(terms: Vec<(RationalFn, usize)>) -> Self {
        Self { derivative_terms: terms, ..Self::default() }
    }

    pub fn with_generator(mut self, op: DiffOperator, lambda1: f64) -> Self {
        self.generator = Some(Arc::new(Generator { op, lambda1 }));
        self
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_deref()
    }

    pub fn is_zero(&self) -> bool {
        self.derivative_terms.iter().chain(&self.a0_terms).all(|(c, _)| c.is_zero())
    }

    pub fn plus(&self, o: &Self) -> Self {
        let mut out = self.clone();
        out.derivative_terms.extend(o.derivative_terms.iter().cloned());
        out.a0_terms.extend(o.a0_terms.iter().cloned());
        if out.generator.is_none() {
            out.generator = o.generator.clone();
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for (c, _) in out.derivative_terms.iter_mut().chain(out.a0_terms.iter_mut()) {
            *c = c.scale(s);
        }
        out
    }

    /// Applies the operator, using its own generator for `Â₀` terms.
    pub fn apply<T: Expansion>(&self, s: &T) -> Result<T> {
        match (&self.generator, self.a0_terms.is_empty()) {
            (_, true) => apply_operator(self, s, None),
            (Some(g), false) => apply_operator(self, s, Some((&g.op, g.lambda1))),
            (None, false) => domain("operator has generator terms but no generator attached"),
        }
    }
}

/// Applies `op` to `s`, with `Â₀` and `λ₁` supplied explicitly when `op`
/// contains generator powers.
pub fn apply_operator<T: Expansion>(op: &DiffOperator, s: &T, a0: Option<(&DiffOperator, f64)>) -> Result<T> {
    let mut acc = s.scale(0.0);
    let max_d = op.derivative_terms.iter().map(|t| t.1).max();
    if let Some(max_d) = max_d {
        let mut derivs = vec![s.clone()];
        for j in 1..=max_d {
            let next = derivs[j - 1].derivative();
            derivs.push(next);
        }
        for (c, j) in &op.derivative_terms {
            if !c.is_zero() {
                acc = acc.add(&derivs[*j].mul_rational(c)?)?;
            }
        }
    }
    let max_a = op.a0_terms.iter().map(|t| t.1).max();
    if let Some(max_a) = max_a {
        let (gen, lambda1) = match a0 {
            Some(g) => g,
            None => return domain("generator powers need a leading-order generator"),
        };
        if lambda1 == 0.0 {
            return domain("generator normalization λ₁ is zero");
        }
        let mut powers = vec![s.clone()];
        for j in 1..=max_a {
            let next = apply_operator(gen, &powers[j - 1], None)?.scale(1.0 / lambda1);
            powers.push(next);
        }
        for (c, j) in &op.a0_terms {
            if !c.is_zero() {
                acc = acc.add(&powers[*j].mul_rational(c)?)?;
            }
        }
    }
    Ok(acc)
}

/// `Σ_j q_j(x) k^j`, the symbolic dependence of a correction on the mode index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KPolynomial {
    pub q: Vec<RationalFn>,
}

impl KPolynomial {
    pub fn new(q: Vec<RationalFn>) -> Self {
        Self { q }
    }

    /// The coefficient function at a fixed integer `k`.
    pub fn at(&self, k: f64) -> RationalFn {
        self.q
            .iter()
            .enumerate()
            .fold(RationalFn::constant(0.0), |acc, (j, c)| acc.add(&c.scale(k.powi(j as i32))))
    }

    pub fn eval(&self, k: f64, x: f64) -> f64 {
        self.q.iter().enumerate().map(|(j, c)| c.eval(x) * k.powi(j as i32)).sum()
    }
}

/// Replaces `k^j` by `(Â₀/λ₁)^j` so that on every eigenfunction `G_k` the
/// operator reproduces `Σ q_j k^j G_k`.
pub fn kpoly_to_operator(q: &KPolynomial, a0: &DiffOperator, lambda1: f64) -> DiffOperator {
    DiffOperator {
        derivative_terms: Vec::new(),
        a0_terms: q.q.iter().cloned().enumerate().map(|(j, c)| (c, j)).collect(),
        generator: None,
    }
    .with_generator(a0.clone(), lambda1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Polynomial;

    // Â₀ = (2r x^2 - 2(1+κ) x) ∂ has eigenfunctions (x/(1+κ-rx))^k
    fn a0(kappa: f64, r: f64) -> DiffOperator {
        DiffOperator::term(
            RationalFn::polynomial(Polynomial::new(vec![0.0, -2.0 * (1.0 + kappa), 2.0 * r])),
            1,
        )
    }

    fn gk_series(kappa: f64, r: f64, k: i32, top: i32) -> TruncatedSeries {
        let g = RationalFn::new(1, Polynomial::constant(1.0), vec![(Polynomial::new(vec![1.0 + kappa, -r]), 1)])
            .unwrap()
            .to_series(top)
            .unwrap();
        g.powi(k).unwrap()
    }

    #[test]
    fn generator_power_reproduces_k() {
        let (kappa, r) = (0.5, 1.0);
        let lambda1 = -2.0 * (1.0 + kappa);
        let q = KPolynomial::new(vec![
            RationalFn::constant(0.25),
            RationalFn::monomial(1, -1.0),
            RationalFn::inverse_power(Polynomial::new(vec![1.5, -1.0]), 2).unwrap(),
        ]);
        let op = kpoly_to_operator(&q, &a0(kappa, r), lambda1);
        for k in 1..=4 {
            let g = gk_series(kappa, r, k, 40);
            let lhs = op.apply(&g).unwrap();
            let rhs = g.mul_rational(&q.at(k as f64)).unwrap();
            for p in k..=lhs.top().min(rhs.top()) {
                let (a, b) = (lhs.coeff(p), rhs.coeff(p));
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "k={k} p={p}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_operator_gives_zero() {
        let g = gk_series(0.5, 1.0, 2, 20);
        let z = DiffOperator::zero().apply(&g).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn generator_terms_without_generator_fail() {
        let mut op = DiffOperator::zero();
        op.a0_terms.push((RationalFn::constant(1.0), 1));
        assert!(op.apply(&gk_series(0.5, 1.0, 1, 10)).is_err());
    }

    #[test]
    fn jets_and_series_agree() {
        let op = a0(0.5, 0.8).plus(&DiffOperator::term(RationalFn::monomial(-1, 0.3), 2));
        let g = gk_series(0.5, 0.8, 2, 80);
        let s = op.apply(&g).unwrap();
        let x0 = 0.3;
        let gj = RationalFn::new(1, Polynomial::constant(1.0), vec![(Polynomial::new(vec![1.5, -0.8]), 1)])
            .unwrap()
            .to_jet(x0, 8)
            .unwrap()
            .powi(2)
            .unwrap();
        let j = op.apply(&gj).unwrap();
        assert!((j.value() - s.eval(x0)).abs() < 1e-10);
    }
}
