use crate::error::{Error, Result};
use crate::master_equation::ModelParams;
use crate::series::{kpoly_to_operator, DiffOperator, Expansion, KPolynomial, Polynomial, RationalFn, TruncatedSeries};

/// Pure interactions for which 1/N corrections are available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interaction {
    TwoBody,
    ThreeBody,
}

impl Interaction {
    pub fn order(self) -> usize {
        match self {
            Interaction::TwoBody => 2,
            Interaction::ThreeBody => 3,
        }
    }

    /// Interaction and coupling strength of a pure two- or three-body model.
    pub fn of(params: &ModelParams) -> Result<(Self, f64)> {
        match params.pure_coupling() {
            Some(c) if c.order == 2 => Ok((Interaction::TwoBody, c.strength)),
            Some(c) if c.order == 3 => Ok((Interaction::ThreeBody, c.strength)),
            _ => Err(Error::Unsupported(
                "1/N corrections exist only for pure two- or three-body couplings; use order 0".into(),
            )),
        }
    }
}

/// How the first-order operator is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FirstOrderForm {
    /// `Σ_j q_j(x) (Â₀/λ₁)^j` with the eigenfunction correction normalized
    /// so that it has no `G_k` component.
    #[default]
    KPolynomial,
    /// `f(x) ∂ + g(x) ∂²` (two-body only). Equivalent to the k-polynomial
    /// form plus a normalization term `C_k G_k`.
    Derivative,
}

/// `λ^(n)_k = Σ_j c_j k^j` at unit coupling; `kappa` is in units of the coupling.
pub fn eigen_coefficients(interaction: Interaction, order: usize, kappa: f64, r: f64) -> Result<Vec<f64>> {
    let k1 = kappa + 1.0;
    let r2 = r * r;
    match (interaction, order) {
        (Interaction::TwoBody, 1) => Ok(vec![
            0.0,
            2.0 * (kappa - r2 + 1.0) / (3.0 * k1),
            2.0 * (2.0 * kappa + 3.0 * r2 + 2.0) / (3.0 * k1),
        ]),
        (Interaction::TwoBody, 2) => {
            let c = 2.0 * r2 / (9.0 * k1.powi(3));
            Ok(vec![
                0.0,
                c * (-3.0 * kappa * kappa - 5.0 * kappa + 2.0 * r2 - 2.0),
                c * (9.0 * kappa * kappa + 15.0 * kappa - 6.0 * r2 + 6.0),
                4.0 * c * (-3.0 * kappa * kappa - 2.0 * kappa + 3.0 * r2 + 1.0),
            ])
        }
        (Interaction::ThreeBody, 1) => Ok(vec![0.0, 2.0 / 3.0 * (5.0 - 2.0 * r), 2.0 / 3.0 * (2.0 * r + 4.0)]),
        (Interaction::ThreeBody, 2) => {
            let den = 27.0 * k1;
            let (kr, kk) = (kappa * r, kappa);
            Ok(vec![
                0.0,
                2.0 * (-14.0 * kk + 6.0 * r2 + 8.0 * kr + 8.0 * r - 14.0) / den,
                2.0 * (-24.0 * kk - 9.0 * r2 + 6.0 * kr + 6.0 * r - 24.0) / den,
                2.0 * (-16.0 * kk + 12.0 * r2 - 14.0 * kr - 14.0 * r - 16.0) / den,
            ])
        }
        _ => Err(Error::Unsupported(format!("eigenvalue correction of order {order}"))),
    }
}

/// `λ_k^(order)` in physical units for a pure two- or three-body model.
pub fn eigen_correction(params: &ModelParams, order: usize, k: usize) -> Result<f64> {
    let (interaction, a) = Interaction::of(params)?;
    if k == 0 {
        return Err(Error::Domain("mode index starts at 1".into()));
    }
    let c = eigen_coefficients(interaction, order, params.kappa / a, params.r)?;
    Ok(a * c.iter().enumerate().map(|(j, v)| v * (k as f64).powi(j as i32)).sum::<f64>())
}

/// Operators of the 1/N expansion at unit coupling.
#[derive(Debug, Clone)]
pub struct PerturbativeSolution {
    pub interaction: Interaction,
    /// Coupling strength `a`; time enters the operators as `a t`.
    pub strength: f64,
    /// `κ / a`.
    pub kappa: f64,
    pub r: f64,
    pub a0: DiffOperator,
    pub lambda1: f64,
    pub lambda_1: Vec<f64>,
    pub lambda_2: Vec<f64>,
    pub l1: DiffOperator,
    pub l2: DiffOperator,
    /// `Ô^(1)` actually applied: `o1_base + shift`.
    pub o1: DiffOperator,
    /// First-order operator of the normalization with no `G_k` component.
    pub o1_base: DiffOperator,
    /// Diagonal normalization change `C(Â₀)` carried by `o1`, if any.
    pub shift: Option<DiffOperator>,
    pub o2: DiffOperator,
}

impl PerturbativeSolution {
    /// `Ô^(2)` matching the normalization of `o1`: renormalizing
    /// `G_k^(1) → G_k^(1) + C_k G_k` moves `G_k^(2)` by `C_k Ô^(1) G_k`.
    pub fn apply_o2<T: Expansion>(&self, g: &T) -> Result<T> {
        let out = self.o2.apply(g)?;
        match &self.shift {
            None => Ok(out),
            Some(c) => out.add(&self.o1_base.apply(&c.apply(g)?)?),
        }
    }

    /// Adds the normalization change `Σ_j c_j k^j` to the first-order operator.
    pub fn renormalize(&mut self, c: &[f64]) {
        let extra = kpoly_to_operator(&constant_kpoly(c), &self.a0, self.lambda1);
        self.o1 = self.o1.plus(&extra);
        self.shift = Some(match &self.shift {
            Some(s) => s.plus(&extra),
            None => extra,
        });
    }

    /// `Ô^(order) G_k` through `x^top`.
    pub fn eigenfunction_correction(&self, order: usize, k: usize, top: i32) -> Result<TruncatedSeries> {
        let g = self.gk_series(k, top + 4)?;
        let out = match order {
            1 => self.o1.apply(&g)?,
            2 => self.apply_o2(&g)?,
            _ => return Err(Error::Domain(format!("no eigenfunction correction of order {order}"))),
        };
        Ok(out.truncated(top))
    }

    /// Leading-order eigenfunction at unit coupling, `x^k + ...`.
    pub fn gk_series(&self, k: usize, top: i32) -> Result<TruncatedSeries> {
        let rho = self.r / (1.0 + self.kappa);
        let g1 = match self.interaction {
            Interaction::TwoBody => {
                RationalFn::new(1, Polynomial::constant(1.0), vec![(Polynomial::new(vec![1.0, -rho]), 1)])?
                    .to_series(top)?
            }
            Interaction::ThreeBody => TruncatedSeries::from_polynomial(&[1.0, 0.0, -rho], top - 1)
                .pow_real(-0.5)?
                .shift(1),
        };
        g1.powi(k as i32)
    }
}

fn constant_kpoly(c: &[f64]) -> KPolynomial {
    KPolynomial::new(c.iter().map(|&v| RationalFn::constant(v)).collect())
}

/// Accumulates `Σ c_i B_i(x)` over the basis `D^-1 .. D^-4, x^-2, x^-1`.
#[derive(Default, Clone, Copy)]
struct Basis([f64; 6]);

const DM1: usize = 0;
const DM2: usize = 1;
const DM3: usize = 2;
const DM4: usize = 3;
const XM2: usize = 4;
const XM1: usize = 5;

impl Basis {
    fn with(terms: &[(usize, f64)]) -> Self {
        let mut b = Basis::default();
        for &(i, v) in terms {
            b.0[i] += v;
        }
        b
    }

    fn to_rational(self, d: &Polynomial, scale: f64) -> Result<RationalFn> {
        let mut out = RationalFn::constant(0.0);
        for (i, &c) in self.0.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let f = match i {
                XM2 => RationalFn::monomial(-2, 1.0),
                XM1 => RationalFn::monomial(-1, 1.0),
                p => RationalFn::inverse_power(d.clone(), p as u32 + 1)?,
            };
            out = out.add(&f.scale(c * scale));
        }
        Ok(out)
    }
}

/// Builds `Λ̂^(1,2)` and `Ô^(1,2)` for a pure model.
pub fn build_correction_operators(params: &ModelParams, form: FirstOrderForm) -> Result<PerturbativeSolution> {
    let (interaction, a) = Interaction::of(params)?;
    let kappa = params.kappa / a;
    let r = params.r;
    let lambda1 = -2.0 * (1.0 + kappa);
    let mut a0p = vec![0.0; interaction.order() + 1];
    a0p[1] = lambda1;
    a0p[interaction.order()] += 2.0 * r;
    let a0 = DiffOperator::term(RationalFn::polynomial(Polynomial::new(a0p)), 1);

    let lambda_1 = eigen_coefficients(interaction, 1, kappa, r)?;
    let lambda_2 = eigen_coefficients(interaction, 2, kappa, r)?;
    let l1 = kpoly_to_operator(&constant_kpoly(&lambda_1), &a0, lambda1);
    let l2 = kpoly_to_operator(&constant_kpoly(&lambda_2), &a0, lambda1);

    let (q1, q2) = match interaction {
        Interaction::TwoBody => two_body_first(kappa, r)?,
        Interaction::ThreeBody => three_body_first(kappa, r)?,
    };
    let o1_base = kpoly_to_operator(&KPolynomial::new(vec![RationalFn::constant(0.0), q1, q2]), &a0, lambda1);
    let (o1, shift) = match (form, interaction) {
        (FirstOrderForm::KPolynomial, _) => (o1_base.clone(), None),
        (FirstOrderForm::Derivative, Interaction::TwoBody) => (
            two_body_fg(kappa, r),
            Some(kpoly_to_operator(&constant_kpoly(&two_body_normalization(kappa, r)), &a0, lambda1)),
        ),
        (FirstOrderForm::Derivative, Interaction::ThreeBody) => {
            return Err(Error::Unsupported("derivative form of the first-order operator is two-body only".into()))
        }
    };
    let q = match interaction {
        Interaction::TwoBody => two_body_second(kappa, r)?,
        Interaction::ThreeBody => three_body_second(kappa, r)?,
    };
    let o2 = kpoly_to_operator(&q, &a0, lambda1);
    Ok(PerturbativeSolution {
        interaction,
        strength: a,
        kappa,
        r,
        a0,
        lambda1,
        lambda_1,
        lambda_2,
        l1,
        l2,
        o1,
        o1_base,
        shift,
        o2,
    })
}

fn two_body_first(kappa: f64, r: f64) -> Result<(RationalFn, RationalFn)> {
    let k1 = kappa + 1.0;
    let d = Polynomial::new(vec![k1, -r]);
    let r2 = r * r;
    let r3 = r2 * r;
    let a = Polynomial::new(vec![
        -2.0 * k1 * k1 * r,
        3.0 * k1 * r2 + k1 * k1 * (-3.0 * kappa - 7.0),
        -2.0 * r3 + 2.0 * k1 * r * (3.0 * kappa + 4.0),
    ]);
    let b = Polynomial::new(vec![
        2.0 * k1 * k1 * r,
        -9.0 * k1 * r2 + 3.0 * k1 * k1 * (kappa - 1.0),
        6.0 * r3 + 4.0 * k1 * r,
    ]);
    let pre = -1.0 / (6.0 * k1);
    Ok((
        RationalFn::new(-1, a.scale(pre), vec![(d.clone(), 2)])?,
        RationalFn::new(-1, b.scale(pre), vec![(d, 2)])?,
    ))
}

fn two_body_fg(kappa: f64, r: f64) -> DiffOperator {
    let k1 = kappa + 1.0;
    let (k2, k4) = (k1 * k1, k1.powi(4));
    let r2 = r * r;
    let h = [
        0.0,
        2.0 * r2 / (3.0 * k2),
        -(3.0 * kappa - 4.0) * r / (3.0 * k2),
        -r * (3.0 * r2 * r - 3.0 * (kappa - 1.0) * k1 * r) / (3.0 * k4),
    ];
    let s = [
        0.0,
        -r / (3.0 * kappa + 3.0),
        r2 / k2,
        -(3.0 * kappa - 1.0) * r / (3.0 * k2),
        -r2 * (-kappa * kappa + r2 + 1.0) / (2.0 * k4),
    ];
    DiffOperator::from_terms(vec![
        (RationalFn::polynomial(Polynomial::new(h.to_vec())), 1),
        (RationalFn::polynomial(Polynomial::new(s.to_vec())), 2),
    ])
}

/// Normalization constant `C_k = R_1 k + R_2 k²` of the derivative form (two-body).
pub fn two_body_normalization(kappa: f64, r: f64) -> [f64; 3] {
    let k2 = (kappa + 1.0).powi(2);
    [
        0.0,
        -(3.0 * kappa * kappa + 10.0 * kappa + 3.0 * r * r + 7.0) / (6.0 * k2),
        -(-kappa * kappa + r * r + 1.0) / (2.0 * k2),
    ]
}

fn two_body_second(kappa: f64, r: f64) -> Result<KPolynomial> {
    let k1 = kappa + 1.0;
    let r2 = r * r;
    let r4 = r2 * r2;
    let kap2 = kappa * kappa;
    let k = Polynomial::new(vec![0.0, 1.0]);
    let c = Polynomial::constant;
    let kp = |shift: f64| &k + &c(shift);
    let kk1 = &k * &kp(1.0);
    let eps = r2 - k1 * (3.0 * kappa + 1.0);

    let t1 = (&kk1 * &k.pow(2)).scale(-(4.0 * k1 * k1 + 3.0 * r4 + 3.0 * k1 * (kappa + 3.0) * r2));
    let beta = 8.0 * k1.powi(3) + r4 + k1 * (5.0 * kappa + 7.0) * r2;
    let gamma = k1 * k1 * (45.0 * kap2 + 84.0 * kappa - 6.0 * r2 + 38.0);
    let t2 = (&kk1 * &Polynomial::new(vec![gamma, 3.0 * beta])).scale(-1.0);
    let t3 = Polynomial::new(vec![
        0.0,
        -6.0 * k1.powi(3) * (3.0 * kappa + 4.0),
        0.0,
        2.0 * r2 * (10.0 * r2 - k1 * (15.0 * kappa + 2.0)),
        r2 * (3.0 * kap2 - 5.0 * r2 - 3.0),
    ])
    .scale(1.0 / k1);
    let t4 = Polynomial::monomial(2, (-12.0 * k1.powi(3) + r4 + k1 * (3.0 * kappa + 11.0) * r2) / k1);
    let t5 = (&(&kp(-2.0) * &kp(-1.0).pow(2)) * &k).scale(-r2);
    let inner = &(&k.scale(3.0 * k1 * (kappa + 5.0) + 9.0 * r2) + &k.pow(2).scale(-3.0 * kap2 + 5.0 * r2 + 3.0))
        - &c(2.0 * (kappa + 2.0 * r2 + 1.0));
    let t6 = (&(&kp(-1.0) * &k) * &inner).scale(r / k1);
    let kk12 = &kk1 * &kp(2.0);
    let t7 = (&kk12 * &Polynomial::new(vec![k1 * (21.0 * kappa + 20.0), 6.0 * (kappa + r2 + 1.0)]))
        .scale(k1 * eps / 3.0);
    let t8 = (&kk12 * &kp(3.0)).scale(-k1 * k1 * eps * eps / 4.0);

    // (k-polynomial, basis element, sign of the x-function)
    let terms: [(&Polynomial, usize, f64); 8] = [
        (&t1, DM2, 1.0),
        (&t2, DM2, 1.0),
        (&t3, DM1, -1.0),
        (&t4, DM1, -1.0),
        (&t5, XM2, 1.0),
        (&t6, XM1, 1.0),
        (&t7, DM3, -1.0),
        (&t8, DM4, 1.0),
    ];
    let d = Polynomial::new(vec![k1, -r]);
    let pre = -1.0 / (18.0 * k1 * k1);
    let mut q = Vec::new();
    for j in 0..=4 {
        let mut b = Basis::default();
        for (p, slot, sign) in terms {
            b.0[slot] += sign * p.coeffs().get(j).copied().unwrap_or(0.0);
        }
        q.push(b.to_rational(&d, pre)?);
    }
    Ok(KPolynomial::new(q))
}

fn three_body_first(kappa: f64, r: f64) -> Result<(RationalFn, RationalFn)> {
    let k1 = kappa + 1.0;
    let d = Polynomial::new(vec![k1, 0.0, -r]);
    let r2 = r * r;
    let p1 = Polynomial::new(vec![-3.0 * (kappa * kappa + 5.0 * kappa + 4.0), 0.0, -2.0 * r2 + (9.0 * kappa + 14.0) * r]);
    let p2 = Polynomial::new(vec![3.0 * (kappa * kappa - 1.0) - 3.0 * k1 * r, 0.0, 2.0 * r2 + 4.0 * r]);
    Ok((
        RationalFn::new(0, p1.scale(-1.0 / 6.0), vec![(d.clone(), 2)])?,
        RationalFn::new(0, p2.scale(-1.0 / 6.0), vec![(d, 2)])?,
    ))
}

fn three_body_second(kappa: f64, r: f64) -> Result<KPolynomial> {
    let k = kappa;
    let k1 = k + 1.0;
    let r2 = r * r;
    let e = -3.0 * k + r - 1.0;
    let rp2 = r + 2.0;
    // (-D)^-1 and (-D)^-3 enter with a minus sign
    let g1 = Basis::with(&[
        (DM2, 180.0 * r2),
        (DM3, -9936.0 * k * k * k1),
        (DM3, -64.0 * k1 * (9.0 * r - 59.0) * r),
        (DM3, 5168.0 * k * k1 * r),
        (XM2, -72.0 * r / k1),
        (DM2, -48.0 * (68.0 * k + 77.0) * r),
        (DM4, 432.0 * k1 * k1 * e * e),
        (DM3, -13040.0 * k * k1),
        (DM3, -3200.0 * k1),
        (DM2, 6.0 * k * (1377.0 * k + 2680.0)),
        (DM1, 12.0 * (-189.0 * k + 62.0 * r - 338.0)),
        (DM2, 7548.0),
    ]);
    let g2 = Basis::with(&[
        (DM2, 90.0 * r2),
        (DM3, -7452.0 * k * k * k1),
        (DM3, -48.0 * k1 * (9.0 * r - 59.0) * r),
        (DM2, 24.0 * r * (56.0 * k - 9.0 * r + 35.0)),
        (DM3, 3876.0 * k * k1 * r),
        (XM2, 108.0 * r / k1),
        (DM2, -24.0 * (68.0 * k + 77.0) * r),
        (DM4, 396.0 * k1 * k1 * e * e),
        (DM3, -9780.0 * k * k1),
        (DM3, -2400.0 * k1),
        (DM2, 48.0 * (59.0 * k + 62.0)),
        (DM2, 3.0 * k * (1377.0 * k + 2680.0)),
        (DM1, -144.0 * (4.0 * r + 11.0)),
        (DM3, 288.0 * k1 * rp2 * e),
        (DM2, 3774.0),
    ]);
    let g3 = Basis::with(&[
        (DM1, -12.0 * (16.0 * k1 - 9.0 * r2 + 14.0 * k1 * r) / k1),
        (DM3, -1242.0 * k * k * k1),
        (DM2, 72.0 * rp2 * rp2),
        (DM3, 216.0 * k1 * rp2 * e),
        (DM4, 108.0 * k1 * k1 * e * e),
        (DM3, -1630.0 * k * k1),
        (DM3, -8.0 * k1 * r * (9.0 * r - 59.0)),
        (DM3, -400.0 * k1),
        (DM2, 12.0 * r * (56.0 * k - 9.0 * r + 35.0)),
        (DM2, 24.0 * (59.0 * k + 62.0)),
        (DM3, 646.0 * k * k1 * r),
        (XM2, -36.0 * r / k1),
    ]);
    let g4 = Basis::with(&[(DM2, 36.0 * rp2 * rp2), (DM3, 36.0 * k1 * rp2 * e), (DM4, 9.0 * k1 * k1 * e * e)]);
    let d = Polynomial::new(vec![k1, 0.0, -r]);
    let s = 1.0 / 648.0;
    Ok(KPolynomial::new(vec![
        RationalFn::constant(0.0),
        g1.to_rational(&d, s)?,
        g2.to_rational(&d, s)?,
        g3.to_rational(&d, s)?,
        g4.to_rational(&d, s)?,
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_body_first_eigenvalue() {
        let p = ModelParams::pure(2, 1.0, 100, 0.5, 1.0).unwrap();
        assert!((eigen_correction(&p, 1, 1).unwrap() - 13.0 / 4.5).abs() < 1e-14);
        assert!((eigen_correction(&p, 1, 2).unwrap() - 100.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn three_body_first_eigenvalue_is_kappa_free() {
        for kappa in [0.0, 0.5, 3.0] {
            let p = ModelParams::pure(3, 1.0, 100, kappa, 1.0).unwrap();
            assert!((eigen_correction(&p, 1, 1).unwrap() - 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn root_of_first_order_numerator() {
        // λ_1^(1) two-body ∝ κ + (2κ + 3r² + 2) - r² + 1 = 3κ + 2r² + 3 > 0; three-body
        // (2/3)((2r + 4) + (5 - 2r)) = 6 never vanishes, but the k = 1 two-body
        // coefficient B_1 vanishes at r² = κ + 1.
        let c = eigen_coefficients(Interaction::TwoBody, 1, 0.0, 1.0).unwrap();
        assert_eq!(c[1], 0.0);
    }

    #[test]
    fn mixtures_are_unsupported() {
        let p = ModelParams::new(
            20,
            0.1,
            1.0,
            vec![crate::CouplingSpec::new(2, 1.0).unwrap(), crate::CouplingSpec::new(3, 1.0).unwrap()],
        )
        .unwrap();
        assert!(matches!(build_correction_operators(&p, FirstOrderForm::KPolynomial), Err(Error::Unsupported(_))));
        assert!(matches!(eigen_correction(&p, 1, 1), Err(Error::Unsupported(_))));
        let p4 = ModelParams::pure(4, 1.0, 20, 0.1, 1.0).unwrap();
        assert!(Interaction::of(&p4).is_err());
    }

    #[test]
    fn lambda_operator_reproduces_eigenvalue() {
        for order in [2, 3] {
            let p = ModelParams::pure(order, 1.0, 100, 0.5, 0.8).unwrap();
            let sol = build_correction_operators(&p, FirstOrderForm::KPolynomial).unwrap();
            for k in 1..=4 {
                let g = sol.gk_series(k, 50).unwrap();
                let lg = sol.l1.apply(&g).unwrap();
                let lam = eigen_correction(&p, 1, k).unwrap();
                for w in 1..=lg.top() {
                    assert!((lg.coeff(w) - lam * g.coeff(w)).abs() < 1e-10 * (lam * g.coeff(w)).abs().max(1.0));
                }
            }
        }
    }
}
