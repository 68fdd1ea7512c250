use crate::error::{domain, Error, Result};
use crate::master_equation::{lo_left_right_eigvecs, ModelParams, WeightDistribution};
use crate::series::{solve_composition, DiffOperator, Jet, Polynomial, RationalFn, TruncatedSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    TwoBody,
    ThreeBody,
    General,
}

/// Dilute-limit solution: `Â₀ G_k = λ_k G_k` with `G_k = G_1^k`,
/// `λ_k = -2k(a_Σ + κ)` and `G_1 = x + O(x^2)`.
#[derive(Debug, Clone)]
pub struct LoSolution {
    params: ModelParams,
    pub lambda1: f64,
    pub r_eff: f64,
    // φ(x) = Σ_n ρ_n x^{n-1}, ρ_n = a_n r / (a_Σ + κ)
    phi: Polynomial,
    shape: Shape,
}

impl LoSolution {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let c = params.total_strength() + params.kappa;
        if !(c > 0.0) {
            return domain("leading-order solution needs a_Σ + κ > 0");
        }
        let mut phi = vec![0.0; params.max_order()];
        for s in params.active() {
            phi[s.order - 1] += s.strength * params.r / c;
        }
        let shape = match params.pure_coupling().map(|s| s.order) {
            Some(2) => Shape::TwoBody,
            Some(3) => Shape::ThreeBody,
            _ => Shape::General,
        };
        Ok(Self {
            params: params.clone(),
            lambda1: -2.0 * c,
            r_eff: params.r_eff(),
            phi: Polynomial::new(phi),
            shape,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lambda(&self, k: usize) -> f64 {
        k as f64 * self.lambda1
    }

    /// `r_eff >= 1`: the flow has no finite-size fixed point and plateaus diverge.
    pub fn is_marginal(&self) -> bool {
        self.r_eff >= 1.0
    }

    /// Radius of convergence of `G_1` about 0: the smallest positive root of `φ(x) = 1`.
    pub fn radius(&self) -> f64 {
        let rho = self.phi.coeffs().iter().sum::<f64>();
        match self.shape {
            _ if rho == 0.0 => f64::INFINITY,
            Shape::TwoBody => 1.0 / rho,
            Shape::ThreeBody => 1.0 / rho.sqrt(),
            Shape::General => {
                let (mut lo, mut hi) = (0.0, 1.0);
                while self.phi.eval(hi) < 1.0 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.phi.eval(mid) < 1.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }

    /// `Â₀ = (Σ_n 2 a_n r x^n - 2(a_Σ + κ) x) ∂`.
    pub fn a0_operator(&self) -> DiffOperator {
        let c = -self.lambda1 / 2.0;
        let mut p = vec![0.0; self.params.max_order() + 1];
        p[1] = -2.0 * c;
        for s in self.params.active() {
            p[s.order] += 2.0 * s.strength * self.params.r;
        }
        DiffOperator::term(RationalFn::polynomial(Polynomial::new(p)), 1)
    }

    fn one_minus_phi(&self) -> Polynomial {
        &Polynomial::constant(1.0) - &self.phi
    }

    /// `d ln G_1 / dx = 1 / (x (1 - φ(x)))`.
    fn log_derivative(&self) -> RationalFn {
        RationalFn::new(-1, Polynomial::constant(1.0), vec![(self.one_minus_phi(), 1)])
            .expect("1 - φ(0) = 1")
    }

    // φ(x) / (x (1 - φ(x))), regular at 0
    fn log_excess(&self) -> RationalFn {
        let num = Polynomial::new(self.phi.coeffs()[1..].to_vec());
        RationalFn::new(0, num, vec![(self.one_minus_phi(), 1)]).expect("1 - φ(0) = 1")
    }

    /// `G_1` as a series through `x^top`.
    pub fn g1_series(&self, top: i32) -> Result<TruncatedSeries> {
        match self.shape {
            Shape::TwoBody => {
                RationalFn::new(1, Polynomial::constant(1.0), vec![(self.one_minus_phi(), 1)])?.to_series(top)
            }
            Shape::ThreeBody => Ok(TruncatedSeries::from_polynomial(self.one_minus_phi().coeffs(), top - 1)
                .pow_real(-0.5)?
                .shift(1)),
            Shape::General => {
                let ln = self.log_excess().to_series(top - 2)?.integrate()?;
                Ok(ln.exp()?.shift(1))
            }
        }
    }

    /// `G_k = G_1^k` through `x^top`.
    pub fn gk_series(&self, k: usize, top: i32) -> Result<TruncatedSeries> {
        if k == 0 {
            return domain("mode index starts at 1");
        }
        let g1 = self.g1_series(top - (k as i32 - 1))?;
        g1.powi(k as i32)
    }

    /// Left eigenvector `W_k` as a polynomial series, normalized to `<W_k|G_k> = 1`.
    pub fn left_eigvec(&self, k: usize) -> Result<TruncatedSeries> {
        let (left, _) = lo_left_right_eigvecs(&self.params, k, k)?;
        Ok(TruncatedSeries::new(1, left))
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if !(x >= 0.0) || x >= self.radius() {
            return domain(format!("x = {x} outside [0, {}) where G_1 is analytic", self.radius()));
        }
        Ok(())
    }

    /// `ln(G_1(x) / x)` by quadrature.
    fn log_excess_integral(&self, x: f64) -> f64 {
        if x == 0.0 || self.r_eff == 0.0 {
            return 0.0;
        }
        let f = self.log_excess();
        quadrature::double_exponential::integrate(|s| f.eval(s), 0.0, x, 1e-14).integral
    }

    pub fn g1_value(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let q = self.one_minus_phi().eval(x);
        Ok(match self.shape {
            Shape::TwoBody => x / q,
            Shape::ThreeBody => x / q.sqrt(),
            Shape::General => x * self.log_excess_integral(x).exp(),
        })
    }

    pub fn theta(&self, t: f64) -> f64 {
        (self.lambda1 * t).exp()
    }

    /// `x_t` solving `G_1(x_t) = e^{λ_1 t} G_1(x)`.
    pub fn flow_value(&self, x: f64, t: f64) -> Result<f64> {
        self.check_domain(x)?;
        check_time(t)?;
        let th = self.theta(t);
        let rho = self.phi.coeffs().iter().sum::<f64>();
        match self.shape {
            Shape::TwoBody => Ok(th * x / (1.0 - rho * (1.0 - th) * x)),
            Shape::ThreeBody => Ok(th * x / (1.0 - rho * (1.0 - th * th) * x * x).sqrt()),
            Shape::General => {
                if x == 0.0 || th == 1.0 {
                    return Ok(x);
                }
                // ln y + I(y) = ln x + I(x) + ln θ, increasing in y on (0, x]
                let target = x.ln() + self.log_excess_integral(x) + th.ln();
                let psi = |y: f64| y.ln() + self.log_excess_integral(y) - target;
                let dpsi = |y: f64| 1.0 / (y * self.one_minus_phi().eval(y));
                let (mut lo, mut hi) = (0.0, x);
                let mut y = th * x;
                for _ in 0..100 {
                    let f = psi(y);
                    if f.abs() < 1e-14 {
                        return Ok(y);
                    }
                    if f > 0.0 {
                        hi = y;
                    } else {
                        lo = y;
                    }
                    let next = y - f / dpsi(y);
                    y = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
                    if hi - lo < 1e-15 * x {
                        return Ok(y);
                    }
                }
                Err(Error::Newton { residual: psi(y).abs() })
            }
        }
    }

    /// Series of `x_t` in `x` through `x^top`.
    pub fn flow_series(&self, t: f64, top: i32) -> Result<TruncatedSeries> {
        check_time(t)?;
        let th = self.theta(t);
        let rho = self.phi.coeffs().iter().sum::<f64>();
        match self.shape {
            Shape::TwoBody => {
                RationalFn::new(1, Polynomial::constant(th), vec![(Polynomial::new(vec![1.0, -rho * (1.0 - th)]), 1)])?
                    .to_series(top)
            }
            Shape::ThreeBody => Ok(TruncatedSeries::from_polynomial(&[1.0, 0.0, -rho * (1.0 - th * th)], top - 1)
                .pow_real(-0.5)?
                .scale(th)
                .shift(1)),
            Shape::General => {
                if th == 1.0 {
                    return Ok(TruncatedSeries::from_polynomial(&[0.0, 1.0], top));
                }
                crate::series::invert_flow(&self.g1_series(top)?, th)
            }
        }
    }

    /// Taylor jet of `x_t` about `x0`.
    pub fn flow_jet(&self, x0: f64, t: f64, order: usize) -> Result<Jet> {
        self.check_domain(x0)?;
        check_time(t)?;
        let th = self.theta(t);
        let rho = self.phi.coeffs().iter().sum::<f64>();
        match self.shape {
            Shape::TwoBody => {
                RationalFn::new(1, Polynomial::constant(th), vec![(Polynomial::new(vec![1.0, -rho * (1.0 - th)]), 1)])?
                    .to_jet(x0, order)
            }
            Shape::ThreeBody => {
                let q = Jet::from_polynomial(&Polynomial::new(vec![1.0, 0.0, -rho * (1.0 - th * th)]), x0, order);
                Jet::variable(x0, order).scale(th).mul(&q.pow_real(-0.5)?)
            }
            Shape::General => {
                let y0 = self.flow_value(x0, t)?;
                if th == 1.0 {
                    return Ok(Jet::variable(x0, order));
                }
                // ψ(x_t) - ψ(y0) = ψ(x) - ψ(x0) with ψ = ln G_1
                let dpsi = self.log_derivative();
                let outer = dpsi.to_jet(y0, order)?.integrate(0.0);
                let target = dpsi.to_jet(x0, order)?.integrate(0.0);
                let mut guess = vec![0.0; order + 1];
                if order >= 1 {
                    guess[1] = target.coeffs()[1] / outer.coeffs()[1];
                }
                let u = solve_composition(
                    &TruncatedSeries::new(0, outer.coeffs()[..=order].to_vec()),
                    &TruncatedSeries::new(0, target.coeffs()[..=order].to_vec()),
                    TruncatedSeries::new(0, guess),
                    1e-14,
                )?;
                let mut c: Vec<f64> = (0..=order as i32).map(|p| u.get(p).unwrap_or(0.0)).collect();
                c[0] = y0;
                Jet::new(x0, c)
            }
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and >= 0, got {t}"));
    }
    Ok(())
}

pub(crate) fn init_polynomial(b0: &WeightDistribution) -> Polynomial {
    Polynomial::new(b0.generating_polynomial())
}

/// Dilute-limit generating function `G_init(x_t)` as a series through `x^top`.
pub fn gf_lo(params: &ModelParams, b0: &WeightDistribution, t: f64, top: i32) -> Result<TruncatedSeries> {
    let sol = LoSolution::new(params)?;
    let xt = sol.flow_series(t, top)?;
    let gi = TruncatedSeries::from_polynomial(init_polynomial(b0).coeffs(), top);
    gi.compose(&xt)
}

/// Taylor jet of `G_init(x_t)` about `x0`.
pub fn gf_lo_jet(params: &ModelParams, b0: &WeightDistribution, t: f64, x0: f64, order: usize) -> Result<Jet> {
    let sol = LoSolution::new(params)?;
    let xt = sol.flow_jet(x0, t, order)?;
    sol.check_domain(xt.value())?;
    Jet::from_polynomial(&init_polynomial(b0), xt.value(), order).compose(&xt)
}
