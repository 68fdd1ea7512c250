use crate::error::{domain, Result};
use crate::master_equation::{ModelParams, WeightDistribution};
use crate::series::{kpoly_to_operator, Expansion, Jet, KPolynomial, RationalFn, TruncatedSeries};

use super::corrections::{build_correction_operators, FirstOrderForm, PerturbativeSolution};
use super::lo::{init_polynomial, LoSolution};

/// Placement of the time factor on the mixed `Ô^(1) Λ̂^(1)` term at second order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondOrderVariant {
    /// `t Ô^(1) Λ̂^(1)`, which makes `G^(2)` vanish at `t = 0` and solve the
    /// second-order flow equation.
    #[default]
    Consistent,
    /// `Ô^(1) Λ̂^(1)` without the factor of `t`. Kept for comparison only.
    Literal,
}

#[derive(Debug, Clone, Default)]
pub struct CorrectionOptions {
    pub first_order_form: FirstOrderForm,
    pub second_order: SecondOrderVariant,
    /// `C_k^(1) = Σ_j c1[j] k^j`: renormalizes `G_k^(1)` by `C_k^(1) G_k`;
    /// `Ô^(2)` follows along, so `G(x, t)` does not change.
    pub c1: Vec<f64>,
    /// `C_k^(2)` added to `Ô^(2)`; drops out of `G(x, t)` identically.
    pub c2: Vec<f64>,
}

/// `G = G^(0) + G^(1)/N + G^(2)/N²`, split by order.
#[derive(Debug, Clone)]
pub struct Components<T> {
    pub g0: T,
    pub g1: Option<T>,
    pub g2: Option<T>,
}

impl<T: Expansion> Components<T> {
    pub fn combine(&self, n: f64) -> Result<T> {
        let mut g = self.g0.clone();
        if let Some(g1) = &self.g1 {
            g = g.add(&g1.scale(1.0 / n))?;
        }
        if let Some(g2) = &self.g2 {
            g = g.add(&g2.scale(1.0 / (n * n)))?;
        }
        Ok(g)
    }
}

trait FlowRepr: Expansion {
    fn pull_back(&self, xt: &Self) -> Result<Self>;
    /// Drops the cancelled non-positive powers of a series.
    fn physical(self) -> Result<Self>;
}

impl FlowRepr for TruncatedSeries {
    fn pull_back(&self, xt: &Self) -> Result<Self> {
        self.compose(xt)
    }

    fn physical(self) -> Result<Self> {
        self.strip_nonpositive(1e-10)
    }
}

impl FlowRepr for Jet {
    fn pull_back(&self, xt: &Self) -> Result<Self> {
        self.compose(xt)
    }

    fn physical(self) -> Result<Self> {
        Ok(self)
    }
}

fn with_hooks(params: &ModelParams, opts: &CorrectionOptions) -> Result<PerturbativeSolution> {
    let mut sol = build_correction_operators(params, opts.first_order_form)?;
    if !opts.c1.is_empty() {
        sol.renormalize(&opts.c1);
    }
    if !opts.c2.is_empty() {
        let q = KPolynomial::new(opts.c2.iter().map(|&v| RationalFn::constant(v)).collect());
        sol.o2 = sol.o2.plus(&kpoly_to_operator(&q, &sol.a0, sol.lambda1));
    }
    Ok(sol)
}

// gi: initial generating function expanded where the flow lands; xt: the flow.
fn assemble<T: FlowRepr>(
    sol: &PerturbativeSolution,
    gi: &T,
    xt: &T,
    tau: f64,
    order: usize,
    variant: SecondOrderVariant,
) -> Result<Components<T>> {
    let git = gi.pull_back(xt)?;
    let mut out = Components { g0: git.clone(), g1: None, g2: None };
    if order == 0 {
        return Ok(out);
    }
    let o1gi = sol.o1.apply(gi)?.physical()?;
    let f = o1gi.pull_back(xt)?;
    let l1git = sol.l1.apply(&git)?;
    let g1 = l1git.scale(tau).add(&sol.o1.apply(&git)?)?.add(&f.scale(-1.0))?;
    out.g1 = Some(g1.physical()?);
    if order == 1 {
        return Ok(out);
    }
    let mixed = match variant {
        SecondOrderVariant::Consistent => tau,
        SecondOrderVariant::Literal => 1.0,
    };
    let mut g2 = sol.l2.apply(&git)?.scale(tau);
    g2 = g2.add(&sol.l1.apply(&l1git)?.scale(0.5 * tau * tau))?;
    g2 = g2.add(&sol.apply_o2(&git)?)?;
    g2 = g2.add(&sol.o1.apply(&l1git)?.scale(mixed))?;
    g2 = g2.add(&sol.l1.apply(&f)?.scale(-tau))?;
    g2 = g2.add(&sol.o1.apply(&f)?.scale(-1.0))?;
    let o2gi = sol.apply_o2(gi)?.physical()?;
    g2 = g2.add(&o2gi.pull_back(xt)?.scale(-1.0))?;
    let o1o1gi = sol.o1.apply(&o1gi)?.physical()?;
    g2 = g2.add(&o1o1gi.pull_back(xt)?)?;
    out.g2 = Some(g2.physical()?);
    Ok(out)
}

fn check_order(order: usize) -> Result<()> {
    if order > 2 {
        return domain(format!("expansion order {order} not available (0, 1 or 2)"));
    }
    Ok(())
}

// headroom lost to x^-1, x^-2 coefficients and repeated differentiation
const SERIES_HEADROOM: i32 = 8;
const JET_HEADROOM: usize = 8;

/// Series components of the 1/N-corrected generating function through `x^top`.
pub fn gf_components(
    params: &ModelParams,
    b0: &WeightDistribution,
    t: f64,
    order: usize,
    opts: &CorrectionOptions,
    top: i32,
) -> Result<Components<TruncatedSeries>> {
    check_order(order)?;
    let lo = LoSolution::new(params)?;
    let inner = top + SERIES_HEADROOM;
    let xt = lo.flow_series(t, inner)?;
    let gi = TruncatedSeries::from_polynomial(init_polynomial(b0).coeffs(), inner);
    let c = if order == 0 {
        Components { g0: gi.compose(&xt)?, g1: None, g2: None }
    } else {
        let sol = with_hooks(params, opts)?;
        assemble(&sol, &gi, &xt, sol.strength * t, order, opts.second_order)?
    };
    Ok(Components {
        g0: c.g0.truncated(top),
        g1: c.g1.map(|g| g.truncated(top)),
        g2: c.g2.map(|g| g.truncated(top)),
    })
}

/// `G(x, t)` through the given order in 1/N as a series through `x^top`.
pub fn gf_corrected(
    params: &ModelParams,
    b0: &WeightDistribution,
    t: f64,
    order: usize,
    opts: &CorrectionOptions,
    top: i32,
) -> Result<TruncatedSeries> {
    gf_components(params, b0, t, order, opts, top)?.combine(params.qubits as f64)
}

/// Jet components of the corrected generating function about `x0`.
///
/// Exact to the jet order, but the `x^-1`, `x^-2` coefficients are evaluated
/// at `x_t(x0)`, so cancellation grows once `x_t(x0)` becomes small
/// (late times); the series route does not have this problem.
pub fn gf_components_jet(
    params: &ModelParams,
    b0: &WeightDistribution,
    t: f64,
    order: usize,
    opts: &CorrectionOptions,
    x0: f64,
    jet_order: usize,
) -> Result<Components<Jet>> {
    check_order(order)?;
    let lo = LoSolution::new(params)?;
    let inner = jet_order + JET_HEADROOM;
    let xt = lo.flow_jet(x0, t, inner)?;
    let gi = Jet::from_polynomial(&init_polynomial(b0), xt.value(), inner);
    let c = if order == 0 {
        Components { g0: gi.compose(&xt)?, g1: None, g2: None }
    } else {
        let sol = with_hooks(params, opts)?;
        assemble(&sol, &gi, &xt, sol.strength * t, order, opts.second_order)?
    };
    Ok(Components {
        g0: c.g0.truncated(jet_order),
        g1: c.g1.map(|g| g.truncated(jet_order)),
        g2: c.g2.map(|g| g.truncated(jet_order)),
    })
}

pub fn gf_corrected_jet(
    params: &ModelParams,
    b0: &WeightDistribution,
    t: f64,
    order: usize,
    opts: &CorrectionOptions,
    x0: f64,
    jet_order: usize,
) -> Result<Jet> {
    gf_components_jet(params, b0, t, order, opts, x0, jet_order)?.combine(params.qubits as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(order: usize, n: usize) -> ModelParams {
        ModelParams::pure(order, 1.0, n, 0.5, 1.0).unwrap()
    }

    #[test]
    fn corrections_vanish_at_time_zero() {
        for l in [2, 3] {
            let p = params(l, 100);
            let b0 = WeightDistribution::delta(2, 40).unwrap();
            let c = gf_components(&p, &b0, 0.0, 2, &CorrectionOptions::default(), 40).unwrap();
            assert!(c.g1.unwrap().max_abs() < 1e-10);
            assert!(c.g2.unwrap().max_abs() < 1e-9);
            assert!((c.g0.coeff(2) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn literal_variant_does_not_vanish_at_time_zero() {
        let p = params(2, 100);
        let b0 = WeightDistribution::delta(2, 40).unwrap();
        let opts = CorrectionOptions { second_order: SecondOrderVariant::Literal, ..Default::default() };
        let c = gf_components(&p, &b0, 0.0, 2, &opts, 40).unwrap();
        assert!(c.g2.unwrap().max_abs() > 1e-3);
    }

    #[test]
    fn three_body_preserves_parity() {
        let p = params(3, 100);
        let b0 = WeightDistribution::delta(3, 40).unwrap();
        let g = gf_corrected(&p, &b0, 0.7, 2, &CorrectionOptions::default(), 60).unwrap();
        for w in (2..=60).step_by(2) {
            assert!(g.coeff(w).abs() < 1e-12, "w = {w}: {}", g.coeff(w));
        }
    }

    #[test]
    fn derivative_form_gives_the_same_first_order() {
        let p = params(2, 50);
        let b0 = WeightDistribution::delta(2, 40).unwrap();
        let a = gf_components(&p, &b0, 0.8, 1, &CorrectionOptions::default(), 50).unwrap();
        let opts = CorrectionOptions { first_order_form: FirstOrderForm::Derivative, ..Default::default() };
        let b = gf_components(&p, &b0, 0.8, 1, &opts, 50).unwrap();
        let (a, b) = (a.g1.unwrap(), b.g1.unwrap());
        for w in 1..=50 {
            assert!((a.coeff(w) - b.coeff(w)).abs() < 1e-10, "w = {w}");
        }
        let a = gf_corrected(&p, &b0, 0.8, 2, &CorrectionOptions::default(), 50).unwrap();
        let b = gf_corrected(&p, &b0, 0.8, 2, &opts, 50).unwrap();
        for w in 1..=50 {
            assert!((a.coeff(w) - b.coeff(w)).abs() < 1e-10, "w = {w}");
        }
    }

    #[test]
    fn normalization_hooks_drop_out() {
        for l in [2, 3] {
            let p = params(l, 50);
            let b0 = WeightDistribution::delta(3, 40).unwrap();
            let base = gf_corrected(&p, &b0, 0.6, 2, &CorrectionOptions::default(), 50).unwrap();
            let opts = CorrectionOptions { c1: vec![0.3, -0.7, 0.2], c2: vec![1.1, 0.4], ..Default::default() };
            let hooked = gf_corrected(&p, &b0, 0.6, 2, &opts, 50).unwrap();
            for w in 1..=50 {
                assert!((base.coeff(w) - hooked.coeff(w)).abs() < 1e-9, "L={l} w={w}");
            }
        }
    }

    #[test]
    fn jet_and_series_agree() {
        for l in [2, 3] {
            let p = params(l, 40);
            let b0 = WeightDistribution::delta(2, 40).unwrap();
            let opts = CorrectionOptions::default();
            let s = gf_corrected(&p, &b0, 0.5, 2, &opts, 400).unwrap();
            let j = gf_corrected_jet(&p, &b0, 0.5, 2, &opts, 1.0, 3).unwrap();
            let d = s.derivative();
            assert!((j.value() - s.eval(1.0)).abs() < 1e-9);
            assert!((j.derivative_value(1).unwrap() - d.eval(1.0)).abs() < 1e-8);
            assert!((j.derivative_value(2).unwrap() - d.derivative().eval(1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn coupling_strength_rescales_time() {
        let b0 = WeightDistribution::delta(2, 40).unwrap();
        let opts = CorrectionOptions::default();
        let p1 = ModelParams::pure(2, 1.0, 60, 0.25, 1.0).unwrap();
        let p2 = ModelParams::pure(2, 2.0, 60, 0.5, 1.0).unwrap();
        let a = gf_corrected(&p1, &b0, 0.8, 2, &opts, 40).unwrap();
        let b = gf_corrected(&p2, &b0, 0.4, 2, &opts, 40).unwrap();
        for w in 1..=40 {
            assert!((a.coeff(w) - b.coeff(w)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_order_and_mixtures() {
        let p = params(2, 20);
        let b0 = WeightDistribution::delta(1, 20).unwrap();
        assert!(gf_corrected(&p, &b0, 0.1, 3, &CorrectionOptions::default(), 20).is_err());
        let mixed = ModelParams::new(
            20,
            0.1,
            1.0,
            vec![crate::CouplingSpec::new(2, 1.0).unwrap(), crate::CouplingSpec::new(3, 1.0).unwrap()],
        )
        .unwrap();
        assert!(gf_corrected(&mixed, &b0, 0.1, 0, &CorrectionOptions::default(), 20).is_ok());
        assert!(matches!(
            gf_corrected(&mixed, &b0, 0.1, 1, &CorrectionOptions::default(), 20),
            Err(crate::Error::Unsupported(_))
        ));
    }
}
