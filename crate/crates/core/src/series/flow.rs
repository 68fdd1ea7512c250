use crate::error::{domain, Error, Result};

use super::{Jet, TruncatedSeries};

const MAX_NEWTON: usize = 60;

/// Solves `outer(y) = target` for a series `y`, starting from `guess`.
///
/// `outer` is expanded about `y(0)`: it is evaluated on `y - y(0)`, which
/// must vanish at 0. Convergence is quadratic once the leading coefficients
/// are right.
pub fn solve_composition(
    outer: &TruncatedSeries,
    target: &TruncatedSeries,
    guess: TruncatedSeries,
    tol: f64,
) -> Result<TruncatedSeries> {
    let d_outer = outer.derivative();
    if d_outer.get(0).unwrap_or(0.0) == 0.0 || d_outer.offset() < 0 && d_outer.coeff(-1) != 0.0 {
        return domain("outer series has vanishing linear coefficient");
    }
    let top = target.top().min(guess.top());
    let mut y = guess.truncated(top);
    let scale = target.max_abs().max(1.0);
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..MAX_NEWTON {
        let f = outer.compose(&y)?;
        let resid = f.sub(target).truncated(top).normalized();
        let norm = resid.max_abs();
        if !norm.is_finite() {
            return Err(Error::Newton { residual: norm });
        }
        // rounding in the composition grows with the size of y's coefficients
        if norm <= tol * scale.max(y.max_abs()) {
            return Ok(y);
        }
        if norm < 0.5 * best {
            best = norm;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 4 {
                return Err(Error::Newton { residual: norm });
            }
        }
        let slope = d_outer.compose(&y)?;
        let step = resid.div(&slope)?.truncated(top);
        y = y.sub(&step).truncated(top);
    }
    Err(Error::Newton { residual: best })
}

/// Series `x_t(x)` with `G1(x_t) = θ G1(x)`.
pub fn invert_flow(g1: &TruncatedSeries, theta: f64) -> Result<TruncatedSeries> {
    if !(theta > 0.0 && theta <= 1.0) {
        return domain(format!("flow parameter θ = {theta} outside (0, 1]"));
    }
    let g1 = g1.clone().normalized();
    if g1.offset() != 1 {
        return domain("flow generator must start at x^1");
    }
    let top = g1.top();
    let id = TruncatedSeries::from_polynomial(&[0.0, 1.0], top);
    if theta == 1.0 {
        return Ok(id);
    }
    if g1.coeff(1) == 0.0 {
        return domain("flow generator has vanishing linear coefficient");
    }
    let target = g1.scale(theta);
    // y ≈ θ x at leading order
    let guess = id.scale(theta);
    solve_composition(&g1, &target, guess, 1e-13)
}

/// `Σ_m w_m g_m` over the common window of two physical series.
pub fn biorthogonal_pairing(w: &TruncatedSeries, g: &TruncatedSeries) -> f64 {
    let lo = w.offset().max(g.offset()).max(1);
    let hi = w.top().min(g.top());
    (lo..=hi).map(|m| w.coeff(m) * g.coeff(m)).sum()
}

/// Jet of a series at `x0`, requiring `|x0|` to lie inside `radius`.
pub fn jet_eval(s: &TruncatedSeries, x0: f64, order: usize, radius: f64) -> Result<Jet> {
    if !(x0.abs() < radius) {
        return domain(format!("jet base {x0} outside convergence radius {radius}"));
    }
    if s.offset() < 0 && x0 == 0.0 {
        return domain("Laurent series evaluated at 0");
    }
    let mut out = Vec::with_capacity(order + 1);
    let mut d = s.clone();
    let mut fact = 1.0;
    for j in 0..=order {
        if j > 0 {
            d = d.derivative();
            fact *= j as f64;
        }
        out.push(d.eval(x0) / fact);
    }
    Jet::new(x0, out)
}
