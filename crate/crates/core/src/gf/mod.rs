//! Generating-function solution: dilute limit plus 1/N corrections.

mod assemble;
mod corrections;
mod lo;

pub use assemble::{
    gf_components, gf_components_jet, gf_corrected, gf_corrected_jet, Components, CorrectionOptions,
    SecondOrderVariant,
};
pub use corrections::{
    build_correction_operators, eigen_coefficients, eigen_correction, two_body_normalization, FirstOrderForm,
    Interaction, PerturbativeSolution,
};
pub use lo::{gf_lo, gf_lo_jet, LoSolution};

use crate::error::{Error, Result};
use crate::master_equation::{ModelParams, WeightDistribution};

/// Late-time mean weight `k / (1 - r_eff)` of the slowest mode `G_k`.
///
/// With `dilute` set, `k` is the smallest occupied weight: at `N = ∞` weights
/// never decrease. Otherwise the finite-N dynamics reach the bottom of the
/// initial parity sector, which is `k = 1` unless every coupling has odd order
/// and the initial distribution is supported on even weights only.
pub fn plateau(params: &ModelParams, b0: &WeightDistribution, dilute: bool) -> Result<f64> {
    let lo = LoSolution::new(params)?;
    if lo.is_marginal() {
        return Err(Error::Unsupported(format!("r_eff = {} >= 1 has no plateau", lo.r_eff)));
    }
    let k = if dilute {
        b0.iter().find(|&(_, v)| v != 0.0).map(|(w, _)| w).ok_or_else(|| Error::Domain("empty distribution".into()))?
    } else {
        let parity_conserved = params.active().all(|c| c.order % 2 == 1);
        if parity_conserved && !b0.has_odd_support() {
            2
        } else {
            1
        }
    };
    Ok(k as f64 / (1.0 - lo.r_eff))
}
