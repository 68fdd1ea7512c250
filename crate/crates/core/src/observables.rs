//! Echo, dressed OTOC and ROTOC from a weight distribution or its generating function.
//!
//! Every observable is a weighted sum `Σ_w f(w) b_w` with `f` a polynomial of
//! degree at most 3, so it only needs the power sums `S_p = Σ_w w^p b_w`.

use crate::error::{domain, Error, Result};
use crate::master_equation::WeightDistribution;
use crate::series::{jet_eval, Jet, TruncatedSeries};

/// Largest supported probe weight `wt(V)`.
pub const MAX_PROBE_WEIGHT: usize = 3;

pub fn normalize(b: &WeightDistribution) -> Result<WeightDistribution> {
    let norm = b.norm();
    if !(norm > 0.0) {
        return domain(format!("cannot normalize a distribution with total weight {norm}"));
    }
    WeightDistribution::new(b.values().iter().map(|v| v / norm).collect())
}

/// `Echo_W = 4 Σ_w b_w`.
pub fn echo(b: &WeightDistribution) -> f64 {
    4.0 * b.norm()
}

/// Coefficients `[c0, c1, c2, c3]` of the dressed-OTOC weight `Σ_j c_j w^j`
/// multiplying `b_w`, for a probe of weight `v` on `n` qubits.
///
/// The weight is `4 C_w^v / N_w`: the fraction of weight-`w` strings that
/// anticommute with a fixed weight-`v` probe, times 4. For `v = 3` the often
/// quoted `8w(9N² - 3N(4w+5) + 4w² + 12w + 2) / (9(N-2)(N-1)N)` is exact only
/// for `w <= 2`; the count gives an extra `(4/3)(w-1)(w-2)` inside the bracket.
pub fn otoc_weight_polynomial(v: usize, n: usize) -> Result<[f64; 4]> {
    let nf = n as f64;
    match v {
        1 if n >= 1 => Ok([0.0, 8.0 / (3.0 * nf), 0.0, 0.0]),
        2 if n >= 2 => {
            let c = 16.0 / (9.0 * (nf - 1.0) * nf);
            Ok([0.0, c * (3.0 * nf - 1.0), -2.0 * c, 0.0])
        }
        3 if n >= 3 => {
            let c = 8.0 / (9.0 * (nf - 2.0) * (nf - 1.0) * nf);
            Ok([0.0, c * (9.0 * nf * nf - 15.0 * nf + 14.0 / 3.0), -c * (12.0 * nf - 8.0), 16.0 / 3.0 * c])
        }
        1..=MAX_PROBE_WEIGHT => domain(format!("probe weight {v} needs at least {v} qubits, got {n}")),
        _ => Err(Error::Unsupported(format!("probe weight {v}; only 1, 2 and 3 are available"))),
    }
}

/// `S_p = Σ_w w^p b_w` for `p = 0..=3`.
pub fn power_sums(b: &WeightDistribution) -> [f64; 4] {
    let mut s = [0.0; 4];
    for (w, v) in b.iter() {
        let w = w as f64;
        s[0] += v;
        s[1] += w * v;
        s[2] += w * w * v;
        s[3] += w * w * w * v;
    }
    s
}

fn otoc_from_sums(s: &[f64; 4], v: usize, n: usize) -> Result<f64> {
    let c = otoc_weight_polynomial(v, n)?;
    Ok(c.iter().zip(s).map(|(a, b)| a * b).sum())
}

/// Ensemble-averaged dressed OTOC for a probe of weight `v`.
pub fn dressed_otoc(b: &WeightDistribution, v: usize, n: usize) -> Result<f64> {
    otoc_from_sums(&power_sums(b), v, n)
}

/// OTOC normalized by the undressed overlap `⟨W̃ W⟩ = Σ_w b_w = Echo_W / 4`,
/// so that `wt(V) = 1` gives `(8/3N) ⟨w⟩_c`.
pub fn rotoc(b: &WeightDistribution, v: usize, n: usize) -> Result<f64> {
    let norm = b.norm();
    if norm == 0.0 {
        return domain("ROTOC undefined for zero echo");
    }
    Ok(dressed_otoc(b, v, n)? / norm)
}

/// `⟨w^p⟩_c`.
pub fn moment(b: &WeightDistribution, p: u32) -> Result<f64> {
    let norm = b.norm();
    if norm == 0.0 {
        return domain("moment of an empty distribution");
    }
    Ok(b.iter().map(|(w, v)| (w as f64).powi(p as i32) * v).sum::<f64>() / norm)
}

/// `⟨w^p⟩_c` from a jet of `G` about `x = 1`, via `(x d/dx)^p G(1) / G(1)`.
pub fn jet_moment(g: &Jet, p: u32) -> Result<f64> {
    Ok(jet_power_sums(g, p as usize)?[p as usize] / g.value())
}

/// `⟨w^p⟩_c` from a series, requiring `1` to lie inside `radius`.
pub fn series_moment(s: &TruncatedSeries, p: u32, radius: f64) -> Result<f64> {
    jet_moment(&jet_eval(s, 1.0, p as usize, radius)?, p)
}

/// `S_0..=S_p` from a jet about `x = 1`.
fn jet_power_sums(g: &Jet, p: usize) -> Result<Vec<f64>> {
    if (g.base() - 1.0).abs() > 1e-12 {
        return domain(format!("power sums need a jet at x = 1, got {}", g.base()));
    }
    if g.order() < p {
        return domain(format!("moment {p} needs jet order {p}, have {}", g.order()));
    }
    // (x d/dx)^p = Σ_j S(p, j) x^j d^j with Stirling numbers of the second kind
    let mut stirling = vec![1.0];
    let mut out = vec![g.value()];
    for q in 1..=p {
        let mut next = vec![0.0; q + 1];
        for j in 1..=q {
            let carry = if j < q { j as f64 * stirling[j] } else { 0.0 };
            next[j] = carry + stirling[j - 1];
        }
        stirling = next;
        out.push((1..=q).map(|j| stirling[j] * g.derivative_value(j).unwrap()).sum());
    }
    Ok(out)
}

/// All observables of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSet {
    pub t: f64,
    pub norm: f64,
    pub mean_w: f64,
    pub echo: f64,
    /// Indexed by probe weight minus one; NaN when the qubit count is too small.
    pub otoc: [f64; MAX_PROBE_WEIGHT],
    /// `4 otoc / echo`, see [`rotoc`].
    pub rotoc: [f64; MAX_PROBE_WEIGHT],
}

impl ObservableSet {
    pub const CSV_HEADER: &'static str = "t,norm,mean_w,echo,otoc_v1,otoc_v2,otoc_v3,rotoc_v1,rotoc_v2,rotoc_v3";

    pub fn from_power_sums(t: f64, s: &[f64; 4], n: usize) -> Self {
        let echo = 4.0 * s[0];
        let mut otoc = [f64::NAN; MAX_PROBE_WEIGHT];
        let mut rotoc = [f64::NAN; MAX_PROBE_WEIGHT];
        for v in 1..=MAX_PROBE_WEIGHT {
            if let Ok(o) = otoc_from_sums(s, v, n) {
                otoc[v - 1] = o;
                if s[0] != 0.0 {
                    rotoc[v - 1] = o / s[0];
                }
            }
        }
        let mean_w = if s[0] != 0.0 { s[1] / s[0] } else { f64::NAN };
        Self { t, norm: s[0], mean_w, echo, otoc, rotoc }
    }

    pub fn from_distribution(t: f64, b: &WeightDistribution, n: usize) -> Self {
        Self::from_power_sums(t, &power_sums(b), n)
    }

    /// From a jet of `G` about `x = 1` of order at least 3.
    pub fn from_jet(t: f64, g: &Jet, n: usize) -> Result<Self> {
        let s = jet_power_sums(g, 3)?;
        Ok(Self::from_power_sums(t, &[s[0], s[1], s[2], s[3]], n))
    }

    pub fn from_series(t: f64, g: &TruncatedSeries, n: usize, radius: f64) -> Result<Self> {
        Self::from_jet(t, &jet_eval(g, 1.0, 3, radius)?, n)
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.t, self.norm, self.mean_w, self.echo];
        cols.extend(self.otoc);
        cols.extend(self.rotoc);
        cols.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(",")
    }
}
