use nalgebra::DMatrix;

use super::ModelParams;
use crate::combinatorics::{anticommuting_strings, coupling_variance, overlap_placements, to_f64};
use crate::error::{domain, Result};

/// Transition matrix `M` of `db/dt = M b`, stored by diagonal.
///
/// Rows and columns are 1-based weights. `M[w, w']` is the rate from `w'`
/// into `w`; only `|w - w'| <= half_width` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedGenerator {
    dim: usize,
    half_width: usize,
    // bands[w - w' + half_width][w' - 1]
    bands: Vec<Vec<f64>>,
}

impl BandedGenerator {
    pub fn zeros(dim: usize, half_width: usize) -> Self {
        Self { dim, half_width, bands: vec![vec![0.0; dim]; 2 * half_width + 1] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    fn slot(&self, row: usize, col: usize) -> Option<(usize, usize)> {
        if row == 0 || col == 0 || row > self.dim || col > self.dim {
            return None;
        }
        let diff = row as isize - col as isize;
        if diff.unsigned_abs() > self.half_width {
            return None;
        }
        Some(((diff + self.half_width as isize) as usize, col - 1))
    }

    /// `M[row, col]`; zero outside the band.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map_or(0.0, |(b, c)| self.bands[b][c])
    }

    pub(crate) fn add(&mut self, row: usize, col: usize, v: f64) {
        let (b, c) = self
            .slot(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside band {}", self.half_width));
        self.bands[b][c] += v;
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        y.iter_mut().for_each(|v| *v = 0.0);
        let s = self.half_width as isize;
        for (b, band) in self.bands.iter().enumerate() {
            let diff = b as isize - s;
            let (c0, c1) = if diff >= 0 {
                (0, self.dim - diff as usize)
            } else {
                ((-diff) as usize, self.dim)
            };
            for c in c0..c1 {
                y[(c as isize + diff) as usize] += band[c] * x[c];
            }
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for band in &self.bands {
            for (c, v) in band.iter().enumerate() {
                sums[c] += v;
            }
        }
        sums
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.bands[self.half_width]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i + 1, j + 1))
    }

    /// Nonzero entries as `(row, col, value)` with 1-based weights, column major.
    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for col in 1..=self.dim {
            let lo = col.saturating_sub(self.half_width).max(1);
            let hi = (col + self.half_width).min(self.dim);
            for row in lo..=hi {
                let v = self.get(row, col);
                if v != 0.0 {
                    out.push((row, col, v));
                }
            }
        }
        out
    }
}

/// Generic generator summed over overlap patterns of every active coupling.
pub fn build_generator(params: &ModelParams) -> Result<BandedGenerator> {
    params.validate()?;
    let n_q = params.qubits;
    let half = params.max_order() - 1;
    let mut gen = BandedGenerator::zeros(n_q, half);
    for c in params.active() {
        let n = c.order as u64;
        let rate = 4.0 * coupling_variance(c.order, c.strength, n_q);
        for src in 1..=n_q as u64 {
            let loss = to_f64(&anticommuting_strings(n, src, n_q as u64));
            gen.add(src as usize, src as usize, -rate * loss);
            if params.r == 0.0 {
                continue;
            }
            for p in (1..=n).step_by(2) {
                for m in 0..=(n - p) {
                    let count = overlap_placements(n, p, m, src, n_q as u64);
                    if count == 0u32.into() {
                        continue;
                    }
                    let dst = (src + n) as i64 - 2 * m as i64 - p as i64;
                    debug_assert!(dst >= 1 && dst as usize <= n_q);
                    gen.add(dst as usize, src as usize, rate * params.r * to_f64(&count));
                }
            }
        }
    }
    for w in 1..=n_q {
        gen.add(w, w, -2.0 * params.kappa * w as f64);
    }
    Ok(gen)
}

/// Hand-reduced generators for pure two- and three-body couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceModel {
    TwoBody,
    ThreeBody,
}

impl ReferenceModel {
    pub fn order(self) -> usize {
        match self {
            ReferenceModel::TwoBody => 2,
            ReferenceModel::ThreeBody => 3,
        }
    }
}

/// Closed-form generator of a pure two- or three-body model.
///
/// Written for unit coupling; strength `a` enters through `M(a, κ) = a M(1, κ/a)`.
pub fn build_reference_generator(params: &ModelParams, which: ReferenceModel) -> Result<BandedGenerator> {
    params.validate()?;
    let c = match params.pure_coupling() {
        Some(c) if c.order == which.order() => c,
        _ => {
            return domain(format!(
                "reference generator for {}-body needs a pure a_{} coupling",
                which.order(),
                which.order()
            ))
        }
    };
    let a = c.strength;
    let kap = params.kappa / a;
    let r = params.r;
    let n = params.qubits as f64;
    let dim = params.qubits;
    let mut gen = BandedGenerator::zeros(dim, which.order() - 1);
    match which {
        ReferenceModel::TwoBody => {
            for w in 1..=dim {
                let wf = w as f64;
                gen.add(w, w, a * (-2.0 * wf * ((wf - 1.0) + 3.0 * (n - wf)) / (3.0 * n) - 2.0 * wf * kap));
                if w >= 2 {
                    gen.add(w, w - 1, a * r * 2.0 * (n - wf + 1.0) * (wf - 1.0) / n);
                }
                if w < dim {
                    gen.add(w, w + 1, a * r * 2.0 * wf * (wf + 1.0) / (3.0 * n));
                }
            }
        }
        ReferenceModel::ThreeBody => {
            for w in 1..=dim {
                let x = w as f64;
                let diag = -2.0 * (kap + 1.0) * x
                    + (2.0 / 3.0) * x * (2.0 * r * (x - 1.0) + 4.0 * x + 5.0) / n
                    - (4.0 / 27.0) * x * (r * (7.0 * x * x - 3.0 * x - 4.0) + 8.0 * x * x + 12.0 * x + 7.0)
                        / (n * n);
                gen.add(w, w, a * diag);
                if w >= 3 {
                    let up = 2.0 * r * (x - 2.0) - 2.0 * r * (2.0 * x * x - 7.0 * x + 6.0) / n
                        + 2.0 * r * (x - 1.0) * (x - 2.0) * (x - 2.0) / (n * n);
                    gen.add(w, w - 2, a * up);
                }
                if w + 2 <= dim {
                    let down = (2.0 / 9.0) * r * x * (x * x + 3.0 * x + 2.0) / (n * n);
                    gen.add(w, w + 2, a * down);
                }
            }
        }
    }
    Ok(gen)
}
