//! Monte Carlo over Brownian coupling realizations for a handful of qubits.
//!
//! Each realization evolves a forward operator `O(t)` and a backward `Õ(t)`
//! in the Pauli basis. Per step every coupling term `A` gets a Gaussian angle
//! `θ_A` with variance `μ_n² dt` and the backward branch uses
//! `θ̃_A = r θ_A + √(1-r²) θ'_A`. Then both branches are damped by
//! `(1 - κ dt)^{wt(P)}`. `b_w(t)` is the realization average of
//! `Σ_{wt(P)=w} c_P c̃_P`.

mod pauli;

pub use pauli::{pauli_decompose, pauli_reconstruct, strings_of_weight, PauliString, MAX_QUBITS};

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::combinatorics::coupling_variance;
use crate::error::{domain, Error, Result};
use crate::master_equation::{ModelParams, WeightDistribution};

/// Upper bound on `dt (a_Σ + κ)`.
pub const MAX_STEP_RATE: f64 = 1e-2;
pub const MIN_REALIZATIONS: usize = 100;

/// How one noise step is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stepper {
    /// One exact Pauli rotation per coupling term, in a fixed order.
    #[default]
    Rotations,
    /// Matrix exponential of the full step Hamiltonian on the `2^N` space.
    Exact,
}

#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub initial: PauliString,
    /// Non-decreasing, non-negative output times.
    pub times: Vec<f64>,
    pub realizations: usize,
    pub dt: f64,
    pub seed: u64,
    pub stepper: Stepper,
}

/// Mean and standard error of `b_w(t)` for `w = 0..=N` at each output time.
#[derive(Debug, Clone)]
pub struct EnsembleEstimate {
    pub qubits: usize,
    pub times: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub realizations: usize,
}

impl EnsembleEstimate {
    pub const CSV_HEADER: &'static str = "t,w,b_mean,b_stderr,realizations";

    /// Mean distribution over `w = 1..=N` at output index `i`.
    pub fn distribution(&self, i: usize) -> Result<WeightDistribution> {
        WeightDistribution::new(self.mean[i][1..].to_vec())
    }

    /// Largest `|mean - reference| / stderr` over times and weights `1..=N`;
    /// `reference[i]` is compared against output time `i`.
    pub fn max_z_score(&self, reference: &[WeightDistribution]) -> Result<f64> {
        if reference.len() != self.times.len() {
            return domain(format!("{} reference states for {} times", reference.len(), self.times.len()));
        }
        let mut worst: f64 = 0.0;
        for (i, r) in reference.iter().enumerate() {
            for w in 1..=self.qubits {
                let d = (self.mean[i][w] - r.get(w)).abs();
                let z = if d < 1e-12 { 0.0 } else { d / self.stderr[i][w] };
                worst = worst.max(z);
            }
        }
        Ok(worst)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        for (i, t) in self.times.iter().enumerate() {
            for w in 0..=self.qubits {
                rows.push(format!(
                    "{t:.12e},{w},{:.12e},{:.12e},{}",
                    self.mean[i][w], self.stderr[i][w], self.realizations
                ));
            }
        }
        rows
    }
}

// (p, q, σ): conjugation by e^{iθA} maps c_p → cos c_p - σ sin c_q, c_q → cos c_q + σ sin c_p
type Pair = (u32, u32, f64);

struct Term {
    string: PauliString,
    mu: f64,
    pairs: Vec<Pair>,
}

struct Plan {
    qubits: usize,
    r: f64,
    kappa: f64,
    terms: Vec<Term>,
    weights: Vec<usize>,
}

impl Plan {
    fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let n = params.qubits;
        if n > MAX_QUBITS {
            return Err(Error::Resource(format!("Monte Carlo is limited to {MAX_QUBITS} qubits, got {n}")));
        }
        let dim = 1usize << (2 * n);
        let mut terms = Vec::new();
        for c in params.active() {
            let mu = coupling_variance(c.order, c.strength, n).sqrt();
            for a in strings_of_weight(c.order, n) {
                let mut pairs = Vec::new();
                for idx in 0..dim {
                    let p = PauliString::from_index(idx, n);
                    if !a.anticommutes(&p) {
                        continue;
                    }
                    let (k, q) = a.mul(&p);
                    let qi = q.index(n);
                    if idx < qi {
                        // i A P = i^{k+1} Q with k odd
                        let sigma = if k == 1 { -1.0 } else { 1.0 };
                        pairs.push((idx as u32, qi as u32, sigma));
                    }
                }
                terms.push(Term { string: a, mu, pairs });
            }
        }
        let weights = (0..dim).map(|i| PauliString::from_index(i, n).weight()).collect();
        Ok(Self { qubits: n, r: params.r, kappa: params.kappa, terms, weights })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, h: f64, out: &mut Vec<(f64, f64)>) {
        out.clear();
        let s = h.sqrt();
        let rt = (1.0 - self.r * self.r).max(0.0).sqrt();
        for term in &self.terms {
            let g: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            let th = term.mu * s * g;
            out.push((th, self.r * th + rt * term.mu * s * g2));
        }
    }

    fn rotate(&self, c: &mut [f64], angles: impl Iterator<Item = f64>) {
        for (term, th) in self.terms.iter().zip(angles) {
            let (sn, cs) = (2.0 * th).sin_cos();
            for &(p, q, sigma) in &term.pairs {
                let (cp, cq) = (c[p as usize], c[q as usize]);
                c[p as usize] = cs * cp - sigma * sn * cq;
                c[q as usize] = cs * cq + sigma * sn * cp;
            }
        }
    }

    fn exact(&self, c: &mut [f64], angles: impl Iterator<Item = f64>) -> Result<()> {
        let n = self.qubits;
        let d = 1usize << n;
        let mut h = DMatrix::<Complex<f64>>::zeros(d, d);
        for (term, th) in self.terms.iter().zip(angles) {
            h += term.string.to_matrix(n) * Complex::new(th, 0.0);
        }
        let eig = h.symmetric_eigen();
        let phases = eig.eigenvalues.map(|e| Complex::new(0.0, e).exp());
        let u = &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint();
        let coeffs: Vec<Complex<f64>> = c.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let op = pauli_reconstruct(&coeffs, n)?;
        let evolved = &u * op * u.adjoint();
        for (dst, v) in c.iter_mut().zip(pauli_decompose(&evolved, n)?) {
            *dst = v.re;
        }
        Ok(())
    }

    fn damp(&self, c: &mut [f64], factors: &[f64]) {
        for (v, &w) in c.iter_mut().zip(&self.weights) {
            *v *= factors[w];
        }
    }

    fn record(&self, c: &[f64], ct: &[f64], out: &mut Vec<f64>) {
        let start = out.len();
        out.resize(start + self.qubits + 1, 0.0);
        for ((a, b), &w) in c.iter().zip(ct).zip(&self.weights) {
            out[start + w] += a * b;
        }
    }

    fn realization(&self, cfg: &EnsembleConfig, index: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index);
        let dim = self.weights.len();
        let mut c = vec![0.0; dim];
        c[cfg.initial.index(self.qubits)] = 1.0;
        let mut ct = c.clone();
        let mut out = Vec::with_capacity(cfg.times.len() * (self.qubits + 1));
        let mut angles = Vec::with_capacity(self.terms.len());
        let mut now = 0.0;
        for &t in &cfg.times {
            let span = t - now;
            let steps = (span / cfg.dt - 1e-9).ceil().max(0.0) as usize;
            if steps > 0 {
                let h = span / steps as f64;
                let f = 1.0 - self.kappa * h;
                let factors: Vec<f64> = (0..=self.qubits).map(|w| f.powi(w as i32)).collect();
                for _ in 0..steps {
                    self.draw(&mut rng, h, &mut angles);
                    match cfg.stepper {
                        Stepper::Rotations => {
                            self.rotate(&mut c, angles.iter().map(|a| a.0));
                            self.rotate(&mut ct, angles.iter().map(|a| a.1));
                        }
                        Stepper::Exact => {
                            self.exact(&mut c, angles.iter().map(|a| a.0))?;
                            self.exact(&mut ct, angles.iter().map(|a| a.1))?;
                        }
                    }
                    self.damp(&mut c, &factors);
                    self.damp(&mut ct, &factors);
                }
            }
            now = t;
            self.record(&c, &ct, &mut out);
        }
        Ok(out)
    }
}

fn check_config(params: &ModelParams, cfg: &EnsembleConfig) -> Result<()> {
    if cfg.realizations < MIN_REALIZATIONS {
        return domain(format!("need at least {MIN_REALIZATIONS} realizations, got {}", cfg.realizations));
    }
    let rate = params.total_strength() + params.kappa;
    if !(cfg.dt > 0.0) || cfg.dt * rate > MAX_STEP_RATE {
        return domain(format!("time step {} must satisfy 0 < dt <= {MAX_STEP_RATE}/(a_Σ + κ)", cfg.dt));
    }
    if cfg.times.is_empty() || cfg.times[0] < 0.0 || cfg.times.windows(2).any(|w| w[1] < w[0]) {
        return domain("output times must be non-negative and non-decreasing");
    }
    if cfg.times.iter().any(|t| !t.is_finite()) {
        return domain("output times must be finite");
    }
    let w = cfg.initial.weight();
    if w == 0 || cfg.initial.x >> params.qubits != 0 || cfg.initial.z >> params.qubits != 0 {
        return domain(format!("initial string must be a non-identity string on {} qubits", params.qubits));
    }
    Ok(())
}

/// Runs `cfg.realizations` independent realizations in parallel.
///
/// Realization `i` draws from the ChaCha8 stream `i` of `cfg.seed`, and the
/// reduction runs in index order, so results do not depend on the thread count.
pub fn run_ensemble(params: &ModelParams, cfg: &EnsembleConfig) -> Result<EnsembleEstimate> {
    let plan = Plan::new(params)?;
    check_config(params, cfg)?;
    let runs: Vec<Vec<f64>> = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|i| plan.realization(cfg, i))
        .collect::<Result<_>>()?;
    let width = plan.qubits + 1;
    let len = cfg.times.len() * width;
    let mut sum = vec![0.0; len];
    let mut sq = vec![0.0; len];
    for run in &runs {
        for j in 0..len {
            sum[j] += run[j];
            sq[j] += run[j] * run[j];
        }
    }
    let r = cfg.realizations as f64;
    let mut mean = Vec::with_capacity(cfg.times.len());
    let mut stderr = Vec::with_capacity(cfg.times.len());
    for i in 0..cfg.times.len() {
        let sl = i * width..(i + 1) * width;
        let m: Vec<f64> = sum[sl.clone()].iter().map(|s| s / r).collect();
        let e = sq[sl]
            .iter()
            .zip(&m)
            .map(|(q, mu)| ((q / r - mu * mu).max(0.0) * r / (r - 1.0) / r).sqrt())
            .collect();
        mean.push(m);
        stderr.push(e);
    }
    Ok(EnsembleEstimate { qubits: plan.qubits, times: cfg.times.clone(), mean, stderr, realizations: cfg.realizations })
}
