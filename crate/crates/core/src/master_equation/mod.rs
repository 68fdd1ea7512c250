//! Finite-N master equation for the operator-size distribution.

mod generator;
mod integrate;
mod spectrum;

pub use generator::{build_generator, build_reference_generator, BandedGenerator, ReferenceModel};
pub use integrate::{evolve, propagate_expm, EvolveOptions};
pub use spectrum::{fit_inverse_size, leading_eigenvalues, lo_left_right_eigvecs, InverseSizeFit};

use crate::combinatorics::CouplingSpec;
use crate::error::{domain, Result};

/// Qubit count, depolarizing rate, imperfection and coupling strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub qubits: usize,
    pub kappa: f64,
    pub r: f64,
    pub couplings: Vec<CouplingSpec>,
}

impl ModelParams {
    pub fn new(qubits: usize, kappa: f64, r: f64, couplings: Vec<CouplingSpec>) -> Result<Self> {
        let p = Self { qubits, kappa, r, couplings };
        p.validate()?;
        Ok(p)
    }

    /// Pure `n`-body model with strength `a`.
    pub fn pure(order: usize, strength: f64, qubits: usize, kappa: f64, r: f64) -> Result<Self> {
        Self::new(qubits, kappa, r, vec![CouplingSpec::new(order, strength)?])
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 {
            return domain("qubit count must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.r) {
            return domain(format!("imperfection r must lie in [0, 1], got {}", self.r));
        }
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return domain(format!("kappa must be finite and >= 0, got {}", self.kappa));
        }
        if self.couplings.is_empty() {
            return domain("at least one coupling is required");
        }
        for (i, c) in self.couplings.iter().enumerate() {
            CouplingSpec::new(c.order, c.strength)?;
            if c.order > self.qubits {
                return domain(format!(
                    "body order {} exceeds qubit count {}",
                    c.order, self.qubits
                ));
            }
            if self.couplings[..i].iter().any(|d| d.order == c.order) {
                return domain(format!("coupling a_{} given twice", c.order));
            }
        }
        Ok(())
    }

    /// `a_Σ`.
    pub fn total_strength(&self) -> f64 {
        self.couplings.iter().map(|c| c.strength).sum()
    }

    /// Largest body order with a nonzero coupling.
    pub fn max_order(&self) -> usize {
        self.active().map(|c| c.order).max().unwrap_or(2)
    }

    pub(crate) fn active(&self) -> impl Iterator<Item = &CouplingSpec> {
        self.couplings.iter().filter(|c| c.strength > 0.0)
    }

    /// The single active coupling, if the model is a pure `n`-body model.
    pub fn pure_coupling(&self) -> Option<CouplingSpec> {
        let mut it = self.active();
        let first = *it.next()?;
        it.next().is_none().then_some(first)
    }

    /// `r_eff = r Σ a_n / (Σ a_n + κ)`; reduces to `a r / (a + κ)` for a pure model.
    pub fn r_eff(&self) -> f64 {
        let a = self.total_strength();
        if a + self.kappa == 0.0 {
            return 0.0;
        }
        a * self.r / (a + self.kappa)
    }
}

/// `b_w` for `w = 1..=W_max`, stored with `b[0]` holding `w = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDistribution {
    b: Vec<f64>,
}

impl WeightDistribution {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if b.is_empty() {
            return domain("weight distribution must have at least one entry");
        }
        if b.iter().any(|v| !v.is_finite()) {
            return domain("weight distribution has non-finite entries");
        }
        Ok(Self { b })
    }

    /// `δ_{w,w0}` on `1..=w_max`.
    pub fn delta(w0: usize, w_max: usize) -> Result<Self> {
        if w0 == 0 || w0 > w_max {
            return domain(format!("initial weight {w0} outside 1..={w_max}"));
        }
        let mut b = vec![0.0; w_max];
        b[w0 - 1] = 1.0;
        Ok(Self { b })
    }

    pub fn w_max(&self) -> usize {
        self.b.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    pub fn into_values(self) -> Vec<f64> {
        self.b
    }

    /// `b_w` with 1-based weight; zero outside the stored range.
    pub fn get(&self, w: usize) -> f64 {
        if w == 0 {
            0.0
        } else {
            self.b.get(w - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn norm(&self) -> f64 {
        self.b.iter().sum()
    }

    /// `(w, b_w)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.b.iter().enumerate().map(|(i, &v)| (i + 1, v))
    }

    pub fn has_odd_support(&self) -> bool {
        self.iter().any(|(w, v)| w % 2 == 1 && v != 0.0)
    }

    /// Polynomial coefficients of `Σ_w b_w x^w`, index = power.
    pub fn generating_polynomial(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.b.len() + 1);
        c.push(0.0);
        c.extend_from_slice(&self.b);
        c
    }
}
