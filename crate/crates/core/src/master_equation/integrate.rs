use nalgebra::{DMatrix, DVector};

use super::{BandedGenerator, WeightDistribution};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Relative tolerance per step.
    pub tol: f64,
    /// Absolute tolerance as a fraction of the current `max |b(t)|`. The
    /// equation is linear, so this keeps the error control scale-free while
    /// the norm decays.
    pub abs_scale: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, abs_scale: 1e-3, max_steps: 5_000_000 }
    }
}

impl EvolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights are the last row of A; error weights are b5 - b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `db/dt = M b` with adaptive Dormand–Prince steps and returns
/// `b` at every grid time. The grid must start at 0 and increase.
pub fn evolve(
    gen: &BandedGenerator,
    b0: &WeightDistribution,
    t_grid: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<WeightDistribution>> {
    let n = gen.dim();
    if b0.w_max() != n {
        return domain(format!("initial distribution has {} weights, generator {}", b0.w_max(), n));
    }
    if !(opts.tol > 0.0) {
        return domain("tolerance must be positive");
    }
    match t_grid.first() {
        Some(&t) if t == 0.0 => {}
        _ => return domain("time grid must start at 0"),
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("time grid must be strictly increasing");
    }

    let stiffness = gen.diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut y = b0.values().to_vec();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(b0.clone());

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    gen.apply(&y, &mut k[0]);

    let mut t = 0.0;
    let mut h = 0.5 * opts.tol.powf(0.2) / stiffness;
    let mut steps = 0usize;

    for &target in &t_grid[1..] {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Integration { t, reason: "step budget exhausted".into() });
            }
            let last = target - t <= h * (1.0 + 1e-12);
            let step = if last { target - t } else { h };
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration { t, reason: "step size underflow".into() });
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    stage[i] = y[i] + step * acc;
                }
                let (_, tail) = k.split_at_mut(s);
                gen.apply(&stage, &mut tail[0]);
            }
            // stage now holds the 5th-order solution (row 6 of A, FSAL).
            y_new.copy_from_slice(&stage);
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            let atol = opts.tol * opts.abs_scale * scale;
            let mut err = 0.0f64;
            for i in 0..n {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                let sc = atol + opts.tol * y[i].abs().max(y_new[i].abs());
                err = err.max((step * e).abs() / sc);
            }
            steps += 1;
            if !err.is_finite() {
                return Err(Error::Integration { t, reason: "non-finite state".into() });
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err > 1.0 || !last {
                h = step * factor;
            } else if factor < 1.0 {
                h = h.min(step * factor);
            }
        }
        out.push(WeightDistribution::new(y.clone())?);
    }
    Ok(out)
}

/// `exp(M t) b0` through a dense scaled-and-squared exponential.
pub fn propagate_expm(gen: &BandedGenerator, b0: &WeightDistribution, t: f64) -> Result<WeightDistribution> {
    if b0.w_max() != gen.dim() {
        return domain("initial distribution does not match generator dimension");
    }
    if !(t >= 0.0) {
        return domain("propagation time must be >= 0");
    }
    let m: DMatrix<f64> = gen.to_dense() * t;
    let e = m.exp();
    let b = e * DVector::from_column_slice(b0.values());
    WeightDistribution::new(b.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::master_equation::{build_generator, ModelParams};

    #[test]
    fn single_point_grid_returns_initial() {
        let p = ModelParams::pure(2, 1.0, 20, 0.5, 1.0).unwrap();
        let g = build_generator(&p).unwrap();
        let b0 = WeightDistribution::delta(2, 20).unwrap();
        let out = evolve(&g, &b0, &[0.0], EvolveOptions::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0], b0);
    }

    #[test]
    fn agrees_with_matrix_exponential() {
        let p = ModelParams::pure(2, 1.0, 40, 0.5, 0.9).unwrap();
        let g = build_generator(&p).unwrap();
        let b0 = WeightDistribution::delta(1, 40).unwrap();
        let grid = [0.0, 0.3, 1.0, 2.5];
        let out = evolve(&g, &b0, &grid, EvolveOptions::with_tol(1e-11)).unwrap();
        for (t, b) in grid.iter().zip(&out) {
            let e = propagate_expm(&g, &b0, *t).unwrap();
            for (u, v) in b.values().iter().zip(e.values()) {
                assert!((u - v).abs() < 1e-9, "t={t}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let p = ModelParams::pure(2, 1.0, 10, 0.5, 1.0).unwrap();
        let g = build_generator(&p).unwrap();
        let b0 = WeightDistribution::delta(1, 10).unwrap();
        assert!(evolve(&g, &b0, &[0.5, 1.0], EvolveOptions::default()).is_err());
        assert!(evolve(&g, &b0, &[0.0, 1.0, 1.0], EvolveOptions::default()).is_err());
        let short = WeightDistribution::delta(1, 5).unwrap();
        assert!(evolve(&g, &short, &[0.0, 1.0], EvolveOptions::default()).is_err());
    }

    #[test]
    fn exhausted_budget_reports_time() {
        let p = ModelParams::pure(2, 1.0, 10, 0.5, 1.0).unwrap();
        let g = build_generator(&p).unwrap();
        let b0 = WeightDistribution::delta(1, 10).unwrap();
        let opts = EvolveOptions { max_steps: 3, ..EvolveOptions::default() };
        match evolve(&g, &b0, &[0.0, 10.0], opts) {
            Err(Error::Integration { t, .. }) => assert!(t < 10.0),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
