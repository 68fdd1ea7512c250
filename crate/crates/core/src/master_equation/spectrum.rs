use nalgebra::{Complex, DMatrix, DVector};

use super::{BandedGenerator, ModelParams};
use crate::error::{domain, Error, Result};

/// The `k_max` eigenvalues of the dense generator with largest real part,
/// sorted by descending real part.
pub fn leading_eigenvalues(gen: &BandedGenerator, k_max: usize) -> Result<Vec<Complex<f64>>> {
    if k_max > gen.dim() {
        return domain(format!("asked for {k_max} eigenvalues of a {}-dimensional generator", gen.dim()));
    }
    let dense = gen.to_dense();
    let schur = nalgebra::linalg::Schur::try_new(dense, 1e-15, 100_000)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let ev = schur
        .complex_eigenvalues();
    let mut values: Vec<Complex<f64>> = ev.iter().copied().collect();
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    values.truncate(k_max);
    Ok(values)
}

/// Right and left eigenvectors of the leading-order (lower-triangular)
/// generator for eigenvalue `λ_k = -2k(a_Σ + κ)`, indexed by weight `1..=w_max`
/// and normalized so that entry `k` equals one.
pub fn lo_left_right_eigvecs(params: &ModelParams, k: usize, w_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    if k == 0 || k > w_max {
        return domain(format!("mode index {k} outside 1..={w_max}"));
    }
    let c = params.total_strength() + params.kappa;
    if c <= 0.0 {
        return domain("degenerate leading-order spectrum (a_Σ + κ = 0)");
    }
    let diag = |w: usize| -2.0 * c * w as f64;
    // gain from w - (n-1) into w: 2 a_n r (w - n + 1)
    let shifts: Vec<(usize, f64)> = params.active().map(|s| (s.order - 1, 2.0 * s.strength * params.r)).collect();
    let lambda = diag(k);

    let mut right = vec![0.0; w_max];
    right[k - 1] = 1.0;
    for w in k + 1..=w_max {
        let mut acc = 0.0;
        for &(s, g) in &shifts {
            if w > s && w - s >= k {
                acc += g * (w - s) as f64 * right[w - s - 1];
            }
        }
        right[w - 1] = -acc / (diag(w) - lambda);
    }

    let mut left = vec![0.0; w_max];
    left[k - 1] = 1.0;
    for w in (1..k).rev() {
        let mut acc = 0.0;
        for &(s, g) in &shifts {
            if w + s <= k {
                acc += left[w + s - 1] * g * w as f64;
            }
        }
        left[w - 1] = -acc / (diag(w) - lambda);
    }
    Ok((left, right))
}

/// Least-squares fit of `y(N) = Σ_j c_j / N^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseSizeFit {
    /// `c_0, c_1, ...`
    pub coeffs: Vec<f64>,
    pub max_residual: f64,
}

/// Fits `values[i] ≈ Σ_{j<=degree} c_j sizes[i]^{-j}`. With `pinned = Some(c0)`
/// the constant term is fixed and only `c_1..` are fitted.
pub fn fit_inverse_size(
    sizes: &[usize],
    values: &[f64],
    degree: usize,
    pinned: Option<f64>,
) -> Result<InverseSizeFit> {
    if sizes.len() != values.len() {
        return domain("sizes and values differ in length");
    }
    let first = usize::from(pinned.is_some());
    let unknowns = degree + 1 - first;
    if sizes.len() < unknowns || unknowns == 0 {
        return Err(Error::Domain(format!(
            "fit needs at least {unknowns} sizes, got {}",
            sizes.len()
        )));
    }
    let mut distinct = sizes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < unknowns || sizes.contains(&0) {
        return Err(Error::Domain("fit is degenerate: too few distinct sizes".into()));
    }
    let a = DMatrix::from_fn(sizes.len(), unknowns, |i, j| (sizes[i] as f64).powi(-((j + first) as i32)));
    let rhs = DVector::from_iterator(values.len(), values.iter().map(|v| v - pinned.unwrap_or(0.0)));
    // Column scaling keeps the 1/N^j columns comparable.
    let scales: Vec<f64> = (0..unknowns).map(|j| a.column(j).norm()).collect();
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::Domain("fit is degenerate".into()));
    }
    let sol = svd.solve(&rhs, 0.0).map_err(|e| Error::Domain(e.to_string()))?;
    let mut coeffs = Vec::with_capacity(degree + 1);
    if let Some(c0) = pinned {
        coeffs.push(c0);
    }
    coeffs.extend(sol.iter().zip(&scales).map(|(c, s)| c / s));
    let fitted = &a * DVector::from_iterator(unknowns, coeffs[first..].iter().copied());
    let max_residual = fitted
        .iter()
        .zip(rhs.iter())
        .fold(0.0f64, |m, (f, y)| m.max((f - y).abs()));
    Ok(InverseSizeFit { coeffs, max_residual })
}
