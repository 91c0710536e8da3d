//! Least-squares fits of coefficient curves to `C0·[1 + F(x)]` with `F` a
//! truncated Fourier series of fixed period in `x = ln(d/ℓ*)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::trace_core::{CoefficientModel, Harmonic, VacuumStress};

/// Smallest admissible ratio of Cholesky pivots before the normal equations
/// are declared singular.
const PIVOT_RATIO_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub period: f64,
    pub max_harmonics: usize,
    /// Ridge weight on the harmonic coefficients (the constant is never damped).
    pub regularization: f64,
    /// Reference length recorded in the fitted model; the fit itself works in `x`.
    pub ell_star: f64,
}

impl FitConfig {
    pub fn new(period: f64, max_harmonics: usize) -> Self {
        Self {
            period,
            max_harmonics,
            regularization: 0.0,
            ell_star: 1.0,
        }
    }

    /// Period `ln b` for a geometric reduction factor `b`.
    pub fn for_reduction(reduction: f64, max_harmonics: usize) -> Result<Self> {
        if !(reduction > 1.0) {
            return Err(Error::Domain(format!("reduction factor must exceed 1, got {reduction}")));
        }
        Ok(Self::new(reduction.ln(), max_harmonics))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: CoefficientModel,
    pub residual_rms: f64,
    pub residuals: Vec<f64>,
    /// Set when harmonics were requested but the data span less than one period.
    pub short_span: bool,
}

fn design_row(x: f64, period: f64, k_max: usize) -> impl Iterator<Item = f64> {
    let omega = 2.0 * PI / period;
    std::iter::once(1.0).chain((1..=k_max).flat_map(move |k| {
        let (s, c) = (omega * k as f64 * x).sin_cos();
        [c, s]
    }))
}

/// Fits `c(x) ≈ β₀ + Σ α_k cos(2πkx/p) + β_k sin(2πkx/p)` and reports the
/// amplitudes relative to `β₀`.
pub fn fit_log_periodic(x: &[f64], c: &[f64], cfg: &FitConfig) -> Result<FitResult> {
    ensure_positive("period", cfg.period)?;
    ensure_positive("ell_star", cfg.ell_star)?;
    if !(cfg.regularization >= 0.0) {
        return Err(Error::Domain(format!("ridge weight must be nonnegative, got {}", cfg.regularization)));
    }
    if x.len() != c.len() {
        return Err(Error::Usage(format!("{} abscissae but {} values", x.len(), c.len())));
    }
    let k = cfg.max_harmonics;
    let cols = 2 * k + 1;
    if x.len() < cols {
        return Err(Error::Usage(format!(
            "{} harmonics need at least {cols} points, got {}",
            k,
            x.len()
        )));
    }
    if x.iter().chain(c).any(|v| !v.is_finite()) {
        return Err(Error::Domain("fit data must be finite".into()));
    }

    let rows = x.len();
    let entries: Vec<f64> = x.iter().flat_map(|&xi| design_row(xi, cfg.period, k)).collect();
    let a = DMatrix::from_row_slice(rows, cols, &entries);
    let y = DVector::from_column_slice(c);

    // Column scaling keeps the normal matrix well balanced.
    let scales: Vec<f64> = (0..cols)
        .map(|j| {
            let n = a.column(j).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    let mut normal = scaled.transpose() * &scaled;
    for j in 1..cols {
        normal[(j, j)] += cfg.regularization / (scales[j] * scales[j]);
    }
    let rhs = scaled.transpose() * &y;
    let chol = normal
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("normal equations are not positive definite".into()))?;
    let pivots = chol.l_dirty().diagonal();
    let (lo, hi) = pivots
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| (lo.min(p.abs()), hi.max(p.abs())));
    if !(lo > 0.0) || (lo / hi).powi(2) < PIVOT_RATIO_FLOOR {
        return Err(Error::Numerical(format!(
            "normal equations are singular (pivot ratio {:.3e}); the abscissae do not resolve {} harmonics",
            (lo / hi).powi(2),
            k
        )));
    }
    let beta_scaled = chol.solve(&rhs);
    let beta: Vec<f64> = beta_scaled.iter().zip(&scales).map(|(b, s)| b / s).collect();

    let c0 = beta[0];
    let harmonic_mag = beta[1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let harmonics: Vec<Harmonic> = if harmonic_mag == 0.0 {
        vec![Harmonic::default(); k]
    } else {
        if c0.abs() <= f64::EPSILON * harmonic_mag || c0 == 0.0 {
            return Err(Error::Numerical(format!(
                "fitted c0 = {c0:e} vanishes against harmonic amplitudes of order {harmonic_mag:e}; \
                 relative amplitudes are undefined"
            )));
        }
        beta[1..]
            .chunks(2)
            .map(|p| Harmonic {
                cos: p[0] / c0,
                sin: p[1] / c0,
            })
            .collect()
    };
    let model = CoefficientModel::new(c0, cfg.period, harmonics, cfg.ell_star)?;

    let fitted = &a * DVector::from_vec(beta);
    let residuals: Vec<f64> = c.iter().zip(fitted.iter()).map(|(ci, fi)| ci - fi).collect();
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / rows as f64).sqrt();

    let span = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) - x.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FitResult {
        model,
        residual_rms,
        residuals,
        short_span: k > 0 && span < cfg.period,
    })
}

/// Integrated trace `−(c0/d⁴)·F'(ln(d/ℓ*))` of a fitted model.
pub fn predicted_trace(fit: &FitResult, d: f64) -> Result<f64> {
    Ok(VacuumStress::assemble(&fit.model, d)?.trace)
}

/// Residual RMS for each `K = 0..=max_harmonics` on the same data.
pub fn residual_by_order(x: &[f64], c: &[f64], cfg: &FitConfig) -> Result<Vec<(usize, f64)>> {
    (0..=cfg.max_harmonics)
        .map(|k| {
            let sub = FitConfig {
                max_harmonics: k,
                ..*cfg
            };
            Ok((k, fit_log_periodic(x, c, &sub)?.residual_rms))
        })
        .collect()
}

/// Exploratory diagnostic: residual RMS as a function of a trial period.
/// The period used for reporting is always the geometric one.
pub fn period_scan(x: &[f64], c: &[f64], cfg: &FitConfig, periods: &[f64]) -> Result<Vec<(f64, f64)>> {
    periods
        .iter()
        .map(|&p| {
            let trial = FitConfig { period: p, ..*cfg };
            Ok((p, fit_log_periodic(x, c, &trial)?.residual_rms))
        })
        .collect()
}
