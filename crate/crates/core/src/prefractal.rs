//! Fabrication window for finite-level prefractal devices.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Default factor by which `d` must sit below the outer scale.
pub const DEFAULT_MARGIN: f64 = 10.0;

/// Outer scale `L`, reduction factor `b` and iteration depth `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefractalSpec {
    pub outer_scale: f64,
    pub reduction: f64,
    pub level: u32,
}

impl PrefractalSpec {
    pub fn new(outer_scale: f64, reduction: f64, level: u32) -> Result<Self> {
        ensure_positive("outer scale", outer_scale)?;
        check_reduction(reduction)?;
        Ok(Self {
            outer_scale,
            reduction,
            level,
        })
    }

    pub fn min_feature(&self) -> f64 {
        feature_at(self.outer_scale, self.reduction, self.level)
    }
}

fn check_reduction(b: f64) -> Result<()> {
    if b > 1.0 && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("reduction factor must exceed 1, got {b}")))
    }
}

fn feature_at(outer: f64, b: f64, n: u32) -> f64 {
    outer / b.powi(n as i32)
}

/// `ℓ_n = L·b⁻ⁿ`.
pub fn min_feature(spec: &PrefractalSpec) -> Result<f64> {
    ensure_positive("outer scale", spec.outer_scale)?;
    check_reduction(spec.reduction)?;
    Ok(spec.min_feature())
}

/// Whether `ℓ_n ≤ d ≤ L/margin`. The lower edge counts as inside; `d = L`
/// never does, even with `margin = 1`.
pub fn in_window(spec: &PrefractalSpec, d: f64, margin: f64) -> Result<bool> {
    ensure_positive("d", d)?;
    if !(margin >= 1.0) || !margin.is_finite() {
        return Err(Error::Domain(format!("margin must be at least 1, got {margin}")));
    }
    let ell = min_feature(spec)?;
    Ok(ell <= d && d <= spec.outer_scale / margin && d < spec.outer_scale)
}

/// Smallest level `n` with `ℓ_n ≤ d`, i.e. `⌈ln(L/d)/ln b⌉`.
pub fn min_level(outer: f64, d: f64, b: f64) -> Result<u32> {
    ensure_positive("outer scale", outer)?;
    ensure_positive("d", d)?;
    check_reduction(b)?;
    if d >= outer {
        return Err(Error::Domain(format!(
            "no scaling window: need d < L, got d = {d}, L = {outer}"
        )));
    }
    let estimate = ((outer / d).ln() / b.ln()).ceil();
    if estimate > u32::MAX as f64 / 2.0 {
        return Err(Error::Domain(format!("required level {estimate} is out of range")));
    }
    // The logarithm ratio can land an ulp past an integer; settle on the
    // exact feature-size comparison instead.
    let mut n = estimate.max(0.0) as u32;
    while feature_at(outer, b, n) > d {
        n += 1;
    }
    while n > 0 && feature_at(outer, b, n - 1) <= d {
        n -= 1;
    }
    Ok(n)
}
