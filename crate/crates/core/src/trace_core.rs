//! Vacuum and thermal sectors of the effective trace.
//!
//! Units are ħ = c = 1 throughout; lengths are in whatever unit the caller
//! uses for `d` and `ell_star`. The vacuum sector is built from the energy
//! per unit transverse area
//!
//! ```text
//! e(d) = C(x) / d³,    x = ln(d/ℓ*)
//! ```
//!
//! with a running coefficient `C(x) = C0·[1 + F(x)]` where `F` is a truncated
//! Fourier series of period `p` in `x`. From `e(d)` follow the normal
//! pressure `P⊥ = −e'(d)`, the gap energy density `ρ = e/d`, the tangential
//! pressure `P∥ = −ρ`, and the integrated trace `−ρ + 2P∥ + P⊥ = −∂ₓC / d⁴`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Relative tolerance for the `d_s = 2 d_h / d_w` consistency check.
pub const SPECTRAL_CONSISTENCY_TOL: f64 = 1e-12;

/// Spectral, Hausdorff and walk dimensions of a fractal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub d_s: f64,
    pub d_h: Option<f64>,
    pub d_w: Option<f64>,
}

impl SpectralParams {
    pub fn new(d_s: f64) -> Result<Self> {
        Self::with_dimensions(d_s, None, None)
    }

    /// Builds the parameters from the Hausdorff and walk dimensions.
    pub fn from_walk(d_h: f64, d_w: f64) -> Result<Self> {
        let d_s = spectral_dimension(d_h, d_w)?;
        Self::with_dimensions(d_s, Some(d_h), Some(d_w))
    }

    /// Validates an explicit triple. When both `d_h` and `d_w` are present
    /// they must reproduce `d_s` within [`SPECTRAL_CONSISTENCY_TOL`].
    pub fn with_dimensions(d_s: f64, d_h: Option<f64>, d_w: Option<f64>) -> Result<Self> {
        ensure_positive("d_s", d_s)?;
        if let Some(h) = d_h {
            ensure_positive("d_h", h)?;
        }
        if let Some(w) = d_w {
            ensure_positive("d_w", w)?;
        }
        let params = Self { d_s, d_h, d_w };
        params.check()?;
        Ok(params)
    }

    pub fn check(&self) -> Result<()> {
        if let (Some(h), Some(w)) = (self.d_h, self.d_w) {
            let implied = 2.0 * h / w;
            if (implied - self.d_s).abs() > SPECTRAL_CONSISTENCY_TOL * self.d_s.abs() {
                return Err(Error::Domain(format!(
                    "d_s = {} is inconsistent with 2·d_h/d_w = {implied}",
                    self.d_s
                )));
            }
        }
        Ok(())
    }
}

/// `d_s = 2·d_h/d_w`.
pub fn spectral_dimension(d_h: f64, d_w: f64) -> Result<f64> {
    ensure_positive("d_h", d_h)?;
    ensure_positive("d_w", d_w)?;
    Ok(2.0 * d_h / d_w)
}

/// One cosine/sine amplitude pair of the log-periodic modulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub cos: f64,
    pub sin: f64,
}

/// Running Casimir coefficient `C(x) = c0·[1 + Σ a_k cos(2πkx/p) + b_k sin(2πkx/p)]`
/// with `x = ln(d/ell_star)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientModel {
    pub c0: f64,
    pub period: f64,
    pub harmonics: Vec<Harmonic>,
    pub ell_star: f64,
}

impl CoefficientModel {
    pub fn new(c0: f64, period: f64, harmonics: Vec<Harmonic>, ell_star: f64) -> Result<Self> {
        if !c0.is_finite() {
            return Err(Error::Domain(format!("c0 must be finite, got {c0}")));
        }
        ensure_positive("period", period)?;
        ensure_positive("ell_star", ell_star)?;
        if harmonics.iter().any(|h| !h.cos.is_finite() || !h.sin.is_finite()) {
            return Err(Error::Domain("harmonic amplitudes must be finite".into()));
        }
        Ok(Self {
            c0,
            period,
            harmonics,
            ell_star,
        })
    }

    /// A static coefficient. The period is irrelevant and set to 1.
    pub fn constant(c0: f64) -> Self {
        Self {
            c0,
            period: 1.0,
            harmonics: Vec::new(),
            ell_star: 1.0,
        }
    }

    /// Log-period matching a geometric reduction factor `b`, i.e. `p = ln b`.
    pub fn with_reduction(c0: f64, reduction: f64, harmonics: Vec<Harmonic>, ell_star: f64) -> Result<Self> {
        if !(reduction > 1.0) {
            return Err(Error::Domain(format!("reduction factor must exceed 1, got {reduction}")));
        }
        Self::new(c0, reduction.ln(), harmonics, ell_star)
    }

    pub fn is_static(&self) -> bool {
        self.harmonics.iter().all(|h| h.cos == 0.0 && h.sin == 0.0)
    }

    /// `x = ln(d/ℓ*)`.
    pub fn log_scale(&self, d: f64) -> Result<f64> {
        ensure_positive("d", d)?;
        ensure_positive("ell_star", self.ell_star)?;
        Ok((d / self.ell_star).ln())
    }

    /// The modulation `F(x)`.
    pub fn modulation(&self, x: f64) -> f64 {
        let omega = 2.0 * PI / self.period;
        self.harmonics
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let (s, c) = (omega * (i + 1) as f64 * x).sin_cos();
                h.cos * c + h.sin * s
            })
            .sum()
    }

    /// `F'(x)`.
    pub fn modulation_slope(&self, x: f64) -> f64 {
        let omega = 2.0 * PI / self.period;
        self.harmonics
            .iter()
            .enumerate()
            .map(|(i, h)| {
                let w = omega * (i + 1) as f64;
                let (s, c) = (w * x).sin_cos();
                w * (h.sin * c - h.cos * s)
            })
            .sum()
    }

    /// `C(x)` as a function of the log variable.
    pub fn value_at(&self, x: f64) -> f64 {
        self.c0 * (1.0 + self.modulation(x))
    }

    /// `∂ₓC(x)`.
    pub fn slope_at(&self, x: f64) -> f64 {
        self.c0 * self.modulation_slope(x)
    }
}

/// `C(ln(d/ℓ*))`.
pub fn coefficient_eval(model: &CoefficientModel, d: f64) -> Result<f64> {
    Ok(model.value_at(model.log_scale(d)?))
}

/// Analytic `∂C/∂ ln d` at separation `d`.
pub fn coefficient_logderiv(model: &CoefficientModel, d: f64) -> Result<f64> {
    Ok(model.slope_at(model.log_scale(d)?))
}

/// `e(d) = C/d³`.
pub fn energy_per_area(model: &CoefficientModel, d: f64) -> Result<f64> {
    let c = coefficient_eval(model, d)?;
    Ok(c / (d * d * d))
}

/// `P⊥ = −e'(d) = (3C − ∂_{ln d}C)/d⁴`.
pub fn normal_pressure(model: &CoefficientModel, d: f64) -> Result<f64> {
    Ok(VacuumStress::assemble(model, d)?.p_perp)
}

/// `ρ = e(d)/d = C/d⁴`.
pub fn vacuum_energy_density(model: &CoefficientModel, d: f64) -> Result<f64> {
    Ok(VacuumStress::assemble(model, d)?.rho_vac)
}

/// Diagonal mixed-index stress `(−ρ, P∥, P∥, P⊥)` in the gap and its trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VacuumStress {
    pub rho_vac: f64,
    pub p_parallel: f64,
    pub p_perp: f64,
    pub trace: f64,
}

impl VacuumStress {
    pub fn assemble(model: &CoefficientModel, d: f64) -> Result<Self> {
        let x = model.log_scale(d)?;
        let inv_d4 = 1.0 / (d * d * d * d);
        let rho_vac = model.value_at(x) * inv_d4;
        let p_parallel = -rho_vac;
        // 3ρ is rounded once and reused so that a static C gives an exactly zero trace.
        let three_rho = 3.0 * rho_vac;
        let p_perp = three_rho - model.slope_at(x) * inv_d4;
        let trace = -rho_vac + 2.0 * p_parallel + p_perp;
        Ok(Self {
            rho_vac,
            p_parallel,
            p_perp,
            trace,
        })
    }

    /// Components in the order `(T⁰₀, T¹₁, T²₂, T³₃)`.
    pub fn diagonal(&self) -> [f64; 4] {
        [-self.rho_vac, self.p_parallel, self.p_parallel, self.p_perp]
    }
}

/// Thermal radiation obeying `p·V_s = U/d_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub u_th: f64,
    pub v_s: f64,
    pub d_s: f64,
    pub rho_th: f64,
    pub p_th: f64,
}

impl ThermalState {
    pub fn new(u_th: f64, v_s: f64, d_s: f64) -> Result<Self> {
        ensure_positive("v_s", v_s)?;
        ensure_positive("d_s", d_s)?;
        if !u_th.is_finite() {
            return Err(Error::Domain(format!("u_th must be finite, got {u_th}")));
        }
        let rho_th = u_th / v_s;
        Ok(Self {
            u_th,
            v_s,
            d_s,
            rho_th,
            p_th: rho_th / d_s,
        })
    }

    /// State with no thermal energy; contributes nothing to the trace.
    pub fn vacuum(d_s: f64) -> Result<Self> {
        Self::new(0.0, 1.0, d_s)
    }

    /// `−ρ + 3p = ρ·(3/d_s − 1)`.
    pub fn trace(&self) -> f64 {
        self.rho_th * (3.0 / self.d_s - 1.0)
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [-self.rho_th, self.p_th, self.p_th, self.p_th]
    }
}

pub fn thermal_state(u_th: f64, v_s: f64, d_s: f64) -> Result<ThermalState> {
    ThermalState::new(u_th, v_s, d_s)
}

/// Zeta-regularized vacuum energy `ζ_F(−1/2) / (2 L_s)` for a supplied zeta value.
pub fn fractal_vacuum_energy(l_s: f64, zeta_half: f64) -> Result<f64> {
    ensure_positive("l_s", l_s)?;
    Ok(zeta_half / (2.0 * l_s))
}

/// Thermal trace plus the vacuum trace at separation `d`.
pub fn unified_trace(thermal: &ThermalState, model: &CoefficientModel, d: f64) -> Result<f64> {
    let vacuum = VacuumStress::assemble(model, d)?;
    Ok(thermal.trace() + vacuum.trace)
}

/// Traced Einstein equation `R = −8πG·T`.
pub fn ricci_scalar(total_trace: f64, g_newton: f64) -> Result<f64> {
    if !(g_newton >= 0.0) || !g_newton.is_finite() {
        return Err(Error::Domain(format!("G must be nonnegative, got {g_newton}")));
    }
    Ok(-8.0 * PI * g_newton * total_trace)
}

/// Everything the framework predicts at one separation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub d: f64,
    pub e: f64,
    pub rho_vac: f64,
    pub p_perp: f64,
    pub p_parallel: f64,
    pub vacuum_trace: f64,
    pub thermal_trace: f64,
    pub total_trace: f64,
    pub ricci: f64,
}

impl TraceReport {
    pub const COLUMNS: [&'static str; 9] = [
        "d",
        "e",
        "rho_vac",
        "p_perp",
        "p_parallel",
        "vacuum_trace",
        "thermal_trace",
        "total_trace",
        "ricci",
    ];

    pub fn evaluate(model: &CoefficientModel, thermal: &ThermalState, d: f64, g_newton: f64) -> Result<Self> {
        let e = energy_per_area(model, d)?;
        let vacuum = VacuumStress::assemble(model, d)?;
        let thermal_trace = thermal.trace();
        let total_trace = thermal_trace + vacuum.trace;
        Ok(Self {
            d,
            e,
            rho_vac: vacuum.rho_vac,
            p_perp: vacuum.p_perp,
            p_parallel: vacuum.p_parallel,
            vacuum_trace: vacuum.trace,
            thermal_trace,
            total_trace,
            ricci: ricci_scalar(total_trace, g_newton)?,
        })
    }

    pub fn values(&self) -> [f64; 9] {
        [
            self.d,
            self.e,
            self.rho_vac,
            self.p_perp,
            self.p_parallel,
            self.vacuum_trace,
            self.thermal_trace,
            self.total_trace,
            self.ricci,
        ]
    }
}
