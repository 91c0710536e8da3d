//! Scalar Casimir energies of planar δ-plate stacks.
//!
//! A plate at `z_i` with coupling `λ_i > 0` adds `λ_i δ(z − z_i)` to the
//! Euclidean wave operator. At imaginary wavenumber `κ` a single plate
//! reflects with `r = λ/(λ + 2κ)` and transmits with `t = 1 − r`. The
//! interaction energy per unit area of a stack is
//!
//! ```text
//! E = 1/(4π²) ∫₀^∞ κ² ln Δ(κ) dκ
//! ```
//!
//! where `Δ` is the transfer-matrix transmission denominator normalized by
//! the isolated-plate factors. With each plate matrix divided by `1 + λ/2κ`
//! and each gap propagator by `e^{κa}`, the normalized matrices are
//!
//! ```text
//! plate: [[1, r], [−r, 1 − 2r]]      gap a: diag(1, e^{−2κa})
//! ```
//!
//! and `Δ` is the (1,1) entry of their ordered product. The (1,2)/(1,1)
//! ratio is the reflection amplitude of the whole stack seen from the left.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::quadrature::{self, Outcome, QuadratureSpec};

/// Scalar Dirichlet-limit pair coefficient, `e·d³ = −π²/1440`.
pub const DIRICHLET_PAIR_COEFFICIENT: f64 = -PI * PI / 1440.0;

/// Lower truncation of κ relative to the inverse stack extent (and to the
/// smallest coupling). The neglected head of the integral scales as the
/// cube of this factor.
const KAPPA_FLOOR: f64 = 1e-5;

/// Running products are renormalized once their largest entry leaves
/// `[1/RESCALE_THRESHOLD, RESCALE_THRESHOLD]`.
const RESCALE_THRESHOLD: f64 = 1e150;

/// Planar δ-plates ordered by position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateStack {
    positions: Vec<f64>,
    couplings: Vec<f64>,
}

impl PlateStack {
    pub fn new(positions: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if positions.len() != couplings.len() {
            return Err(Error::Domain(format!(
                "{} positions but {} couplings",
                positions.len(),
                couplings.len()
            )));
        }
        if positions.iter().any(|z| !z.is_finite()) {
            return Err(Error::Domain("plate positions must be finite".into()));
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("plate positions must be strictly increasing".into()));
        }
        for &l in &couplings {
            ensure_positive("coupling", l)?;
        }
        Ok(Self { positions, couplings })
    }

    /// All plates share one coupling.
    pub fn uniform(positions: Vec<f64>, lambda: f64) -> Result<Self> {
        let couplings = vec![lambda; positions.len()];
        Self::new(positions, couplings)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions.windows(2).map(|w| w[1] - w[0])
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.gaps().reduce(f64::min)
    }

    pub fn extent(&self) -> f64 {
        match (self.positions.first(), self.positions.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Multiplies every length by `s` and every coupling by `1/s`.
    pub fn rescaled(&self, s: f64) -> Result<Self> {
        ensure_positive("scale", s)?;
        Self::new(
            self.positions.iter().map(|z| z * s).collect(),
            self.couplings.iter().map(|l| l / s).collect(),
        )
    }

    pub fn translated(&self, shift: f64) -> Result<Self> {
        Self::new(self.positions.iter().map(|z| z + shift).collect(), self.couplings.clone())
    }

    /// Reflection through `z = 0`, re-sorted.
    pub fn mirrored(&self) -> Self {
        Self {
            positions: self.positions.iter().rev().map(|z| -z).collect(),
            couplings: self.couplings.iter().rev().copied().collect(),
        }
    }

    /// Plates of `self` followed by plates of `other`; `other` must lie to the right.
    pub fn joined(&self, other: &PlateStack) -> Result<Self> {
        let mut positions = self.positions.clone();
        positions.extend_from_slice(&other.positions);
        let mut couplings = self.couplings.clone();
        couplings.extend_from_slice(&other.couplings);
        Self::new(positions, couplings)
    }

    /// Splits into the first `k` plates and the rest.
    pub fn split_at(&self, k: usize) -> (Self, Self) {
        let left = Self {
            positions: self.positions[..k].to_vec(),
            couplings: self.couplings[..k].to_vec(),
        };
        let right = Self {
            positions: self.positions[k..].to_vec(),
            couplings: self.couplings[k..].to_vec(),
        };
        (left, right)
    }
}

/// Imaginary-wavenumber reflection amplitude `λ/(λ + 2κ)` of one plate.
pub fn reflection_delta(lambda: f64, kappa: f64) -> Result<f64> {
    ensure_positive("lambda", lambda)?;
    ensure_positive("kappa", kappa)?;
    Ok(lambda / (lambda + 2.0 * kappa))
}

/// Transmission amplitude `2κ/(λ + 2κ)`.
pub fn transmission_delta(lambda: f64, kappa: f64) -> Result<f64> {
    ensure_positive("lambda", lambda)?;
    ensure_positive("kappa", kappa)?;
    Ok(2.0 * kappa / (lambda + 2.0 * kappa))
}

/// Normalized transfer data of a stack at one wavenumber.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transfer {
    /// `ln Δ`.
    pub log_det: f64,
    /// Reflection amplitude for waves arriving from the left.
    pub reflection: f64,
}

/// Evaluates the normalized transfer product of `stack` at `t = 2·g·κ`,
/// with every length measured in units of `g`.
fn transfer(stack: &PlateStack, g: f64, t: f64) -> Transfer {
    // Row vector e₁ᵀ·(plate N)(gap N−1)…(plate 1) = (v0, b)·exp(log_scale).
    // `a` shadows v0 − 1 so that ln Δ stays accurate when Δ is close to one.
    let mut v0 = 1.0f64;
    let mut a = 0.0f64;
    let mut b = 0.0f64;
    let mut log_scale = 0.0f64;
    let mut rescaled = false;
    let n = stack.len();
    for i in (0..n).rev() {
        let lg = stack.couplings[i] * g;
        let r = lg / (lg + t);
        let diag = (t - lg) / (lg + t);
        let rb = r * b;
        b = v0 * r + b * diag;
        v0 -= rb;
        a -= rb;
        if i > 0 {
            let gap = (stack.positions[i] - stack.positions[i - 1]) / g;
            b *= (-t * gap).exp();
        }
        let big = v0.abs().max(b.abs());
        if big > RESCALE_THRESHOLD || big < RESCALE_THRESHOLD.recip() {
            log_scale += big.ln();
            v0 /= big;
            b /= big;
            rescaled = true;
        }
    }
    let log_det = if !rescaled && a.abs() < 0.5 {
        a.ln_1p()
    } else {
        v0.ln() + log_scale
    };
    Transfer {
        log_det,
        reflection: b / v0,
    }
}

/// `ln Δ` and left reflection of `stack` at wavenumber `kappa`.
pub fn stack_transfer(stack: &PlateStack, kappa: f64) -> Result<Transfer> {
    ensure_positive("kappa", kappa)?;
    if stack.is_empty() {
        return Err(Error::Domain("empty stack".into()));
    }
    Ok(transfer(stack, 1.0, 2.0 * kappa))
}

fn casimir_prefactor(g: f64) -> f64 {
    // κ = t/(2g), dκ = dt/(2g):  1/(4π²)·∫κ² f dκ = 1/(32π² g³)·∫t² f dt
    1.0 / (32.0 * PI * PI * g * g * g)
}

fn lower_cutoff(g: f64, extent: f64, min_coupling: f64) -> f64 {
    // in t = 2gκ
    let kappa_lo = KAPPA_FLOOR * (1.0 / extent.max(g)).min(0.5 * min_coupling);
    2.0 * g * kappa_lo
}

/// Interaction energy and quadrature diagnostics for a whole stack.
pub fn stack_energy_detailed(stack: &PlateStack, quad: &QuadratureSpec) -> Result<Outcome> {
    if stack.len() < 2 {
        return Err(Error::Domain(format!(
            "interaction energy needs at least two plates, got {}",
            stack.len()
        )));
    }
    let g = stack.min_gap().expect("two or more plates");
    let min_coupling = stack.couplings.iter().copied().fold(f64::INFINITY, f64::min);
    let t_lo = lower_cutoff(g, stack.extent(), min_coupling);
    let mut out = quadrature::integrate(
        |t| t * t * transfer(stack, g, t).log_det,
        t_lo,
        quad,
    )
    .map_err(|e| annotate(e, stack))?;
    let pref = casimir_prefactor(g);
    out.value *= pref;
    out.error *= pref;
    Ok(out)
}

fn annotate(e: Error, stack: &PlateStack) -> Error {
    match e {
        Error::Numerical(msg) => Error::Numerical(format!(
            "stack of {} plates (extent {:.6e}, min gap {:.6e}): {msg}",
            stack.len(),
            stack.extent(),
            stack.min_gap().unwrap_or(0.0)
        )),
        other => other,
    }
}

/// Interaction energy per unit area of an N-plate stack.
pub fn stack_energy_per_area(stack: &PlateStack, quad: &QuadratureSpec) -> Result<f64> {
    Ok(stack_energy_detailed(stack, quad)?.value)
}

/// Interaction energy per unit area of two plates at separation `d`,
/// from `ln(1 − r₁r₂e^{−2κd})` directly.
pub fn pair_energy_per_area(lambda1: f64, lambda2: f64, d: f64, quad: &QuadratureSpec) -> Result<f64> {
    ensure_positive("lambda1", lambda1)?;
    ensure_positive("lambda2", lambda2)?;
    ensure_positive("d", d)?;
    let (l1, l2) = (lambda1 * d, lambda2 * d);
    let t_lo = lower_cutoff(d, d, lambda1.min(lambda2));
    let out = quadrature::integrate(
        |t| {
            let r1 = l1 / (l1 + t);
            let r2 = l2 / (l2 + t);
            t * t * (-r1 * (r2 * (-t).exp())).ln_1p()
        },
        t_lo,
        quad,
    )?;
    Ok(out.value * casimir_prefactor(d))
}

/// Energy of the same geometry with every plate Dirichlet (`λ → ∞`): the
/// gaps decouple and each contributes `−π²/(1440 a³)`.
pub fn dirichlet_energy_per_area(stack: &PlateStack) -> f64 {
    stack.gaps().map(|a| DIRICHLET_PAIR_COEFFICIENT / (a * a * a)).sum()
}

/// Interaction energy per unit area between two rigid bodies, `left` and
/// `right`, whose facing plates are `gap` apart. Internal energies of the
/// bodies are excluded. Positions of each body are only used relative to
/// its own plates.
pub fn interaction_energy_per_area(
    left: &PlateStack,
    right: &PlateStack,
    gap: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    ensure_positive("gap", gap)?;
    if left.is_empty() || right.is_empty() {
        return Err(Error::Domain("both bodies need at least one plate".into()));
    }
    // The left body is seen from its right side: mirror it.
    let left_seen = left.mirrored();
    let g = [Some(gap), left.min_gap(), right.min_gap()]
        .into_iter()
        .flatten()
        .fold(f64::INFINITY, f64::min);
    let extent = left.extent() + gap + right.extent();
    let min_coupling = left
        .couplings
        .iter()
        .chain(&right.couplings)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let t_lo = lower_cutoff(g, extent, min_coupling);
    let span = gap / g;
    let out = quadrature::integrate(
        |t| {
            let ra = transfer(&left_seen, g, t).reflection;
            let rb = transfer(right, g, t).reflection;
            t * t * (-ra * rb * (-t * span).exp()).ln_1p()
        },
        t_lo,
        quad,
    )?;
    Ok(out.value * casimir_prefactor(g))
}

/// Level-`n` Cantor stack on `[0, outer]`: each segment keeps its outer
/// `1/b` pieces, and every segment endpoint carries a plate of coupling `lambda`.
pub fn cantor_stack(level: u32, outer: f64, lambda: f64, b: f64) -> Result<PlateStack> {
    ensure_positive("outer", outer)?;
    if !(b > 2.0) || !b.is_finite() {
        return Err(Error::Domain(format!(
            "reduction factor must exceed 2 for disjoint children, got {b}"
        )));
    }
    if level > 24 {
        return Err(Error::Domain(format!("level {level} exceeds the supported maximum of 24")));
    }
    let positions = match integer_denominator(b, level) {
        Some(den) => {
            let base = b as u64;
            let mut starts = vec![0u64];
            for k in 0..level {
                let width = base.pow(level - k);
                let child = base.pow(level - k - 1);
                starts = starts
                    .iter()
                    .flat_map(|&s| [s, s + width - child])
                    .collect();
            }
            let seg = 1u64;
            starts
                .iter()
                .flat_map(|&s| [s, s + seg])
                .map(|k| k as f64 / den as f64 * outer)
                .collect()
        }
        None => {
            let mut segments = vec![(0.0f64, 1.0f64)];
            for _ in 0..level {
                segments = segments
                    .iter()
                    .flat_map(|&(lo, w)| {
                        let child = w / b;
                        [(lo, child), (lo + w - child, child)]
                    })
                    .collect();
            }
            segments
                .iter()
                .flat_map(|&(lo, w)| [lo * outer, (lo + w) * outer])
                .collect()
        }
    };
    PlateStack::uniform(positions, lambda)
}

/// `bⁿ` as an exact integer when `b` is integral and the result is
/// representable without rounding in an f64.
fn integer_denominator(b: f64, level: u32) -> Option<u64> {
    if b.fract() != 0.0 || b > u32::MAX as f64 {
        return None;
    }
    let den = (b as u64).checked_pow(level)?;
    (den < 1u64 << 53).then_some(den)
}

/// Which length of a stack plays the role of the separation `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapConvention {
    /// The smallest gap of the stack; the whole stack scales with `d`.
    Smallest,
    /// The outer extent of the stack; the whole stack scales with `d`.
    Outer,
    /// A single probe plate at distance `d` from a fixed Cantor body whose
    /// finest feature is the unit length.
    Probe,
}

impl std::str::FromStr for GapConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smallest" => Ok(Self::Smallest),
            "outer" => Ok(Self::Outer),
            "probe" => Ok(Self::Probe),
            other => Err(Error::Usage(format!(
                "unknown gap convention `{other}` (expected smallest, outer or probe)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOptions {
    pub level: u32,
    /// Dimensionless coupling. For [`GapConvention::Smallest`] and
    /// [`GapConvention::Outer`] it is `λ·d`; for [`GapConvention::Probe`] it
    /// is `λ·ℓ_n` with `ℓ_n` the finest feature of the body.
    pub lambda_hat: f64,
    pub reduction: f64,
    pub convention: GapConvention,
}

impl ExtractionOptions {
    pub fn new(level: u32, lambda_hat: f64) -> Self {
        Self {
            level,
            lambda_hat,
            reduction: 3.0,
            convention: GapConvention::Smallest,
        }
    }
}

/// Running coefficient `C_n(d) = e_n(d)·d³` sampled on a grid, its
/// log-derivative, and the integrated trace it implies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub d_grid: Vec<f64>,
    pub c_values: Vec<f64>,
    pub logderivs: Vec<f64>,
    pub traces: Vec<f64>,
}

impl ExtractionResult {
    pub fn from_samples(d_grid: Vec<f64>, c_values: Vec<f64>) -> Result<Self> {
        if d_grid.len() != c_values.len() {
            return Err(Error::Usage("grid and coefficient lengths differ".into()));
        }
        let x: Vec<f64> = d_grid.iter().map(|d| d.ln()).collect();
        let logderivs = grid_derivative(&x, &c_values)?;
        let traces = d_grid
            .iter()
            .zip(&logderivs)
            .map(|(d, s)| -s / (d * d * d * d))
            .collect();
        Ok(Self {
            d_grid,
            c_values,
            logderivs,
            traces,
        })
    }
}

/// Computes `C_n(d)` on a level-`n`, `λ̂`-coupled triadic Cantor stack using
/// the smallest-gap convention.
pub fn extract_coefficient(
    level: u32,
    lambda_hat: f64,
    d_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<ExtractionResult> {
    extract_with(&ExtractionOptions::new(level, lambda_hat), d_grid, quad)
}

pub fn extract_with(opts: &ExtractionOptions, d_grid: &[f64], quad: &QuadratureSpec) -> Result<ExtractionResult> {
    if d_grid.len() < 3 {
        return Err(Error::Usage(format!(
            "differencing needs at least 3 grid points, got {}",
            d_grid.len()
        )));
    }
    for &d in d_grid {
        ensure_positive("grid separation", d)?;
    }
    if d_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Usage("separation grid must be strictly increasing".into()));
    }
    ensure_positive("lambda_hat", opts.lambda_hat)?;
    quad.validate()?;
    let c_values = d_grid
        .par_iter()
        .map(|&d| Ok(coefficient_sample(opts, d, quad)? * d * d * d))
        .collect::<Result<Vec<f64>>>()?;
    ExtractionResult::from_samples(d_grid.to_vec(), c_values)
}

/// Energy per area `e_n(d)` under the chosen convention.
pub fn coefficient_sample(opts: &ExtractionOptions, d: f64, quad: &QuadratureSpec) -> Result<f64> {
    ensure_positive("d", d)?;
    match opts.convention {
        GapConvention::Smallest | GapConvention::Outer => {
            let unit = cantor_stack(opts.level, 1.0, 1.0, opts.reduction)?;
            let governing = match opts.convention {
                GapConvention::Smallest => unit.min_gap().expect("cantor stacks have two or more plates"),
                _ => unit.extent(),
            };
            let scale = d / governing;
            let stack = PlateStack::new(
                unit.positions().iter().map(|z| z * scale).collect(),
                vec![opts.lambda_hat / d; unit.len()],
            )?;
            stack_energy_per_area(&stack, quad)
        }
        GapConvention::Probe => {
            let outer = opts.reduction.powi(opts.level as i32);
            let body = cantor_stack(opts.level, outer, opts.lambda_hat, opts.reduction)?;
            let probe = PlateStack::uniform(vec![0.0], opts.lambda_hat)?;
            interaction_energy_per_area(&probe, &body, d, quad)
        }
    }
}

/// First derivative of samples `y(x)` on a strictly increasing, possibly
/// non-uniform grid: three-point central differences inside, second-order
/// one-sided differences at the ends.
pub fn grid_derivative(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::Usage(format!(
            "differencing needs at least 3 matching samples, got {n} abscissae and {} values",
            y.len()
        )));
    }
    let mut out = Vec::with_capacity(n);
    let one_sided = |x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64| {
        let (h1, h2) = (x1 - x0, x2 - x1);
        -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y0 + (h1 + h2) / (h1 * h2) * y1 - h1 / (h2 * (h1 + h2)) * y2
    };
    out.push(one_sided(x[0], x[1], x[2], y[0], y[1], y[2]));
    for i in 1..n - 1 {
        let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        out.push(
            -h2 / (h1 * (h1 + h2)) * y[i - 1] + (h2 - h1) / (h1 * h2) * y[i] + h1 / (h2 * (h1 + h2)) * y[i + 1],
        );
    }
    // mirror image of the left stencil
    out.push(-one_sided(
        -x[n - 1],
        -x[n - 2],
        -x[n - 3],
        y[n - 1],
        y[n - 2],
        y[n - 3],
    ));
    Ok(out)
}

/// `points` separations spaced uniformly in `ln d` from `d_min` to `d_max`.
pub fn log_grid(d_min: f64, d_max: f64, points: usize) -> Result<Vec<f64>> {
    ensure_positive("d_min", d_min)?;
    if !(d_max > d_min) || points < 2 {
        return Err(Error::Usage(format!(
            "need d_min < d_max and at least 2 points, got [{d_min}, {d_max}] with {points}"
        )));
    }
    let (a, b) = (d_min.ln(), d_max.ln());
    let step = (b - a) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                d_max
            } else {
                (a + step * i as f64).exp()
            }
        })
        .collect())
}

/// Grid starting at `d_min` with spacing `ln(b)/samples_per_period` in `ln d`
/// covering `periods` log-periods.
pub fn log_periodic_grid(d_min: f64, reduction: f64, periods: usize, samples_per_period: usize) -> Result<Vec<f64>> {
    if !(reduction > 1.0) || samples_per_period == 0 || periods == 0 {
        return Err(Error::Usage("need reduction > 1 and nonzero sample counts".into()));
    }
    ensure_positive("d_min", d_min)?;
    let step = reduction.ln() / samples_per_period as f64;
    Ok((0..=periods * samples_per_period)
        .map(|i| d_min * (step * i as f64).exp())
        .collect())
}
