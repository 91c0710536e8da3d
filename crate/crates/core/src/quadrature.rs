//! Quadrature over the imaginary wavenumber.
//!
//! Integrands are supplied in the dimensionless variable `t = 2·g·κ`, with
//! `g` a reference length of the geometry, so that integrals over geometries
//! differing only by an overall scale use identical nodes. Both schemes work
//! in `s = ln t`: the Casimir integrand is analytic in a strip around the real
//! `s` axis and decays exponentially at both ends, so the trapezoid rule there
//! converges geometrically in the node count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Fixed `nodes`-point rule in `ln t`, checked against `2·nodes`; falls
    /// back to [`Scheme::Adaptive`] when the check fails.
    FixedNode,
    /// Globally adaptive 7/15-point Gauss–Kronrod subdivision in `ln t`.
    Adaptive,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" | "fixed-node" => Ok(Scheme::FixedNode),
            "adaptive" | "adaptive-subdivision" => Ok(Scheme::Adaptive),
            other => Err(Error::Usage(format!(
                "unknown quadrature scheme `{other}` (expected fixed-node or adaptive)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub nodes: usize,
    pub rel_tol: f64,
    /// Upper truncation of κ in units of `1/g`.
    pub kappa_max: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::FixedNode,
            nodes: 128,
            rel_tol: 1e-9,
            kappa_max: 60.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 16 {
            return Err(Error::Usage(format!("quadrature needs at least 16 nodes, got {}", self.nodes)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Usage(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if !(self.kappa_max > 0.0) || !self.kappa_max.is_finite() {
            return Err(Error::Usage(format!("kappa_max must be positive, got {}", self.kappa_max)));
        }
        Ok(())
    }
}

/// Result of one integration with its convergence diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Outcome {
    pub value: f64,
    pub scheme: Scheme,
    /// Integrand evaluations spent.
    pub evaluations: usize,
    /// Estimated absolute error.
    pub error: f64,
}

const MAX_PANELS: usize = 4000;

/// Integrates `f(t)` over `t ∈ [t_lo, 2·kappa_max]`.
pub fn integrate<F>(f: F, t_lo: f64, spec: &QuadratureSpec) -> Result<Outcome>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let t_hi = 2.0 * spec.kappa_max;
    if !(t_lo > 0.0 && t_lo < t_hi) {
        return Err(Error::Numerical(format!("empty integration range [{t_lo}, {t_hi}]")));
    }
    let (s_lo, s_hi) = (t_lo.ln(), t_hi.ln());
    let g = |s: f64| {
        let t = s.exp();
        t * f(t)
    };
    match spec.scheme {
        Scheme::FixedNode => {
            let coarse = trapezoid(&g, s_lo, s_hi, spec.nodes);
            let fine = trapezoid(&g, s_lo, s_hi, 2 * spec.nodes);
            let shift = (fine - coarse).abs();
            if shift.is_finite() && shift <= 10.0 * spec.rel_tol * fine.abs() + f64::MIN_POSITIVE {
                return Ok(Outcome {
                    value: fine,
                    scheme: Scheme::FixedNode,
                    evaluations: 3 * spec.nodes,
                    error: shift,
                });
            }
            let mut outcome = adaptive(&g, s_lo, s_hi, spec).map_err(|e| match e {
                Error::Numerical(msg) => Error::Numerical(format!(
                    "fixed-node rule shifted by {shift:.3e} on doubling {} -> {} nodes \
                     ({coarse:.17e} -> {fine:.17e}); adaptive fallback failed: {msg}",
                    spec.nodes,
                    2 * spec.nodes
                )),
                other => other,
            })?;
            outcome.evaluations += 3 * spec.nodes;
            Ok(outcome)
        }
        Scheme::Adaptive => adaptive(&g, s_lo, s_hi, spec),
    }
}

fn trapezoid<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, nodes: usize) -> f64 {
    let h = (b - a) / (nodes - 1) as f64;
    let mut sum = 0.5 * (g(a) + g(b));
    for i in 1..nodes - 1 {
        sum += g(a + h * i as f64);
    }
    sum * h
}

// 7-point Gauss / 15-point Kronrod abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let pair = g(center - half * x) + g(center + half * x);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

fn adaptive<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Outcome> {
    let initial = (spec.nodes / 16).max(1);
    let width = (b - a) / initial as f64;
    let mut panels: Vec<Panel> = (0..initial)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == initial { b } else { lo + width };
            kronrod(g, lo, hi)
        })
        .collect();
    loop {
        // Panels stay ordered by position, so the totals are summed in a fixed order.
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Numerical("non-finite integrand encountered".into()));
        }
        if error <= spec.rel_tol * value.abs() + f64::MIN_POSITIVE {
            return Ok(Outcome {
                value,
                scheme: Scheme::Adaptive,
                evaluations: 15 * (2 * panels.len() - initial),
                error,
            });
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Numerical(format!(
                "adaptive quadrature exhausted {MAX_PANELS} panels: value {value:.17e}, \
                 error estimate {error:.3e}, target {:.3e}",
                spec.rel_tol * value.abs()
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        panels[worst] = kronrod(g, p.a, mid);
        panels.insert(worst + 1, kronrod(g, mid, p.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(scheme: Scheme) -> QuadratureSpec {
        QuadratureSpec {
            scheme,
            ..QuadratureSpec::default()
        }
    }

    #[test]
    fn integrates_gamma_like_kernels() {
        // ∫ t² e^{-t} dt = 2 over (0, ∞); the truncation tails are far below tolerance.
        for scheme in [Scheme::FixedNode, Scheme::Adaptive] {
            let out = integrate(|t| t * t * (-t).exp(), 1e-6, &spec(scheme)).unwrap();
            assert!((out.value - 2.0).abs() < 1e-10, "{scheme:?}: {}", out.value);
        }
    }

    #[test]
    fn log_endpoint_behaviour() {
        // ∫ t² ln(1 - e^{-t}) dt = -2ζ(4) = -π⁴/45
        let exact = -std::f64::consts::PI.powi(4) / 45.0;
        for scheme in [Scheme::FixedNode, Scheme::Adaptive] {
            let out = integrate(|t| t * t * (-(-t).exp()).ln_1p(), 1e-6, &spec(scheme)).unwrap();
            assert!(((out.value - exact) / exact).abs() < 1e-10, "{scheme:?}: {}", out.value);
        }
    }

    #[test]
    fn fixed_rule_falls_back_when_underresolved() {
        // A narrow bump in ln t defeats 16 trapezoid nodes.
        let bump = |t: f64| (-(t.ln() - 1.0).powi(2) * 400.0).exp() / t;
        let s = QuadratureSpec {
            nodes: 16,
            ..QuadratureSpec::default()
        };
        let out = integrate(bump, 1e-3, &s).unwrap();
        assert_eq!(out.scheme, Scheme::Adaptive);
        let exact = (std::f64::consts::PI / 400.0).sqrt();
        assert!(((out.value - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = QuadratureSpec::default();
        s.nodes = 8;
        assert!(matches!(integrate(|t| t, 1e-3, &s), Err(Error::Usage(_))));
        let s = QuadratureSpec {
            rel_tol: 0.0,
            ..QuadratureSpec::default()
        };
        assert!(s.validate().is_err());
        assert!(matches!(
            integrate(|t| t, 500.0, &QuadratureSpec::default()),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn reports_non_convergence() {
        let s = QuadratureSpec {
            scheme: Scheme::Adaptive,
            rel_tol: 1e-15,
            ..QuadratureSpec::default()
        };
        let err = integrate(|t| (1e6 * t).sin(), 1e-3, &s).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("fixed-node".parse::<Scheme>().unwrap(), Scheme::FixedNode);
        assert_eq!("adaptive".parse::<Scheme>().unwrap(), Scheme::Adaptive);
        assert!("simpson".parse::<Scheme>().is_err());
    }
}
